//! Counting the linear pieces a layer of ReLU units cuts its input into.
//!
//! Each first-layer unit splits `ℝᵏ` along a hyperplane, so the number of
//! pieces is bounded by the maximal region count of an arrangement of `d`
//! hyperplanes, `C(d, k) = Σ_{i=0}^{k} binom(d, i)`. The brute-force counter
//! here is an oracle for small arrangements only.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// `C(d, k) = Σ_{i=0}^{k} binom(d, i)`, saturating at `u128::MAX`.
pub fn count_pieces_bound(d: u64, k: u64) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1; // binom(d, 0)
    for i in 0..=k.min(d) {
        total = total.saturating_add(binom);
        if binom == u128::MAX {
            return u128::MAX;
        }
        // binom(d, i+1) = binom(d, i) · (d − i) / (i + 1), exact in integers.
        binom = match binom.checked_mul((d - i) as u128) {
            Some(p) => p / (i as u128 + 1),
            None => u128::MAX,
        };
    }
    total
}

/// An affine hyperplane `{x : ⟨normal, x⟩ = offset}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn through_origin(normal: Vec<f64>) -> Self {
        Self { normal, offset: 0.0 }
    }

    fn side(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

pub const ORACLE_MAX_DIM: usize = 3;
pub const ORACLE_MAX_PLANES: usize = 12;
const MONTE_CARLO_SAMPLES: usize = 1_000_000;

/// Number of nonempty open cells of a hyperplane arrangement, found by
/// enumerating the sign patterns of sample points.
///
/// Samples come from two sources: `10⁶` Monte-Carlo points (on the unit
/// sphere for central arrangements, in a box containing every intersection
/// flat otherwise), and a deterministic pass that perturbs a point of every
/// intersection flat into each of the local sign orthants. For arrangements
/// in general position the deterministic pass alone reaches every cell,
/// since every cell's closure then contains an intersection point.
pub fn brute_force_region_count(planes: &[Hyperplane]) -> Result<usize> {
    let Some(first) = planes.first() else {
        return Ok(1);
    };
    let k = first.normal.len();
    if k == 0 || k > ORACLE_MAX_DIM || planes.len() > ORACLE_MAX_PLANES {
        return Err(Error::OracleScale(format!(
            "region oracle handles dimension 1..={ORACLE_MAX_DIM} with at most \
             {ORACLE_MAX_PLANES} hyperplanes (got dimension {k}, {} hyperplanes)",
            planes.len()
        )));
    }
    for p in planes {
        if p.normal.len() != k {
            return Err(Error::dim("hyperplane normal", k, p.normal.len()));
        }
        if norm(&p.normal) == 0.0 || !p.offset.is_finite() {
            return Err(Error::Domain("hyperplane normals must be nonzero and finite".into()));
        }
    }

    let central = planes.iter().all(|p| p.offset == 0.0);
    let flats = intersection_flats(planes, k);
    let radius = 1.0 + 2.0 * flats.iter().map(|f| norm(&f.point)).fold(0.0_f64, f64::max);

    let mut patterns = HashSet::new();
    let mut record = |x: &[f64]| {
        if let Some(p) = sign_pattern(planes, x) {
            patterns.insert(p);
        }
    };

    // Deterministic pass.
    let eps = 1e-7 * radius;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0A7C);
    for flat in &flats {
        let mut bases = vec![flat.point.clone()];
        for dir in &flat.directions {
            for s in [-1.0, 1.0] {
                bases.push(flat.point.iter().zip(dir).map(|(p, d)| p + s * radius * d).collect());
            }
        }
        for base in &bases {
            for signs in 0..(1u32 << flat.duals.len()) {
                let mut x = base.clone();
                for (bit, dual) in flat.duals.iter().enumerate() {
                    let s = if signs >> bit & 1 == 1 { 1.0 } else { -1.0 };
                    x.iter_mut().zip(dual).for_each(|(xi, u)| *xi += s * eps * u);
                }
                record(&x);
            }
            // Extra random probes catch cells at non-generic intersections.
            for _ in 0..64 {
                let dir = random_unit(&mut rng, k);
                let x: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + eps * d).collect();
                record(&x);
            }
        }
    }

    // Monte-Carlo pass.
    for _ in 0..MONTE_CARLO_SAMPLES {
        let x = if central {
            random_unit(&mut rng, k)
        } else {
            (0..k).map(|_| rng.random_range(-radius..radius)).collect()
        };
        record(&x);
    }
    Ok(patterns.len())
}

fn sign_pattern(planes: &[Hyperplane], x: &[f64]) -> Option<u32> {
    let scale = 1.0 + norm(x);
    let mut bits = 0u32;
    for (i, p) in planes.iter().enumerate() {
        let s = p.side(x);
        if s.abs() <= 1e-12 * scale * norm(&p.normal) {
            return None;
        }
        if s > 0.0 {
            bits |= 1 << i;
        }
    }
    Some(bits)
}

fn random_unit(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// An intersection flat of a subset of the hyperplanes.
struct Flat {
    /// Least-norm point of the flat.
    point: Vec<f64>,
    /// Orthonormal basis of the flat's direction space.
    directions: Vec<Vec<f64>>,
    /// Dual vectors `u_i` with `⟨a_j, u_i⟩ = δ_ij` over the subset's normals.
    duals: Vec<Vec<f64>>,
}

fn intersection_flats(planes: &[Hyperplane], k: usize) -> Vec<Flat> {
    let n = planes.len();
    let mut flats = Vec::new();
    for size in 1..=k.min(n) {
        for subset in combinations(n, size) {
            let rows: Vec<&Hyperplane> = subset.iter().map(|&i| &planes[i]).collect();
            if let Some(f) = flat_of(&rows, k) {
                flats.push(f);
            }
        }
    }
    flats
}

fn flat_of(rows: &[&Hyperplane], k: usize) -> Option<Flat> {
    let s = rows.len();
    // Gram matrix A Aᵀ and its inverse (s ≤ 3).
    let mut gram = vec![vec![0.0; s]; s];
    for i in 0..s {
        for j in 0..s {
            gram[i][j] = dot(&rows[i].normal, &rows[j].normal);
        }
    }
    let inv = invert_small(&gram)?;
    let duals: Vec<Vec<f64>> = (0..s)
        .map(|i| {
            let mut u = vec![0.0; k];
            for (j, row) in rows.iter().enumerate() {
                u.iter_mut().zip(&row.normal).for_each(|(ui, a)| *ui += inv[j][i] * a);
            }
            u
        })
        .collect();
    let mut point = vec![0.0; k];
    for (row, u) in rows.iter().zip(&duals) {
        point.iter_mut().zip(u).for_each(|(p, ui)| *p += row.offset * ui);
    }
    // Direction space: Gram-Schmidt the standard basis against the normals.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        push_orthonormal(&mut basis, row.normal.clone());
    }
    let mut directions = Vec::new();
    for e in 0..k {
        let mut v = vec![0.0; k];
        v[e] = 1.0;
        if push_orthonormal(&mut basis, v) {
            directions.push(basis.last().unwrap().clone());
        }
    }
    Some(Flat {
        point,
        directions,
        duals,
    })
}

fn push_orthonormal(basis: &mut Vec<Vec<f64>>, mut v: Vec<f64>) -> bool {
    for b in basis.iter() {
        let c = dot(&v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
    let n = norm(&v);
    if n < 1e-9 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    basis.push(v);
    true
}

fn invert_small(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale = m.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-10 * scale {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, size, &mut Vec::new(), &mut out);
    out
}
