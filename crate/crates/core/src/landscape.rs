//! Geometry of the risk landscape: the Weight Distribution Condition
//! matrices, the angle recursions locating the spurious basin at `−ρ_n x₀`,
//! the proxy `h_{x,x₀}` for half the expected gradient, the radii of the
//! balls that contain every stationary point, and grid evaluation of the
//! risk over a 2-D latent space.

use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::erm::Risk;
use crate::error::{ensure_len, Error, Result};
use crate::generator::ReluNetwork;
use crate::linalg::{angle, axpy, distance, dot, norm, scale, spectral_norm, Matrix};
use crate::sensing::Observations;

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITERS: usize = 5000;
const UNIT_TOL: f64 = 1e-10;

fn outer_add(m: &mut Matrix, c: f64, u: &[f64], v: &[f64]) {
    for (i, ui) in u.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            m[(i, j)] += c * ui * vj;
        }
    }
}

fn check_unit(name: &str, v: &[f64]) -> Result<()> {
    let n = norm(v);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::Domain(format!("{name} must be a unit vector (norm {n})")));
    }
    Ok(())
}

fn check_nonzero(name: &str, v: &[f64]) -> Result<f64> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Domain(format!("{name} must be a nonzero finite vector")));
    }
    Ok(n)
}

/// The symmetric map sending `x̂ ↦ ẑ`, `ẑ ↦ x̂` and annihilating the
/// orthogonal complement of `span{x̂, ẑ}`.
///
/// With `u₁ = x̂` and `u₂` the unit component of `ẑ` orthogonal to `x̂`, it is
/// `U diag-block [[cos, sin], [sin, −cos]] Uᵀ`. Collinear inputs give
/// `x̂x̂ᵀ` (angle 0) or `−x̂x̂ᵀ` (angle π).
pub fn m_matrix(x_hat: &[f64], z_hat: &[f64]) -> Result<Matrix> {
    ensure_len("second unit vector", x_hat.len(), z_hat)?;
    check_unit("x_hat", x_hat)?;
    check_unit("z_hat", z_hat)?;
    let p = x_hat.len();
    let c = dot(x_hat, z_hat).clamp(-1.0, 1.0);
    let mut r = z_hat.to_vec();
    axpy(-c, x_hat, &mut r);
    let s = norm(&r);
    let mut m = Matrix::zeros(p, p);
    if s <= 1e-12 {
        outer_add(&mut m, c.signum(), x_hat, x_hat);
        return Ok(m);
    }
    let u2 = scale(1.0 / s, &r);
    outer_add(&mut m, c, x_hat, x_hat);
    outer_add(&mut m, s, x_hat, &u2);
    outer_add(&mut m, s, &u2, x_hat);
    outer_add(&mut m, -c, &u2, &u2);
    Ok(m)
}

/// `Q_{x,z} = (π − ∠)/(2π)·I + sin∠/(2π)·M_{x̂↔ẑ}`, the expectation of
/// `W₊,ₓᵀ W₊,z` for rows `wᵢ ~ N(0, I/rows)`.
pub fn q_matrix(x: &[f64], z: &[f64]) -> Result<Matrix> {
    ensure_len("second vector", x.len(), z)?;
    let nx = check_nonzero("x", x)?;
    let nz = check_nonzero("z", z)?;
    let theta = angle(x, z);
    let m = m_matrix(&scale(1.0 / nx, x), &scale(1.0 / nz, z))?;
    let mut q = m.scaled((PI - theta).sin() / (2.0 * PI));
    let diag = (PI - theta) / (2.0 * PI);
    for i in 0..x.len() {
        q[(i, i)] += diag;
    }
    Ok(q)
}

/// `W₊,ₓᵀ W₊,z = Σ wᵢwᵢᵀ` over rows active (`⟨wᵢ, ·⟩ > 0`) at both `x` and `z`.
pub fn masked_gram(w: &Matrix, x: &[f64], z: &[f64]) -> Result<Matrix> {
    ensure_len("x", w.cols(), x)?;
    ensure_len("z", w.cols(), z)?;
    let p = w.cols();
    let mut g = Matrix::zeros(p, p);
    for i in 0..w.rows() {
        let row = w.row(i);
        if dot(row, x) > 0.0 && dot(row, z) > 0.0 {
            outer_add(&mut g, 1.0, row, row);
        }
    }
    Ok(g)
}

/// `‖W₊,ₓᵀ W₊,z − Q_{x,z}‖₂`.
pub fn wdc_deviation(w: &Matrix, x: &[f64], z: &[f64]) -> Result<f64> {
    let q = q_matrix(x, z)?;
    let g = masked_gram(w, x, z)?;
    spectral_norm(&g.sub(&q), POWER_TOL, POWER_MAX_ITERS)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WdcPair {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub angle: f64,
    pub deviation: f64,
}

/// Sampled lower bound on the WDC constant of one layer. The true constant
/// is a supremum over all nonzero pairs, so `epsilon_hat` can only
/// under-estimate it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WdcReport {
    pub layer_index: usize,
    pub epsilon_hat: f64,
    pub pair_count: usize,
    pub worst_pair: WdcPair,
    pub deviation_quantiles: Vec<(f64, f64)>,
}

pub const WDC_QUANTILES: [f64; 5] = [0.5, 0.9, 0.95, 0.99, 1.0];
const NEAR_PARALLEL_PAIRS: usize = 10;

fn random_unit(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return scale(1.0 / n, &v);
        }
    }
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Deviation over `n_pairs` uniformly random direction pairs, plus the
/// forced pairs `(x, x)`, `(x, −x)` and ten near-parallel perturbations
/// `z = x + 10^{−j}·g` for `j = 1..=10`.
pub fn estimate_wdc(w: &Matrix, n_pairs: usize, seed: u64) -> Result<WdcReport> {
    estimate_wdc_layer(w, n_pairs, seed, 0)
}

pub fn estimate_wdc_layer(w: &Matrix, n_pairs: usize, seed: u64, layer_index: usize) -> Result<WdcReport> {
    if n_pairs == 0 {
        return Err(Error::Config("estimate_wdc needs at least one pair".into()));
    }
    let p = w.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n_pairs + 2 + NEAR_PARALLEL_PAIRS);
    let anchor = random_unit(&mut rng, p);
    pairs.push((anchor.clone(), anchor.clone()));
    pairs.push((anchor.clone(), scale(-1.0, &anchor)));
    for j in 1..=NEAR_PARALLEL_PAIRS {
        let g = random_unit(&mut rng, p);
        let mut z = anchor.clone();
        axpy(10f64.powi(-(j as i32)), &g, &mut z);
        pairs.push((anchor.clone(), z));
    }
    for _ in 0..n_pairs {
        let x = random_unit(&mut rng, p);
        let z = random_unit(&mut rng, p);
        pairs.push((x, z));
    }
    let devs: Vec<f64> = pairs
        .par_iter()
        .map(|(x, z)| wdc_deviation(w, x, z))
        .collect::<Result<_>>()?;
    let (worst, &epsilon_hat) = devs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one pair");
    let mut sorted = devs.clone();
    sorted.sort_by(f64::total_cmp);
    let (x, z) = pairs[worst].clone();
    Ok(WdcReport {
        layer_index,
        epsilon_hat,
        pair_count: pairs.len(),
        worst_pair: WdcPair {
            angle: angle(&x, &z),
            x,
            z,
            deviation: epsilon_hat,
        },
        deviation_quantiles: WDC_QUANTILES.iter().map(|&q| (q, quantile(&sorted, q))).collect(),
    })
}

/// One report per layer, with per-layer seeds `seed + layer`.
pub fn estimate_wdc_network(net: &ReluNetwork, n_pairs: usize, seed: u64) -> Result<Vec<WdcReport>> {
    net.weights()
        .iter()
        .enumerate()
        .map(|(i, w)| estimate_wdc_layer(w, n_pairs, seed.wrapping_add(i as u64), i))
        .collect()
}

fn check_angle(rho: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=PI + SLACK).contains(&rho) {
        return Err(Error::Domain(format!("angle {rho} lies outside [0, π]")));
    }
    Ok(rho.clamp(0.0, PI))
}

/// `g(ϱ) = arccos(((π − ϱ)cos ϱ + sin ϱ)/π)`, the angle between the images
/// of two vectors at angle `ϱ` after one random ReLU layer.
pub fn g_angle(rho: f64) -> Result<f64> {
    let rho = check_angle(rho)?;
    Ok(g_unchecked(rho))
}

fn g_unchecked(rho: f64) -> f64 {
    (((PI - rho) * rho.cos() + (PI - rho).sin()) / PI)
        .clamp(-1.0, 1.0)
        .acos()
}

fn angle_sequence(start: f64, n: usize) -> Vec<f64> {
    let mut seq = Vec::with_capacity(n);
    let mut r = start;
    for _ in 0..n {
        seq.push(r);
        r = g_unchecked(r);
    }
    seq
}

fn check_layers(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("number of layers must be at least 1".into()));
    }
    Ok(())
}

/// `[ρ̌₀, …, ρ̌_{n−1}]` with `ρ̌₀ = π`, `ρ̌ᵢ = g(ρ̌ᵢ₋₁)`.
pub fn rho_check_sequence(n: usize) -> Result<Vec<f64>> {
    check_layers(n)?;
    Ok(angle_sequence(PI, n))
}

/// `Σ_{i<n} (sin aᵢ/π) Π_{i<j<n} (π − aⱼ)/π` for an angle sequence `a`.
/// `sin a` is evaluated as `sin(π − a)`, which is exactly zero at `a = π`.
fn sine_product_sum(angles: &[f64]) -> f64 {
    let mut tail = 1.0;
    let mut sum = 0.0;
    for &a in angles.iter().rev() {
        sum += (PI - a).sin() / PI * tail;
        tail *= (PI - a) / PI;
    }
    sum
}

/// `ρ_n = Σ_{i=0}^{n−1} (sin ρ̌ᵢ/π) Π_{j=i+1}^{n−1} (π − ρ̌ⱼ)/π`.
pub fn rho_n(n: usize) -> Result<f64> {
    Ok(sine_product_sum(&rho_check_sequence(n)?))
}

/// `h_{x,x₀} = 2⁻ⁿx − 2⁻ⁿ[(Π(π−ρ̄ᵢ)/π)·x₀ + Σᵢ(sin ρ̄ᵢ/π)(Π_{j>i}(π−ρ̄ⱼ)/π)(‖x₀‖/‖x‖)·x]`
/// with `ρ̄₀ = ∠(x, x₀)` and `ρ̄ᵢ = g(ρ̄ᵢ₋₁)`, all indices below `n`.
pub fn h_vector(x: &[f64], x0: &[f64], n: usize) -> Result<Vec<f64>> {
    ensure_len("x0", x.len(), x0)?;
    check_layers(n)?;
    let nx = check_nonzero("x", x)?;
    let nx0 = check_nonzero("x0", x0)?;
    let bars = angle_sequence(angle(x, x0), n);
    let prod: f64 = bars.iter().map(|a| (PI - a) / PI).product();
    let sum = sine_product_sum(&bars);
    let c = 0.5f64.powi(n as i32);
    let coef_x = c * (1.0 - sum * nx0 / nx);
    Ok(x.iter().zip(x0).map(|(xi, x0i)| coef_x * xi - c * prod * x0i).collect())
}

/// Multipliers in `δ₁ = c₄n³ε^{1/4}‖x₀‖` and `δ₂ = c₅n^{14}ε^{1/4}‖x₀‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusConstants {
    pub c4: f64,
    pub c5: f64,
}

impl Default for RadiusConstants {
    fn default() -> Self {
        Self { c4: 616.0, c5: 5500.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Radii {
    pub delta_check: f64,
    pub delta_1: f64,
    pub delta_2: f64,
}

pub fn radii(n: usize, eps_wdc: f64, x0_norm: f64) -> Result<Radii> {
    radii_with(n, eps_wdc, x0_norm, RadiusConstants::default())
}

pub fn radii_with(n: usize, eps_wdc: f64, x0_norm: f64, c: RadiusConstants) -> Result<Radii> {
    if !(eps_wdc > 0.0 && eps_wdc.is_finite()) {
        return Err(Error::Domain(format!("WDC constant must be positive, got {eps_wdc}")));
    }
    if !(x0_norm >= 0.0) {
        return Err(Error::Domain(format!("‖x0‖ must be nonnegative, got {x0_norm}")));
    }
    let nf = n as f64;
    let e4 = eps_wdc.powf(0.25);
    Ok(Radii {
        delta_check: 2f64.powf(nf / 2.0) * eps_wdc.sqrt(),
        delta_1: c.c4 * nf.powi(3) * e4 * x0_norm,
        delta_2: c.c5 * nf.powi(14) * e4 * x0_norm,
    })
}

/// The explicit smallness requirements on `ε` that appear in the landscape
/// proofs. Conditions with unnamed absolute constants are not evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonConditions {
    /// `8πn⁶√ε`, required to be at most 1.
    pub sqrt_condition: f64,
    pub sqrt_condition_holds: bool,
    /// `88πn⁶ε^{1/4}`, required to be below 1.
    pub quarter_condition: f64,
    pub quarter_condition_holds: bool,
}

pub fn epsilon_conditions(n: usize, eps_wdc: f64) -> Result<EpsilonConditions> {
    if !(eps_wdc > 0.0) {
        return Err(Error::Domain(format!("WDC constant must be positive, got {eps_wdc}")));
    }
    let n6 = (n as f64).powi(6);
    let a = 8.0 * PI * n6 * eps_wdc.sqrt();
    let b = 88.0 * PI * n6 * eps_wdc.powf(0.25);
    Ok(EpsilonConditions {
        sqrt_condition: a,
        sqrt_condition_holds: a <= 1.0,
        quarter_condition: b,
        quarter_condition_holds: b < 1.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    NearX0,
    NearNegRhoX0,
    NearZero,
    Outside,
}

impl Zone {
    pub fn name(self) -> &'static str {
        match self {
            Zone::NearX0 => "near_x0",
            Zone::NearNegRhoX0 => "near_neg_rho_x0",
            Zone::NearZero => "near_zero",
            Zone::Outside => "outside",
        }
    }
}

/// First match of: `‖x − x₀‖ ≤ δ₁`, `‖x + ρx₀‖ ≤ δ₂`, `‖x‖ ≤ δ̌`.
pub fn classify(x: &[f64], x0: &[f64], radii: &Radii, rho: f64) -> Zone {
    if distance(x, x0) <= radii.delta_1 {
        return Zone::NearX0;
    }
    let neg: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a + rho * b).collect();
    if norm(&neg) <= radii.delta_2 {
        Zone::NearNegRhoX0
    } else if norm(x) <= radii.delta_check {
        Zone::NearZero
    } else {
        Zone::Outside
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Points per axis, endpoints included.
    pub resolution: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, resolution: usize) -> Self {
        Self {
            x_range: (-half_width, half_width),
            y_range: (-half_width, half_width),
            resolution,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::Config(format!(
                "grid resolution must be at least 2, got {}",
                self.resolution
            )));
        }
        for (lo, hi) in [self.x_range, self.y_range] {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::Config(format!("invalid grid range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    fn coord(range: (f64, f64), i: usize, n: usize) -> f64 {
        range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
    }

    pub fn point(&self, row: usize, col: usize) -> [f64; 2] {
        [
            Self::coord(self.x_range, col, self.resolution),
            Self::coord(self.y_range, row, self.resolution),
        ]
    }
}

/// Radii used to label cells. The proof constants put the theoretical balls
/// far beyond plot scale, so plots use balls proportional to `‖x₀‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeOptions {
    /// `δ₁ = δ₂ = factor·‖x₀‖`.
    pub ball_factor: f64,
    /// `δ̌`.
    pub zero_radius: f64,
    /// When given, the theoretical radii for this `ε` are attached too.
    pub eps_wdc: Option<f64>,
    pub constants: RadiusConstants,
}

impl Default for LandscapeOptions {
    fn default() -> Self {
        Self {
            ball_factor: 0.3,
            zero_radius: 0.1,
            eps_wdc: None,
            constants: RadiusConstants::default(),
        }
    }
}

pub enum GridMode<'a> {
    Empirical(&'a dyn Observations),
    Surrogate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LandscapeMode {
    Empirical { m: usize },
    Surrogate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub x: [f64; 2],
    pub loss: f64,
    pub grad_norm: f64,
    /// The one-sided derivative along `−v_x` is negative. False where
    /// `v_x = 0`.
    pub descent_ok: bool,
    pub zone: Zone,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    /// `grid[row][col]` with `x₂` varying along rows and `x₁` along columns.
    pub grid: Vec<Vec<Cell>>,
    pub spec: GridSpec,
    pub layers: usize,
    pub rho_n: f64,
    pub radii: Radii,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory_radii: Option<Radii>,
    pub mode: LandscapeMode,
    pub x0: Vec<f64>,
}

pub fn landscape_grid(net: &ReluNetwork, x0: &[f64], spec: &GridSpec, mode: GridMode<'_>) -> Result<LandscapeReport> {
    landscape_grid_with(net, x0, spec, mode, &LandscapeOptions::default())
}

pub fn landscape_grid_with(
    net: &ReluNetwork,
    x0: &[f64],
    spec: &GridSpec,
    mode: GridMode<'_>,
    opts: &LandscapeOptions,
) -> Result<LandscapeReport> {
    if net.input_dim() != 2 {
        return Err(Error::Unsupported(format!(
            "landscape grids need a 2-D latent space, network input is {}-D",
            net.input_dim()
        )));
    }
    ensure_len("x0", 2, x0)?;
    spec.validate()?;
    let (risk, mode_tag) = match mode {
        GridMode::Empirical(obs) => (Risk::empirical(net, obs)?, LandscapeMode::Empirical { m: obs.count() }),
        GridMode::Surrogate => (Risk::surrogate(net, x0)?, LandscapeMode::Surrogate),
    };
    let n = net.depth();
    let rho = rho_n(n)?;
    let x0_norm = norm(x0);
    let radii = Radii {
        delta_check: opts.zero_radius,
        delta_1: opts.ball_factor * x0_norm,
        delta_2: opts.ball_factor * x0_norm,
    };
    let theory_radii = opts
        .eps_wdc
        .map(|eps| radii_with(n, eps, x0_norm, opts.constants))
        .transpose()?;
    let res = spec.resolution;
    let cells: Vec<Cell> = (0..res * res)
        .into_par_iter()
        .map(|idx| {
            let x = spec.point(idx / res, idx % res);
            let loss = risk.value(&x)?;
            let v = risk.subgradient(&x)?;
            let grad_norm = norm(&v);
            let descent_ok = grad_norm > 0.0 && risk.directional_derivative(&x, &scale(-1.0, &v))? < 0.0;
            Ok(Cell {
                x,
                loss,
                grad_norm,
                descent_ok,
                zone: classify(&x, x0, &radii, rho),
            })
        })
        .collect::<Result<_>>()?;
    let grid = cells.chunks(res).map(<[Cell]>::to_vec).collect();
    Ok(LandscapeReport {
        grid,
        spec: *spec,
        layers: n,
        rho_n: rho,
        radii,
        theory_radii,
        mode: mode_tag,
        x0: x0.to_vec(),
    })
}

impl LandscapeReport {
    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.grid.iter().flatten()
    }

    pub fn argmin(&self) -> &Cell {
        self.cells()
            .min_by(|a, b| a.loss.total_cmp(&b.loss))
            .expect("grid has at least four cells")
    }

    /// Cells whose loss is strictly below that of every 8-neighbour.
    pub fn strict_local_minima(&self) -> Vec<&Cell> {
        let n = self.grid.len();
        let mut out = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let here = self.grid[r][c].loss;
                let mut strict = true;
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                        if (dr, dc) == (0, 0) || rr < 0 || cc < 0 || rr >= n as i64 || cc >= n as i64 {
                            continue;
                        }
                        strict &= here < self.grid[rr as usize][cc as usize].loss;
                    }
                }
                if strict {
                    out.push(&self.grid[r][c]);
                }
            }
        }
        out
    }

    /// Smallest grid loss within distance `radius` of `center`.
    pub fn min_loss_within(&self, center: &[f64], radius: f64) -> Option<f64> {
        self.cells()
            .filter(|c| distance(&c.x, center) <= radius)
            .map(|c| c.loss)
            .min_by(f64::total_cmp)
    }

    /// `−ρ_n x₀`.
    pub fn spurious_center(&self) -> Vec<f64> {
        scale(-self.rho_n, &self.x0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("landscape report serializes")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x1,x2,loss,grad_norm,descent_ok,zone")?;
        for c in self.cells() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.x[0],
                c.x[1],
                c.loss,
                c.grad_norm,
                c.descent_ok,
                c.zone.name()
            )?;
        }
        Ok(())
    }

    /// Heatmap of the loss with the three zone circles overlaid.
    ///
    /// Colors interpolate linearly in loss between the grid minimum (dark
    /// purple) and maximum (yellow) along the nine-stop viridis palette in
    /// [`VIRIDIS`]. Circles: `x₀` ball in white, `−ρ_n x₀` ball in red, the
    /// origin ball in cyan. A timestamp, when given, is written as a comment.
    pub fn write_svg<W: Write>(&self, mut out: W, timestamp: Option<&str>) -> std::io::Result<()> {
        let n = self.spec.resolution;
        let cell_px = (640 / n).max(4);
        let size = cell_px * n;
        let (lo, hi) = self.cells().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c.loss), hi.max(c.loss))
        });
        let (x_lo, x_hi) = self.spec.x_range;
        let (y_lo, y_hi) = self.spec.y_range;
        // Cell centres sit on grid points; the image spans half a cell beyond.
        let dx = (x_hi - x_lo) / (n - 1) as f64;
        let dy = (y_hi - y_lo) / (n - 1) as f64;
        let px = |x: f64| (x - x_lo + dx / 2.0) / dx * cell_px as f64;
        let py = |y: f64| size as f64 - (y - y_lo + dy / 2.0) / dy * cell_px as f64;

        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{}" viewBox="0 0 {size} {}">"#,
            size + 24,
            size + 24
        )?;
        if let Some(ts) = timestamp {
            writeln!(out, "<!-- generated {ts} -->")?;
        }
        for (r, row) in self.grid.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                let t = if hi > lo { (cell.loss - lo) / (hi - lo) } else { 0.0 };
                writeln!(
                    out,
                    r#"<rect x="{}" y="{}" width="{cell_px}" height="{cell_px}" fill="{}"/>"#,
                    c * cell_px,
                    size - (r + 1) * cell_px,
                    viridis(t)
                )?;
            }
        }
        let sx = cell_px as f64 / dx;
        let circles = [
            (self.x0.clone(), self.radii.delta_1, "#ffffff"),
            (self.spurious_center(), self.radii.delta_2, "#ff3030"),
            (vec![0.0, 0.0], self.radii.delta_check, "#30e0ff"),
        ];
        for (centre, radius, color) in circles {
            writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                px(centre[0]),
                py(centre[1]),
                radius * sx
            )?;
        }
        let mode = match self.mode {
            LandscapeMode::Empirical { m } => format!("empirical m={m}"),
            LandscapeMode::Surrogate => "surrogate".to_string(),
        };
        writeln!(
            out,
            r#"<text x="4" y="{}" font-family="monospace" font-size="12">{mode}, loss [{lo:.4}, {hi:.4}], rho_n={:.5}</text>"#,
            size + 16,
            self.rho_n
        )?;
        writeln!(out, "</svg>")
    }
}

/// Nine evenly spaced samples of the viridis color map.
pub const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

fn viridis(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (VIRIDIS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
    let f = pos - i as f64;
    let mix = |a: u8, b: u8| (f64::from(a) + f * (f64::from(b) - f64::from(a))).round() as u8;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    format!("#{:02x}{:02x}{:02x}", mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2]))
}
