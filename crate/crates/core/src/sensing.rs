//! The dithered one-bit measurement channel
//! `yᵢ = sign(⟨aᵢ, θ₀⟩ + ξᵢ + τᵢ)` with `τᵢ ~ Unif[−λ, λ]`.
//!
//! Random draws are organized in fixed chunks of [`CHUNK_ROWS`] rows. Each
//! chunk has its own generator seeded from `(seed, chunk index)`, so chunks
//! can be produced in parallel and the streamed [`MeasurementSketch`] sees
//! exactly the draws a stored [`MeasurementSet`] would hold.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::linalg::{axpy, dot, Matrix};
use crate::seed::{derive_seed, Tag};

pub const CHUNK_ROWS: usize = 512;

/// Distribution of the entries of a sensing vector. All three are mean zero
/// with unit variance, so the rows are isotropic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingDist {
    Gaussian,
    Rademacher,
    /// Laplace with scale `1/√2`: sub-exponential, not sub-Gaussian.
    Laplace,
}

impl SensingDist {
    pub fn name(self) -> &'static str {
        match self {
            SensingDist::Gaussian => "gaussian",
            SensingDist::Rademacher => "rademacher",
            SensingDist::Laplace => "laplace",
        }
    }

    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            SensingDist::Gaussian => rng.sample(StandardNormal),
            SensingDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            SensingDist::Laplace => laplace(rng, std::f64::consts::FRAC_1_SQRT_2),
        }
    }
}

impl FromStr for SensingDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(SensingDist::Gaussian),
            "rademacher" => Ok(SensingDist::Rademacher),
            "laplace" => Ok(SensingDist::Laplace),
            other => Err(Error::Config(format!(
                "unknown sensing distribution {other:?} (expected gaussian, rademacher or laplace)"
            ))),
        }
    }
}

impl fmt::Display for SensingDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn laplace(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    if rng.random::<bool>() {
        scale * e
    } else {
        -scale * e
    }
}

/// Pre-quantization noise `ξ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    Gaussian {
        sigma: f64,
    },
    Laplace {
        scale: f64,
    },
}

impl NoiseModel {
    fn validate(self) -> Result<()> {
        match self {
            NoiseModel::None => Ok(()),
            NoiseModel::Gaussian { sigma: v } | NoiseModel::Laplace { scale: v } => {
                if v.is_finite() && v >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "noise parameter must be finite and ≥ 0, got {v}"
                    )))
                }
            }
        }
    }

    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
            NoiseModel::Laplace { scale } => laplace(rng, scale),
        }
    }
}

/// Uniform dither on `[−λ, λ]`, or none at all.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dither {
    Uniform {
        lambda: f64,
    },
    /// `τᵢ = 0`. Only meaningful for demonstrating that undithered one-bit
    /// measurements cannot separate some signal pairs; `lambda` still scales
    /// the empirical risk.
    Disabled {
        lambda: f64,
    },
}

impl Dither {
    pub fn lambda(self) -> f64 {
        match self {
            Dither::Uniform { lambda } | Dither::Disabled { lambda } => lambda,
        }
    }
}

/// `sign` with the tie convention `sign(0) = +1`.
#[inline]
pub fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

fn chunk_rng(seed: u64, stream: &str, chunk: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[Tag::Str(stream), Tag::Int(chunk as u64)]))
}

fn n_chunks(m: usize) -> usize {
    m.div_ceil(CHUNK_ROWS)
}

fn chunk_range(m: usize, c: usize) -> std::ops::Range<usize> {
    c * CHUNK_ROWS..((c + 1) * CHUNK_ROWS).min(m)
}

fn sensing_chunk(dist: SensingDist, m: usize, d: usize, seed: u64, c: usize) -> Vec<f64> {
    let mut rng = chunk_rng(seed, "sensing", c);
    (0..chunk_range(m, c).len() * d)
        .map(|_| dist.sample(&mut rng))
        .collect()
}

/// Draws an `m × d` sensing matrix with i.i.d. isotropic rows.
pub fn sample_sensing(dist: SensingDist, m: usize, d: usize, seed: u64) -> Result<Matrix> {
    if m == 0 || d == 0 {
        return Err(Error::Config(format!("sensing matrix needs m, d ≥ 1 (got {m}x{d})")));
    }
    let data: Vec<f64> = (0..n_chunks(m))
        .into_par_iter()
        .map(|c| sensing_chunk(dist, m, d, seed, c))
        .collect::<Vec<_>>()
        .concat();
    Matrix::from_row_major(m, d, data)
}

/// Closed-form `E_τ[sign(V + τ)]` for `τ ~ Unif[−λ, λ]`.
pub fn expected_sign(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        1.0
    } else if v < -lambda {
        -1.0
    } else {
        v / lambda
    }
}

/// Anything the empirical risk can be evaluated against. The risk depends
/// on the measurements only through `λ` and the back-projection
/// `s = (λ/m) Σ yᵢ aᵢ`.
pub trait Observations {
    fn lambda(&self) -> f64;
    fn count(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn backprojection(&self) -> &[f64];
}

/// A fully recorded set of dithered one-bit measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    a: Matrix,
    xi: Vec<f64>,
    tau: Vec<f64>,
    y: Vec<i8>,
    lambda: f64,
    dist: String,
    noise: NoiseModel,
    seed: u64,
    dither_disabled: bool,
    backprojection: Vec<f64>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "dither level λ must be positive and finite, got {lambda}"
        )))
    }
}

/// Draws noise and dither for rows of chunk `c` and returns the labels.
fn quantize_chunk(
    rows: impl Iterator<Item = f64>,
    noise: NoiseModel,
    dither: Dither,
    seed: u64,
    c: usize,
) -> (Vec<f64>, Vec<f64>, Vec<i8>) {
    let mut rng = chunk_rng(seed, "quantize", c);
    let (mut xi, mut tau, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for proj in rows {
        let e = noise.sample(&mut rng);
        let t = match dither {
            Dither::Uniform { lambda } => rng.random_range(-lambda..=lambda),
            Dither::Disabled { .. } => 0.0,
        };
        y.push(sign(proj + e + t));
        xi.push(e);
        tau.push(t);
    }
    (xi, tau, y)
}

fn chunk_backprojection(a_rows: &[f64], d: usize, y: &[i8]) -> Vec<f64> {
    let mut acc = vec![0.0; d];
    for (row, &yi) in a_rows.chunks(d).zip(y) {
        axpy(f64::from(yi), row, &mut acc);
    }
    acc
}

fn finish_backprojection(partials: Vec<Vec<f64>>, d: usize, lambda: f64, m: usize) -> Vec<f64> {
    let mut total = vec![0.0; d];
    for p in &partials {
        axpy(1.0, p, &mut total);
    }
    let c = lambda / m as f64;
    total.iter_mut().for_each(|v| *v *= c);
    total
}

/// Quantizes `⟨aᵢ, θ₀⟩ + ξᵢ + τᵢ` for every row of `a`.
pub fn quantize(a: &Matrix, theta0: &[f64], noise: NoiseModel, lambda: f64, seed: u64) -> Result<MeasurementSet> {
    quantize_with(a, theta0, noise, Dither::Uniform { lambda }, seed)
}

pub fn quantize_with(
    a: &Matrix,
    theta0: &[f64],
    noise: NoiseModel,
    dither: Dither,
    seed: u64,
) -> Result<MeasurementSet> {
    check_lambda(dither.lambda())?;
    noise.validate()?;
    ensure_len("signal", a.cols(), theta0)?;
    if theta0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("signal has non-finite entries".into()));
    }
    let (m, d) = (a.rows(), a.cols());
    let parts: Vec<_> = (0..n_chunks(m))
        .into_par_iter()
        .map(|c| {
            let range = chunk_range(m, c);
            let rows = &a.as_slice()[range.start * d..range.end * d];
            let (xi, tau, y) = quantize_chunk(rows.chunks(d).map(|r| dot(r, theta0)), noise, dither, seed, c);
            let bp = chunk_backprojection(rows, d, &y);
            (xi, tau, y, bp)
        })
        .collect();
    let mut xi = Vec::with_capacity(m);
    let mut tau = Vec::with_capacity(m);
    let mut y = Vec::with_capacity(m);
    let mut partials = Vec::with_capacity(parts.len());
    for (x, t, s, bp) in parts {
        xi.extend(x);
        tau.extend(t);
        y.extend(s);
        partials.push(bp);
    }
    Ok(MeasurementSet {
        a: a.clone(),
        xi,
        tau,
        y,
        lambda: dither.lambda(),
        dist: String::new(),
        noise,
        seed,
        dither_disabled: matches!(dither, Dither::Disabled { .. }),
        backprojection: finish_backprojection(partials, d, dither.lambda(), m),
    })
}

impl MeasurementSet {
    /// Records the name of the distribution `a` was drawn from.
    pub fn with_dist_name(mut self, dist: impl Into<String>) -> Self {
        self.dist = dist.into();
        self
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn y(&self) -> &[i8] {
        &self.y
    }

    pub fn dist(&self) -> &str {
        &self.dist
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dither_disabled(&self) -> bool {
        self.dither_disabled
    }

    /// Label the stored randomness would assign to an arbitrary signal.
    fn label_of(&self, i: usize, theta: &[f64]) -> i8 {
        sign(dot(self.a.row(i), theta) + self.xi[i] + self.tau[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeasurementDoc::from(self)).expect("measurement document serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        let doc: MeasurementDoc = serde_json::from_str(text)?;
        doc.try_into()
            .map_err(|e: Error| serde::de::Error::custom(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// `i,y` rows with a header line.
    pub fn write_labels_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,y")?;
        for (i, y) in self.y.iter().enumerate() {
            writeln!(out, "{i},{y}")?;
        }
        Ok(())
    }
}

impl Observations for MeasurementSet {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn count(&self) -> usize {
        self.y.len()
    }

    fn ambient_dim(&self) -> usize {
        self.a.cols()
    }

    fn backprojection(&self) -> &[f64] {
        &self.backprojection
    }
}

#[derive(Serialize, Deserialize)]
struct MeasurementDoc {
    lambda: f64,
    dist: String,
    seed: u64,
    #[serde(default)]
    noise: NoiseModel,
    #[serde(default)]
    dither_disabled: bool,
    a: Vec<Vec<f64>>,
    xi: Vec<f64>,
    tau: Vec<f64>,
    y: Vec<i8>,
}

impl From<&MeasurementSet> for MeasurementDoc {
    fn from(ms: &MeasurementSet) -> Self {
        Self {
            lambda: ms.lambda,
            dist: ms.dist.clone(),
            seed: ms.seed,
            noise: ms.noise,
            dither_disabled: ms.dither_disabled,
            a: ms.a.to_rows(),
            xi: ms.xi.clone(),
            tau: ms.tau.clone(),
            y: ms.y.clone(),
        }
    }
}

impl TryFrom<MeasurementDoc> for MeasurementSet {
    type Error = Error;

    fn try_from(doc: MeasurementDoc) -> Result<Self> {
        check_lambda(doc.lambda)?;
        let a = Matrix::from_rows(&doc.a)?;
        let m = a.rows();
        if m == 0 {
            return Err(Error::Config("measurement set is empty".into()));
        }
        for (name, len) in [("xi", doc.xi.len()), ("tau", doc.tau.len()), ("y", doc.y.len())] {
            if len != m {
                return Err(Error::Config(format!("field {name} has {len} entries, expected {m}")));
            }
        }
        if doc.y.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::Config("labels must be ±1".into()));
        }
        if !doc.dither_disabled && doc.tau.iter().any(|t| t.abs() > doc.lambda) {
            return Err(Error::Config("dither draws exceed [−λ, λ]".into()));
        }
        let d = a.cols();
        let partials = (0..n_chunks(m))
            .map(|c| {
                let r = chunk_range(m, c);
                chunk_backprojection(&a.as_slice()[r.start * d..r.end * d], d, &doc.y[r])
            })
            .collect();
        Ok(MeasurementSet {
            backprojection: finish_backprojection(partials, d, doc.lambda, m),
            a,
            xi: doc.xi,
            tau: doc.tau,
            y: doc.y,
            lambda: doc.lambda,
            dist: doc.dist,
            noise: doc.noise,
            seed: doc.seed,
            dither_disabled: doc.dither_disabled,
        })
    }
}

/// Fraction of measurements whose label flips between `θ₁` and `θ₂` when
/// both are quantized against the same stored randomness.
pub fn sign_difference_fraction(ms: &MeasurementSet, theta1: &[f64], theta2: &[f64]) -> Result<f64> {
    ensure_len("first signal", ms.ambient_dim(), theta1)?;
    ensure_len("second signal", ms.ambient_dim(), theta2)?;
    let flips = (0..ms.count())
        .filter(|&i| ms.label_of(i, theta1) != ms.label_of(i, theta2))
        .count();
    Ok(flips as f64 / ms.count() as f64)
}

/// Measurements reduced to what the empirical risk needs, generated without
/// ever storing the sensing matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSketch {
    lambda: f64,
    m: usize,
    backprojection: Vec<f64>,
}

impl MeasurementSketch {
    /// Wraps an arbitrary back-projection vector, e.g. `G(x₀)` itself for the
    /// infinite-sample limit of the risk.
    pub fn from_backprojection(lambda: f64, m: usize, backprojection: Vec<f64>) -> Self {
        Self {
            lambda,
            m,
            backprojection,
        }
    }
}

impl Observations for MeasurementSketch {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn count(&self) -> usize {
        self.m
    }

    fn ambient_dim(&self) -> usize {
        self.backprojection.len()
    }

    fn backprojection(&self) -> &[f64] {
        &self.backprojection
    }
}

/// Same draws as `quantize(sample_sensing(dist, m, d, sensing_seed), …,
/// quantize_seed)`, streamed chunk by chunk.
pub fn sketch_measurements(
    dist: SensingDist,
    m: usize,
    theta0: &[f64],
    noise: NoiseModel,
    lambda: f64,
    sensing_seed: u64,
    quantize_seed: u64,
) -> Result<MeasurementSketch> {
    check_lambda(lambda)?;
    noise.validate()?;
    let d = theta0.len();
    if m == 0 || d == 0 {
        return Err(Error::Config(format!("sensing matrix needs m, d ≥ 1 (got {m}x{d})")));
    }
    let partials = (0..n_chunks(m))
        .into_par_iter()
        .map(|c| {
            let rows = sensing_chunk(dist, m, d, sensing_seed, c);
            let (_, _, y) = quantize_chunk(
                rows.chunks(d).map(|r| dot(r, theta0)),
                noise,
                Dither::Uniform { lambda },
                quantize_seed,
                c,
            );
            chunk_backprojection(&rows, d, &y)
        })
        .collect();
    Ok(MeasurementSketch {
        lambda,
        m,
        backprojection: finish_backprojection(partials, d, lambda, m),
    })
}
