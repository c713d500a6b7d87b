//! Reproducible experiment harness: statistical-rate sweeps, the dithering
//! ablation, landscape and WDC runs, and result persistence with manifests.
//!
//! Every random draw is seeded from `base_seed` through [`derive_seed`], so
//! every output file is a pure function of the [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::erm::{ambient_loss, recover, SolverOptions};
use crate::error::{Error, Result};
use crate::generator::{group_sparse_network, ReluNetwork, WeightScale};
use crate::landscape::{
    epsilon_conditions, estimate_wdc_network, landscape_grid_with, radii_with, EpsilonConditions, GridMode, GridSpec,
    LandscapeOptions, LandscapeReport, Radii, RadiusConstants, WdcReport,
};
use crate::linalg::{norm, scale, Matrix};
use crate::sensing::{
    quantize, quantize_with, sample_sensing, sign_difference_fraction, sketch_measurements, Dither, NoiseModel,
    SensingDist,
};

pub use crate::seed::{derive_seed, Tag};

pub const SCHEMA_VERSION: u32 = 1;

/// Seed of the random `[2, 64, 1024]` network used for the two-basin
/// landscape.
pub const REFERENCE_NET_SEED: u64 = 2;
pub const REFERENCE_DIMS: [usize; 3] = [2, 64, 1024];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RateSweep,
    DitherAblation,
    Landscape,
    WdcCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RateSweep => "rate_sweep",
            ExperimentKind::DitherAblation => "dither_ablation",
            ExperimentKind::Landscape => "landscape",
            ExperimentKind::WdcCheck => "wdc_check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetSpec {
    /// `N(0, 1/d_out)` weights.
    Gaussian {
        dims: Vec<usize>,
        seed: u64,
    },
    /// A network JSON file written by `ReluNetwork::save`.
    Path {
        path: PathBuf,
    },
    GroupSparse {
        k: usize,
        d: usize,
    },
}

impl NetSpec {
    pub fn reference() -> Self {
        NetSpec::Gaussian {
            dims: REFERENCE_DIMS.to_vec(),
            seed: REFERENCE_NET_SEED,
        }
    }

    pub fn build(&self) -> Result<ReluNetwork> {
        match self {
            NetSpec::Gaussian { dims, seed } => ReluNetwork::new_random_gaussian(dims, WeightScale::default(), *seed),
            NetSpec::Path { path } => ReluNetwork::load(path),
            NetSpec::GroupSparse { k, d } => group_sparse_network(*k, *d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    pub dist: SensingDist,
    pub noise: NoiseModel,
    pub lambda: f64,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            dist: SensingDist::Gaussian,
            noise: NoiseModel::Gaussian { sigma: 0.1 },
            lambda: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandscapeModeConfig {
    Surrogate,
    Empirical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeConfig {
    pub x0: Vec<f64>,
    pub half_width: f64,
    pub resolution: usize,
    pub mode: LandscapeModeConfig,
    /// Measurement count in empirical mode.
    pub m: usize,
    pub ball_factor: f64,
    pub zero_radius: f64,
    pub eps_wdc: Option<f64>,
    pub constants: RadiusConstants,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            x0: vec![1.0, 1.0],
            half_width: 2.0,
            resolution: 81,
            mode: LandscapeModeConfig::Surrogate,
            m: 100_000,
            ball_factor: 0.3,
            zero_radius: 0.1,
            eps_wdc: None,
            constants: RadiusConstants::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WdcConfig {
    pub n_pairs: usize,
}

impl Default for WdcConfig {
    fn default() -> Self {
        Self { n_pairs: 500 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    /// Ambient dimension of `θ₁ = e₁` and `θ₂ = e₁ − e₂/2`.
    pub dim: usize,
    pub m: usize,
    pub seeds: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            m: 10_000,
            seeds: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub net_spec: NetSpec,
    #[serde(default)]
    pub sensing: SensingConfig,
    #[serde(default)]
    pub m_list: Vec<usize>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub solver: SolverOptions,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub base_seed: u64,
    /// Fixed signal for rate sweeps; a random unit vector when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub landscape: LandscapeConfig,
    #[serde(default)]
    pub wdc: WdcConfig,
    #[serde(default)]
    pub ablation: AblationConfig,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, net_spec: NetSpec, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            net_spec,
            sensing: SensingConfig::default(),
            m_list: Vec::new(),
            trials: 1,
            solver: SolverOptions::default(),
            output_dir: output_dir.into(),
            base_seed: 0,
            x0: None,
            landscape: LandscapeConfig::default(),
            wdc: WdcConfig::default(),
            ablation: AblationConfig::default(),
        }
    }

    /// Reference rate sweep: `m = 2⁸, …, 2¹³`, 20 trials, Gaussian sensing,
    /// `λ = 10`, `σ_ξ = 0.1`.
    pub fn rate_sweep_default(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            m_list: (8..=13).map(|p| 1usize << p).collect(),
            trials: 20,
            ..Self::new(ExperimentKind::RateSweep, NetSpec::reference(), output_dir)
        }
    }

    pub fn landscape_default(output_dir: impl Into<PathBuf>) -> Self {
        Self::new(ExperimentKind::Landscape, NetSpec::reference(), output_dir)
    }

    /// Noiseless Rademacher sensing with `λ = 10`.
    pub fn dither_ablation_default(output_dir: impl Into<PathBuf>) -> Self {
        let mut cfg = Self::new(ExperimentKind::DitherAblation, NetSpec::reference(), output_dir);
        cfg.sensing = SensingConfig {
            dist: SensingDist::Rademacher,
            noise: NoiseModel::None,
            lambda: 10.0,
        };
        cfg
    }

    pub fn wdc_default(output_dir: impl Into<PathBuf>) -> Self {
        Self::new(ExperimentKind::WdcCheck, NetSpec::reference(), output_dir)
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::from_json(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.sensing.lambda > 0.0 && self.sensing.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "sensing.lambda must be positive, got {}",
                self.sensing.lambda
            )));
        }
        self.solver.validate()?;
        if self.experiment == ExperimentKind::RateSweep {
            if self.m_list.is_empty() {
                return Err(Error::Config("m_list must not be empty for a rate sweep".into()));
            }
            if self.m_list.windows(2).any(|w| w[0] >= w[1]) || self.m_list[0] == 0 {
                return Err(Error::Config("m_list must be positive and strictly increasing".into()));
            }
        }
        Ok(())
    }

    fn expect_kind(&self, kind: ExperimentKind) -> Result<()> {
        self.validate()?;
        if self.experiment != kind {
            return Err(Error::Config(format!(
                "config describes a {} experiment, not {}",
                self.experiment.name(),
                kind.name()
            )));
        }
        Ok(())
    }
}

/// Aggregated recovery error at one sample count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub m: usize,
    pub median_rel_error: f64,
    pub q25: f64,
    pub q75: f64,
    pub mean_iters: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sample counts whose median error entered the fit.
    pub m_used: Vec<usize>,
    /// Points with median error below this floor are excluded.
    pub error_floor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSweepResult {
    pub x0: Vec<f64>,
    pub rows: Vec<RateRow>,
    pub slope: Option<SlopeFit>,
    /// Relative error per trial, `None` for failed trials, in `m_list` order.
    pub trial_errors: Vec<Vec<Option<f64>>>,
}

pub const SLOPE_ERROR_FLOOR: f64 = 1e-3;

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Least-squares fit of `log(error)` against `log(m)`, skipping points below
/// the floor. Needs two usable points.
pub fn fit_log_log(rows: &[RateRow], floor: f64) -> Option<SlopeFit> {
    let pts: Vec<(usize, f64, f64)> = rows
        .iter()
        .filter(|r| r.median_rel_error.is_finite() && r.median_rel_error >= floor)
        .map(|r| (r.m, (r.m as f64).ln(), r.median_rel_error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.2).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.1 - mx) * (p.2 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.1 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Some(SlopeFit {
        slope,
        intercept: my - slope * mx,
        m_used: pts.iter().map(|p| p.0).collect(),
        error_floor: floor,
    })
}

/// Unit-norm signal drawn from `derive(base_seed, "x0")`.
pub fn sweep_signal(base_seed: u64, k: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base_seed, &[Tag::Str("x0")]));
    loop {
        let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return scale(1.0 / n, &v);
        }
    }
}

/// Seeds of one rate-sweep trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub sensing: u64,
    pub quantize: u64,
    pub init: u64,
}

impl TrialSeeds {
    pub fn derive(base_seed: u64, m: usize, trial: usize) -> Self {
        let t = derive_seed(
            base_seed,
            &[Tag::Str("m"), Tag::from(m), Tag::Str("trial"), Tag::from(trial)],
        );
        Self {
            sensing: derive_seed(t, &[Tag::Str("sensing")]),
            quantize: derive_seed(t, &[Tag::Str("quantize")]),
            init: derive_seed(t, &[Tag::Str("init")]),
        }
    }
}

fn run_trial(
    net: &ReluNetwork,
    cfg: &ExperimentConfig,
    theta0: &[f64],
    x0: &[f64],
    m: usize,
    trial: usize,
) -> Result<(f64, usize)> {
    let seeds = TrialSeeds::derive(cfg.base_seed, m, trial);
    let obs = sketch_measurements(
        cfg.sensing.dist,
        m,
        theta0,
        cfg.sensing.noise,
        cfg.sensing.lambda,
        seeds.sensing,
        seeds.quantize,
    )?;
    let opts = SolverOptions {
        seed: seeds.init,
        ..cfg.solver.clone()
    };
    let res = recover(net, &obs, &opts, Some(x0))?;
    let err = res.relative_error.unwrap_or(f64::NAN);
    if !err.is_finite() {
        return Err(Error::Numerical("non-finite relative error".into()));
    }
    Ok((err, res.iterations))
}

/// Recovery error versus `m` for a fixed signal. Failed trials are counted
/// and skipped; the sweep aborts only when every trial at some `m` fails.
pub fn rate_sweep(cfg: &ExperimentConfig) -> Result<RateSweepResult> {
    cfg.expect_kind(ExperimentKind::RateSweep)?;
    let net = cfg.net_spec.build()?;
    let x0 = match &cfg.x0 {
        Some(x0) => {
            crate::error::ensure_len("x0", net.input_dim(), x0)?;
            x0.clone()
        }
        None => sweep_signal(cfg.base_seed, net.input_dim()),
    };
    let theta0 = net.forward(&x0)?;
    let mut rows = Vec::with_capacity(cfg.m_list.len());
    let mut trial_errors = Vec::with_capacity(cfg.m_list.len());
    for &m in &cfg.m_list {
        let outcomes: Vec<Result<(f64, usize)>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(&net, cfg, &theta0, &x0, m, t))
            .collect();
        let mut errs = Vec::new();
        let mut iters = Vec::new();
        let mut per_trial = Vec::with_capacity(cfg.trials);
        let mut last_failure = None;
        for o in outcomes {
            match o {
                Ok((e, it)) => {
                    errs.push(e);
                    iters.push(it as f64);
                    per_trial.push(Some(e));
                }
                Err(e @ Error::Numerical(_)) => {
                    last_failure = Some(e);
                    per_trial.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        if errs.is_empty() {
            return Err(last_failure.unwrap_or_else(|| Error::Numerical(format!("all trials failed at m={m}"))));
        }
        errs.sort_by(f64::total_cmp);
        rows.push(RateRow {
            m,
            median_rel_error: quantile_sorted(&errs, 0.5),
            q25: quantile_sorted(&errs, 0.25),
            q75: quantile_sorted(&errs, 0.75),
            mean_iters: iters.iter().sum::<f64>() / iters.len() as f64,
            failures: cfg.trials - errs.len(),
        });
        trial_errors.push(per_trial);
    }
    Ok(RateSweepResult {
        slope: fit_log_log(&rows, SLOPE_ERROR_FLOOR),
        x0,
        rows,
        trial_errors,
    })
}

pub fn write_rate_csv<W: Write>(rows: &[RateRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "m,median,q25,q75,mean_iters,failures")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.m, r.median_rel_error, r.q25, r.q75, r.mean_iters, r.failures
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub seed_index: usize,
    /// `d_H(θ₁, θ₂)` with the dither switched off.
    pub undithered_dh: f64,
    pub dithered_dh: f64,
    /// Losses `L(θ₁)`, `L(θ₂)` on measurements of `θ₁`.
    pub from_theta1: (f64, f64),
    /// Losses `L(θ₁)`, `L(θ₂)` on measurements of `θ₂`.
    pub from_theta2: (f64, f64),
    pub separated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub m: usize,
    pub lambda: f64,
    pub dist: SensingDist,
    pub rows: Vec<SeparationRow>,
    pub max_undithered_dh: f64,
    pub separated_count: usize,
}

/// The pair `θ₁ = e₁`, `θ₂ = e₁ − e₂/2` that undithered one-bit Rademacher
/// measurements cannot tell apart.
pub fn ablation_pair(dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if dim < 2 {
        return Err(Error::Config(format!(
            "ablation dimension must be at least 2, got {dim}"
        )));
    }
    let mut t1 = vec![0.0; dim];
    t1[0] = 1.0;
    let mut t2 = t1.clone();
    t2[1] = -0.5;
    Ok((t1, t2))
}

/// Compares `θ₁` and `θ₂` through undithered and dithered measurements.
///
/// Neither signal lies in the range of a ReLU generator (`θ₂` has a
/// negative entry), so losses use the identity generator, i.e.
/// `L(θ) = ‖θ‖² − 2⟨s, θ⟩`.
pub fn dither_ablation(cfg: &ExperimentConfig) -> Result<AblationReport> {
    cfg.expect_kind(ExperimentKind::DitherAblation)?;
    let ab = &cfg.ablation;
    if ab.m == 0 || ab.seeds == 0 {
        return Err(Error::Config("ablation needs m ≥ 1 and seeds ≥ 1".into()));
    }
    let (t1, t2) = ablation_pair(ab.dim)?;
    let lambda = cfg.sensing.lambda;
    let noise = cfg.sensing.noise;
    let rows: Vec<SeparationRow> = (0..ab.seeds)
        .into_par_iter()
        .map(|s| {
            let base = derive_seed(cfg.base_seed, &[Tag::Str("ablation"), Tag::from(s)]);
            let seed = |name: &str| derive_seed(base, &[Tag::Str(name)]);
            let a: Matrix = sample_sensing(cfg.sensing.dist, ab.m, ab.dim, seed("sensing"))?;
            let plain = quantize_with(&a, &t1, noise, Dither::Disabled { lambda }, seed("plain"))?;
            let ms1 = quantize(&a, &t1, noise, lambda, seed("theta1"))?;
            let ms2 = quantize(&a, &t2, noise, lambda, seed("theta2"))?;
            let from_theta1 = (ambient_loss(&ms1, &t1)?, ambient_loss(&ms1, &t2)?);
            let from_theta2 = (ambient_loss(&ms2, &t1)?, ambient_loss(&ms2, &t2)?);
            Ok(SeparationRow {
                seed_index: s,
                undithered_dh: sign_difference_fraction(&plain, &t1, &t2)?,
                dithered_dh: sign_difference_fraction(&ms1, &t1, &t2)?,
                separated: from_theta1.0 < from_theta1.1 && from_theta2.1 < from_theta2.0,
                from_theta1,
                from_theta2,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AblationReport {
        max_undithered_dh: rows.iter().map(|r| r.undithered_dh).fold(0.0, f64::max),
        separated_count: rows.iter().filter(|r| r.separated).count(),
        theta1: t1,
        theta2: t2,
        m: ab.m,
        lambda,
        dist: cfg.sensing.dist,
        rows,
    })
}

/// Seed of the empirical-mode landscape measurements.
pub fn landscape_seeds(base_seed: u64) -> (u64, u64) {
    (
        derive_seed(base_seed, &[Tag::Str("landscape"), Tag::Str("sensing")]),
        derive_seed(base_seed, &[Tag::Str("landscape"), Tag::Str("quantize")]),
    )
}

/// Landscape report for the configured network, signal and grid.
pub fn landscape_report(cfg: &ExperimentConfig) -> Result<LandscapeReport> {
    cfg.expect_kind(ExperimentKind::Landscape)?;
    let net = cfg.net_spec.build()?;
    let lc = &cfg.landscape;
    let spec = GridSpec::square(lc.half_width, lc.resolution);
    let opts = LandscapeOptions {
        ball_factor: lc.ball_factor,
        zero_radius: lc.zero_radius,
        eps_wdc: lc.eps_wdc,
        constants: lc.constants,
    };
    match lc.mode {
        LandscapeModeConfig::Surrogate => landscape_grid_with(&net, &lc.x0, &spec, GridMode::Surrogate, &opts),
        LandscapeModeConfig::Empirical => {
            let (s_seed, q_seed) = landscape_seeds(cfg.base_seed);
            let theta0 = net.forward(&lc.x0)?;
            let obs = sketch_measurements(
                cfg.sensing.dist,
                lc.m,
                &theta0,
                cfg.sensing.noise,
                cfg.sensing.lambda,
                s_seed,
                q_seed,
            )?;
            landscape_grid_with(&net, &lc.x0, &spec, GridMode::Empirical(&obs), &opts)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WdcCheckReport {
    pub layers: Vec<WdcReport>,
    /// Largest sampled deviation over all layers.
    pub epsilon_hat: f64,
    pub conditions: EpsilonConditions,
    pub theory_radii: Radii,
}

pub fn wdc_check(cfg: &ExperimentConfig) -> Result<WdcCheckReport> {
    cfg.expect_kind(ExperimentKind::WdcCheck)?;
    if cfg.wdc.n_pairs == 0 {
        return Err(Error::Config("wdc.n_pairs must be at least 1".into()));
    }
    let net = cfg.net_spec.build()?;
    let seed = derive_seed(cfg.base_seed, &[Tag::Str("wdc")]);
    let layers = estimate_wdc_network(&net, cfg.wdc.n_pairs, seed)?;
    let epsilon_hat = layers.iter().map(|l| l.epsilon_hat).fold(0.0, f64::max);
    let eps = epsilon_hat.max(f64::MIN_POSITIVE);
    Ok(WdcCheckReport {
        conditions: epsilon_conditions(net.depth(), eps)?,
        theory_radii: radii_with(net.depth(), eps, norm(&cfg.landscape.x0), cfg.landscape.constants)?,
        epsilon_hat,
        layers,
    })
}

/// `sha256("blob <len>\0" ‖ content)`, git's object hashing with SHA-256.
pub fn git_blob_sha256(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub base_seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub net_hash: String,
    pub artifacts: Vec<ArtifactEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

/// Output options that do not affect results.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Written into the manifest and the SVG comment when present.
    pub timestamp: Option<String>,
}

/// Files written by a run, relative to the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub manifest: Manifest,
}

struct ArtifactWriter {
    dir: PathBuf,
    artifacts: Vec<ArtifactEntry>,
}

impl ArtifactWriter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        f.write_all(content)
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(ArtifactEntry {
            path: name.to_string(),
            bytes: content.len(),
            sha256: git_blob_sha256(content),
        });
        Ok(())
    }

    fn finish(
        mut self,
        cfg: &ExperimentConfig,
        net: &ReluNetwork,
        seeds: BTreeMap<String, u64>,
        run: &RunOptions,
    ) -> Result<RunOutput> {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            experiment: cfg.experiment,
            config: cfg.clone(),
            base_seed: cfg.base_seed,
            seeds,
            net_hash: git_blob_sha256(net.to_json().as_bytes()),
            artifacts: self.artifacts.clone(),
            timestamp: run.timestamp.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        let mut files: Vec<String> = self.artifacts.drain(..).map(|a| a.path).collect();
        files.push("manifest.json".into());
        Ok(RunOutput {
            dir: self.dir,
            files,
            manifest,
        })
    }
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec_pretty(v).expect("report serializes")
}

/// Writes `rate_sweep.csv`, `slope.json`, `trials.json` and `manifest.json`.
pub fn run_rate_sweep(cfg: &ExperimentConfig, run: &RunOptions) -> Result<(RateSweepResult, RunOutput)> {
    let res = rate_sweep(cfg)?;
    let net = cfg.net_spec.build()?;
    let mut w = ArtifactWriter::new(&cfg.output_dir)?;
    w.write("rate_sweep.csv", &to_bytes(|b| write_rate_csv(&res.rows, b)))?;
    w.write("slope.json", &pretty(&res.slope))?;
    w.write(
        "trials.json",
        &pretty(&serde_json::json!({ "x0": res.x0, "m_list": cfg.m_list, "errors": res.trial_errors })),
    )?;
    let mut seeds = BTreeMap::new();
    seeds.insert("x0".to_string(), derive_seed(cfg.base_seed, &[Tag::Str("x0")]));
    for &m in &cfg.m_list {
        for t in 0..cfg.trials {
            let s = TrialSeeds::derive(cfg.base_seed, m, t);
            seeds.insert(format!("m{m}/trial{t}/sensing"), s.sensing);
            seeds.insert(format!("m{m}/trial{t}/quantize"), s.quantize);
            seeds.insert(format!("m{m}/trial{t}/init"), s.init);
        }
    }
    let out = w.finish(cfg, &net, seeds, run)?;
    Ok((res, out))
}

/// Writes `ablation.json` and `manifest.json`.
pub fn run_dither_ablation(cfg: &ExperimentConfig, run: &RunOptions) -> Result<(AblationReport, RunOutput)> {
    let rep = dither_ablation(cfg)?;
    let net = cfg.net_spec.build()?;
    let mut w = ArtifactWriter::new(&cfg.output_dir)?;
    w.write("ablation.json", &pretty(&rep))?;
    let seeds = (0..cfg.ablation.seeds)
        .map(|s| {
            (
                format!("ablation/{s}"),
                derive_seed(cfg.base_seed, &[Tag::Str("ablation"), Tag::from(s)]),
            )
        })
        .collect();
    let out = w.finish(cfg, &net, seeds, run)?;
    Ok((rep, out))
}

/// Writes `grid.csv`, `landscape.json`, `heatmap.svg` and `manifest.json`.
pub fn run_landscape(cfg: &ExperimentConfig, run: &RunOptions) -> Result<(LandscapeReport, RunOutput)> {
    let rep = landscape_report(cfg)?;
    let net = cfg.net_spec.build()?;
    let mut w = ArtifactWriter::new(&cfg.output_dir)?;
    w.write("grid.csv", &to_bytes(|b| rep.write_csv(b)))?;
    w.write("landscape.json", rep.to_json().as_bytes())?;
    w.write("heatmap.svg", &to_bytes(|b| rep.write_svg(b, run.timestamp.as_deref())))?;
    let mut seeds = BTreeMap::new();
    if cfg.landscape.mode == LandscapeModeConfig::Empirical {
        let (s, q) = landscape_seeds(cfg.base_seed);
        seeds.insert("sensing".to_string(), s);
        seeds.insert("quantize".to_string(), q);
    }
    let out = w.finish(cfg, &net, seeds, run)?;
    Ok((rep, out))
}

/// Writes `wdc.json` and `manifest.json`.
pub fn run_wdc_check(cfg: &ExperimentConfig, run: &RunOptions) -> Result<(WdcCheckReport, RunOutput)> {
    let rep = wdc_check(cfg)?;
    let net = cfg.net_spec.build()?;
    let mut w = ArtifactWriter::new(&cfg.output_dir)?;
    w.write("wdc.json", &pretty(&rep))?;
    let mut seeds = BTreeMap::new();
    seeds.insert("wdc".to_string(), derive_seed(cfg.base_seed, &[Tag::Str("wdc")]));
    let out = w.finish(cfg, &net, seeds, run)?;
    Ok((rep, out))
}
