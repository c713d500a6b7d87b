//! Command-line front end. Experiment flags mirror configuration keys with
//! dotted paths (`--sensing.lambda 10` sets `sensing.lambda`); flags win over
//! the `--config` file.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::erm::{recover, SolverOptions};
use crate::error::{Error, Result};
use crate::experiments::{
    derive_seed, run_dither_ablation, run_landscape, run_rate_sweep, run_wdc_check, ExperimentConfig, ExperimentKind,
    RunOptions, Tag,
};
use crate::generator::{group_sparse_network, ReluNetwork, WeightScale};
use crate::landscape::{rho_check_sequence, rho_n};
use crate::sensing::{quantize, sample_sensing, MeasurementSet, NoiseModel, SensingDist};

#[derive(Debug, Parser)]
#[command(
    name = "onebit",
    version,
    about = "Dithered one-bit compressed sensing with ReLU generative priors"
)]
pub struct Cli {
    /// Worker threads; falls back to ONEBIT_THREADS, then all cores (no config key).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Increase diagnostic output on stderr (no config key).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a network JSON (random Gaussian or group-sparse).
    GenNet(GenNetArgs),
    /// Quantize G(x0) and write a measurement-set JSON.
    Measure(MeasureArgs),
    /// Minimize the empirical risk for stored network and measurements.
    Recover(RecoverArgs),
    /// Evaluate the risk over a 2-D latent grid (CSV, JSON, SVG).
    Landscape(ExperimentArgs),
    /// Recovery error against the number of measurements.
    RateSweep(ExperimentArgs),
    /// Undithered versus dithered separation of two signals.
    DitherAblation(ExperimentArgs),
    /// Sampled Weight Distribution Condition constants per layer.
    WdcCheck(ExperimentArgs),
    /// Print rho_n and the rho-check angle sequence.
    Rho(RhoArgs),
}

#[derive(Debug, Args)]
pub struct GenNetArgs {
    /// config key: net_spec.dims (layer widths, input first, e.g. 2,64,1024)
    #[arg(long, value_delimiter = ',', conflicts_with = "group_sparse")]
    pub dims: Option<Vec<usize>>,
    /// config key: net_spec.seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// config key: net_spec.k,net_spec.d (group-sparse construction instead of random weights)
    #[arg(long, value_delimiter = ',')]
    pub group_sparse: Option<Vec<usize>>,
    /// Network JSON to write (no config key).
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SensingFlags {
    /// config key: sensing.dist (gaussian | rademacher | laplace)
    #[arg(long = "sensing.dist")]
    pub dist: Option<SensingDist>,
    /// config key: sensing.lambda
    #[arg(long = "sensing.lambda")]
    pub lambda: Option<f64>,
    /// config key: sensing.noise.kind (none | gaussian | laplace)
    #[arg(long = "sensing.noise.kind")]
    pub noise_kind: Option<String>,
    /// config key: sensing.noise.sigma
    #[arg(long = "sensing.noise.sigma")]
    pub noise_sigma: Option<f64>,
    /// config key: sensing.noise.scale
    #[arg(long = "sensing.noise.scale")]
    pub noise_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    /// config key: solver.step
    #[arg(long = "solver.step")]
    pub step: Option<f64>,
    /// config key: solver.max_iters
    #[arg(long = "solver.max_iters")]
    pub max_iters: Option<usize>,
    /// config key: solver.tol_grad
    #[arg(long = "solver.tol_grad")]
    pub tol_grad: Option<f64>,
    /// config key: solver.tol_loss
    #[arg(long = "solver.tol_loss")]
    pub tol_loss: Option<f64>,
    /// config key: solver.negation_period
    #[arg(long = "solver.negation_period")]
    pub negation_period: Option<usize>,
    /// config key: solver.init_radius
    #[arg(long = "solver.init_radius")]
    pub init_radius: Option<f64>,
    /// config key: solver.seed
    #[arg(long = "solver.seed")]
    pub seed: Option<u64>,
    /// config key: solver.init
    #[arg(long = "solver.init", value_delimiter = ',', allow_hyphen_values = true)]
    pub init: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// config key: net_spec.path
    #[arg(long)]
    pub net: PathBuf,
    /// config key: x0
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x0: Vec<f64>,
    /// Number of measurements (no config key; experiments use m_list).
    #[arg(long)]
    pub m: usize,
    /// config key: base_seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub sensing: SensingFlags,
    /// Measurement-set JSON to write (no config key).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write the labels as `i,y` CSV (no config key).
    #[arg(long)]
    pub labels_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// config key: net_spec.path
    #[arg(long)]
    pub net: PathBuf,
    /// Measurement-set JSON to read (no config key).
    #[arg(long)]
    pub measurements: PathBuf,
    /// config key: x0 (true latent signal, for the relative error)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Recovery-result JSON to write (no config key).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write the loss trace as `iteration,loss` CSV (no config key).
    #[arg(long)]
    pub trace_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment configuration JSON; built-in defaults when absent (no config key).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Omit timestamps from outputs so reruns are byte-identical (no config key).
    #[arg(long)]
    pub no_timestamp: bool,
    /// config key: output_dir
    #[arg(long = "output_dir")]
    pub output_dir: Option<PathBuf>,
    /// config key: base_seed
    #[arg(long = "base_seed")]
    pub base_seed: Option<u64>,
    /// config key: trials
    #[arg(long = "trials")]
    pub trials: Option<usize>,
    /// config key: m_list
    #[arg(long = "m_list", value_delimiter = ',')]
    pub m_list: Option<Vec<usize>>,
    /// config key: x0
    #[arg(long = "x0", value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// config key: net_spec.dims (random Gaussian network)
    #[arg(long = "net_spec.dims", value_delimiter = ',')]
    pub net_dims: Option<Vec<usize>>,
    /// config key: net_spec.seed
    #[arg(long = "net_spec.seed")]
    pub net_seed: Option<u64>,
    /// config key: net_spec.path
    #[arg(long = "net_spec.path", conflicts_with_all = ["net_dims", "net_seed"])]
    pub net_path: Option<PathBuf>,
    #[command(flatten)]
    pub sensing: SensingFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// config key: landscape.x0
    #[arg(long = "landscape.x0", value_delimiter = ',', allow_hyphen_values = true)]
    pub landscape_x0: Option<Vec<f64>>,
    /// config key: landscape.half_width
    #[arg(long = "landscape.half_width")]
    pub landscape_half_width: Option<f64>,
    /// config key: landscape.resolution
    #[arg(long = "landscape.resolution")]
    pub landscape_resolution: Option<usize>,
    /// config key: landscape.mode (surrogate | empirical)
    #[arg(long = "landscape.mode")]
    pub landscape_mode: Option<String>,
    /// config key: landscape.m
    #[arg(long = "landscape.m")]
    pub landscape_m: Option<usize>,
    /// config key: landscape.ball_factor
    #[arg(long = "landscape.ball_factor")]
    pub landscape_ball_factor: Option<f64>,
    /// config key: landscape.zero_radius
    #[arg(long = "landscape.zero_radius")]
    pub landscape_zero_radius: Option<f64>,
    /// config key: landscape.eps_wdc
    #[arg(long = "landscape.eps_wdc")]
    pub landscape_eps_wdc: Option<f64>,
    /// config key: wdc.n_pairs
    #[arg(long = "wdc.n_pairs")]
    pub wdc_n_pairs: Option<usize>,
    /// config key: ablation.dim
    #[arg(long = "ablation.dim")]
    pub ablation_dim: Option<usize>,
    /// config key: ablation.m
    #[arg(long = "ablation.m")]
    pub ablation_m: Option<usize>,
    /// config key: ablation.seeds
    #[arg(long = "ablation.seeds")]
    pub ablation_seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RhoArgs {
    /// Number of layers (no config key).
    #[arg(long)]
    pub n: usize,
}

fn set(root: &mut Value, path: &str, v: Value) {
    let mut cur = root;
    let mut parts = path.split('.').peekable();
    while let Some(p) = parts.next() {
        if !cur.is_object() {
            *cur = json!({});
        }
        let obj = cur.as_object_mut().expect("object");
        if parts.peek().is_none() {
            obj.insert(p.to_string(), v);
            return;
        }
        cur = obj.entry(p.to_string()).or_insert_with(|| json!({}));
    }
}

fn put<T: serde::Serialize>(root: &mut Value, path: &str, v: &Option<T>) {
    if let Some(v) = v {
        set(root, path, serde_json::to_value(v).expect("flag value serializes"));
    }
}

impl SensingFlags {
    fn apply(&self, root: &mut Value) {
        put(root, "sensing.dist", &self.dist.map(|d| d.name()));
        put(root, "sensing.lambda", &self.lambda);
        if let Some(kind) = &self.noise_kind {
            set(root, "sensing.noise", json!({ "kind": kind }));
        }
        put(root, "sensing.noise.sigma", &self.noise_sigma);
        put(root, "sensing.noise.scale", &self.noise_scale);
    }

    fn noise(&self) -> Result<NoiseModel> {
        let kind = self
            .noise_kind
            .as_deref()
            .unwrap_or(match (self.noise_sigma, self.noise_scale) {
                (Some(_), _) => "gaussian",
                (None, Some(_)) => "laplace",
                (None, None) => "none",
            });
        match kind {
            "none" => Ok(NoiseModel::None),
            "gaussian" => Ok(NoiseModel::Gaussian {
                sigma: self.noise_sigma.unwrap_or(0.0),
            }),
            "laplace" => Ok(NoiseModel::Laplace {
                scale: self.noise_scale.unwrap_or(0.0),
            }),
            other => Err(Error::Config(format!("unknown noise kind {other:?}"))),
        }
    }
}

impl SolverFlags {
    fn apply(&self, root: &mut Value) {
        put(root, "solver.step", &self.step);
        put(root, "solver.max_iters", &self.max_iters);
        put(root, "solver.tol_grad", &self.tol_grad);
        put(root, "solver.tol_loss", &self.tol_loss);
        put(root, "solver.negation_period", &self.negation_period);
        put(root, "solver.init_radius", &self.init_radius);
        put(root, "solver.seed", &self.seed);
        put(root, "solver.init", &self.init);
    }

    fn options(&self) -> Result<SolverOptions> {
        let mut root = json!({});
        self.apply(&mut root);
        let solver = root.get("solver").cloned().unwrap_or_else(|| json!({}));
        serde_json::from_value(solver).map_err(|e| Error::Config(format!("solver flags: {e}")))
    }
}

impl ExperimentArgs {
    fn config(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut root = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                serde_json::from_str(&text).map_err(|source| Error::Json {
                    path: path.clone(),
                    source,
                })?
            }
            None => {
                let out = format!("out/{}", kind.name());
                let cfg = match kind {
                    ExperimentKind::RateSweep => ExperimentConfig::rate_sweep_default(out),
                    ExperimentKind::DitherAblation => ExperimentConfig::dither_ablation_default(out),
                    ExperimentKind::Landscape => ExperimentConfig::landscape_default(out),
                    ExperimentKind::WdcCheck => ExperimentConfig::wdc_default(out),
                };
                serde_json::to_value(cfg).expect("config serializes")
            }
        };
        put(&mut root, "output_dir", &self.output_dir);
        put(&mut root, "base_seed", &self.base_seed);
        put(&mut root, "trials", &self.trials);
        put(&mut root, "m_list", &self.m_list);
        put(&mut root, "x0", &self.x0);
        if let Some(path) = &self.net_path {
            set(&mut root, "net_spec", json!({ "kind": "path", "path": path }));
        }
        if self.net_dims.is_some() || self.net_seed.is_some() {
            let cur = root.get("net_spec").cloned().unwrap_or(Value::Null);
            let is_gaussian = cur.get("kind").and_then(Value::as_str) == Some("gaussian");
            let dims = self
                .net_dims
                .clone()
                .map(Value::from)
                .or_else(|| is_gaussian.then(|| cur["dims"].clone()));
            let Some(dims) = dims else {
                return Err(Error::Config(
                    "--net_spec.seed needs --net_spec.dims for a non-Gaussian network".into(),
                ));
            };
            let seed = self
                .net_seed
                .map(Value::from)
                .or_else(|| is_gaussian.then(|| cur["seed"].clone()))
                .unwrap_or(json!(0));
            set(
                &mut root,
                "net_spec",
                json!({ "kind": "gaussian", "dims": dims, "seed": seed }),
            );
        }
        self.sensing.apply(&mut root);
        self.solver.apply(&mut root);
        put(&mut root, "landscape.x0", &self.landscape_x0);
        put(&mut root, "landscape.half_width", &self.landscape_half_width);
        put(&mut root, "landscape.resolution", &self.landscape_resolution);
        put(&mut root, "landscape.mode", &self.landscape_mode);
        put(&mut root, "landscape.m", &self.landscape_m);
        put(&mut root, "landscape.ball_factor", &self.landscape_ball_factor);
        put(&mut root, "landscape.zero_radius", &self.landscape_zero_radius);
        put(&mut root, "landscape.eps_wdc", &self.landscape_eps_wdc);
        put(&mut root, "wdc.n_pairs", &self.wdc_n_pairs);
        put(&mut root, "ablation.dim", &self.ablation_dim);
        put(&mut root, "ablation.m", &self.ablation_m);
        put(&mut root, "ablation.seeds", &self.ablation_seeds);

        let cfg: ExperimentConfig =
            serde_json::from_value(root).map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
        if cfg.experiment != kind {
            return Err(Error::Config(format!(
                "config describes a {} experiment, not {}",
                cfg.experiment.name(),
                kind.name()
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn run_options(&self) -> RunOptions {
        RunOptions {
            timestamp: (!self.no_timestamp)
                .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        }
    }
}

fn write_file(path: &Path, content: &[u8]) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn echo_config(cli: &Cli, cfg: &ExperimentConfig) {
    if cli.verbose > 0 {
        eprintln!("effective configuration:\n{}", cfg.to_json());
    }
}

fn threads(cli: &Cli) -> Result<Option<usize>> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    match std::env::var("ONEBIT_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("ONEBIT_THREADS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    if let Some(n) = threads(cli)? {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    match &cli.command {
        Command::GenNet(a) => {
            let net = match (&a.group_sparse, &a.dims) {
                (Some(kd), _) => match kd.as_slice() {
                    [k, d] => group_sparse_network(*k, *d)?,
                    _ => return Err(Error::Config("--group-sparse expects k,d".into())),
                },
                (None, Some(dims)) => ReluNetwork::new_random_gaussian(dims, WeightScale::default(), a.seed)?,
                (None, None) => return Err(Error::Config("gen-net needs --dims or --group-sparse".into())),
            };
            net.save(&a.output)?;
            writeln!(out, "wrote {} ({})", a.output.display(), net.label()).map_err(io)?;
        }
        Command::Measure(a) => {
            let net = ReluNetwork::load(&a.net)?;
            let theta0 = net.forward(&a.x0)?;
            let dist = a.sensing.dist.unwrap_or(SensingDist::Gaussian);
            let lambda = a.sensing.lambda.unwrap_or(10.0);
            let noise = a.sensing.noise()?;
            let s_seed = derive_seed(a.seed, &[Tag::Str("sensing")]);
            let q_seed = derive_seed(a.seed, &[Tag::Str("quantize")]);
            let sensing = sample_sensing(dist, a.m, net.output_dim(), s_seed)?;
            let ms = quantize(&sensing, &theta0, noise, lambda, q_seed)?.with_dist_name(dist.name());
            ms.save(&a.output)?;
            if let Some(p) = &a.labels_csv {
                write_with(p, |w| ms.write_labels_csv(w))?;
            }
            writeln!(out, "wrote {} (m={}, d={})", a.output.display(), a.m, net.output_dim()).map_err(io)?;
        }
        Command::Recover(a) => {
            let net = ReluNetwork::load(&a.net)?;
            let ms = MeasurementSet::load(&a.measurements)?;
            let opts = a.solver.options()?;
            let res = recover(&net, &ms, &opts, a.x0.as_deref())?;
            let text = serde_json::to_string_pretty(&res).expect("result serializes");
            write_file(&a.output, text.as_bytes())?;
            if let Some(p) = &a.trace_csv {
                write_with(p, |w| res.write_trace_csv(w))?;
            }
            writeln!(
                out,
                "final loss {} after {} iterations ({} restarts){}",
                res.final_loss(),
                res.iterations,
                res.restarts,
                res.relative_error
                    .map(|e| format!(", relative error {e}"))
                    .unwrap_or_default()
            )
            .map_err(io)?;
        }
        Command::Landscape(a) => {
            let cfg = a.config(ExperimentKind::Landscape)?;
            echo_config(cli, &cfg);
            let (rep, run) = run_landscape(&cfg, &a.run_options())?;
            let best = rep.argmin();
            writeln!(out, "grid argmin {:?} loss {}", best.x, best.loss).map_err(io)?;
            writeln!(out, "strict local minima: {}", rep.strict_local_minima().len()).map_err(io)?;
            writeln!(out, "wrote {}", run.dir.display()).map_err(io)?;
        }
        Command::RateSweep(a) => {
            let cfg = a.config(ExperimentKind::RateSweep)?;
            echo_config(cli, &cfg);
            let (res, run) = run_rate_sweep(&cfg, &a.run_options())?;
            for r in &res.rows {
                writeln!(out, "m={} median={} failures={}", r.m, r.median_rel_error, r.failures).map_err(io)?;
            }
            if let Some(s) = &res.slope {
                writeln!(out, "log-log slope {}", s.slope).map_err(io)?;
            }
            writeln!(out, "wrote {}", run.dir.display()).map_err(io)?;
        }
        Command::DitherAblation(a) => {
            let cfg = a.config(ExperimentKind::DitherAblation)?;
            echo_config(cli, &cfg);
            let (rep, run) = run_dither_ablation(&cfg, &a.run_options())?;
            writeln!(out, "undithered max d_H {}", rep.max_undithered_dh).map_err(io)?;
            writeln!(out, "separated on {}/{} seeds", rep.separated_count, rep.rows.len()).map_err(io)?;
            writeln!(out, "wrote {}", run.dir.display()).map_err(io)?;
        }
        Command::WdcCheck(a) => {
            let cfg = a.config(ExperimentKind::WdcCheck)?;
            echo_config(cli, &cfg);
            let (rep, run) = run_wdc_check(&cfg, &a.run_options())?;
            for l in &rep.layers {
                writeln!(out, "layer {} epsilon_hat {}", l.layer_index, l.epsilon_hat).map_err(io)?;
            }
            writeln!(out, "wrote {}", run.dir.display()).map_err(io)?;
        }
        Command::Rho(a) => {
            let rho = rho_n(a.n)?;
            let seq = rho_check_sequence(a.n)?;
            writeln!(out, "rho_{} = {}", a.n, rho).map_err(io)?;
            let seq: Vec<String> = seq.iter().map(|v| v.to_string()).collect();
            writeln!(out, "rho_check = [{}]", seq.join(", ")).map_err(io)?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 configuration, 2 numerical, 3 I/O.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}
