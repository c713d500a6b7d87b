//! Median recovery error against the number of measurements, with a
//! log-log slope fit. Writes CSV, JSON and a manifest.
//!
//! cargo run --release --example rate_sweep [out_dir]

use onebit::experiments::{run_rate_sweep, ExperimentConfig, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = std::env::args().nth(1).unwrap_or_else(|| "target/rate_sweep".into());
    let cfg = ExperimentConfig::rate_sweep_default(out_dir);
    let (res, run) = run_rate_sweep(&cfg, &RunOptions::default())?;

    println!("{:>6} {:>8} {:>8} {:>8} {:>6}", "m", "median", "q25", "q75", "fails");
    for r in &res.rows {
        println!(
            "{:>6} {:>8.4} {:>8.4} {:>8.4} {:>6}",
            r.m, r.median_rel_error, r.q25, r.q75, r.failures
        );
    }
    if let Some(fit) = &res.slope {
        println!("log-log slope {:.3} (m^-1/2 predicts -0.5)", fit.slope);
    }
    println!("wrote {}", run.dir.display());
    Ok(())
}
