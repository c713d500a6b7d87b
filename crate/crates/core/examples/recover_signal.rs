//! Recover a latent code from dithered one-bit measurements of a random
//! generator's output, then compare against the truth.
//!
//! cargo run --release --example recover_signal [m]

use onebit::erm::{recover, SolverOptions};
use onebit::experiments::NetSpec;
use onebit::sensing::{quantize, sample_sensing, NoiseModel, SensingDist};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(8192);
    let net = NetSpec::reference().build()?;
    let x0 = [0.6, -0.8];
    let theta0 = net.forward(&x0)?;

    let a = sample_sensing(SensingDist::Gaussian, m, net.output_dim(), 1)?;
    let ms = quantize(&a, &theta0, NoiseModel::Gaussian { sigma: 0.1 }, 3.0, 2)?;
    let positive = ms.y().iter().filter(|&&y| y > 0).count();
    println!("m = {m}, d = {}, {positive} positive labels", net.output_dim());

    let res = recover(&net, &ms, &SolverOptions::default(), Some(&x0))?;
    println!("x_hat = {:?} (truth {x0:?})", res.x_hat);
    println!(
        "loss {:.5} after {} iterations, {} restarts",
        res.final_loss(),
        res.iterations,
        res.restarts
    );
    println!(
        "relative error ||G(x_hat) - G(x0)|| / ||G(x0)|| = {:.4}",
        res.relative_error.unwrap_or(f64::NAN)
    );
    Ok(())
}
