//! Sampled Weight Distribution Condition constants: how far the masked Gram
//! matrices of random Gaussian layers stray from their expectation.
//!
//! cargo run --release --example wdc_check

use onebit::experiments::NetSpec;
use onebit::landscape::{estimate_wdc, estimate_wdc_network, q_matrix};
use onebit::sensing::{sample_sensing, SensingDist};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Expected masked correlation at a right angle: I/4 + (e1 e2' + e2 e1')/(2 pi).
    let q = q_matrix(&[1.0, 0.0], &[0.0, 1.0])?;
    println!("Q(e1, e2) = {:?}", q.as_slice());

    for n in [20, 100, 1000, 5000] {
        let w = sample_sensing(SensingDist::Gaussian, n, 5, 7)?.scaled(1.0 / (n as f64).sqrt());
        let rep = estimate_wdc(&w, 500, 3)?;
        println!(
            "{n:>5} x 5 layer: epsilon_hat {:.4} over {} pairs",
            rep.epsilon_hat, rep.pair_count
        );
    }

    let net = NetSpec::reference().build()?;
    for (layer, w) in estimate_wdc_network(&net, 200, 1)?.iter().zip(net.weights()) {
        println!(
            "reference net layer {} ({} x {}): epsilon_hat {:.4}",
            layer.layer_index,
            w.rows(),
            w.cols(),
            layer.epsilon_hat
        );
    }
    Ok(())
}
