//! The angle recursion behind the spurious basin at -rho_n x0, for depths
//! 1 to 20.
//!
//! cargo run --example rho_sequence

use onebit::landscape::{g_angle, rho_check_sequence, rho_n};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "g(pi) = {} (pi/2 = {})",
        g_angle(std::f64::consts::PI)?,
        std::f64::consts::FRAC_PI_2
    );
    let angles = rho_check_sequence(20)?;
    println!("{:>3} {:>10} {:>10}", "n", "angle", "rho_n");
    for (i, a) in angles.iter().enumerate() {
        println!("{:>3} {a:>10.6} {:>10.6}", i + 1, rho_n(i + 1)?);
    }
    Ok(())
}
