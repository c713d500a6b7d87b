//! Surrogate landscape of a random two-layer generator with a 2-D latent
//! space: a global basin at x0 and a shallower one near -rho_2 x0.
//!
//! cargo run --release --example two_basin_landscape [out_dir]

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use onebit::experiments::NetSpec;
use onebit::landscape::{landscape_grid, GridMode, GridSpec, Zone};
use onebit::linalg::distance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/two_basin".into()));
    std::fs::create_dir_all(&out_dir)?;

    let net = NetSpec::reference().build()?;
    let x0 = [1.0, 1.0];
    let report = landscape_grid(&net, &x0, &GridSpec::square(2.0, 81), GridMode::Surrogate)?;

    let best = report.argmin();
    println!("rho_n = {:.6}", report.rho_n);
    println!(
        "grid argmin {:?} (distance to x0 {:.3})",
        best.x,
        distance(&best.x, &x0)
    );
    let spurious = report.spurious_center();
    for m in report.strict_local_minima() {
        println!(
            "strict local minimum {:?} loss {:.5} (distance to -rho x0 {:.3})",
            m.x,
            m.loss,
            distance(&m.x, &spurious)
        );
    }
    let outside: Vec<_> = report.cells().filter(|c| c.zone == Zone::Outside).collect();
    let ok = outside.iter().filter(|c| c.descent_ok).count();
    println!("descent direction at {ok}/{} outside cells", outside.len());

    report.write_csv(BufWriter::new(File::create(out_dir.join("grid.csv"))?))?;
    report.write_svg(BufWriter::new(File::create(out_dir.join("heatmap.svg"))?), None)?;
    println!("wrote {}", out_dir.display());
    Ok(())
}
