//! Number of linear pieces of a ReLU layer: the closed-form bound against a
//! brute-force count of regions cut out by random hyperplanes.
//!
//! cargo run --release --example piece_count

use onebit::generator::{brute_force_region_count, count_pieces_bound, Hyperplane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("{:>2} {:>3} {:>8} {:>8} {:>6}", "k", "n", "central", "affine", "bound");
    for k in 1..=3usize {
        for n in [1, 2, 4, 8, 12] {
            let mut count = |affine: bool| {
                let planes: Vec<Hyperplane> = (0..n)
                    .map(|_| Hyperplane {
                        normal: (0..k).map(|_| rng.random_range(-1.0..1.0)).collect(),
                        offset: if affine { rng.random_range(-1.0..1.0) } else { 0.0 },
                    })
                    .collect();
                brute_force_region_count(&planes)
            };
            let central = count(false)?;
            let affine = count(true)?;
            let bound = count_pieces_bound(n as u64, k as u64);
            println!("{k:>2} {n:>3} {central:>8} {affine:>8} {bound:>6}");
        }
    }
    println!(
        "bound for a 1024-wide layer on a 2-D input: {}",
        count_pieces_bound(1024, 2)
    );
    Ok(())
}
