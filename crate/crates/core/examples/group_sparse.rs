//! An explicit ReLU network whose range is exactly the nonnegative
//! k-group-sparse vectors: encode a target, push it through, get it back.
//!
//! cargo run --release --example group_sparse

use onebit::generator::{encode_group_sparse, group_sparse_network};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (k, d) = (3, 12);
    let net = group_sparse_network(k, d)?;
    println!("dims {:?}", net.dims());

    let mut target = vec![0.0; d];
    target[1] = 0.5;
    target[6] = 0.25;
    target[11] = 0.75;
    let code = encode_group_sparse(&target, k)?;
    let out = net.forward(&code)?;
    println!("target {target:?}");
    println!("code   {code:?}");
    println!("G(code) {out:?}");

    // One block, one slot at a time: a unit triangle peaking at x = 2r + 1.
    let single = group_sparse_network(1, 4)?;
    for i in 0..=24 {
        let x = 0.5 * i as f64;
        let y = single.forward(&[x, 1.0])?;
        println!("x = {x:>4.1}  {y:?}");
    }
    Ok(())
}
