//! An explicit three-layer, offset-free ReLU network whose range contains
//! every nonnegative `k`-group-sparse vector with entries in `[0, 1]`.
//!
//! Input is `[x_1, …, x_k, z]`. The last coordinate `z` plays the role of a
//! bias: with `z = 1`, the first layer produces `σ(x_i)` and the offset nodes
//! `σ(r·z) = r` for `r = 1..=2d/k`. The second layer forms, for every block
//! `i` and slot `r`,
//!
//! ```text
//! Υ_r  = σ(σ(x_i) − 2σ(r·z))
//! Υ'_r = σ(σ(x_i) − 2σ(r·z) − σ(z))
//! ```
//!
//! and the output layer computes `Γ_r = σ(Υ_r − 2Υ'_r)`, a unit-height
//! triangle supported on `[2r, 2r + 2]` and peaking at `x_i = 2r + 1`.
//! Triangles for different `r` never overlap, so at most one slot per block
//! is nonzero.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::ReluNetwork;

fn block_len(k: usize, d: usize) -> Result<usize> {
    if k == 0 || d == 0 {
        return Err(Error::Config(format!(
            "group-sparse network needs k, d ≥ 1 (got k={k}, d={d})"
        )));
    }
    if !d.is_multiple_of(k) {
        return Err(Error::Config(format!(
            "group-sparse network needs d divisible by k (got d={d}, k={k})"
        )));
    }
    Ok(d / k)
}

pub fn group_sparse_network(k: usize, d: usize) -> Result<ReluNetwork> {
    let b = block_len(k, d)?;
    let width1 = k + 2 * b;
    let z = k; // index of the bias coordinate in the input
    let offset_node = |r: usize| k + r - 1; // node computing σ(r·z), r ≥ 1

    let mut w1 = Matrix::zeros(width1, k + 1);
    for i in 0..k {
        w1[(i, i)] = 1.0;
    }
    for r in 1..=2 * b {
        w1[(offset_node(r), z)] = r as f64;
    }

    // Second layer: rows (2·slot, 2·slot + 1) hold Υ_r and Υ'_r.
    let mut w2 = Matrix::zeros(2 * d, width1);
    let mut w3 = Matrix::zeros(d, 2 * d);
    for i in 0..k {
        for r in 1..=b {
            let slot = i * b + (r - 1);
            let (up, up_prime) = (2 * slot, 2 * slot + 1);
            w2[(up, i)] = 1.0;
            w2[(up, offset_node(r))] = -2.0;
            w2[(up_prime, i)] = 1.0;
            w2[(up_prime, offset_node(r))] = -2.0;
            w2[(up_prime, offset_node(1))] -= 1.0;
            w3[(slot, up)] = 1.0;
            w3[(slot, up_prime)] = -2.0;
        }
    }
    ReluNetwork::new(
        vec![k + 1, width1, 2 * d, d],
        vec![w1, w2, w3],
        format!("group_sparse k={k} d={d}"),
    )
}

/// Rising-edge input for a target: a slot value `v` at 1-based intra-block
/// index `r` becomes `x_i = 2r + v`; empty blocks map to `x_i = 0`; the bias
/// coordinate is `1`.
pub fn encode_group_sparse(target: &[f64], k: usize) -> Result<Vec<f64>> {
    let b = block_len(k, target.len())?;
    let mut x = Vec::with_capacity(k + 1);
    for (i, block) in target.chunks(b).enumerate() {
        let mut code = 0.0;
        let mut seen = false;
        for (j, &v) in block.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!(
                    "group-sparse entry {} = {v} lies outside [0, 1]",
                    i * b + j
                )));
            }
            if v != 0.0 {
                if seen {
                    return Err(Error::Domain(format!("block {i} has more than one nonzero entry")));
                }
                seen = true;
                code = 2.0 * (j + 1) as f64 + v;
            }
        }
        x.push(code);
    }
    x.push(1.0);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_widths() {
        let net = group_sparse_network(2, 8).unwrap();
        assert_eq!(net.dims(), &[3, 2 + 8, 16, 8]);
        assert_eq!(net.depth(), 3);
    }

    #[test]
    fn triangle_peak() {
        let net = group_sparse_network(1, 4).unwrap();
        let out = net.forward(&[2.0 * 2.0 + 1.0, 1.0]).unwrap();
        assert_eq!(out, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn nothing_fires_at_zero() {
        let net = group_sparse_network(1, 4).unwrap();
        assert_eq!(net.forward(&[0.0, 1.0]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn two_blocks() {
        let net = group_sparse_network(2, 8).unwrap();
        let out = net.forward(&[2.0 * 3.0 + 0.6, 2.0 * 1.0 + 0.25, 1.0]).unwrap();
        let mut want = vec![0.0; 8];
        want[2] = 0.6;
        want[4] = 0.25;
        for (o, w) in out.iter().zip(&want) {
            assert!((o - w).abs() <= 1e-12, "{out:?}");
        }
    }

    #[test]
    fn falling_edge_and_gaps() {
        // Between triangles (x in [0,2)) and on the falling edge.
        let net = group_sparse_network(1, 3).unwrap();
        assert_eq!(net.forward(&[1.5, 1.0]).unwrap(), vec![0.0; 3]);
        let out = net.forward(&[2.0 * 2.0 + 1.25, 1.0]).unwrap();
        assert!((out[1] - 0.75).abs() < 1e-12 && out[0] == 0.0 && out[2] == 0.0);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_group_sparse(&[0.0; 4], 1).unwrap(), vec![0.0, 1.0]);
        assert_eq!(encode_group_sparse(&[0.0, 0.0, 0.6, 0.0], 1).unwrap(), vec![6.6, 1.0]);
        assert_eq!(encode_group_sparse(&[0.0, 1.0, 0.0], 1).unwrap(), vec![5.0, 1.0]);
    }

    #[test]
    fn encode_rejects_invalid_targets() {
        assert!(matches!(
            encode_group_sparse(&[0.5, 0.5, 0.0, 0.0], 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(encode_group_sparse(&[-0.1, 0.0], 1), Err(Error::Domain(_))));
        assert!(matches!(encode_group_sparse(&[1.5, 0.0], 1), Err(Error::Domain(_))));
        assert!(matches!(encode_group_sparse(&[0.0; 5], 2), Err(Error::Config(_))));
        assert!(matches!(group_sparse_network(3, 8), Err(Error::Config(_))));
    }
}
