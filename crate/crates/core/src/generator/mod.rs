//! Offset-free ReLU generators and the piecewise-linear structure the rest of
//! the crate leans on.

mod group_sparse;
mod network;
mod pieces;

pub use group_sparse::{encode_group_sparse, group_sparse_network};
pub use network::{ActiveBranch, NetworkParseError, ReluNetwork, WeightScale};
pub use pieces::{brute_force_region_count, count_pieces_bound, Hyperplane, ORACLE_MAX_DIM, ORACLE_MAX_PLANES};

use crate::error::Result;

pub fn forward(net: &ReluNetwork, x: &[f64]) -> Result<Vec<f64>> {
    net.forward(x)
}

pub fn active_branch<'a>(net: &'a ReluNetwork, x: &[f64]) -> Result<ActiveBranch<'a>> {
    net.active_branch(x)
}

/// `H_x(z)` for the branch active at the anchor `x`.
pub fn branch_apply(branch: &ActiveBranch<'_>, z: &[f64]) -> Result<Vec<f64>> {
    branch.apply(z)
}
