//! Dithered one-bit compressed sensing with ReLU generative priors.
//!
//! Signals are modeled as `θ₀ = G(x₀)` for an offset-free ReLU network `G`
//! with a low-dimensional input, observed through one-bit measurements
//! `yᵢ = sign(⟨aᵢ, θ₀⟩ + ξᵢ + τᵢ)` with uniform dither `τᵢ`, and recovered by
//! minimizing `L(x) = ‖G(x)‖² − (2λ/m) Σ yᵢ⟨aᵢ, G(x)⟩`.
//!
//! - [`generator`]: networks, active branches, the group-sparse
//!   construction and linear-region counting.
//! - [`sensing`]: sensing matrices, dithered quantization, streamed sketches.
//! - [`erm`]: the empirical risk, its subgradient and the descent solver.
//! - [`landscape`]: WDC matrices, angle recursions, radii and grid scans.
//! - [`experiments`]: rate sweeps, the dither ablation and manifests.
//! - [`cli`]: the `onebit` command.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod erm;
pub mod error;
pub mod experiments;
pub mod generator;
pub mod landscape;
pub mod linalg;
pub mod seed;
pub mod sensing;

pub use error::{Error, Result};
