//! Empirical risk `L(x) = ‖G(x)‖² − (2λ/m) Σ yᵢ⟨aᵢ, G(x)⟩` and its
//! minimization.
//!
//! The measurements enter only through `s = (λ/m) Σ yᵢ aᵢ`, so the risk is
//! evaluated as `‖G(x)‖² − 2⟨s, G(x)⟩` in `O(network)` time regardless of
//! `m`. Replacing `s` by `G(x₀)` gives the infinite-sample surrogate.

use std::borrow::Cow;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::generator::ReluNetwork;
use crate::linalg::{distance, dot, norm, scale, sub};
use crate::sensing::Observations;

/// The risk for a fixed network and back-projection vector.
#[derive(Clone, Debug)]
pub struct Risk<'a> {
    net: &'a ReluNetwork,
    target: Cow<'a, [f64]>,
}

impl<'a> Risk<'a> {
    pub fn empirical<O: Observations + ?Sized>(net: &'a ReluNetwork, obs: &'a O) -> Result<Self> {
        ensure_len("measurement dimension", net.output_dim(), obs.backprojection())?;
        Ok(Self {
            net,
            target: Cow::Borrowed(obs.backprojection()),
        })
    }

    /// `‖G(x)‖² − 2⟨G(x₀), G(x)⟩`, the large-`m` limit of the risk.
    pub fn surrogate(net: &'a ReluNetwork, x0: &[f64]) -> Result<Self> {
        Ok(Self {
            net,
            target: Cow::Owned(net.forward(x0)?),
        })
    }

    pub fn network(&self) -> &ReluNetwork {
        self.net
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let g = self.net.forward(x)?;
        Ok(dot(&g, &g) - 2.0 * dot(&self.target, &g))
    }

    /// `v_x = 2 (ΠW_{j,+,x})ᵀ (G(x) − s)`, using strict `> 0` masks at `x`.
    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (g, masks) = self.net.forward_with_masks(x)?;
        let r = scale(2.0, &sub(&g, &self.target));
        Ok(self.net.backprop(&masks, &r))
    }

    /// One-sided derivative along `ŵ`, computed from the gradient on the
    /// linear piece entered by moving from `x` towards `ŵ`. The piece is
    /// identified by the masks at the probe point `x + t₀ŵ` with
    /// `t₀ = 1e−9·max(1, ‖x‖)`.
    pub fn directional_derivative(&self, x: &[f64], w: &[f64]) -> Result<f64> {
        ensure_len("direction", self.net.input_dim(), w)?;
        let wn = norm(w);
        if wn == 0.0 || !wn.is_finite() {
            return Err(Error::Domain("directional derivative needs a nonzero direction".into()));
        }
        let w_hat = scale(1.0 / wn, w);
        let t0 = 1e-9 * norm(x).max(1.0);
        let probe: Vec<f64> = x.iter().zip(&w_hat).map(|(a, b)| a + t0 * b).collect();
        let branch = self.net.active_branch(&probe)?;
        let hx = branch.apply(x)?;
        let r = scale(2.0, &sub(&hx, &self.target));
        let grad = branch.apply_transpose(&r)?;
        Ok(dot(&grad, &w_hat))
    }

    /// Central differences, one coordinate at a time.
    pub fn finite_diff_gradient(&self, x: &[f64], h: f64) -> Result<Vec<f64>> {
        ensure_len("network input", self.net.input_dim(), x)?;
        if !(h > 0.0) {
            return Err(Error::Domain(format!(
                "finite-difference step must be positive, got {h}"
            )));
        }
        let mut probe = x.to_vec();
        (0..x.len())
            .map(|j| {
                probe[j] = x[j] + h;
                let up = self.value(&probe)?;
                probe[j] = x[j] - h;
                let down = self.value(&probe)?;
                probe[j] = x[j];
                Ok((up - down) / (2.0 * h))
            })
            .collect()
    }
}

pub fn loss<O: Observations + ?Sized>(net: &ReluNetwork, obs: &O, x: &[f64]) -> Result<f64> {
    Risk::empirical(net, obs)?.value(x)
}

pub fn subgradient<O: Observations + ?Sized>(net: &ReluNetwork, obs: &O, x: &[f64]) -> Result<Vec<f64>> {
    Risk::empirical(net, obs)?.subgradient(x)
}

pub fn directional_derivative<O: Observations + ?Sized>(
    net: &ReluNetwork,
    obs: &O,
    x: &[f64],
    w: &[f64],
) -> Result<f64> {
    Risk::empirical(net, obs)?.directional_derivative(x, w)
}

pub fn surrogate_loss(net: &ReluNetwork, x: &[f64], x0: &[f64]) -> Result<f64> {
    Risk::surrogate(net, x0)?.value(x)
}

pub fn finite_diff_gradient<O: Observations + ?Sized>(
    net: &ReluNetwork,
    obs: &O,
    x: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    Risk::empirical(net, obs)?.finite_diff_gradient(x, h)
}

/// The risk evaluated directly on an ambient signal, i.e. with an identity
/// generator: `‖θ‖² − 2⟨s, θ⟩`.
pub fn ambient_loss<O: Observations + ?Sized>(obs: &O, theta: &[f64]) -> Result<f64> {
    ensure_len("signal", obs.ambient_dim(), theta)?;
    Ok(dot(theta, theta) - 2.0 * dot(obs.backprojection(), theta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Initial trial step of the backtracking line search.
    pub step: f64,
    pub max_iters: usize,
    /// Stop when `‖v_x‖ ≤ tol_grad`.
    pub tol_grad: f64,
    /// Stop when the loss changed by at most `tol_loss` (relative) over the
    /// last ten accepted iterations.
    pub tol_loss: f64,
    /// Try the negated iterate every this many iterations (0 disables
    /// periodic checks; the check at convergence always runs).
    pub negation_period: usize,
    pub init_radius: f64,
    pub seed: u64,
    /// Explicit starting point; random direction of norm `init_radius` otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    pub backtrack_factor: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            step: 0.1,
            max_iters: 2000,
            tol_grad: 1e-8,
            tol_loss: 1e-12,
            negation_period: 50,
            init_radius: 0.1,
            seed: 0,
            init: None,
            backtrack_factor: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 60,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!(
                "solver step must be positive, got {}",
                self.step
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("solver max_iters must be at least 1".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Config("backtrack_factor must lie in (0, 1)".into()));
        }
        if !(self.init_radius >= 0.0) {
            return Err(Error::Config("init_radius must be nonnegative".into()));
        }
        Ok(())
    }

    fn initial_point(&self, k: usize) -> Result<Vec<f64>> {
        if let Some(init) = &self.init {
            ensure_len("solver init", k, init)?;
            return Ok(init.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        loop {
            let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = norm(&v);
            if n > 1e-12 {
                return Ok(scale(self.init_radius / n, &v));
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    pub g_x_hat: Vec<f64>,
    /// `(iteration, loss)` for the start and every accepted move.
    pub loss_trace: Vec<(usize, f64)>,
    pub restarts: usize,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
    pub converged: bool,
    pub config_echo: SolverOptions,
}

impl RecoveryResult {
    pub fn final_loss(&self) -> f64 {
        self.loss_trace.last().map_or(f64::NAN, |&(_, l)| l)
    }

    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,loss")?;
        for (it, l) in &self.loss_trace {
            writeln!(out, "{it},{l}")?;
        }
        Ok(())
    }
}

pub const RELATIVE_ERROR_FLOOR: f64 = 1e-15;

/// `‖G(x̂) − G(x₀)‖ / max(‖G(x₀)‖, 1e−15)`.
pub fn relative_error(g_hat: &[f64], g0: &[f64]) -> f64 {
    distance(g_hat, g0) / norm(g0).max(RELATIVE_ERROR_FLOOR)
}

fn non_finite(iteration: usize, trace: &[(usize, f64)]) -> Error {
    let tail: Vec<String> = trace
        .iter()
        .rev()
        .take(5)
        .rev()
        .map(|(i, l)| format!("{i}:{l}"))
        .collect();
    Error::Numerical(format!(
        "non-finite loss at iteration {iteration}; trace tail [{}]",
        tail.join(", ")
    ))
}

/// Subgradient descent with Armijo backtracking and negation restarts.
///
/// Each iteration steps along `−v_x`, halving the trial step until
/// `L(x − αv) ≤ L(x) − c·α‖v‖²`. Every `negation_period` iterations, and
/// whenever the descent stalls, the negated iterate is tried and taken if its
/// loss is strictly lower; after such a jump descent resumes. All accepted
/// moves decrease the loss, so the final iterate is also the best one.
pub fn recover<O: Observations + ?Sized>(
    net: &ReluNetwork,
    obs: &O,
    opts: &SolverOptions,
    x0: Option<&[f64]>,
) -> Result<RecoveryResult> {
    opts.validate()?;
    let risk = Risk::empirical(net, obs)?;
    let mut x = opts.initial_point(net.input_dim())?;
    let mut l = risk.value(&x)?;
    let mut trace = vec![(0, l)];
    if !l.is_finite() {
        return Err(non_finite(0, &trace));
    }
    let mut restarts = 0;
    let mut converged = false;
    let mut it = 0;

    let try_negate = |x: &mut Vec<f64>, l: &mut f64| -> Result<bool> {
        let neg = scale(-1.0, x);
        let ln = risk.value(&neg)?;
        if ln < *l {
            *x = neg;
            *l = ln;
            Ok(true)
        } else {
            Ok(false)
        }
    };

    while it < opts.max_iters {
        it += 1;
        let v = risk.subgradient(&x)?;
        let gn2 = dot(&v, &v);
        let mut stalled = gn2.sqrt() <= opts.tol_grad;
        if !stalled {
            let mut alpha = opts.step;
            let mut accepted = None;
            for _ in 0..opts.max_backtracks {
                let cand: Vec<f64> = x.iter().zip(&v).map(|(a, g)| a - alpha * g).collect();
                let lc = risk.value(&cand)?;
                if !lc.is_finite() {
                    trace.push((it, lc));
                    return Err(non_finite(it, &trace));
                }
                if lc <= l - opts.sufficient_decrease * alpha * gn2 {
                    accepted = Some((cand, lc));
                    break;
                }
                alpha *= opts.backtrack_factor;
            }
            match accepted {
                Some((cand, lc)) => {
                    x = cand;
                    l = lc;
                    trace.push((it, l));
                }
                None => stalled = true,
            }
        }
        if !stalled && trace.len() > 10 {
            let before = trace[trace.len() - 11].1;
            stalled = (before - l).abs() <= opts.tol_loss * l.abs().max(f64::MIN_POSITIVE);
        }
        let periodic = opts.negation_period > 0 && it % opts.negation_period == 0;
        if (stalled || periodic) && try_negate(&mut x, &mut l)? {
            restarts += 1;
            trace.push((it, l));
            continue;
        }
        if stalled {
            converged = true;
            break;
        }
    }

    let g_x_hat = net.forward(&x)?;
    let relative_error = match x0 {
        Some(x0) => Some(relative_error(&g_x_hat, &net.forward(x0)?)),
        None => None,
    };
    Ok(RecoveryResult {
        x_hat: x,
        g_x_hat,
        loss_trace: trace,
        restarts,
        iterations: it,
        relative_error,
        converged,
        config_echo: opts.clone(),
    })
}
