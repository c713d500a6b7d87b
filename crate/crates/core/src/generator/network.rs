use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::linalg::Matrix;

/// How Gaussian weights are scaled at construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScale {
    /// Entries of the layer-`i` matrix are `N(0, 1/dᵢ)` where `dᵢ` is the
    /// layer's output width.
    #[default]
    VarianceOneOverFanout,
}

/// An offset-free ReLU network `G(x) = σ(W_n σ(… σ(W_1 x)))`.
///
/// ReLU is applied after every layer, including the last, so outputs are
/// entrywise nonnegative and `G(c·x) = c·G(x)` for every `c ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluNetwork {
    dims: Vec<usize>,
    weights: Vec<Matrix>,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    dims: Vec<usize>,
    weights: Vec<Vec<Vec<f64>>>,
    label: String,
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::Config(format!(
            "a network needs at least an input and one layer width, got dims {dims:?}"
        )));
    }
    if dims.contains(&0) {
        return Err(Error::Config(format!("layer widths must be positive, got {dims:?}")));
    }
    Ok(())
}

impl ReluNetwork {
    /// Assembles a network from explicit weights, checking every shape.
    pub fn new(dims: Vec<usize>, weights: Vec<Matrix>, label: impl Into<String>) -> Result<Self> {
        validate_dims(&dims)?;
        if weights.len() != dims.len() - 1 {
            return Err(Error::Config(format!(
                "{} layer widths need {} weight matrices, got {}",
                dims.len(),
                dims.len() - 1,
                weights.len()
            )));
        }
        for (i, w) in weights.iter().enumerate() {
            if w.rows() != dims[i + 1] || w.cols() != dims[i] {
                return Err(Error::Config(format!(
                    "layer {} weight has shape {}x{}, expected {}x{}",
                    i + 1,
                    w.rows(),
                    w.cols(),
                    dims[i + 1],
                    dims[i]
                )));
            }
            if !w.is_finite() {
                return Err(Error::Config(format!("layer {} has non-finite weights", i + 1)));
            }
        }
        Ok(Self {
            dims,
            weights,
            label: label.into(),
        })
    }

    /// Random Gaussian network; deterministic given `seed`.
    pub fn new_random_gaussian(dims: &[usize], rule: WeightScale, seed: u64) -> Result<Self> {
        validate_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let std = match rule {
                    WeightScale::VarianceOneOverFanout => (1.0 / fan_out as f64).sqrt(),
                };
                let data = (0..fan_in * fan_out)
                    .map(|_| std * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect();
                Matrix::from_row_major(fan_out, fan_in, data)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims.to_vec(), weights, format!("gaussian seed={seed}"))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Input dimension `k`.
    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    /// Output dimension `d`.
    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Number of layers `n`.
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_len("network input", self.input_dim(), x)?;
        let mut h = x.to_vec();
        for w in &self.weights {
            h = w.mul_vec(&h);
            h.iter_mut().for_each(|v| *v = relu(*v));
        }
        Ok(h)
    }

    /// Forward pass that also records the strict `> 0` activation masks.
    pub(crate) fn forward_with_masks(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<bool>>)> {
        ensure_len("network input", self.input_dim(), x)?;
        let mut h = x.to_vec();
        let mut masks = Vec::with_capacity(self.depth());
        for w in &self.weights {
            let pre = w.mul_vec(&h);
            let mask: Vec<bool> = pre.iter().map(|&v| v > 0.0).collect();
            h = pre
                .iter()
                .zip(&mask)
                .map(|(&v, &on)| if on { v } else { 0.0 })
                .collect();
            masks.push(mask);
        }
        Ok((h, masks))
    }

    /// Vector-Jacobian product `(Π W_{j,+,x})ᵀ r` through fixed masks.
    pub(crate) fn backprop(&self, masks: &[Vec<bool>], r: &[f64]) -> Vec<f64> {
        let mut g = r.to_vec();
        for (w, mask) in self.weights.iter().zip(masks).rev() {
            g.iter_mut().zip(mask).for_each(|(v, &on)| {
                if !on {
                    *v = 0.0
                }
            });
            g = w.tr_mul_vec(&g);
        }
        g
    }

    /// The linear branch of `G` that is active at `x`.
    pub fn active_branch(&self, x: &[f64]) -> Result<ActiveBranch<'_>> {
        let (_, masks) = self.forward_with_masks(x)?;
        Ok(ActiveBranch::from_masks(self, masks))
    }

    pub fn to_json(&self) -> String {
        let doc = NetworkDoc {
            dims: self.dims.clone(),
            weights: self.weights.iter().map(Matrix::to_rows).collect(),
            label: self.label.clone(),
        };
        serde_json::to_string(&doc).expect("network document serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, NetworkParseError> {
        let doc: NetworkDoc = serde_json::from_str(text).map_err(NetworkParseError::Json)?;
        let weights = doc
            .weights
            .iter()
            .map(|rows| Matrix::from_rows(rows))
            .collect::<Result<Vec<_>>>()
            .map_err(NetworkParseError::Invalid)?;
        Self::new(doc.dims, weights, doc.label).map_err(NetworkParseError::Invalid)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            NetworkParseError::Json(source) => Error::Json {
                path: path.to_path_buf(),
                source,
            },
            NetworkParseError::Invalid(err) => err,
        })
    }
}

#[derive(Debug)]
pub enum NetworkParseError {
    Json(serde_json::Error),
    Invalid(Error),
}

impl std::fmt::Display for NetworkParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NetworkParseError::Json(e) => write!(f, "{e}"),
            NetworkParseError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for NetworkParseError {}

#[inline]
pub(crate) fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// The masked layer matrices `W_{i,+,x}` at an anchor point and their
/// product, i.e. the linear map `H_x` that agrees with `G` on the anchor's
/// piece.
#[derive(Clone, Debug)]
pub struct ActiveBranch<'a> {
    net: &'a ReluNetwork,
    masks: Vec<Vec<bool>>,
    composite: Matrix,
}

impl<'a> ActiveBranch<'a> {
    pub(crate) fn from_masks(net: &'a ReluNetwork, masks: Vec<Vec<bool>>) -> Self {
        let mut composite: Option<Matrix> = None;
        for (w, mask) in net.weights().iter().zip(&masks) {
            let mut masked = w.clone();
            for (i, &on) in mask.iter().enumerate() {
                if !on {
                    masked.row_mut(i).iter_mut().for_each(|v| *v = 0.0);
                }
            }
            composite = Some(match composite {
                None => masked,
                Some(c) => masked.matmul(&c),
            });
        }
        Self {
            net,
            masks,
            composite: composite.expect("network has at least one layer"),
        }
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }

    /// `Π W_{i,+,x}`, a `d × k` matrix.
    pub fn composite(&self) -> &Matrix {
        &self.composite
    }

    /// `H_x(z)`, evaluated layer by layer with the anchor's masks. At
    /// `z = x` this performs exactly the arithmetic of [`ReluNetwork::forward`].
    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        ensure_len("branch input", self.net.input_dim(), z)?;
        let mut h = z.to_vec();
        for (w, mask) in self.net.weights().iter().zip(&self.masks) {
            h = w
                .mul_vec(&h)
                .into_iter()
                .zip(mask)
                .map(|(v, &on)| if on { v } else { 0.0 })
                .collect();
        }
        Ok(h)
    }

    /// `(Π W_{i,+,x})ᵀ r`.
    pub fn apply_transpose(&self, r: &[f64]) -> Result<Vec<f64>> {
        ensure_len("branch output", self.net.output_dim(), r)?;
        Ok(self.net.backprop(&self.masks, r))
    }
}
