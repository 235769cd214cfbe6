//! Two-branch frame scorer with attention pooling.
//!
//! A score branch maps each frame to a quality score `A_t`; a weight branch
//! maps it to a logit whose softmax over the video gives `U_t`. The video
//! score is `q = sum_t U_t A_t`. Training combines an L1 regression term with
//! a hinge rank term asking the start section of a video to outscore its end
//! section.

mod checkpoint;
mod grad;
mod loss;
mod mlp;
mod pooling;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use grad::backward;
pub use loss::{rank_loss, regression_loss, total_loss, LossBreakdown, LossConfig};
pub use mlp::{Layer, Mlp};
pub use pooling::{forward, section_range, section_score, softmax, Prediction};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `floor(fraction * frames)`, robust to the representation error of
/// fractions such as 0.3 and 0.6.
pub fn section_floor(fraction: f64, frames: usize) -> usize {
    (fraction * frames as f64 + 1e-9).floor() as usize
}

/// Layer widths shared by both branches: `input -> hidden... -> 1`.
/// Hidden layers use ReLU, the output is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
}

impl MlpSpec {
    pub const DEFAULT_HIDDEN: [usize; 2] = [256, 64];

    pub fn new(input: usize, hidden: Vec<usize>) -> Result<Self> {
        let spec = MlpSpec { input, hidden };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_default_hidden(input: usize) -> Result<Self> {
        Self::new(input, Self::DEFAULT_HIDDEN.to_vec())
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden.contains(&0) {
            return Err(Error::invalid("MLP layer widths must be positive"));
        }
        Ok(())
    }

    /// `[input, hidden..., 1]`
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input);
        w.extend_from_slice(&self.hidden);
        w.push(1);
        w
    }
}

/// Weights of the score branch and the weight branch.
///
/// Gradients use the same shape, so this type doubles as the gradient
/// container returned by [`backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub spec: MlpSpec,
    pub score: Mlp,
    pub weight: Mlp,
}

impl ModelParams {
    pub fn zeros(spec: &MlpSpec) -> Self {
        ModelParams {
            spec: spec.clone(),
            score: Mlp::zeros(&spec.widths()),
            weight: Mlp::zeros(&spec.widths()),
        }
    }

    /// Every weight matrix and bias vector as a flat slice, with a stable
    /// name such as `score.0.w` or `weight.2.b`.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (branch, mlp) in [("score", &self.score), ("weight", &self.weight)] {
            for (i, layer) in mlp.layers.iter().enumerate() {
                out.push((format!("{branch}.{i}.w"), layer.weights.as_slice().unwrap()));
                out.push((format!("{branch}.{i}.b"), layer.bias.as_slice().unwrap()));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for mlp in [&mut self.score, &mut self.weight] {
            for layer in &mut mlp.layers {
                out.push(layer.weights.as_slice_mut().unwrap());
                out.push(layer.bias.as_slice_mut().unwrap());
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}
