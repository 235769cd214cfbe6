use std::ops::Range;

use super::{section_floor, ModelParams};
use crate::error::{Error, Result};
use crate::features::FeatureSequence;

/// Frame-level and pooled outputs of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Score-branch output per frame.
    pub scores: Vec<f64>,
    /// Weight-branch output per frame, before softmax.
    pub logits: Vec<f64>,
    /// Softmax of `logits` over the whole video.
    pub weights: Vec<f64>,
    /// Attention-pooled video score.
    pub q: f64,
}

impl Prediction {
    pub fn frames(&self) -> usize {
        self.scores.len()
    }

    /// Assembles a prediction from raw branch outputs.
    pub fn from_branches(scores: Vec<f64>, logits: Vec<f64>) -> Result<Self> {
        if scores.is_empty() || scores.len() != logits.len() {
            return Err(Error::invalid(
                "score and logit sequences must be non-empty and equal length",
            ));
        }
        let weights = softmax(&logits);
        let q = weights.iter().zip(&scores).map(|(u, a)| u * a).sum();
        Ok(Prediction {
            scores,
            logits,
            weights,
            q,
        })
    }
}

/// Numerically stable softmax (max-logit subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Runs both branches over every frame and pools the result.
pub fn forward(params: &ModelParams, x: &FeatureSequence) -> Result<Prediction> {
    if x.dim() != params.spec.input {
        return Err(Error::invalid(format!(
            "feature dimension {} does not match model input {}",
            x.dim(),
            params.spec.input
        )));
    }
    let scores = params.score.forward(x.data());
    let logits = params.weight.forward(x.data());
    Prediction::from_branches(scores, logits)
}

/// 0-based frame range for the fractional section `[lo, hi)` of a
/// `frames`-long video: `floor(lo T) .. floor(hi T)`, widened to hold at
/// least one frame.
pub fn section_range(frames: usize, lo: f64, hi: f64) -> Result<Range<usize>> {
    if frames == 0 {
        return Err(Error::invalid("empty video has no sections"));
    }
    if !(0.0..1.0).contains(&lo) || !(hi > lo && hi <= 1.0) {
        return Err(Error::invalid(format!("invalid section [{lo}, {hi})")));
    }
    let start = section_floor(lo, frames).min(frames - 1);
    let end = section_floor(hi, frames).max(start + 1).min(frames);
    Ok(start..end)
}

/// Pooled score of one section, with the weights renormalized by a softmax
/// over that section's logits only.
pub fn section_score(pred: &Prediction, lo: f64, hi: f64) -> Result<f64> {
    let range = section_range(pred.frames(), lo, hi)?;
    let local = softmax(&pred.logits[range.clone()]);
    Ok(local.iter().zip(&pred.scores[range]).map(|(u, a)| u * a).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Block;
    use crate::model::{Layer, MlpSpec};
    use ndarray::{array, Array2};

    #[test]
    fn softmax_of_singleton() {
        assert_eq!(softmax(&[3.7]), vec![1.0]);
    }

    #[test]
    fn uniform_weights() {
        let p = Prediction::from_branches(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(p.q, 2.0);
        let p = Prediction::from_branches(vec![4.2], vec![-9.0]).unwrap();
        assert_eq!(p.weights, vec![1.0]);
        assert_eq!(p.q, 4.2);
    }

    #[test]
    fn identical_frames_give_uniform_weights() {
        let spec = MlpSpec::new(2, vec![3]).unwrap();
        let mut params = ModelParams::zeros(&spec);
        for mlp in [&mut params.score, &mut params.weight] {
            mlp.layers[0] = Layer {
                weights: array![[0.5, -0.2], [0.1, 0.3], [1.0, 1.0]],
                bias: array![0.1, 0.0, -0.3],
            };
            mlp.layers[1].weights = array![[1.0, -2.0, 0.5]];
            mlp.layers[1].bias = array![0.7];
        }
        let data = Array2::from_shape_fn((4, 2), |(_, j)| [0.8, 0.4][j]);
        let x = FeatureSequence::new("v", data, vec![Block::new("semantic", 0, 2)]).unwrap();
        let p = forward(&params, &x).unwrap();
        for u in &p.weights {
            assert!((u - 0.25).abs() < 1e-15);
        }
        assert!((p.q - p.scores[0]).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let params = ModelParams::zeros(&MlpSpec::new(3, vec![2]).unwrap());
        let x = FeatureSequence::new("v", Array2::zeros((2, 2)), vec![Block::new("a", 0, 2)]).unwrap();
        assert!(matches!(forward(&params, &x), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn section_ranges() {
        assert_eq!(section_range(10, 0.0, 0.3).unwrap(), 0..3);
        assert_eq!(section_range(10, 0.6, 0.9).unwrap(), 6..9);
        assert_eq!(section_range(1, 0.0, 0.3).unwrap(), 0..1);
        assert_eq!(section_range(1, 0.6, 0.9).unwrap(), 0..1);
        assert_eq!(section_range(2, 0.6, 0.9).unwrap(), 1..2);
        assert_eq!(section_range(3, 0.6, 0.9).unwrap(), 1..2);
        assert_eq!(section_range(26, 0.6, 0.9).unwrap(), 15..23);
        assert!(section_range(5, 0.5, 0.5).is_err());
        assert!(section_range(0, 0.0, 0.3).is_err());
    }

    #[test]
    fn section_scores() {
        let scores: Vec<f64> = (1..=10).map(f64::from).collect();
        let p = Prediction::from_branches(scores, vec![0.0; 10]).unwrap();
        assert!((section_score(&p, 0.0, 0.3).unwrap() - 2.0).abs() < 1e-15);

        let p = Prediction::from_branches(vec![2.5, 9.0], vec![0.0, 800.0]).unwrap();
        assert_eq!(section_score(&p, 0.0, 1.0).unwrap(), 9.0);
        assert_eq!(section_score(&p, 0.0, 0.5).unwrap(), 2.5);
    }
}
