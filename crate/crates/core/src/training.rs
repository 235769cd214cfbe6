//! Optimization of the two-branch scorer over a corpus of videos.
//!
//! One gradient step per video (videos differ in length), epochs visit the
//! corpus in a seeded shuffled order, and the optimizer is Adam. For a fixed
//! corpus, config and seed the result is bit-for-bit reproducible.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSequence;
use crate::model::{backward, forward, LossConfig, MlpSpec, ModelParams};

/// One video with its per-metric ground-truth labels.
#[derive(Debug, Clone)]
pub struct VideoSample {
    pub features: FeatureSequence,
    pub labels: BTreeMap<u32, f64>,
}

impl VideoSample {
    pub fn id(&self) -> &str {
        self.features.video_id()
    }

    pub fn label(&self, metric: u32) -> Result<f64> {
        self.labels
            .get(&metric)
            .copied()
            .ok_or_else(|| Error::invalid(format!("video {} has no label for metric {metric}", self.id())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub target_metric: u32,
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam: AdamConfig,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub loss: LossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            target_metric: crate::METRIC_COF,
            epochs: 60,
            learning_rate: 1e-4,
            adam: AdamConfig::default(),
            seed: 0,
            hidden: MlpSpec::DEFAULT_HIDDEN.to_vec(),
            loss: LossConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be finite and nonnegative"));
        }
        self.loss.validate()
    }
}

/// Mean loss terms over the per-video steps of one epoch, measured before
/// each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub mean_reg: f64,
    pub mean_rank: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub trace: Vec<EpochStats>,
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(spec: &MlpSpec, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::zeros(spec);
    for mlp in [&mut params.score, &mut params.weight] {
        for layer in &mut mlp.layers {
            let a = (6.0 / (layer.input() + layer.output()) as f64).sqrt();
            layer.weights.mapv_inplace(|_| rng.random_range(-a..a));
        }
    }
    params
}

struct Adam {
    cfg: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    fn new(cfg: AdamConfig, params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        Adam {
            cfg,
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn update(&mut self, params: &mut ModelParams, grads: &ModelParams, lr: f64) {
        self.step += 1;
        let AdamConfig { beta1, beta2, epsilon } = self.cfg;
        let bc1 = 1.0 - beta1.powi(self.step);
        let bc2 = 1.0 - beta2.powi(self.step);
        let grads = grads.tensors();
        for (k, p) in params.tensors_mut().into_iter().enumerate() {
            let g = grads[k].1;
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

/// Trains a fresh model on `samples` toward `cfg.target_metric`.
pub fn train(samples: &[VideoSample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let first = samples
        .first()
        .ok_or_else(|| Error::invalid("cannot train on an empty corpus"))?;
    let dim = first.features.dim();
    let targets = samples
        .iter()
        .map(|s| {
            if s.features.dim() != dim {
                return Err(Error::invalid(format!(
                    "video {} has feature dimension {}, expected {dim}",
                    s.id(),
                    s.features.dim()
                )));
            }
            s.label(cfg.target_metric)
        })
        .collect::<Result<Vec<f64>>>()?;

    let spec = MlpSpec::new(dim, cfg.hidden.clone())?;
    let mut params = init_params(&spec, cfg.seed);
    let mut adam = Adam::new(cfg.adam.clone(), &params);

    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order_rng.set_stream(1);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut order_rng);
        let (mut sum_loss, mut sum_reg, mut sum_rank) = (0.0, 0.0, 0.0);
        for &i in &order {
            let sample = &samples[i];
            let context = |msg: String| Error::Numeric(format!("epoch {epoch}, sample {}: {msg}", sample.id()));
            let (loss, grads) = backward(&params, &sample.features, targets[i], &cfg.loss).map_err(|e| match e {
                Error::Numeric(msg) => context(msg),
                other => other,
            })?;
            if !loss.total.is_finite() {
                return Err(context("non-finite loss".into()));
            }
            sum_loss += loss.total;
            sum_reg += loss.regression;
            sum_rank += loss.rank;
            adam.update(&mut params, &grads, cfg.learning_rate);
            if !params.is_finite() {
                return Err(context("parameters became non-finite".into()));
            }
        }
        let n = samples.len() as f64;
        trace.push(EpochStats {
            epoch,
            mean_loss: sum_loss / n,
            mean_reg: sum_reg / n,
            mean_rank: sum_rank / n,
        });
    }
    Ok(TrainOutcome { params, trace })
}

/// Pooled score `q` for each sample.
pub fn predict(params: &ModelParams, samples: &[VideoSample]) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|s| forward(params, &s.features).map(|p| p.q))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Block;
    use ndarray::Array2;

    fn sample(id: &str, t: usize, d: usize, level: f64, y: f64) -> VideoSample {
        let data = Array2::from_shape_fn((t, d), |(i, j)| level * ((i + j) % 3) as f64 / 3.0);
        VideoSample {
            features: FeatureSequence::new(id, data, vec![Block::new("semantic", 0, d)]).unwrap(),
            labels: BTreeMap::from([(crate::METRIC_COF, y)]),
        }
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            hidden: vec![8, 4],
            epochs: 5,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn init_is_seeded() {
        let spec = MlpSpec::new(5, vec![4, 3]).unwrap();
        let a = init_params(&spec, 42);
        assert_eq!(a, init_params(&spec, 42));
        assert_ne!(a, init_params(&spec, 43));
        for mlp in [&a.score, &a.weight] {
            for layer in &mlp.layers {
                assert!(layer.bias.iter().all(|&b| b == 0.0));
                let bound = (6.0 / (layer.input() + layer.output()) as f64).sqrt();
                assert!(layer.weights.iter().all(|w| w.abs() < bound));
            }
        }
    }

    #[test]
    fn zero_learning_rate_leaves_params() {
        let samples = vec![sample("a", 6, 3, 1.0, 2.0), sample("b", 4, 3, 0.5, 4.0)];
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..small_cfg()
        };
        let out = train(&samples, &cfg).unwrap();
        let spec = MlpSpec::new(3, cfg.hidden.clone()).unwrap();
        assert_eq!(out.params, init_params(&spec, cfg.seed));
    }

    #[test]
    fn single_sample_fits() {
        let samples = vec![sample("a", 8, 4, 1.0, 4.2)];
        let cfg = TrainConfig {
            epochs: 1000,
            learning_rate: 1e-2,
            ..small_cfg()
        };
        let out = train(&samples, &cfg).unwrap();
        let last = out.trace.last().unwrap();
        assert!(last.mean_loss < 0.05, "final loss {}", last.mean_loss);
    }

    #[test]
    fn trace_is_deterministic() {
        let samples: Vec<_> = (0..4)
            .map(|i| sample(&format!("v{i}"), 5 + i, 3, i as f64, 1.5 + i as f64))
            .collect();
        let a = train(&samples, &small_cfg()).unwrap();
        let b = train(&samples, &small_cfg()).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.params, b.params);
        assert_eq!(a.trace.len(), 5);
    }

    #[test]
    fn rejects_bad_corpus() {
        assert!(train(&[], &small_cfg()).is_err());
        let mut s = sample("a", 3, 2, 1.0, 2.0);
        s.labels.clear();
        assert!(train(&[s], &small_cfg()).is_err());
        let mixed = vec![sample("a", 3, 2, 1.0, 2.0), sample("b", 3, 3, 1.0, 2.0)];
        assert!(train(&mixed, &small_cfg()).is_err());
        let cfg = TrainConfig {
            epochs: 0,
            ..small_cfg()
        };
        assert!(train(&[sample("a", 3, 2, 1.0, 2.0)], &cfg).is_err());
    }

    #[test]
    fn divergence_reports_epoch_and_sample() {
        let samples = vec![sample("boom_a", 3, 2, 1.0, 2.0), sample("boom_b", 4, 2, 0.7, 4.0)];
        let cfg = TrainConfig {
            learning_rate: 1e308,
            ..small_cfg()
        };
        match train(&samples, &cfg) {
            Err(Error::Numeric(msg)) => {
                assert!(msg.contains("epoch 1"), "{msg}");
                assert!(msg.contains("sample boom_"), "{msg}");
            }
            other => panic!("expected numeric error, got {other:?}"),
        }
    }
}
