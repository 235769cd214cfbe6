use serde::{Deserialize, Serialize};

use super::pooling::{section_score, Prediction};
use crate::error::{Error, Result};

/// Weights and section boundaries of the joint objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda_rank: f64,
    pub margin: f64,
    /// The rank term applies only when the target is at most this value.
    pub rank_gate_threshold: f64,
    /// Start section is `[0, start_fraction)`.
    pub start_fraction: f64,
    /// End section is `[end_lo, end_hi)`.
    pub end_lo: f64,
    pub end_hi: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda_rank: 1.0,
            margin: 1.0,
            rank_gate_threshold: 3.0,
            start_fraction: 0.3,
            end_lo: 0.6,
            end_hi: 0.9,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_rank >= 0.0 && self.lambda_rank.is_finite()) {
            return Err(Error::invalid("lambda_rank must be a nonnegative finite number"));
        }
        let ordered = 0.0 < self.start_fraction
            && self.start_fraction < self.end_lo
            && self.end_lo < self.end_hi
            && self.end_hi <= 1.0;
        if !ordered {
            return Err(Error::invalid(
                "section fractions must satisfy 0 < start < end_lo < end_hi <= 1",
            ));
        }
        Ok(())
    }

    pub fn gate_open(&self, y: f64) -> bool {
        y <= self.rank_gate_threshold
    }
}

/// Value and components of the joint loss for one video.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub regression: f64,
    /// Hinge value when the gate is open, otherwise 0. Not scaled by lambda.
    pub rank: f64,
    pub gate_open: bool,
    pub q_start: f64,
    pub q_end: f64,
}

/// `|y - q|`
pub fn regression_loss(q: f64, y: f64) -> f64 {
    (y - q).abs()
}

/// `max(0, 1 - (q_s - q_e))`
pub fn rank_loss(q_s: f64, q_e: f64) -> f64 {
    hinge(1.0, q_s - q_e)
}

pub(crate) fn hinge(margin: f64, diff: f64) -> f64 {
    (margin - diff).max(0.0)
}

/// `L_reg + lambda * L_rank * [y <= threshold]`, with the section scores
/// computed from section-local softmax weights.
pub fn total_loss(pred: &Prediction, y: f64, cfg: &LossConfig) -> Result<LossBreakdown> {
    cfg.validate()?;
    let q_start = section_score(pred, 0.0, cfg.start_fraction)?;
    let q_end = section_score(pred, cfg.end_lo, cfg.end_hi)?;
    let regression = regression_loss(pred.q, y);
    let gate_open = cfg.gate_open(y);
    let rank = if gate_open {
        hinge(cfg.margin, q_start - q_end)
    } else {
        0.0
    };
    Ok(LossBreakdown {
        total: regression + cfg.lambda_rank * rank,
        regression,
        rank,
        gate_open,
        q_start,
        q_end,
    })
}
