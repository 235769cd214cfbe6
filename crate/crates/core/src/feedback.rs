//! Frame-level feedback: per-frame scores and attention weights of a scored
//! video, written as CSV for plotting.

use std::path::Path;

use crate::error::Result;
use crate::features::FeatureSequence;
use crate::model::{forward, ModelParams};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FeedbackRow {
    /// Frame index at 1 fps.
    pub t_seconds: f64,
    pub score_raw: f64,
    /// Min-max normalized over the video; 0.5 everywhere when scores are
    /// constant.
    pub score_norm: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackTrace {
    pub video_id: String,
    pub rows: Vec<FeedbackRow>,
}

pub fn trace(params: &ModelParams, features: &FeatureSequence) -> Result<FeedbackTrace> {
    let pred = forward(params, features)?;
    let min = pred.scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = pred.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let rows = pred
        .scores
        .iter()
        .zip(&pred.weights)
        .enumerate()
        .map(|(t, (&a, &u))| FeedbackRow {
            t_seconds: t as f64,
            score_raw: a,
            score_norm: if span > 0.0 { (a - min) / span } else { 0.5 },
            weight: u,
        })
        .collect();
    Ok(FeedbackTrace {
        video_id: features.video_id().to_string(),
        rows,
    })
}

impl FeedbackTrace {
    /// Pooled score recomputed from the trace.
    pub fn pooled(&self) -> f64 {
        self.rows.iter().map(|r| r.weight * r.score_raw).sum()
    }

    /// CSV with header `t_seconds,score_raw,score_norm,weight`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}
