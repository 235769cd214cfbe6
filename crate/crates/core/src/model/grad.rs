//! Reverse-mode gradient of the joint loss.
//!
//! Kinks of `|y - q|` and of the hinge take subgradient 0.

use super::loss::{total_loss, LossBreakdown, LossConfig};
use super::pooling::{section_range, softmax, Prediction};
use super::ModelParams;
use crate::error::{Error, Result};
use crate::features::FeatureSequence;

/// Adds the pooling gradient of `d_pooled * sum_t u_t a_t` over `range`,
/// where `u` is the softmax of the logits in that range.
fn pool_backward(
    pred: &Prediction,
    range: std::ops::Range<usize>,
    d_pooled: f64,
    d_scores: &mut [f64],
    d_logits: &mut [f64],
) {
    let u = softmax(&pred.logits[range.clone()]);
    let a = &pred.scores[range.clone()];
    let pooled: f64 = u.iter().zip(a).map(|(u, a)| u * a).sum();
    for (k, t) in range.enumerate() {
        d_scores[t] += d_pooled * u[k];
        d_logits[t] += d_pooled * u[k] * (a[k] - pooled);
    }
}

/// Loss and its gradient with respect to every parameter of both branches.
pub fn backward(
    params: &ModelParams,
    x: &FeatureSequence,
    y: f64,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, ModelParams)> {
    if x.dim() != params.spec.input {
        return Err(Error::invalid(format!(
            "feature dimension {} does not match model input {}",
            x.dim(),
            params.spec.input
        )));
    }
    let score_trace = params.score.forward_traced(x.data());
    let weight_trace = params.weight.forward_traced(x.data());
    let pred = Prediction::from_branches(score_trace.output.clone(), weight_trace.output.clone())?;
    let loss = total_loss(&pred, y, cfg)?;

    let t = pred.frames();
    let mut d_scores = vec![0.0; t];
    let mut d_logits = vec![0.0; t];

    let d_q = if pred.q > y {
        1.0
    } else if pred.q < y {
        -1.0
    } else {
        0.0
    };
    if d_q != 0.0 {
        pool_backward(&pred, 0..t, d_q, &mut d_scores, &mut d_logits);
    }

    let hinge_active = cfg.margin - (loss.q_start - loss.q_end) > 0.0;
    if loss.gate_open && cfg.lambda_rank > 0.0 && hinge_active {
        let start = section_range(t, 0.0, cfg.start_fraction)?;
        let end = section_range(t, cfg.end_lo, cfg.end_hi)?;
        pool_backward(&pred, start, -cfg.lambda_rank, &mut d_scores, &mut d_logits);
        pool_backward(&pred, end, cfg.lambda_rank, &mut d_scores, &mut d_logits);
    }

    let mut grads = ModelParams::zeros(&params.spec);
    params
        .score
        .backward(x.data(), &score_trace, &d_scores, &mut grads.score);
    params
        .weight
        .backward(x.data(), &weight_trace, &d_logits, &mut grads.weight);

    if let Some((name, _)) = grads
        .tensors()
        .into_iter()
        .find(|(_, g)| g.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Numeric(format!("non-finite gradient in layer {name}")));
    }
    Ok((loss, grads))
}
