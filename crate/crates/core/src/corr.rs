//! Rank transform and the two correlation coefficients used throughout:
//! Spearman (SROCC) and Pearson (PLCC).
//!
//! Ties receive average ranks. A constant input has no variance and yields a
//! [`Correlation`] with value 0 and `degenerate` set, so that averages over
//! many runs stay finite.

use crate::error::{Error, Result};

/// A correlation coefficient together with a degeneracy marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    /// Set when either input had zero variance; `value` is then 0.
    pub degenerate: bool,
}

impl Correlation {
    fn degenerate() -> Self {
        Correlation {
            value: 0.0,
            degenerate: true,
        }
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::invalid(format!("non-finite value at index {i}"))),
        None => Ok(()),
    }
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::invalid("correlation needs at least 2 values"));
    }
    check_finite(a)?;
    check_finite(b)
}

/// Fractional ranks in `[1, n]`; tied values share the mean of the ranks
/// they span.
pub fn rank_transform(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::invalid("rank transform of an empty vector"));
    }
    check_finite(v)?;

    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));

    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start..end hold 1-based ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    Ok(ranks)
}

fn pearson_unchecked(a: &[f64], b: &[f64]) -> Correlation {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;

    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Correlation::degenerate();
    }
    Correlation {
        value: (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// Pearson linear correlation coefficient.
pub fn plcc(a: &[f64], b: &[f64]) -> Result<Correlation> {
    check_pair(a, b)?;
    Ok(pearson_unchecked(a, b))
}

/// Spearman rank correlation: Pearson correlation of the average ranks.
pub fn srocc(a: &[f64], b: &[f64]) -> Result<Correlation> {
    check_pair(a, b)?;
    let ra = rank_transform(a)?;
    let rb = rank_transform(b)?;
    Ok(pearson_unchecked(&ra, &rb))
}
