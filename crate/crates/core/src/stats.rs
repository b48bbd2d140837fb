//! Sample summaries: mean and box-plot statistics with 1.5·IQR whiskers.

use serde::Serialize;

use crate::error::{Error, Result};

/// Five-number box-plot summary plus mean and outliers.
///
/// Whiskers extend to the most extreme data points within 1.5·IQR of the
/// quartiles; everything beyond is listed as an outlier.
#[derive(Debug, Clone, Serialize)]
pub struct BoxStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

fn check_sample(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("sample has a non-finite value".into()));
    }
    Ok(())
}

/// Arithmetic mean of a nonempty finite sample.
pub fn sample_mean(values: &[f64]) -> Result<f64> {
    check_sample(values)?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Quantile of an ascending-sorted sample by linear interpolation between
/// order statistics (position h = (n−1)·p).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let h = (sorted.len() - 1) as f64 * p;
    let low = h.floor() as usize;
    let high = h.ceil() as usize;
    sorted[low] + (h - low as f64) * (sorted[high] - sorted[low])
}

/// Box-plot summary of a nonempty finite sample.
pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    check_sample(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let fence_low = q1 - 1.5 * iqr;
    let fence_high = q3 + 1.5 * iqr;
    let whisker_low = sorted
        .iter()
        .copied()
        .find(|&v| v >= fence_low)
        .unwrap_or(q1);
    let whisker_high = sorted
        .iter()
        .rev()
        .copied()
        .find(|&v| v <= fence_high)
        .unwrap_or(q3);
    let outliers = sorted
        .iter()
        .copied()
        .filter(|&v| v < fence_low || v > fence_high)
        .collect();
    Ok(BoxStats {
        count: sorted.len(),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        outliers,
    })
}
