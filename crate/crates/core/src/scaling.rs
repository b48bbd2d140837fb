//! Log-log power-law regression for solver timing sweeps.
//!
//! A runtime law t = c · V^α is a straight line in log space with slope α.
//! The slope is the same in any log base; the intercept here is read in base
//! 10 so that extrapolated crossover volumes come out directly in decades
//! (a crossover abscissa of 15 means V ≈ 10^15).

use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line through (log₁₀ V, log₁₀ t) timing points.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    /// The fitted points in log₁₀ coordinates.
    pub points: Vec<(f64, f64)>,
    /// Power-law exponent α in t ∝ V^α.
    pub slope: f64,
    /// log₁₀ of the prefactor c.
    pub intercept: f64,
}

impl ScalingFit {
    /// Predicted log₁₀ time at the given log₁₀ volume.
    pub fn predict_log10(&self, log10_volume: f64) -> f64 {
        self.slope * log10_volume + self.intercept
    }
}

/// Fits a power law to (volume, seconds) pairs by ordinary least squares in
/// log₁₀-log₁₀ coordinates.
pub fn fit_scaling(timings: &[(f64, f64)]) -> Result<ScalingFit> {
    if timings.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "scaling fit needs at least 2 timing points, got {}",
            timings.len()
        )));
    }
    if timings
        .iter()
        .any(|&(v, t)| !(v > 0.0 && t > 0.0) || !v.is_finite() || !t.is_finite())
    {
        return Err(Error::InvalidInput(
            "scaling fit needs finite, strictly positive volumes and times".into(),
        ));
    }
    let points: Vec<(f64, f64)> = timings
        .iter()
        .map(|&(v, t)| (v.log10(), t.log10()))
        .collect();
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let var_x: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if var_x == 0.0 {
        return Err(Error::InvalidInput(
            "scaling fit needs at least two distinct volumes".into(),
        ));
    }
    let cov_xy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = cov_xy / var_x;
    let intercept = mean_y - slope * mean_x;
    Ok(ScalingFit {
        points,
        slope,
        intercept,
    })
}

/// log₁₀ of the volume where two fitted runtime laws predict equal time.
pub fn intersection_log10_volume(a: &ScalingFit, b: &ScalingFit) -> Result<f64> {
    let slope_gap = a.slope - b.slope;
    if slope_gap.abs() < 1e-12 {
        return Err(Error::InvalidInput(
            "runtime laws with equal slopes never cross".into(),
        ));
    }
    Ok((b.intercept - a.intercept) / slope_gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Noiseless synthetic law t = 10^intercept · V^slope over small grids.
    fn synthetic(slope: f64, intercept: f64) -> Vec<(f64, f64)> {
        [4.0_f64, 9.0, 16.0, 25.0, 36.0, 49.0]
            .iter()
            .map(|&v| (v, 10f64.powf(intercept + slope * v.log10())))
            .collect()
    }

    #[test]
    fn recovers_noiseless_power_laws() {
        for (slope, intercept) in [(4.24, -5.18), (4.51, -5.67), (4.57, -1.50), (3.89, 0.04)] {
            let fit = fit_scaling(&synthetic(slope, intercept)).unwrap();
            assert!(
                (fit.slope - slope).abs() < 1e-9,
                "slope {} vs {}",
                fit.slope,
                slope
            );
            assert!(
                (fit.intercept - intercept).abs() < 1e-9,
                "intercept {} vs {}",
                fit.intercept,
                intercept
            );
        }
    }

    #[test]
    fn constant_timings_fit_slope_zero() {
        let fit = fit_scaling(&[(4.0, 2.5), (9.0, 2.5), (16.0, 2.5)]).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!((fit.intercept - 2.5_f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn crossover_of_reference_laws_sits_near_fifteen_decades() {
        let steep = fit_scaling(&synthetic(4.24, -5.18)).unwrap();
        let shallow = fit_scaling(&synthetic(3.89, 0.04)).unwrap();
        let crossing = intersection_log10_volume(&steep, &shallow).unwrap();
        // (0.04 − (−5.18)) / (4.24 − 3.89) = 14.914…
        assert!((crossing - 15.0).abs() <= 1.0, "crossing {crossing}");
        // Both laws predict the same time there.
        assert!((steep.predict_log10(crossing) - shallow.predict_log10(crossing)).abs() < 1e-9);
    }

    #[test]
    fn parallel_laws_have_no_crossing() {
        let a = fit_scaling(&synthetic(4.0, -1.0)).unwrap();
        let b = fit_scaling(&synthetic(4.0, 1.0)).unwrap();
        assert!(intersection_log10_volume(&a, &b).is_err());
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(fit_scaling(&[(4.0, 1.0)]).is_err());
        assert!(fit_scaling(&[(4.0, 1.0), (4.0, 2.0)]).is_err());
        assert!(fit_scaling(&[(4.0, 1.0), (-9.0, 2.0)]).is_err());
        assert!(fit_scaling(&[(4.0, 0.0), (9.0, 2.0)]).is_err());
    }
}
