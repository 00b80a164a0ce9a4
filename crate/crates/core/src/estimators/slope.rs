//! Least-squares growth rates of `log count` against `t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimateMode {
    Classical,
    Rescaled,
    RescaledOnK,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub epsilon: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `log count`.
    pub residual: f64,
    pub points: usize,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub mode: EstimateMode,
    /// Sorted by increasing `ε`.
    pub per_epsilon: Vec<SlopeFit>,
    pub extrapolated: f64,
    /// `ε` whose slope became `extrapolated`.
    pub extrapolated_epsilon: f64,
    pub t_window: (f64, f64),
    pub residual_threshold: f64,
    /// `(t, ε, count)` rows the fit used.
    pub counts: Vec<(f64, f64, usize)>,
}

/// Ordinary least squares `y ≈ slope·x + intercept`; returns
/// `(slope, intercept, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Per-`ε` slope of `log count` versus `t`. The extrapolated entropy is the
/// slope at the smallest `ε` whose residual is at most `residual_threshold`
/// (or, when none qualifies, the best-fitting `ε`).
pub fn entropy_slope(
    counts: &[(f64, f64, usize)],
    mode: EstimateMode,
    residual_threshold: f64,
) -> Result<EntropyEstimate> {
    let mut eps: Vec<f64> = counts.iter().map(|c| c.1).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.is_empty() {
        return Err(Error::InsufficientData("no counts to fit".into()));
    }
    let mut fits = Vec::with_capacity(eps.len());
    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    for &e in &eps {
        let mut pts: Vec<(f64, f64)> = counts
            .iter()
            .filter(|c| c.1 == e)
            .map(|c| (c.0, c.2 as f64))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
        ts.dedup();
        if ts.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "ε = {e}: need at least 3 distinct t values, got {}",
                ts.len()
            )));
        }
        if pts.iter().any(|p| p.1 < 1.0) {
            return Err(Error::InvalidArgument(format!("ε = {e}: counts must be ≥ 1")));
        }
        t_min = t_min.min(ts[0]);
        t_max = t_max.max(*ts.last().unwrap());
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let (slope, intercept, residual) = linear_fit(&x, &y);
        fits.push(SlopeFit {
            epsilon: e,
            slope,
            intercept,
            residual,
            points: pts.len(),
            accepted: residual <= residual_threshold,
        });
    }
    let chosen = fits.iter().find(|f| f.accepted).unwrap_or_else(|| {
        fits.iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual))
            .unwrap()
    });
    Ok(EntropyEstimate {
        mode,
        extrapolated: chosen.slope,
        extrapolated_epsilon: chosen.epsilon,
        per_epsilon: fits.clone(),
        t_window: (t_min, t_max),
        residual_threshold,
        counts: counts.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_counts_have_zero_slope() {
        let c: Vec<_> = (1..=5).map(|t| (t as f64, 0.1, 7)).collect();
        let e = entropy_slope(&c, EstimateMode::Classical, 0.1).unwrap();
        assert_eq!(e.extrapolated, 0.0);
    }

    #[test]
    fn doubling_counts_give_log_two() {
        let c: Vec<_> = (1..=8).map(|t| (t as f64, 0.1, 1usize << t)).collect();
        let e = entropy_slope(&c, EstimateMode::Rescaled, 0.1).unwrap();
        assert!((e.extrapolated - 2f64.ln()).abs() < 1e-12);
        assert_eq!(e.per_epsilon[0].residual, 0.0);
    }

    #[test]
    fn too_few_times_is_an_error() {
        let c = vec![(1.0, 0.1, 2), (2.0, 0.1, 4)];
        assert!(matches!(
            entropy_slope(&c, EstimateMode::Classical, 0.1),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn smallest_accepted_epsilon_wins() {
        let mut c = Vec::new();
        for t in 1..=4 {
            // ε = 0.1 is noisy, ε = 0.2 is clean doubling.
            c.push((t as f64, 0.1, if t % 2 == 0 { 100 } else { 1 }));
            c.push((t as f64, 0.2, 1usize << t));
        }
        let e = entropy_slope(&c, EstimateMode::Classical, 0.2).unwrap();
        assert_eq!(e.extrapolated_epsilon, 0.2);
        assert!(!e.per_epsilon[0].accepted);
    }
}
