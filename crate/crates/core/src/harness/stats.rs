//! Monte Carlo moments, rate fits and pathwise statistics.

use serde::Serialize;

use crate::error::{Error, Result};

/// `ê_q = (S⁻¹ Σ_s x_s^q)^{1/q}` with its jackknife standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentError {
    pub q: f64,
    pub value: f64,
    pub se: f64,
}

/// Empirical `q`-th moment root of non-negative samples. Values are
/// scaled by their maximum first, so identical samples give the same
/// result for every `q`.
pub fn moment_error(values: &[f64], q: f64) -> Result<MomentError> {
    if values.is_empty() {
        return Err(Error::Experiment("no samples to aggregate".into()));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::Config(format!("moment order {q} must be at least 1")));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Experiment(format!("sample error {v} is not a finite non-negative number")));
    }
    let scale = values.iter().fold(0.0f64, |m, &v| m.max(v));
    if scale == 0.0 {
        return Ok(MomentError { q, value: 0.0, se: 0.0 });
    }
    let powers: Vec<f64> = values.iter().map(|v| (v / scale).powf(q)).collect();
    let s = powers.len() as f64;
    let total: f64 = powers.iter().sum();
    let value = scale * (total / s).powf(1.0 / q);
    let se = if powers.len() < 2 {
        0.0
    } else {
        let loo: Vec<f64> = powers
            .iter()
            .map(|p| scale * ((total - p).max(0.0) / (s - 1.0)).powf(1.0 / q))
            .collect();
        let mean = loo.iter().sum::<f64>() / s;
        ((s - 1.0) / s * loo.iter().map(|t| (t - mean).powi(2)).sum::<f64>()).sqrt()
    };
    Ok(MomentError { q, value, se })
}

/// Least squares line through `(ln x, ln y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::RateFit(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::RateFit(format!("non-positive point ({}, {})", p.0, p.1)));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::RateFit("all resolutions coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        points: points.to_vec(),
    })
}

/// Linearly interpolated empirical quantile, `p ∈ [0, 1]`.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Empirical distribution of `K̂_s = max_n ‖e^{n,s}‖ / k^{γ₁}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathwiseStats {
    pub gamma1: f64,
    pub k: f64,
    /// `(p, quantile)` for `p = 0.05, 0.25, 0.5, 0.75, 0.95`
    pub quantiles: Vec<(f64, f64)>,
    pub p95: f64,
    #[serde(skip)]
    pub k_hat: Vec<f64>,
}

pub fn pathwise_stats(max_errors: &[f64], k: f64, gamma1: f64) -> Result<PathwiseStats> {
    if !(gamma1 > 0.0) {
        return Err(Error::Config(format!("gamma1 must be positive, got {gamma1}")));
    }
    if max_errors.is_empty() {
        return Err(Error::Experiment("no samples for pathwise statistics".into()));
    }
    let scale = k.powf(gamma1);
    let k_hat: Vec<f64> = max_errors.iter().map(|e| e / scale).collect();
    let quantiles = [0.05, 0.25, 0.5, 0.75, 0.95]
        .iter()
        .map(|&p| (p, quantile(&k_hat, p)))
        .collect();
    Ok(PathwiseStats {
        gamma1,
        k,
        quantiles,
        p95: quantile(&k_hat, 0.95),
        k_hat,
    })
}

/// Largest ratio between 95th percentiles over a ladder.
pub fn quantile_stability(stats: &[PathwiseStats]) -> f64 {
    spread(stats.iter().map(|s| s.p95))
}

/// `max / min` of positive values; infinite if any value is not positive.
pub fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in values {
        if !(v > 0.0) {
            return f64::INFINITY;
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_laws_are_recovered() {
        let half: Vec<(f64, f64)> = [16.0f64, 32.0, 64.0, 128.0].iter().map(|m| (1.0 / m, 3.0 * (1.0 / m).sqrt())).collect();
        let fit = fit_rate(&half).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let square: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|h| (*h, 7.0 * h * h)).collect();
        assert!((fit_rate(&square).unwrap().slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bad_fits_are_rejected() {
        assert!(matches!(fit_rate(&[(1.0, 1.0), (2.0, 2.0)]), Err(Error::RateFit(_))));
        assert!(matches!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]), Err(Error::RateFit(_))));
        assert!(matches!(fit_rate(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]), Err(Error::RateFit(_))));
    }

    #[test]
    fn identical_samples_give_identical_moments() {
        let v = vec![0.37; 5];
        for q in [2.0, 4.0, 8.0] {
            let m = moment_error(&v, q).unwrap();
            assert_eq!(m.value, 0.37);
            assert_eq!(m.se, 0.0);
        }
        assert_eq!(moment_error(&[0.2], 2.0).unwrap().value, 0.2);
    }

    #[test]
    fn jackknife_of_the_mean_square() {
        // for q = 1 the jackknife reproduces the usual standard error of the mean
        let v = [1.0, 2.0, 4.0, 7.0];
        let m = moment_error(&v, 1.0).unwrap();
        let mean = 3.5;
        let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 3.0).sqrt();
        assert!((m.value - mean).abs() < 1e-14);
        assert!((m.se - sd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.95), 4.8);
        assert_eq!(quantile(&v, 0.0), 1.0);
    }

    #[test]
    fn synthetic_pathwise_ratios_do_not_depend_on_k() {
        let c = [0.5, 1.0, 2.0, 3.0];
        let stats: Vec<PathwiseStats> = [1.0 / 16.0, 1.0 / 64.0]
            .iter()
            .map(|&k: &f64| {
                let e: Vec<f64> = c.iter().map(|ci| ci * k.powf(0.25)).collect();
                pathwise_stats(&e, k, 0.25).unwrap()
            })
            .collect();
        for s in &stats {
            for (a, b) in s.k_hat.iter().zip(&c) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        assert!((quantile_stability(&stats) - 1.0).abs() < 1e-14);
        assert!(pathwise_stats(&[1.0], 0.1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn moments_are_monotone_in_q(v in prop::collection::vec(0.0f64..10.0, 2..50)) {
            let e2 = moment_error(&v, 2.0).unwrap().value;
            let e4 = moment_error(&v, 4.0).unwrap().value;
            let e8 = moment_error(&v, 8.0).unwrap().value;
            prop_assert!(e2 <= e4 && e4 <= e8);
        }

        #[test]
        fn spread_is_at_least_one(v in prop::collection::vec(0.1f64..10.0, 1..20)) {
            prop_assert!(spread(v.into_iter()) >= 1.0);
        }
    }
}
