//! Simple linear regression on scalar embeddings and the overall F-test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

/// Default local-linear bandwidth for the real-data workflow.
pub const DEFAULT_BANDWIDTH: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub intercept: f64,
    pub slope: f64,
    pub sample_size: usize,
    pub regressor_mean: f64,
    pub response_mean: f64,
}

impl RegressionFit {
    pub fn predict(&self, z: f64) -> f64 {
        self.intercept + self.slope * z
    }

    pub fn fitted(&self, zs: &[f64]) -> Vec<f64> {
        zs.iter().map(|&z| self.predict(z)).collect()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Ordinary least squares of `ys` on `zs`.
pub fn fit_slr(zs: &[f64], ys: &[f64]) -> Result<RegressionFit> {
    if zs.len() != ys.len() {
        return Err(Error::argument(format!(
            "{} regressors but {} responses",
            zs.len(),
            ys.len()
        )));
    }
    if zs.len() < 2 {
        return Err(Error::DegenerateDesign(format!(
            "simple linear regression needs at least two points, got {}",
            zs.len()
        )));
    }
    let z_bar = mean(zs);
    let y_bar = mean(ys);
    let sxx: f64 = zs.iter().map(|z| (z - z_bar) * (z - z_bar)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateDesign("all regressors are identical".into()));
    }
    let sxy: f64 = zs.iter().zip(ys).map(|(z, y)| (z - z_bar) * (y - y_bar)).sum();
    let slope = sxy / sxx;
    Ok(RegressionFit {
        intercept: y_bar - slope * z_bar,
        slope,
        sample_size: zs.len(),
        regressor_mean: z_bar,
        response_mean: y_bar,
    })
}

pub fn predict_slr(fit: &RegressionFit, z: f64) -> f64 {
    fit.predict(z)
}

/// `F = (s - 2) * sum (fitted - y_bar)^2 / sum (y - fitted)^2`.
///
/// A perfect fit (zero residual sum of squares with a non-zero explained sum)
/// returns `+inf`; if both sums vanish the statistic is `0`.
pub fn f_statistic(ys: &[f64], fitted: &[f64]) -> Result<f64> {
    if ys.len() != fitted.len() {
        return Err(Error::argument("responses and fitted values differ in length"));
    }
    let s = ys.len();
    if s < 3 {
        return Err(Error::argument(format!("the F-test needs s >= 3, got {s}")));
    }
    let y_bar = mean(ys);
    let ssr: f64 = fitted.iter().map(|f| (f - y_bar) * (f - y_bar)).sum();
    let sse: f64 = ys.iter().zip(fitted).map(|(y, f)| (y - f) * (y - f)).sum();
    if sse == 0.0 {
        return Ok(if ssr > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok((s - 2) as f64 * ssr / sse)
}

/// Upper-`level` critical value of `F(1, df2)` and the p-value of `f`.
pub fn f_quantile_and_pvalue(f: f64, df2: usize, level: f64) -> Result<(f64, f64)> {
    if df2 == 0 {
        return Err(Error::argument("df2 must be at least 1"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Range {
            what: "level",
            value: level,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let critical = special::f_quantile(1.0 - level, 1.0, df2 as f64);
    let p = if f.is_finite() {
        special::f_sf(f, 1.0, df2 as f64).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok((critical, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    /// `+inf` for a perfect fit; serialised as `null` in JSON.
    pub f_value: f64,
    pub df: (usize, usize),
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub level: f64,
}

/// Test `H0: slope = 0` at `level`.
pub fn f_test(zs: &[f64], ys: &[f64], level: f64) -> Result<TestReport> {
    let fit = fit_slr(zs, ys)?;
    let f = f_statistic(ys, &fit.fitted(zs))?;
    let df2 = zs.len() - 2;
    let (critical, p) = f_quantile_and_pvalue(f, df2, level)?;
    Ok(TestReport {
        f_value: f,
        df: (1, df2),
        critical_value: critical,
        p_value: p,
        reject: f > critical,
        level,
    })
}

/// Local linear regression with Gaussian kernel
/// `w_i = exp(-(z_i - query)^2 / (2 h^2))`, evaluated at `query`.
pub fn fit_local_linear(zs: &[f64], ys: &[f64], bandwidth: f64, query: f64) -> Result<f64> {
    if zs.len() != ys.len() {
        return Err(Error::argument("regressors and responses differ in length"));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::argument(format!("bandwidth = {bandwidth} must be positive")));
    }
    let w: Vec<f64> = zs
        .iter()
        .map(|z| (-(z - query) * (z - query) / (2.0 * bandwidth * bandwidth)).exp())
        .collect();
    let effective = w.iter().filter(|&&v| v > 0.0).count();
    if effective < 2 {
        return Err(Error::BandwidthTooSmall { bandwidth, effective });
    }
    let sw: f64 = w.iter().sum();
    let zw = w.iter().zip(zs).map(|(w, z)| w * z).sum::<f64>() / sw;
    let yw = w.iter().zip(ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(zs).map(|(w, z)| w * (z - zw) * (z - zw)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateDesign("weighted regressors have no spread".into()));
    }
    let sxy: f64 = w
        .iter()
        .zip(zs.iter().zip(ys))
        .map(|(w, (z, y))| w * (z - zw) * (y - yw))
        .sum();
    Ok(yw + sxy / sxx * (query - zw))
}

/// `1 - sum (y_i - m(z_i))^2 / sum (y_i - y_bar)^2` with `m` the local
/// linear smoother evaluated at each observed regressor.
pub fn local_linear_r_squared(zs: &[f64], ys: &[f64], bandwidth: f64) -> Result<f64> {
    let y_bar = mean(ys);
    let mut sse = 0.0;
    for (&z, &y) in zs.iter().zip(ys) {
        let m = fit_local_linear(zs, ys, bandwidth, z)?;
        sse += (y - m) * (y - m);
    }
    let sst: f64 = ys.iter().map(|y| (y - y_bar) * (y - y_bar)).sum();
    Ok(1.0 - sse / sst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let zs = [0.1, 0.4, 0.9, 1.3];
        let ys: Vec<f64> = zs.iter().map(|z| 2.0 + 5.0 * z).collect();
        let fit = fit_slr(&zs, &ys).unwrap();
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.slope - 5.0).abs() < 1e-12);
    }

    #[test]
    fn constant_response() {
        let fit = fit_slr(&[0.0, 1.0, 2.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.intercept, 4.0);
    }

    #[test]
    fn hand_ols() {
        // z_bar = 1, y_bar = 1, sxy = 3, sxx = 2
        let fit = fit_slr(&[0.0, 1.0, 2.0], &[0.0, 0.0, 3.0]).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-15);
        assert!((fit.intercept + 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_designs() {
        assert!(matches!(fit_slr(&[1.0, 1.0], &[0.0, 2.0]), Err(Error::DegenerateDesign(_))));
        assert!(matches!(fit_slr(&[1.0], &[0.0]), Err(Error::DegenerateDesign(_))));
        assert!(matches!(fit_slr(&[1.0, 2.0], &[0.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn prediction() {
        let fit = RegressionFit {
            intercept: 2.0,
            slope: 5.0,
            sample_size: 3,
            regressor_mean: 0.0,
            response_mean: 2.0,
        };
        assert_eq!(predict_slr(&fit, 0.5), 4.5);
        let f = fit_slr(&[0.3, 0.7, 1.9], &[1.0, -2.0, 0.5]).unwrap();
        assert!((f.predict(f.regressor_mean) - f.response_mean).abs() < 1e-14);
    }

    #[test]
    fn f_statistic_cases() {
        let ys = [1.0, 2.0, 4.0];
        assert_eq!(f_statistic(&ys, &[7.0 / 3.0; 3]).unwrap(), 0.0);
        // fitted (-0.5, 1, 2.5): SSR = 4.5, SSE = 1.5
        let fitted = fit_slr(&[0.0, 1.0, 2.0], &[0.0, 0.0, 3.0]).unwrap().fitted(&[0.0, 1.0, 2.0]);
        let f = f_statistic(&[0.0, 0.0, 3.0], &fitted).unwrap();
        assert!((f - 3.0).abs() < 1e-12);
        let scaled = f_statistic(&[0.0, 0.0, -6.0], &fitted.iter().map(|x| -2.0 * x).collect::<Vec<_>>()).unwrap();
        assert!((scaled - f).abs() < 1e-12);
        assert!(f_statistic(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn perfect_fit_rejects() {
        let zs = [0.0, 0.5, 1.0, 2.0];
        let ys = [1.0, 2.0, 3.0, 5.0];
        let r = f_test(&zs, &ys, 0.05).unwrap();
        assert!(r.reject);
        assert!(r.p_value < 1e-12);
        let (c, p) = f_quantile_and_pvalue(f64::INFINITY, 3, 0.05).unwrap();
        assert_eq!(p, 0.0);
        assert!(c > 10.0);
    }

    #[test]
    fn quantile_edge_cases() {
        let (_, p) = f_quantile_and_pvalue(0.0, 3, 0.05).unwrap();
        assert_eq!(p, 1.0);
        assert!(f_quantile_and_pvalue(1.0, 0, 0.05).is_err());
        assert!(f_quantile_and_pvalue(1.0, 3, 1.0).is_err());
    }

    #[test]
    fn cdf_quantile_round_trip() {
        for &x in &[0.5, 1.0, 5.0] {
            let p = special::f_cdf(x, 1.0, 3.0);
            let q = special::f_quantile(p, 1.0, 3.0);
            assert!((q - x).abs() < 1e-8, "{x} -> {q}");
        }
    }

    #[test]
    fn local_linear_on_a_line() {
        let zs = [0.0, 0.2, 0.5, 0.9];
        let ys: Vec<f64> = zs.iter().map(|z| 1.0 - 3.0 * z).collect();
        for &h in &[0.05, 0.3, 10.0] {
            let v = fit_local_linear(&zs, &ys, h, 0.37).unwrap();
            assert!((v - (1.0 - 3.0 * 0.37)).abs() < 1e-10);
        }
    }

    #[test]
    fn local_linear_large_bandwidth_is_global_ols() {
        let zs = [0.0, 0.3, 0.4, 0.8, 1.0];
        let ys = [1.0, 0.2, 0.9, 2.0, 1.1];
        let global = fit_slr(&zs, &ys).unwrap().predict(0.6);
        let local = fit_local_linear(&zs, &ys, 1e6, 0.6).unwrap();
        assert!((global - local).abs() < 1e-6);
    }

    #[test]
    fn local_linear_weighted_oracle() {
        let zs = [0.48, 0.5, 0.53];
        let ys = [1.0, 3.0, 2.0];
        let (h, q) = (0.03, 0.5);
        // oracle: solve the 2x2 weighted normal equations for (b0, b1) in
        // y ~ b0 + b1 (z - q)
        let w: Vec<f64> = zs.iter().map(|z: &f64| (-(z - q).powi(2) / (2.0 * h * h)).exp()).collect();
        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..3 {
            let u = zs[i] - q;
            s0 += w[i];
            s1 += w[i] * u;
            s2 += w[i] * u * u;
            t0 += w[i] * ys[i];
            t1 += w[i] * u * ys[i];
        }
        let b0 = (s2 * t0 - s1 * t1) / (s0 * s2 - s1 * s1);
        let v = fit_local_linear(&zs, &ys, h, q).unwrap();
        assert!((v - b0).abs() < 1e-12, "{v} vs {b0}");
    }

    #[test]
    fn local_linear_tiny_bandwidth() {
        let err = fit_local_linear(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0], 1e-3, 0.0).unwrap_err();
        assert!(matches!(err, Error::BandwidthTooSmall { effective: 1, .. }));
    }

    proptest! {
        #[test]
        fn normal_equations_hold(zs in prop::collection::vec(-10.0f64..10.0, 3..30), seed: u64) {
            let mut rng = crate::seed::rng(seed);
            let ys: Vec<f64> = zs.iter().map(|z| 0.5 * z + rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
            if let Ok(fit) = fit_slr(&zs, &ys) {
                let res: Vec<f64> = zs.iter().zip(&ys).map(|(z, y)| y - fit.predict(*z)).collect();
                let scale = 1.0 + zs.iter().map(|z| z.abs()).fold(0.0, f64::max);
                prop_assert!(res.iter().sum::<f64>().abs() < 1e-10 * scale * zs.len() as f64);
                prop_assert!(res.iter().zip(&zs).map(|(r, z)| r * z).sum::<f64>().abs() < 1e-10 * scale * scale * zs.len() as f64);
            }
        }

        #[test]
        fn f_is_affine_invariant(zs in prop::collection::vec(-3.0f64..3.0, 4..20), c in 0.1f64..10.0, m in -5.0f64..5.0, neg: bool, seed: u64) {
            let mut rng = crate::seed::rng(seed);
            let ys: Vec<f64> = zs.iter().map(|z| z + rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
            let c = if neg { -c } else { c };
            let mapped: Vec<f64> = zs.iter().map(|z| c * z + m).collect();
            if let (Ok(a), Ok(b)) = (f_test(&zs, &ys, 0.05), f_test(&mapped, &ys, 0.05)) {
                prop_assert!((a.f_value - b.f_value).abs() <= 1e-10 * a.f_value.max(1.0));
            }
        }

        #[test]
        fn p_value_decreases_with_f(f1 in 0.0f64..50.0, df in 1e-3f64..50.0, df2 in 1usize..40) {
            let (_, p1) = f_quantile_and_pvalue(f1, df2, 0.05).unwrap();
            let (_, p2) = f_quantile_and_pvalue(f1 + df, df2, 0.05).unwrap();
            prop_assert!(p2 <= p1);
            prop_assert!((0.0..=1.0).contains(&p1));
        }
    }
}
