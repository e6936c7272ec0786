//! Residual diagnostics: weighted Ljung-Box, ARCH LM and portmanteau Q.
//!
//! Weighted Ljung-Box (Fisher–Gallagher) with lag `m`:
//! `Q_W = Σ_{k=1..m} w_k n(n+2) ρ̂²_k/(n−k)`, `w_k = (m − k + 1)/m`. Its null
//! distribution is approximated by a gamma law with shape
//! `a = 3m(m+1)²/(4D)` and scale `b = 2D/(3m(m+1))`, where
//! `D = 2m² + 3m + 1 − 6m·fitdf`, matching the first two moments.
//!
//! ARCH LM regresses `ε²_t` on an intercept and `ε²_{t−1}, …, ε²_{t−q}`;
//! the statistic is `(n − q) R²` against `χ²(q)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TestKind {
    /// Weighted Ljung-Box on standardized residuals.
    WlbSr,
    /// Weighted Ljung-Box on squared standardized residuals.
    WlbSsr,
    ArchLm,
    /// Ljung-Box on squared residuals.
    Pq,
    /// Classical Ljung-Box.
    Lb,
}

impl TestKind {
    pub fn code(self) -> &'static str {
        match self {
            TestKind::WlbSr => "WLB-SR",
            TestKind::WlbSsr => "WLB-SSR",
            TestKind::ArchLm => "ARCH-LM",
            TestKind::Pq => "PQ",
            TestKind::Lb => "LB",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Families of tests selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFamily {
    Wlb,
    ArchLm,
    Pq,
}

impl FromStr for TestFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wlb" => Ok(TestFamily::Wlb),
            "archlm" | "arch" | "lm" => Ok(TestFamily::ArchLm),
            "pq" => Ok(TestFamily::Pq),
            other => Err(Error::InvalidInput(format!("unknown test `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub lag: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Sample autocorrelations `ρ̂_1 … ρ̂_m`; `None` for a constant series.
pub fn acf(x: &[f64], m: usize) -> Option<Vec<f64>> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = d.iter().map(|v| v * v).sum();
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(denom > 0.0) || denom <= (n as f64) * (scale * 1e-12).powi(2) {
        return None;
    }
    Some(
        (1..=m)
            .map(|k| (k..n).map(|t| d[t] * d[t - k]).sum::<f64>() / denom)
            .collect(),
    )
}

fn check_lag(n: usize, lag: usize) -> Result<()> {
    if lag == 0 {
        return Err(Error::InvalidInput("lag must be at least 1".into()));
    }
    if lag >= n {
        return Err(Error::InvalidInput(format!("lag {lag} must be below the sample size {n}")));
    }
    Ok(())
}

fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(0.5 * df, 0.5 * x).clamp(0.0, 1.0)
    }
}

fn weighted_sum(x: &[f64], lag: usize, weights: impl Fn(usize) -> f64) -> f64 {
    let n = x.len() as f64;
    match acf(x, lag) {
        None => 0.0,
        Some(r) => r
            .iter()
            .enumerate()
            .map(|(i, rk)| {
                let k = i + 1;
                weights(k) * n * (n + 2.0) * rk * rk / (n - k as f64)
            })
            .sum(),
    }
}

fn wlb(x: &[f64], lag: usize, fitdf: usize, kind: TestKind) -> Result<TestResult> {
    check_lag(x.len(), lag)?;
    if fitdf >= lag {
        return Err(Error::InvalidInput(format!("lag {lag} must exceed fitdf {fitdf}")));
    }
    let m = lag as f64;
    let stat = weighted_sum(x, lag, |k| (m - k as f64 + 1.0) / m);
    let d = 2.0 * m * m + 3.0 * m + 1.0 - 6.0 * m * fitdf as f64;
    let p_value = if stat <= 0.0 {
        1.0
    } else if d <= 0.0 {
        0.0
    } else {
        let shape = 0.75 * (m + 1.0).powi(2) * m / d;
        let scale = 2.0 * d / (3.0 * m * (m + 1.0));
        gamma_ur(shape, stat / scale).clamp(0.0, 1.0)
    };
    Ok(TestResult {
        kind,
        lag,
        statistic: stat,
        p_value,
    })
}

pub fn weighted_ljung_box(z: &[f64], lag: usize, fitdf: usize) -> Result<TestResult> {
    wlb(z, lag, fitdf, TestKind::WlbSr)
}

/// Weighted Ljung-Box on `z²`.
pub fn weighted_ljung_box_squared(z: &[f64], lag: usize, fitdf: usize) -> Result<TestResult> {
    let sq: Vec<f64> = z.iter().map(|v| v * v).collect();
    wlb(&sq, lag, fitdf, TestKind::WlbSsr)
}

/// Classical Ljung-Box against `χ²(lag − fitdf)`.
pub fn ljung_box(x: &[f64], lag: usize, fitdf: usize) -> Result<TestResult> {
    check_lag(x.len(), lag)?;
    if fitdf >= lag {
        return Err(Error::InvalidInput(format!("lag {lag} must exceed fitdf {fitdf}")));
    }
    let stat = weighted_sum(x, lag, |_| 1.0);
    Ok(TestResult {
        kind: TestKind::Lb,
        lag,
        statistic: stat,
        p_value: chi2_sf(stat, (lag - fitdf) as f64),
    })
}

/// Ljung-Box statistic of the squared residuals against `χ²(lag)`.
pub fn portmanteau_q(eps: &[f64], lag: usize) -> Result<TestResult> {
    let sq: Vec<f64> = eps.iter().map(|v| v * v).collect();
    let mut r = ljung_box(&sq, lag, 0)?;
    r.kind = TestKind::Pq;
    Ok(r)
}

pub fn arch_lm(eps: &[f64], lag: usize) -> Result<TestResult> {
    check_lag(eps.len(), lag)?;
    let sq: Vec<f64> = eps.iter().map(|v| v * v).collect();
    let n = sq.len() - lag;
    if n <= lag + 1 {
        return Err(Error::InvalidInput("too few observations for the ARCH LM regression".into()));
    }
    let scale = sq.iter().sum::<f64>() / sq.len() as f64;
    if !(scale > 0.0) {
        return Err(Error::Singular {
            condition: f64::INFINITY,
        });
    }
    let y = DVector::from_fn(n, |i, _| sq[i + lag] / scale);
    let x = DMatrix::from_fn(n, lag + 1, |i, j| if j == 0 { 1.0 } else { sq[i + lag - j] / scale });
    let xtx = x.transpose() * &x;
    let eig = xtx.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition < 1e12) {
        return Err(Error::Singular { condition });
    }
    let chol = xtx.cholesky().ok_or(Error::Singular { condition })?;
    let beta = chol.solve(&(x.transpose() * &y));
    let resid = &y - &x * beta;
    let ybar = y.mean();
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    if !(sst > 0.0) {
        return Err(Error::Singular { condition });
    }
    let r2 = (1.0 - resid.norm_squared() / sst).max(0.0);
    let stat = n as f64 * r2;
    Ok(TestResult {
        kind: TestKind::ArchLm,
        lag,
        statistic: stat,
        p_value: chi2_sf(stat, lag as f64),
    })
}

/// Runs the selected tests at every lag. WLB uses `fitdf_sr` on `z` and
/// `fitdf_ssr` on `z²`; lags not exceeding a fitdf are skipped for that test.
pub fn diagnose(
    z: &[f64],
    lags: &[usize],
    tests: &[TestFamily],
    fitdf_sr: usize,
    fitdf_ssr: usize,
) -> Result<Vec<TestResult>> {
    let mut out = Vec::new();
    for t in tests {
        for &lag in lags {
            match t {
                TestFamily::Wlb => {
                    if lag > fitdf_sr {
                        out.push(weighted_ljung_box(z, lag, fitdf_sr)?);
                    }
                    if lag > fitdf_ssr {
                        out.push(weighted_ljung_box_squared(z, lag, fitdf_ssr)?);
                    }
                }
                TestFamily::ArchLm => out.push(arch_lm(z, lag)?),
                TestFamily::Pq => out.push(portmanteau_q(z, lag)?),
            }
        }
    }
    Ok(out)
}

pub fn write_results<W: Write>(results: &[TestResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["test", "lag", "statistic", "p_value"])?;
    for r in results {
        w.write_record([
            r.kind.code().to_string(),
            r.lag.to_string(),
            format!("{:.6}", r.statistic),
            format!("{:.6}", r.p_value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovations::StandardizedDensity;
    use proptest::prelude::*;

    #[test]
    fn perfect_dependence_rejects() {
        let x: Vec<f64> = (0..1000).map(|t| ((t / 50) as f64).sin() + 0.001 * t as f64).collect();
        let r = weighted_ljung_box(&x, 5, 0).unwrap();
        assert!(r.p_value < 1e-6, "{r:?}");
    }

    #[test]
    fn unit_weights_give_ljung_box() {
        let x = StandardizedDensity::normal().sample(500, 9).unwrap();
        let r = acf(&x, 6).unwrap();
        let n = 500.0;
        let direct: f64 = r
            .iter()
            .enumerate()
            .map(|(i, rk)| n * (n + 2.0) * rk * rk / (n - (i + 1) as f64))
            .sum();
        assert!((ljung_box(&x, 6, 0).unwrap().statistic - direct).abs() < 1e-10);
        assert!((weighted_sum(&x, 6, |_| 1.0) - direct).abs() < 1e-10);
    }

    #[test]
    fn constant_series_guard() {
        let c = vec![0.7; 200];
        let q = portmanteau_q(&c, 4).unwrap();
        assert_eq!(q.statistic, 0.0);
        assert_eq!(q.p_value, 1.0);
        assert!(arch_lm(&c, 4).is_err());
    }

    #[test]
    fn argument_checks() {
        let x = StandardizedDensity::normal().sample(50, 1).unwrap();
        assert!(weighted_ljung_box(&x, 50, 0).is_err());
        assert!(weighted_ljung_box(&x, 2, 2).is_err());
        assert!(arch_lm(&x, 0).is_err());
    }

    #[test]
    fn p_values_monotone() {
        assert!(chi2_sf(1.0, 5.0) > chi2_sf(3.0, 5.0));
        assert!(chi2_sf(3.0, 5.0) > chi2_sf(11.0, 5.0));
        assert!((chi2_sf(11.0705, 5.0) - 0.05).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn scale_invariant(seed in 0u64..1000, c in 0.01f64..100.0) {
            let x = StandardizedDensity::normal().sample(300, seed).unwrap();
            let y: Vec<f64> = x.iter().map(|v| v * c).collect();
            for (a, b) in [
                (weighted_ljung_box(&x, 5, 0).unwrap(), weighted_ljung_box(&y, 5, 0).unwrap()),
                (weighted_ljung_box_squared(&x, 5, 2).unwrap(), weighted_ljung_box_squared(&y, 5, 2).unwrap()),
                (arch_lm(&x, 5).unwrap(), arch_lm(&y, 5).unwrap()),
                (portmanteau_q(&x, 4).unwrap(), portmanteau_q(&y, 4).unwrap()),
            ] {
                prop_assert!((a.statistic - b.statistic).abs() <= 1e-8 * a.statistic.max(1.0));
            }
        }
    }
}
