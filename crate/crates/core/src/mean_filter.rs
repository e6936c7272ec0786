//! ARMA(m, n) conditional-mean filtering.
//!
//! `μ_t = ς₀ + Σ ς_j r_{t−j} + Σ ψ_j ε_{t−j}`, `ε_t = r_t − μ_t`, with pre-sample
//! residuals set to 0 and pre-sample returns set to the sample mean.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Result};

/// ARMA mean parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArmaParams {
    #[serde(default)]
    pub intercept: f64,
    #[serde(default)]
    pub ar: Vec<f64>,
    #[serde(default)]
    pub ma: Vec<f64>,
}

/// Largest modulus of the roots of `z^k − c₁ z^{k−1} − … − c_k`, i.e. the
/// eigenvalues of the companion matrix of `c`.
pub fn companion_radius(c: &[f64]) -> f64 {
    match c.len() {
        0 => 0.0,
        1 => c[0].abs(),
        k => {
            let mut m = DMatrix::<f64>::zeros(k, k);
            for (j, v) in c.iter().enumerate() {
                m[(0, j)] = *v;
            }
            for i in 1..k {
                m[(i, i - 1)] = 1.0;
            }
            m.complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
        }
    }
}

impl ArmaParams {
    pub fn constant(intercept: f64) -> Self {
        ArmaParams {
            intercept,
            ar: vec![],
            ma: vec![],
        }
    }

    /// Rejects non-stationary AR or non-invertible MA polynomials.
    pub fn validate(&self) -> Result<()> {
        if !self.intercept.is_finite() || self.ar.iter().chain(&self.ma).any(|v| !v.is_finite()) {
            return Err(invalid_param("arma", "non-finite coefficient"));
        }
        let r = companion_radius(&self.ar);
        if r >= 1.0 {
            return Err(invalid_param("ar", format!("non-stationary, root modulus {r:.6}")));
        }
        let neg: Vec<f64> = self.ma.iter().map(|v| -v).collect();
        let r = companion_radius(&neg);
        if r >= 1.0 {
            return Err(invalid_param("ma", format!("non-invertible, root modulus {r:.6}")));
        }
        Ok(())
    }

    /// Unconditional mean `ς₀ / (1 − Σς_j)`.
    pub fn unconditional_mean(&self) -> f64 {
        self.intercept / (1.0 - self.ar.iter().sum::<f64>())
    }
}

/// Residuals `ε_t = r_t − μ_t`.
pub fn filter_residuals(r: &[f64], p: &ArmaParams) -> Result<Vec<f64>> {
    p.validate()?;
    Ok(filter_unchecked(r, p))
}

/// Residual recursion without parameter validation.
pub(crate) fn filter_unchecked(r: &[f64], p: &ArmaParams) -> Vec<f64> {
    let n = r.len();
    if p.ar.is_empty() && p.ma.is_empty() {
        return r.iter().map(|v| v - p.intercept).collect();
    }
    let rbar = if n > 0 { r.iter().sum::<f64>() / n as f64 } else { 0.0 };
    let mut eps = vec![0.0; n];
    for t in 0..n {
        let mut mu = p.intercept;
        for (j, a) in p.ar.iter().enumerate() {
            mu += a * if t > j { r[t - j - 1] } else { rbar };
        }
        for (j, b) in p.ma.iter().enumerate() {
            if t > j {
                mu += b * eps[t - j - 1];
            }
        }
        eps[t] = r[t] - mu;
    }
    eps
}

/// Generates `r_t = μ_t + e_t` from the given noise, starting at the unconditional mean.
pub fn simulate_arma(noise: &[f64], p: &ArmaParams) -> Result<Vec<f64>> {
    p.validate()?;
    let start = p.unconditional_mean();
    let n = noise.len();
    let mut r = vec![0.0; n];
    for t in 0..n {
        let mut mu = p.intercept;
        for (j, a) in p.ar.iter().enumerate() {
            mu += a * if t > j { r[t - j - 1] } else { start };
        }
        for (j, b) in p.ma.iter().enumerate() {
            if t > j {
                mu += b * noise[t - j - 1];
            }
        }
        r[t] = mu + noise[t];
    }
    Ok(r)
}

/// Subtracts the sample mean.
pub fn demean(r: &[f64]) -> Vec<f64> {
    if r.is_empty() {
        return Vec::new();
    }
    let m = r.iter().sum::<f64>() / r.len() as f64;
    r.iter().map(|v| v - m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn zero_params_identity_and_demeaning() {
        let r = vec![0.3, -1.2, 2.2, 0.1];
        assert_eq!(filter_residuals(&r, &ArmaParams::default()).unwrap(), r);
        let m = r.iter().sum::<f64>() / 4.0;
        let e = filter_residuals(&r, &ArmaParams::constant(m)).unwrap();
        assert!(e.iter().sum::<f64>().abs() < 1e-12);
        let d = demean(&r);
        assert!(d.iter().sum::<f64>().abs() < 1e-12);
        for (a, b) in demean(&d).iter().zip(&d) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(demean(&[4.0; 3]), vec![0.0; 3]);
    }

    #[test]
    fn rejects_explosive() {
        let p = ArmaParams {
            intercept: 0.0,
            ar: vec![0.5, 0.6],
            ma: vec![],
        };
        assert!(p.validate().is_err());
        let q = ArmaParams {
            intercept: 0.0,
            ar: vec![],
            ma: vec![1.2],
        };
        assert!(q.validate().is_err());
        let ok = ArmaParams {
            intercept: 0.1,
            ar: vec![0.5, 0.3],
            ma: vec![0.4, 0.2],
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn companion_radius_second_order() {
        // z^2 - 1.1 z + 0.3 = (z - 0.6)(z - 0.5)
        assert!((companion_radius(&[1.1, -0.3]) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn simulate_then_filter_recovers_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let p = ArmaParams {
            intercept: 0.05,
            ar: vec![0.2598],
            ma: vec![-0.1922],
        };
        let r = simulate_arma(&noise, &p).unwrap();
        let e = filter_residuals(&r, &p).unwrap();
        for t in 50..500 {
            assert!((e[t] - noise[t]).abs() < 1e-10);
        }
    }
}
