//! fGARCH(p, q) and TGARCH conditional variance.
//!
//! `σ^γ_t = ω + Σ α_j σ^γ_{t−j} (|z_{t−j} − ζ2_j| − ζ1_j (z_{t−j} − ζ2_j))^δ + Σ β_j σ^γ_{t−j}`
//! with `δ = γ`. Persistence is `P = Σβ_j + Σα_j ϱ_j` where
//! `ϱ_j = E(|z − ζ2_j| − ζ1_j (z − ζ2_j))^δ` under the innovation density.
//!
//! The recursion starts at the unconditional level `σ^γ = ω/(1 − P)`; pre-sample
//! news terms are replaced by their expectation `ϱ_j σ^γ`, so a stationary
//! model starts in its steady state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Error, Result};
use crate::innovations::{InnovationSpec, StandardizedDensity};

/// Absolute tolerance for the persistence integrals.
pub const RHO_TOL: f64 = 1e-9;

/// fGARCH(p, q) parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FGarchParams {
    pub omega: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Power `γ = δ`.
    pub gamma: f64,
    pub zeta1: Vec<f64>,
    pub zeta2: Vec<f64>,
    pub innovation: InnovationSpec,
}

/// Conditional standard deviations and standardized residuals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolatilityPath {
    pub sigma: Vec<f64>,
    pub z: Vec<f64>,
}

/// Simulated residuals with their conditional standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl FGarchParams {
    /// Plain GARCH(1,1) as an fGARCH special case.
    pub fn garch11(omega: f64, alpha: f64, beta: f64, innovation: InnovationSpec) -> Self {
        FGarchParams {
            omega,
            alpha: vec![alpha],
            beta: vec![beta],
            gamma: 2.0,
            zeta1: vec![0.0],
            zeta2: vec![0.0],
            innovation,
        }
    }

    pub fn p(&self) -> usize {
        self.alpha.len()
    }

    pub fn q(&self) -> usize {
        self.beta.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(invalid_param("omega", format!("{} must be positive", self.omega)));
        }
        if self.alpha.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(invalid_param("alpha", "must be non-negative"));
        }
        if self.beta.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return Err(invalid_param("beta", "must be non-negative"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid_param("gamma", format!("{} must be positive", self.gamma)));
        }
        if self.zeta1.len() != self.p() || self.zeta2.len() != self.p() {
            return Err(invalid_param("zeta", "need one rotation and one shift per alpha"));
        }
        if self.zeta1.iter().any(|z| !(z.abs() < 1.0)) {
            return Err(invalid_param("zeta1", "rotation must lie in (-1, 1)"));
        }
        if self.zeta2.iter().any(|z| !z.is_finite()) {
            return Err(invalid_param("zeta2", "shift must be finite"));
        }
        self.innovation.validate()
    }

    pub fn density(&self) -> Result<StandardizedDensity> {
        StandardizedDensity::new(self.innovation.clone())
    }
}

/// `ϱ_j` for each ARCH lag.
pub fn rho_terms(p: &FGarchParams, d: &StandardizedDensity) -> Result<Vec<f64>> {
    let delta = p.gamma;
    p.zeta1
        .iter()
        .zip(&p.zeta2)
        .map(|(&z1, &z2)| {
            if z1 == 0.0 && z2 == 0.0 && delta == 2.0 && d.family().is_centered() {
                return Ok(1.0);
            }
            d.expect(
                |z| {
                    let u = z - z2;
                    (u.abs() - z1 * u).powf(delta)
                },
                &[z2],
                RHO_TOL,
            )
        })
        .collect()
}

/// Persistence with an already constructed density.
pub fn persistence_with(p: &FGarchParams, d: &StandardizedDensity) -> Result<f64> {
    let rho = rho_terms(p, d)?;
    Ok(p.beta.iter().sum::<f64>() + p.alpha.iter().zip(&rho).map(|(a, r)| a * r).sum::<f64>())
}

/// `P = Σβ_j + Σα_j ϱ_j`.
pub fn persistence(p: &FGarchParams) -> Result<f64> {
    p.validate()?;
    persistence_with(p, &p.density()?)
}

/// `ω / (1 − P)^{2/γ}`.
pub fn unconditional_variance_from(omega: f64, persistence: f64, gamma: f64) -> Result<f64> {
    if persistence >= 1.0 {
        return Err(Error::NonStationary { persistence });
    }
    Ok(omega / (1.0 - persistence).powf(2.0 / gamma))
}

pub fn unconditional_variance(p: &FGarchParams) -> Result<f64> {
    unconditional_variance_from(p.omega, persistence(p)?, p.gamma)
}

/// `ln(1/2) / ln(P)` in days; `+∞` (with a warning) for `P ≥ 1`.
pub fn half_life(persistence: f64) -> Result<f64> {
    if !(persistence > 0.0) {
        return Err(invalid_param("persistence", format!("{persistence} must be positive")));
    }
    if persistence >= 1.0 {
        log::warn!("half-life undefined for persistence {persistence} >= 1");
        return Ok(f64::INFINITY);
    }
    Ok(0.5f64.ln() / persistence.ln())
}

/// `P^d` for `d = 1..=days`.
pub fn decay_curve(persistence: f64, days: usize) -> Vec<f64> {
    (1..=days).map(|d| persistence.powi(d as i32)).collect()
}

/// Runs the recursion on residuals.
pub fn filter(eps: &[f64], p: &FGarchParams) -> Result<VolatilityPath> {
    p.validate()?;
    let d = p.density()?;
    let pers = persistence_with(p, &d)?;
    let rho = rho_terms(p, &d)?;
    filter_with(eps, p, pers, &rho)
}

/// Recursion given precomputed persistence and `ϱ_j`.
pub(crate) fn filter_with(
    eps: &[f64],
    p: &FGarchParams,
    persistence: f64,
    rho: &[f64],
) -> Result<VolatilityPath> {
    if persistence >= 1.0 {
        return Err(Error::NonStationary { persistence });
    }
    let n = eps.len();
    let gamma = p.gamma;
    let inv_gamma = 1.0 / gamma;
    let bar = p.omega / (1.0 - persistence);
    let mut s = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    let mut z = vec![0.0; n];
    let square = gamma == 2.0;
    for t in 0..n {
        let mut v = p.omega;
        for j in 0..p.alpha.len() {
            v += p.alpha[j]
                * if t > j {
                    let k = t - j - 1;
                    let u = z[k] - p.zeta2[j];
                    let g = u.abs() - p.zeta1[j] * u;
                    s[k] * if square { g * g } else { g.powf(gamma) }
                } else {
                    rho[j] * bar
                };
        }
        for (j, b) in p.beta.iter().enumerate() {
            v += b * if t > j { s[t - j - 1] } else { bar };
        }
        if !(v > 0.0) {
            return Err(Error::NonPositiveVariance { t });
        }
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "conditional variance".into(),
                t,
            });
        }
        s[t] = v;
        let sd = if square { v.sqrt() } else { v.powf(inv_gamma) };
        sigma[t] = sd;
        z[t] = eps[t] / sd;
        if !z[t].is_finite() {
            return Err(Error::NonFinite {
                what: "standardized residual".into(),
                t,
            });
        }
    }
    Ok(VolatilityPath { sigma, z })
}

/// Simulates `n` residuals after discarding `burn`.
pub fn simulate(p: &FGarchParams, n: usize, burn: usize, seed: u64) -> Result<SimulatedPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with(p, n, burn, &mut rng)
}

pub fn simulate_with<R: Rng + ?Sized>(
    p: &FGarchParams,
    n: usize,
    burn: usize,
    rng: &mut R,
) -> Result<SimulatedPath> {
    p.validate()?;
    let d = p.density()?;
    let pers = persistence_with(p, &d)?;
    if pers >= 1.0 {
        return Err(Error::NonStationary { persistence: pers });
    }
    let rho = rho_terms(p, &d)?;
    let total = n + burn;
    let draws = d.sample_with(rng, total);
    let mut eps = vec![0.0; total];
    let mut sigma = vec![0.0; total];
    let mut s = vec![0.0; total];
    let bar = p.omega / (1.0 - pers);
    for t in 0..total {
        let mut v = p.omega;
        for j in 0..p.alpha.len() {
            v += p.alpha[j]
                * if t > j {
                    let k = t - j - 1;
                    let u = draws[k] - p.zeta2[j];
                    s[k] * (u.abs() - p.zeta1[j] * u).powf(p.gamma)
                } else {
                    rho[j] * bar
                };
        }
        for (j, b) in p.beta.iter().enumerate() {
            v += b * if t > j { s[t - j - 1] } else { bar };
        }
        s[t] = v;
        sigma[t] = v.powf(1.0 / p.gamma);
        eps[t] = sigma[t] * draws[t];
    }
    Ok(SimulatedPath {
        eps: eps.split_off(burn),
        sigma: sigma.split_off(burn),
    })
}

/// Threshold GARCH(1,1): `σ²_t = ω + (α + γ_lev 1[ε_{t−1} < 0]) ε²_{t−1} + β σ²_{t−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TGarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub leverage: f64,
    pub innovation: InnovationSpec,
}

impl TGarchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(invalid_param("omega", "must be positive"));
        }
        if !(self.alpha >= 0.0) {
            return Err(invalid_param("alpha", "must be non-negative"));
        }
        if !(self.beta >= 0.0) {
            return Err(invalid_param("beta", "must be non-negative"));
        }
        if !(self.alpha + self.leverage >= 0.0) {
            return Err(invalid_param("leverage", "alpha + leverage must be non-negative"));
        }
        self.innovation.validate()
    }

    /// Slope of the news impact curve for negative shocks, `α + γ_lev`.
    pub fn bad_news_coefficient(&self) -> f64 {
        self.alpha + self.leverage
    }

    /// Equivalent fGARCH parameters (`γ = δ = 2`, `ζ2 = 0`), requiring `α > 0`.
    pub fn to_fgarch(&self) -> Result<FGarchParams> {
        if !(self.alpha > 0.0) {
            return Err(invalid_param("alpha", "mapping to fGARCH needs alpha > 0"));
        }
        let r = ((self.alpha + self.leverage) / self.alpha).sqrt();
        let zeta1 = (r - 1.0) / (r + 1.0);
        Ok(FGarchParams {
            omega: self.omega,
            alpha: vec![self.alpha / (1.0 - zeta1).powi(2)],
            beta: vec![self.beta],
            gamma: 2.0,
            zeta1: vec![zeta1],
            zeta2: vec![0.0],
            innovation: self.innovation.clone(),
        })
    }
}

/// `E[z² 1(z < 0)]` under the innovation density.
pub fn negative_second_moment(d: &StandardizedDensity) -> Result<f64> {
    d.expect(|z| if z < 0.0 { z * z } else { 0.0 }, &[0.0], RHO_TOL)
}

/// `α + β + γ_lev E[z² 1(z < 0)]`.
pub fn tgarch_persistence(t: &TGarchParams) -> Result<f64> {
    t.validate()?;
    let d = StandardizedDensity::new(t.innovation.clone())?;
    Ok(t.alpha + t.beta + t.leverage * negative_second_moment(&d)?)
}

pub fn tgarch_unconditional_variance(t: &TGarchParams) -> Result<f64> {
    unconditional_variance_from(t.omega, tgarch_persistence(t)?, 2.0)
}

pub fn tgarch_filter(eps: &[f64], t: &TGarchParams) -> Result<VolatilityPath> {
    let pers = tgarch_persistence(t)?;
    tgarch_filter_with(eps, t, pers)
}

pub(crate) fn tgarch_filter_with(eps: &[f64], t: &TGarchParams, persistence: f64) -> Result<VolatilityPath> {
    if persistence >= 1.0 {
        return Err(Error::NonStationary { persistence });
    }
    let n = eps.len();
    let bar = t.omega / (1.0 - persistence);
    let mut sigma = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut prev = bar;
    for i in 0..n {
        let v = if i == 0 {
            bar
        } else {
            let e = eps[i - 1];
            let a = if e < 0.0 { t.alpha + t.leverage } else { t.alpha };
            t.omega + a * e * e + t.beta * prev
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveVariance { t: i });
        }
        prev = v;
        sigma[i] = v.sqrt();
        z[i] = eps[i] / sigma[i];
    }
    Ok(VolatilityPath { sigma, z })
}

pub fn tgarch_simulate(t: &TGarchParams, n: usize, burn: usize, seed: u64) -> Result<SimulatedPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pers = tgarch_persistence(t)?;
    if pers >= 1.0 {
        return Err(Error::NonStationary { persistence: pers });
    }
    let d = StandardizedDensity::new(t.innovation.clone())?;
    let total = n + burn;
    let mut eps = vec![0.0; total];
    let mut sigma = vec![0.0; total];
    let mut prev = t.omega / (1.0 - pers);
    for i in 0..total {
        let v = if i == 0 {
            prev
        } else {
            let e = eps[i - 1];
            let a = if e < 0.0 { t.alpha + t.leverage } else { t.alpha };
            t.omega + a * e * e + t.beta * prev
        };
        prev = v;
        sigma[i] = v.sqrt();
        eps[i] = sigma[i] * d.draw(&mut rng);
    }
    Ok(SimulatedPath {
        eps: eps.split_off(burn),
        sigma: sigma.split_off(burn),
    })
}

/// `σ²(ε) = ω + (α + γ_lev 1[ε < 0]) ε² + β σ̄²`.
pub fn news_impact(t: &TGarchParams, eps_grid: &[f64]) -> Result<Vec<f64>> {
    let bar = tgarch_unconditional_variance(t)?;
    Ok(eps_grid
        .iter()
        .map(|&e| {
            let a = if e < 0.0 { t.alpha + t.leverage } else { t.alpha };
            t.omega + a * e * e + t.beta * bar
        })
        .collect())
}
