//! Component GARCH: permanent and transitory variance components.
//!
//! `m_t = ω̂ + ρ(m_{t−1} − ω̂) + φ(ε²_{t−1} − σ²_{t−1})`
//! `σ²_t − m_t = α(ε²_{t−1} − m_{t−1}) + β(σ²_{t−1} − m_{t−1})`
//!
//! Both recursions start at `m = σ² = ω̂`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Error, Result};
use crate::fgarch::SimulatedPath;
use crate::innovations::{InnovationSpec, StandardizedDensity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CGarchParams {
    /// Long-run variance level.
    pub omega: f64,
    pub rho: f64,
    pub phi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub innovation: InnovationSpec,
}

/// Conditional variance split into permanent `m` and transitory `q = σ² − m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentPath {
    pub sigma2: Vec<f64>,
    pub m: Vec<f64>,
    pub q: Vec<f64>,
}

impl ComponentPath {
    pub fn sigma(&self) -> Vec<f64> {
        self.sigma2.iter().map(|v| v.sqrt()).collect()
    }
}

impl CGarchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(invalid_param("omega", "long-run level must be positive"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(invalid_param("rho", "must lie in (0, 1)"));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(invalid_param("alpha", "transitory loadings must be non-negative"));
        }
        if !(self.alpha + self.beta < self.rho) {
            return Err(invalid_param(
                "beta",
                format!("alpha + beta = {} must be below rho = {}", self.alpha + self.beta, self.rho),
            ));
        }
        if !self.phi.is_finite() {
            return Err(invalid_param("phi", "must be finite"));
        }
        self.innovation.validate()
    }
}

/// `(ρ, α + β)`: permanent and transitory persistence.
pub fn component_persistence(p: &CGarchParams) -> (f64, f64) {
    (p.rho, p.alpha + p.beta)
}

pub fn filter_components(eps: &[f64], p: &CGarchParams) -> Result<ComponentPath> {
    p.validate()?;
    Ok(filter_unchecked(eps, p)?)
}

pub(crate) fn filter_unchecked(eps: &[f64], p: &CGarchParams) -> Result<ComponentPath> {
    let n = eps.len();
    let mut sigma2 = vec![0.0; n];
    let mut m = vec![0.0; n];
    let mut q = vec![0.0; n];
    let (mut m_prev, mut s_prev) = (p.omega, p.omega);
    for t in 0..n {
        let (mt, st) = if t == 0 {
            (p.omega, p.omega)
        } else {
            let e2 = eps[t - 1] * eps[t - 1];
            let mt = p.omega + p.rho * (m_prev - p.omega) + p.phi * (e2 - s_prev);
            let qt = p.alpha * (e2 - m_prev) + p.beta * (s_prev - m_prev);
            (mt, mt + qt)
        };
        if !(st > 0.0) || !st.is_finite() {
            return Err(Error::NonPositiveVariance { t });
        }
        m[t] = mt;
        sigma2[t] = st;
        q[t] = st - mt;
        m_prev = mt;
        s_prev = st;
    }
    Ok(ComponentPath { sigma2, m, q })
}

pub fn simulate(p: &CGarchParams, n: usize, burn: usize, seed: u64) -> Result<SimulatedPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with(p, n, burn, &mut rng)
}

pub fn simulate_with<R: Rng + ?Sized>(
    p: &CGarchParams,
    n: usize,
    burn: usize,
    rng: &mut R,
) -> Result<SimulatedPath> {
    p.validate()?;
    let d = StandardizedDensity::new(p.innovation.clone())?;
    let total = n + burn;
    let mut eps = vec![0.0; total];
    let mut sigma = vec![0.0; total];
    let (mut m_prev, mut s_prev) = (p.omega, p.omega);
    for t in 0..total {
        let (mt, st) = if t == 0 {
            (p.omega, p.omega)
        } else {
            let e2 = eps[t - 1] * eps[t - 1];
            let mt = p.omega + p.rho * (m_prev - p.omega) + p.phi * (e2 - s_prev);
            (mt, mt + p.alpha * (e2 - m_prev) + p.beta * (s_prev - m_prev))
        };
        if !(st > 0.0) || !st.is_finite() {
            return Err(Error::NonPositiveVariance { t });
        }
        m_prev = mt;
        s_prev = st;
        sigma[t] = st.sqrt();
        eps[t] = sigma[t] * d.draw(rng);
    }
    Ok(SimulatedPath {
        eps: eps.split_off(burn),
        sigma: sigma.split_off(burn),
    })
}
