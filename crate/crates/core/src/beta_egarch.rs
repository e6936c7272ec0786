//! Beta-Skew-t-EGARCH with one or two log-volatility components.
//!
//! `R_t = exp(λ_t) z_t`, `z_t = ε*_t − μ*`, where `ε*_t` is a Fernández–Steel
//! skewed unit-scale Student t with `ν` degrees of freedom and skew `η`, and
//! `μ* = E ε*_t`.
//!
//! One component:
//! `λ_t = ω + λ†_t`, `λ†_t = φ₁λ†_{t−1} + κ₁u_{t−1} + κ* sgn(−R_{t−1})(u_{t−1} + 1)`.
//!
//! Two components (leverage in the short-run component only):
//! `λ_t = ω + λ†₁_t + λ†₂_t`, `λ†₁_t = φ₁λ†₁_{t−1} + κ₁u_{t−1}`,
//! `λ†₂_t = φ₂λ†₂_{t−1} + κ₂u_{t−1} + κ* sgn(−R_{t−1})(u_{t−1} + 1)`.
//!
//! `u_t` is the derivative of `ln f(R_t | λ_t)` with respect to `λ_t`:
//! `u = (ν+1)(R² + Rμ*e^λ) / (νe^{2λ}η^{2 sgn(R + μ*e^λ)} + (R + μ*e^λ)²) − 1`.
//! All components start at 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid_param, Error, Result};
use crate::innovations::skew_t_mean;

/// Log-volatility magnitudes beyond this are treated as explosive.
pub const MAX_LAMBDA: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEgarchParams {
    pub omega: f64,
    pub phi1: f64,
    pub kappa1: f64,
    /// Second-component persistence; `None` for the one-component model.
    #[serde(default)]
    pub phi2: Option<f64>,
    #[serde(default)]
    pub kappa2: Option<f64>,
    pub kappa_star: f64,
    pub nu: f64,
    pub eta: f64,
}

/// Filtered log-scale and its components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogVolPath {
    pub lambda: Vec<f64>,
    pub comp1: Vec<f64>,
    /// All zeros for the one-component model.
    pub comp2: Vec<f64>,
    pub u: Vec<f64>,
    pub loglik: Vec<f64>,
}

impl LogVolPath {
    pub fn sigma(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| l.exp()).collect()
    }

    pub fn loglik_total(&self) -> f64 {
        self.loglik.iter().sum()
    }
}

impl BetaEgarchParams {
    pub fn one(omega: f64, phi1: f64, kappa1: f64, kappa_star: f64, nu: f64, eta: f64) -> Self {
        BetaEgarchParams {
            omega,
            phi1,
            kappa1,
            phi2: None,
            kappa2: None,
            kappa_star,
            nu,
            eta,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn two(
        omega: f64,
        phi1: f64,
        phi2: f64,
        kappa1: f64,
        kappa2: f64,
        kappa_star: f64,
        nu: f64,
        eta: f64,
    ) -> Self {
        BetaEgarchParams {
            omega,
            phi1,
            kappa1,
            phi2: Some(phi2),
            kappa2: Some(kappa2),
            kappa_star,
            nu,
            eta,
        }
    }

    pub fn components(&self) -> usize {
        if self.phi2.is_some() {
            2
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega", self.omega),
            ("kappa1", self.kappa1),
            ("kappa_star", self.kappa_star),
        ] {
            if !v.is_finite() {
                return Err(invalid_param(name, "must be finite"));
            }
        }
        if !(self.phi1.abs() < 1.0) {
            return Err(invalid_param("phi1", "must satisfy |phi1| < 1"));
        }
        match (self.phi2, self.kappa2) {
            (None, None) => {}
            (Some(phi2), Some(k2)) => {
                if !(phi2.abs() < 1.0) {
                    return Err(invalid_param("phi2", "must satisfy |phi2| < 1"));
                }
                if phi2 == self.phi1 {
                    return Err(invalid_param("phi2", "two components need phi1 != phi2"));
                }
                if !k2.is_finite() {
                    return Err(invalid_param("kappa2", "must be finite"));
                }
            }
            _ => return Err(invalid_param("phi2", "phi2 and kappa2 must be given together")),
        }
        if !(self.nu > 2.0 && self.nu.is_finite()) {
            return Err(invalid_param("nu", "must exceed 2"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid_param("eta", "must be positive"));
        }
        Ok(())
    }

    /// Half-lives `ln(1/2)/ln(φ_i)` of each component.
    pub fn half_lives(&self) -> Vec<f64> {
        let mut v = vec![0.5f64.ln() / self.phi1.ln()];
        if let Some(p2) = self.phi2 {
            v.push(0.5f64.ln() / p2.ln());
        }
        v
    }
}

/// `(κ₁, κ₂)/(κ₁ + κ₂)`; `None` when the sum is zero or the model has one component.
pub fn shock_response_shares(p: &BetaEgarchParams) -> Option<(f64, f64)> {
    let k2 = p.kappa2?;
    let total = p.kappa1 + k2;
    if total == 0.0 {
        return None;
    }
    Some((p.kappa1 / total, k2 / total))
}

/// Density constants for the skewed t of `R`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SkewT {
    nu: f64,
    eta: f64,
    mu: f64,
    c: f64,
}

impl SkewT {
    pub(crate) fn new(nu: f64, eta: f64) -> Self {
        let c = (2.0 / (eta + 1.0 / eta)).ln() + ln_gamma(0.5 * (nu + 1.0))
            - ln_gamma(0.5 * nu)
            - 0.5 * (std::f64::consts::PI * nu).ln();
        SkewT {
            nu,
            eta,
            mu: skew_t_mean(nu, eta),
            c,
        }
    }

    /// `ln f(R | λ)`.
    #[inline]
    pub(crate) fn log_density(&self, r: f64, lambda: f64) -> f64 {
        let x = r * (-lambda).exp() + self.mu;
        let y = if x >= 0.0 { x / self.eta } else { x * self.eta };
        -lambda + self.c - 0.5 * (self.nu + 1.0) * (y * y / self.nu).ln_1p()
    }

    #[inline]
    pub(crate) fn score(&self, r: f64, lambda: f64) -> f64 {
        let el = lambda.exp();
        let shifted = r + self.mu * el;
        let e2 = if shifted >= 0.0 {
            self.eta * self.eta
        } else {
            1.0 / (self.eta * self.eta)
        };
        (self.nu + 1.0) * r * shifted / (self.nu * el * el * e2 + shifted * shifted) - 1.0
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, t: &StudentT<f64>) -> f64 {
        let b = t.sample(rng).abs();
        let u: f64 = rng.random();
        let x = if u < self.eta * self.eta / (1.0 + self.eta * self.eta) {
            b * self.eta
        } else {
            -b / self.eta
        };
        x - self.mu
    }
}

/// Conditional score `∂ ln f(R | λ) / ∂λ`.
pub fn conditional_score(r: f64, lambda: f64, nu: f64, eta: f64) -> Result<f64> {
    if !(r.is_finite() && lambda.is_finite() && nu.is_finite() && eta.is_finite()) {
        return Err(Error::InvalidInput("conditional_score needs finite inputs".into()));
    }
    if !(nu > 2.0) || !(eta > 0.0) {
        return Err(invalid_param("nu", "need nu > 2 and eta > 0"));
    }
    Ok(SkewT::new(nu, eta).score(r, lambda))
}

/// Log density `ln f(R | λ)` of the centered skew-t observation.
pub fn log_density(r: f64, lambda: f64, nu: f64, eta: f64) -> f64 {
    SkewT::new(nu, eta).log_density(r, lambda)
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn run(r: &[f64], p: &BetaEgarchParams) -> Result<LogVolPath> {
    let st = SkewT::new(p.nu, p.eta);
    let n = r.len();
    let mut path = LogVolPath {
        lambda: Vec::with_capacity(n),
        comp1: Vec::with_capacity(n),
        comp2: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        loglik: Vec::with_capacity(n),
    };
    let (phi2, k2) = (p.phi2.unwrap_or(0.0), p.kappa2.unwrap_or(0.0));
    let two = p.components() == 2;
    let (mut c1, mut c2) = (0.0, 0.0);
    for (t, &rt) in r.iter().enumerate() {
        let lambda = p.omega + c1 + c2;
        if !(lambda.abs() <= MAX_LAMBDA) {
            return Err(Error::NonFinite {
                what: "log-volatility".into(),
                t,
            });
        }
        let u = st.score(rt, lambda);
        path.lambda.push(lambda);
        path.comp1.push(c1);
        path.comp2.push(c2);
        path.u.push(u);
        path.loglik.push(st.log_density(rt, lambda));
        let lev = p.kappa_star * sgn(-rt) * (u + 1.0);
        if two {
            c1 = p.phi1 * c1 + p.kappa1 * u;
            c2 = phi2 * c2 + k2 * u + lev;
        } else {
            c1 = p.phi1 * c1 + p.kappa1 * u + lev;
        }
    }
    Ok(path)
}

pub fn filter_one(r: &[f64], p: &BetaEgarchParams) -> Result<LogVolPath> {
    p.validate()?;
    if p.components() != 1 {
        return Err(invalid_param("components", "filter_one needs a one-component model"));
    }
    run(r, p)
}

pub fn filter_two(r: &[f64], p: &BetaEgarchParams) -> Result<LogVolPath> {
    p.validate()?;
    if p.components() != 2 {
        return Err(invalid_param("components", "filter_two needs a two-component model"));
    }
    run(r, p)
}

/// Dispatches on the number of components.
pub fn filter(r: &[f64], p: &BetaEgarchParams) -> Result<LogVolPath> {
    p.validate()?;
    run(r, p)
}

pub(crate) fn filter_unchecked(r: &[f64], p: &BetaEgarchParams) -> Result<LogVolPath> {
    run(r, p)
}

/// Simulated returns and their log-volatility.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSimulation {
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
}

pub fn simulate_beta(p: &BetaEgarchParams, n: usize, burn: usize, seed: u64) -> Result<BetaSimulation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_beta_with(p, n, burn, &mut rng)
}

pub fn simulate_beta_with<R: Rng + ?Sized>(
    p: &BetaEgarchParams,
    n: usize,
    burn: usize,
    rng: &mut R,
) -> Result<BetaSimulation> {
    p.validate()?;
    let st = SkewT::new(p.nu, p.eta);
    let tdist = StudentT::new(p.nu).map_err(|e| invalid_param("nu", e.to_string()))?;
    let (phi2, k2) = (p.phi2.unwrap_or(0.0), p.kappa2.unwrap_or(0.0));
    let two = p.components() == 2;
    let total = n + burn;
    let mut r = Vec::with_capacity(total);
    let mut lam = Vec::with_capacity(total);
    let (mut c1, mut c2) = (0.0, 0.0);
    for t in 0..total {
        let lambda = p.omega + c1 + c2;
        if !(lambda.abs() <= MAX_LAMBDA) {
            return Err(Error::NonFinite {
                what: "simulated log-volatility (explosive)".into(),
                t,
            });
        }
        let rt = lambda.exp() * st.draw(rng, &tdist);
        let u = st.score(rt, lambda);
        let lev = p.kappa_star * sgn(-rt) * (u + 1.0);
        if two {
            c1 = p.phi1 * c1 + p.kappa1 * u;
            c2 = phi2 * c2 + k2 * u + lev;
        } else {
            c1 = p.phi1 * c1 + p.kappa1 * u + lev;
        }
        r.push(rt);
        lam.push(lambda);
    }
    r.drain(..burn);
    lam.drain(..burn);
    Ok(BetaSimulation { r, lambda: lam })
}
