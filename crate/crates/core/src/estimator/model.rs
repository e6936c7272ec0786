//! Model specifications, parameter layouts, likelihoods and simulation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::transform::{Block, ParamTransform};
use crate::beta_egarch::{self, BetaEgarchParams};
use crate::cgarch::{self, CGarchParams};
use crate::error::{Error, Result};
use crate::fgarch::{self, FGarchParams, TGarchParams};
use crate::gas::{self, GasComponent, GasEngine, GasParams, ScaleLink};
use crate::innovations::{Family, InnovationSpec, StandardizedDensity};
use crate::mean_filter::{self, ArmaParams};

fn one() -> usize {
    1
}

/// Conditional-variance model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum VolatilitySpec {
    /// GARCH(p, q): power 2, no rotation or shift.
    Garch {
        #[serde(default = "one")]
        p: usize,
        #[serde(default = "one")]
        q: usize,
    },
    /// fGARCH(p, q) with free power, rotation and shift.
    Fgarch {
        #[serde(default = "one")]
        p: usize,
        #[serde(default = "one")]
        q: usize,
    },
    Tgarch,
    Cgarch,
    Gas {
        #[serde(default)]
        location_varies: bool,
        #[serde(default)]
        scaling_power: f64,
        #[serde(default)]
        link: ScaleLink,
    },
    Betaegarch {
        #[serde(default = "one")]
        components: usize,
    },
}

impl VolatilitySpec {
    pub fn name(&self) -> &'static str {
        match self {
            VolatilitySpec::Garch { .. } => "garch",
            VolatilitySpec::Fgarch { .. } => "fgarch",
            VolatilitySpec::Tgarch => "tgarch",
            VolatilitySpec::Cgarch => "cgarch",
            VolatilitySpec::Gas { .. } => "gas",
            VolatilitySpec::Betaegarch { .. } => "betaegarch",
        }
    }

    fn default_mean(&self) -> MeanSpec {
        match self {
            VolatilitySpec::Gas { .. } | VolatilitySpec::Betaegarch { .. } => MeanSpec::none(),
            _ => MeanSpec::constant(),
        }
    }
}

/// ARMA conditional mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanSpec {
    #[serde(default)]
    pub constant: bool,
    #[serde(default)]
    pub ar: usize,
    #[serde(default)]
    pub ma: usize,
}

impl MeanSpec {
    pub fn none() -> Self {
        MeanSpec {
            constant: false,
            ar: 0,
            ma: 0,
        }
    }

    pub fn constant() -> Self {
        MeanSpec {
            constant: true,
            ar: 0,
            ma: 0,
        }
    }

    pub fn arma(ar: usize, ma: usize) -> Self {
        MeanSpec { constant: true, ar, ma }
    }

    fn width(&self) -> usize {
        self.constant as usize + self.ar + self.ma
    }
}

/// Mean, volatility and innovation choices of a model to fit or simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub volatility: VolatilitySpec,
    pub innovation: Family,
    pub mean: MeanSpec,
}

impl ModelSpec {
    pub fn new(volatility: VolatilitySpec, innovation: Family) -> Self {
        let mean = volatility.default_mean();
        ModelSpec {
            volatility,
            innovation,
            mean,
        }
    }

    pub fn with_mean(mut self, mean: MeanSpec) -> Self {
        self.mean = mean;
        self
    }

    pub fn garch(innovation: Family) -> Self {
        Self::new(VolatilitySpec::Garch { p: 1, q: 1 }, innovation)
    }

    pub fn fgarch(innovation: Family) -> Self {
        Self::new(VolatilitySpec::Fgarch { p: 1, q: 1 }, innovation)
    }

    pub fn tgarch(innovation: Family) -> Self {
        Self::new(VolatilitySpec::Tgarch, innovation)
    }

    pub fn cgarch(innovation: Family) -> Self {
        Self::new(VolatilitySpec::Cgarch, innovation)
    }

    pub fn gas(innovation: Family, location_varies: bool) -> Self {
        Self::new(
            VolatilitySpec::Gas {
                location_varies,
                scaling_power: 0.0,
                link: ScaleLink::Log,
            },
            innovation,
        )
    }

    pub fn beta_egarch(components: usize) -> Self {
        Self::new(VolatilitySpec::Betaegarch { components }, Family::Sstd)
    }

    pub fn validate(&self) -> Result<()> {
        match self.volatility {
            VolatilitySpec::Garch { p, q } | VolatilitySpec::Fgarch { p, q } => {
                if p == 0 {
                    return Err(Error::Config("GARCH order p must be at least 1".into()));
                }
                let _ = q;
            }
            VolatilitySpec::Gas { scaling_power, .. } => {
                if ![0.0, 0.5, 1.0].contains(&scaling_power) {
                    return Err(Error::Config("GAS scaling_power must be 0, 0.5 or 1".into()));
                }
                if self.mean.width() > 0 {
                    return Err(Error::Config("GAS models carry their own location; mean must be empty".into()));
                }
            }
            VolatilitySpec::Betaegarch { components } => {
                if !(components == 1 || components == 2) {
                    return Err(Error::Config("betaegarch components must be 1 or 2".into()));
                }
                if self.innovation != Family::Sstd {
                    return Err(Error::Config("betaegarch uses the skewed t innovation (sstd)".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Concrete parameter objects for one point of the parameter space.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Fgarch { mean: ArmaParams, vol: FGarchParams },
    Tgarch { mean: ArmaParams, vol: TGarchParams },
    Cgarch { mean: ArmaParams, vol: CGarchParams },
    Gas(GasParams),
    Beta { mean: ArmaParams, vol: BetaEgarchParams },
}

/// Conditional standard deviations and standardized residuals of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Filtered {
    pub sigma: Vec<f64>,
    pub z: Vec<f64>,
    pub loglik: Vec<f64>,
}

/// Parameter names, transforms and starting values of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub spec: ModelSpec,
    pub names: Vec<String>,
    pub transform: ParamTransform,
    /// Names that are part of the mean or volatility equations.
    model_len: usize,
}

fn interval(lo: f64, hi: f64) -> Block {
    Block::Interval { lo, hi }
}

impl Layout {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let mut names: Vec<String> = Vec::new();
        let mut t = ParamTransform::default();
        let add = |names: &mut Vec<String>, t: &mut ParamTransform, ns: &[String], b: Block| {
            names.extend(ns.iter().cloned());
            t.push(b);
        };
        let m = spec.mean;
        if m.constant {
            add(&mut names, &mut t, &["mu".into()], Block::Free);
        }
        for i in 1..=m.ar {
            add(&mut names, &mut t, &[format!("ar{i}")], interval(-1.0, 1.0));
        }
        for i in 1..=m.ma {
            add(&mut names, &mut t, &[format!("ma{i}")], interval(-1.0, 1.0));
        }
        let s = |v: &str| v.to_string();
        match spec.volatility {
            VolatilitySpec::Garch { p, q } | VolatilitySpec::Fgarch { p, q } => {
                add(&mut names, &mut t, &[s("omega")], Block::Positive);
                for i in 1..=p {
                    add(&mut names, &mut t, &[format!("alpha{i}")], Block::Positive);
                }
                for i in 1..=q {
                    add(&mut names, &mut t, &[format!("beta{i}")], Block::Positive);
                }
                if matches!(spec.volatility, VolatilitySpec::Fgarch { .. }) {
                    add(&mut names, &mut t, &[s("gamma")], interval(0.2, 4.0));
                    for i in 1..=p {
                        add(&mut names, &mut t, &[format!("zeta1_{i}")], interval(-1.0, 1.0));
                    }
                    for i in 1..=p {
                        add(&mut names, &mut t, &[format!("zeta2_{i}")], interval(-10.0, 10.0));
                    }
                }
            }
            VolatilitySpec::Tgarch => {
                add(&mut names, &mut t, &[s("omega")], Block::Positive);
                add(&mut names, &mut t, &[s("alpha1"), s("gamma1")], Block::Threshold);
                add(&mut names, &mut t, &[s("beta1")], Block::Positive);
            }
            VolatilitySpec::Cgarch => {
                add(&mut names, &mut t, &[s("omega")], Block::Positive);
                add(&mut names, &mut t, &[s("rho"), s("alpha1"), s("beta1")], Block::Ordered);
                add(&mut names, &mut t, &[s("phi")], Block::Free);
            }
            VolatilitySpec::Gas { location_varies, .. } => {
                add(&mut names, &mut t, &[s("mu_star")], Block::Free);
                add(&mut names, &mut t, &[s("sigma_star")], Block::Positive);
                if location_varies {
                    add(&mut names, &mut t, &[s("a_mu")], Block::Positive);
                    add(&mut names, &mut t, &[s("b_mu")], interval(-1.0, 1.0));
                }
                add(&mut names, &mut t, &[s("a_sigma")], Block::Positive);
                add(&mut names, &mut t, &[s("b_sigma")], interval(-1.0, 1.0));
            }
            VolatilitySpec::Betaegarch { components } => {
                add(&mut names, &mut t, &[s("omega")], Block::Free);
                if components == 2 {
                    add(&mut names, &mut t, &[s("phi1"), s("phi2")], Block::Descending);
                    add(&mut names, &mut t, &[s("kappa1")], Block::Free);
                    add(&mut names, &mut t, &[s("kappa2")], Block::Free);
                } else {
                    add(&mut names, &mut t, &[s("phi1")], interval(-1.0, 1.0));
                    add(&mut names, &mut t, &[s("kappa1")], Block::Free);
                }
                add(&mut names, &mut t, &[s("kappa_star")], Block::Free);
            }
        }
        let model_len = names.len();
        let fam = spec.innovation;
        let mut dist: Vec<String> = InnovationSpec::default_for(fam)
            .names()
            .iter()
            .map(|n| if names.iter().any(|m| m == n) { format!("dist_{n}") } else { n.to_string() })
            .collect();
        match fam {
            Family::Nig => {
                t.push(Block::Steepness);
            }
            _ => {
                for &(lo, hi) in fam.shape_bounds() {
                    t.push(interval(lo, hi));
                }
                if let Some((lo, hi)) = fam.skew_bounds() {
                    t.push(match fam {
                        Family::Snorm | Family::Sstd | Family::Sged | Family::Ald => Block::Positive,
                        _ => interval(lo, hi),
                    });
                }
            }
        }
        names.append(&mut dist);
        debug_assert_eq!(names.len(), t.dim());
        Ok(Layout {
            spec: spec.clone(),
            names,
            transform: t,
            model_len,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Indices of the parameters a target term refers to: an exact model-equation name,
    /// otherwise every model-equation name of the form `term` followed by digits, otherwise an
    /// exact innovation name.
    pub fn resolve_term(&self, term: &str) -> Option<Vec<usize>> {
        let model = &self.names[..self.model_len];
        if let Some(i) = model.iter().position(|n| n == term) {
            return Some(vec![i]);
        }
        let pref: Vec<usize> = model
            .iter()
            .enumerate()
            .filter(|(_, n)| {
                n.strip_prefix(term)
                    .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
            })
            .map(|(i, _)| i)
            .collect();
        if !pref.is_empty() {
            return Some(pref);
        }
        let bare = term.strip_prefix("dist_").unwrap_or(term);
        self.names[self.model_len..]
            .iter()
            .position(|n| n == term || n == bare || n.strip_prefix("dist_") == Some(bare))
            .map(|i| vec![i + self.model_len])
    }

    /// Heuristic starting point in natural coordinates.
    pub fn start(&self, data: &[f64]) -> Vec<f64> {
        let n = data.len().max(1) as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = (data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).max(1e-12);
        let mut x = Vec::with_capacity(self.dim());
        let m = self.spec.mean;
        if m.constant {
            x.push(mean);
        }
        x.extend(std::iter::repeat_n(0.0, m.ar + m.ma));
        match self.spec.volatility {
            VolatilitySpec::Garch { p, q } | VolatilitySpec::Fgarch { p, q } => {
                x.push(var * (1.0 - 0.9));
                x.extend(std::iter::repeat_n(0.05 / p as f64, p));
                x.extend(std::iter::repeat_n(0.85 / q.max(1) as f64, q));
                if matches!(self.spec.volatility, VolatilitySpec::Fgarch { .. }) {
                    x.push(2.0);
                    x.extend(std::iter::repeat_n(0.0, 2 * p));
                }
            }
            VolatilitySpec::Tgarch => {
                x.extend([var * (1.0 - 0.915), 0.03, 0.07, 0.85]);
            }
            VolatilitySpec::Cgarch => {
                x.extend([var, 0.98, 0.05, 0.85, 0.02]);
            }
            VolatilitySpec::Gas { location_varies, .. } => {
                x.extend([mean, var.sqrt()]);
                if location_varies {
                    x.extend([0.01, 0.5]);
                }
                x.extend([0.05, 0.9]);
            }
            VolatilitySpec::Betaegarch { components } => {
                x.push(0.5 * var.ln());
                if components == 2 {
                    x.extend([0.99, 0.9, 0.01, 0.03, 0.02]);
                } else {
                    x.extend([0.95, 0.03, 0.02]);
                }
            }
        }
        x.extend(InnovationSpec::default_for(self.spec.innovation).values());
        x
    }

    fn arma(&self, x: &[f64]) -> (ArmaParams, usize) {
        let m = self.spec.mean;
        let mut i = 0;
        let intercept = if m.constant {
            i += 1;
            x[0]
        } else {
            0.0
        };
        let ar = x[i..i + m.ar].to_vec();
        i += m.ar;
        let ma = x[i..i + m.ma].to_vec();
        i += m.ma;
        (ArmaParams { intercept, ar, ma }, i)
    }

    fn innovation(&self, x: &[f64]) -> Result<InnovationSpec> {
        InnovationSpec::default_for(self.spec.innovation).with_values(&x[self.model_len..])
    }

    /// Builds concrete parameter objects from natural coordinates.
    pub fn params(&self, x: &[f64]) -> Result<ModelParams> {
        if x.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                self.dim(),
                x.len()
            )));
        }
        let (mean, mut i) = self.arma(x);
        let mut next = || {
            i += 1;
            x[i - 1]
        };
        Ok(match self.spec.volatility {
            VolatilitySpec::Garch { p, q } | VolatilitySpec::Fgarch { p, q } => {
                let omega = next();
                let alpha: Vec<f64> = (0..p).map(|_| next()).collect();
                let beta: Vec<f64> = (0..q).map(|_| next()).collect();
                let (gamma, zeta1, zeta2) = if matches!(self.spec.volatility, VolatilitySpec::Fgarch { .. }) {
                    let g = next();
                    let z1: Vec<f64> = (0..p).map(|_| next()).collect();
                    let z2: Vec<f64> = (0..p).map(|_| next()).collect();
                    (g, z1, z2)
                } else {
                    (2.0, vec![0.0; p], vec![0.0; p])
                };
                ModelParams::Fgarch {
                    mean,
                    vol: FGarchParams {
                        omega,
                        alpha,
                        beta,
                        gamma,
                        zeta1,
                        zeta2,
                        innovation: self.innovation(x)?,
                    },
                }
            }
            VolatilitySpec::Tgarch => {
                let (omega, alpha, leverage, beta) = (next(), next(), next(), next());
                ModelParams::Tgarch {
                    mean,
                    vol: TGarchParams {
                        omega,
                        alpha,
                        beta,
                        leverage,
                        innovation: self.innovation(x)?,
                    },
                }
            }
            VolatilitySpec::Cgarch => {
                let (omega, rho, alpha, beta, phi) = (next(), next(), next(), next(), next());
                ModelParams::Cgarch {
                    mean,
                    vol: CGarchParams {
                        omega,
                        rho,
                        phi,
                        alpha,
                        beta,
                        innovation: self.innovation(x)?,
                    },
                }
            }
            VolatilitySpec::Gas {
                location_varies,
                scaling_power,
                link,
            } => {
                let (mu, sigma) = (next(), next());
                let (a_mu, b_mu) = if location_varies { (next(), next()) } else { (0.0, 0.0) };
                let (a_s, b_s) = (next(), next());
                ModelParams::Gas(GasParams {
                    location: GasComponent {
                        target: mu,
                        a: a_mu,
                        b: b_mu,
                    },
                    scale: GasComponent {
                        target: sigma,
                        a: a_s,
                        b: b_s,
                    },
                    location_varies,
                    scaling_power,
                    link,
                    innovation: self.innovation(x)?,
                })
            }
            VolatilitySpec::Betaegarch { components } => {
                let omega = next();
                let vol = if components == 2 {
                    let (phi1, phi2, k1, k2, ks) = (next(), next(), next(), next(), next());
                    BetaEgarchParams::two(omega, phi1, phi2, k1, k2, ks, x[self.model_len], x[self.model_len + 1])
                } else {
                    let (phi1, k1, ks) = (next(), next(), next());
                    BetaEgarchParams::one(omega, phi1, k1, ks, x[self.model_len], x[self.model_len + 1])
                };
                vol.validate()?;
                ModelParams::Beta { mean, vol }
            }
        })
    }
}

fn residuals(data: &[f64], mean: &ArmaParams) -> Result<Vec<f64>> {
    mean.validate()?;
    Ok(mean_filter::filter_unchecked(data, mean))
}

fn garch_terms(d: &StandardizedDensity, sigma: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let ll: Vec<f64> = z.iter().zip(sigma).map(|(z, s)| d.ln_pdf(*z) - s.ln()).collect();
    if let Some(t) = ll.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "log-likelihood".into(),
            t,
        });
    }
    Ok(ll)
}

/// Filters the data and evaluates per-observation log-likelihood contributions.
pub fn evaluate(params: &ModelParams, data: &[f64]) -> Result<Filtered> {
    match params {
        ModelParams::Fgarch { mean, vol } => {
            vol.validate()?;
            let eps = residuals(data, mean)?;
            let d = vol.density()?;
            let pers = fgarch::persistence_with(vol, &d)?;
            let rho = fgarch::rho_terms(vol, &d)?;
            let path = fgarch::filter_with(&eps, vol, pers, &rho)?;
            let loglik = garch_terms(&d, &path.sigma, &path.z)?;
            Ok(Filtered {
                sigma: path.sigma,
                z: path.z,
                loglik,
            })
        }
        ModelParams::Tgarch { mean, vol } => {
            let eps = residuals(data, mean)?;
            let pers = fgarch::tgarch_persistence(vol)?;
            let path = fgarch::tgarch_filter_with(&eps, vol, pers)?;
            let d = StandardizedDensity::new(vol.innovation.clone())?;
            let loglik = garch_terms(&d, &path.sigma, &path.z)?;
            Ok(Filtered {
                sigma: path.sigma,
                z: path.z,
                loglik,
            })
        }
        ModelParams::Cgarch { mean, vol } => {
            vol.validate()?;
            let eps = residuals(data, mean)?;
            let c = cgarch::filter_unchecked(&eps, vol)?;
            let sigma = c.sigma();
            let z: Vec<f64> = eps.iter().zip(&sigma).map(|(e, s)| e / s).collect();
            let d = StandardizedDensity::new(vol.innovation.clone())?;
            let loglik = garch_terms(&d, &sigma, &z)?;
            Ok(Filtered { sigma, z, loglik })
        }
        ModelParams::Gas(p) => {
            p.validate()?;
            let path = GasEngine::new(p)?.run(data, p)?;
            Ok(Filtered {
                sigma: path.sigma,
                z: path.z,
                loglik: path.loglik,
            })
        }
        ModelParams::Beta { mean, vol } => {
            let r = residuals(data, mean)?;
            let path = beta_egarch::filter_unchecked(&r, vol)?;
            let sigma = path.sigma();
            let z = r.iter().zip(&sigma).map(|(a, s)| a / s).collect();
            if let Some(t) = path.loglik.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "log-likelihood".into(),
                    t,
                });
            }
            Ok(Filtered {
                sigma,
                z,
                loglik: path.loglik,
            })
        }
    }
}

/// Simulates `n` returns after discarding `burn`.
pub fn simulate<R: Rng + ?Sized>(params: &ModelParams, n: usize, burn: usize, rng: &mut R) -> Result<Vec<f64>> {
    match params {
        ModelParams::Fgarch { mean, vol } => {
            let path = fgarch::simulate_with(vol, n, burn, rng)?;
            mean_filter::simulate_arma(&path.eps, mean)
        }
        ModelParams::Tgarch { mean, vol } => {
            let f = vol.to_fgarch()?;
            let path = fgarch::simulate_with(&f, n, burn, rng)?;
            mean_filter::simulate_arma(&path.eps, mean)
        }
        ModelParams::Cgarch { mean, vol } => {
            let path = cgarch::simulate_with(vol, n, burn, rng)?;
            mean_filter::simulate_arma(&path.eps, mean)
        }
        ModelParams::Gas(p) => Ok(gas::gas_simulate_with(p, n, burn, rng)?.r),
        ModelParams::Beta { mean, vol } => {
            let sim = beta_egarch::simulate_beta_with(vol, n, burn, rng)?;
            mean_filter::simulate_arma(&sim.r, mean)
        }
    }
}
