//! Maximum-likelihood estimation for every volatility model.
//!
//! Parameters are optimized in unconstrained coordinates (see [`transform`]).
//! The objective is the negative mean log-likelihood; non-finite values are
//! replaced by a large finite penalty. Standard errors come from a central
//! difference Hessian `H` of the total log-likelihood and the outer product `S`
//! of per-observation scores: plain `(−H)^{−1}`, robust `H^{−1} S H^{−1}`,
//! both mapped to natural coordinates with the delta method.
//!
//! Information criteria are per observation, with `L` the maximized
//! log-likelihood, `p` the parameter count and `N` the sample size:
//! `AIC = −2L/N + 2p/N`, `BIC = −2L/N + p ln N / N`,
//! `HQIC = −2L/N + 2p ln(ln N)/N`, `SIC = −2L/N + ln((N + 2p)/N)`.

pub mod model;
pub mod optimize;
pub mod transform;

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use statrs::function::erf::erfc;

pub use model::{evaluate, simulate, Filtered, Layout, MeanSpec, ModelParams, ModelSpec, VolatilitySpec};
pub use optimize::{minimize, OptimOptions, OptimResult, PENALTY};
pub use transform::{Block, ParamTransform};

use crate::error::{Error, Result};
use crate::fgarch;

/// Per-observation information criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoCriteria {
    pub aic: f64,
    pub bic: f64,
    pub sic: f64,
    pub hqic: f64,
}

pub fn info_criteria(loglik: f64, n_params: usize, n_obs: usize) -> InfoCriteria {
    let n = n_obs as f64;
    let p = n_params as f64;
    let base = -2.0 * loglik / n;
    InfoCriteria {
        aic: base + 2.0 * p / n,
        bic: base + p * n.ln() / n,
        sic: base + ((n + 2.0 * p) / n).ln(),
        hqic: base + 2.0 * p * n.ln().ln() / n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub grad_norm: f64,
    /// Index of the start that produced the reported optimum.
    pub start: usize,
}

/// Persistence measure with its half-life.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Persistence {
    pub name: String,
    pub value: f64,
    pub half_life: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Optimizer starts. The best converged start wins, or the best value if none converged.
    pub starts: usize,
    pub seed: u64,
    /// Standard deviation of the start jitter in unconstrained coordinates.
    pub jitter: f64,
    pub robust_se: bool,
    pub min_obs: usize,
    /// First start in natural coordinates; the layout heuristic when `None`.
    pub start: Option<Vec<f64>>,
    pub optim: OptimOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            starts: 5,
            seed: 0,
            jitter: 0.3,
            robust_se: true,
            min_obs: 250,
            start: None,
            optim: OptimOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// Optimum in unconstrained coordinates.
    pub unconstrained: Vec<f64>,
    pub se_plain: Option<Vec<f64>>,
    pub se_robust: Option<Vec<f64>>,
    pub cov_plain: Option<Vec<Vec<f64>>>,
    pub cov_robust: Option<Vec<Vec<f64>>>,
    /// Why standard errors are missing, if they are.
    pub se_error: Option<String>,
    /// Parameters on a bound of the feasible region, held fixed in the covariance (SE is NaN).
    pub at_bound: Vec<String>,
    pub information: Option<Information>,
    pub loglik: f64,
    pub n_obs: usize,
    pub n_params: usize,
    pub criteria: InfoCriteria,
    pub convergence: Convergence,
    pub persistence: Vec<Persistence>,
    pub unconditional_variance: Option<f64>,
    pub sigma: Vec<f64>,
    pub residuals: Vec<f64>,
}

fn objective<'a>(layout: &'a Layout, data: &'a [f64]) -> impl Fn(&[f64]) -> f64 + 'a {
    move |u: &[f64]| {
        let x = layout.transform.forward(u);
        match layout.params(&x).and_then(|p| evaluate(&p, data)) {
            Ok(f) => -f.loglik.iter().sum::<f64>() / data.len() as f64,
            Err(_) => f64::NAN,
        }
    }
}

fn loglik_terms(layout: &Layout, data: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let x = layout.transform.forward(u);
    Ok(evaluate(&layout.params(&x)?, data)?.loglik)
}

/// Log-likelihood at natural parameters.
pub fn loglik_at(spec: &ModelSpec, data: &[f64], params: &[f64]) -> Result<f64> {
    let layout = Layout::new(spec)?;
    Ok(evaluate(&layout.params(params)?, data)?.loglik.iter().sum())
}

/// Fits `spec` to `data` by maximum likelihood.
pub fn fit(spec: &ModelSpec, data: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let layout = Layout::new(spec)?;
    if data.len() < opts.min_obs {
        return Err(Error::InvalidInput(format!(
            "need at least {} observations, got {}",
            opts.min_obs,
            data.len()
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("data contain non-finite values".into()));
    }
    let x0 = match &opts.start {
        Some(s) => {
            if s.len() != layout.dim() {
                return Err(Error::InvalidInput(format!(
                    "start has {} values, model has {} parameters",
                    s.len(),
                    layout.dim()
                )));
            }
            s.clone()
        }
        None => layout.start(data),
    };
    let u0 = layout.transform.inverse(&x0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let f = objective(&layout, data);
    let mut best: Option<(usize, OptimResult)> = None;
    for k in 0..opts.starts.max(1) {
        let start: Vec<f64> = if k == 0 {
            u0.clone()
        } else {
            u0.iter()
                .map(|v| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    v + opts.jitter * e
                })
                .collect()
        };
        let r = minimize(&f, &start, &opts.optim);
        log::debug!("start {k}: objective {} converged {}", r.value, r.converged);
        let better = match &best {
            None => true,
            Some((_, b)) => (r.converged, -r.value) > (b.converged, -b.value),
        };
        if better {
            best = Some((k, r));
        }
    }
    let (start_idx, best) = best.expect("at least one start");
    if !(best.value < PENALTY) {
        return Err(Error::Estimation(format!(
            "all {} starts failed to reach a finite likelihood",
            opts.starts.max(1)
        )));
    }
    let x = layout.transform.forward(&best.x);
    let params = layout.params(&x)?;
    let filtered = evaluate(&params, data)?;
    let loglik: f64 = filtered.loglik.iter().sum();
    let n_params = layout.dim();
    let mut result = FitResult {
        spec: spec.clone(),
        names: layout.names.clone(),
        params: x,
        unconstrained: best.x.clone(),
        se_plain: None,
        se_robust: None,
        cov_plain: None,
        cov_robust: None,
        se_error: None,
        at_bound: Vec::new(),
        information: None,
        loglik,
        n_obs: data.len(),
        n_params,
        criteria: info_criteria(loglik, n_params, data.len()),
        convergence: Convergence {
            converged: best.converged,
            iterations: best.iterations,
            evaluations: best.evaluations,
            grad_norm: best.grad_norm,
            start: start_idx,
        },
        persistence: persistence_measures(&params)?,
        unconditional_variance: unconditional_variance(&params),
        sigma: filtered.sigma,
        residuals: filtered.z,
    };
    match covariances(&layout, data, &best.x, opts.robust_se) {
        Ok(Covariances { plain, robust, fixed, information }) => {
            let mask = |mut se: Vec<f64>| {
                for &i in &fixed {
                    se[i] = f64::NAN;
                }
                se
            };
            result.se_plain = Some(mask(diag_sqrt(&plain)));
            result.se_robust = robust.as_ref().map(|c| mask(diag_sqrt(c)));
            result.cov_plain = Some(plain);
            result.cov_robust = robust;
            result.at_bound = fixed.iter().map(|&i| result.names[i].clone()).collect();
            result.information = Some(information);
            if information == Information::Opg {
                log::info!("Hessian not positive definite; standard errors from the outer product of scores");
            }
            if !fixed.is_empty() {
                log::info!("parameters at a bound held fixed for standard errors: {:?}", result.at_bound);
            }
        }
        Err(e) => {
            log::warn!("standard errors unavailable: {e}");
            result.se_error = Some(e.to_string());
        }
    }
    Ok(result)
}

fn diag_sqrt(c: &[Vec<f64>]) -> Vec<f64> {
    (0..c.len()).map(|i| c[i][i].max(0.0).sqrt()).collect()
}

/// Central-difference Hessian of the total log-likelihood in unconstrained coordinates.
fn hessian(layout: &Layout, data: &[f64], u: &[f64], step: f64) -> Result<DMatrix<f64>> {
    let n = u.len();
    let total = |v: &[f64]| -> Result<f64> { Ok(loglik_terms(layout, data, v)?.iter().sum()) };
    let h: Vec<f64> = u.iter().map(|v| step * v.abs().max(1.0)).collect();
    let f0 = total(u)?;
    let mut m = DMatrix::zeros(n, n);
    let mut v = u.to_vec();
    for i in 0..n {
        v[i] = u[i] + 2.0 * h[i];
        let fp = total(&v)?;
        v[i] = u[i] - 2.0 * h[i];
        let fm = total(&v)?;
        v[i] = u[i];
        m[(i, i)] = (fp - 2.0 * f0 + fm) / (4.0 * h[i] * h[i]);
        for j in 0..i {
            let mut eval = |si: f64, sj: f64| -> Result<f64> {
                v[i] = u[i] + si * h[i];
                v[j] = u[j] + sj * h[j];
                let r = total(&v);
                v[i] = u[i];
                v[j] = u[j];
                r
            };
            let val = (eval(1.0, 1.0)? - eval(1.0, -1.0)? - eval(-1.0, 1.0)? + eval(-1.0, -1.0)?) / (4.0 * h[i] * h[j]);
            m[(i, j)] = val;
            m[(j, i)] = val;
        }
    }
    Ok(m)
}

/// Per-observation score outer product in unconstrained coordinates.
fn score_outer(layout: &Layout, data: &[f64], u: &[f64]) -> Result<DMatrix<f64>> {
    let n = u.len();
    let t = data.len();
    let mut g = DMatrix::zeros(t, n);
    let mut v = u.to_vec();
    for j in 0..n {
        let h = 1e-5 * u[j].abs().max(1.0);
        v[j] = u[j] + h;
        let p = loglik_terms(layout, data, &v)?;
        v[j] = u[j] - h;
        let m = loglik_terms(layout, data, &v)?;
        v[j] = u[j];
        for k in 0..t {
            g[(k, j)] = (p[k] - m[k]) / (2.0 * h);
        }
    }
    Ok(g.transpose() * g)
}

fn invert_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = SymmetricEigen::new(m.clone());
    let max = e.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = e.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(min > 0.0) || condition > 1e14 || !condition.is_finite() {
        return Err(Error::Singular { condition });
    }
    let inv = DMatrix::from_diagonal(&e.eigenvalues.map(|v| 1.0 / v));
    Ok(&e.eigenvectors * inv * e.eigenvectors.transpose())
}

type Cov = Vec<Vec<f64>>;

/// Relative finite-difference steps tried in turn until the Hessian is positive definite.
const HESSIAN_STEPS: [f64; 3] = [1e-4, 1e-3, 1e-2];
/// Unconstrained coordinates beyond this magnitude sit on a bound of the feasible region.
const SATURATED: f64 = 12.0;

/// Information matrix behind the standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Information {
    /// Negative Hessian, with the sandwich for robust errors.
    Hessian,
    /// Outer product of scores, used when no finite-difference Hessian is positive definite.
    /// Plain and robust errors coincide.
    Opg,
}

impl Information {
    pub fn name(&self) -> &'static str {
        match self {
            Information::Hessian => "hessian",
            Information::Opg => "opg",
        }
    }
}

struct Covariances {
    plain: Cov,
    robust: Option<Cov>,
    /// Parameters held fixed at a bound.
    fixed: Vec<usize>,
    information: Information,
}

fn covariances(layout: &Layout, data: &[f64], u: &[f64], robust: bool) -> Result<Covariances> {
    let n = u.len();
    let mut free_block = vec![false; n];
    let mut i = 0;
    for b in layout.transform.blocks() {
        for k in i..i + b.width() {
            free_block[k] = *b == Block::Free;
        }
        i += b.width();
    }
    let free: Vec<usize> = (0..n).filter(|&k| free_block[k] || u[k].abs() <= SATURATED).collect();
    let fixed: Vec<usize> = (0..n).filter(|k| !free.contains(k)).collect();
    if free.is_empty() {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let sub = |m: &DMatrix<f64>| DMatrix::from_fn(free.len(), free.len(), |a, b| m[(free[a], free[b])]);
    let hinv = HESSIAN_STEPS
        .iter()
        .find_map(|&step| hessian(layout, data, u, step).ok().and_then(|h| invert_spd(&sub(&-h)).ok()));
    let jac = layout.transform.jacobian(u);
    let j = DMatrix::from_fn(n, free.len(), |a, b| jac[a][free[b]]);
    let to_rows = |m: DMatrix<f64>| -> Cov { (0..n).map(|a| (0..n).map(|b| m[(a, b)]).collect()).collect() };
    let Some(hinv) = hinv else {
        let opg = invert_spd(&sub(&score_outer(layout, data, u)?))?;
        let c = to_rows(&j * opg * j.transpose());
        return Ok(Covariances { robust: robust.then(|| c.clone()), plain: c, fixed, information: Information::Opg });
    };
    let plain = to_rows(&j * &hinv * j.transpose());
    let robust = if robust {
        let s = sub(&score_outer(layout, data, u)?);
        Some(to_rows(&j * (&hinv * s * &hinv) * j.transpose()))
    } else {
        None
    };
    Ok(Covariances { plain, robust, fixed, information: Information::Hessian })
}

/// Robust (sandwich) standard errors of a converged fit in natural coordinates.
pub fn robust_se(fit: &FitResult, data: &[f64]) -> Result<Vec<f64>> {
    if !fit.convergence.converged {
        return Err(Error::Estimation("robust standard errors need a converged fit".into()));
    }
    let layout = Layout::new(&fit.spec)?;
    let c = covariances(&layout, data, &fit.unconstrained, true)?;
    let mut se = diag_sqrt(&c.robust.expect("robust requested"));
    for i in c.fixed {
        se[i] = f64::NAN;
    }
    Ok(se)
}

fn persistence_measures(p: &ModelParams) -> Result<Vec<Persistence>> {
    let mk = |name: &str, value: f64| Persistence {
        name: name.to_string(),
        value,
        half_life: if value > 0.0 {
            fgarch::half_life(value).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        },
    };
    Ok(match p {
        ModelParams::Fgarch { vol, .. } => vec![mk("persistence", fgarch::persistence(vol)?)],
        ModelParams::Tgarch { vol, .. } => vec![mk("persistence", fgarch::tgarch_persistence(vol)?)],
        ModelParams::Cgarch { vol, .. } => vec![mk("rho", vol.rho), mk("alpha+beta", vol.alpha + vol.beta)],
        ModelParams::Gas(g) => vec![mk("b_sigma", g.scale.b)],
        ModelParams::Beta { vol, .. } => {
            let mut v = vec![mk("phi1", vol.phi1)];
            if let Some(p2) = vol.phi2 {
                v.push(mk("phi2", p2));
            }
            v
        }
    })
}

fn unconditional_variance(p: &ModelParams) -> Option<f64> {
    match p {
        ModelParams::Fgarch { vol, .. } => fgarch::unconditional_variance(vol).ok(),
        ModelParams::Tgarch { vol, .. } => fgarch::tgarch_unconditional_variance(vol).ok(),
        ModelParams::Cgarch { vol, .. } => Some(vol.omega),
        _ => None,
    }
}

/// Value and standard errors of a target estimand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetEstimate {
    pub value: f64,
    pub se_plain: Option<f64>,
    pub se_robust: Option<f64>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.params[i])
    }

    /// Evaluates a sum of parameters such as `"alpha+beta"` or `"b_sigma"`.
    pub fn target(&self, expr: &str) -> Result<TargetEstimate> {
        let layout = Layout::new(&self.spec)?;
        let mut w = vec![0.0; self.params.len()];
        for term in expr.split('+').map(str::trim) {
            let idx = layout
                .resolve_term(term)
                .ok_or_else(|| Error::Config(format!("target term `{term}` matches no parameter")))?;
            for i in idx {
                w[i] += 1.0;
            }
        }
        let value = w.iter().zip(&self.params).map(|(a, b)| a * b).sum();
        let quad = |c: &Cov| -> f64 {
            let mut s = 0.0;
            for i in 0..w.len() {
                for j in 0..w.len() {
                    s += w[i] * c[i][j] * w[j];
                }
            }
            s.max(0.0).sqrt()
        };
        Ok(TargetEstimate {
            value,
            se_plain: self.cov_plain.as_ref().map(quad),
            se_robust: self.cov_robust.as_ref().map(quad),
        })
    }

    /// Key-value text report.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model = {}", self.spec.volatility.name());
        let _ = writeln!(s, "innovation = {}", self.spec.innovation);
        let _ = writeln!(s, "n_obs = {}", self.n_obs);
        let _ = writeln!(s, "n_params = {}", self.n_params);
        let _ = writeln!(s, "loglik = {:.6}", self.loglik);
        let _ = writeln!(s, "converged = {}", self.convergence.converged);
        let _ = writeln!(s, "iterations = {}", self.convergence.iterations);
        let _ = writeln!(s, "grad_norm = {:.3e}", self.convergence.grad_norm);
        let c = self.criteria;
        let _ = writeln!(s, "aic = {:.6}\nbic = {:.6}\nsic = {:.6}\nhqic = {:.6}", c.aic, c.bic, c.sic, c.hqic);
        for p in &self.persistence {
            let _ = writeln!(s, "persistence.{} = {:.6}", p.name, p.value);
            let _ = writeln!(s, "half_life.{} = {:.4}", p.name, p.half_life);
        }
        if let Some(v) = self.unconditional_variance {
            let _ = writeln!(s, "unconditional_variance = {v:.6}");
        }
        if let Some(e) = &self.se_error {
            let _ = writeln!(s, "se_error = {e}");
        }
        if let Some(i) = self.information {
            let _ = writeln!(s, "information = {}", i.name());
        }
        if !self.at_bound.is_empty() {
            let _ = writeln!(s, "at_bound = {}", self.at_bound.join(","));
        }
        for row in self.coefficient_rows() {
            let _ = writeln!(
                s,
                "param.{} = {:.6}  se = {}  robust_se = {}  z = {}  p = {}",
                row.name,
                row.estimate,
                fmt_opt(row.se),
                fmt_opt(row.robust_se),
                fmt_opt(row.z),
                fmt_opt(row.p_value)
            );
        }
        s
    }

    /// Estimates with z-ratios and two-sided p-values (robust SEs when available).
    pub fn coefficient_rows(&self) -> Vec<CoefficientRow> {
        (0..self.params.len())
            .map(|i| {
                let se = self.se_plain.as_ref().map(|v| v[i]);
                let robust_se = self.se_robust.as_ref().map(|v| v[i]);
                let used = robust_se.or(se).filter(|v| *v > 0.0);
                let z = used.map(|s| self.params[i] / s);
                CoefficientRow {
                    name: self.names[i].clone(),
                    estimate: self.params[i],
                    se,
                    robust_se,
                    z,
                    p_value: z.map(two_sided_p),
                }
            })
            .collect()
    }

    /// Coefficient table as CSV.
    pub fn table_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["param", "estimate", "se", "robust_se", "z", "p_value"])?;
        for r in self.coefficient_rows() {
            w.write_record([
                r.name,
                format!("{:.8}", r.estimate),
                fmt_opt(r.se),
                fmt_opt(r.robust_se),
                fmt_opt(r.z),
                fmt_opt(r.p_value),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub robust_se: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "NA".into())
}

/// `2(1 − Φ(|z|))`.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}
