//! GAS(1,1) score-driven filter with time-varying location and scale.
//!
//! Observation density: `r_t = μ_t + σ_t z_t`, `z_t ~ f` standardized. The
//! filtered vector is `ϑ_t = (μ_t, c_t)` where `c_t` is the scale coordinate
//! under the chosen link (`ln σ_t` by default, or `σ²_t`). The update is
//!
//! `ϑ_{t+1} = κ + A s_t + B ϑ_t`, `s_t = I_t^{−γ_s} ∇_t`, `κ = (I − B) ϑ*`,
//!
//! with `∇_t` the score of `ln p(r_t | ϑ_t)` and `I_t` its information matrix.
//! The recursion starts at the targets `ϑ* = (μ*, link(σ*))`.

use std::fmt;

use nalgebra::{Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Error, Result};
use crate::innovations::{InnovationSpec, StandardizedDensity};

/// Scaled scores beyond this magnitude are clipped.
pub const SCORE_CLIP: f64 = 50.0;
/// Filtered values beyond this magnitude are treated as explosive.
pub const EXPLOSIVE: f64 = 1e6;
const INFO_TOL: f64 = 1e-10;

/// Scale coordinate carried by the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleLink {
    /// `c = ln σ`.
    #[default]
    Log,
    /// `c = σ²`.
    Variance,
}

impl ScaleLink {
    pub fn to_coord(self, sigma: f64) -> f64 {
        match self {
            ScaleLink::Log => sigma.ln(),
            ScaleLink::Variance => sigma * sigma,
        }
    }

    pub fn to_sigma(self, c: f64) -> f64 {
        match self {
            ScaleLink::Log => c.exp(),
            ScaleLink::Variance => c.sqrt(),
        }
    }

    /// `d ln σ / d c`.
    fn dlog_sigma(self, c: f64) -> f64 {
        match self {
            ScaleLink::Log => 1.0,
            ScaleLink::Variance => 0.5 / c,
        }
    }
}

/// Target, score loading and persistence of one filtered coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasComponent {
    /// Unconditional value on the natural scale (`μ*` or `σ*`).
    pub target: f64,
    pub a: f64,
    pub b: f64,
}

/// GAS(1,1) parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    pub location: GasComponent,
    pub scale: GasComponent,
    /// When false the location stays at its target and only the scale is filtered.
    pub location_varies: bool,
    /// `γ_s` in `{0, 1/2, 1}`.
    pub scaling_power: f64,
    pub link: ScaleLink,
    pub innovation: InnovationSpec,
}

/// Filter output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GasPath {
    pub location: Vec<f64>,
    /// Scale coordinate under the link.
    pub scale_coord: Vec<f64>,
    pub sigma: Vec<f64>,
    pub z: Vec<f64>,
    /// Scaled score for (location, scale); location entry is 0 when static.
    pub score: Vec<[f64; 2]>,
    /// Per-observation log-likelihood contributions.
    pub loglik: Vec<f64>,
}

impl GasPath {
    pub fn loglik_total(&self) -> f64 {
        self.loglik.iter().sum()
    }
}

/// `ϑ_{t+1} = κ + a s_t + b ϑ_t` for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateEquation {
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
}

impl fmt::Display for UpdateEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "theta[t+1] = {:.4} + {:.4} s[t] + {:.4} theta[t]",
            self.kappa, self.a, self.b
        )
    }
}

impl GasParams {
    /// Scale-only model with identity scaling and log link.
    pub fn scale_only(sigma_star: f64, a: f64, b: f64, mu: f64, innovation: InnovationSpec) -> Self {
        GasParams {
            location: GasComponent {
                target: mu,
                a: 0.0,
                b: 0.0,
            },
            scale: GasComponent {
                target: sigma_star,
                a,
                b,
            },
            location_varies: false,
            scaling_power: 0.0,
            link: ScaleLink::Log,
            innovation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![0.0, 0.5, 1.0].contains(&self.scaling_power) {
            return Err(invalid_param("scaling_power", "must be 0, 0.5 or 1"));
        }
        if !(self.scale.target > 0.0 && self.scale.target.is_finite()) {
            return Err(invalid_param("sigma_star", "target scale must be positive"));
        }
        if !self.location.target.is_finite() {
            return Err(invalid_param("mu_star", "must be finite"));
        }
        let mut comps = vec![("sigma", self.scale)];
        if self.location_varies {
            comps.push(("mu", self.location));
        }
        for (name, c) in comps {
            if !(c.b.abs() < 1.0) {
                return Err(invalid_param(&format!("b_{name}"), "must satisfy |b| < 1"));
            }
            if !(c.a >= 0.0 && c.a.is_finite()) {
                return Err(invalid_param(&format!("a_{name}"), "must be non-negative"));
            }
        }
        self.innovation.validate()
    }

    /// `κ = (1 − b) ϑ*` for the scale coordinate.
    pub fn scale_update(&self) -> UpdateEquation {
        UpdateEquation {
            kappa: (1.0 - self.scale.b) * self.link.to_coord(self.scale.target),
            a: self.scale.a,
            b: self.scale.b,
        }
    }

    pub fn location_update(&self) -> UpdateEquation {
        UpdateEquation {
            kappa: (1.0 - self.location.b) * self.location.target,
            a: self.location.a,
            b: self.location.b,
        }
    }

    /// Persistence of the scale coordinate, `b_σ`.
    pub fn scale_persistence(&self) -> f64 {
        self.scale.b
    }
}

/// Unit-scale information matrix `E[g gᵀ]` with `g = (−f'/f(z), −1 − z f'/f(z))`.
pub fn unit_information(d: &StandardizedDensity) -> Result<Matrix2<f64>> {
    let mm = d.expect(|z| d.d_ln_pdf(z).powi(2), &[], INFO_TOL)?;
    let ms = d.expect(|z| d.d_ln_pdf(z) * (1.0 + z * d.d_ln_pdf(z)), &[], INFO_TOL)?;
    let ss = d.expect(|z| (1.0 + z * d.d_ln_pdf(z)).powi(2), &[], INFO_TOL)?;
    Ok(Matrix2::new(mm, ms, ms, ss))
}

/// Information matrix of `(μ, c)` at the given filtered values.
pub fn information_matrix(p: &GasParams, scale_coord: f64) -> Result<Matrix2<f64>> {
    let d = StandardizedDensity::new(p.innovation.clone())?;
    let unit = unit_information(&d)?;
    Ok(scaled_information(&unit, p.link, scale_coord))
}

fn scaled_information(unit: &Matrix2<f64>, link: ScaleLink, c: f64) -> Matrix2<f64> {
    let sigma = link.to_sigma(c);
    let j = Matrix2::new(1.0 / sigma, 0.0, 0.0, link.dlog_sigma(c));
    j * unit * j
}

/// `M^{−γ}` for a symmetric positive definite 2×2 matrix.
fn inverse_power(m: &Matrix2<f64>, gamma: f64) -> Option<Matrix2<f64>> {
    if gamma == 0.0 {
        return Some(Matrix2::identity());
    }
    let e = SymmetricEigen::new(*m);
    if e.eigenvalues.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let d = Matrix2::from_diagonal(&e.eigenvalues.map(|v| v.powf(-gamma)));
    Some(e.eigenvectors * d * e.eigenvectors.transpose())
}

/// Filtering engine shared by the likelihood and the public filter.
pub(crate) struct GasEngine {
    density: StandardizedDensity,
    unit: Matrix2<f64>,
}

impl GasEngine {
    pub(crate) fn new(p: &GasParams) -> Result<Self> {
        let density = StandardizedDensity::new(p.innovation.clone())?;
        let unit = if p.scaling_power == 0.0 {
            Matrix2::identity()
        } else {
            unit_information(&density)?
        };
        Ok(GasEngine { density, unit })
    }

    #[inline]
    fn scaled_score(&self, p: &GasParams, z: f64, sigma: f64, c: f64, t: usize) -> Result<[f64; 2]> {
        let dl = self.density.d_ln_pdf(z);
        let g_mu = -dl / sigma;
        let g_c = (-1.0 - z * dl) * p.link.dlog_sigma(c);
        if !(g_mu.is_finite() && g_c.is_finite()) {
            return Err(Error::NonFinite {
                what: "score".into(),
                t,
            });
        }
        let mut s = if p.scaling_power == 0.0 {
            [g_mu, g_c]
        } else if p.location_varies {
            let info = scaled_information(&self.unit, p.link, c);
            let sc = inverse_power(&info, p.scaling_power).ok_or_else(|| Error::Singular {
                condition: f64::INFINITY,
            })?;
            [sc[(0, 0)] * g_mu + sc[(0, 1)] * g_c, sc[(1, 0)] * g_mu + sc[(1, 1)] * g_c]
        } else {
            let dl = p.link.dlog_sigma(c);
            let i_cc = self.unit[(1, 1)] * dl * dl;
            [0.0, g_c * i_cc.powf(-p.scaling_power)]
        };
        if !p.location_varies {
            s[0] = 0.0;
        }
        for v in s.iter_mut() {
            if v.abs() > SCORE_CLIP {
                log::warn!("GAS scaled score {v:.3e} clipped at t = {t}");
                *v = v.signum() * SCORE_CLIP;
            }
        }
        Ok(s)
    }

    pub(crate) fn run(&self, r: &[f64], p: &GasParams) -> Result<GasPath> {
        let n = r.len();
        let mut path = GasPath {
            location: Vec::with_capacity(n),
            scale_coord: Vec::with_capacity(n),
            sigma: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
            score: Vec::with_capacity(n),
            loglik: Vec::with_capacity(n),
        };
        let loc_eq = p.location_update();
        let sc_eq = p.scale_update();
        let mut mu = p.location.target;
        let mut c = p.link.to_coord(p.scale.target);
        for (t, &rt) in r.iter().enumerate() {
            if p.link == ScaleLink::Variance && !(c > 0.0) {
                return Err(Error::NonPositiveVariance { t });
            }
            let sigma = p.link.to_sigma(c);
            let z = (rt - mu) / sigma;
            let ll = self.density.ln_pdf(z) - sigma.ln();
            if !ll.is_finite() {
                return Err(Error::NonFinite {
                    what: "log-likelihood".into(),
                    t,
                });
            }
            let s = self.scaled_score(p, z, sigma, c, t)?;
            path.location.push(mu);
            path.scale_coord.push(c);
            path.sigma.push(sigma);
            path.z.push(z);
            path.score.push(s);
            path.loglik.push(ll);
            if p.location_varies {
                mu = loc_eq.kappa + loc_eq.a * s[0] + loc_eq.b * mu;
            }
            c = sc_eq.kappa + sc_eq.a * s[1] + sc_eq.b * c;
            if !(mu.abs() < EXPLOSIVE && c.abs() < EXPLOSIVE) {
                return Err(Error::NonFinite {
                    what: "filtered parameter".into(),
                    t,
                });
            }
        }
        Ok(path)
    }
}

pub fn gas_filter(r: &[f64], p: &GasParams) -> Result<GasPath> {
    p.validate()?;
    GasEngine::new(p)?.run(r, p)
}

/// Simulated returns and the filtered path that generated them.
#[derive(Debug, Clone, PartialEq)]
pub struct GasSimulation {
    pub r: Vec<f64>,
    pub sigma: Vec<f64>,
    pub location: Vec<f64>,
}

pub fn gas_simulate(p: &GasParams, n: usize, burn: usize, seed: u64) -> Result<GasSimulation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gas_simulate_with(p, n, burn, &mut rng)
}

pub fn gas_simulate_with<R: Rng + ?Sized>(
    p: &GasParams,
    n: usize,
    burn: usize,
    rng: &mut R,
) -> Result<GasSimulation> {
    p.validate()?;
    let engine = GasEngine::new(p)?;
    let loc_eq = p.location_update();
    let sc_eq = p.scale_update();
    let total = n + burn;
    let mut out = GasSimulation {
        r: Vec::with_capacity(total),
        sigma: Vec::with_capacity(total),
        location: Vec::with_capacity(total),
    };
    let mut mu = p.location.target;
    let mut c = p.link.to_coord(p.scale.target);
    for t in 0..total {
        if p.link == ScaleLink::Variance && !(c > 0.0) {
            return Err(Error::NonPositiveVariance { t });
        }
        let sigma = p.link.to_sigma(c);
        let z = engine.density.draw(rng);
        out.r.push(mu + sigma * z);
        out.sigma.push(sigma);
        out.location.push(mu);
        let s = engine.scaled_score(p, z, sigma, c, t)?;
        if p.location_varies {
            mu = loc_eq.kappa + loc_eq.a * s[0] + loc_eq.b * mu;
        }
        c = sc_eq.kappa + sc_eq.a * s[1] + sc_eq.b * c;
        if !(mu.abs() < EXPLOSIVE && c.abs() < EXPLOSIVE) {
            return Err(Error::NonFinite {
                what: "simulated GAS path (explosive)".into(),
                t,
            });
        }
    }
    out.r.drain(..burn);
    out.sigma.drain(..burn);
    out.location.drain(..burn);
    Ok(out)
}

/// Monte Carlo mean of the scaled score at the targets, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleCheck {
    pub abs_mean: [f64; 2],
    pub se: [f64; 2],
}

impl MartingaleCheck {
    /// Whether every component mean lies within `k` standard errors of zero.
    pub fn within(&self, k: f64) -> bool {
        (0..2).all(|i| self.abs_mean[i] <= k * self.se[i] || self.se[i] == 0.0 && self.abs_mean[i] == 0.0)
    }
}

pub fn scaled_score_md_check(p: &GasParams, n_draws: usize, seed: u64) -> Result<MartingaleCheck> {
    if n_draws == 0 {
        return Err(Error::InvalidInput("n_draws must be at least 1".into()));
    }
    p.validate()?;
    let engine = GasEngine::new(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = p.link.to_coord(p.scale.target);
    let sigma = p.scale.target;
    let mut sum = [0.0; 2];
    let mut sum2 = [0.0; 2];
    for t in 0..n_draws {
        let z = engine.density.draw(&mut rng);
        let s = engine.scaled_score(p, z, sigma, c, t)?;
        for i in 0..2 {
            sum[i] += s[i];
            sum2[i] += s[i] * s[i];
        }
    }
    let nf = n_draws as f64;
    let mut out = MartingaleCheck {
        abs_mean: [0.0; 2],
        se: [0.0; 2],
    };
    for i in 0..2 {
        let m = sum[i] / nf;
        out.abs_mean[i] = m.abs();
        out.se[i] = ((sum2[i] / nf - m * m).max(0.0) / nf).sqrt();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovations::Family;

    fn t_params() -> GasParams {
        GasParams {
            location: GasComponent {
                target: 0.0882,
                a: 0.0023,
                b: 0.9919,
            },
            scale: GasComponent {
                target: 0.8867,
                a: 0.2061,
                b: 0.9739,
            },
            location_varies: true,
            scaling_power: 0.0,
            link: ScaleLink::Log,
            innovation: InnovationSpec::student_t(4.1).unwrap(),
        }
    }

    #[test]
    fn no_score_loading_converges_to_level() {
        let mut p = t_params();
        p.scale.a = 0.0;
        p.location.a = 0.0;
        let r = vec![0.0; 2000];
        let path = gas_filter(&r, &p).unwrap();
        let c_star = p.scale.target.ln();
        assert!((path.scale_coord[1999] - c_star).abs() < 1e-12);
        assert_eq!(p.scale_persistence(), 0.9739);
    }

    #[test]
    fn echoes_update_equation() {
        let e = UpdateEquation {
            kappa: 0.0226,
            a: 0.0508,
            b: 0.9749,
        };
        assert_eq!(e.to_string(), "theta[t+1] = 0.0226 + 0.0508 s[t] + 0.9749 theta[t]");
        let p = GasParams::scale_only((0.0226f64 / (1.0 - 0.9749)).exp(), 0.0508, 0.9749, 0.0, InnovationSpec::normal());
        let u = p.scale_update();
        assert!((u.kappa - 0.0226).abs() < 1e-12);
    }

    #[test]
    fn normal_information() {
        let d = StandardizedDensity::normal();
        let i = unit_information(&d).unwrap();
        assert!((i[(0, 0)] - 1.0).abs() < 1e-8);
        assert!((i[(1, 1)] - 2.0).abs() < 1e-8);
        assert!(i[(0, 1)].abs() < 1e-6);
        let t = StandardizedDensity::new(InnovationSpec::student_t(6.0).unwrap()).unwrap();
        let it = unit_information(&t).unwrap();
        assert!((it[(1, 1)] - 2.0 * 6.0 / 9.0).abs() < 1e-7);
        assert!(it[(0, 1)].abs() < 1e-6);
    }

    #[test]
    fn variance_link_normal_is_garch() {
        let p = GasParams {
            location: GasComponent {
                target: 0.0,
                a: 0.0,
                b: 0.0,
            },
            scale: GasComponent {
                target: 1.3,
                a: 0.07,
                b: 0.97,
            },
            location_varies: false,
            scaling_power: 1.0,
            link: ScaleLink::Variance,
            innovation: InnovationSpec::normal(),
        };
        let engine = GasEngine::new(&p).unwrap();
        let kappa = p.scale_update().kappa;
        for i in 0..10 {
            for j in 0..10 {
                let eps = -3.0 + 0.6 * i as f64;
                let s2 = 0.2 + 0.5 * j as f64;
                let sigma = s2.sqrt();
                let s = engine.scaled_score(&p, eps / sigma, sigma, s2, 0).unwrap();
                let next = kappa + p.scale.a * s[1] + p.scale.b * s2;
                let garch = kappa + p.scale.a * eps * eps + (p.scale.b - p.scale.a) * s2;
                assert!((next - garch).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn martingale_difference() {
        for gamma in [0.0, 0.5, 1.0] {
            for spec in [
                InnovationSpec::normal(),
                InnovationSpec::student_t(4.1).unwrap(),
                InnovationSpec::new(Family::Ast1, vec![5.0], 0.4).unwrap(),
            ] {
                let mut p = t_params();
                p.scaling_power = gamma;
                p.innovation = spec;
                let chk = scaled_score_md_check(&p, 200_000, 11).unwrap();
                assert!(chk.within(3.5), "{chk:?}");
            }
        }
        assert!(scaled_score_md_check(&t_params(), 0, 1).is_err());
    }

    #[test]
    fn iid_when_static() {
        let mut p = t_params();
        p.scale.a = 0.0;
        p.scale.b = 0.0;
        p.location.a = 0.0;
        p.location.b = 0.0;
        let sim = gas_simulate(&p, 100, 10, 3).unwrap();
        assert!(sim.sigma.iter().all(|s| (s - 0.8867).abs() < 1e-12));
        assert_eq!(gas_simulate(&p, 100, 10, 3).unwrap(), sim);
    }

    #[test]
    fn information_psd() {
        for k in 0..10 {
            let spec = InnovationSpec::new(Family::Sstd, vec![4.5 + k as f64], 0.7 + 0.06 * k as f64).unwrap();
            let mut p = t_params();
            p.innovation = spec;
            let m = information_matrix(&p, 0.3 * k as f64 - 1.0).unwrap();
            let e = SymmetricEigen::new(m);
            assert!(e.eigenvalues.iter().all(|v| *v > 0.0));
        }
    }
}
