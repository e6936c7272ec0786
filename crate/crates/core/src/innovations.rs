//! Standardized innovation distributions.
//!
//! Every family is parameterized so that `z` has mean 0 and variance 1, except
//! ALD, which has location 0 and variance 1 (its mean is `(s/√2)(1/κ − κ)`).
//!
//! | token | shape | skew | density |
//! |-------|-------|------|---------|
//! | `norm` | – | – | standard Normal |
//! | `snorm` | – | η > 0 | Fernández–Steel skewed Normal |
//! | `std` | ν | – | Student t rescaled by `sqrt((ν−2)/ν)` |
//! | `sstd` | ν | η > 0 | Fernández–Steel skewed standardized t |
//! | `ged` | κ | – | `κ / (λ 2^{1+1/κ} Γ(1/κ)) exp(−½|z/λ|^κ)`, `λ² = 2^{−2/κ} Γ(1/κ)/Γ(3/κ)` |
//! | `sged` | κ | η > 0 | Fernández–Steel skewed GED |
//! | `nig` | α | β, `|β| < α` | NIG(α, β, δ, μ) with `δ = γ³/α²`, `γ = sqrt(α² − β²)`, `μ = −βδ/γ` |
//! | `ghyp` | λ, ζ | ρ ∈ (−1, 1) | GH with `β = ρα`, `δ = ζ/γ`, α fixed by unit variance |
//! | `ghst` | ν > 4 | b | Aas–Haff GH skew-t with `βδ = b`, δ fixed by unit variance |
//! | `jsu` | δ > 0 | γ | Johnson SU, `z = ξ + λ sinh((N − γ)/δ)` |
//! | `ast` | ν₁, ν₂ | α ∈ (0, 1) | Zhu–Galbraith asymmetric t, standardized |
//! | `ast1` | ν | α ∈ (0, 1) | `ast` with `ν₁ = ν₂ = ν` |
//! | `ald` | – | κ > 0 | asymmetric Laplace `(√2/s) κ/(1+κ²) exp(−(√2/s) κ^{sgn z} |z|)` |
//!
//! Fernández–Steel skewing of a symmetric unit-variance base `f` with
//! `m₁ = E|z|`: `g(z) = 2σ/(η + 1/η) f(x η^{−sgn x})`, `x = σz + μ`,
//! `μ = m₁(η − 1/η)`, `σ² = (1 − m₁²)(η² + η^{−2}) + 2m₁² − 1`.
//!
//! Zhu–Galbraith AST before standardization: for `y ≤ 0` the density is
//! `(α/α*) K(ν₁) [1 + (y/(2α*))²/ν₁]^{−(ν₁+1)/2}`, for `y > 0`
//! `((1−α)/(1−α*)) K(ν₂) [1 + (y/(2(1−α*)))²/ν₂]^{−(ν₂+1)/2}`, with
//! `K(ν) = Γ((ν+1)/2)/(sqrt(πν)Γ(ν/2))` and `α* = αK(ν₁)/(αK(ν₁) + (1−α)K(ν₂))`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, InverseGaussian, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid_param, Error, Result};
use crate::quadrature;
use crate::special::{d_ln_bessel_k, ln_bessel_k};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Innovation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Norm,
    Snorm,
    Std,
    Sstd,
    Ged,
    Sged,
    Nig,
    Ghyp,
    Ghst,
    Jsu,
    Ast,
    Ast1,
    Ald,
}

impl Family {
    pub const ALL: [Family; 13] = [
        Family::Norm,
        Family::Snorm,
        Family::Std,
        Family::Sstd,
        Family::Ged,
        Family::Sged,
        Family::Nig,
        Family::Ghyp,
        Family::Ghst,
        Family::Jsu,
        Family::Ast,
        Family::Ast1,
        Family::Ald,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Family::Norm => "norm",
            Family::Snorm => "snorm",
            Family::Std => "std",
            Family::Sstd => "sstd",
            Family::Ged => "ged",
            Family::Sged => "sged",
            Family::Nig => "nig",
            Family::Ghyp => "ghyp",
            Family::Ghst => "ghst",
            Family::Jsu => "jsu",
            Family::Ast => "ast",
            Family::Ast1 => "ast1",
            Family::Ald => "ald",
        }
    }

    /// Names of the shape parameters.
    pub fn shape_names(self) -> &'static [&'static str] {
        match self {
            Family::Norm | Family::Snorm | Family::Ald => &[],
            Family::Std | Family::Sstd | Family::Ghst | Family::Ast1 => &["nu"],
            Family::Ged | Family::Sged => &["kappa"],
            Family::Nig => &["alpha"],
            Family::Ghyp => &["lambda", "zeta"],
            Family::Jsu => &["delta"],
            Family::Ast => &["nu1", "nu2"],
        }
    }

    /// Name of the skew parameter, if the family has one.
    pub fn skew_name(self) -> Option<&'static str> {
        match self {
            Family::Norm | Family::Std | Family::Ged => None,
            Family::Snorm | Family::Sstd | Family::Sged => Some("eta"),
            Family::Nig => Some("beta"),
            Family::Ghyp => Some("rho"),
            Family::Ghst => Some("b"),
            Family::Jsu => Some("gamma"),
            Family::Ast | Family::Ast1 => Some("alpha"),
            Family::Ald => Some("kappa"),
        }
    }

    /// Skew value that leaves the density symmetric.
    pub fn neutral_skew(self) -> f64 {
        match self {
            Family::Nig | Family::Ghyp | Family::Ghst | Family::Jsu => 0.0,
            Family::Ast | Family::Ast1 => 0.5,
            _ => 1.0,
        }
    }

    /// Open/closed bounds `(lo, hi]` of each shape parameter.
    pub fn shape_bounds(self) -> &'static [(f64, f64)] {
        match self {
            Family::Norm | Family::Snorm | Family::Ald => &[],
            Family::Std | Family::Sstd | Family::Ast1 => &[(2.01, 100.0)],
            Family::Ghst => &[(4.01, 100.0)],
            Family::Ged | Family::Sged => &[(0.1, 20.0)],
            Family::Nig => &[(1e-6, 100.0)],
            Family::Ghyp => &[(-10.0, 10.0), (1e-6, 100.0)],
            Family::Jsu => &[(0.05, 50.0)],
            Family::Ast => &[(2.01, 100.0), (2.01, 100.0)],
        }
    }

    /// Bounds of the skew parameter, if the family has one.
    pub fn skew_bounds(self) -> Option<(f64, f64)> {
        match self {
            Family::Norm | Family::Std | Family::Ged => None,
            Family::Snorm | Family::Sstd | Family::Sged | Family::Ald => Some((0.01, 100.0)),
            Family::Nig => Some((f64::NEG_INFINITY, f64::INFINITY)),
            Family::Ghyp => Some((-1.0, 1.0)),
            Family::Ghst | Family::Jsu => Some((-50.0, 50.0)),
            Family::Ast | Family::Ast1 => Some((0.0, 1.0)),
        }
    }

    /// Default starting values `(shape, skew)` for estimation.
    pub fn default_values(self) -> (Vec<f64>, f64) {
        let shape = match self {
            Family::Norm | Family::Snorm | Family::Ald => vec![],
            Family::Std | Family::Sstd | Family::Ast1 => vec![8.0],
            Family::Ghst => vec![10.0],
            Family::Ged | Family::Sged => vec![1.5],
            Family::Nig => vec![1.5],
            Family::Ghyp => vec![-0.5, 1.5],
            Family::Jsu => vec![2.0],
            Family::Ast => vec![8.0, 8.0],
        };
        (shape, self.neutral_skew())
    }

    /// Whether the family mean is zero by construction.
    pub fn is_centered(self) -> bool {
        self != Family::Ald
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.code() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidInput(format!("unknown innovation family `{s}`")))
    }
}

/// Family plus its shape and skew parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnovationSpec {
    pub family: Family,
    #[serde(default)]
    pub shape: Vec<f64>,
    #[serde(default = "nan")]
    pub skew: f64,
}

fn nan() -> f64 {
    f64::NAN
}

impl InnovationSpec {
    /// Builds and validates a spec. A NaN skew means the neutral value.
    pub fn new(family: Family, shape: Vec<f64>, skew: f64) -> Result<Self> {
        let skew = if skew.is_nan() { family.neutral_skew() } else { skew };
        let spec = InnovationSpec { family, shape, skew };
        spec.validate()?;
        Ok(spec)
    }

    pub fn normal() -> Self {
        InnovationSpec {
            family: Family::Norm,
            shape: vec![],
            skew: 1.0,
        }
    }

    pub fn student_t(nu: f64) -> Result<Self> {
        Self::new(Family::Std, vec![nu], 1.0)
    }

    /// Family with its default parameter values.
    pub fn default_for(family: Family) -> Self {
        let (shape, skew) = family.default_values();
        InnovationSpec { family, shape, skew }
    }

    /// Fills in a missing (NaN) skew with the neutral value.
    pub fn normalized(mut self) -> Self {
        if self.skew.is_nan() {
            self.skew = self.family.neutral_skew();
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fam = self.family;
        let names = fam.shape_names();
        if self.shape.len() != names.len() {
            return Err(invalid_param(
                "shape",
                format!(
                    "{fam} expects {} shape value(s), got {}",
                    names.len(),
                    self.shape.len()
                ),
            ));
        }
        for ((v, name), (lo, hi)) in self.shape.iter().zip(names).zip(fam.shape_bounds()) {
            if !(v.is_finite() && *v > *lo && *v <= *hi) {
                return Err(invalid_param(name, format!("{v} outside ({lo}, {hi}]")));
            }
        }
        match fam.skew_bounds() {
            None => {
                if (self.skew - 1.0).abs() > 0.0 && !self.skew.is_nan() {
                    return Err(invalid_param("skew", format!("{fam} has no skew parameter")));
                }
            }
            Some((lo, hi)) => {
                let v = self.skew;
                let name = fam.skew_name().unwrap_or("skew");
                if !(v.is_finite() && v > lo && v < hi) {
                    return Err(invalid_param(name, format!("{v} outside ({lo}, {hi})")));
                }
                if fam == Family::Nig && self.shape[0] <= v.abs() + 1e-6 {
                    return Err(invalid_param(
                        "alpha",
                        format!("NIG steepness {} must exceed |beta| + 1e-6", self.shape[0]),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Flattened parameter values: shape first, then skew if present.
    pub fn values(&self) -> Vec<f64> {
        let mut v = self.shape.clone();
        if self.family.skew_name().is_some() {
            v.push(self.skew);
        }
        v
    }

    /// Names matching [`InnovationSpec::values`].
    pub fn names(&self) -> Vec<&'static str> {
        let mut v: Vec<&'static str> = self.family.shape_names().to_vec();
        if let Some(s) = self.family.skew_name() {
            v.push(s);
        }
        v
    }

    /// Rebuilds a spec of the same family from flattened values.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        let k = self.family.shape_names().len();
        let skew = if self.family.skew_name().is_some() {
            *values
                .get(k)
                .ok_or_else(|| invalid_param("skew", "missing value"))?
        } else {
            1.0
        };
        InnovationSpec::new(self.family, values[..k].to_vec(), skew)
    }
}

/// Which parameter a score is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreParam {
    Location,
    LogScale,
    /// Index into [`InnovationSpec::values`].
    Shape(usize),
}

#[derive(Debug, Clone)]
enum Kernel {
    Normal,
    T {
        nu: f64,
        s: f64,
        c: f64,
    },
    Ged {
        kappa: f64,
        lambda: f64,
        c: f64,
    },
    Fs {
        base: Box<Kernel>,
        eta: f64,
        mu: f64,
        sigma: f64,
        c: f64,
    },
    /// `c + ln K_ord(a q) + p ln q + β(x − μ)` with `q = sqrt(δ² + (x − μ)²)`.
    Gh {
        ord: f64,
        a: f64,
        p: f64,
        beta: f64,
        mu: f64,
        delta: f64,
        c: f64,
        mix: Mixing,
    },
    Jsu {
        gamma: f64,
        delta: f64,
        xi: f64,
        lambda: f64,
        c: f64,
    },
    Ast {
        alpha: f64,
        nu1: f64,
        nu2: f64,
        astar: f64,
        m: f64,
        s: f64,
        cl: f64,
        cr: f64,
    },
    Ald {
        kappa: f64,
        rate_pos: f64,
        rate_neg: f64,
        c: f64,
    },
}

#[derive(Debug, Clone, Copy)]
enum Mixing {
    InverseGaussian { mean: f64, shape: f64 },
    Gig { lambda: f64, omega: f64, scale: f64 },
    InverseGamma { shape: f64, scale: f64 },
}

fn t_const(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (std::f64::consts::PI * (nu - 2.0)).ln()
}

/// Log of the Student-t normalizing constant `K(ν)` for unit scale.
fn ln_t_k(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (std::f64::consts::PI * nu).ln()
}

impl Kernel {
    fn build(spec: &InnovationSpec) -> Result<Kernel> {
        let sh = &spec.shape;
        let k = match spec.family {
            Family::Norm => Kernel::Normal,
            Family::Std => Kernel::student(sh[0]),
            Family::Ged => Kernel::ged(sh[0]),
            Family::Snorm => Kernel::fs(Kernel::Normal, spec.skew),
            Family::Sstd => Kernel::fs(Kernel::student(sh[0]), spec.skew),
            Family::Sged => Kernel::fs(Kernel::ged(sh[0]), spec.skew),
            Family::Nig => {
                let alpha = sh[0];
                let beta = spec.skew;
                let gamma = (alpha * alpha - beta * beta).sqrt();
                let delta = gamma.powi(3) / (alpha * alpha);
                Kernel::gh(-0.5, alpha, beta, delta)
            }
            Family::Ghyp => {
                let (lambda, zeta, rho) = (sh[0], sh[1], spec.skew);
                let lk = ln_bessel_k(lambda, zeta);
                let r1 = (ln_bessel_k(lambda + 1.0, zeta) - lk).exp();
                let r2 = (ln_bessel_k(lambda + 2.0, zeta) - lk).exp();
                let om = 1.0 - rho * rho;
                let a2 = zeta * r1 / om + rho * rho * zeta * zeta / (om * om) * (r2 - r1 * r1);
                let alpha = a2.sqrt();
                let beta = rho * alpha;
                let gamma = alpha * om.sqrt();
                Kernel::gh(lambda, alpha, beta, zeta / gamma)
            }
            Family::Ghst => {
                let (nu, b) = (sh[0], spec.skew);
                if b.abs() < 1e-10 {
                    Kernel::student(nu)
                } else {
                    let v = 1.0 / (nu - 2.0) + 2.0 * b * b / ((nu - 2.0).powi(2) * (nu - 4.0));
                    let delta = (1.0 / v).sqrt();
                    let beta = b / delta;
                    let mu = -beta * delta * delta / (nu - 2.0);
                    let ord = 0.5 * (nu + 1.0);
                    let c = 0.5 * (1.0 - nu) * std::f64::consts::LN_2
                        + nu * delta.ln()
                        + ord * beta.abs().ln()
                        - ln_gamma(0.5 * nu)
                        - 0.5 * std::f64::consts::PI.ln();
                    Kernel::Gh {
                        ord,
                        a: beta.abs(),
                        p: -ord,
                        beta,
                        mu,
                        delta,
                        c,
                        mix: Mixing::InverseGamma {
                            shape: 0.5 * nu,
                            scale: 0.5 * delta * delta,
                        },
                    }
                }
            }
            Family::Jsu => {
                let (delta, gamma) = (sh[0], spec.skew);
                let w = (1.0 / (delta * delta)).exp();
                let om = gamma / delta;
                let var = 0.5 * (w - 1.0) * (w * (2.0 * om).cosh() + 1.0);
                let lambda = 1.0 / var.sqrt();
                let xi = lambda * w.sqrt() * om.sinh();
                let c = delta.ln() - lambda.ln() - 0.5 * LN_2PI;
                Kernel::Jsu {
                    gamma,
                    delta,
                    xi,
                    lambda,
                    c,
                }
            }
            Family::Ast => Kernel::ast(spec.skew, sh[0], sh[1]),
            Family::Ast1 => Kernel::ast(spec.skew, sh[0], sh[0]),
            Family::Ald => {
                let kappa = spec.skew;
                let s = (2.0 / (1.0 / (kappa * kappa) + kappa * kappa)).sqrt();
                let c = (SQRT2 / s * kappa / (1.0 + kappa * kappa)).ln();
                Kernel::Ald {
                    kappa,
                    rate_pos: SQRT2 * kappa / s,
                    rate_neg: SQRT2 / (kappa * s),
                    c,
                }
            }
        };
        Ok(k)
    }

    fn student(nu: f64) -> Kernel {
        Kernel::T {
            nu,
            s: nu - 2.0,
            c: t_const(nu),
        }
    }

    fn ged(kappa: f64) -> Kernel {
        let lambda = ((-2.0 / kappa) * std::f64::consts::LN_2 + ln_gamma(1.0 / kappa) - ln_gamma(3.0 / kappa))
            .mul_add(0.5, 0.0)
            .exp();
        let c = kappa.ln()
            - (lambda.ln() + (1.0 + 1.0 / kappa) * std::f64::consts::LN_2 + ln_gamma(1.0 / kappa));
        Kernel::Ged { kappa, lambda, c }
    }

    fn fs(base: Kernel, eta: f64) -> Kernel {
        let m1 = base.abs_mean();
        let mu = m1 * (eta - 1.0 / eta);
        let sigma = ((1.0 - m1 * m1) * (eta * eta + 1.0 / (eta * eta)) + 2.0 * m1 * m1 - 1.0).sqrt();
        let c = (2.0 * sigma / (eta + 1.0 / eta)).ln();
        Kernel::Fs {
            base: Box::new(base),
            eta,
            mu,
            sigma,
            c,
        }
    }

    fn gh(lambda: f64, alpha: f64, beta: f64, delta: f64) -> Kernel {
        let gamma = (alpha * alpha - beta * beta).sqrt();
        let zeta = delta * gamma;
        let lk = ln_bessel_k(lambda, zeta);
        let r1 = (ln_bessel_k(lambda + 1.0, zeta) - lk).exp();
        let mu = -beta * delta * r1 / gamma;
        let c = lambda * (gamma / delta).ln() - 0.5 * LN_2PI - lk - (lambda - 0.5) * alpha.ln();
        let mix = if (lambda + 0.5).abs() < 1e-14 {
            Mixing::InverseGaussian {
                mean: delta / gamma,
                shape: delta * delta,
            }
        } else {
            Mixing::Gig {
                lambda,
                omega: zeta,
                scale: delta / gamma,
            }
        };
        Kernel::Gh {
            ord: lambda - 0.5,
            a: alpha,
            p: lambda - 0.5,
            beta,
            mu,
            delta,
            c,
            mix,
        }
    }

    fn ast(alpha: f64, nu1: f64, nu2: f64) -> Kernel {
        let k1 = ln_t_k(nu1).exp();
        let k2 = ln_t_k(nu2).exp();
        let astar = alpha * k1 / (alpha * k1 + (1.0 - alpha) * k2);
        let e1 = 2.0 * nu1 * k1 / (nu1 - 1.0);
        let e2 = 2.0 * nu2 * k2 / (nu2 - 1.0);
        let m = -alpha * 2.0 * astar * e1 + (1.0 - alpha) * 2.0 * (1.0 - astar) * e2;
        let m2 = alpha * 4.0 * astar * astar * nu1 / (nu1 - 2.0)
            + (1.0 - alpha) * 4.0 * (1.0 - astar).powi(2) * nu2 / (nu2 - 2.0);
        let s = (m2 - m * m).sqrt();
        let cl = (alpha / astar).ln() + k1.ln() + s.ln();
        let cr = ((1.0 - alpha) / (1.0 - astar)).ln() + k2.ln() + s.ln();
        Kernel::Ast {
            alpha,
            nu1,
            nu2,
            astar,
            m,
            s,
            cl,
            cr,
        }
    }

    /// `E|z|` for the symmetric bases used by Fernández–Steel skewing.
    fn abs_mean(&self) -> f64 {
        match *self {
            Kernel::Normal => (2.0 / std::f64::consts::PI).sqrt(),
            Kernel::T { nu, .. } => {
                ((nu - 2.0).sqrt() * (ln_gamma(0.5 * (nu - 1.0)) - ln_gamma(0.5 * nu)).exp())
                    / std::f64::consts::PI.sqrt()
            }
            Kernel::Ged { kappa, lambda, .. } => {
                lambda
                    * (std::f64::consts::LN_2 / kappa + ln_gamma(2.0 / kappa) - ln_gamma(1.0 / kappa))
                        .exp()
            }
            _ => unreachable!("Fernández–Steel skewing needs a symmetric base"),
        }
    }

    #[inline]
    fn lpdf(&self, z: f64) -> f64 {
        match self {
            Kernel::Normal => -0.5 * LN_2PI - 0.5 * z * z,
            Kernel::T { nu, s, c } => c - 0.5 * (nu + 1.0) * (z * z / s).ln_1p(),
            Kernel::Ged { kappa, lambda, c } => c - 0.5 * (z.abs() / lambda).powf(*kappa),
            Kernel::Fs {
                base,
                eta,
                mu,
                sigma,
                c,
            } => {
                let x = sigma * z + mu;
                let y = if x >= 0.0 { x / eta } else { x * eta };
                c + base.lpdf(y)
            }
            Kernel::Gh {
                ord,
                a,
                p,
                beta,
                mu,
                delta,
                c,
                ..
            } => {
                let u = z - mu;
                let q = (delta * delta + u * u).sqrt();
                c + ln_bessel_k(*ord, a * q) + p * q.ln() + beta * u
            }
            Kernel::Jsu {
                gamma,
                delta,
                xi,
                lambda,
                c,
            } => {
                let u = (z - xi) / lambda;
                let w = gamma + delta * u.asinh();
                c - 0.5 * u.mul_add(u, 1.0).ln() - 0.5 * w * w
            }
            Kernel::Ast {
                nu1,
                nu2,
                astar,
                m,
                s,
                cl,
                cr,
                ..
            } => {
                let y = m + s * z;
                if y <= 0.0 {
                    let t = y / (2.0 * astar);
                    cl - 0.5 * (nu1 + 1.0) * (t * t / nu1).ln_1p()
                } else {
                    let t = y / (2.0 * (1.0 - astar));
                    cr - 0.5 * (nu2 + 1.0) * (t * t / nu2).ln_1p()
                }
            }
            Kernel::Ald {
                rate_pos,
                rate_neg,
                c,
                ..
            } => {
                if z >= 0.0 {
                    c - rate_pos * z
                } else {
                    c + rate_neg * z
                }
            }
        }
    }

    /// `d/dz ln f(z)`.
    #[inline]
    fn dlpdf(&self, z: f64) -> f64 {
        match self {
            Kernel::Normal => -z,
            Kernel::T { nu, s, .. } => -(nu + 1.0) * z / (s + z * z),
            Kernel::Ged { kappa, lambda, .. } => {
                if z == 0.0 {
                    0.0
                } else {
                    -0.5 * kappa * (z.abs() / lambda).powf(kappa - 1.0) * z.signum() / lambda
                }
            }
            Kernel::Fs {
                base,
                eta,
                mu,
                sigma,
                ..
            } => {
                let x = sigma * z + mu;
                let k = if x >= 0.0 { 1.0 / eta } else { *eta };
                sigma * k * base.dlpdf(x * k)
            }
            Kernel::Gh {
                ord,
                a,
                p,
                beta,
                mu,
                delta,
                ..
            } => {
                let u = z - mu;
                let q = (delta * delta + u * u).sqrt();
                let dq = u / q;
                a * d_ln_bessel_k(*ord, a * q) * dq + p * dq / q + beta
            }
            Kernel::Jsu {
                gamma,
                delta,
                xi,
                lambda,
                ..
            } => {
                let u = (z - xi) / lambda;
                let r = u.mul_add(u, 1.0);
                let w = gamma + delta * u.asinh();
                (-u / r - w * delta / r.sqrt()) / lambda
            }
            Kernel::Ast {
                nu1,
                nu2,
                astar,
                m,
                s,
                ..
            } => {
                let y = m + s * z;
                let dy = if y <= 0.0 {
                    let w = 2.0 * astar;
                    -(nu1 + 1.0) * y / (nu1 * w * w + y * y)
                } else {
                    let w = 2.0 * (1.0 - astar);
                    -(nu2 + 1.0) * y / (nu2 * w * w + y * y)
                };
                s * dy
            }
            Kernel::Ald {
                rate_pos,
                rate_neg,
                ..
            } => {
                if z > 0.0 {
                    -rate_pos
                } else if z < 0.0 {
                    *rate_neg
                } else {
                    0.5 * (rate_neg - rate_pos)
                }
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Kernel::Normal => rng.sample(StandardNormal),
            Kernel::T { nu, s, .. } => {
                let t: f64 = StudentT::new(*nu).expect("valid nu").sample(rng);
                t * (s / nu).sqrt()
            }
            Kernel::Ged { kappa, lambda, .. } => {
                let g: f64 = Gamma::new(1.0 / kappa, 1.0).expect("valid kappa").sample(rng);
                let mag = lambda * (2.0 * g).powf(1.0 / kappa);
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
            Kernel::Fs {
                base,
                eta,
                mu,
                sigma,
                ..
            } => {
                let b = base.draw(rng).abs();
                let u: f64 = rng.random();
                let x = if u < eta * eta / (1.0 + eta * eta) {
                    b * eta
                } else {
                    -b / eta
                };
                (x - mu) / sigma
            }
            Kernel::Gh { beta, mu, mix, .. } => {
                let w = match *mix {
                    Mixing::InverseGaussian { mean, shape } => InverseGaussian::new(mean, shape)
                        .expect("valid IG")
                        .sample(rng),
                    Mixing::Gig {
                        lambda,
                        omega,
                        scale,
                    } => scale * sample_gig(rng, lambda, omega),
                    Mixing::InverseGamma { shape, scale } => {
                        let g: f64 = Gamma::new(shape, 1.0).expect("valid shape").sample(rng);
                        scale / g
                    }
                };
                let n: f64 = rng.sample(StandardNormal);
                mu + beta * w + w.sqrt() * n
            }
            Kernel::Jsu {
                gamma,
                delta,
                xi,
                lambda,
                ..
            } => {
                let n: f64 = rng.sample(StandardNormal);
                xi + lambda * ((n - gamma) / delta).sinh()
            }
            Kernel::Ast {
                alpha,
                nu1,
                nu2,
                astar,
                m,
                s,
                ..
            } => {
                let u: f64 = rng.random();
                let y = if u < *alpha {
                    let t: f64 = StudentT::new(*nu1).expect("valid nu").sample(rng);
                    -2.0 * astar * t.abs()
                } else {
                    let t: f64 = StudentT::new(*nu2).expect("valid nu").sample(rng);
                    2.0 * (1.0 - astar) * t.abs()
                };
                (y - m) / s
            }
            Kernel::Ald {
                kappa,
                rate_pos,
                rate_neg,
                ..
            } => {
                let e: f64 = rng.sample(Exp1);
                let u: f64 = rng.random();
                if u < 1.0 / (1.0 + kappa * kappa) {
                    e / rate_pos
                } else {
                    -e / rate_neg
                }
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Kernel::Fs { mu, sigma, .. } => vec![-mu / sigma],
            Kernel::Gh { mu, .. } => vec![*mu],
            Kernel::Ast { m, s, .. } => vec![-m / s],
            _ => vec![0.0],
        }
    }
}

/// Generalized inverse Gaussian draw with density `∝ x^{λ−1} exp(−ω(x + 1/x)/2)`
/// (Devroye's exponential-tail rejection sampler on `ln x`).
fn sample_gig<R: Rng + ?Sized>(rng: &mut R, lambda: f64, omega: f64) -> f64 {
    if lambda < 0.0 {
        return 1.0 / sample_gig(rng, -lambda, omega);
    }
    let alpha = (omega * omega + lambda * lambda).sqrt() - lambda;
    let psi = |x: f64| -alpha * (x.cosh() - 1.0) - lambda * (x.exp() - x - 1.0);
    let dpsi = |x: f64| -alpha * x.sinh() - lambda * (x.exp() - 1.0);
    let x = -psi(1.0);
    let t = if (0.5..=2.0).contains(&x) {
        1.0
    } else if x > 2.0 {
        (2.0 / (alpha + lambda)).sqrt()
    } else {
        (4.0 / (alpha + 2.0 * lambda)).ln()
    };
    let x = -psi(-1.0);
    let s = if (0.5..=2.0).contains(&x) {
        1.0
    } else if x > 2.0 {
        (4.0 / (alpha * 1f64.cosh() + lambda)).sqrt()
    } else {
        let inv = 1.0 / alpha;
        (1.0 / lambda).min((1.0 + inv + (inv * inv + 2.0 * inv).sqrt()).ln())
    };
    let eta = -psi(t);
    let zeta = -dpsi(t);
    let theta = -psi(-s);
    let xi = dpsi(-s);
    let p = 1.0 / xi;
    let r = 1.0 / zeta;
    let td = t - r * eta;
    let sd = s - p * theta;
    let q = td + sd;
    let total = p + q + r;
    loop {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let w: f64 = rng.random();
        let x = if u < q / total {
            -sd + q * v
        } else if u < (q + r) / total {
            td - r * v.ln()
        } else {
            -sd + p * v.ln()
        };
        let chi = if x < -sd {
            (-theta + xi * (x + s)).exp()
        } else if x > td {
            (-eta - zeta * (x - t)).exp()
        } else {
            1.0
        };
        if w * chi <= psi(x).exp() {
            let ratio = lambda / omega;
            return (ratio + (1.0 + ratio * ratio).sqrt()) * x.exp();
        }
    }
}

/// An innovation density ready for evaluation and sampling.
#[derive(Debug, Clone)]
pub struct StandardizedDensity {
    spec: InnovationSpec,
    kernel: Kernel,
}

impl StandardizedDensity {
    pub fn new(spec: InnovationSpec) -> Result<Self> {
        let spec = spec.normalized();
        spec.validate()?;
        let kernel = Kernel::build(&spec)?;
        Ok(StandardizedDensity { spec, kernel })
    }

    pub fn normal() -> Self {
        StandardizedDensity::new(InnovationSpec::normal()).expect("valid")
    }

    pub fn spec(&self) -> &InnovationSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn log_pdf(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::InvalidInput(format!("log_pdf at non-finite z = {z}")));
        }
        Ok(self.kernel.lpdf(z))
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        self.log_pdf(z).map(f64::exp)
    }

    /// Log density without input checks, for inner loops.
    #[inline]
    pub fn ln_pdf(&self, z: f64) -> f64 {
        self.kernel.lpdf(z)
    }

    /// `d/dz ln f(z)`.
    #[inline]
    pub fn d_ln_pdf(&self, z: f64) -> f64 {
        self.kernel.dlpdf(z)
    }

    /// Score of `ln[(1/σ) f((r − μ)/σ)]` at `μ = 0`, `σ = 1`, `r = z`.
    pub fn score(&self, z: f64, which: ScoreParam) -> Result<f64> {
        let lp = self.log_pdf(z)?;
        if !lp.is_finite() {
            return Err(Error::NonFinite {
                what: "log density".into(),
                t: 0,
            });
        }
        let v = match which {
            ScoreParam::Location => -self.d_ln_pdf(z),
            ScoreParam::LogScale => -1.0 - z * self.d_ln_pdf(z),
            ScoreParam::Shape(k) => {
                let vals = self.spec.values();
                if k >= vals.len() {
                    return Err(invalid_param("shape", format!("index {k} out of range")));
                }
                let h = 1e-4 * vals[k].abs().max(1.0);
                let at = |step: f64| -> Result<f64> {
                    let mut v = vals.clone();
                    v[k] += step;
                    StandardizedDensity::new(self.spec.with_values(&v)?)?.log_pdf(z)
                };
                (-at(2.0 * h)? + 8.0 * at(h)? - 8.0 * at(-h)? + at(-2.0 * h)?) / (12.0 * h)
            }
        };
        Ok(v)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.kernel.draw(rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.kernel.draw(rng)).collect()
    }

    /// `n` draws from a ChaCha8 generator seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidInput("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(self.sample_with(&mut rng, n))
    }

    /// Points where the density has a kink or its mode, for quadrature splitting.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.kernel.breakpoints()
    }

    /// `E[g(z)]` by adaptive quadrature; `extra_breaks` adds kinks of `g`.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G, extra_breaks: &[f64], tol: f64) -> Result<f64> {
        let mut breaks = self.breakpoints();
        breaks.extend_from_slice(extra_breaks);
        let r = quadrature::integrate_line(
            |z| {
                let lp = self.kernel.lpdf(z);
                if lp < -745.0 {
                    0.0
                } else {
                    g(z) * lp.exp()
                }
            },
            &breaks,
            tol,
        )?;
        Ok(r.value)
    }

    /// Mean of `z` (0 except for ALD).
    pub fn mean(&self) -> f64 {
        match self.kernel {
            Kernel::Ald { kappa, rate_pos, .. } => {
                let s = SQRT2 * kappa / rate_pos;
                s / SQRT2 * (1.0 / kappa - kappa)
            }
            _ => 0.0,
        }
    }

    /// Numeric CDF by quadrature.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        let f = |x: f64| self.kernel.lpdf(x).exp();
        let mut val = quadrature::integrate_lower(f, z.min(-8.0), 1e-12)?.value;
        let mut pts: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .filter(|b| *b > -8.0 && *b < z)
            .collect();
        pts.insert(0, z.min(-8.0));
        pts.push(z);
        for w in pts.windows(2) {
            if w[1] > w[0] {
                val += quadrature::integrate(f, w[0], w[1], 1e-12)?.value;
            }
        }
        Ok(val)
    }
}

/// Fernández–Steel skewing of a symmetric standardized base (Normal, Student t or GED).
pub fn fs_skew(base: &StandardizedDensity, eta: f64) -> Result<StandardizedDensity> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid_param("eta", format!("{eta} must be positive")));
    }
    let family = match base.family() {
        Family::Norm => Family::Snorm,
        Family::Std => Family::Sstd,
        Family::Ged => Family::Sged,
        f => {
            return Err(Error::InvalidInput(format!(
                "fs_skew needs a symmetric Normal, t or GED base, got {f}"
            )))
        }
    };
    StandardizedDensity::new(InnovationSpec::new(family, base.spec.shape.clone(), eta)?)
}

/// Mean of a Fernández–Steel skewed unit-scale Student t (not variance-standardized):
/// `μ = M₁(η − 1/η)` with `M₁ = 2 sqrt(ν) Γ((ν+1)/2) / (sqrt(π) (ν−1) Γ(ν/2))`.
pub fn skew_t_mean(nu: f64, eta: f64) -> f64 {
    let m1 = 2.0 * nu.sqrt() * (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)).exp()
        / (std::f64::consts::PI.sqrt() * (nu - 1.0));
    m1 * (eta - 1.0 / eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixtures() -> Vec<InnovationSpec> {
        vec![
            InnovationSpec::normal(),
            InnovationSpec::new(Family::Snorm, vec![], 0.8).unwrap(),
            InnovationSpec::new(Family::Std, vec![4.1], 1.0).unwrap(),
            InnovationSpec::new(Family::Sstd, vec![6.21], 0.8709).unwrap(),
            InnovationSpec::new(Family::Ged, vec![1.3], 1.0).unwrap(),
            InnovationSpec::new(Family::Sged, vec![1.3], 1.2).unwrap(),
            InnovationSpec::new(Family::Nig, vec![1.2], -0.3).unwrap(),
            InnovationSpec::new(Family::Ghyp, vec![1.3, 1.1], -0.2).unwrap(),
            InnovationSpec::new(Family::Ghst, vec![9.0], -0.8).unwrap(),
            InnovationSpec::new(Family::Jsu, vec![1.7], 0.4).unwrap(),
            InnovationSpec::new(Family::Ast, vec![5.0, 9.0], 0.45).unwrap(),
            InnovationSpec::new(Family::Ast1, vec![6.0], 0.55).unwrap(),
            InnovationSpec::new(Family::Ald, vec![], 0.8).unwrap(),
        ]
    }

    #[test]
    fn normal_log_pdf_at_zero() {
        let d = StandardizedDensity::normal();
        assert!((d.log_pdf(0.0).unwrap() + 0.918_938_533_204_672_8).abs() < 1e-14);
        assert!(d.log_pdf(f64::NAN).is_err());
    }

    #[test]
    fn t_symmetry_and_skew_direction() {
        let t = StandardizedDensity::new(InnovationSpec::student_t(4.1).unwrap()).unwrap();
        assert_eq!(t.log_pdf(3.0).unwrap(), t.log_pdf(-3.0).unwrap());
        let s = StandardizedDensity::new(InnovationSpec::new(Family::Sstd, vec![6.21], 0.8709).unwrap())
            .unwrap();
        assert!(s.pdf(-3.0).unwrap() > s.pdf(3.0).unwrap());
        let third = s.expect(|z| z * z * z, &[], 1e-10).unwrap();
        assert!(third < 0.0);
    }

    #[test]
    fn normalization_mean_variance() {
        for spec in fixtures() {
            let d = StandardizedDensity::new(spec.clone()).unwrap();
            let mass = d.expect(|_| 1.0, &[], 1e-11).unwrap();
            let mean = d.expect(|z| z, &[], 1e-11).unwrap();
            let var = d.expect(|z| z * z, &[], 1e-10).unwrap() - mean * mean;
            assert!((mass - 1.0).abs() < 1e-6, "{:?} mass {mass}", spec);
            assert!((mean - d.mean()).abs() < 1e-4, "{:?} mean {mean}", spec);
            assert!((var - 1.0).abs() < 1e-4, "{:?} var {var}", spec);
        }
    }

    #[test]
    fn ghyp_at_minus_half_is_nig() {
        let (alpha, beta) = (1.4_f64, 0.5_f64);
        let nig = StandardizedDensity::new(InnovationSpec::new(Family::Nig, vec![alpha], beta).unwrap())
            .unwrap();
        let rho = beta / alpha;
        let zeta = alpha * alpha * (1.0 - rho * rho).powi(2);
        let gh = StandardizedDensity::new(InnovationSpec::new(Family::Ghyp, vec![-0.5, zeta], rho).unwrap())
            .unwrap();
        for i in -20..=20 {
            let z = i as f64 * 0.3;
            assert!((nig.ln_pdf(z) - gh.ln_pdf(z)).abs() < 1e-9, "z={z}");
        }
    }

    #[test]
    fn ghst_tends_to_t() {
        let t = StandardizedDensity::new(InnovationSpec::student_t(7.0).unwrap()).unwrap();
        let g = StandardizedDensity::new(InnovationSpec::new(Family::Ghst, vec![7.0], 1e-6).unwrap())
            .unwrap();
        for i in -10..=10 {
            let z = i as f64 * 0.5;
            assert!((t.ln_pdf(z) - g.ln_pdf(z)).abs() < 1e-5);
        }
    }

    #[test]
    fn ast1_is_ast_with_equal_tails() {
        let a = StandardizedDensity::new(InnovationSpec::new(Family::Ast, vec![6.0, 6.0], 0.4).unwrap())
            .unwrap();
        let b = StandardizedDensity::new(InnovationSpec::new(Family::Ast1, vec![6.0], 0.4).unwrap())
            .unwrap();
        for i in -10..=10 {
            let z = i as f64 * 0.4;
            assert_eq!(a.ln_pdf(z), b.ln_pdf(z));
        }
    }

    #[test]
    fn fs_identity_and_mirror() {
        let base = StandardizedDensity::new(InnovationSpec::new(Family::Ged, vec![1.6], 1.0).unwrap())
            .unwrap();
        let same = fs_skew(&base, 1.0).unwrap();
        for i in 0..20 {
            let z = -3.0 + i as f64 * 0.31;
            assert!((same.pdf(z).unwrap() - base.pdf(z).unwrap()).abs() < 1e-12);
        }
        let a = fs_skew(&base, 1.7).unwrap();
        let b = fs_skew(&base, 1.0 / 1.7).unwrap();
        for i in 0..20 {
            let z = -3.0 + i as f64 * 0.31;
            assert!((a.pdf(z).unwrap() - b.pdf(-z).unwrap()).abs() < 1e-10);
        }
        assert!(fs_skew(&base, 0.0).is_err());
    }

    #[test]
    fn score_matches_difference() {
        for spec in fixtures() {
            let d = StandardizedDensity::new(spec.clone()).unwrap();
            for i in 0..25 {
                let z = -2.9 + i as f64 * 0.2417;
                let h = 1e-6 * z.abs().max(1.0);
                let lp = |m: f64, ls: f64| d.ln_pdf((z - m) / ls.exp()) - ls;
                let fd_loc = (lp(h, 0.0) - lp(-h, 0.0)) / (2.0 * h);
                let fd_ls = (lp(0.0, 1e-6) - lp(0.0, -1e-6)) / 2e-6;
                let a_loc = d.score(z, ScoreParam::Location).unwrap();
                let a_ls = d.score(z, ScoreParam::LogScale).unwrap();
                assert!((a_loc - fd_loc).abs() <= 1e-4 * fd_loc.abs().max(1.0), "{spec:?} z={z}");
                assert!((a_ls - fd_ls).abs() <= 1e-4 * fd_ls.abs().max(1.0), "{spec:?} z={z}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = StandardizedDensity::new(InnovationSpec::student_t(4.1).unwrap()).unwrap();
        assert_eq!(d.sample(100, 7).unwrap(), d.sample(100, 7).unwrap());
        assert!(d.sample(0, 7).is_err());
    }

    #[test]
    fn nig_bound_enforced() {
        assert!(InnovationSpec::new(Family::Nig, vec![0.5], 0.5).is_err());
        assert!(InnovationSpec::new(Family::Std, vec![2.0], 1.0).is_err());
        assert!(InnovationSpec::new(Family::Std, vec![4.0, 1.0], 1.0).is_err());
        assert!("sstd".parse::<Family>().unwrap() == Family::Sstd);
    }
}
