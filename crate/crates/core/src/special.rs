//! Special functions: modified Bessel functions of the second kind for real order.
//!
//! `K_nu(x)` is evaluated with Temme's series for `x < 2` and Steed's continued
//! fraction for `x >= 2`, then carried to the requested order by forward
//! recurrence. Everything is kept in log space so large orders and small
//! arguments do not overflow.

use std::sync::OnceLock;

use statrs::function::gamma::gamma;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;
const EULER: f64 = 0.577_215_664_901_532_9;
const RESCALE: f64 = 1e250;

/// `ln K_nu(x)` and the ratio `K_{nu+1}(x) / K_nu(x)` for `x > 0`.
///
/// The order may be negative; `K_{-nu} = K_nu` is used.
pub fn bessel_k_log_and_ratio(nu: f64, x: f64) -> (f64, f64) {
    if !(x > 0.0) || !nu.is_finite() || !x.is_finite() {
        return (f64::NAN, f64::NAN);
    }
    let nu = nu.abs();
    if nu.fract() == 0.0 && nu <= MAX_FAST_ORDER {
        return integer_order(nu as usize, x);
    }
    general_order(nu, x)
}

const MAX_FAST_ORDER: f64 = 64.0;
const CHEB_NODES: usize = 26;

/// Chebyshev coefficients of `sqrt(x) e^x K_n(x)` for `n = 0, 1` in `t = 4/x − 1`, `x ≥ 2`.
fn tail_coefficients() -> &'static [[f64; CHEB_NODES]; 2] {
    static COEF: OnceLock<[[f64; CHEB_NODES]; 2]> = OnceLock::new();
    COEF.get_or_init(|| {
        let mut out = [[0.0; CHEB_NODES]; 2];
        let n = CHEB_NODES as f64;
        for (order, row) in out.iter_mut().enumerate() {
            let vals: Vec<f64> = (0..CHEB_NODES)
                .map(|k| {
                    let theta = std::f64::consts::PI * (k as f64 + 0.5) / n;
                    let x = 4.0 / (theta.cos() + 1.0);
                    (general_order(order as f64, x).0 + x + 0.5 * x.ln()).exp()
                })
                .collect();
            for (j, c) in row.iter_mut().enumerate() {
                *c = (2.0 / n)
                    * (0..CHEB_NODES)
                        .map(|k| {
                            let theta = std::f64::consts::PI * (k as f64 + 0.5) / n;
                            vals[k] * (j as f64 * theta).cos()
                        })
                        .sum::<f64>();
            }
        }
        out
    })
}

fn chebyshev(c: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &cj in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + cj;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + 0.5 * c[0]
}

const SERIES_TERMS: usize = 18;

/// Power-series coefficients in `y = x²/4` of `I_0`, `Σ H_k y^k/(k!)²`, `2I_1/x` and
/// `Σ (ψ(k+1) + ψ(k+2)) y^k/(k!(k+1)!)`.
fn series_coefficients() -> &'static [[f64; SERIES_TERMS]; 4] {
    static COEF: OnceLock<[[f64; SERIES_TERMS]; 4]> = OnceLock::new();
    COEF.get_or_init(|| {
        let mut c = [[0.0; SERIES_TERMS]; 4];
        let mut term = 1.0;
        let mut h = 0.0;
        for k in 0..SERIES_TERMS {
            let kf = k as f64;
            if k > 0 {
                h += 1.0 / kf;
                term /= kf * kf;
            }
            let t1 = term / (kf + 1.0);
            c[0][k] = term;
            c[1][k] = h * term;
            c[2][k] = t1;
            c[3][k] = (-2.0 * EULER + 2.0 * h + 1.0 / (kf + 1.0)) * t1;
        }
        c
    })
}

/// `(K_0(x), K_1(x))` scaled by `e^{scale}`; returns the log scale.
fn k0_k1(x: f64) -> (f64, f64, f64) {
    if x <= 2.0 {
        let y = 0.25 * x * x;
        let l = (0.5 * x).ln();
        let c = series_coefficients();
        let horner = |row: &[f64; SERIES_TERMS]| row.iter().rev().fold(0.0, |acc, v| acc * y + v);
        let (i0, s0, i1, s1) = (horner(&c[0]), horner(&c[1]), horner(&c[2]), horner(&c[3]));
        let k0 = -(l + EULER) * i0 + s0;
        let k1 = 1.0 / x + 0.5 * x * (l * i1 - 0.5 * s1);
        (k0, k1, 0.0)
    } else {
        let c = tail_coefficients();
        let t = 4.0 / x - 1.0;
        let r = 1.0 / x.sqrt();
        (chebyshev(&c[0], t) * r, chebyshev(&c[1], t) * r, -x)
    }
}

fn integer_order(n: usize, x: f64) -> (f64, f64) {
    let (mut km, mut k, mut log_scale) = k0_k1(x);
    if n == 0 {
        return (km.ln() + log_scale, k / km);
    }
    let xi2 = 2.0 / x;
    for i in 1..n {
        let next = i as f64 * xi2 * k + km;
        km = k;
        k = next;
        if k > RESCALE {
            km /= RESCALE;
            k /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    let next = n as f64 * xi2 * k + km;
    (k.ln() + log_scale, next / k)
}

fn general_order(nu: f64, x: f64) -> (f64, f64) {
    let nl = (nu + 0.5).floor() as usize;
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    // (rkmu, rk1) carry K_xmu and K_{xmu+1} up to a factor exp(log_scale).
    let (mut rkmu, mut rk1, mut log_scale);
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = std::f64::consts::PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let mut d = -x2.ln();
        let mut e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        e = e.exp();
        let mut p = 0.5 * e / gampl;
        let mut q = 0.5 / (e * gammi);
        let mut c = 1.0;
        d = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= d / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        rkmu = sum;
        rk1 = sum1 * xi2;
        log_scale = 0.0;
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - xmu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        rkmu = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
        rk1 = rkmu * (xmu + x + 0.5 - h) * xi;
        log_scale = -x;
    }
    for i in 1..=nl {
        let next = (xmu + i as f64) * xi2 * rk1 + rkmu;
        rkmu = rk1;
        rk1 = next;
        if rk1 > RESCALE {
            rkmu /= RESCALE;
            rk1 /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    (rkmu.ln() + log_scale, rk1 / rkmu)
}

/// `ln K_nu(x)`.
pub fn ln_bessel_k(nu: f64, x: f64) -> f64 {
    bessel_k_log_and_ratio(nu, x).0
}

/// `K_nu(x)`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    ln_bessel_k(nu, x).exp()
}

/// Derivative of `ln K_nu(x)` with respect to `x`.
pub fn d_ln_bessel_k(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    let (_, ratio) = bessel_k_log_and_ratio(nu, x);
    nu / x - ratio
}

/// Temme's auxiliary gamma quantities for `|mu| <= 1/2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let gampl = 1.0 / gamma(1.0 + mu);
    let gammi = 1.0 / gamma(1.0 - mu);
    let gam2 = 0.5 * (gammi + gampl);
    let gam1 = if mu.abs() < 1e-4 {
        -EULER + 0.042_002_635_034_095_2 * mu * mu
    } else {
        (gammi - gampl) / (2.0 * mu)
    };
    (gam1, gam2, gampl, gammi)
}
