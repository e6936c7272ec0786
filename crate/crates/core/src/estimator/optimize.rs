//! Nelder–Mead followed by BFGS with central-difference gradients.

/// Objective value substituted for non-finite evaluations.
pub const PENALTY: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimOptions {
    /// Simplex stops once the spread of values falls below this.
    pub simplex_tol: f64,
    /// Simplex evaluation budget per dimension.
    pub simplex_evals_per_dim: usize,
    pub initial_step: f64,
    pub max_iter: usize,
    pub step_tol: f64,
    pub value_tol: f64,
    /// Gradient norm required for convergence.
    pub grad_tol: f64,
    /// Simplex-plus-BFGS restarts from the best point after a stall.
    pub restarts: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            simplex_tol: 1e-4,
            simplex_evals_per_dim: 40,
            initial_step: 0.2,
            max_iter: 400,
            step_tol: 1e-8,
            value_tol: 1e-10,
            grad_tol: 1e-3,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v.min(PENALTY)
        } else {
            PENALTY
        }
    }

    fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        let mut v = x.to_vec();
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() {
            let h = 1e-6 * x[i].abs().max(1.0);
            v[i] = x[i] + h;
            let fp = self.call(&v);
            v[i] = x[i] - h;
            let fm = self.call(&v);
            v[i] = x[i];
            g[i] = if fp >= PENALTY || fm >= PENALTY {
                0.0
            } else {
                (fp - fm) / (2.0 * h)
            };
        }
        g
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(obj: &mut Counted<F>, x0: &[f64], o: &OptimOptions) -> (Vec<f64>, f64) {
    let n = x0.len();
    let budget = obj.evals + o.simplex_evals_per_dim * n.max(1);
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += o.initial_step * x0[i].abs().max(1.0);
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| obj.call(p)).collect();
    loop {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let spread = vals[n] - vals[0];
        if (spread.abs() <= o.simplex_tol && vals[n] < PENALTY) || obj.evals >= budget {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |c: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + c * (pts[n][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = obj.call(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = obj.call(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(-0.5);
            let fc = obj.call(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = obj.call(&xc);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let p: Vec<f64> = (0..n).map(|j| pts[0][j] + 0.5 * (pts[i][j] - pts[0][j])).collect();
            vals[i] = obj.call(&p);
            pts[i] = p;
        }
    }
    (pts[0].clone(), vals[0])
}

/// Minimizes `f` from `x0`. Non-finite values are replaced by [`PENALTY`].
///
/// Convergence requires a gradient norm below `grad_tol`. A stalled run restarts
/// the simplex from its best point with a smaller initial step.
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], o: &OptimOptions) -> OptimResult {
    let mut obj = Counted { f, evals: 0 };
    let mut x = x0.to_vec();
    let mut step = o.initial_step;
    let mut iterations = 0;
    let mut result = None;
    for _ in 0..=o.restarts {
        let (xs, _) = nelder_mead(&mut obj, &x, &OptimOptions { initial_step: step, ..o.clone() });
        let r = bfgs(&mut obj, xs, o);
        iterations += r.iterations;
        x = r.x.clone();
        let done = r.converged;
        result = Some(r);
        if done {
            break;
        }
        step *= 0.1;
    }
    let r = result.expect("at least one pass");
    OptimResult {
        iterations,
        evaluations: obj.evals,
        converged: r.converged && r.value < PENALTY,
        ..r
    }
}

fn bfgs<F: FnMut(&[f64]) -> f64>(obj: &mut Counted<F>, x0: Vec<f64>, o: &OptimOptions) -> OptimResult {
    let n = x0.len();
    let mut x = x0;
    let mut fx = obj.call(&x);
    let mut g = obj.gradient(&x);
    let mut h = identity(n);
    let mut fresh = true;
    let mut iterations = 0;
    while iterations < o.max_iter {
        iterations += 1;
        let mut d: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| h[i][j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = -norm(&g).powi(2);
        }
        if slope == 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let fnew = obj.call(&xn);
            if fnew <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if !fresh {
                h = identity(n);
                fresh = true;
                continue;
            }
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let df = fx - fnew;
        let gn = obj.gradient(&xn);
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-10 * norm(&s) * norm(&y) && sy > 0.0 {
            if fresh {
                let yy: f64 = y.iter().map(|a| a * a).sum();
                let scale = sy / yy;
                h = identity(n);
                for (i, row) in h.iter_mut().enumerate() {
                    row[i] = scale;
                }
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }
        x = xn;
        fx = fnew;
        g = gn;
        let max_step = s
            .iter()
            .zip(&x)
            .map(|(a, b)| a.abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        if norm(&g) < o.grad_tol && (max_step < o.step_tol || df.abs() < o.value_tol) {
            break;
        }
        if max_step < o.step_tol && df.abs() < o.value_tol {
            if fresh {
                break;
            }
            h = identity(n);
            fresh = true;
        }
    }
    let grad_norm = norm(&g);
    OptimResult {
        converged: grad_norm < o.grad_tol,
        grad_norm,
        x,
        value: fx,
        iterations,
        evaluations: 0,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(f, &[-1.2, 1.0], &OptimOptions::default());
        assert!(r.converged, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn quadratic_with_penalty_region() {
        let f = |x: &[f64]| {
            if x[0] < -1.0 {
                f64::NAN
            } else {
                (x[0] - 2.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2) + 0.5 * x[0] * x[1]
            }
        };
        let r = minimize(f, &[5.0, 5.0], &OptimOptions::default());
        assert!(r.converged);
        let det = 2.0 * 6.0 - 0.25;
        let x0 = (4.0 * 6.0 - 0.5 * -3.0) / det;
        let x1 = (2.0 * -3.0 - 0.5 * 4.0) / det;
        assert!((r.x[0] - x0).abs() < 1e-6 && (r.x[1] - x1).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn rough_objective_is_not_converged() {
        let f = |x: &[f64]| x[0] * x[0] + 1e-3 * (1e7 * x[0]).sin();
        let r = minimize(f, &[1.0], &OptimOptions::default());
        assert!(!r.converged, "{r:?}");
        assert!(r.x[0].abs() < 0.1, "{r:?}");
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(4) + (x[1] * x[0] - 1.0).powi(2) + x[2].powi(2);
        let a = minimize(f, &[1.0, 1.0, 1.0], &OptimOptions::default());
        let b = minimize(f, &[1.0, 1.0, 1.0], &OptimOptions::default());
        assert_eq!(a, b);
    }
}
