//! Maps between the feasible parameter region and unconstrained coordinates.

#[inline]
fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
fn to_unit(x: f64, lo: f64, hi: f64) -> f64 {
    ((x - lo) / (hi - lo)).clamp(1e-15, 1.0 - 1e-15)
}

/// Transform of one contiguous block of parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Block {
    /// `x = u`.
    Free,
    /// `x = e^u`.
    Positive,
    /// `x = lo + (hi − lo) logistic(u)`.
    Interval { lo: f64, hi: f64 },
    /// `(ρ, α, β)` with `0 < α + β < ρ < 1`: `ρ = logistic(u₀)`,
    /// `s = ρ logistic(u₁)`, `α = s logistic(u₂)`, `β = s − α`.
    Ordered,
    /// `(α, γ)` with `α > 0`, `α + γ > 0`: `α = e^{u₀}`, `γ = −α + e^{u₁}`.
    Threshold,
    /// `(α, β)` with `α > |β|`: `ζ = e^{u₀}`, `ρ = tanh(u₁)`, `α = √ζ/(1 − ρ²)`, `β = ρα`.
    Steepness,
    /// `(φ₁, φ₂)` with `−1 < φ₂ < φ₁ < 1`.
    Descending,
}

impl Block {
    pub fn width(&self) -> usize {
        match self {
            Block::Free | Block::Positive | Block::Interval { .. } => 1,
            Block::Ordered => 3,
            Block::Threshold | Block::Steepness | Block::Descending => 2,
        }
    }

    fn forward(&self, u: &[f64], x: &mut [f64]) {
        match *self {
            Block::Free => x[0] = u[0],
            Block::Positive => x[0] = u[0].exp(),
            Block::Interval { lo, hi } => x[0] = lo + (hi - lo) * logistic(u[0]),
            Block::Ordered => {
                let rho = logistic(u[0]);
                let s = rho * logistic(u[1]);
                let a = s * logistic(u[2]);
                x[0] = rho;
                x[1] = a;
                x[2] = s - a;
            }
            Block::Threshold => {
                let a = u[0].exp();
                x[0] = a;
                x[1] = -a + u[1].exp();
            }
            Block::Steepness => {
                let zeta = u[0].exp();
                let rho = u[1].tanh();
                let alpha = zeta.sqrt() / (1.0 - rho * rho);
                x[0] = alpha;
                x[1] = rho * alpha;
            }
            Block::Descending => {
                let p1 = u[0].tanh();
                x[0] = p1;
                x[1] = -1.0 + (p1 + 1.0) * logistic(u[1]);
            }
        }
    }

    fn inverse(&self, x: &[f64], u: &mut [f64]) {
        match *self {
            Block::Free => u[0] = x[0],
            Block::Positive => u[0] = x[0].max(1e-300).ln(),
            Block::Interval { lo, hi } => u[0] = logit(to_unit(x[0], lo, hi)),
            Block::Ordered => {
                let (rho, a, b) = (x[0], x[1], x[2]);
                let s = a + b;
                u[0] = logit(to_unit(rho, 0.0, 1.0));
                u[1] = logit(to_unit(s / rho, 0.0, 1.0));
                u[2] = logit(to_unit(a / s, 0.0, 1.0));
            }
            Block::Threshold => {
                u[0] = x[0].max(1e-300).ln();
                u[1] = (x[0] + x[1]).max(1e-300).ln();
            }
            Block::Steepness => {
                let rho = (x[1] / x[0]).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                let zeta = (x[0] * (1.0 - rho * rho)).powi(2);
                u[0] = zeta.max(1e-300).ln();
                u[1] = rho.atanh();
            }
            Block::Descending => {
                let p1 = x[0].clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                u[0] = p1.atanh();
                u[1] = logit(to_unit(x[1], -1.0, p1));
            }
        }
    }
}

/// Sequence of blocks covering a parameter vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamTransform {
    blocks: Vec<Block>,
}

impl ParamTransform {
    pub fn new(blocks: Vec<Block>) -> Self {
        ParamTransform { blocks }
    }

    pub fn push(&mut self, b: Block) {
        self.blocks.push(b);
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Block::width).sum()
    }

    /// Unconstrained to natural coordinates.
    pub fn forward(&self, u: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; u.len()];
        let mut i = 0;
        for b in &self.blocks {
            let w = b.width();
            b.forward(&u[i..i + w], &mut x[i..i + w]);
            i += w;
        }
        x
    }

    /// Natural to unconstrained coordinates; values on the boundary are pulled inside.
    pub fn inverse(&self, x: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; x.len()];
        let mut i = 0;
        for b in &self.blocks {
            let w = b.width();
            b.inverse(&x[i..i + w], &mut u[i..i + w]);
            i += w;
        }
        u
    }

    /// Central-difference Jacobian `∂x/∂u`, row-major.
    pub fn jacobian(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let n = u.len();
        let mut jac = vec![vec![0.0; n]; n];
        let mut v = u.to_vec();
        for j in 0..n {
            let h = 1e-6 * u[j].abs().max(1.0);
            v[j] = u[j] + h;
            let xp = self.forward(&v);
            v[j] = u[j] - h;
            let xm = self.forward(&v);
            v[j] = u[j];
            for i in 0..n {
                jac[i][j] = (xp[i] - xm[i]) / (2.0 * h);
            }
        }
        jac
    }
}
