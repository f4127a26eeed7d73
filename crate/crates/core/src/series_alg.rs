//! Truncated power series and the Taylor-coefficient recursions for
//! `G = Φ⁻¹`, `H = Ψ∘Φ⁻¹` and `A(z) = G(z) / (z H(z))`.

use crate::error::{Error, Result};
use crate::pgf::Model;

pub const DEFAULT_ORDER: usize = 32;

/// Taylor coefficients `c₀..=c_N` of a series at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// Pads or truncates `coeffs` to `order + 1` entries.
    pub fn new(mut coeffs: Vec<f64>, order: usize) -> Self {
        coeffs.resize(order + 1, 0.0);
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(Vec::new(), order)
    }

    pub fn one(order: usize) -> Self {
        Self::new(vec![1.0], order)
    }

    /// The series `z`.
    pub fn identity(order: usize) -> Self {
        Self::new(vec![0.0, 1.0], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Cauchy product, truncated to the smaller of the two orders.
    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut out = vec![0.0; order + 1];
        for (i, &a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|n| self.coeff(n) + other.coeff(n))
            .collect();
        Self { coeffs }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// `self(inner(z))`; needs `inner(0) = 0`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if inner.coeff(0) != 0.0 {
            return Err(Error::CompositionNeedsZeroConstant);
        }
        let order = self.order().min(inner.order());
        let inner = Self::new(inner.coeffs.clone(), order);
        let mut acc = Self::zero(order);
        for &c in self.coeffs.iter().take(order + 1).rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }

    /// `1 / self`; needs `self(0) ≠ 0`.
    pub fn reciprocal(&self) -> Result<Self> {
        let a0 = self.coeff(0);
        if a0 == 0.0 {
            return Err(Error::DivisionByZeroConstant);
        }
        let n = self.order();
        let mut out = vec![0.0; n + 1];
        out[0] = 1.0 / a0;
        for k in 1..=n {
            let s: f64 = (1..=k).map(|j| self.coeffs[j] * out[k - j]).sum();
            out[k] = -s / a0;
        }
        Ok(Self { coeffs: out })
    }

    /// Compositional inverse `F` with `F(self(z)) = z`; needs `self(0) = 0`
    /// and `self'(0) ≠ 0`.
    pub fn reversion(&self) -> Result<Self> {
        if self.coeff(0) != 0.0 {
            return Err(Error::CompositionNeedsZeroConstant);
        }
        let a1 = self.coeff(1);
        if a1 == 0.0 {
            return Err(Error::DivisionByZeroConstant);
        }
        let n = self.order();
        // powers[k] = self^k; [z^m] self^k = 0 for m < k and a1^k at m = k.
        let mut powers = vec![Self::one(n)];
        for k in 1..=n {
            powers.push(powers[k - 1].mul(self));
        }
        let mut f = vec![0.0; n + 1];
        for m in 1..=n {
            let target = if m == 1 { 1.0 } else { 0.0 };
            let known: f64 = (1..m).map(|k| f[k] * powers[k].coeff(m)).sum();
            f[m] = (target - known) / powers[m].coeff(m);
        }
        Ok(Self { coeffs: f })
    }
}

/// Taylor coefficients of `G = Φ⁻¹` from `G(p₁z) = P(G(z))`, `G(z) ~ z`:
/// `g_n (p₁ⁿ − p₁) = [zⁿ] Σ_{k≥2} p_k G(z)^k`, where the right side only
/// involves `g₁..g_{n−1}`.
pub fn phi_inv_coeffs(model: &Model, n_max: usize) -> TruncatedSeries {
    let p1 = model.p1;
    let p = model.p.coeffs();
    let mut g = TruncatedSeries::identity(n_max);
    for n in 2..=n_max {
        // g_n is still zero here, so it does not enter G^k at order n (k ≥ 2).
        let mut rhs = 0.0;
        let mut power = g.mul(&g);
        for &pk in p.iter().skip(2) {
            rhs += pk * power.coeff(n);
            power = power.mul(&g);
        }
        g.coeffs[n] = rhs / (p1.powi(n as i32) - p1);
    }
    g
}

/// Taylor coefficients of `H = Ψ∘Φ⁻¹` from
/// `Q(G(z)) H(p₁z) = q₀ H(z)`, `H(0) = 1`:
/// `h_n q₀ (1 − p₁ⁿ) = Σ_{j=1}^{n} c_j h_{n−j} p₁^{n−j}` with `c = Q∘G`.
pub fn psi_of_phi_inv_coeffs(model: &Model, g: &TruncatedSeries, n_max: usize) -> TruncatedSeries {
    let p1 = model.p1;
    let q0 = model.q0;
    let g = TruncatedSeries::new(g.coeffs.clone(), n_max);
    let q = TruncatedSeries::new(model.q.coeffs().to_vec(), n_max);
    let c = q
        .compose(&g)
        .expect("phi_inv_coeffs output has zero constant term");
    let mut h = vec![0.0; n_max + 1];
    h[0] = 1.0;
    for n in 1..=n_max {
        let s: f64 = (1..=n)
            .map(|j| c.coeff(j) * h[n - j] * p1.powi((n - j) as i32))
            .sum();
        h[n] = s / (q0 * (1.0 - p1.powi(n as i32)));
    }
    TruncatedSeries { coeffs: h }
}

/// Taylor coefficients of `A(z) = G(z) / (z H(z))`, `A₀ = 1`.
pub fn a_coeffs(model: &Model, n_max: usize) -> TruncatedSeries {
    tail_coefficients(model, n_max).a
}

/// The three series in one pass, at a common order.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCoefficients {
    pub g: TruncatedSeries,
    pub h: TruncatedSeries,
    pub a: TruncatedSeries,
}

pub fn tail_coefficients(model: &Model, n_max: usize) -> TailCoefficients {
    let g_ext = phi_inv_coeffs(model, n_max + 1);
    let h = psi_of_phi_inv_coeffs(model, &g_ext, n_max);
    let g_over_z = TruncatedSeries::new(g_ext.coeffs[1..].to_vec(), n_max);
    let a = g_over_z.mul(&h.reciprocal().expect("H(0) = 1"));
    TailCoefficients {
        g: TruncatedSeries::new(g_ext.coeffs, n_max),
        h,
        a,
    }
}
