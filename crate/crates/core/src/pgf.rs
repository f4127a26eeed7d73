//! Probability-generating functions with finite support and the validated
//! offspring/immigration model built from them.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|Σ coeffs − 1|`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Escape radius for plain iteration of `P`.
pub const ESCAPE_RADIUS: f64 = 1e6;

/// A polynomial probability-generating function; `coeffs[k]` is the
/// probability of the count `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgf {
    coeffs: Vec<f64>,
}

impl Pgf {
    /// Validates nonnegativity and normalization. Trailing zero coefficients
    /// are dropped. Degree 0 is accepted (the law `Q ≡ 1` of no immigration);
    /// the offspring law is held to a stricter standard by [`validate_model`].
    pub fn new(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyCoefficients);
        }
        for (index, &value) in coeffs.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeCoefficient { index, value });
            }
        }
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        let mut coeffs = coeffs.to_vec();
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `z^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `f'(1)`, the mean of the law.
    pub fn mean(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| k as f64 * c)
            .sum()
    }

    /// Coefficients of `1 − f(1 − u)` as a polynomial in `u`. Iterating in
    /// this variable avoids the cancellation in `1 − z/E^t`.
    pub(crate) fn shifted_complement(&self) -> Vec<f64> {
        let mut out = self.shifted();
        for c in out.iter_mut() {
            *c = -*c;
        }
        out[0] += 1.0;
        out
    }

    /// Coefficients of `f(1 − u)` as a polynomial in `u`.
    pub(crate) fn shifted(&self) -> Vec<f64> {
        let d = self.degree();
        let mut out = vec![0.0; d + 1];
        // f(1-u) = Σ_j (-u)^j Σ_k c_k binom(k, j)
        for (k, &c) in self.coeffs.iter().enumerate() {
            let mut binom = 1.0;
            for j in 0..=k {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                out[j] += sign * c * binom;
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        out
    }
}

/// Which of the theorem hypotheses hold for a model. The first four are
/// enforced by [`validate_model`]; the last is advisory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisFlags {
    pub p1_in_unit_interval: bool,
    pub p0_zero: bool,
    pub q0_positive: bool,
    pub supercritical: bool,
    pub tail_exponent_below_minus_one: bool,
}

/// JSON form of a model: `{"p": [...], "q": [...]}`, index = count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl ModelFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("model JSON: {e}")))
    }

    pub fn validate(&self) -> Result<Model> {
        validate_model(&self.p, &self.q)
    }
}

/// Offspring law `P` and immigration law `Q` with derived scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub p: Pgf,
    pub q: Pgf,
    pub p1: f64,
    pub q0: f64,
    /// Mean offspring `E = P'(1)`.
    pub big_e: f64,
    /// Mean immigration `Q'(1)`.
    pub q_mean: f64,
    /// `log_E(p1 q0)`.
    pub schroder_exponent: f64,
    pub flags: HypothesisFlags,
}

pub fn validate_model(p_coeffs: &[f64], q_coeffs: &[f64]) -> Result<Model> {
    let p = Pgf::new(p_coeffs)?;
    let q = Pgf::new(q_coeffs)?;
    let p0 = p.coeff(0);
    let p1 = p.coeff(1);
    let q0 = q.coeff(0);
    let big_e = p.mean();
    let flags = HypothesisFlags {
        p1_in_unit_interval: p1 > 0.0 && p1 < 1.0,
        p0_zero: p0 == 0.0,
        q0_positive: q0 > 0.0,
        supercritical: big_e > 1.0,
        tail_exponent_below_minus_one: false,
    };
    if !flags.p0_zero || !flags.p1_in_unit_interval {
        return Err(Error::NotSchroder { p0, p1 });
    }
    if !flags.supercritical {
        return Err(Error::SubcriticalOrCritical { mean: big_e });
    }
    if !flags.q0_positive {
        return Err(Error::NoImmigrationGap);
    }
    let schroder_exponent = (p1 * q0).ln() / big_e.ln();
    Ok(Model {
        q_mean: q.mean(),
        p,
        q,
        p1,
        q0,
        big_e,
        schroder_exponent,
        flags: HypothesisFlags {
            tail_exponent_below_minus_one: schroder_exponent < -1.0,
            ..flags
        },
    })
}

impl Model {
    /// The family `P(z) = p1 z + (1 − p1) z²`, `Q(z) = q0 + (1 − q0) z`.
    pub fn quadratic(p1: f64, q0: f64) -> Result<Self> {
        validate_model(&[0.0, p1, 1.0 - p1], &[q0, 1.0 - q0])
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            p: self.p.coeffs().to_vec(),
            q: self.q.coeffs().to_vec(),
        }
    }

    pub fn ln_e(&self) -> f64 {
        self.big_e.ln()
    }

    /// Mean of the martingale limit, `1 + Q'(1)/(E − 1)`.
    pub fn limit_mean(&self) -> f64 {
        1.0 + self.q_mean / (self.big_e - 1.0)
    }

    /// Human-readable descriptions of violated advisory hypotheses.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.flags.tail_exponent_below_minus_one {
            out.push(format!(
                "log_E(p1 q0) = {:.6} is not below -1; the leading tail terms are computed anyway",
                self.schroder_exponent
            ));
        }
        out
    }

    /// `t`-fold composition `P∘…∘P(z)`; `t = 0` returns `z`.
    pub fn iterate_p(&self, z: Complex64, t: usize) -> Result<Complex64> {
        let mut w = z;
        for step in 0..t {
            w = self.p.eval(w);
            if !(w.norm() <= ESCAPE_RADIUS) {
                return Err(Error::Overflow { steps: step + 1 });
            }
        }
        Ok(w)
    }

    /// Coefficients of `z^0..=z^n_max` of the generating function of `X_t`
    /// (with immigration). Entries are exact probabilities `P(X_t = n)`;
    /// truncation only discards mass above `n_max`.
    pub fn imm_pgf_coeffs(&self, t: usize, n_max: usize) -> Vec<f64> {
        let len = n_max + 1;
        let p = truncate(self.p.coeffs(), len);
        let q = truncate(self.q.coeffs(), len);
        // P_imm,t(z) = P_t(z) · Π_{k<t} Q(P_k(z)); carry P_k alongside.
        let mut identity = vec![0.0; len];
        if len > 1 {
            identity[1] = 1.0;
        }
        let mut p_k = identity;
        let mut product = vec![0.0; len];
        product[0] = 1.0;
        for _ in 0..t {
            let q_of = compose_truncated(&q, &p_k, len);
            product = mul_truncated(&product, &q_of, len);
            p_k = compose_truncated(&p, &p_k, len);
        }
        mul_truncated(&product, &p_k, len)
    }
}

fn truncate(c: &[f64], len: usize) -> Vec<f64> {
    let mut out = c.to_vec();
    out.resize(len, 0.0);
    out.truncate(len);
    out
}

fn mul_truncated(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `outer(inner(z))` by Horner's scheme on truncated polynomials.
fn compose_truncated(outer: &[f64], inner: &[f64], len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    for &c in outer.iter().rev() {
        acc = mul_truncated(&acc, inner, len);
        acc[0] += c;
    }
    acc
}
