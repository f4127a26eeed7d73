//! The left-tail series
//!
//! ```text
//! p(x) = Σ_n A_n x^{σ_n − 1} B_n(−log_E x),   σ_n = −log_E(p₁^{n+1} q₀),
//! B_n(z) = Σ_m θ_nm e^{2πimz} / Γ(σ_n − 2πim/ln E),
//! ```
//!
//! its `m = 0` quick approximation, the reciprocal Gamma function, and a
//! fit of the term-decay envelope `C e^{−α n ln(n+|m|) − β|m|}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::periodic::FourierTable;
use crate::pgf::Model;
use crate::series_alg::TruncatedSeries;

pub const DEFAULT_N_TERMS: usize = 10;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(s)` for `Re s ≥ 1/2` (Lanczos, g = 7). The imaginary part is not
/// reduced to the principal branch.
fn ln_gamma_right(s: Complex64) -> Complex64 {
    let x = s - 1.0;
    let mut a = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `ln sin(πs)` up to multiples of `2πi`, without overflow for large `|Im s|`.
fn ln_sin_pi(s: Complex64) -> Complex64 {
    if s.im < 0.0 {
        return ln_sin_pi(s.conj()).conj();
    }
    // sin(πs) = e^{−iπs} (e^{2iπs} − 1) / (2i), and |e^{2iπs}| ≤ 1 here.
    let i = Complex64::new(0.0, 1.0);
    -i * PI * s + (((2.0 * i * PI * s).exp() - 1.0) / (2.0 * i)).ln()
}

/// `ln Γ(s)` on the whole plane minus the poles.
pub fn ln_gamma(s: Complex64) -> Complex64 {
    if s.re >= 0.5 {
        ln_gamma_right(s)
    } else {
        PI.ln() - ln_sin_pi(s) - ln_gamma_right(1.0 - s)
    }
}

/// `1/Γ(s)`, an entire function; zero at `0, −1, −2, …`.
pub fn recip_gamma(s: Complex64) -> Complex64 {
    if s.im == 0.0 && s.re <= 0.0 && s.re == s.re.round() {
        return Complex64::new(0.0, 0.0);
    }
    (-ln_gamma(s)).exp()
}

/// `σ_n − 2πim/ln E`, the Gamma argument of term `(n, m)`.
pub fn gamma_arg(model: &Model, n: usize, m: i64) -> Complex64 {
    let ln_e = model.ln_e();
    let ln_c = (n as f64 + 1.0) * model.p1.ln() + model.q0.ln();
    Complex64::new(-ln_c / ln_e, -2.0 * PI * m as f64 / ln_e)
}

/// One term `weight · x^{exponent}` of the double series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub n: usize,
    pub m: i64,
    pub exponent: Complex64,
    pub weight: Complex64,
}

impl SeriesTerm {
    pub fn new(model: &Model, a: &TruncatedSeries, table: &FourierTable, n: usize, m: i64) -> Self {
        let arg = gamma_arg(model, n, m);
        Self {
            n,
            m,
            exponent: arg - 1.0,
            weight: a.coeff(n) * table.resolved(n, m) * recip_gamma(arg),
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.weight * (self.exponent * x.ln()).exp()
    }
}

/// `B_n(z)` with all `|m| ≤ m_max`, before taking the real part.
pub fn b_n_complex(
    table: &FourierTable,
    model: &Model,
    n: usize,
    m_max: usize,
    z: f64,
) -> Complex64 {
    let m_max = m_max.min(table.m_max()) as i64;
    (-m_max..=m_max)
        .map(|m| {
            table.resolved(n, m)
                * Complex64::from_polar(1.0, 2.0 * PI * m as f64 * z)
                * recip_gamma(gamma_arg(model, n, m))
        })
        .sum()
}

pub fn b_n_eval(table: &FourierTable, model: &Model, n: usize, z: f64) -> f64 {
    b_n_complex(table, model, n, table.m_max(), z).re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    /// `|A_N x^{σ_N − 1} B_N(−log_E x)|` for the last included `N`.
    pub last_term: f64,
    /// Imaginary residue of the summed terms.
    pub imag: f64,
}

/// Partial sums of the full double series, `n = 0..=n_terms`.
#[derive(Debug, Clone)]
pub struct SeriesApprox {
    /// Per `n`, the terms `m = −M..=M`.
    rows: Vec<Vec<SeriesTerm>>,
}

impl SeriesApprox {
    pub fn new(
        model: &Model,
        a: &TruncatedSeries,
        table: &FourierTable,
        n_terms: usize,
        m_max: usize,
    ) -> Result<Self> {
        if n_terms > a.order().min(table.n_max()) {
            return Err(Error::InvalidArgument(format!(
                "n_terms {n_terms} exceeds available orders (A: {}, table: {})",
                a.order(),
                table.n_max()
            )));
        }
        let m_max = m_max.min(table.m_max()) as i64;
        let rows = (0..=n_terms)
            .map(|n| {
                (-m_max..=m_max)
                    .map(|m| SeriesTerm::new(model, a, table, n, m))
                    .collect()
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn terms(&self) -> impl Iterator<Item = &SeriesTerm> {
        self.rows.iter().flatten()
    }

    pub fn eval(&self, x: f64) -> Result<SeriesValue> {
        if !(x > 0.0) {
            return Err(Error::NonPositiveX(x));
        }
        let mut total = Complex64::new(0.0, 0.0);
        let mut last = Complex64::new(0.0, 0.0);
        for row in &self.rows {
            last = row.iter().map(|t| t.eval(x)).sum();
            total += last;
        }
        Ok(SeriesValue {
            value: total.re,
            last_term: last.norm(),
            imag: total.im,
        })
    }
}

pub fn density_series(
    model: &Model,
    a: &TruncatedSeries,
    table: &FourierTable,
    x: f64,
    n_terms: usize,
) -> Result<SeriesValue> {
    SeriesApprox::new(model, a, table, n_terms, table.m_max())?.eval(x)
}

/// `Σ_{n=0}^{M} (K^{n+1}·L)(0) A_n / Γ(σ_n) · x^{σ_n − 1}`.
#[derive(Debug, Clone)]
pub struct QuickApprox {
    weights: Vec<f64>,
    exponents: Vec<f64>,
}

impl QuickApprox {
    pub fn new(
        model: &Model,
        a: &TruncatedSeries,
        table: &FourierTable,
        m_terms: usize,
    ) -> Result<Self> {
        if m_terms > a.order().min(table.n_max()) {
            return Err(Error::InvalidArgument(format!(
                "M = {m_terms} exceeds available orders (A: {}, table: {})",
                a.order(),
                table.n_max()
            )));
        }
        let (weights, exponents) = (0..=m_terms)
            .map(|n| {
                let arg = gamma_arg(model, n, 0);
                let w = table.value_at_zero(n) * a.coeff(n) * recip_gamma(arg).re;
                (w, arg.re - 1.0)
            })
            .unzip();
        Ok(Self { weights, exponents })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::NonPositiveX(x));
        }
        let ln_x = x.ln();
        Ok(self
            .weights
            .iter()
            .zip(&self.exponents)
            .map(|(w, e)| w * (e * ln_x).exp())
            .sum())
    }
}

pub fn density_quick(
    model: &Model,
    a: &TruncatedSeries,
    table: &FourierTable,
    x: f64,
    m_terms: usize,
) -> Result<f64> {
    QuickApprox::new(model, a, table, m_terms)?.eval(x)
}

/// Envelope `|A_n θ_nm / Γ(·)| ≤ C e^{−α n ln(n+|m|) − β|m|}`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    /// Entries above the envelope (relative slack 1e-9).
    pub violations: usize,
    /// Nonzero (resolved) entries used for the regression.
    pub fitted_points: usize,
}

fn decay_feature(n: usize, m: i64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * ((n as f64) + m.unsigned_abs() as f64).ln()
    }
}

/// Least-squares fit of `ln C, α, β` on the resolved entries, then `C` is
/// raised to the tightest envelope over all entries.
pub fn fit_decay_bound(
    model: &Model,
    a: &TruncatedSeries,
    table: &FourierTable,
    n_max: usize,
    m_max: usize,
) -> Result<DecayFit> {
    let n_max = n_max.min(table.n_max()).min(a.order());
    let m_max = m_max.min(table.m_max()) as i64;
    let mut points = Vec::new();
    for n in 0..=n_max {
        for m in -m_max..=m_max {
            let t = SeriesTerm::new(model, a, table, n, m).weight.norm();
            points.push((n, m, t));
        }
    }
    let fitted: Vec<_> = points.iter().filter(|p| p.2 > 0.0).collect();
    if fitted.len() < 3 {
        return Err(Error::InvalidArgument(
            "too few resolved terms to fit".into(),
        ));
    }
    // normal equations for y = c0 − α f − β |m|
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for &&(n, m, t) in &fitted {
        let row = [1.0, -decay_feature(n, m), -(m.unsigned_abs() as f64)];
        let y = t.ln();
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let sol = solve3(ata, aty)?;
    let (alpha, beta) = (sol[1], sol[2]);
    let envelope =
        |n: usize, m: i64| (-alpha * decay_feature(n, m) - beta * m.unsigned_abs() as f64).exp();
    let c = points
        .iter()
        .map(|&(n, m, t)| t / envelope(n, m))
        .fold(0.0, f64::max);
    let violations = points
        .iter()
        .filter(|&&(n, m, t)| t > c * envelope(n, m) * (1.0 + 1e-9))
        .count();
    Ok(DecayFit {
        alpha,
        beta,
        c,
        violations,
        fitted_points: fitted.len(),
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::InvalidArgument("degenerate decay fit".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}
