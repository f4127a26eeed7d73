//! Density by Fourier inversion of `Π_imm` on the imaginary axis:
//! `p(x) = (1/π) Re ∫_0^Y Π_imm(iy) e^{iyx} dy` by the trapezoidal rule.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::limits::{LimitConfig, Limits};
use crate::pgf::Model;
use crate::summation::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fourier,
    Series,
    Quick,
    Montecarlo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fourier => "fourier",
            Method::Series => "series",
            Method::Quick => "quick",
            Method::Montecarlo => "montecarlo",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" => Ok(Method::Fourier),
            "series" => Ok(Method::Series),
            "quick" | "approx" => Ok(Method::Quick),
            "montecarlo" => Ok(Method::Montecarlo),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// Sampled density with the knobs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub method: Method,
    pub params: BTreeMap<String, Value>,
}

impl DensityCurve {
    pub fn new(
        xs: Vec<f64>,
        ps: Vec<f64>,
        method: Method,
        params: BTreeMap<String, Value>,
    ) -> Result<Self> {
        if xs.len() != ps.len() || xs.len() < 2 {
            return Err(Error::InvalidArgument(
                "curve needs matching xs/ps of length >= 2".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(
                "curve grid must be strictly increasing".into(),
            ));
        }
        if ps.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("curve values must be finite".into()));
        }
        Ok(Self {
            xs,
            ps,
            method,
            params,
        })
    }

    /// Trapezoid mass over the whole grid.
    pub fn mass(&self) -> f64 {
        self.cumulative().last().copied().unwrap_or(0.0)
    }

    /// Trapezoid CDF at the grid points, starting from 0.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.xs.len());
        let mut acc = CompensatedSum::default();
        out.push(0.0);
        for i in 1..self.xs.len() {
            acc.add(0.5 * (self.ps[i] + self.ps[i - 1]) * (self.xs[i] - self.xs[i - 1]));
            out.push(acc.value());
        }
        out
    }

    /// Trapezoid estimate of `∫ x p(x) dx`.
    pub fn first_moment(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for i in 1..self.xs.len() {
            let (a, b) = (self.xs[i - 1], self.xs[i]);
            acc.add(0.5 * (a * self.ps[i - 1] + b * self.ps[i]) * (b - a));
        }
        acc.value()
    }

    pub fn max_value(&self) -> f64 {
        self.ps.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let (lo, hi) = (self.xs[0], *self.xs.last().unwrap());
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = self
            .xs
            .partition_point(|&v| v <= x)
            .clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let f = (x - x0) / (x1 - x0);
        Some(self.ps[i - 1] + f * (self.ps[i] - self.ps[i - 1]))
    }
}

/// Trapezoid mass on `[min x, x0]`.
pub fn tail_mass(curve: &DensityCurve, x0: f64) -> Result<f64> {
    let (lo, hi) = (curve.xs[0], *curve.xs.last().unwrap());
    if !(x0 >= lo && x0 <= hi) {
        return Err(Error::OutOfRange { value: x0, lo, hi });
    }
    let cdf = curve.cumulative();
    let i = curve
        .xs
        .partition_point(|&v| v <= x0)
        .clamp(1, curve.xs.len() - 1);
    let (a, b) = (curve.xs[i - 1], curve.xs[i]);
    let pa = curve.ps[i - 1];
    let px = curve.interpolate(x0).expect("x0 checked in range");
    Ok(cdf[i - 1] + 0.5 * (pa + px) * (x0 - a).min(b - a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub y_max: f64,
    pub n_points: usize,
    pub limits: LimitConfig,
}

impl InversionConfig {
    /// `y ∈ [0, 2000]`, 10⁶ trapezoid points, 70 iterations.
    pub fn paper() -> Self {
        Self {
            y_max: 2000.0,
            n_points: 1_000_000,
            limits: LimitConfig::default(),
        }
    }

    pub fn fast() -> Self {
        Self {
            y_max: 500.0,
            n_points: 200_000,
            limits: LimitConfig::default(),
        }
    }
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self::paper()
    }
}

/// `Π_imm(iy)` sampled once on the trapezoid grid and reused for every `x`.
#[derive(Debug, Clone)]
pub struct FourierInverter {
    dy: f64,
    samples: Vec<Complex64>,
    cfg: InversionConfig,
}

/// Exact `e^{iθ}` is recomputed this often along the rotation recurrence.
const REANCHOR: usize = 256;

impl FourierInverter {
    pub fn new(model: &Model, cfg: InversionConfig) -> Result<Self> {
        if !(cfg.y_max > 0.0) || cfg.n_points < 2 {
            return Err(Error::InvalidArgument(
                "need y_max > 0 and n_points >= 2".into(),
            ));
        }
        let limits = Limits::new(model, cfg.limits)?;
        let dy = cfg.y_max / (cfg.n_points - 1) as f64;
        let samples = (0..cfg.n_points)
            .into_par_iter()
            .map(|k| limits.pi_imm(Complex64::new(0.0, k as f64 * dy)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dy, samples, cfg })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn density(&self, x: f64) -> f64 {
        let n = self.samples.len();
        let step = Complex64::from_polar(1.0, self.dy * x);
        let mut acc = CompensatedSum::default();
        let mut rot = Complex64::new(1.0, 0.0);
        for (k, s) in self.samples.iter().enumerate() {
            if k % REANCHOR == 0 {
                rot = Complex64::from_polar(1.0, k as f64 * self.dy * x);
            }
            let weight = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            acc.add(weight * (s * rot).re);
            rot *= step;
        }
        acc.value() * self.dy / PI
    }

    pub fn curve(&self, xs: &[f64]) -> Result<DensityCurve> {
        if xs.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidArgument(
                "inversion grid must be positive".into(),
            ));
        }
        let ps: Vec<f64> = xs.par_iter().map(|&x| self.density(x)).collect();
        let mut params = BTreeMap::new();
        params.insert("y_max".into(), json!(self.cfg.y_max));
        params.insert("n_points".into(), json!(self.cfg.n_points));
        params.insert("t_iter".into(), json!(self.cfg.limits.t_iter));
        params.insert("prod_terms".into(), json!(self.cfg.limits.prod_terms));
        params.insert("conv_tol".into(), json!(self.cfg.limits.conv_tol));
        DensityCurve::new(xs.to_vec(), ps, Method::Fourier, params)
    }
}

pub fn density_fourier(
    model: &Model,
    cfg: &LimitConfig,
    xs: &[f64],
    y_max: f64,
    n_points: usize,
) -> Result<DensityCurve> {
    let inv = FourierInverter::new(
        model,
        InversionConfig {
            y_max,
            n_points,
            limits: *cfg,
        },
    )?;
    inv.curve(xs)
}

/// `count` points evenly spaced on `[x0, x1]`.
pub fn linear_grid(x0: f64, x1: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(x1 > x0) {
        return Err(Error::InvalidArgument(format!(
            "bad grid {x0}:{x1}:{count}"
        )));
    }
    let h = (x1 - x0) / (count - 1) as f64;
    Ok((0..count).map(|i| x0 + i as f64 * h).collect())
}
