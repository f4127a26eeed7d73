//! The one-periodic functions `K(x) = p₁^{−x} Φ(Π(E^x))` and
//! `L(x) = q₀^{−x} R(E^x) Ψ(Π(E^x))`, Fourier coefficients of `K^{n+1}·L`,
//! and an escape-time probe of the filled Julia set near 1.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limits::{LimitConfig, Limits};
use crate::pgf::Model;

pub const DEFAULT_N_MAX: usize = 16;
pub const DEFAULT_M_MAX: usize = 8;
pub const DEFAULT_GRID_SIZE: usize = 256;

/// Coefficients within this factor of the estimated round-off floor are
/// treated as unresolved.
pub const RESOLUTION_FACTOR: f64 = 100.0;

/// `(K(x), L(x))` from shared evaluations of `Π(E^x)` and `R(E^x)`.
pub fn kl_eval(limits: &Limits<'_>, x: f64) -> Result<(f64, f64)> {
    let model = limits.model();
    let z = Complex64::new(model.big_e.powf(x), 0.0);
    let (pi, r) = limits.pi_and_r(z)?;
    let (phi, psi) = limits.phi_and_psi(pi)?;
    let k = phi.re * model.p1.powf(-x);
    let l = (r * psi).re * model.q0.powf(-x);
    Ok((k, l))
}

pub fn k_eval(model: &Model, cfg: &LimitConfig, x: f64) -> Result<f64> {
    kl_eval(&Limits::new(model, *cfg)?, x).map(|(k, _)| k)
}

pub fn l_eval(model: &Model, cfg: &LimitConfig, x: f64) -> Result<f64> {
    kl_eval(&Limits::new(model, *cfg)?, x).map(|(_, l)| l)
}

/// Fourier coefficients `θ_nm` of `K^{n+1}·L`, `n = 0..=n_max`,
/// `|m| ≤ m_max`.
#[derive(Debug, Clone, Serialize)]
pub struct FourierTable {
    n_max: usize,
    m_max: usize,
    grid_size: usize,
    /// Row-major, `theta[n * (2 m_max + 1) + (m + m_max)]`.
    theta: Vec<Complex64>,
    /// `(K^{n+1}·L)(0)` sampled directly.
    value_at_zero: Vec<f64>,
    /// Largest coefficient magnitude among the modes `grid/4 ≤ |m| < grid/2`,
    /// where the true coefficients are far below round-off.
    noise_floor: Vec<f64>,
}

impl FourierTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    fn index(&self, n: usize, m: i64) -> usize {
        assert!(n <= self.n_max && m.unsigned_abs() as usize <= self.m_max);
        n * (2 * self.m_max + 1) + (m + self.m_max as i64) as usize
    }

    /// Raw DFT coefficient.
    pub fn theta(&self, n: usize, m: i64) -> Complex64 {
        self.theta[self.index(n, m)]
    }

    /// The coefficient if it stands clear of the noise floor, else zero.
    /// `m = 0` is always kept.
    pub fn resolved(&self, n: usize, m: i64) -> Complex64 {
        let t = self.theta(n, m);
        if m == 0 || self.is_resolved(n, m) {
            t
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn is_resolved(&self, n: usize, m: i64) -> bool {
        m == 0 || self.theta(n, m).norm() > RESOLUTION_FACTOR * self.noise_floor[n]
    }

    pub fn noise_floor(&self, n: usize) -> f64 {
        self.noise_floor[n]
    }

    /// `(K^{n+1}·L)(0)`.
    pub fn value_at_zero(&self, n: usize) -> f64 {
        self.value_at_zero[n]
    }

    pub fn row_sum(&self, n: usize) -> Complex64 {
        (-(self.m_max as i64)..=self.m_max as i64)
            .map(|m| self.theta(n, m))
            .sum()
    }

    /// Flat `(n, m, θ_nm)` listing.
    pub fn entries(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        (0..=self.n_max).flat_map(move |n| {
            (-(self.m_max as i64)..=self.m_max as i64).map(move |m| (n, m, self.theta(n, m)))
        })
    }
}

pub fn fourier_table(
    model: &Model,
    cfg: &LimitConfig,
    n_max: usize,
    m_max: usize,
    grid_size: usize,
) -> Result<FourierTable> {
    if grid_size < 4 * m_max.max(1) {
        return Err(Error::InvalidArgument(format!(
            "grid_size {grid_size} must be at least 4 * m_max"
        )));
    }
    let limits = Limits::new(model, *cfg)?;
    let samples: Vec<(f64, f64)> = (0..grid_size)
        .into_par_iter()
        .map(|j| kl_eval(&limits, j as f64 / grid_size as f64))
        .collect::<Result<_>>()?;

    let g = grid_size as f64;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    let mut row: Vec<f64> = samples.iter().map(|&(k, l)| k * l).collect();
    for _ in 0..=n_max {
        rows.push(row.clone());
        for (v, &(k, _)) in row.iter_mut().zip(&samples) {
            *v *= k;
        }
    }

    let twiddle: Vec<Complex64> = (0..grid_size)
        .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / g))
        .collect();
    let dft = |values: &[f64], m: i64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &v) in values.iter().enumerate() {
            let idx = (m.rem_euclid(grid_size as i64) as usize * j) % grid_size;
            acc += twiddle[idx] * v;
        }
        acc / g
    };

    let width = 2 * m_max + 1;
    let mut theta = vec![Complex64::new(0.0, 0.0); (n_max + 1) * width];
    let mut noise_floor = Vec::with_capacity(n_max + 1);
    for (n, values) in rows.iter().enumerate() {
        // real samples: θ_{n,−m} = conj(θ_{n,m}) exactly, θ_{n,0} real
        let centre = n * width + m_max;
        theta[centre] = Complex64::new(dft(values, 0).re, 0.0);
        for m in 1..=m_max {
            let t = dft(values, m as i64);
            theta[centre + m] = t;
            theta[centre - m] = t.conj();
        }
        let noise = (grid_size / 4..grid_size / 2)
            .map(|m| dft(values, m as i64).norm())
            .fold(0.0, f64::max);
        noise_floor.push(noise);
    }

    Ok(FourierTable {
        n_max,
        m_max,
        grid_size,
        theta,
        value_at_zero: rows.iter().map(|r| r[0]).collect(),
        noise_floor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProbeOutcome {
    Inside,
    Outside,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    pub angle: f64,
    pub radius: f64,
    pub outcome: ProbeOutcome,
}

/// Angles are full opening angles of a sector with apex 1 symmetric about
/// the direction pointing into the unit disc: the probed points are
/// `1 − r e^{±iθ/2}`. The unit disc alone gives an opening of π.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalAngleReport {
    /// Largest probed angle such that every probe at or below it is inside.
    pub theta_star_lower: f64,
    pub hypothesis_pi_ok: bool,
    pub inconclusive: usize,
    pub probes: Vec<ProbeResult>,
}

fn classify(model: &Model, z: Complex64, max_iter: usize, escape: f64) -> ProbeOutcome {
    let mut w = z;
    for _ in 0..max_iter {
        let r = w.norm();
        if r < 0.5 {
            return ProbeOutcome::Inside;
        }
        if r > escape {
            return ProbeOutcome::Outside;
        }
        w = model.p.eval(w);
    }
    ProbeOutcome::Inconclusive
}

/// Escape-time probe of the sector opening of the filled Julia set at 1.
/// `margin` is the amount by which the lower bound must exceed π.
pub fn julia_sector_probe(
    model: &Model,
    angles: &[f64],
    radii: &[f64],
    max_iter: usize,
    margin: f64,
) -> Result<CriticalAngleReport> {
    if angles.is_empty() || radii.is_empty() {
        return Err(Error::InvalidArgument(
            "probe needs angles and radii".into(),
        ));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r <= 0.1)) {
        return Err(Error::InvalidArgument(
            "probe radii must lie in (0, 0.1]".into(),
        ));
    }
    if angles.iter().any(|&a| !(a > 0.0 && a < 1.5 * PI)) {
        return Err(Error::InvalidArgument(
            "probe angles must lie in (0, 3π/2)".into(),
        ));
    }
    let mut sorted = angles.to_vec();
    sorted.sort_by(f64::total_cmp);
    let escape = crate::pgf::ESCAPE_RADIUS;
    let probes: Vec<ProbeResult> = sorted
        .par_iter()
        .flat_map_iter(|&angle| {
            radii.iter().map(move |&radius| {
                let half = Complex64::from_polar(radius, angle / 2.0);
                let up = classify(model, Complex64::new(1.0, 0.0) - half, max_iter, escape);
                let down = classify(
                    model,
                    Complex64::new(1.0, 0.0) - half.conj(),
                    max_iter,
                    escape,
                );
                let outcome = match (up, down) {
                    (ProbeOutcome::Outside, _) | (_, ProbeOutcome::Outside) => {
                        ProbeOutcome::Outside
                    }
                    (ProbeOutcome::Inside, ProbeOutcome::Inside) => ProbeOutcome::Inside,
                    _ => ProbeOutcome::Inconclusive,
                };
                ProbeResult {
                    angle,
                    radius,
                    outcome,
                }
            })
        })
        .collect();

    let mut theta_star_lower = 0.0;
    'angles: for &angle in &sorted {
        for p in probes.iter().filter(|p| p.angle == angle) {
            if p.outcome == ProbeOutcome::Outside {
                break 'angles;
            }
        }
        theta_star_lower = angle;
    }
    let inconclusive = probes
        .iter()
        .filter(|p| p.outcome == ProbeOutcome::Inconclusive)
        .count();
    Ok(CriticalAngleReport {
        theta_star_lower,
        hypothesis_pi_ok: theta_star_lower > PI + margin,
        inconclusive,
        probes,
    })
}

/// Uniform angles `step, 2·step, …` below `3π/2` and radii spread
/// geometrically over one factor of `E` so that the self-similar boundary
/// is sampled at every phase.
pub fn default_probe_grid(model: &Model, step: f64) -> (Vec<f64>, Vec<f64>) {
    let count = ((1.5 * PI) / step).floor() as usize;
    let angles = (1..count).map(|k| k as f64 * step).collect();
    let r_max = 0.05;
    let r_min = r_max / model.big_e;
    let radii = (0..16)
        .map(|k| r_min * (r_max / r_min).powf(k as f64 / 15.0))
        .collect();
    (angles, radii)
}
