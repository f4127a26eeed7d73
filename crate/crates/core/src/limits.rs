//! The limit functions Π, R, Π_imm = Π·R (expansion around the repelling
//! fixed point 1) and Φ, Ψ (contraction to the attracting fixed point 0).
//!
//! Π is evaluated through `Π(z) = P_s(Π(z/E^s))` with `s = ⌈log_E |z|⌉`, so
//! the starting point `z/E^{s+d}` is tiny for every `z`. The iteration runs
//! in the variable `u = 1 − w` until `|u|` reaches 1/2, which keeps full
//! relative precision in `z/E^t`; R is accumulated along the same
//! trajectory because the iterates are exactly `Π(z/E^t)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pgf::Model;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitConfig {
    /// Maximum iteration depth below the scale `|z/E^s| ≤ 1`, and the number
    /// of steps within which a Φ, Ψ orbit must reach `|w| ≤ 1/2`.
    pub t_iter: usize,
    /// Number of factors of the products for R kept below the scale point.
    pub prod_terms: usize,
    /// Early-stop tolerance.
    pub conv_tol: f64,
    pub escape_radius: f64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self {
            t_iter: 70,
            prod_terms: 80,
            conv_tol: 1e-16,
            escape_radius: 1e6,
        }
    }
}

impl LimitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_iter == 0 || self.prod_terms == 0 {
            return Err(Error::InvalidArgument(
                "t_iter and prod_terms must be >= 1".into(),
            ));
        }
        if !(self.conv_tol > 0.0) || !(self.escape_radius > 1.0) {
            return Err(Error::InvalidArgument(
                "conv_tol must be > 0 and escape_radius > 1".into(),
            ));
        }
        Ok(())
    }
}

/// Orbits that reach this disc are in the basin of 0.
const BASIN_RADIUS: f64 = 0.5;
/// Hard cap on contraction steps, reached only for `p₁` extremely close to 1.
const MAX_CONTRACTION_STEPS: usize = 1_000_000;

/// Precomputed evaluator for one model.
#[derive(Debug, Clone)]
pub struct Limits<'a> {
    model: &'a Model,
    cfg: LimitConfig,
    ln_e: f64,
    /// `1 − P(1 − u)` in powers of `u`.
    p_comp: Vec<f64>,
    /// `Q(1 − u)` in powers of `u`.
    q_shift: Vec<f64>,
    /// Second Taylor coefficient of `1 − Π(z)`.
    pi2: f64,
    /// Second Taylor coefficient of Φ.
    phi2: f64,
    /// First Taylor coefficient of Ψ.
    psi1: f64,
}

fn horner(c: &[f64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

impl<'a> Limits<'a> {
    pub fn new(model: &'a Model, cfg: LimitConfig) -> Result<Self> {
        cfg.validate()?;
        let e = model.big_e;
        let p_comp = model.p.shifted_complement();
        let q_shift = model.q.shifted();
        // Π̃(Ez) = P̃(Π̃(z)) at order 2: π₂E² = Eπ₂ + c₂.
        let pi2 = p_comp.get(2).copied().unwrap_or(0.0) / (e * e - e);
        // Φ(P(z)) = p₁Φ(z) at order 2: p₂ + φ₂p₁² = p₁φ₂.
        let p1 = model.p1;
        let phi2 = model.p.coeff(2) / (p1 - p1 * p1);
        // Q(z)Ψ(P(z)) = q₀Ψ(z) at order 1.
        let psi1 = model.q.coeff(1) / (model.q0 * (1.0 - p1));
        Ok(Self {
            model,
            cfg,
            ln_e: e.ln(),
            p_comp,
            q_shift,
            pi2,
            phi2,
            psi1,
        })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn config(&self) -> &LimitConfig {
        &self.cfg
    }

    /// `(Π(z), R(z))` from one trajectory.
    pub fn pi_and_r(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let one = Complex64::new(1.0, 0.0);
        let modulus = z.norm();
        if modulus == 0.0 {
            return Ok((one, one));
        }
        if !modulus.is_finite() {
            return Err(Error::Diverged { re: z.re, im: z.im });
        }
        let e = self.model.big_e;
        let log_mod = modulus.ln() / self.ln_e;
        let scale = if log_mod > 0.0 {
            log_mod.ceil() as usize
        } else {
            0
        };
        // Smallest extra depth with |z/E^N| ≤ sqrt(conv_tol): the seeded start
        // u + π₂u² is then accurate to O(conv_tol) relative.
        let wanted = log_mod - scale as f64 - 0.5 * self.cfg.conv_tol.ln() / self.ln_e;
        let extra = (wanted.ceil().max(1.0) as usize).min(self.cfg.t_iter);
        let depth = scale + extra;
        let start = z / e.powi(depth as i32);

        let mut u = start + self.pi2 * start * start;
        let mut w = one;
        let mut in_u = true;
        let kept = depth.min(scale + self.cfg.prod_terms);
        let mut r = one;
        for k in 0..depth {
            let t = depth - k;
            if in_u {
                if t <= kept {
                    r *= horner(&self.q_shift, u);
                }
                u = horner(&self.p_comp, u);
                if u.norm() > 0.5 {
                    in_u = false;
                    w = one - u;
                }
            } else {
                if t <= kept {
                    r *= self.model.q.eval(w);
                }
                w = self.model.p.eval(w);
                if !(w.norm() <= self.cfg.escape_radius) {
                    return Err(Error::Diverged { re: z.re, im: z.im });
                }
            }
        }
        // Factors with t > kept: Q(Π(v)) ≈ 1 − Q'(1)v.
        let tail_arg = z / e.powi(kept as i32);
        r *= (-self.model.q_mean * tail_arg / (e - 1.0)).exp();
        let pi = if in_u { one - u } else { w };
        Ok((pi, r))
    }

    pub fn pi(&self, z: Complex64) -> Result<Complex64> {
        self.pi_and_r(z).map(|(p, _)| p)
    }

    pub fn r(&self, z: Complex64) -> Result<Complex64> {
        self.pi_and_r(z).map(|(_, r)| r)
    }

    pub fn pi_imm(&self, z: Complex64) -> Result<Complex64> {
        self.pi_and_r(z).map(|(p, r)| p * r)
    }

    /// `(Φ(w), Ψ(w))` from one contracting trajectory.
    pub fn phi_and_psi(&self, w: Complex64) -> Result<(Complex64, Complex64)> {
        let model = self.model;
        let stop = self.cfg.conv_tol.sqrt();
        let mut x = w;
        let mut psi = Complex64::new(1.0, 0.0);
        let mut steps = 0usize;
        // Membership is settled once the orbit enters |x| ≤ 1/2 within
        // t_iter steps: |P(x)| ≤ P(|x|) < |x| there, so it then converges and
        // only the number of further steps depends on p₁.
        let mut settled = false;
        loop {
            let r = x.norm();
            if r <= stop {
                break;
            }
            settled |= r <= BASIN_RADIUS;
            if (!settled && steps == self.cfg.t_iter)
                || steps == MAX_CONTRACTION_STEPS
                || !(r <= self.cfg.escape_radius)
            {
                return Err(Error::NotInBasin { re: w.re, im: w.im });
            }
            psi *= model.q.eval(x) / model.q0;
            x = model.p.eval(x);
            steps += 1;
        }
        let phi = (x + self.phi2 * x * x) / model.p1.powi(steps as i32);
        let psi = psi * (1.0 + self.psi1 * x);
        Ok((phi, psi))
    }

    pub fn phi(&self, w: Complex64) -> Result<Complex64> {
        self.phi_and_psi(w).map(|(p, _)| p)
    }

    pub fn psi(&self, w: Complex64) -> Result<Complex64> {
        self.phi_and_psi(w).map(|(_, p)| p)
    }
}

pub fn pi_eval(model: &Model, cfg: &LimitConfig, z: Complex64) -> Result<Complex64> {
    Limits::new(model, *cfg)?.pi(z)
}

pub fn r_eval(model: &Model, cfg: &LimitConfig, z: Complex64) -> Result<Complex64> {
    Limits::new(model, *cfg)?.r(z)
}

pub fn pi_imm_eval(model: &Model, cfg: &LimitConfig, z: Complex64) -> Result<Complex64> {
    Limits::new(model, *cfg)?.pi_imm(z)
}

pub fn phi_eval(model: &Model, cfg: &LimitConfig, w: Complex64) -> Result<Complex64> {
    Limits::new(model, *cfg)?.phi(w)
}

pub fn psi_eval(model: &Model, cfg: &LimitConfig, w: Complex64) -> Result<Complex64> {
    Limits::new(model, *cfg)?.psi(w)
}
