//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.
//!
//! Run with `cargo test -p gwi-core --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gwi_core::inversion::linear_grid;
use gwi_core::montecarlo::summarize;
use gwi_core::periodic::{default_probe_grid, kl_eval, DEFAULT_GRID_SIZE, RESOLUTION_FACTOR};
use gwi_core::series_alg::tail_coefficients;
use gwi_core::tail_series::{b_n_complex, b_n_eval, fit_decay_bound};
use gwi_core::*;

const REFERENCE_MODELS: [(f64, f64); 3] = [(0.3, 0.5), (0.4, 0.5), (0.5, 0.7)];

// Criterion 1
const AREA_TOL_PAPER: f64 = 1e-2;
const AREA_TOL_FAST: f64 = 2e-2;
const FAST_BUDGET: Duration = Duration::from_secs(30);
// Criterion 2. The 3% bound is implementer-calibrated: the only published
// statement is that the agreement is "quite good" for moderate x.
const QUICK_SUP_REL_TOL: f64 = 0.03;
const QUICK_M: usize = 10;
// Criterion 3
const RESIDUAL_TOL: f64 = 1e-8;
// Criterion 4
const CLOSED_FORM_TOL: f64 = 1e-12;
const REVERSION_TOL: f64 = 1e-8;
const TWO_ROUTE_TOL: f64 = 1e-6;
const ORACLE_T: usize = 30;
// Criterion 6
const KS_TOL: f64 = 0.02;
const MC_PATHS: usize = 100_000;
const MC_SEED: u64 = 20_240_601;
// Criterion 7
const PERIOD_TOL: f64 = 1e-8;
const CONJ_TOL: f64 = 1e-12;
const REAL_TOL: f64 = 1e-12;
// Criterion 8
const PROBE_STEP: f64 = 0.01;

/// Density grid used for every Fourier curve in the suite.
fn x_grid() -> Vec<f64> {
    linear_grid(0.001, 15.0, 1500).unwrap()
}

struct Fixture {
    label: String,
    model: Model,
    paper: DensityCurve,
    paper_time: Duration,
    table: FourierTable,
    a: TruncatedSeries,
}

impl Fixture {
    fn new(p1: f64, q0: f64) -> Self {
        let model = Model::quadratic(p1, q0).unwrap();
        let start = Instant::now();
        let paper = FourierInverter::new(&model, InversionConfig::paper())
            .and_then(|inv| inv.curve(&x_grid()))
            .unwrap();
        let paper_time = start.elapsed();
        let table =
            fourier_table(&model, &LimitConfig::default(), 16, 8, DEFAULT_GRID_SIZE).unwrap();
        let a = a_coeffs(&model, 32);
        Self {
            label: format!("(p1={p1}, q0={q0})"),
            model,
            paper,
            paper_time,
            table,
            a,
        }
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            detail: String::new(),
        }
    }

    fn check(&mut self, ok: bool, note: String) {
        self.pass &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&note);
        if !ok {
            self.detail.push_str(" <-- FAIL");
        }
    }
}

fn normalization(fx: &[Fixture]) -> Outcome {
    let mut out = Outcome::new();
    for f in fx {
        let area = f.paper.mass();
        out.check(
            (area - 1.0).abs() <= AREA_TOL_PAPER,
            format!("{} paper area {area:.6} in {:.1?}", f.label, f.paper_time),
        );
        let start = Instant::now();
        let fast = FourierInverter::new(&f.model, InversionConfig::fast())
            .and_then(|inv| inv.curve(&x_grid()))
            .unwrap();
        let took = start.elapsed();
        let area = fast.mass();
        out.check(
            (area - 1.0).abs() <= AREA_TOL_FAST && took < FAST_BUDGET,
            format!("fast area {area:.6} in {took:.1?}"),
        );
    }
    out
}

fn quick_vs_fourier(fx: &[Fixture]) -> Outcome {
    let mut out = Outcome::new();
    for f in fx {
        let quick = QuickApprox::new(&f.model, &f.a, &f.table, QUICK_M).unwrap();
        let sup = f
            .paper
            .xs
            .iter()
            .zip(&f.paper.ps)
            .filter(|(x, _)| (0.2..=2.5).contains(*x))
            .map(|(&x, &p)| (quick.eval(x).unwrap() - p).abs())
            .fold(0.0, f64::max);
        let rel = sup / f.paper.max_value();
        out.check(
            rel <= QUICK_SUP_REL_TOL,
            format!("{} sup|quick-fourier|/max = {:.3}%", f.label, 100.0 * rel),
        );
    }
    out
}

fn residuals(fx: &[Fixture]) -> Outcome {
    let mut out = Outcome::new();
    let radii = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];
    let zs: Vec<Complex64> = radii
        .iter()
        .flat_map(|&r| {
            (0..=12).map(move |k| Complex64::from_polar(r, -PI / 2.0 + PI * k as f64 / 12.0))
        })
        .collect();
    let ws: Vec<f64> = (0..=60).map(|k| 0.01 * k as f64).collect();
    for f in fx {
        let lim = Limits::new(&f.model, LimitConfig::default()).unwrap();
        let e = f.model.big_e;
        let (mut pi_res, mut r_res): (f64, f64) = (0.0, 0.0);
        for &z in &zs {
            let (pi, r) = lim.pi_and_r(z).unwrap();
            let (pi_e, r_e) = lim.pi_and_r(z * e).unwrap();
            pi_res = pi_res.max((f.model.p.eval(pi) - pi_e).norm());
            r_res = r_res.max((r_e - r * f.model.q.eval(pi)).norm());
        }
        let (mut phi_res, mut psi_res): (f64, f64) = (0.0, 0.0);
        for &w in &ws {
            let w = Complex64::new(w, 0.0);
            let pw = f.model.p.eval(w);
            let (phi, psi) = lim.phi_and_psi(w).unwrap();
            let (phi_p, psi_p) = lim.phi_and_psi(pw).unwrap();
            phi_res = phi_res.max((phi_p - f.model.p1 * phi).norm());
            psi_res = psi_res.max((f.model.q.eval(w) * psi_p - f.model.q0 * psi).norm());
        }
        let worst = pi_res.max(r_res).max(phi_res).max(psi_res);
        out.check(
            worst < RESIDUAL_TOL,
            format!(
                "{} Pi {pi_res:.1e}, R {r_res:.1e}, Phi {phi_res:.1e}, Psi {psi_res:.1e}",
                f.label
            ),
        );
    }
    out
}

fn coefficient_oracles(fx: &[Fixture]) -> Outcome {
    let mut out = Outcome::new();
    for f in fx {
        let m = &f.model;
        let (p1, p2, q0, q1) = (m.p1, m.p.coeff(2), m.q0, m.q.coeff(1));
        let tc = tail_coefficients(m, 12);
        let g2 = -p2 / (p1 * (1.0 - p1));
        let h1 = q1 / (q0 * (1.0 - p1));
        let closed = (tc.g.coeff(2) - g2)
            .abs()
            .max((tc.h.coeff(1) - h1).abs())
            .max((tc.a.coeff(1) - (g2 - h1)).abs());

        // Φ by reversion of Φ⁻¹ against p₁^{−t} [zⁿ] P_t
        let phi = tc.g.reversion().unwrap();
        let no_imm = validate_model(m.p.coeffs(), &[1.0]).unwrap();
        let p_t = no_imm.imm_pgf_coeffs(ORACLE_T, 8);
        let scale = p1.powi(-(ORACLE_T as i32));
        let reversion = (1..=8)
            .map(|n| (scale * p_t[n] - phi.coeff(n)).abs())
            .fold(0.0, f64::max);
        // The oracle itself is off by g₂ p₁ᵗ [zⁿ]Φ² + O(p₁²ᵗ). Reported so a
        // failure can be told apart from an error in Φ.
        let phi2 = phi.mul(&phi);
        let bias_removed = (1..=8)
            .map(|n| {
                let bias = tc.g.coeff(2) * p1.powi(ORACLE_T as i32) * phi2.coeff(n);
                (scale * p_t[n] - bias - phi.coeff(n)).abs()
            })
            .fold(0.0, f64::max);

        // (p₁q₀)^{−t} P(X_t = n) against [zⁿ] Φ(z)Ψ(z), Ψ = H∘Φ
        let psi = tc.h.compose(&phi).unwrap();
        let phipsi = phi.mul(&psi);
        let ratios = rare_event_ratios(m, ORACLE_T, 6);
        let two_route = (0..=6)
            .map(|n| (ratios[n] - phipsi.coeff(n)).abs())
            .fold(0.0, f64::max);

        out.check(
            closed <= CLOSED_FORM_TOL && reversion <= REVERSION_TOL && two_route <= TWO_ROUTE_TOL,
            format!(
                "{} closed forms {closed:.1e}, reversion {reversion:.1e} \
                 (oracle bias removed {bias_removed:.1e}), two-route {two_route:.1e}",
                f.label
            ),
        );
    }
    out
}

fn decay_bound(fx: &[Fixture]) -> Outcome {
    let mut out = Outcome::new();
    for f in fx {
        let fit = fit_decay_bound(&f.model, &f.a, &f.table, 12, 8).unwrap();
        out.check(
            fit.alpha > 0.0 && fit.beta > 0.0 && fit.violations == 0,
            format!(
                "{} alpha {:.3}, beta {:.2}, violations {}",
                f.label, fit.alpha, fit.beta, fit.violations
            ),
        );
        // |θ_0m| ≤ |θ_00| ρ^m with ρ = e^{−π²/ln E}, up to the round-off floor
        let rho = (-PI * PI / f.model.ln_e()).exp();
        let t00 = f.table.theta(0, 0).norm();
        let floor = RESOLUTION_FACTOR * f.table.noise_floor(0);
        let geometric =
            (1..=8i64).all(|m| f.table.theta(0, m).norm() <= t00 * rho.powi(m as i32) + floor);
        let ratio = f.table.theta(0, 1).norm() / t00;
        out.check(
            geometric,
            format!("|theta_01/theta_00| {ratio:.2e} vs bound {rho:.2e}"),
        );
    }
    out
}

fn simulation(fx: &[Fixture]) -> Outcome {
    let mut out = Outcome::new();
    for f in fx {
        let cfg = SimConfig {
            n_paths: MC_PATHS,
            t_horizon: 30,
            seed: MC_SEED,
        };
        let samples = simulate(&f.model, &cfg).unwrap();
        let ks = ks_distance(&samples, &f.paper).unwrap();
        let s = summarize(&samples);
        let z = (s.mean - f.model.limit_mean()) / s.std_error;
        out.check(
            ks <= KS_TOL && z.abs() <= 3.0,
            format!("{} KS {ks:.4}, mean {:.4} ({z:+.2} se)", f.label, s.mean),
        );
    }
    out
}

fn periodicity(fx: &[Fixture]) -> Outcome {
    let mut out = Outcome::new();
    for f in fx {
        let lim = Limits::new(&f.model, LimitConfig::default()).unwrap();
        let mut kl: f64 = 0.0;
        let mut b: f64 = 0.0;
        for x in [0.0, 0.25, 0.5] {
            let (k0, l0) = kl_eval(&lim, x).unwrap();
            let (k1, l1) = kl_eval(&lim, x + 1.0).unwrap();
            kl = kl.max((k1 - k0).abs()).max((l1 - l0).abs());
            for n in 0..=10 {
                b = b.max(
                    (b_n_eval(&f.table, &f.model, n, x + 1.0) - b_n_eval(&f.table, &f.model, n, x))
                        .abs(),
                );
            }
        }
        let conj = f
            .table
            .entries()
            .map(|(n, m, t)| (f.table.theta(n, -m) - t.conj()).norm())
            .fold(0.0, f64::max);

        // imaginary residue of the assembled series relative to Σ|terms|
        let series = SeriesApprox::new(&f.model, &f.a, &f.table, 10, 8).unwrap();
        let mut real: f64 = 0.0;
        for x in [0.05, 0.2, 0.5, 1.0, 2.0, 3.0] {
            let v = series.eval(x).unwrap();
            let scale: f64 = series.terms().map(|t| t.eval(x).norm()).sum();
            real = real.max(v.imag.abs() / scale);
        }
        for n in 0..=10 {
            for z in [0.0, 0.3, 0.7] {
                let bc = b_n_complex(&f.table, &f.model, n, 8, z);
                real = real.max(bc.im.abs() / bc.norm().max(f64::MIN_POSITIVE));
            }
        }
        out.check(
            kl < PERIOD_TOL && b < PERIOD_TOL && conj <= CONJ_TOL && real <= REAL_TOL,
            format!(
                "{} K/L {kl:.1e}, B_n {b:.1e}, conj {conj:.1e}, imag/scale {real:.1e}",
                f.label
            ),
        );
    }
    out
}

fn critical_angle() -> Outcome {
    let mut out = Outcome::new();
    let mut worst = f64::INFINITY;
    for k in 1..=9 {
        let p1 = 0.1 * k as f64;
        let model = Model::quadratic(p1, 0.5).unwrap();
        let (angles, radii) = default_probe_grid(&model, PROBE_STEP);
        let rep = julia_sector_probe(&model, &angles, &radii, 5000, PROBE_STEP).unwrap();
        worst = worst.min(rep.theta_star_lower);
        if !rep.hypothesis_pi_ok {
            out.check(
                false,
                format!("p1={p1:.1} theta* >= {:.2}", rep.theta_star_lower),
            );
        }
    }
    out.check(
        true,
        format!("p1 in 0.1..0.9: min theta* lower bound {worst:.2} (pi = {PI:.4})"),
    );
    out
}

fn main() -> ExitCode {
    let start = Instant::now();
    let fx: Vec<Fixture> = REFERENCE_MODELS
        .iter()
        .map(|&(p1, q0)| Fixture::new(p1, q0))
        .collect();
    let results = [
        ("normalization of the Fourier density", normalization(&fx)),
        ("quick approximation vs inversion", quick_vs_fourier(&fx)),
        ("functional-equation residuals", residuals(&fx)),
        ("coefficient oracles", coefficient_oracles(&fx)),
        ("term decay bound", decay_bound(&fx)),
        ("simulation cross-validation", simulation(&fx)),
        ("periodicity and symmetry", periodicity(&fx)),
        ("critical-angle probe", critical_angle()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {}: {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1?}",
        results.len() - failed,
        results.len(),
        start.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
