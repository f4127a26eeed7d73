use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gwi_core::inversion::linear_grid;
use gwi_core::montecarlo::summarize;
use gwi_core::periodic::{
    default_probe_grid, kl_eval, DEFAULT_GRID_SIZE, DEFAULT_M_MAX, DEFAULT_N_MAX,
};
use gwi_core::series_alg::{tail_coefficients, DEFAULT_ORDER};
use gwi_core::tail_series::DEFAULT_N_TERMS;
use gwi_core::{
    a_coeffs, fourier_table, julia_sector_probe, ks_distance, rare_event_ratios, simulate,
    Complex64, CriticalAngleReport, DensityCurve, FourierInverter, FourierTable, InversionConfig,
    LimitConfig, Limits, Method, Model, ModelFile, QuickApprox, SeriesApprox, SimConfig,
};
use serde_json::{json, Value};

use crate::args::{Command, Common, CompareArgs, SimulateArgs};
use crate::error::CliError;
use crate::manifest::RunManifest;

const RESIDUAL_TOL: f64 = 1e-8;
const TWO_ROUTE_TOL: f64 = 1e-6;
const PROBE_STEP: f64 = 0.01;
const PROBE_MAX_ITER: usize = 5000;

struct Run<'a> {
    subcommand: &'static str,
    common: &'a Common,
    model_file: ModelFile,
    model: Model,
    started: Instant,
    knobs: BTreeMap<String, Value>,
}

impl<'a> Run<'a> {
    fn new(subcommand: &'static str, common: &'a Common) -> Result<Self, CliError> {
        let model_file = ModelFile::load(&common.model)?;
        let model = model_file.validate()?;
        Ok(Self {
            subcommand,
            common,
            model_file,
            model,
            started: Instant::now(),
            knobs: BTreeMap::new(),
        })
    }

    fn knob(&mut self, key: &str, value: Value) {
        self.knobs.insert(key.into(), value);
    }

    fn grid(&mut self) -> Result<Vec<f64>, CliError> {
        let g = self.common.grid.unwrap_or_default();
        self.knob("grid", json!(format!("{}:{}:{}", g.x0, g.x1, g.count)));
        Ok(linear_grid(g.x0, g.x1, g.count)?)
    }

    fn inversion_config(&mut self) -> InversionConfig {
        let (name, cfg) = if self.common.fast {
            ("fast", InversionConfig::fast())
        } else {
            ("paper", InversionConfig::paper())
        };
        self.knob("profile", json!(name));
        self.knob("y_max", json!(cfg.y_max));
        self.knob("n_points", json!(cfg.n_points));
        self.knob("t_iter", json!(cfg.limits.t_iter));
        self.knob("prod_terms", json!(cfg.limits.prod_terms));
        self.knob("conv_tol", json!(cfg.limits.conv_tol));
        cfg
    }

    fn table(&mut self, n_max: usize) -> Result<FourierTable, CliError> {
        let m_max = self.common.m_max.unwrap_or(DEFAULT_M_MAX);
        let grid_size = DEFAULT_GRID_SIZE.max((4 * m_max).next_power_of_two());
        self.knob("m_max", json!(m_max));
        self.knob("table_grid_size", json!(grid_size));
        Ok(fourier_table(
            &self.model,
            &LimitConfig::default(),
            n_max,
            m_max,
            grid_size,
        )?)
    }

    /// Hypothesis warnings, including the sector probe. Printed to stderr;
    /// fatal under `--strict`.
    fn check_hypotheses(&self) -> Result<Vec<String>, CliError> {
        let mut warnings = self.model.warnings();
        let report = probe(&self.model)?;
        if !report.hypothesis_pi_ok {
            warnings.push(format!(
                "sector probe bounds the critical angle only by {:.3} rad, not above pi",
                report.theta_star_lower
            ));
        }
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        if self.common.strict && !warnings.is_empty() {
            return Err(CliError::Strict);
        }
        Ok(warnings)
    }

    fn finish(self, outputs: Vec<PathBuf>, summary: Option<Value>) -> Result<(), CliError> {
        let Some(primary) = outputs.first().cloned() else {
            return Ok(());
        };
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand.into(),
            model_path: self.common.model.clone(),
            model: self.model_file,
            knobs: self.knobs,
            outputs,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            summary,
        };
        manifest.write(&primary)
    }
}

fn probe(model: &Model) -> Result<CriticalAngleReport, CliError> {
    let (angles, radii) = default_probe_grid(model, PROBE_STEP);
    Ok(julia_sector_probe(
        model,
        &angles,
        &radii,
        PROBE_MAX_ITER,
        PROBE_STEP,
    )?)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| CliError::io(p, e))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_columns(
    out: Option<&Path>,
    headers: &[String],
    columns: &[Vec<f64>],
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(headers)?;
    for i in 0..columns[0].len() {
        w.serialize(columns.iter().map(|c| c[i]).collect::<Vec<f64>>())?;
    }
    w.flush().map_err(|e| CliError::Format(e.to_string()))?;
    Ok(())
}

fn write_json(out: Option<&Path>, value: &Value) -> Result<(), CliError> {
    let mut w = sink(out)?;
    let text = serde_json::to_string_pretty(value).expect("JSON serializes");
    match writeln!(w, "{text}").and_then(|_| w.flush()) {
        // a closed pipe downstream (`| head`) is not an error
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::io(out.unwrap_or(Path::new("<stdout>")), e))
        }
        _ => Ok(()),
    }
}

fn outputs(common: &Common) -> Vec<PathBuf> {
    common.out.iter().cloned().collect()
}

/// Reads a two-column density CSV and checks that its manifest names the
/// same model.
fn load_curve(path: &Path, model: &ModelFile) -> Result<DensityCurve, CliError> {
    let manifest = RunManifest::read_for(path)?;
    if &manifest.model != model {
        return Err(CliError::ModelMismatch(format!(
            "{} was computed for p = {:?}, q = {:?}",
            path.display(),
            manifest.model.p,
            manifest.model.q
        )));
    }
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let (mut xs, mut ps) = (Vec::new(), Vec::new());
    for row in reader.deserialize::<(f64, f64)>() {
        let (x, p) = row?;
        xs.push(x);
        ps.push(p);
    }
    let method = manifest
        .subcommand
        .parse::<Method>()
        .unwrap_or(Method::Fourier);
    Ok(DensityCurve::new(xs, ps, method, BTreeMap::new())?)
}

fn density(common: &Common) -> Result<(), CliError> {
    let mut run = Run::new("density", common)?;
    run.check_hypotheses()?;
    let xs = run.grid()?;
    let cfg = run.inversion_config();
    let curve = FourierInverter::new(&run.model, cfg)?.curve(&xs)?;
    write_columns(
        common.out.as_deref(),
        &["x".into(), "p".into()],
        &[curve.xs.clone(), curve.ps.clone()],
    )?;
    let summary = json!({
        "area": curve.mass(),
        "first_moment": curve.first_moment(),
        "expected_mean": run.model.limit_mean(),
    });
    run.finish(outputs(common), Some(summary))
}

fn series(common: &Common, quick: bool) -> Result<(), CliError> {
    let mut run = Run::new(if quick { "approx" } else { "series" }, common)?;
    run.check_hypotheses()?;
    let xs = run.grid()?;
    let n_terms = common.n_terms.unwrap_or(DEFAULT_N_TERMS);
    run.knob("n_terms", json!(n_terms));
    let table = run.table(n_terms)?;
    let a = a_coeffs(&run.model, n_terms);
    let (ps, summary) = if quick {
        let q = QuickApprox::new(&run.model, &a, &table, n_terms)?;
        let ps = xs
            .iter()
            .map(|&x| q.eval(x))
            .collect::<Result<Vec<_>, _>>()?;
        (ps, None)
    } else {
        let s = SeriesApprox::new(&run.model, &a, &table, n_terms, table.m_max())?;
        let values = xs
            .iter()
            .map(|&x| s.eval(x))
            .collect::<Result<Vec<_>, _>>()?;
        let last = values.iter().map(|v| v.last_term).fold(0.0, f64::max);
        let imag = values.iter().map(|v| v.imag.abs()).fold(0.0, f64::max);
        (
            values.iter().map(|v| v.value).collect(),
            Some(json!({"max_last_term": last, "max_imag_residue": imag})),
        )
    };
    write_columns(common.out.as_deref(), &["x".into(), "p".into()], &[xs, ps])?;
    run.finish(outputs(common), summary)
}

fn coeffs(common: &Common) -> Result<(), CliError> {
    let mut run = Run::new("coeffs", common)?;
    run.check_hypotheses()?;
    let order = common.n_terms.unwrap_or(DEFAULT_ORDER);
    run.knob("order", json!(order));
    let tc = tail_coefficients(&run.model, order);
    let value = json!({"g": tc.g.coeffs(), "h": tc.h.coeffs(), "a": tc.a.coeffs()});
    write_json(common.out.as_deref(), &value)?;
    run.finish(outputs(common), None)
}

fn fourier(common: &Common) -> Result<(), CliError> {
    let mut run = Run::new("fourier", common)?;
    run.check_hypotheses()?;
    let n_max = common.n_terms.unwrap_or(DEFAULT_N_MAX);
    run.knob("n_max", json!(n_max));
    let table = run.table(n_max)?;
    let entries: Vec<Value> = table
        .entries()
        .map(|(n, m, t)| json!({"n": n, "m": m, "re": t.re, "im": t.im}))
        .collect();
    write_json(common.out.as_deref(), &Value::Array(entries))?;
    let floors: Vec<f64> = (0..=n_max).map(|n| table.noise_floor(n)).collect();
    run.finish(outputs(common), Some(json!({"noise_floor": floors})))
}

fn simulate_cmd(args: &SimulateArgs) -> Result<(), CliError> {
    let common = &args.common;
    let mut run = Run::new("simulate", common)?;
    run.check_hypotheses()?;
    let cfg = SimConfig {
        n_paths: args.paths,
        t_horizon: args.horizon,
        seed: args.seed,
    };
    run.knob("paths", json!(cfg.n_paths));
    run.knob("horizon", json!(cfg.t_horizon));
    run.knob("seed", json!(cfg.seed));
    let samples = simulate(&run.model, &cfg)?;
    let s = summarize(&samples);
    let mut summary = json!({
        "n": s.n,
        "mean": s.mean,
        "variance": s.variance,
        "std_error": s.std_error,
        "min": s.min,
        "max": s.max,
        "expected_mean": run.model.limit_mean(),
    });
    if let Some(path) = &args.curve {
        let curve = load_curve(path, &run.model_file)?;
        summary["ks"] = json!(ks_distance(&samples, &curve)?);
        run.knob("curve", json!(path));
    }
    if let Some(out) = &common.out {
        write_columns(Some(out), &["w".into()], &[samples])?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("JSON serializes")
    );
    run.finish(outputs(common), Some(summary))
}

fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let common = &args.common;
    let mut run = Run::new("compare", common)?;
    run.check_hypotheses()?;
    let loaded = args
        .curve
        .iter()
        .map(|p| load_curve(p, &run.model_file).map(|c| (p, c)))
        .collect::<Result<Vec<_>, _>>()?;
    // an explicit grid wins; otherwise reuse the first loaded curve's grid
    let xs = match (common.grid, loaded.first()) {
        (None, Some((_, c))) => c.xs.clone(),
        _ => run.grid()?,
    };
    let methods = args
        .methods
        .iter()
        .map(|m| match m.parse::<Method>() {
            Ok(Method::Montecarlo) | Err(_) => Err(CliError::Usage(format!(
                "compare supports fourier, series and quick, got '{m}'"
            ))),
            Ok(method) => Ok(method),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if methods.is_empty() && loaded.is_empty() {
        return Err(CliError::Usage("nothing to compare".into()));
    }

    let mut headers = vec!["x".to_string()];
    let mut columns = vec![xs.clone()];
    let n_terms = common.n_terms.unwrap_or(DEFAULT_N_TERMS);
    let needs_series = methods.iter().any(|m| *m != Method::Fourier);
    let series_inputs = if needs_series {
        run.knob("n_terms", json!(n_terms));
        let table = run.table(n_terms)?;
        Some((table, a_coeffs(&run.model, n_terms)))
    } else {
        None
    };
    for method in &methods {
        let ps = match method {
            Method::Fourier => {
                let cfg = run.inversion_config();
                FourierInverter::new(&run.model, cfg)?.curve(&xs)?.ps
            }
            Method::Series => {
                let (table, a) = series_inputs.as_ref().expect("built above");
                let s = SeriesApprox::new(&run.model, a, table, n_terms, table.m_max())?;
                xs.iter()
                    .map(|&x| s.eval(x).map(|v| v.value))
                    .collect::<Result<_, _>>()?
            }
            Method::Quick => {
                let (table, a) = series_inputs.as_ref().expect("built above");
                let q = QuickApprox::new(&run.model, a, table, n_terms)?;
                xs.iter().map(|&x| q.eval(x)).collect::<Result<_, _>>()?
            }
            Method::Montecarlo => unreachable!("rejected above"),
        };
        headers.push(method.name().into());
        columns.push(ps);
    }
    for (path, curve) in &loaded {
        let ps = xs
            .iter()
            .map(|&x| curve.interpolate(x).unwrap_or(f64::NAN))
            .collect();
        headers.push(
            path.file_stem()
                .map_or("curve".into(), |s| s.to_string_lossy().into_owned()),
        );
        columns.push(ps);
    }

    // sup-norm differences against the first column, on the common support
    let reference = &columns[1];
    let scale = reference.iter().copied().fold(0.0, f64::max);
    let diffs: serde_json::Map<String, Value> = headers[2..]
        .iter()
        .zip(&columns[2..])
        .map(|(name, col)| {
            let sup = reference
                .iter()
                .zip(col)
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (
                name.clone(),
                json!({"sup": sup, "relative_to_max": sup / scale}),
            )
        })
        .collect();
    let summary = json!({"reference": headers[1], "differences": diffs});
    write_columns(common.out.as_deref(), &headers, &columns)?;
    eprintln!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("JSON serializes")
    );
    run.finish(outputs(common), Some(summary))
}

fn max_abs(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn validate(common: &Common) -> Result<(), CliError> {
    let mut run = Run::new("validate", common)?;
    let warnings = run.check_hypotheses()?;
    let m = &run.model;
    let lim = Limits::new(m, LimitConfig::default())?;
    let e = m.big_e;

    let zs: Vec<Complex64> = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]
        .iter()
        .flat_map(|&r| {
            (0..=12).map(move |k| Complex64::from_polar(r, -PI / 2.0 + PI * k as f64 / 12.0))
        })
        .collect();
    let mut pi_res = Vec::new();
    let mut r_res = Vec::new();
    for &z in &zs {
        let (pi, r) = lim.pi_and_r(z)?;
        let (pi_e, r_e) = lim.pi_and_r(z * e)?;
        pi_res.push((m.p.eval(pi) - pi_e).norm());
        r_res.push((r_e - r * m.q.eval(pi)).norm());
    }
    let mut phi_res = Vec::new();
    let mut psi_res = Vec::new();
    for k in 0..=60 {
        let w = Complex64::new(0.01 * k as f64, 0.0);
        let (phi, psi) = lim.phi_and_psi(w)?;
        let (phi_p, psi_p) = lim.phi_and_psi(m.p.eval(w))?;
        phi_res.push((phi_p - m.p1 * phi).norm());
        psi_res.push((m.q.eval(w) * psi_p - m.q0 * psi).norm());
    }
    let mut period = Vec::new();
    for x in [0.0, 0.25, 0.5] {
        let (k0, l0) = kl_eval(&lim, x)?;
        let (k1, l1) = kl_eval(&lim, x + 1.0)?;
        period.push(k1 - k0);
        period.push(l1 - l0);
    }

    let tc = tail_coefficients(m, 8);
    let (p1, p2, q0, q1) = (m.p1, m.p.coeff(2), m.q0, m.q.coeff(1));
    let g2 = -p2 / (p1 * (1.0 - p1));
    let h1 = q1 / (q0 * (1.0 - p1));
    let closed = max_abs([
        tc.g.coeff(2) - g2,
        tc.h.coeff(1) - h1,
        tc.a.coeff(1) - (g2 - h1),
    ]);
    let phi = tc.g.reversion()?;
    let phipsi = phi.mul(&tc.h.compose(&phi)?);
    let ratios = rare_event_ratios(m, 30, 6);
    let two_route = max_abs((0..=6).map(|n| ratios[n] - phipsi.coeff(n)));

    let checks = [
        ("poincare", max_abs(pi_res), RESIDUAL_TOL),
        ("product", max_abs(r_res), RESIDUAL_TOL),
        ("schroder", max_abs(phi_res), RESIDUAL_TOL),
        ("immigration_schroder", max_abs(psi_res), RESIDUAL_TOL),
        ("periodicity", max_abs(period), RESIDUAL_TOL),
        ("closed_form_coefficients", closed, 1e-12),
        ("rare_event_two_route", two_route, TWO_ROUTE_TOL),
    ];
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !(c.1 <= c.2))
        .map(|c| c.0)
        .collect();
    let report = json!({
        "flags": m.flags,
        "warnings": warnings,
        "checks": checks
            .iter()
            .map(|(name, value, tol)| json!({"name": name, "value": value, "tolerance": tol, "pass": value <= tol}))
            .collect::<Vec<_>>(),
        "critical_angle_lower_bound": probe(m)?.theta_star_lower,
        "passed": failed.is_empty(),
    });
    write_json(common.out.as_deref(), &report)?;
    run.knob("residual_tolerance", json!(RESIDUAL_TOL));
    run.finish(outputs(common), Some(report))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}

pub fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Density(c) => density(c),
        Command::Series(c) => series(c, false),
        Command::Approx(c) => series(c, true),
        Command::Coeffs(c) => coeffs(c),
        Command::Fourier(c) => fourier(c),
        Command::Simulate(s) => simulate_cmd(s),
        Command::Validate(c) => validate(c),
        Command::Compare(c) => compare(c),
    }
}
