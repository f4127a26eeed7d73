use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "gwi",
    version,
    about = "Density of the martingale limit of a Galton-Watson process with immigration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density by Fourier inversion, as CSV `x,p`.
    Density(Common),
    /// Full left-tail series, as CSV `x,p`.
    Series(Common),
    /// Quick (m = 0) approximation, as CSV `x,p`.
    Approx(Common),
    /// Taylor coefficients g, h, A as JSON arrays.
    Coeffs(Common),
    /// Fourier coefficients of K^{n+1}·L as JSON.
    Fourier(Common),
    /// Monte Carlo samples of E^{-t} X_t, as CSV `w`, with a JSON summary.
    Simulate(SimulateArgs),
    /// Residual suites, coefficient oracles and hypothesis flags.
    Validate(Common),
    /// Several methods on one grid, with sup-norm differences.
    Compare(CompareArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Density(_) => "density",
            Command::Series(_) => "series",
            Command::Approx(_) => "approx",
            Command::Coeffs(_) => "coeffs",
            Command::Fourier(_) => "fourier",
            Command::Simulate(_) => "simulate",
            Command::Validate(_) => "validate",
            Command::Compare(_) => "compare",
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model JSON: {"p": [...], "q": [...]}, index = count.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Inversion profile y_max=2000, n_points=1000000, t_iter=70 (default).
    #[arg(long, conflicts_with = "fast")]
    pub paper: bool,
    /// Inversion profile y_max=500, n_points=200000.
    #[arg(long)]
    pub fast: bool,
    /// Series terms (n) for series/approx, order for coeffs and fourier.
    #[arg(long, value_name = "INT")]
    pub n_terms: Option<usize>,
    /// Largest Fourier mode |m|.
    #[arg(long, value_name = "INT")]
    pub m_max: Option<usize>,
    /// Evaluation grid `x0:x1:count`.
    #[arg(long, value_name = "x0:x1:count")]
    pub grid: Option<Grid>,
    /// Exit with status 2 when a hypothesis warning is raised.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Base seed; each path draws from its own stream.
    #[arg(long, value_name = "INT", default_value_t = 0x5eed)]
    pub seed: u64,
    /// Number of independent paths.
    #[arg(long, value_name = "INT", default_value_t = 100_000)]
    pub paths: usize,
    /// Generations simulated.
    #[arg(long, value_name = "INT", default_value_t = 30)]
    pub horizon: usize,
    /// Density CSV (with manifest) to compute the KS distance against.
    #[arg(long, value_name = "PATH")]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated subset of fourier, series, quick.
    #[arg(long, value_delimiter = ',', default_value = "fourier,quick")]
    pub methods: Vec<String>,
    /// Previously written density CSVs (with manifests) to include.
    #[arg(long, value_name = "PATH")]
    pub curve: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub x1: f64,
    pub count: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(format!("expected x0:x1:count, got '{s}'"));
        };
        let x0: f64 = a.parse().map_err(|_| format!("bad x0 '{a}'"))?;
        let x1: f64 = b.parse().map_err(|_| format!("bad x1 '{b}'"))?;
        let count: usize = c.parse().map_err(|_| format!("bad count '{c}'"))?;
        if !(x0 > 0.0) || !(x1 > x0) || count < 2 {
            return Err(format!("grid needs 0 < x0 < x1 and count >= 2, got '{s}'"));
        }
        Ok(Grid { x0, x1, count })
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            x0: 0.005,
            x1: 12.0,
            count: 1200,
        }
    }
}
