//! Direct simulation of `X_{t+1} = Σ_{j ≤ X_t} ξ_{j,t} + Y_t`, `X₀ = 1`,
//! Kolmogorov–Smirnov comparison with a computed density, and exact
//! rare-event ratios `(p₁q₀)^{−t} P(X_t = n)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inversion::DensityCurve;
use crate::pgf::{Model, Pgf};

/// Generations with at most this many individuals are sampled one by one.
const DIRECT_SAMPLING_LIMIT: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub t_horizon: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            t_horizon: 30,
            seed: 0x5eed,
        }
    }
}

struct Sampler {
    cdf: Vec<f64>,
    probs: Vec<f64>,
}

impl Sampler {
    fn new(f: &Pgf) -> Self {
        let probs = f.coeffs().to_vec();
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf, probs }
    }

    /// Inverse-CDF draw of one count.
    fn one(&self, rng: &mut impl Rng) -> u64 {
        let u: f64 = rng.random();
        let last = self.cdf.len() - 1;
        self.cdf.iter().position(|&c| u < c).unwrap_or(last) as u64
    }

    /// Sum of `n` independent counts.
    fn sum(&self, n: u64, rng: &mut impl Rng) -> u64 {
        if n <= DIRECT_SAMPLING_LIMIT {
            return (0..n).map(|_| self.one(rng)).sum();
        }
        // multinomial cell counts by sequential conditional binomials
        let mut remaining = n;
        let mut mass = 1.0;
        let mut total = 0u64;
        let last = self.probs.len() - 1;
        for (k, &p) in self.probs.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let count = if k == last || p >= mass {
                remaining
            } else if p <= 0.0 {
                0
            } else {
                Binomial::new(remaining, p / mass)
                    .expect("probability in [0, 1]")
                    .sample(rng)
            };
            total += k as u64 * count;
            remaining -= count;
            mass -= p;
        }
        total
    }
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Samples of `E^{−t} X_t`. Path `i` draws from its own stream of the seeded
/// generator, so results do not depend on the thread count.
pub fn simulate(model: &Model, cfg: &SimConfig) -> Result<Vec<f64>> {
    if cfg.n_paths == 0 || cfg.t_horizon == 0 {
        return Err(Error::InvalidArgument(
            "n_paths and t_horizon must be >= 1".into(),
        ));
    }
    let growth = model.big_e.powi(cfg.t_horizon as i32);
    let max_degree = model.p.degree().max(1) as f64;
    if growth * model.limit_mean() * 50.0 > 2f64.powi(53)
        || max_degree.powi(cfg.t_horizon as i32).is_infinite()
    {
        return Err(Error::InvalidArgument(format!(
            "t_horizon {} makes population counts exceed 2^53",
            cfg.t_horizon
        )));
    }
    let offspring = Sampler::new(&model.p);
    let immigrants = Sampler::new(&model.q);
    let samples = (0..cfg.n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(cfg.seed, path);
            let mut x = 1u64;
            for _ in 0..cfg.t_horizon {
                x = offspring.sum(x, &mut rng) + immigrants.one(&mut rng);
            }
            x as f64 / growth
        })
        .collect();
    Ok(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(samples: &[f64]) -> SampleSummary {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    SampleSummary {
        n,
        mean,
        variance,
        std_error: (variance / n as f64).sqrt(),
        min: samples.iter().copied().fold(f64::INFINITY, f64::min),
        max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Largest fraction of samples outside the curve's range that is tolerated.
pub const MAX_UNCOVERED_FRACTION: f64 = 0.01;

/// Sup distance between the empirical CDF of `samples` and the trapezoid CDF
/// of `curve`, normalized to unit mass.
pub fn ks_distance(samples: &[f64], curve: &DensityCurve) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let (lo, hi) = (curve.xs[0], *curve.xs.last().unwrap());
    let outside = samples.iter().filter(|&&s| s < lo || s > hi).count();
    let fraction = outside as f64 / samples.len() as f64;
    if fraction > MAX_UNCOVERED_FRACTION {
        return Err(Error::InsufficientCoverage { fraction });
    }
    let cdf = curve.cumulative();
    let total = *cdf.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("curve has no mass".into()));
    }
    let curve_cdf = |x: f64| -> f64 {
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let i = curve
            .xs
            .partition_point(|&v| v <= x)
            .clamp(1, curve.xs.len() - 1);
        let (a, pa) = (curve.xs[i - 1], curve.ps[i - 1]);
        let px = curve.interpolate(x).unwrap();
        ((cdf[i - 1] + 0.5 * (pa + px) * (x - a)) / total).clamp(0.0, 1.0)
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // ties: the empirical CDF jumps once per distinct value
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let f = curve_cdf(sorted[i]);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    Ok(d.min(1.0))
}

/// `(p₁q₀)^{−t} P(X_t = n)` for `n = 0..=n_max`, from exact coefficients.
pub fn rare_event_ratios(model: &Model, t: usize, n_max: usize) -> Vec<f64> {
    let scale = (model.p1 * model.q0).powi(-(t as i32));
    model
        .imm_pgf_coeffs(t, n_max)
        .into_iter()
        .map(|c| c * scale)
        .collect()
}
