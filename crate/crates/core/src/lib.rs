//! Density of the martingale limit `W = lim E^{-t} X_t` of a supercritical
//! Galton–Watson process with immigration, in the Schröder case `p0 = 0`.
//!
//! Two routes to the density are provided and cross-checked against each
//! other and against simulation:
//!
//! * [`inversion`]: Fourier inversion of `Π_imm(iy)` on the imaginary axis,
//! * [`tail_series`]: the left-tail series built from the Taylor coefficients
//!   of `A(z)` ([`series_alg`]) and the Fourier coefficients of the
//!   one-periodic functions `K^{n+1}·L` ([`periodic`]).
//!
//! [`montecarlo`] simulates the process directly and supplies exact
//! small-time probabilities.

// `!(a < b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod inversion;
pub mod limits;
pub mod montecarlo;
pub mod periodic;
pub mod pgf;
pub mod series_alg;
pub mod tail_series;

mod summation;

pub use error::{Error, Result};
pub use inversion::{
    density_fourier, tail_mass, DensityCurve, FourierInverter, InversionConfig, Method,
};
pub use limits::{LimitConfig, Limits};
pub use montecarlo::{ks_distance, rare_event_ratios, simulate, SimConfig};
pub use periodic::{fourier_table, julia_sector_probe, CriticalAngleReport, FourierTable};
pub use pgf::{validate_model, HypothesisFlags, Model, ModelFile, Pgf};
pub use series_alg::{a_coeffs, phi_inv_coeffs, psi_of_phi_inv_coeffs, TruncatedSeries};
pub use tail_series::{density_quick, density_series, recip_gamma, QuickApprox, SeriesApprox};

pub use num_complex::Complex64;
