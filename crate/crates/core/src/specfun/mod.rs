//! Special functions evaluated in the log domain.
//!
//! Series stop once three consecutive terms fall below `1e-15` times the
//! partial sum, and give up after `10_000` terms.

mod bessel;
mod beta;
mod erf;
mod gamma;
mod hyper;
mod logval;
pub mod quad;

pub use bessel::bessel_i;
pub use beta::{inc_beta, reg_inc_beta, reg_inc_beta_pair, IncBeta};
pub use erf::{erfc, erfc_log, ln_erfc};
pub use gamma::{
    inc_gamma_pq, ln_beta, ln_gamma, ln_gamma_signed, ln_poisson_kernel, ln_reg_lower_inc_gamma,
    ln_reg_upper_inc_gamma, reg_lower_inc_gamma, reg_upper_inc_gamma,
};
pub use hyper::{appell_f1, hyp1f1, hyp2f1, hyp2f2, hyp3f2, pfq};
pub use logval::{format_scientific, LogSum, SignedLogValue, StallRule};

pub(crate) use gamma::{lgam, ln_gamma_ratio};

/// Hard cap on the number of terms of any series.
pub const MAX_SERIES_TERMS: usize = 10_000;
/// Relative size below which a series term counts as negligible.
pub const SERIES_TOL: f64 = 1e-15;
