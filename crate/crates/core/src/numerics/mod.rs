//! Special-function and quadrature kernel.
//!
//! Everything here is a pure function of its inputs. The exponential
//! integral [`exp_integral_ei`] is the antiderivative kernel of the
//! sustainability closed form; [`integrate_adaptive`] is the general-purpose
//! integrator used as the cross-check for every closed form in [`crate::model`].
//!
//! [`reference`] holds slower, independently derived evaluations that are
//! only used for validation.

mod ei;
mod quadrature;
pub mod reference;

pub use ei::{exp_integral_ei, ei_asymptotic, ei_series, EI_ARGUMENT_LIMIT, EI_SERIES_LIMIT, EULER_GAMMA};
pub use quadrature::{integrate_adaptive, AdaptiveQuadrature, QuadratureResult, DEFAULT_MAX_EVALUATIONS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: |x| = {0} exceeds {limit}", limit = EI_ARGUMENT_LIMIT)]
    Overflow(f64),
    #[error("invalid interval [{lo}, {hi}]: need finite lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid tolerance {0}: need tol > 0")]
    InvalidTolerance(f64),
    #[error("integrand is not finite at t = {0}")]
    NonFiniteIntegrand(f64),
    #[error("quadrature did not converge within {evaluations} evaluations (estimate {value}, error {error_estimate:e})")]
    NonConvergence {
        value: f64,
        error_estimate: f64,
        evaluations: usize,
    },
}

/// A finite, non-degenerate closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct RealInterval {
    lo: f64,
    hi: f64,
}

impl RealInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, NumericsError> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(NumericsError::InvalidInterval { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl TryFrom<(f64, f64)> for RealInterval {
    type Error = NumericsError;

    fn try_from((lo, hi): (f64, f64)) -> Result<Self, Self::Error> {
        Self::new(lo, hi)
    }
}

impl From<RealInterval> for (f64, f64) {
    fn from(iv: RealInterval) -> Self {
        (iv.lo, iv.hi)
    }
}
