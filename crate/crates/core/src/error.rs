use num_complex::Complex64;
use thiserror::Error;

use crate::symbols::{EvalError, ParseError};

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {0} is not inside the unit disk (|z| must be < 1 - 1e-12)")]
    OutsideDisk(Complex64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integrand not finite at node {index} (w = {point}): {value}")]
    NonFiniteIntegrand {
        index: usize,
        point: Complex64,
        value: Complex64,
    },

    #[error("insufficient angular resolution: {n_angular} angular nodes cannot resolve frequency {required}")]
    InsufficientAngularResolution { n_angular: usize, required: usize },

    #[error("epsilon {epsilon} out of admissible range (0, {bound})")]
    EpsilonOutOfRange { epsilon: f64, bound: f64 },

    #[error("zero norm in denominator while numerator is {numerator}")]
    ZeroNorm { numerator: f64 },

    #[error("kernel truncation too coarse at u = {point}: last 16 modes change the result by {relative_change:.3e}")]
    KernelTruncation {
        point: Complex64,
        relative_change: f64,
    },

    #[error("singular value decomposition did not converge for a {order}x{order} matrix")]
    SpectralNonConvergence { order: usize },

    #[error("symbol evaluation failed: {0}")]
    Eval(#[from] EvalError),

    #[error("symbol parse failed: {0}")]
    Parse(#[from] ParseError),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors that come from the numerics rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteIntegrand { .. }
                | Error::SpectralNonConvergence { .. }
                | Error::KernelTruncation { .. }
                | Error::ZeroNorm { .. }
                | Error::Eval(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
