//! Numerical tools for Toeplitz operators on the Bergman space of the unit disk.
//!
//! All integrals are against the normalized area measure `λ` (`λ(Δ) = 1`).

pub mod carleson;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod par;
pub mod quadrature;
pub mod report;
pub mod suites;
pub mod sum;
pub mod symbols;
pub mod toeplitz;

pub use error::{Error, Result};
pub use geometry::{Point, UnitDiskPoint};
pub use quadrature::{DiskQuadrature, QuadratureConfig};
pub use report::DiagnosticsReport;
pub use symbols::Symbol;
pub use toeplitz::ToeplitzMatrix;
