//! Verification and falsification of conditional symmetry.
//!
//! * [`residual`]: sup-norm residuals of the Heyde and Skitovich–Darmois
//!   functional equations over (u, v) grids, from exact characteristic functions.
//! * [`symmetry`]: a Monte-Carlo test of (L₁, L₂) ≐ (L₁, −L₂) with a
//!   sign-flip randomization threshold.
//! * [`degree`]: finite differences and the polynomial-degree probe applied to
//!   log-symmetrized characteristic functions.

pub mod degree;
pub mod residual;
pub mod symmetry;

use nalgebra::DVector;
use thiserror::Error;

use crate::distribution::DistributionError;

pub use degree::{degree_probe, finite_difference, log_symmetrized_cf, on_subspace, DegreeProbe, CF_FLOOR};
pub use residual::{heyde_residual, sd_residual, Equation, GridSpec, PairMode, ResidualReport};
pub use symmetry::{mc_symmetry_test, Decision, SymmetryTestReport, TestPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("field undefined at {point:?}: {reason}")]
    Domain { point: Vec<f64>, reason: String },
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

impl VerifyError {
    pub fn domain(point: &DVector<f64>, reason: impl Into<String>) -> Self {
        VerifyError::Domain { point: point.iter().copied().collect(), reason: reason.into() }
    }
}
