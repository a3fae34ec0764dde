//! Dense reference computations for checking the sparse eigensolver.
//!
//! Nothing in `lapsira` depends on this crate, so no dense factorization is
//! reachable from the sparse solver.

pub mod baseline;
pub mod dense;
pub mod verify;

use thiserror::Error;

pub use baseline::{baseline_nullspace_deflated, baseline_perturbed, rank_two_corrected, DEFAULT_TAU};
pub use dense::{
    deflated_dense, dense_eigh, dense_solve, to_dense, trimmed_dense, DenseEigen, DenseMatrix, DenseSymmetric,
    MAX_DENSE,
};
pub use verify::{verify_eigresult, VerificationReport, MATCH_TOL};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("dense routines are limited to n <= {limit}, got n = {n}")]
    TooLarge { n: usize, limit: usize },

    #[error("matrix is singular to working precision at column {column}")]
    Singular { column: usize },

    #[error("Jacobi iteration did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("asked for {wanted} eigenvalues but only {available} are available")]
    NotEnoughEigenvalues { wanted: usize, available: usize },

    #[error("shift must be positive and finite, got {0}")]
    BadShift(f64),
}
