//! Contour-integration eigensolver for Hermitian definite pencils with
//! flexible subspace iteration: multi-moment startup, stagnation-triggered
//! switching to single-moment iterations, adaptive quadrature and locking.
//!
//! The crate is generic over the real scalar type (`f32` / `f64`) through
//! the [`Scalar`] trait; the aliases below fix the default `f64` instances.

pub mod contour;
pub mod controller;
pub mod error;
pub mod linalg;
pub mod matrix_market;
pub mod problems;
pub mod ritz;
pub mod scalar;
pub mod subspace;

pub use contour::{adapt_q, build_contour, filter_value, ContourRule, Interval, RuleKind};
pub use controller::{
    convergence_check, detect_stagnation, next_initial_vectors, resize_subspace, run,
    IterationMode, IterationRecord, QuadConfig, SolveResult, SolveStatus, SolverConfig,
};
pub use error::{Result, SolverError};
pub use linalg::{
    factor_shifted, hermitian_definite_eig, svd_with_values, BlockVectors, HermitianPencil,
    ShiftedFactor,
};
pub use matrix_market::{read_matrix_market, read_matrix_market_from, write_matrix_market};
pub use problems::{
    clustered_hermitian_problem, laplacian_1d, laplacian_problem, random_initial_block,
    reference_spectrum, toy_problem, EigenProblem,
};
pub use ritz::{
    extract, lock_converged, smallest_nonconverged_residual, LockedStore, RitzSet,
    StagnationStatistic,
};
pub use scalar::Scalar;
pub use subspace::{build_subspace, orthonormalize_truncate, CostCounters, MomentConfig, SubspaceBlock};

/// Default-precision concrete instances.
pub type Interval64 = contour::Interval<f64>;
pub type ContourRule64 = contour::ContourRule<f64>;
pub type HermitianPencil64 = linalg::HermitianPencil<f64>;
pub type BlockVectors64 = linalg::BlockVectors<f64>;
pub type EigenProblem64 = problems::EigenProblem<f64>;
pub type SolverConfig64 = controller::SolverConfig<f64>;
pub type SolveResult64 = controller::SolveResult<f64>;
pub type RitzSet64 = ritz::RitzSet<f64>;
