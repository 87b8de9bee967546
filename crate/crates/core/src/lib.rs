//! Linear shrinkage estimation of large covariance matrices.
//!
//! The estimator is `α·S + β·Σ₀` for a sample covariance `S` and a
//! positive definite target `Σ₀`. The crate provides the oracle intensities
//! (which need the true covariance), their large-dimensional limits, the
//! data-driven intensities, and the Ledoit–Wolf baseline. Around them sit a
//! Monte Carlo PRIAL harness, an asset-return pipeline and a command line
//! front end.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod empirical;
pub mod error;
pub mod estimators;
pub mod matrix;
pub mod simulation;
pub mod tolerance;

pub use asymptotics::{deterministic_frobenius, phi_limit, spectrum_moment, SpectrumSpec};
pub use error::{Error, Result};
pub use estimators::{
    asymptotic_oracle_weights, bona_fide_weights, frobenius_estimator, glse_loss, lw_estimator, olse, oracle_weights,
    sample_covariance, EstimateResult, ShrinkageWeights, WeightKind,
};
pub use matrix::{
    frobenius_norm_sq, spectral_norm, sym_eigenvalues, trace_norm_sq, trace_product, DataMatrix, EigenList, SymMatrix,
};
pub use simulation::{run_experiment, EstimatorKind, ExperimentConfig, ExperimentReport, TargetSpec};
pub use tolerance::Tolerances;
