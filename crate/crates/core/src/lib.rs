//! Estimation of the centroid and separation of two incoherent point
//! sources with a three-outcome mode-sorting measurement.
//!
//! Lengths are in the units of the PSF grid. Parameter vectors and Fisher
//! matrices are ordered `(s0, s)`.

// `!(x > tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod fisher;
pub mod montecarlo;
mod numerics;
pub mod povm;
pub mod psf;

pub use basis::{build_derivative_basis, hg_analytic, ModeSet};
pub use error::{Error, Result};
pub use fisher::{
    cfi_matrix, cfi_smallsep_closedform, direct_imaging_cfi, outcome_probs, overlap, qfi, qfi_centroid_closedform,
    qfi_centroid_exact, qfi_oracle, regrets, FisherReport, Measurement, ProbVector, Regrets, SourceConfig,
};
pub use montecarlo::{
    covariance_study, mle, sample, Counts, CovarianceStudy, Estimate, ExperimentConfig, Likelihood, MleBounds,
};
pub use povm::{AnglePair, EpsilonPair, PovmCoeffs, PovmDiagnostics, PovmViolation};
pub use psf::{Grid, Moments, PsfDiagnostics, PsfKind, PsfSpec, PsfViolation};

pub use nalgebra::{Matrix2, Matrix3, Vector3};
