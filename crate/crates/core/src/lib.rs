//! Finite-dimensional quantum measurement toolkit.
//!
//! The crate decides joint measurability (coexistence) of observables,
//! constructs and dissects joint observables, and implements the
//! moment-based indirect measurement pipeline:
//!
//! - [`linalg`]: dense complex-Hermitian matrix algebra for small
//!   dimensions, effects, density states, and the qubit Bloch form.
//! - [`povm`]: finite-outcome POVMs with Born statistics, marginals,
//!   smearing, image observables, range analysis, and the product
//!   joint observable for commuting pairs.
//! - [`coexistence`]: the closed-form qubit coexistence inequality and
//!   an independent numerical feasibility oracle that searches for an
//!   explicit joint observable of two binary POVMs.
//! - [`moments`]: grid-sampled distributions, convolution smearing,
//!   the moment recursion, and the exponential-boundedness check.
//! - [`phasespace`]: Cartesian marginal densities of covariant
//!   phase-space observables and the uncertainty-product check.
//! - [`qubit_models`]: the four-outcome spin joint observable, sharp
//!   reconstruction, and the sphere observable with hemisphere
//!   marginals via quadrature.
//! - [`sampling`]: seeded random generators used by self tests and
//!   reproducible experiments.

#![forbid(unsafe_code)]

use thiserror::Error;

pub mod coexistence;
pub mod linalg;
pub mod moments;
pub mod phasespace;
pub mod povm;
pub mod qubit_models;
pub mod sampling;

pub use linalg::{DensityState, Effect, HermitianMatrix, QubitBloch};
pub use povm::{DiscretePOVM, JointPOVM, OutcomeMap, StochasticMatrix};

/// Errors for toolkit operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max symmetry violation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid matrix shape: expected {expected} entries, got {got}")]
    BadShape { expected: usize, got: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("dimension {0} exceeds supported maximum {1}")]
    DimensionTooLarge(usize, usize),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("operator is not an effect (eigenvalues in [{min:.3e}, {max:.3e}])")]
    EffectBounds { min: f64, max: f64 },

    #[error("trace is not 1 (got {0})")]
    TraceNotOne(f64),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("stochastic matrix invalid: {0}")]
    NotStochastic(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is numerically singular (|det| = {0:.3e})")]
    SingularMatrix(f64),

    #[error("outcome map is not total: missing image for label {0:?}")]
    PartialOutcomeMap(String),

    #[error("outcome map assigns multiple images to label {0:?}")]
    AmbiguousOutcomeMap(String),

    #[error("too many outcomes for range enumeration: {0} > 16")]
    TooManyOutcomes(usize),

    #[error("expected a binary POVM, got {0} outcomes")]
    NonBinaryPovm(usize),

    #[error("inputs do not commute (max commutator norm {0:.3e})")]
    NoncommutingInputs(f64),

    #[error("not a valid qubit effect (eigenvalue bounds [{min:.3e}, {max:.3e}])")]
    InvalidQubitEffect { min: f64, max: f64 },

    #[error("negative radicand {0:.3e} beyond clamp tolerance")]
    NegativeRadicand(f64),

    #[error("bloch norm {0} exceeds 1/2: not an unbiased effect")]
    NotUnbiased(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("grid spacings differ: {0} vs {1}")]
    SpacingMismatch(f64, f64),

    #[error("wave function norm\u{b2} deviates from 1 by {0:.3e}")]
    Unnormalized(f64),

    #[error("grid too small: norm deficit {0:.3e}")]
    GridTooSmall(f64),

    #[error("hermite order {0} exceeds supported maximum 20")]
    HermiteOrderTooLarge(usize),

    #[error("moment sequence invalid: {0}")]
    InvalidMomentSequence(String),

    #[error("insufficient moment order: need {needed}, have {have}")]
    InsufficientOrder { needed: usize, have: usize },

    #[error("invalid generating operator: {0}")]
    InvalidGenerator(String),

    #[error("vector norm {0} is not 1")]
    NotUnitVector(f64),

    #[error("quadrature has no nodes")]
    EmptyQuadrature,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
