//! Quantum state tomography on GHZ benchmarks.
//!
//! The crate covers the full desk-scale tomography pipeline:
//!
//! - [`pauli`] — n-qubit Pauli strings, enumeration, dense synthesis, and
//!   fast expectation evaluation via signed basis permutations.
//! - [`linalg`] — dense Hermitian kernels (eigendecomposition, matrix
//!   exponential, PSD square root, directional derivative of `exp`, and
//!   projection onto the density-matrix set).
//! - [`state`] — density matrices, GHZ construction, fidelity and trace
//!   distance.
//! - [`opsets`] — the G1–G4 observable hierarchies, full and custom sets.
//! - [`sim`] — noise channels and finite-shot measurement sampling.
//! - [`optim`] — box-constrained limited-memory quasi-Newton minimizer.
//! - [`estimators`] — linear inversion + PSD projection, Cholesky-form
//!   least-squares MLE, and structured Gibbs fits.
//! - [`metrics`] — target fidelity, MLE agreement, observable error, and
//!   per-operator residual ranking.
//!
//! All randomness flows through seeded sub-streams (see [`rng`]), so every
//! dataset and fit is reproducible from its seeds.

pub mod estimators;
pub mod linalg;
pub mod metrics;
pub mod opsets;
pub mod optim;
pub mod pauli;
pub mod rng;
pub mod sim;
pub mod state;

use num_complex::Complex64;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Crate-wide error type.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("label {label:?} has length {got}, expected {expected}")]
    LabelLength {
        label: String,
        got: usize,
        expected: usize,
    },
    #[error("label {label:?} contains {ch:?}; allowed characters are I, X, Y, Z")]
    LabelChar { label: String, ch: char },
    #[error("{n} qubits exceeds the dense-matrix cap of {cap}")]
    QubitCapExceeded { n: usize, cap: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("eigendecomposition did not converge")]
    EigNonConvergence,
    #[error("matrix exponential overflow: eigenvalue magnitude {max_abs:.3e} exceeds {limit}")]
    ExpOverflow { max_abs: f64, limit: f64 },
    #[error("matrix has eigenvalue {min_eig:.3e} below the PSD tolerance")]
    NotPsd { min_eig: f64 },
    #[error("expectation value has imaginary part {imag:.3e} above tolerance")]
    ComplexExpectation { imag: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("{set} requires at least {min} qubits, got {n}")]
    TooFewQubits {
        set: &'static str,
        min: usize,
        n: usize,
    },
    #[error("duplicate operator {0:?}")]
    DuplicateOperator(String),
    #[error("identity operator {0:?} is not allowed here")]
    IdentityOperator(String),
    #[error("operator set is empty")]
    EmptyOperatorSet,
    #[error("noise parameter {field} = {value} is outside [{lo}, {hi}]")]
    NoiseOutOfRange {
        field: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("dataset is missing {} operator(s) required by the model: {}", .0.len(), format_labels(.0))]
    MissingOperators(Vec<String>),
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("coefficient {value} for {label:?} exceeds the bound {bound}")]
    LambdaOutOfBounds {
        label: String,
        value: f64,
        bound: f64,
    },
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error("{0}")]
    Serialization(String),
}

fn format_labels(labels: &[String]) -> String {
    const SHOWN: usize = 8;
    if labels.len() <= SHOWN {
        labels.join(", ")
    } else {
        format!("{}, ... ({} total)", labels[..SHOWN].join(", "), labels.len())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
