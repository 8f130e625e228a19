//! Error type shared by every fallible operation in the crate.

use alloc::string::String;
use thiserror::Error;

/// Validation and assembly failures.
///
/// Numerical routines in this crate do not fail once their inputs have been
/// validated, so every variant describes a rejected input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// RIS grid or element spacing that does not describe a physical surface.
    #[error("invalid RIS geometry: {0}")]
    InvalidGeometry(String),

    /// A matrix or vector argument with an unexpected dimension.
    #[error("{context}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        /// What was being checked.
        context: &'static str,
        /// Dimension the operation requires.
        expected: usize,
        /// Dimension actually supplied.
        got: usize,
    },

    /// A matrix that should be Hermitian but is not, within tolerance.
    #[error("matrix is not Hermitian: largest asymmetry {asymmetry:.3e}")]
    NotHermitian {
        /// Largest entrywise deviation from the conjugate transpose.
        asymmetry: f64,
    },

    /// A covariance matrix with a significantly negative eigenvalue.
    #[error(
        "matrix is not positive semi-definite: min eigenvalue {min:.6e} \
         against max eigenvalue {max:.6e}"
    )]
    NotPositiveSemiDefinite {
        /// Most negative eigenvalue found.
        min: f64,
        /// Largest eigenvalue, setting the tolerance scale.
        max: f64,
    },

    /// A phase-shift entry whose modulus differs from one.
    #[error("phase-shift entry {index} has modulus {modulus} instead of 1")]
    NotUnitModulus {
        /// Offending element index.
        index: usize,
        /// Its modulus.
        modulus: f64,
    },

    /// A scalar parameter outside its admissible range.
    #[error("parameter {name} = {value} is outside its valid range")]
    InvalidParameter {
        /// Parameter name.
        name: &'static str,
        /// Rejected value.
        value: f64,
    },

    /// A pilot assignment referencing a pilot that does not exist.
    #[error("user {user} is assigned pilot {pilot}, but only {tau_p} pilots exist")]
    InvalidPilot {
        /// User with the bad assignment.
        user: usize,
        /// Pilot index requested.
        pilot: usize,
        /// Number of available pilots.
        tau_p: usize,
    },

    /// Per-AP downlink power constraint violated by the precoding weights.
    #[error("downlink power budget exceeded at AP {ap}: normalized load {load}")]
    PowerBudgetExceeded {
        /// AP whose budget is exceeded.
        ap: usize,
        /// Normalized load, which must stay at or below one.
        load: f64,
    },

    /// A link whose aggregated channel carries no power, so relative
    /// estimation-error metrics are undefined for it.
    #[error("AP {ap} to user {user}: aggregated channel carries no power")]
    DegenerateLink {
        /// AP side of the link.
        ap: usize,
        /// User side of the link.
        user: usize,
    },

    /// An exhaustive phase search that would not finish in reasonable time.
    #[error("exhaustive search over {elements} elements at {resolution} levels is too large")]
    GridSearchTooLarge {
        /// Number of RIS elements requested.
        elements: usize,
        /// Grid levels per element requested.
        resolution: usize,
    },
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
