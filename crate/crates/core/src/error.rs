use alloc::string::String;
use core::fmt;

use crate::index::MultiIndex;

/// Failure modes of the reconstruction library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A dimension of zero was supplied.
    InvalidDimension,
    /// A multiplicity bound of zero was supplied.
    ZeroBound,
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// The operation needs a nonzero polynomial.
    ZeroPolynomial,
    /// A scaling vector had a zero component.
    ZeroScale,
    /// A sample outside the available data was requested.
    Coverage(MultiIndex),
    /// The Hankel rank kept growing beyond what the multiplicity bound allows.
    MultiplicityBoundTooSmall {
        bound: usize,
        rank: usize,
    },
    /// The joint eigenvalue clustering could not be verified.
    Clustering {
        attempts: usize,
    },
    /// The coefficient system was rank deficient or inconsistent.
    Solve(String),
    /// A recovered zero had a vanishing component.
    InvalidZero,
    /// The basis handed to a factorization was not a basis of the shift span.
    InvalidBasis,
    /// Two model components share a frequency.
    DuplicateFrequency,
    /// A normal form was requested beyond the computed degree range.
    DegreeBeyondData {
        degree: usize,
        max: usize,
    },
    /// The requested degree is outside the recorded Hilbert trace.
    BeyondTrace(usize),
    /// Generic malformed input.
    Invalid(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDimension => write!(f, "invalid dimension: must be at least 1"),
            Error::ZeroBound => write!(f, "multiplicity bound must be at least 1"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::ZeroPolynomial => write!(f, "zero polynomial not allowed here"),
            Error::ZeroScale => write!(f, "scaling vector has a zero component"),
            Error::Coverage(idx) => write!(f, "insufficient sample coverage: missing sample at {idx}"),
            Error::MultiplicityBoundTooSmall { bound, rank } => write!(
                f,
                "multiplicity bound too small: bound {bound}, observed rank {rank}"
            ),
            Error::Clustering { attempts } => {
                write!(f, "joint eigenvalue clustering failed after {attempts} attempts")
            }
            Error::Solve(msg) => write!(f, "coefficient solve failed: {msg}"),
            Error::InvalidZero => write!(f, "numerically invalid zero (component near 0)"),
            Error::InvalidBasis => write!(f, "invalid basis for shift-invariant span"),
            Error::DuplicateFrequency => write!(f, "duplicate frequency in model"),
            Error::DegreeBeyondData { degree, max } => {
                write!(f, "degree {degree} beyond available data (max {max})")
            }
            Error::BeyondTrace(n) => write!(f, "degree {n} beyond recorded Hilbert trace"),
            Error::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

/// Pipeline stage, used to tag errors raised by [`crate::coeffs::end_to_end`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ideal,
    Tables,
    Eigen,
    Frequencies,
    System,
    Solve,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ideal => "reconstruct_ideal",
            Stage::Tables => "build_tables",
            Stage::Eigen => "joint_eigen",
            Stage::Frequencies => "frequencies_from_zeros",
            Stage::System => "build_system",
            Stage::Solve => "solve_coefficients",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageError {
    pub stage: Stage,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage.name(), self.error)
    }
}
