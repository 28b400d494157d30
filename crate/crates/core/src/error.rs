use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two points (or a point and a dataset) have different dimensionality.
    DimensionMismatch { expected: usize, found: usize },
    /// Two sequences that must be paired have different lengths.
    LengthMismatch { expected: usize, found: usize },
    /// A scalar parameter is outside its admissible range.
    InvalidParameter { name: &'static str, value: f64 },
    /// A label or observation is NaN or infinite.
    NonFiniteLabel { index: usize, value: f64 },
    /// Cholesky factorization hit a non-positive pivot.
    NotPositiveDefinite { index: usize, pivot: f64 },
    /// The operation needs an explicit feature map.
    UnsupportedKernel,
    /// A point lies outside the optimization domain.
    OutOfDomain { dim: usize, value: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid parameter `{name}` = {value}")
            }
            Error::NonFiniteLabel { index, value } => {
                write!(f, "non-finite label {value} at index {index}")
            }
            Error::NotPositiveDefinite { index, pivot } => write!(
                f,
                "matrix is not numerically positive definite: pivot {index} is {pivot:e}"
            ),
            Error::UnsupportedKernel => f.write_str("operation requires a finite-feature kernel"),
            Error::OutOfDomain { dim, value } => {
                write!(
                    f,
                    "coordinate {value} in dimension {dim} lies outside the domain"
                )
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
