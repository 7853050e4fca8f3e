use thiserror::Error;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input.
    Input,
    /// Input is well formed but outside the mathematical domain (Φ-failure, resonance, ...).
    Domain,
    /// A numerical procedure failed to deliver the requested accuracy.
    Numeric,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("eigen-solver did not converge")]
    NonConvergence,
    #[error("matrix is singular (|det| = {det:e})")]
    Singular { det: f64 },
    #[error("eigenvalue {mu} has its logarithm on the boundary of the admissible strip (distance {distance:e})")]
    BranchOnBoundary { mu: num_complex::Complex64, distance: f64 },
    #[error("resonant data: eigenvalues {a} and {b} differ by a nonzero integer")]
    ResonantData { a: num_complex::Complex64, b: num_complex::Complex64 },
    #[error("sum of the logarithms is not diagonalizable")]
    NonDiagonalizableSum,
    #[error("singularities {0} and {1} coincide")]
    ColocatedSingularities(usize, usize),
    #[error("equation is not Fuchsian at {0}")]
    NotFuchsianAt(num_complex::Complex64),
    #[error("exponents violate the Fuchs relation (residual {0:e})")]
    FuchsViolation(f64),
    #[error("loop geometry: {0}")]
    GeometryFailure(String),
    #[error("integrator step size underflow at parameter {s} on segment {segment}")]
    StepUnderflow { segment: usize, s: f64 },
    #[error("sampled arc values are not constant (relative spread {spread:e} on arc {arc})")]
    NotConstant { arc: usize, spread: f64 },
    #[error("quantity expected to be an integer is {value}")]
    NonIntegral { value: num_complex::Complex64 },
    #[error("orientation self-test failed: {0}")]
    SelfTest(String),
    #[error("eigenvalue pairing is ambiguous")]
    AmbiguousPairing,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_) | Error::Precondition(_) | Error::ColocatedSingularities(..) => {
                ErrorKind::Input
            }
            Error::Singular { .. }
            | Error::BranchOnBoundary { .. }
            | Error::ResonantData { .. }
            | Error::NonDiagonalizableSum
            | Error::NotFuchsianAt(_)
            | Error::FuchsViolation(_)
            | Error::GeometryFailure(_) => ErrorKind::Domain,
            Error::NonConvergence
            | Error::StepUnderflow { .. }
            | Error::NotConstant { .. }
            | Error::NonIntegral { .. }
            | Error::SelfTest(_)
            | Error::AmbiguousPairing => ErrorKind::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
