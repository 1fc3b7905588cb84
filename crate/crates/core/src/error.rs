//! Error type shared by every solver layer.

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by grid construction, coefficient evaluation and the solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Grid parameters violate the construction preconditions.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    /// A field or trace does not have the length the grid requires.
    #[error("shape mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    /// The banded Cholesky factorization hit a non-positive pivot.
    #[error("factorization failed at row {row}: pivot {pivot:e}")]
    Factorization { row: usize, pivot: f64 },
    /// An iterative procedure exhausted its iteration cap.
    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },
    /// A coefficient or state value became NaN or infinite.
    #[error("non-finite value in {what} at node {node}")]
    NonFinite { what: &'static str, node: usize },
    /// A state exceeded the blow-up guard.
    #[error("blow-up guard tripped in {what}: |value| = {value:e} at node {node}")]
    BlowUp { what: &'static str, value: f64, node: usize },
    /// A hypothesis certificate or gate rejected the input.
    #[error("certificate rejected: {0}")]
    Certificate(String),
    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A time step failed inside a longer run.
    #[error("step {step} failed: {source}")]
    Step { step: usize, source: Box<Error> },
    /// A shooting iteration failed inside a fixed-point solve.
    #[error("shot {iteration} failed: {source}")]
    Shot { iteration: usize, source: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the failure is numerical (as opposed to a rejected configuration).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Factorization { .. }
            | Error::NonConvergence { .. }
            | Error::NonFinite { .. }
            | Error::BlowUp { .. } => true,
            Error::Step { source, .. } | Error::Shot { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
