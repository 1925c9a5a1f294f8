//! Dense and sparse symmetric kernels used by the boundary-condensed FEM.

mod dense;
mod eigen;
mod envelope;
mod schur;
mod sparse;

pub use dense::{cholesky, DenseSymMatrix, LowerFactor};
pub use eigen::{sym_eig, sym_generalized_eig, EigenPair};
pub use envelope::{reverse_cuthill_mckee, EnvelopeFactor};
pub use schur::schur_condense;
pub use sparse::SparseMatrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite: nonpositive pivot {value:e} at row {pivot}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("interior block is singular: {0}")]
    SingularInterior(Box<LinalgError>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("tridiagonal QL iteration did not converge for eigenvalue {0}")]
    NoConvergence(usize),
    #[error("requested {count} eigenpairs of an order-{order} problem")]
    TooManyEigenpairs { count: usize, order: usize },
}

pub type Result<T> = std::result::Result<T, LinalgError>;
