//! Dense, compressed-sparse and banded matrix kernels.

mod banded;
mod csr;
mod dense;
mod eigen;
mod scalar;

pub use banded::{BandedMatrix, LuFactorization};
pub use csr::CsrMatrix;
pub use dense::{dense_solve, DenseMatrix};
pub use eigen::{cholesky, generalized_eig_symmetric, symmetric_eig, GeneralizedEigen};
pub use scalar::Scalar;
