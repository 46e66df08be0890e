//! Dense complex linear algebra.

mod decomp;
mod matrix;

use thiserror::Error;

pub use decomp::{
    cholesky, hermitian_eig, hermitian_eigenvalues, inverse_hermitian_pd, lower_triangular_inverse,
    polynomial_roots, solve_hermitian, svd, RealCholesky, HERMITIAN_TOL,
};
pub use matrix::{khatri_rao, kron, kron_vec, ComplexMatrix};

pub type C64 = num_complex::Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("iteration failed to converge")]
    NoConvergence,
    #[error("zero polynomial has no roots")]
    ZeroPolynomial,
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `aᴴ b`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests;
