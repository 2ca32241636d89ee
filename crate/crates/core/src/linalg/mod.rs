//! Sparse and dense kernels, direct factorizations and preconditioned MINRES.

mod dense;
mod factor;
mod minres;
mod sparse;

pub use dense::{dense_cholesky, CholeskyFactor, DenseMatrix};
pub use factor::{reverse_cuthill_mckee, sparse_factorize, Factorization};
pub use minres::{minres, MinresOptions, MinresReport};
pub use sparse::SparseMatrix;

/// Euclidean inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
