//! Exact block preconditioners built densely, for small reference problems.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{dim_check, Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};

/// Largest `K + N` accepted by the dense reference tools.
pub const DENSE_DOF_CAP: usize = 2000;

fn to_na(rows: &[Vec<f64>], n_rows: usize, n_cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n_rows, n_cols, |i, j| rows[i][j])
}

fn dense_to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.n_rows(), a.n_cols(), a.values())
}

fn cholesky(a: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(a).ok_or_else(|| Error::Factorization(format!("{what} is not positive definite")))
}

/// `P = blockdiag(Q, S + (1/β) JᵀJ)` with the exact Schur complement `S = D Q^{-1} Dᵀ`.
#[derive(Debug, Clone)]
pub struct IdealPreconditioner {
    q_chol: Cholesky<f64, Dyn>,
    s_chol: Cholesky<f64, Dyn>,
    n_flux: usize,
}

impl IdealPreconditioner {
    pub fn new(q: &SparseMatrix, d: &SparseMatrix, j: Option<&DenseMatrix>, beta: f64) -> Result<Self> {
        let (k, n) = (q.n_rows(), d.n_rows());
        if k + n > DENSE_DOF_CAP {
            return Err(Error::Parameter(format!("{} unknowns exceed the dense cap {DENSE_DOF_CAP}", k + n)));
        }
        dim_check("D columns", k, d.n_cols())?;
        let qd = to_na(&q.to_dense_rows(), k, k);
        let dd = to_na(&d.to_dense_rows(), n, k);
        let q_chol = cholesky(qd, "Q")?;
        let qinv_dt = q_chol.solve(&dd.transpose());
        let mut s = &dd * qinv_dt;
        if let Some(j) = j {
            dim_check("J columns", n, j.n_cols())?;
            let jn = dense_to_na(j);
            s += (jn.transpose() * &jn) / beta;
        }
        let s = (&s + s.transpose()) * 0.5;
        let s_chol = cholesky(s, "Schur complement")?;
        Ok(Self { q_chol, s_chol, n_flux: k })
    }

    pub fn dim(&self) -> usize {
        self.n_flux + self.s_chol.l_dirty().nrows()
    }

    /// `z = P^{-1} y`.
    pub fn apply(&self, y: &[f64], z: &mut [f64]) {
        let k = self.n_flux;
        let z1 = self.q_chol.solve(&DVector::from_column_slice(&y[..k]));
        let z2 = self.s_chol.solve(&DVector::from_column_slice(&y[k..]));
        z[..k].copy_from_slice(z1.as_slice());
        z[k..].copy_from_slice(z2.as_slice());
    }

    /// Eigenvalues of `P^{-1} A` for the symmetric matrix `a`, ascending.
    ///
    /// Computed as the spectrum of the congruent matrix `L^{-1} A L^{-ᵀ}` where
    /// `P = L Lᵀ`.
    pub fn spectrum_of(&self, a: &DenseMatrix) -> Result<Vec<f64>> {
        let dim = self.dim();
        dim_check("operator size", dim, a.n_rows())?;
        dim_check("operator size", dim, a.n_cols())?;
        let k = self.n_flux;
        let mut l = DMatrix::zeros(dim, dim);
        l.view_mut((0, 0), (k, k)).copy_from(&self.q_chol.l());
        l.view_mut((k, k), (dim - k, dim - k)).copy_from(&self.s_chol.l());
        let an = dense_to_na(a);
        let left = l
            .solve_lower_triangular(&an)
            .ok_or_else(|| Error::Factorization("singular preconditioner factor".into()))?;
        let both = l
            .solve_lower_triangular(&left.transpose())
            .ok_or_else(|| Error::Factorization("singular preconditioner factor".into()))?;
        let sym = (&both + both.transpose()) * 0.5;
        let mut eig: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(eig)
    }
}

/// The golden ratio.
pub const PHI: f64 = 1.618_033_988_749_895;

/// Whether `lambda` lies in `[-1, -1/φ] ∪ [1, φ]` up to `tol`.
pub fn in_golden_bound(lambda: f64, tol: f64) -> bool {
    (lambda >= -1.0 - tol && lambda <= -1.0 / PHI + tol) || (lambda >= 1.0 - tol && lambda <= PHI + tol)
}
