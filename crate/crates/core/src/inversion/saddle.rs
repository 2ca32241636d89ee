use crate::error::{dim_check, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};

/// Matrix-free `A_{β,m} = [[Q, Dᵀ], [D, -(1/β) JᵀJ]]`.
///
/// With `j = None` this is the mixed Laplacian.
#[derive(Debug, Clone, Copy)]
pub struct SaddleOperator<'a> {
    q: &'a SparseMatrix,
    d: &'a SparseMatrix,
    j: Option<&'a DenseMatrix>,
    beta: f64,
}

impl<'a> SaddleOperator<'a> {
    pub fn new(q: &'a SparseMatrix, d: &'a SparseMatrix, j: Option<&'a DenseMatrix>, beta: f64) -> Result<Self> {
        dim_check("Q columns", q.n_rows(), q.n_cols())?;
        dim_check("D columns", q.n_rows(), d.n_cols())?;
        if let Some(j) = j {
            dim_check("J columns", d.n_rows(), j.n_cols())?;
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(crate::Error::Parameter(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { q, d, j, beta })
    }

    pub fn n_flux(&self) -> usize {
        self.q.n_rows()
    }

    pub fn n_cells(&self) -> usize {
        self.d.n_rows()
    }

    pub fn dim(&self) -> usize {
        self.n_flux() + self.n_cells()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn q(&self) -> &'a SparseMatrix {
        self.q
    }

    pub fn d(&self) -> &'a SparseMatrix {
        self.d
    }

    pub fn jacobian(&self) -> Option<&'a DenseMatrix> {
        self.j
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let k = self.n_flux();
        let (x1, x2) = x.split_at(k);
        let (y1, y2) = y.split_at_mut(k);
        self.q.spmv_into(x1, y1);
        let mut dt = vec![0.0; k];
        self.d.spmv_transpose_into(x2, &mut dt);
        for (a, b) in y1.iter_mut().zip(&dt) {
            *a += b;
        }
        self.d.spmv_into(x1, y2);
        if let Some(j) = self.j {
            let jx = j.matvec_unchecked(x2);
            let jtjx = j.matvec_transpose_unchecked(&jx);
            let s = 1.0 / self.beta;
            for (a, b) in y2.iter_mut().zip(&jtjx) {
                *a -= s * b;
            }
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        dim_check("saddle operator input", self.dim(), x.len())?;
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        Ok(y)
    }

    /// Dense copy, for small oracle computations.
    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut cols = Vec::with_capacity(n);
        let mut e = vec![0.0; n];
        for i in 0..n {
            e[i] = 1.0;
            cols.push(self.apply_vec(&e).expect("sized"));
            e[i] = 0.0;
        }
        DenseMatrix::from_columns(n, &cols).expect("square")
    }
}
