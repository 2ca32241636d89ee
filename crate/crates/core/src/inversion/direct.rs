use std::time::Instant;

use crate::error::{dim_check, Result};
use crate::linalg::{sparse_factorize, DenseMatrix, Factorization, SparseMatrix};

use super::woodbury::{capacitance, capacitance_cholesky, SetupTimings};

/// Factorized mixed Laplacian `[[Q, Dᵀ], [D, 0]]`, built once per inversion.
#[derive(Debug, Clone)]
pub struct DirectSolver {
    factor: Factorization,
    n_flux: usize,
    n_cells: usize,
}

impl DirectSolver {
    pub fn new(q: &SparseMatrix, d: &SparseMatrix) -> Result<Self> {
        let a = crate::fem_mixed::assemble_saddle(q, d)?;
        Ok(Self { factor: sparse_factorize(&a)?, n_flux: q.n_rows(), n_cells: d.n_rows() })
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factor
    }

    /// `S^{-1} y` for every row `y` of `rows`, via `-P₂ A^{-1} [0; y]`.
    pub fn schur_solve_rows(&self, rows: &DenseMatrix) -> Result<DenseMatrix> {
        dim_check("Schur solve input", self.n_cells, rows.n_cols())?;
        let rhs: Vec<Vec<f64>> = (0..rows.n_rows())
            .map(|i| {
                let mut b = vec![0.0; self.n_flux + self.n_cells];
                b[self.n_flux..].copy_from_slice(rows.row(i));
                b
            })
            .collect();
        let sols = self.factor.solve_many(&rhs)?;
        let out: Vec<Vec<f64>> = sols.into_iter().map(|x| x[self.n_flux..].iter().map(|v| -v).collect()).collect();
        if out.is_empty() {
            return Ok(DenseMatrix::zeros(0, self.n_cells));
        }
        DenseMatrix::from_rows(&out)
    }

    /// Gauss-Newton update by the Woodbury formula with exact Schur solves.
    ///
    /// Solves `C y = J (m - m_ref) - (g - g_obs)` with `C = I + (1/β) J H`,
    /// `H = S^{-1} Jᵀ`, and returns `δm = -(m - m_ref) + (1/β) H y`.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &self,
        j: &DenseMatrix,
        m: &[f64],
        m_ref: &[f64],
        g: &[f64],
        g_obs: &[f64],
        beta: f64,
    ) -> Result<(Vec<f64>, SetupTimings)> {
        dim_check("model length", self.n_cells, m.len())?;
        dim_check("reference model length", self.n_cells, m_ref.len())?;
        dim_check("Jacobian columns", self.n_cells, j.n_cols())?;
        dim_check("responses", j.n_rows(), g.len())?;
        dim_check("observations", j.n_rows(), g_obs.len())?;
        let dm: Vec<f64> = m.iter().zip(m_ref).map(|(a, b)| a - b).collect();
        let t0 = Instant::now();
        let h_t = self.schur_solve_rows(j)?;
        let t_h = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let c = capacitance(j, &h_t, beta)?;
        let t_c = t1.elapsed().as_secs_f64();
        let t2 = Instant::now();
        let chol = capacitance_cholesky(c)?;
        let t_chol = t2.elapsed().as_secs_f64();
        let jdm = j.matvec_unchecked(&dm);
        let rhs: Vec<f64> = jdm.iter().zip(g).zip(g_obs).map(|((a, gi), oi)| a - (gi - oi)).collect();
        let y = chol.solve(&rhs)?;
        let hy = h_t.matvec_transpose_unchecked(&y);
        let s = 1.0 / beta;
        let step = dm.iter().zip(&hy).map(|(d, h)| -d + s * h).collect();
        Ok((step, SetupTimings { t_h, t_c, t_chol }))
    }
}
