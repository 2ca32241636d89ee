use std::time::Instant;

use rayon::prelude::*;

use crate::amg::AmgHierarchy;
use crate::error::{dim_check, Error, Result};
use crate::linalg::{CholeskyFactor, DenseMatrix};

/// Timings of the preconditioner setup in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SetupTimings {
    pub t_h: f64,
    pub t_c: f64,
    pub t_chol: f64,
}

/// `C = I + (1/β) J H`, with `H` passed transposed (`M x N`).
pub(crate) fn capacitance(j: &DenseMatrix, h_t: &DenseMatrix, beta: f64) -> Result<DenseMatrix> {
    dim_check("capacitance rows", j.n_rows(), h_t.n_rows())?;
    dim_check("capacitance inner dimension", j.n_cols(), h_t.n_cols())?;
    let m = j.n_rows();
    let s = 1.0 / beta;
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|a| {
            let ja = j.row(a);
            (0..m)
                .map(|b| {
                    let v: f64 = ja.iter().zip(h_t.row(b)).map(|(x, y)| x * y).sum();
                    s * v + if a == b { 1.0 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    DenseMatrix::from_rows(&rows)
}

/// Cholesky of the capacitance matrix; one symmetrized retry on failure.
pub(crate) fn capacitance_cholesky(mut c: DenseMatrix) -> Result<CholeskyFactor> {
    match CholeskyFactor::new(&c) {
        Ok(f) => Ok(f),
        Err(Error::NotSpd { .. }) => {
            c.symmetrize();
            CholeskyFactor::new(&c)
        }
        Err(e) => Err(e),
    }
}

/// Block-diagonal preconditioner `blockdiag(diag(Q)^{-1}, Ŝ_{β,m}^{-1})` where the
/// Schur block applies the Woodbury formula to the AMG approximation `Ŝ^{-1}`:
/// `Ŝ^{-1} - (1/β) Ĥ C^{-1} Ĥᵀ` with `Ĥ = Ŝ^{-1} Jᵀ`, `C = I + (1/β) J Ĥ`.
#[derive(Debug, Clone)]
pub struct WoodburyPreconditioner<'a> {
    qdiag_inv: &'a [f64],
    amg: &'a AmgHierarchy,
    /// `Ĥᵀ`, one row per measurement.
    h_hat_t: DenseMatrix,
    chol: CholeskyFactor,
    beta: f64,
    timings: SetupTimings,
}

impl<'a> WoodburyPreconditioner<'a> {
    pub fn build(qdiag_inv: &'a [f64], amg: &'a AmgHierarchy, j: &DenseMatrix, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
        }
        dim_check("Jacobian columns", amg.dim(), j.n_cols())?;
        let t0 = Instant::now();
        let rows: Vec<Vec<f64>> = (0..j.n_rows()).map(|i| j.row(i).to_vec()).collect();
        let h_rows = amg.apply_many(&rows)?;
        let h_hat_t = if h_rows.is_empty() {
            DenseMatrix::zeros(0, amg.dim())
        } else {
            DenseMatrix::from_rows(&h_rows)?
        };
        let t_h = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let c = capacitance(j, &h_hat_t, beta)?;
        let t_c = t1.elapsed().as_secs_f64();
        let t2 = Instant::now();
        let chol = capacitance_cholesky(c)?;
        let t_chol = t2.elapsed().as_secs_f64();
        Ok(Self { qdiag_inv, amg, h_hat_t, chol, beta, timings: SetupTimings { t_h, t_c, t_chol } })
    }

    pub fn dim(&self) -> usize {
        self.qdiag_inv.len() + self.amg.dim()
    }

    pub fn timings(&self) -> SetupTimings {
        self.timings
    }

    /// Lower Cholesky factor of the capacitance matrix.
    pub fn capacitance_factor(&self) -> &DenseMatrix {
        self.chol.lower()
    }

    /// `Ĥ = Ŝ^{-1} Jᵀ`, stored transposed.
    pub fn h_hat_transposed(&self) -> &DenseMatrix {
        &self.h_hat_t
    }

    pub fn apply(&self, y: &[f64], z: &mut [f64]) {
        let k = self.qdiag_inv.len();
        let (y1, y2) = y.split_at(k);
        let (z1, z2) = z.split_at_mut(k);
        for ((zi, yi), di) in z1.iter_mut().zip(y1).zip(self.qdiag_inv) {
            *zi = di * yi;
        }
        self.amg.apply_into(y2, z2);
        if self.h_hat_t.n_rows() > 0 {
            let mut w = self.h_hat_t.matvec_unchecked(y2);
            self.chol.forward_substitute(&mut w);
            self.chol.backward_substitute(&mut w);
            let corr = self.h_hat_t.matvec_transpose_unchecked(&w);
            let s = 1.0 / self.beta;
            for (zi, ci) in z2.iter_mut().zip(&corr) {
                *zi -= s * ci;
            }
        }
    }

    pub fn apply_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        dim_check("preconditioner input", self.dim(), y.len())?;
        let mut z = vec![0.0; y.len()];
        self.apply(y, &mut z);
        Ok(z)
    }
}

/// `blockdiag(diag(Q)^{-1}, Ŝ^{-1})`.
#[derive(Debug, Clone, Copy)]
pub struct LaplacePreconditioner<'a> {
    qdiag_inv: &'a [f64],
    amg: &'a AmgHierarchy,
}

impl<'a> LaplacePreconditioner<'a> {
    pub fn new(qdiag_inv: &'a [f64], amg: &'a AmgHierarchy) -> Self {
        Self { qdiag_inv, amg }
    }

    pub fn dim(&self) -> usize {
        self.qdiag_inv.len() + self.amg.dim()
    }

    pub fn apply(&self, y: &[f64], z: &mut [f64]) {
        let k = self.qdiag_inv.len();
        let (y1, y2) = y.split_at(k);
        let (z1, z2) = z.split_at_mut(k);
        for ((zi, yi), di) in z1.iter_mut().zip(y1).zip(self.qdiag_inv) {
            *zi = di * yi;
        }
        self.amg.apply_into(y2, z2);
    }

    pub fn apply_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        dim_check("preconditioner input", self.dim(), y.len())?;
        let mut z = vec![0.0; y.len()];
        self.apply(y, &mut z);
        Ok(z)
    }
}
