use rayon::prelude::*;

use crate::error::{dim_check, Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, values: vec![0.0; n_rows * n_cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        dim_check("dense value count", n_rows * n_cols, values.len())?;
        Ok(Self { n_rows, n_cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            dim_check("dense row length", n_cols, r.len())?;
            values.extend_from_slice(r);
        }
        Ok(Self { n_rows: rows.len(), n_cols, values })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(n_rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::zeros(n_rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            dim_check("dense column length", n_rows, col.len())?;
            for (i, &v) in col.iter().enumerate() {
                m.values[i * m.n_cols + j] = v;
            }
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n_cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.n_cols;
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `y = A x`, rows summed left to right.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        dim_check("dense matvec input", self.n_cols, x.len())?;
        Ok(self.matvec_unchecked(x))
    }

    pub(crate) fn matvec_unchecked(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `y = Aᵀ x`
    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        dim_check("dense transposed matvec input", self.n_rows, x.len())?;
        Ok(self.matvec_transpose_unchecked(x))
    }

    pub(crate) fn matvec_transpose_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (yj, a) in y.iter_mut().zip(self.row(i)) {
                    *yj += a * xi;
                }
            }
        }
        y
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t.values[j * self.n_rows + i] = self.get(i, j);
            }
        }
        t
    }

    /// Dense product, parallel over output rows.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        dim_check("dense matmul inner dimension", self.n_cols, other.n_rows)?;
        let n = other.n_cols;
        let mut out = DenseMatrix::zeros(self.n_rows, n);
        if n == 0 {
            return Ok(out);
        }
        out.values.par_chunks_mut(n).enumerate().for_each(|(i, orow)| {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    for (o, b) in orow.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            }
        });
        Ok(out)
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn add_identity(&mut self, alpha: f64) {
        let n = self.n_rows.min(self.n_cols);
        for i in 0..n {
            self.values[i * self.n_cols + i] += alpha;
        }
    }

    /// Replaces `A` with `(A + Aᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.n_rows, self.n_cols, "symmetrize needs a square matrix");
        let n = self.n_rows;
        for i in 0..n {
            for j in i + 1..n {
                let m = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, m);
                self.set(j, i, m);
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Lower Cholesky factor `L` with `L Lᵀ = C`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: DenseMatrix,
}

impl CholeskyFactor {
    /// Factorizes using the lower triangle of `c`.
    pub fn new(c: &DenseMatrix) -> Result<Self> {
        Ok(Self { lower: dense_cholesky(c)? })
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.n_rows
    }

    /// Solves `L y = b` in place.
    pub fn forward_substitute(&self, b: &mut [f64]) {
        let l = &self.lower;
        for i in 0..l.n_rows {
            let row = l.row(i);
            let s: f64 = row[..i].iter().zip(&b[..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - s) / row[i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_substitute(&self, y: &mut [f64]) {
        let l = &self.lower;
        for i in (0..l.n_rows).rev() {
            y[i] /= l.get(i, i);
            let yi = y[i];
            for (k, yk) in y[..i].iter_mut().enumerate() {
                *yk -= l.get(i, k) * yi;
            }
        }
    }

    /// Solves `C x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        dim_check("Cholesky solve right-hand side", self.dim(), b.len())?;
        let mut x = b.to_vec();
        self.forward_substitute(&mut x);
        self.backward_substitute(&mut x);
        Ok(x)
    }
}

/// Dense Cholesky factorization; returns the lower factor.
///
/// Only the lower triangle of `c` is read.
pub fn dense_cholesky(c: &DenseMatrix) -> Result<DenseMatrix> {
    if c.n_rows != c.n_cols {
        return Err(Error::Dimension(format!(
            "Cholesky needs a square matrix, got {}x{}",
            c.n_rows, c.n_cols
        )));
    }
    let n = c.n_rows;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let lj: Vec<f64> = l.row(j)[..j].to_vec();
        let d = c.get(j, j) - lj.iter().map(|v| v * v).sum::<f64>();
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotSpd { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in j + 1..n {
            let s: f64 = l.row(i)[..j].iter().zip(&lj).map(|(a, b)| a * b).sum();
            l.set(i, j, (c.get(i, j) - s) / djj);
        }
    }
    Ok(l)
}
