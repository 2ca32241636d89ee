use crate::error::{dim_check, Error, Result};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    column_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating the structure.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        column_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        dim_check("row_offsets length", n_rows + 1, row_offsets.len())?;
        dim_check("values length", column_indices.len(), values.len())?;
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != column_indices.len() {
            return Err(Error::Parameter("row offsets do not span the index array".into()));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(Error::Parameter(format!("row {r}: decreasing offsets")));
            }
            let cols = &column_indices[lo..hi];
            if cols.iter().any(|&c| c >= n_cols) {
                return Err(Error::Parameter(format!("row {r}: column index out of range")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Parameter(format!(
                    "row {r}: column indices not strictly increasing"
                )));
            }
        }
        Ok(Self { n_rows, n_cols, row_offsets, column_indices, values })
    }

    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Dimension(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
            counts[r + 1] += 1;
        }
        for r in 0..n_rows {
            counts[r + 1] += counts[r];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut column_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..n_rows {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_by_key(|e| e.0);
            let mut iter = scratch.iter().copied();
            if let Some((mut c0, mut v0)) = iter.next() {
                for (c, v) in iter {
                    if c == c0 {
                        v0 += v;
                    } else {
                        column_indices.push(c0);
                        values.push(v0);
                        c0 = c;
                        v0 = v;
                    }
                }
                column_indices.push(c0);
                values.push(v0);
            }
            row_offsets.push(column_indices.len());
        }
        Ok(Self { n_rows, n_cols, row_offsets, column_indices, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            column_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Drops entries that are exactly zero.
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            dim_check("dense row length", n_cols, row.len())?;
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, &trip)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn column_indices(&self) -> &[usize] {
        &self.column_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.column_indices[lo..hi], &self.values[lo..hi])
    }

    /// Entry `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        dim_check("spmv input", self.n_cols, x.len())?;
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// Unchecked `y = A x`; dimensions are the caller's responsibility.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *yr = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// `y = Aᵀ x`
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        dim_check("transposed spmv input", self.n_rows, x.len())?;
        let mut y = vec![0.0; self.n_cols];
        self.spmv_transpose_into(x, &mut y);
        Ok(y)
    }

    pub fn spmv_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &xr) in x.iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.column_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            let (rc, rv) = self.row(r);
            for (&c, &v) in rc.iter().zip(rv) {
                cols[next[c]] = r;
                vals[next[c]] = v;
                next[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            column_indices: cols,
            values: vals,
        }
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        dim_check("matmul inner dimension", self.n_cols, other.n_rows)?;
        let mut row_offsets = vec![0usize];
        let mut column_indices = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; other.n_cols];
        let mut marker = vec![usize::MAX; other.n_cols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.n_rows {
            touched.clear();
            let (ac, av) = self.row(r);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k);
                for (&c, &b) in bc.iter().zip(bv) {
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = 0.0;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                column_indices.push(c);
                values.push(acc[c]);
            }
            row_offsets.push(column_indices.len());
        }
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: other.n_cols,
            row_offsets,
            column_indices,
            values,
        })
    }

    /// Multiplies column `j` by `scale[j]`.
    pub fn scale_columns(&self, scale: &[f64]) -> Result<SparseMatrix> {
        dim_check("column scale length", self.n_cols, scale.len())?;
        let mut out = self.clone();
        for (v, &c) in out.values.iter_mut().zip(&self.column_indices) {
            *v *= scale[c];
        }
        Ok(out)
    }

    pub fn scale(&self, alpha: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        if self.n_rows != self.n_cols {
            return f64::INFINITY;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst / scale
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.symmetry_defect() <= rel_tol
    }

    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        out
    }

    /// Assembles the symmetric block matrix `[[a, bᵀ], [b, c]]`.
    pub fn block_symmetric(
        a: &SparseMatrix,
        b: &SparseMatrix,
        c: Option<&SparseMatrix>,
    ) -> Result<SparseMatrix> {
        let k = a.n_rows;
        let n = b.n_rows;
        dim_check("block (1,1) columns", k, a.n_cols)?;
        dim_check("block (2,1) columns", k, b.n_cols)?;
        let mut trip = Vec::with_capacity(a.nnz() + 2 * b.nnz());
        for r in 0..k {
            let (cols, vals) = a.row(r);
            trip.extend(cols.iter().zip(vals).map(|(&cc, &v)| (r, cc, v)));
        }
        for r in 0..n {
            let (cols, vals) = b.row(r);
            for (&cc, &v) in cols.iter().zip(vals) {
                trip.push((k + r, cc, v));
                trip.push((cc, k + r, v));
            }
        }
        if let Some(c) = c {
            dim_check("block (2,2) size", n, c.n_rows)?;
            for r in 0..n {
                let (cols, vals) = c.row(r);
                trip.extend(cols.iter().zip(vals).map(|(&cc, &v)| (k + r, k + cc, v)));
            }
        }
        SparseMatrix::from_triplets(k + n, k + n, &trip)
    }
}
