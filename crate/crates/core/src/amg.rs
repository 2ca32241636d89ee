//! Smoothed-aggregation algebraic multigrid used as a fixed SPD approximate inverse.

use rayon::prelude::*;

use crate::error::{dim_check, Error, Result};
use crate::linalg::{sparse_factorize, CholeskyFactor, DenseMatrix, Factorization, SparseMatrix};

/// Setup parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmgOptions {
    /// Coarsening stops once a level has fewer unknowns than this.
    pub max_coarse: usize,
    /// Strength-of-connection threshold relative to `sqrt(a_ii a_jj)`.
    pub strength_threshold: f64,
    /// Jacobi damping before scaling by the spectral radius bound.
    pub jacobi_weight: f64,
    pub max_levels: usize,
    /// Replace the V-cycle by an exact sparse solve.
    pub exact: bool,
}

impl Default for AmgOptions {
    fn default() -> Self {
        Self { max_coarse: 64, strength_threshold: 0.08, jacobi_weight: 2.0 / 3.0, max_levels: 25, exact: false }
    }
}

impl AmgOptions {
    /// Exact-solve reference mode.
    pub fn reference() -> Self {
        Self { exact: true, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
struct Level {
    a: SparseMatrix,
    /// Prolongation from the next coarser level; `None` on the coarsest.
    p: Option<SparseMatrix>,
    pt: Option<SparseMatrix>,
    /// `omega / a_ii`.
    smoother: Vec<f64>,
}

#[derive(Debug, Clone)]
enum CoarseSolver {
    Dense(CholeskyFactor),
    Sparse(Factorization),
}

impl CoarseSolver {
    fn new(a: &SparseMatrix) -> Result<Self> {
        if a.n_rows() <= 1500 {
            let d = DenseMatrix::from_rows(&a.to_dense_rows())?;
            Ok(CoarseSolver::Dense(CholeskyFactor::new(&d)?))
        } else {
            Ok(CoarseSolver::Sparse(sparse_factorize(a)?))
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            CoarseSolver::Dense(c) => c.solve(b),
            CoarseSolver::Sparse(f) => f.solve(b),
        }
        .expect("coarse dimension matches")
    }
}

/// Multigrid hierarchy. Applying it performs one symmetric V-cycle.
#[derive(Debug, Clone)]
pub struct AmgHierarchy {
    levels: Vec<Level>,
    coarse: CoarseSolver,
}

/// Gershgorin bound on the spectral radius of `diag(A)^{-1} A`.
fn jacobi_radius_bound(a: &SparseMatrix, diag: &[f64]) -> f64 {
    (0..a.n_rows())
        .map(|r| a.row(r).1.iter().map(|v| v.abs()).sum::<f64>() / diag[r])
        .fold(0.0, f64::max)
}

/// Greedy aggregation on the strength graph. Returns the aggregate of every node.
fn aggregate(a: &SparseMatrix, diag: &[f64], theta: f64) -> (Vec<usize>, usize) {
    let n = a.n_rows();
    let strong: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter()
                .zip(vals)
                .filter(|&(&j, &v)| j != i && v.abs() >= theta * (diag[i] * diag[j]).sqrt())
                .map(|(&j, _)| j)
                .collect()
        })
        .collect();
    const NONE: usize = usize::MAX;
    let mut agg = vec![NONE; n];
    let mut count = 0;
    for i in 0..n {
        if agg[i] == NONE && strong[i].iter().all(|&j| agg[j] == NONE) {
            agg[i] = count;
            for &j in &strong[i] {
                agg[j] = count;
            }
            count += 1;
        }
    }
    let first_pass = agg.clone();
    for i in 0..n {
        if agg[i] == NONE {
            if let Some(&j) = strong[i].iter().find(|&&j| first_pass[j] != NONE) {
                agg[i] = first_pass[j];
            }
        }
    }
    for i in 0..n {
        if agg[i] == NONE {
            agg[i] = count;
            for &j in &strong[i] {
                if agg[j] == NONE {
                    agg[j] = count;
                }
            }
            count += 1;
        }
    }
    (agg, count)
}

fn exact_symmetrize(a: &SparseMatrix) -> Result<SparseMatrix> {
    let at = a.transpose();
    let mut trip = Vec::with_capacity(a.nnz());
    for r in 0..a.n_rows() {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            trip.push((r, c, 0.5 * (v + at.get(r, c))));
        }
    }
    SparseMatrix::from_triplets(a.n_rows(), a.n_cols(), &trip)
}

impl AmgHierarchy {
    /// Builds the hierarchy for a symmetric matrix with positive diagonal.
    pub fn setup(s_hat: &SparseMatrix, opts: &AmgOptions) -> Result<Self> {
        if s_hat.n_rows() != s_hat.n_cols() {
            return Err(Error::Parameter("AMG needs a square matrix".into()));
        }
        if !s_hat.is_symmetric(1e-12) {
            return Err(Error::Parameter("AMG input is not symmetric".into()));
        }
        if s_hat.diagonal().iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Parameter("AMG input has a non-positive diagonal entry".into()));
        }
        if opts.exact {
            return Ok(Self {
                levels: vec![Level { a: s_hat.clone(), p: None, pt: None, smoother: Vec::new() }],
                coarse: CoarseSolver::Sparse(sparse_factorize(s_hat)?),
            });
        }
        let mut levels = Vec::new();
        let mut a = s_hat.clone();
        loop {
            let n = a.n_rows();
            let diag = a.diagonal();
            let rho = jacobi_radius_bound(&a, &diag);
            let omega = opts.jacobi_weight * (2.0 / rho).min(1.0);
            let smoother: Vec<f64> = diag.iter().map(|d| omega / d).collect();
            if n < opts.max_coarse || levels.len() + 1 >= opts.max_levels {
                levels.push(Level { a, p: None, pt: None, smoother });
                break;
            }
            let (agg, n_coarse) = aggregate(&a, &diag, opts.strength_threshold);
            if n_coarse == 0 || n_coarse as f64 > 0.95 * n as f64 {
                levels.push(Level { a, p: None, pt: None, smoother });
                break;
            }
            let tentative =
                SparseMatrix::from_triplets(n, n_coarse, &agg.iter().enumerate().map(|(i, &g)| (i, g, 1.0)).collect::<Vec<_>>())?;
            // P = (I - w D^{-1} A) P_tent with w = 4 / (3 rho).
            let w = 4.0 / (3.0 * rho);
            let scaled: Vec<f64> = diag.iter().map(|d| -w / d).collect();
            let mut trip = Vec::with_capacity(a.nnz());
            for r in 0..n {
                let (cols, vals) = a.row(r);
                trip.extend(cols.iter().zip(vals).map(|(&c, &v)| (r, c, scaled[r] * v)));
                trip.push((r, r, 1.0));
            }
            let smoothing = SparseMatrix::from_triplets(n, n, &trip)?;
            let p = smoothing.matmul(&tentative)?;
            let pt = p.transpose();
            let coarse = exact_symmetrize(&pt.matmul(&a)?.matmul(&p)?)?;
            levels.push(Level { a, p: Some(p), pt: Some(pt), smoother });
            a = coarse;
        }
        let coarse = CoarseSolver::new(&levels.last().unwrap().a)?;
        Ok(Self { levels, coarse })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        self.levels[0].a.n_rows()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.a.n_rows()).collect()
    }

    pub fn level_matrix(&self, l: usize) -> &SparseMatrix {
        &self.levels[l].a
    }

    /// Prolongation from level `l + 1` to level `l`.
    pub fn prolongation(&self, l: usize) -> Option<&SparseMatrix> {
        self.levels[l].p.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.levels.len() == 1 && matches!(self.coarse, CoarseSolver::Sparse(_)) && self.levels[0].smoother.is_empty()
    }

    /// `z = B r` for the fixed V-cycle operator `B`.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        dim_check("AMG right-hand side", self.dim(), r.len())?;
        Ok(self.cycle(0, r))
    }

    pub(crate) fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&self.cycle(0, r));
    }

    /// Applies the V-cycle to every column in parallel.
    pub fn apply_many(&self, columns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        for c in columns {
            dim_check("AMG right-hand side", self.dim(), c.len())?;
        }
        Ok(columns.par_iter().map(|c| self.cycle(0, c)).collect())
    }

    fn cycle(&self, l: usize, r: &[f64]) -> Vec<f64> {
        let level = &self.levels[l];
        let (Some(p), Some(pt)) = (&level.p, &level.pt) else {
            return self.coarse.solve(r);
        };
        let n = r.len();
        let mut x: Vec<f64> = r.iter().zip(&level.smoother).map(|(ri, w)| w * ri).collect();
        let mut ax = vec![0.0; n];
        level.a.spmv_into(&x, &mut ax);
        let res: Vec<f64> = r.iter().zip(&ax).map(|(a, b)| a - b).collect();
        let mut rc = vec![0.0; pt.n_rows()];
        pt.spmv_into(&res, &mut rc);
        let xc = self.cycle(l + 1, &rc);
        let mut corr = vec![0.0; n];
        p.spmv_into(&xc, &mut corr);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi += ci;
        }
        level.a.spmv_into(&x, &mut ax);
        for i in 0..n {
            x[i] += level.smoother[i] * (r[i] - ax[i]);
        }
        x
    }
}
