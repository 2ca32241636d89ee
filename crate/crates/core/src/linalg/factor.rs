use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{dim_check, Error, Result};
use crate::linalg::SparseMatrix;

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
///
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n_rows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for &c in a.row(r).0 {
            if c != r {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    // Components are processed in order of their lowest-degree node.
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&v| (degree[v], v));
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&u| !visited[u]));
            nbrs.sort_by_key(|&u| (degree[u], u));
            for &u in &nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// BFS levels from `root`: (last level, eccentricity).
fn bfs_last_level(root: usize, adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut ecc = 0;
    while let Some(v) = queue.pop_front() {
        ecc = ecc.max(dist[v]);
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    let last = (0..adj.len()).filter(|&v| dist[v] == ecc).collect();
    (last, ecc)
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = seed;
    let (mut last, mut ecc) = bfs_last_level(root, adj);
    loop {
        let candidate = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        let (next_last, next_ecc) = bfs_last_level(candidate, adj);
        if next_ecc <= ecc {
            return root;
        }
        root = candidate;
        last = next_last;
        ecc = next_ecc;
    }
}

/// Banded LU factorization with partial pivoting of a reordered sparse matrix.
///
/// The matrix is permuted symmetrically by reverse Cuthill-McKee, then factorized in
/// band storage. Row interchanges widen the upper band by the lower bandwidth.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    perm: Vec<usize>,
    lower_bw: usize,
    width: usize,
    band: Vec<f64>,
    multipliers: Vec<f64>,
    pivots: Vec<usize>,
}

/// Factorizes a square, structurally nonsingular sparse matrix.
pub fn sparse_factorize(a: &SparseMatrix) -> Result<Factorization> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::Dimension(format!(
            "factorization needs a square matrix, got {}x{}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    let n = a.n_rows();
    let perm = reverse_cuthill_mckee(a);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (mut kl, mut ku) = (0usize, 0usize);
    let mut max_abs = 0.0f64;
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if v == 0.0 {
                continue;
            }
            let (i, j) = (inv[r], inv[c]);
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
            max_abs = max_abs.max(v.abs());
        }
    }
    if !max_abs.is_finite() {
        return Err(Error::NonFinite("matrix entries".into()));
    }
    let width = 2 * kl + ku + 1;
    let mut band = vec![0.0; n * width];
    let at = |i: usize, j: usize| i * width + (j + kl - i);
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if v != 0.0 {
                band[at(inv[r], inv[c])] += v;
            }
        }
    }

    let pivot_tol = (n.max(1) as f64) * f64::EPSILON * max_abs;
    let mut multipliers = vec![0.0; n * kl];
    let mut pivots = vec![0usize; n];
    for k in 0..n {
        let last_row = (k + kl).min(n - 1);
        let last_col = (k + ku + kl).min(n - 1);
        let mut p = k;
        let mut best = band[at(k, k)].abs();
        for r in k + 1..=last_row {
            let v = band[at(r, k)].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if !(best > pivot_tol) {
            return Err(Error::Factorization(format!(
                "numerically singular pivot {best:e} at step {k} of {n}"
            )));
        }
        pivots[k] = p;
        if p != k {
            for c in k..=last_col {
                band.swap(at(k, c), at(p, c));
            }
        }
        let pivot = band[at(k, k)];
        for r in k + 1..=last_row {
            let l = band[at(r, k)] / pivot;
            multipliers[k * kl + (r - k - 1)] = l;
            if l != 0.0 {
                for c in k + 1..=last_col {
                    band[at(r, c)] -= l * band[at(k, c)];
                }
            }
        }
    }
    Ok(Factorization { n, perm, lower_bw: kl, width, band, multipliers, pivots })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower bandwidth after reordering.
    pub fn bandwidth(&self) -> usize {
        self.lower_bw
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        dim_check("factorization right-hand side", self.n, b.len())?;
        let (n, kl, w) = (self.n, self.lower_bw, self.width);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                y.swap(k, p);
            }
            let yk = y[k];
            if yk != 0.0 {
                let last_row = (k + kl).min(n.saturating_sub(1));
                for r in k + 1..=last_row {
                    y[r] -= self.multipliers[k * kl + (r - k - 1)] * yk;
                }
            }
        }
        for i in (0..n).rev() {
            let row = &self.band[i * w..(i + 1) * w];
            let last_col = (i + w - 1 - kl).min(n - 1);
            let mut s = y[i];
            for c in i + 1..=last_col {
                s -= row[c + kl - i] * y[c];
            }
            y[i] = s / row[kl];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }

    /// Solves for several right-hand sides in parallel.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rhs.par_iter().map(|b| self.solve(b)).collect()
    }
}
