//! Lowest-order Raviart-Thomas / piecewise-constant discretization of the Laplacian.
//!
//! Flux dofs live on edges and are normalized to unit flux across the edge in its
//! global orientation, with normal `(dz, -dx)` for the edge vector `(dx, dz)` from the
//! lower to the higher vertex index. Edges on the natural-boundary part carry no dof.

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::{BoundaryTag, Mesh};

/// Dof bookkeeping for the mixed pair on a mesh.
#[derive(Debug, Clone)]
pub struct MixedSpaces<'a> {
    mesh: &'a Mesh,
    edge_dof: Vec<Option<usize>>,
    n_flux: usize,
}

impl<'a> MixedSpaces<'a> {
    /// Spaces with the essential flux condition on edges tagged in `natural_tags`.
    ///
    /// The remaining boundary carries the weak Dirichlet condition and must be
    /// nonempty, otherwise the Schur complement is singular.
    pub fn new(mesh: &'a Mesh, natural_tags: &[BoundaryTag]) -> Result<Self> {
        let mut edge_dof = Vec::with_capacity(mesh.n_edges());
        let mut n_flux = 0;
        let mut dirichlet_edges = 0;
        for e in 0..mesh.n_edges() {
            match mesh.edge_tag(e) {
                Some(t) if natural_tags.contains(&t) => edge_dof.push(None),
                tag => {
                    if tag.is_some() {
                        dirichlet_edges += 1;
                    }
                    edge_dof.push(Some(n_flux));
                    n_flux += 1;
                }
            }
        }
        if dirichlet_edges == 0 {
            return Err(Error::Parameter("the Dirichlet part of the boundary is empty".into()));
        }
        Ok(Self { mesh, edge_dof, n_flux })
    }

    /// Dirichlet condition on the whole boundary.
    pub fn with_dirichlet_boundary(mesh: &'a Mesh) -> Result<Self> {
        Self::new(mesh, &[])
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.mesh
    }

    /// Number of flux dofs `K`.
    pub fn n_flux(&self) -> usize {
        self.n_flux
    }

    /// Number of cells `N`.
    pub fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }

    pub fn edge_dof(&self, e: usize) -> Option<usize> {
        self.edge_dof[e]
    }

    /// Element mass matrix of the three local basis functions, ordered like
    /// [`Mesh::cell_edges`].
    pub fn local_mass(&self, c: usize) -> [[f64; 3]; 3] {
        let mesh = self.mesh;
        let p = mesh.cells()[c].map(|v| mesh.vertices()[v]);
        let s = mesh.cell_edge_signs()[c];
        let area = mesh.cell_area(c);
        let mids = [0usize, 1, 2].map(|k| {
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
        });
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for m in &mids {
                    let u = [m[0] - p[i][0], m[1] - p[i][1]];
                    let v = [m[0] - p[j][0], m[1] - p[j][1]];
                    acc += u[0] * v[0] + u[1] * v[1];
                }
                out[i][j] = s[i] * s[j] * acc / (12.0 * area);
            }
        }
        out
    }

    /// Flux mass matrix `Q` (`K x K`).
    pub fn assemble_q(&self) -> SparseMatrix {
        let mut trip = Vec::with_capacity(9 * self.n_cells());
        for c in 0..self.n_cells() {
            let local = self.local_mass(c);
            let dofs = self.mesh.cell_edges()[c].map(|e| self.edge_dof[e]);
            for i in 0..3 {
                let Some(di) = dofs[i] else { continue };
                for j in 0..3 {
                    if let Some(dj) = dofs[j] {
                        trip.push((di, dj, local[i][j]));
                    }
                }
            }
        }
        let q = SparseMatrix::from_triplets(self.n_flux, self.n_flux, &trip).expect("dof indices in range");
        symmetrize_exactly(q)
    }

    /// Divergence matrix `D` (`N x K`) with entries in `{-1, 0, 1}`.
    pub fn assemble_d(&self) -> SparseMatrix {
        let mut trip = Vec::with_capacity(3 * self.n_cells());
        for c in 0..self.n_cells() {
            let edges = self.mesh.cell_edges()[c];
            let signs = self.mesh.cell_edge_signs()[c];
            for k in 0..3 {
                if let Some(d) = self.edge_dof[edges[k]] {
                    trip.push((c, d, signs[k]));
                }
            }
        }
        SparseMatrix::from_triplets(self.n_cells(), self.n_flux, &trip).expect("dof indices in range")
    }
}

/// Averages `a` with its transpose so that `a(i, j) == a(j, i)` bit for bit.
fn symmetrize_exactly(a: SparseMatrix) -> SparseMatrix {
    let at = a.transpose();
    let n = a.n_rows();
    let mut trip = Vec::with_capacity(a.nnz());
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            trip.push((r, c, 0.5 * (v + at.get(r, c))));
        }
    }
    SparseMatrix::from_triplets(n, a.n_cols(), &trip).expect("same pattern")
}

/// Diagonally lumped Schur complement `D diag(Q)^{-1} Dᵀ`.
pub fn assemble_lumped_schur(q: &SparseMatrix, d: &SparseMatrix) -> Result<SparseMatrix> {
    let diag = q.diagonal();
    if let Some(i) = diag.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Parameter(format!("flux mass diagonal entry {i} is not positive")));
    }
    let inv: Vec<f64> = diag.iter().map(|v| 1.0 / v).collect();
    let s = d.scale_columns(&inv)?.matmul(&d.transpose())?;
    Ok(symmetrize_exactly(s))
}

/// Mixed Laplacian saddle matrix `[[Q, Dᵀ], [D, 0]]`.
pub fn assemble_saddle(q: &SparseMatrix, d: &SparseMatrix) -> Result<SparseMatrix> {
    SparseMatrix::block_symmetric(q, d, None)
}
