//! DC resistivity forward model on P1 elements and its adjoint-based Jacobian.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sparse_factorize, DenseMatrix, Factorization, SparseMatrix};
use crate::mesh::{BoundaryTag, Mesh};
use crate::survey::Survey;

/// Cellwise log-conductivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVector {
    pub m: Vec<f64>,
}

impl ModelVector {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if let Some(i) = m.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("model entry {i} is {}", m[i])));
        }
        Ok(Self { m })
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self { m: vec![value; n] }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.m
    }

    pub fn conductivity(&self) -> Vec<f64> {
        self.m.iter().map(|v| v.exp()).collect()
    }
}

/// Gradients of the three barycentric coordinates of cell `c`.
pub(crate) fn barycentric_gradients(mesh: &Mesh, c: usize) -> [[f64; 2]; 3] {
    let p = mesh.cells()[c].map(|v| mesh.vertices()[v]);
    let two_area = 2.0 * mesh.cell_area(c);
    [0, 1, 2].map(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        [(p[j][1] - p[k][1]) / two_area, (p[k][0] - p[j][0]) / two_area]
    })
}

/// P1 stiffness with the FAR boundary grounded, factorized once.
#[derive(Debug, Clone)]
pub struct ForwardSystem {
    node_dof: Vec<Option<usize>>,
    matrix: SparseMatrix,
    factor: Factorization,
}

impl ForwardSystem {
    /// Assembles and factorizes `-div(exp(m) grad u)` with `u = 0` on FAR edges.
    pub fn assemble(mesh: &Mesh, m: &ModelVector) -> Result<Self> {
        if m.len() != mesh.n_cells() {
            return Err(Error::Dimension(format!("model has {} entries for {} cells", m.len(), mesh.n_cells())));
        }
        let grounded = mesh.nodes_with_tag(BoundaryTag::Far);
        if grounded.is_empty() {
            return Err(Error::Parameter("mesh has no grounded boundary".into()));
        }
        let mut node_dof = vec![None; mesh.n_vertices()];
        let mut n = 0;
        let mut is_grounded = vec![false; mesh.n_vertices()];
        for &v in &grounded {
            is_grounded[v] = true;
        }
        for (v, dof) in node_dof.iter_mut().enumerate() {
            if !is_grounded[v] {
                *dof = Some(n);
                n += 1;
            }
        }
        let sigma = m.conductivity();
        let mut trip = Vec::with_capacity(9 * mesh.n_cells());
        for c in 0..mesh.n_cells() {
            let g = barycentric_gradients(mesh, c);
            let w = sigma[c] * mesh.cell_area(c);
            let dofs = mesh.cells()[c].map(|v| node_dof[v]);
            for i in 0..3 {
                let Some(di) = dofs[i] else { continue };
                for j in 0..3 {
                    if let Some(dj) = dofs[j] {
                        trip.push((di, dj, w * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
                    }
                }
            }
        }
        let matrix = SparseMatrix::from_triplets(n, n, &trip)?;
        let factor = sparse_factorize(&matrix)?;
        Ok(Self { node_dof, matrix, factor })
    }

    /// Reduced stiffness matrix (grounded nodes removed).
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn node_dof(&self, v: usize) -> Option<usize> {
        self.node_dof[v]
    }

    /// Nodal potential of a unit current injected at `node`.
    pub fn solve_unit_pole(&self, node: usize) -> Result<Vec<f64>> {
        self.solve_point_load(node, 1.0)
    }

    pub fn solve_point_load(&self, node: usize, current: f64) -> Result<Vec<f64>> {
        let dof = self
            .node_dof
            .get(node)
            .copied()
            .ok_or_else(|| Error::Parameter(format!("node {node} out of range")))?
            .ok_or_else(|| Error::Parameter(format!("node {node} lies on the grounded boundary")))?;
        let mut rhs = vec![0.0; self.matrix.n_rows()];
        rhs[dof] = current;
        let reduced = self.factor.solve(&rhs)?;
        if reduced.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("forward solve produced non-finite potential".into()));
        }
        Ok(self.node_dof.iter().map(|d| d.map_or(0.0, |d| reduced[d])).collect())
    }
}

/// Responses `g` and their derivatives `J` with respect to the cellwise model.
#[derive(Debug, Clone)]
pub struct ResponseJacobian {
    pub g: Vec<f64>,
    pub j: DenseMatrix,
}

fn check_electrodes(mesh: &Mesh, survey: &Survey) -> Result<()> {
    let nodes = mesh.electrode_nodes();
    if nodes.len() != survey.n_electrodes() {
        return Err(Error::Parameter(format!(
            "mesh has {} electrodes, survey has {}",
            nodes.len(),
            survey.n_electrodes()
        )));
    }
    let pos = survey.positions();
    let width = (pos[pos.len() - 1][0] - pos[0][0]).abs().max(1.0);
    for (e, (&v, p)) in nodes.iter().zip(pos).enumerate() {
        let q = mesh.vertices()[v];
        if (q[0] - p[0]).abs() > 1e-9 * width || (q[1] - p[1]).abs() > 1e-9 * width {
            return Err(Error::Parameter(format!("electrode {e} is not at mesh node {v}")));
        }
    }
    Ok(())
}

/// Cellwise gradient of a nodal P1 function.
fn cell_gradients(mesh: &Mesh, grads: &[[[f64; 2]; 3]], u: &[f64]) -> Vec<[f64; 2]> {
    mesh.cells()
        .iter()
        .zip(grads)
        .map(|(cell, g)| {
            let mut out = [0.0; 2];
            for i in 0..3 {
                out[0] += u[cell[i]] * g[i][0];
                out[1] += u[cell[i]] * g[i][1];
            }
            out
        })
        .collect()
}

/// Apparent resistivities and Jacobian for every configuration of `survey`.
///
/// One pole solve per electrode against a single factorization; with
/// `t_c = k exp(m_c) |T_c| grad(u_A - u_B) . grad(u_M - u_N)` the response is
/// `g = sum_c t_c` and the Jacobian row is `-t`.
pub fn evaluate_response_and_jacobian(mesh: &Mesh, m: &ModelVector, survey: &Survey) -> Result<ResponseJacobian> {
    check_electrodes(mesh, survey)?;
    let system = ForwardSystem::assemble(mesh, m)?;
    evaluate_with_system(mesh, m, survey, &system)
}

pub(crate) fn evaluate_with_system(
    mesh: &Mesh,
    m: &ModelVector,
    survey: &Survey,
    system: &ForwardSystem,
) -> Result<ResponseJacobian> {
    let nodes = mesh.electrode_nodes();
    let bary: Vec<_> = (0..mesh.n_cells()).map(|c| barycentric_gradients(mesh, c)).collect();
    let potentials: Vec<Vec<[f64; 2]>> = nodes
        .par_iter()
        .map(|&v| system.solve_unit_pole(v).map(|u| cell_gradients(mesh, &bary, &u)))
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = m.conductivity().iter().zip(mesh.cell_areas()).map(|(s, a)| s * a).collect();
    let n_cells = mesh.n_cells();
    let rows: Vec<(f64, Vec<f64>)> = survey
        .configs()
        .par_iter()
        .map(|cfg| {
            let ga = &potentials[cfg.a];
            let gb = cfg.b.map(|b| &potentials[b]);
            let (gm, gn) = (&potentials[cfg.m], &potentials[cfg.n]);
            let mut row = vec![0.0; n_cells];
            let mut g = 0.0;
            for c in 0..n_cells {
                let mut vt = ga[c];
                if let Some(gb) = gb {
                    vt[0] -= gb[c][0];
                    vt[1] -= gb[c][1];
                }
                let vr = [gm[c][0] - gn[c][0], gm[c][1] - gn[c][1]];
                let t = cfg.k * weights[c] * (vt[0] * vr[0] + vt[1] * vr[1]);
                g += t;
                row[c] = -t;
            }
            (g, row)
        })
        .collect();
    let g: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut j = DenseMatrix::zeros(rows.len(), n_cells);
    for (i, (_, row)) in rows.into_iter().enumerate() {
        j.row_mut(i).copy_from_slice(&row);
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("non-finite response".into()));
    }
    Ok(ResponseJacobian { g, j })
}

/// Responses only.
pub fn evaluate_response(mesh: &Mesh, m: &ModelVector, survey: &Survey) -> Result<Vec<f64>> {
    Ok(evaluate_response_and_jacobian(mesh, m, survey)?.g)
}
