//! Fixtures shared by the solver benchmarks.

use gnwood::fem_mixed::assemble_lumped_schur;
use gnwood::forward::evaluate_response_and_jacobian;
use gnwood::inversion::assemble_gn_rhs;
use gnwood::scenario::checkerboard_problem;
use gnwood::{AmgHierarchy, AmgOptions, DenseMatrix, MixedSpaces, SparseMatrix};

/// First Gauss-Newton system of the standard checkerboard problem.
pub struct Fixture {
    pub n_electrodes: usize,
    pub q: SparseMatrix,
    pub d: SparseMatrix,
    pub s_hat: SparseMatrix,
    pub amg: AmgHierarchy,
    pub qdiag_inv: Vec<f64>,
    pub j: DenseMatrix,
    pub rhs: Vec<f64>,
    pub beta: f64,
}

impl Fixture {
    pub fn new(n_electrodes: usize, beta: f64) -> gnwood::Result<Self> {
        let p = checkerboard_problem(n_electrodes)?;
        let sp = MixedSpaces::new(&p.mesh, &[])?;
        let (q, d) = (sp.assemble_q(), sp.assemble_d());
        let s_hat = assemble_lumped_schur(&q, &d)?;
        let amg = AmgHierarchy::setup(&s_hat, &AmgOptions::default())?;
        let qdiag_inv = q.diagonal().iter().map(|v| 1.0 / v).collect();
        let rj = evaluate_response_and_jacobian(&p.mesh, &p.m0, &p.survey)?;
        let rhs = assemble_gn_rhs(&p.m0.m, &p.m_ref.m, &rj.g, &p.g_obs, &rj.j, &d, beta)?;
        Ok(Self { n_electrodes, q, d, s_hat, amg, qdiag_inv, j: rj.j, rhs, beta })
    }

    pub fn dim(&self) -> usize {
        self.q.n_rows() + self.d.n_rows()
    }
}
