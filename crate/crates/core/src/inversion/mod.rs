//! Gauss-Newton driver and the three linear-solve strategies.

mod direct;
mod ideal;
mod saddle;
mod woodbury;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::amg::{AmgHierarchy, AmgOptions};
use crate::error::{dim_check, Error, Result};
use crate::fem_mixed::{assemble_lumped_schur, MixedSpaces};
use crate::forward::{evaluate_response_and_jacobian, ModelVector};
use crate::linalg::{minres, norm2, DenseMatrix, MinresOptions, MinresReport, SparseMatrix};
use crate::mesh::{BoundaryTag, Mesh};
use crate::survey::Survey;

pub use direct::DirectSolver;
pub use ideal::{in_golden_bound, IdealPreconditioner, DENSE_DOF_CAP, PHI};
pub use saddle::SaddleOperator;
pub use woodbury::{LaplacePreconditioner, SetupTimings, WoodburyPreconditioner};

/// Linear solver used for each Gauss-Newton update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Factorized mixed Laplacian plus capacitance solve.
    Direct,
    /// MINRES with the Laplace-Woodbury preconditioner.
    WoodburyMinres,
    /// MINRES with the Laplace preconditioner.
    LaplaceMinres,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Algorithm::Direct),
            "woodbury" => Ok(Algorithm::WoodburyMinres),
            "laplace" => Ok(Algorithm::LaplaceMinres),
            other => Err(Error::Parameter(format!("unknown algorithm '{other}'"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Direct => "direct",
            Algorithm::WoodburyMinres => "woodbury",
            Algorithm::LaplaceMinres => "laplace",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnConfig {
    pub beta: f64,
    pub max_outer_steps: usize,
    pub minres_tol: f64,
    /// `None` means `2 (K + N)`.
    pub minres_maxit: Option<usize>,
    pub algorithm: Algorithm,
    pub amg: AmgOptions,
    /// Boundary tags carrying the natural condition of the regularization.
    pub natural_tags: Vec<BoundaryTag>,
    /// Stop early once the misfit falls below this fraction of the initial misfit.
    pub misfit_reduction: Option<f64>,
}

impl Default for GnConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            max_outer_steps: 2,
            minres_tol: 1e-7,
            minres_maxit: None,
            algorithm: Algorithm::WoodburyMinres,
            amg: AmgOptions::default(),
            natural_tags: Vec::new(),
            misfit_reduction: None,
        }
    }
}

impl GnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Parameter(format!("beta must be positive, got {}", self.beta)));
        }
        if self.max_outer_steps == 0 {
            return Err(Error::Parameter("need at least one Gauss-Newton step".into()));
        }
        if !(self.minres_tol > 0.0) {
            return Err(Error::Parameter(format!("tolerance must be positive, got {}", self.minres_tol)));
        }
        if self.minres_maxit == Some(0) {
            return Err(Error::Parameter("MINRES iteration limit must be positive".into()));
        }
        Ok(())
    }
}

/// Diagnostics of one Gauss-Newton step. Times are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnStepReport {
    /// `‖g(m) - g_obs‖₂` at the start of the step.
    pub misfit: f64,
    /// `None` for the direct solver.
    pub minres_iters: Option<usize>,
    pub converged: bool,
    /// Final recurred `‖r‖₂ / ‖b‖₂`.
    pub relative_residual: Option<f64>,
    /// Final `‖r‖_{P⁻¹} / ‖r₀‖_{P⁻¹}`.
    pub preconditioned_residual: Option<f64>,
    #[serde(rename = "t_H")]
    pub t_h: f64,
    #[serde(rename = "t_C")]
    pub t_c: f64,
    pub t_chol: f64,
    /// Total time of the linear solve for the update.
    pub t_norm: f64,
    pub t_forward: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GnReport {
    pub steps: Vec<GnStepReport>,
    /// Misfit of the returned model.
    pub final_misfit: f64,
}

/// Everything that stays fixed during an inversion.
#[derive(Debug, Clone)]
pub struct InversionProblem {
    pub mesh: Mesh,
    pub survey: Survey,
    pub g_obs: Vec<f64>,
    pub m_ref: ModelVector,
    pub m0: ModelVector,
}

impl InversionProblem {
    pub fn new(mesh: Mesh, survey: Survey, g_obs: Vec<f64>, m_ref: ModelVector, m0: ModelVector) -> Result<Self> {
        dim_check("observations", survey.len(), g_obs.len())?;
        dim_check("reference model", mesh.n_cells(), m_ref.len())?;
        dim_check("initial model", mesh.n_cells(), m0.len())?;
        if g_obs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observations".into()));
        }
        Ok(Self { mesh, survey, g_obs, m_ref, m0 })
    }
}

/// Right-hand side `[-Dᵀ(m - m_ref); (1/β) Jᵀ(g - g_obs)]`.
pub fn assemble_gn_rhs(
    m: &[f64],
    m_ref: &[f64],
    g: &[f64],
    g_obs: &[f64],
    j: &DenseMatrix,
    d: &SparseMatrix,
    beta: f64,
) -> Result<Vec<f64>> {
    dim_check("model length", d.n_rows(), m.len())?;
    dim_check("reference model length", d.n_rows(), m_ref.len())?;
    dim_check("Jacobian columns", d.n_rows(), j.n_cols())?;
    dim_check("responses", j.n_rows(), g.len())?;
    dim_check("observations", j.n_rows(), g_obs.len())?;
    let dm: Vec<f64> = m.iter().zip(m_ref).map(|(a, b)| a - b).collect();
    let mut top = d.spmv_transpose(&dm)?;
    top.iter_mut().for_each(|v| *v = -*v);
    let res: Vec<f64> = g.iter().zip(g_obs).map(|(a, b)| a - b).collect();
    let s = 1.0 / beta;
    top.extend(j.matvec_transpose_unchecked(&res).iter().map(|v| s * v));
    Ok(top)
}

/// MINRES on `A_{β,m}` with the Woodbury preconditioner; returns the model block.
pub fn minres_step_woodbury(
    op: &SaddleOperator<'_>,
    prec: &WoodburyPreconditioner<'_>,
    b: &[f64],
    opts: MinresOptions,
) -> Result<(Vec<f64>, MinresReport)> {
    dim_check("right-hand side", op.dim(), b.len())?;
    let (x, rep) = minres(|x, y| op.apply(x, y), |r, z| prec.apply(r, z), b, None, opts)?;
    Ok((x[op.n_flux()..].to_vec(), rep))
}

/// MINRES on `A_{β,m}` with the Laplace preconditioner; returns the model block.
pub fn minres_step_laplace(
    op: &SaddleOperator<'_>,
    prec: &LaplacePreconditioner<'_>,
    b: &[f64],
    opts: MinresOptions,
) -> Result<(Vec<f64>, MinresReport)> {
    dim_check("right-hand side", op.dim(), b.len())?;
    let (x, rep) = minres(|x, y| op.apply(x, y), |r, z| prec.apply(r, z), b, None, opts)?;
    Ok((x[op.n_flux()..].to_vec(), rep))
}

enum Setup {
    Direct(DirectSolver),
    Iterative { amg: AmgHierarchy, qdiag_inv: Vec<f64> },
}

/// Runs the Gauss-Newton iteration from `problem.m0`.
///
/// The factorization (direct) or the AMG hierarchy (MINRES variants) is built once
/// before the loop; the Woodbury data is rebuilt every step since `J` changes.
pub fn gauss_newton(problem: &InversionProblem, config: &GnConfig) -> Result<(ModelVector, GnReport)> {
    config.validate()?;
    let spaces = MixedSpaces::new(&problem.mesh, &config.natural_tags)?;
    let q = spaces.assemble_q();
    let d = spaces.assemble_d();
    let (k, n) = (spaces.n_flux(), spaces.n_cells());
    let setup = match config.algorithm {
        Algorithm::Direct => Setup::Direct(DirectSolver::new(&q, &d)?),
        _ => {
            let s_hat = assemble_lumped_schur(&q, &d)?;
            let amg = AmgHierarchy::setup(&s_hat, &config.amg)?;
            let qdiag_inv = q.diagonal().iter().map(|v| 1.0 / v).collect();
            Setup::Iterative { amg, qdiag_inv }
        }
    };
    let opts = MinresOptions::new(config.minres_tol, config.minres_maxit.unwrap_or(2 * (k + n)));

    let mut m = problem.m0.clone();
    let mut report = GnReport::default();
    let mut initial_misfit = None;
    for _ in 0..config.max_outer_steps {
        let t0 = Instant::now();
        let rj = evaluate_response_and_jacobian(&problem.mesh, &m, &problem.survey)?;
        let t_forward = t0.elapsed().as_secs_f64();
        let misfit = misfit(&rj.g, &problem.g_obs);
        let first = *initial_misfit.get_or_insert(misfit);
        if let Some(f) = config.misfit_reduction {
            if misfit <= f * first && !report.steps.is_empty() {
                break;
            }
        }
        let t1 = Instant::now();
        let (dm, timings, minres_report) = match &setup {
            Setup::Direct(solver) => {
                let (dm, t) = solver.step(&rj.j, &m.m, &problem.m_ref.m, &rj.g, &problem.g_obs, config.beta)?;
                (dm, t, None)
            }
            Setup::Iterative { amg, qdiag_inv } => {
                let op = SaddleOperator::new(&q, &d, Some(&rj.j), config.beta)?;
                let b = assemble_gn_rhs(&m.m, &problem.m_ref.m, &rj.g, &problem.g_obs, &rj.j, &d, config.beta)?;
                if config.algorithm == Algorithm::WoodburyMinres {
                    let prec = WoodburyPreconditioner::build(qdiag_inv, amg, &rj.j, config.beta)?;
                    let (dm, rep) = minres_step_woodbury(&op, &prec, &b, opts)?;
                    (dm, prec.timings(), Some(rep))
                } else {
                    let prec = LaplacePreconditioner::new(qdiag_inv, amg);
                    let (dm, rep) = minres_step_laplace(&op, &prec, &b, opts)?;
                    (dm, SetupTimings::default(), Some(rep))
                }
            }
        };
        let t_norm = t1.elapsed().as_secs_f64();
        if let Some(i) = dm.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("Gauss-Newton update entry {i}")));
        }
        for (mi, di) in m.m.iter_mut().zip(&dm) {
            *mi += di;
        }
        report.steps.push(GnStepReport {
            misfit,
            minres_iters: minres_report.as_ref().map(|r| r.iterations),
            converged: minres_report.as_ref().map_or(true, |r| r.converged),
            relative_residual: minres_report.as_ref().and_then(|r| r.relative_residuals.last().copied()),
            preconditioned_residual: minres_report.as_ref().and_then(|r| r.preconditioned_residuals.last().copied()),
            t_h: timings.t_h,
            t_c: timings.t_c,
            t_chol: timings.t_chol,
            t_norm,
            t_forward,
        });
    }
    let g = crate::forward::evaluate_response(&problem.mesh, &m, &problem.survey)?;
    report.final_misfit = misfit(&g, &problem.g_obs);
    Ok((m, report))
}

/// `‖g - g_obs‖₂`.
pub fn misfit(g: &[f64], g_obs: &[f64]) -> f64 {
    let r: Vec<f64> = g.iter().zip(g_obs).map(|(a, b)| a - b).collect();
    norm2(&r)
}

#[cfg(test)]
mod tests;
