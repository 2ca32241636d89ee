//! The standard 2D test case: half-disk of radius 80 m, electrodes on
//! `[-50, 50]`, 3500 Ω·m background and a checkerboard truth.
//!
//! Observations are simulated on a uniformly refined copy of the inversion mesh so
//! the inversion does not see its own discretization error as zero.

use crate::error::Result;
use crate::forward::{evaluate_response, ModelVector};
use crate::inversion::InversionProblem;
use crate::mesh::{build_half_disk_mesh, Grading, Mesh};
use crate::model::{homogeneous, Checkerboard};
use crate::survey::{pole_dipole_survey, Survey};

pub const RADIUS: f64 = 80.0;
pub const EXTENT: (f64, f64) = (-50.0, 50.0);
pub const BACKGROUND: f64 = 3500.0;

/// Inversion mesh and pole-dipole survey for `n_electrodes`.
pub fn mesh_and_survey(n_electrodes: usize) -> Result<(Mesh, Survey)> {
    let mesh = build_half_disk_mesh(RADIUS, n_electrodes, EXTENT, &Grading::default())?;
    let survey = pole_dipole_survey(n_electrodes, EXTENT)?;
    Ok((mesh, survey))
}

/// Checkerboard truth sampled on `mesh`.
pub fn truth(mesh: &Mesh, n_electrodes: usize) -> Result<ModelVector> {
    Checkerboard::for_configuration(EXTENT, n_electrodes)?.model(mesh)
}

/// Inversion problem starting from, and regularized towards, the background.
pub fn checkerboard_problem(n_electrodes: usize) -> Result<InversionProblem> {
    let (mesh, survey) = mesh_and_survey(n_electrodes)?;
    let fine = mesh.refine_uniform()?;
    let g_obs = evaluate_response(&fine, &truth(&fine, n_electrodes)?, &survey)?;
    let m_ref = homogeneous(&mesh, BACKGROUND)?;
    InversionProblem::new(mesh, survey, g_obs, m_ref.clone(), m_ref)
}
