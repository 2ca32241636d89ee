use std::path::Path;
use std::time::Instant;

use gnwood::forward::evaluate_response;
use gnwood::inversion::{gauss_newton, in_golden_bound, IdealPreconditioner, PHI};
use gnwood::io::{self, ReportRow};
use gnwood::mesh::{build_half_disk_mesh, Grading};
use gnwood::model::{homogeneous, Checkerboard};
use gnwood::survey::pole_dipole_survey;
use gnwood::{
    Algorithm, DenseMatrix, GnConfig, InversionProblem, Mesh, MixedSpaces, ModelVector, SaddleOperator, Survey,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::manifest::{ConfigEcho, RunManifest};
use crate::{BenchArgs, CliError, ForwardArgs, InvertArgs, MeshArgs, ModelArgs, ModelKind, SolverArgs, SpectrumArgs,
    SurveyArgs};

fn read_mesh(path: &Path) -> Result<Mesh, CliError> {
    Ok(io::read_mesh(io::open(path)?)?)
}

fn electrode_positions(mesh: &Mesh) -> Vec<[f64; 2]> {
    mesh.electrode_nodes().iter().map(|&v| mesh.vertices()[v]).collect()
}

fn read_survey(path: &Path, mesh: &Mesh) -> Result<Survey, CliError> {
    Ok(io::read_survey(io::open(path)?, electrode_positions(mesh))?)
}

/// Electrode line extent of a mesh.
fn line_extent(mesh: &Mesh) -> Result<(f64, f64), CliError> {
    let pos = electrode_positions(mesh);
    match (pos.first(), pos.last()) {
        (Some(a), Some(b)) if pos.len() >= 2 => Ok((a[0], b[0])),
        _ => Err(CliError::Usage("mesh has fewer than two electrodes".into())),
    }
}

fn gn_config(algorithm: Algorithm, s: &SolverArgs) -> GnConfig {
    GnConfig { beta: s.beta, max_outer_steps: s.steps as usize, minres_tol: s.tol, algorithm, ..GnConfig::default() }
}

pub fn mesh(a: MeshArgs) -> Result<(), CliError> {
    let extent = (a.extent[0], a.extent[1]);
    if !(extent.1 > extent.0) {
        return Err(CliError::Usage(format!("extent must be increasing, got {extent:?}")));
    }
    let mesh = build_half_disk_mesh(a.radius, a.nele as usize, extent, &Grading::default())?;
    io::write_mesh(io::create(&a.out)?, &mesh)?;
    eprintln!("{} cells, {} vertices", mesh.n_cells(), mesh.n_vertices());
    Ok(())
}

pub fn survey(a: SurveyArgs) -> Result<(), CliError> {
    let mesh = read_mesh(&a.mesh)?;
    let survey = pole_dipole_survey(mesh.electrode_nodes().len(), line_extent(&mesh)?)?;
    let pos = electrode_positions(&mesh);
    if survey.positions().iter().zip(&pos).any(|(p, q)| (p[0] - q[0]).abs() > 1e-9 * (1.0 + q[0].abs()) || q[1] != 0.0) {
        return Err(CliError::Runtime(gnwood::Error::Parameter(
            "mesh electrodes are not equidistant on the surface".into(),
        )));
    }
    io::write_survey(io::create(&a.out)?, &survey)?;
    eprintln!("{} measurements", survey.len());
    Ok(())
}

pub fn model(a: ModelArgs) -> Result<(), CliError> {
    let mesh = read_mesh(&a.mesh)?;
    let m = match a.kind {
        ModelKind::Homogeneous => homogeneous(&mesh, a.resistivity)?,
        ModelKind::Checkerboard => {
            let cb = Checkerboard::for_configuration(line_extent(&mesh)?, mesh.electrode_nodes().len())?;
            Checkerboard { background: a.resistivity, anomaly: a.anomaly, ..cb }.model(&mesh)?
        }
    };
    io::write_model(io::create(&a.out)?, &m)?;
    Ok(())
}

pub fn forward(a: ForwardArgs) -> Result<(), CliError> {
    let mesh = read_mesh(&a.mesh)?;
    let survey = read_survey(&a.survey, &mesh)?;
    let m = io::read_model(io::open(&a.model)?)?;
    if m.len() != mesh.n_cells() {
        return Err(CliError::Runtime(gnwood::Error::Dimension(format!(
            "model has {} cells, mesh has {}",
            m.len(),
            mesh.n_cells()
        ))));
    }
    let fine = mesh.refine_uniform()?;
    let fine_m = ModelVector::new(Mesh::prolong_cellwise(&m.m))?;
    let g = evaluate_response(&fine, &fine_m, &survey)?;
    io::write_observations(io::create(&a.out)?, &g)?;
    Ok(())
}

pub fn invert(a: InvertArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let mesh = read_mesh(&a.mesh)?;
    let survey = read_survey(&a.survey, &mesh)?;
    let g_obs = io::read_observations(io::open(&a.obs)?)?;
    let m_ref = homogeneous(&mesh, gnwood::scenario::BACKGROUND)?;
    let nele = mesh.electrode_nodes().len();
    let (n_cells, n_meas) = (mesh.n_cells(), survey.len());
    let problem = InversionProblem::new(mesh, survey, g_obs, m_ref.clone(), m_ref)?;
    let config = gn_config(a.algo.into(), &a.solver);
    let t_load = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let (m, report) = gauss_newton(&problem, &config)?;
    let t_invert = t1.elapsed().as_secs_f64();
    io::write_result(io::create(&a.out)?, &m, &report)?;
    io::write_report_rows(io::create(&a.report)?, &io::report_rows(nele, n_cells, n_meas, &report))?;
    for (i, s) in report.steps.iter().enumerate() {
        eprintln!("step {}: misfit {:.6e}, MINRES iterations {:?}", i + 1, s.misfit, s.minres_iters);
    }
    eprintln!("final misfit {:.6e}", report.final_misfit);

    let mut manifest = RunManifest::new("invert");
    manifest
        .file("mesh", &a.mesh)
        .file("survey", &a.survey)
        .file("observations", &a.obs)
        .file("result", &a.out)
        .file("report", &a.report);
    manifest.config =
        Some(ConfigEcho { beta: config.beta, tol: config.minres_tol, algorithm: config.algorithm, steps: config.max_outer_steps });
    manifest.timings.insert("load".into(), t_load);
    manifest.timings.insert("invert".into(), t_invert);
    manifest.timings.insert("total".into(), t0.elapsed().as_secs_f64());
    let path = a.manifest.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".manifest.json");
        p.into()
    });
    manifest.write(&path)
}

#[derive(Debug, Serialize)]
struct BenchRow {
    algo: Algorithm,
    nele: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "MN")]
    mn: usize,
    step: Option<usize>,
    n_iter: Option<usize>,
    converged: Option<bool>,
    #[serde(rename = "t_H")]
    t_h: Option<f64>,
    #[serde(rename = "t_C")]
    t_c: Option<f64>,
    t_chol: Option<f64>,
    t_norm: Option<f64>,
    error: String,
}

fn bench_run(nele: usize, algorithm: Algorithm, s: &SolverArgs) -> gnwood::Result<(InversionProblem, gnwood::GnReport)> {
    let problem = gnwood::scenario::checkerboard_problem(nele)?;
    let (_, report) = gauss_newton(&problem, &gn_config(algorithm, s))?;
    Ok((problem, report))
}

pub fn bench(a: BenchArgs) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(io::create(&a.out)?);
    let mut failures = 0;
    for &nele in &a.nele {
        for &algo in &a.algos {
            let algorithm: Algorithm = algo.into();
            let rows = match bench_run(nele, algorithm, &a.solver) {
                Ok((p, report)) => {
                    let (n, m) = (p.mesh.n_cells(), p.survey.len());
                    io::report_rows(nele, n, m, &report)
                        .into_iter()
                        .zip(&report.steps)
                        .map(|(r, s): (ReportRow, _)| BenchRow {
                            algo: algorithm,
                            nele,
                            n,
                            m,
                            mn: m * n,
                            step: Some(r.step),
                            n_iter: r.n_iter,
                            converged: Some(s.converged),
                            t_h: Some(r.t_h),
                            t_c: Some(r.t_c),
                            t_chol: Some(r.t_chol),
                            t_norm: Some(r.t_norm),
                            error: String::new(),
                        })
                        .collect()
                }
                Err(e) => {
                    failures += 1;
                    eprintln!("N^ele {nele}, {algorithm}: {e}");
                    vec![BenchRow {
                        algo: algorithm,
                        nele,
                        n: 0,
                        m: 0,
                        mn: 0,
                        step: None,
                        n_iter: None,
                        converged: None,
                        t_h: None,
                        t_c: None,
                        t_chol: None,
                        t_norm: None,
                        error: e.to_string(),
                    }]
                }
            };
            for r in rows {
                eprintln!("N^ele {nele}, {algorithm}, step {:?}: {:?} iterations", r.step, r.n_iter);
                out.serialize(r).map_err(gnwood::Error::from)?;
            }
            out.flush()?;
        }
    }
    if failures > 0 {
        eprintln!("{failures} run(s) failed");
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EigenRow {
    index: usize,
    eigenvalue: f64,
    inside: bool,
}

pub fn spectrum(a: SpectrumArgs) -> Result<(), CliError> {
    let mesh = match &a.mesh {
        Some(p) => read_mesh(p)?,
        None => Mesh::rectangle(0.0, 1.0, 0.0, 1.0, a.nx, a.nz)?,
    };
    let sp = MixedSpaces::with_dirichlet_boundary(&mesh)?;
    let dofs = sp.n_flux() + sp.n_cells();
    if dofs > a.max_dofs {
        return Err(CliError::Usage(format!("{dofs} unknowns exceed the cap of {} (--max-dofs)", a.max_dofs)));
    }
    let (q, d) = (sp.assemble_q(), sp.assemble_d());
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let j = if a.nmeas == 0 {
        None
    } else {
        let rows: Vec<Vec<f64>> =
            (0..a.nmeas).map(|_| (0..sp.n_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        Some(DenseMatrix::from_rows(&rows)?)
    };
    let op = SaddleOperator::new(&q, &d, j.as_ref(), a.beta)?;
    let p = IdealPreconditioner::new(&q, &d, j.as_ref(), a.beta)?;
    let eig = p.spectrum_of(&op.to_dense())?;
    let mut out = csv::Writer::from_writer(io::create(&a.out)?);
    let mut outside = 0;
    for (index, &eigenvalue) in eig.iter().enumerate() {
        let inside = in_golden_bound(eigenvalue, 1e-8);
        outside += usize::from(!inside);
        out.serialize(EigenRow { index, eigenvalue, inside }).map_err(gnwood::Error::from)?;
    }
    out.flush()?;
    println!("phi = {PHI}");
    println!("{dofs} unknowns, {} eigenvalues in [{:.10}, {:.10}]", eig.len(), eig[0], eig[eig.len() - 1]);
    println!("inclusion in [-1, -1/phi] U [1, phi]: {}", if outside == 0 { "PASS" } else { "FAIL" });
    if outside > 0 {
        println!("{outside} eigenvalues outside the bound");
    }
    Ok(())
}
