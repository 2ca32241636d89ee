use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::forward::evaluate_response;
use crate::linalg::{dot, sparse_factorize, CholeskyFactor};
use crate::mesh::{build_half_disk_mesh, Grading};
use crate::model::{homogeneous, Checkerboard};
use crate::survey::pole_dipole_survey;

struct Small {
    q: SparseMatrix,
    d: SparseMatrix,
    j: DenseMatrix,
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn small(seed: u64, n_meas: usize) -> Small {
    let mesh = Mesh::rectangle(0.0, 1.0, 0.0, 1.0, 4, 3).unwrap();
    let sp = MixedSpaces::with_dirichlet_boundary(&mesh).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sp.n_cells();
    let rows: Vec<Vec<f64>> = (0..n_meas).map(|_| random_vec(n, &mut rng)).collect();
    let j = if n_meas == 0 { DenseMatrix::zeros(0, n) } else { DenseMatrix::from_rows(&rows).unwrap() };
    Small { q: sp.assemble_q(), d: sp.assemble_d(), j }
}

fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.n_rows(), a.n_cols(), a.values())
}

fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    to_na(a).lu().solve(&DVector::from_column_slice(b)).unwrap().as_slice().to_vec()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b).max(f64::MIN_POSITIVE)
}

#[test]
fn rhs_vanishes_at_reference_with_matching_data() {
    let s = small(1, 4);
    let m = vec![0.3; s.d.n_rows()];
    let g = vec![2.0; 4];
    let b = assemble_gn_rhs(&m, &m, &g, &g, &s.j, &s.d, 0.1).unwrap();
    assert!(b.iter().all(|&v| v == 0.0));
}

#[test]
fn rhs_matches_dense_formula() {
    let s = small(2, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let n = s.d.n_rows();
    let (m, m_ref) = (random_vec(n, &mut rng), random_vec(n, &mut rng));
    let (g, g_obs) = (random_vec(5, &mut rng), random_vec(5, &mut rng));
    let beta = 0.25;
    let b = assemble_gn_rhs(&m, &m_ref, &g, &g_obs, &s.j, &s.d, beta).unwrap();
    let dd = to_na(&DenseMatrix::from_rows(&s.d.to_dense_rows()).unwrap());
    let jn = to_na(&s.j);
    let dm = DVector::from_iterator(n, m.iter().zip(&m_ref).map(|(a, b)| a - b));
    let r = DVector::from_iterator(5, g.iter().zip(&g_obs).map(|(a, b)| a - b));
    let top = -(dd.transpose() * dm);
    let bottom = jn.transpose() * r / beta;
    let k = s.q.n_rows();
    for i in 0..k {
        assert!((b[i] - top[i]).abs() < 1e-13);
    }
    for i in 0..n {
        assert!((b[k + i] - bottom[i]).abs() < 1e-12 * (1.0 + bottom[i].abs()));
    }
}

#[test]
fn halving_beta_doubles_the_data_block_only() {
    let s = small(3, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let n = s.d.n_rows();
    let (m, m_ref) = (random_vec(n, &mut rng), random_vec(n, &mut rng));
    let (g, g_obs) = (random_vec(3, &mut rng), random_vec(3, &mut rng));
    let b1 = assemble_gn_rhs(&m, &m_ref, &g, &g_obs, &s.j, &s.d, 1.0).unwrap();
    let b2 = assemble_gn_rhs(&m, &m_ref, &g, &g_obs, &s.j, &s.d, 0.5).unwrap();
    let k = s.q.n_rows();
    assert_eq!(b1[..k], b2[..k]);
    for (x, y) in b1[k..].iter().zip(&b2[k..]) {
        assert!((2.0 * x - y).abs() <= 1e-14 * y.abs().max(1.0));
    }
}

#[test]
fn rhs_rejects_mismatched_lengths() {
    let s = small(4, 3);
    let n = s.d.n_rows();
    let m = vec![0.0; n];
    assert!(assemble_gn_rhs(&m, &m[1..], &[0.0; 3], &[0.0; 3], &s.j, &s.d, 1.0).is_err());
    assert!(assemble_gn_rhs(&m, &m, &[0.0; 2], &[0.0; 3], &s.j, &s.d, 1.0).is_err());
}

#[test]
fn direct_step_matches_dense_saddle_solve() {
    let s = small(5, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let n = s.d.n_rows();
    let (m, m_ref) = (random_vec(n, &mut rng), random_vec(n, &mut rng));
    let (g, g_obs) = (random_vec(6, &mut rng), random_vec(6, &mut rng));
    for beta in [1e-3, 0.1, 10.0] {
        let solver = DirectSolver::new(&s.q, &s.d).unwrap();
        let (dm, _) = solver.step(&s.j, &m, &m_ref, &g, &g_obs, beta).unwrap();
        let op = SaddleOperator::new(&s.q, &s.d, Some(&s.j), beta).unwrap();
        let b = assemble_gn_rhs(&m, &m_ref, &g, &g_obs, &s.j, &s.d, beta).unwrap();
        let x = dense_solve(&op.to_dense(), &b);
        let err = rel_diff(&dm, &x[s.q.n_rows()..]);
        assert!(err < 1e-9, "beta {beta}: {err:e}");
    }
}

#[test]
fn direct_step_is_zero_at_reference_with_matching_data() {
    let s = small(6, 4);
    let n = s.d.n_rows();
    let m = vec![-2.0; n];
    let g = vec![1.5; 4];
    let solver = DirectSolver::new(&s.q, &s.d).unwrap();
    let (dm, _) = solver.step(&s.j, &m, &m, &g, &g, 0.1).unwrap();
    assert!(dm.iter().all(|&v| v == 0.0));
}

#[test]
fn direct_step_tends_to_reference_for_large_beta() {
    let s = small(7, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let n = s.d.n_rows();
    let (m, m_ref) = (random_vec(n, &mut rng), random_vec(n, &mut rng));
    let (g, g_obs) = (random_vec(4, &mut rng), random_vec(4, &mut rng));
    let solver = DirectSolver::new(&s.q, &s.d).unwrap();
    let (dm, _) = solver.step(&s.j, &m, &m_ref, &g, &g_obs, 1e12).unwrap();
    let expect: Vec<f64> = m.iter().zip(&m_ref).map(|(a, b)| b - a).collect();
    assert!(rel_diff(&dm, &expect) < 1e-9);
}

#[test]
fn schur_rows_solve_the_schur_complement() {
    let s = small(8, 3);
    let solver = DirectSolver::new(&s.q, &s.d).unwrap();
    let h_t = solver.schur_solve_rows(&s.j).unwrap();
    let qn = to_na(&DenseMatrix::from_rows(&s.q.to_dense_rows()).unwrap());
    let dn = to_na(&DenseMatrix::from_rows(&s.d.to_dense_rows()).unwrap());
    let schur = &dn * qn.lu().solve(&dn.transpose()).unwrap();
    let jn = to_na(&s.j);
    let expect = schur.lu().solve(&jn.transpose()).unwrap();
    let got = to_na(&h_t).transpose();
    assert!((&got - &expect).norm() < 1e-10 * expect.norm());
}

/// Woodbury preconditioner with an exact inner solve against `(Ŝ + JᵀJ/β)^{-1}`.
#[test]
fn woodbury_apply_matches_dense_inverse() {
    let s = small(9, 5);
    let s_hat = assemble_lumped_schur(&s.q, &s.d).unwrap();
    let amg = AmgHierarchy::setup(&s_hat, &AmgOptions::reference()).unwrap();
    let qdiag_inv: Vec<f64> = s.q.diagonal().iter().map(|v| 1.0 / v).collect();
    let k = s.q.n_rows();
    let n = s.d.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    for beta in [1e-3, 1.0, 1e3] {
        let prec = WoodburyPreconditioner::build(&qdiag_inv, &amg, &s.j, beta).unwrap();
        let y = random_vec(k + n, &mut rng);
        let z = prec.apply_vec(&y).unwrap();
        for i in 0..k {
            assert!((z[i] - qdiag_inv[i] * y[i]).abs() < 1e-15);
        }
        let jn = to_na(&s.j);
        let block = to_na(&DenseMatrix::from_rows(&s_hat.to_dense_rows()).unwrap()) + jn.transpose() * &jn / beta;
        let expect = block.lu().solve(&DVector::from_column_slice(&y[k..])).unwrap();
        let err = rel_diff(&z[k..], expect.as_slice());
        assert!(err < 1e-10, "beta {beta}: {err:e}");
    }
}

#[test]
fn woodbury_limits() {
    let s = small(17, 4);
    let s_hat = assemble_lumped_schur(&s.q, &s.d).unwrap();
    let amg = AmgHierarchy::setup(&s_hat, &AmgOptions::default()).unwrap();
    let qdiag_inv: Vec<f64> = s.q.diagonal().iter().map(|v| 1.0 / v).collect();
    let l = LaplacePreconditioner::new(&qdiag_inv, &amg);
    let w = WoodburyPreconditioner::build(&qdiag_inv, &amg, &s.j, 1e14).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(171);
    let y = random_vec(w.dim(), &mut rng);
    assert!(rel_diff(&w.apply_vec(&y).unwrap(), &l.apply_vec(&y).unwrap()) < 1e-10);
    assert!(w.apply_vec(&vec![0.0; w.dim()]).unwrap().iter().all(|&v| v == 0.0));

    let j1 = DenseMatrix::from_rows(&[s.j.row(0).to_vec()]).unwrap();
    let w1 = WoodburyPreconditioner::build(&qdiag_inv, &amg, &j1, 0.5).unwrap();
    let c = w1.capacitance_factor().get(0, 0).powi(2);
    let expect = 1.0 + 2.0 * dot(j1.row(0), &amg.apply(j1.row(0)).unwrap());
    assert!(c > 1.0 && (c - expect).abs() < 1e-12 * expect);
}

#[test]
fn woodbury_without_data_is_laplace_preconditioner() {
    let s = small(10, 0);
    let s_hat = assemble_lumped_schur(&s.q, &s.d).unwrap();
    let amg = AmgHierarchy::setup(&s_hat, &AmgOptions::default()).unwrap();
    let qdiag_inv: Vec<f64> = s.q.diagonal().iter().map(|v| 1.0 / v).collect();
    let w = WoodburyPreconditioner::build(&qdiag_inv, &amg, &s.j, 0.1).unwrap();
    let l = LaplacePreconditioner::new(&qdiag_inv, &amg);
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let y = random_vec(w.dim(), &mut rng);
    assert_eq!(w.apply_vec(&y).unwrap(), l.apply_vec(&y).unwrap());

    let zero_j = DenseMatrix::zeros(3, s.d.n_rows());
    let w0 = WoodburyPreconditioner::build(&qdiag_inv, &amg, &zero_j, 0.1).unwrap();
    assert_eq!(w0.apply_vec(&y).unwrap(), l.apply_vec(&y).unwrap());
}

#[test]
fn capacitance_of_transposed_rows() {
    let j = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
    let h_t = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
    let c = woodbury::capacitance(&j, &h_t, 0.5).unwrap();
    // C = I + 2 J H with H = h_tᵀ: J H = [[1, 3], [0, 1]].
    assert_eq!(c, DenseMatrix::from_rows(&[vec![3.0, 6.0], vec![0.0, 3.0]]).unwrap());
}

#[test]
fn capacitance_cholesky_retries_with_symmetrization() {
    // Lower triangle alone is indefinite, the symmetric part is SPD.
    let c = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.5, 1.0]]).unwrap();
    assert!(CholeskyFactor::new(&c).is_err());
    let f = woodbury::capacitance_cholesky(c).unwrap();
    assert!((f.lower().get(1, 0) - 0.75).abs() < 1e-15);
    let bad = DenseMatrix::from_rows(&[vec![1.0, 3.0], vec![3.0, 1.0]]).unwrap();
    assert!(matches!(woodbury::capacitance_cholesky(bad), Err(Error::NotSpd { .. })));
}

#[test]
fn ideal_preconditioner_spectrum_of_mixed_laplacian() {
    let s = small(11, 0);
    let op = SaddleOperator::new(&s.q, &s.d, None, 1.0).unwrap();
    let p = IdealPreconditioner::new(&s.q, &s.d, None, 1.0).unwrap();
    let eig = p.spectrum_of(&op.to_dense()).unwrap();
    let targets = [1.0, PHI, 1.0 - PHI];
    for l in eig {
        assert!(targets.iter().any(|t| (l - t).abs() < 1e-9), "{l}");
    }
}

#[test]
fn ideal_preconditioner_spectrum_with_data_term() {
    for n_meas in [1, 5, 20] {
        let s = small(12 + n_meas as u64, n_meas);
        for beta in [1e-2, 1.0, 1e2] {
            let op = SaddleOperator::new(&s.q, &s.d, Some(&s.j), beta).unwrap();
            let p = IdealPreconditioner::new(&s.q, &s.d, Some(&s.j), beta).unwrap();
            for l in p.spectrum_of(&op.to_dense()).unwrap() {
                assert!(in_golden_bound(l, 1e-8), "M {n_meas}, beta {beta}: {l}");
            }
        }
    }
}

#[test]
fn ideal_preconditioner_rejects_large_problems() {
    let mesh = Mesh::rectangle(0.0, 1.0, 0.0, 1.0, 20, 20).unwrap();
    let sp = MixedSpaces::with_dirichlet_boundary(&mesh).unwrap();
    let err = IdealPreconditioner::new(&sp.assemble_q(), &sp.assemble_d(), None, 1.0).unwrap_err();
    assert!(matches!(err, Error::Parameter(_)));
}

#[test]
fn minres_with_ideal_preconditioner_takes_three_iterations() {
    let s = small(13, 0);
    let op = SaddleOperator::new(&s.q, &s.d, None, 1.0).unwrap();
    let p = IdealPreconditioner::new(&s.q, &s.d, None, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(130);
    let b = random_vec(op.dim(), &mut rng);
    let (_, rep) = minres(|x, y| op.apply(x, y), |r, z| p.apply(r, z), &b, None, MinresOptions::new(1e-10, 50)).unwrap();
    assert!(rep.converged && rep.iterations <= 3, "{rep:?}");
}

#[test]
fn unpreconditioned_minres_residual_is_monotone() {
    let s = small(14, 4);
    let op = SaddleOperator::new(&s.q, &s.d, Some(&s.j), 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(140);
    let b = random_vec(op.dim(), &mut rng);
    let (_, rep) =
        minres(|x, y| op.apply(x, y), |r, z| z.copy_from_slice(r), &b, None, MinresOptions::new(1e-10, 500)).unwrap();
    assert!(rep.converged);
    for w in rep.relative_residuals.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-10), "{w:?}");
    }
}

#[test]
fn saddle_operator_matches_assembled_blocks() {
    let s = small(15, 0);
    let op = SaddleOperator::new(&s.q, &s.d, None, 1.0).unwrap();
    let a = crate::fem_mixed::assemble_saddle(&s.q, &s.d).unwrap();
    let dense = op.to_dense();
    for (i, row) in a.to_dense_rows().iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert_eq!(dense.get(i, j), *v);
        }
    }
    assert!(SaddleOperator::new(&s.q, &s.d, None, 0.0).is_err());
}

#[test]
fn mixed_laplacian_factorization_solves() {
    let s = small(16, 0);
    let a = crate::fem_mixed::assemble_saddle(&s.q, &s.d).unwrap();
    let f = sparse_factorize(&a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(160);
    let b = random_vec(a.n_rows(), &mut rng);
    let x = f.solve(&b).unwrap();
    assert!(rel_diff(&a.spmv(&x).unwrap(), &b) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn woodbury_preconditioner_is_spd(seed in 0u64..1000, log_beta in -3.0f64..3.0) {
        let s = small(seed, 4);
        let s_hat = assemble_lumped_schur(&s.q, &s.d).unwrap();
        let amg = AmgHierarchy::setup(&s_hat, &AmgOptions::default()).unwrap();
        let qdiag_inv: Vec<f64> = s.q.diagonal().iter().map(|v| 1.0 / v).collect();
        let prec = WoodburyPreconditioner::build(&qdiag_inv, &amg, &s.j, 10f64.powf(log_beta)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let u = random_vec(prec.dim(), &mut rng);
        let v = random_vec(prec.dim(), &mut rng);
        let pu = prec.apply_vec(&u).unwrap();
        let pv = prec.apply_vec(&v).unwrap();
        let (a, b) = (dot(&v, &pu), dot(&u, &pv));
        prop_assert!((a - b).abs() <= 1e-10 * (a.abs() + b.abs() + 1e-300));
        prop_assert!(dot(&u, &pu) > 0.0);
    }

    #[test]
    fn saddle_operator_is_symmetric(seed in 0u64..1000) {
        let s = small(seed, 3);
        let op = SaddleOperator::new(&s.q, &s.d, Some(&s.j), 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_vec(op.dim(), &mut rng);
        let v = random_vec(op.dim(), &mut rng);
        let (a, b) = (dot(&v, &op.apply_vec(&u).unwrap()), dot(&u, &op.apply_vec(&v).unwrap()));
        prop_assert!((a - b).abs() <= 1e-12 * (a.abs() + b.abs() + 1.0));
    }
}

fn ert_problem(n: usize, same_model: bool) -> InversionProblem {
    let extent = (-50.0, 50.0);
    let mesh = build_half_disk_mesh(80.0, n, extent, &Grading::default()).unwrap();
    let survey = pole_dipole_survey(n, extent).unwrap();
    let m_ref = homogeneous(&mesh, 3500.0).unwrap();
    let g_obs = if same_model {
        evaluate_response(&mesh, &m_ref, &survey).unwrap()
    } else {
        let fine = mesh.refine_uniform().unwrap();
        let truth = Checkerboard::for_configuration(extent, n).unwrap().model(&fine).unwrap();
        evaluate_response(&fine, &truth, &survey).unwrap()
    };
    InversionProblem::new(mesh, survey, g_obs, m_ref.clone(), m_ref).unwrap()
}

#[test]
fn data_from_reference_leaves_model_unchanged() {
    let problem = ert_problem(17, true);
    for algorithm in [Algorithm::Direct, Algorithm::WoodburyMinres, Algorithm::LaplaceMinres] {
        let config = GnConfig { algorithm, max_outer_steps: 1, ..GnConfig::default() };
        let (m, report) = gauss_newton(&problem, &config).unwrap();
        assert_eq!(m, problem.m_ref, "{algorithm}");
        assert_eq!(report.steps[0].misfit, 0.0);
    }
}

#[test]
fn minres_steps_agree_with_direct_step() {
    let mesh = Mesh::rectangle(0.0, 1.0, 0.0, 1.0, 8, 6).unwrap();
    let sp = MixedSpaces::with_dirichlet_boundary(&mesh).unwrap();
    let (q, d) = (sp.assemble_q(), sp.assemble_d());
    let n = sp.n_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(170);
    let rows: Vec<Vec<f64>> = (0..12).map(|_| random_vec(n, &mut rng)).collect();
    let j = DenseMatrix::from_rows(&rows).unwrap();
    let (m, m_ref) = (random_vec(n, &mut rng), random_vec(n, &mut rng));
    let (g, g_obs) = (random_vec(12, &mut rng), random_vec(12, &mut rng));
    let amg = AmgHierarchy::setup(&assemble_lumped_schur(&q, &d).unwrap(), &AmgOptions::default()).unwrap();
    let qdiag_inv: Vec<f64> = q.diagonal().iter().map(|v| 1.0 / v).collect();
    let solver = DirectSolver::new(&q, &d).unwrap();
    for beta in [0.1, 1.0] {
        let (dm, _) = solver.step(&j, &m, &m_ref, &g, &g_obs, beta).unwrap();
        let op = SaddleOperator::new(&q, &d, Some(&j), beta).unwrap();
        let b = assemble_gn_rhs(&m, &m_ref, &g, &g_obs, &j, &d, beta).unwrap();
        let opts = MinresOptions::new(1e-7, 2 * op.dim());
        let w = WoodburyPreconditioner::build(&qdiag_inv, &amg, &j, beta).unwrap();
        let (dw, rw) = minres_step_woodbury(&op, &w, &b, opts).unwrap();
        let (dl, rl) = minres_step_laplace(&op, &LaplacePreconditioner::new(&qdiag_inv, &amg), &b, opts).unwrap();
        assert!(rw.converged && rl.converged);
        assert!(rel_diff(&dw, &dm) < 1e-5, "beta {beta}: {:e}", rel_diff(&dw, &dm));
        assert!(rel_diff(&dl, &dm) < 1e-5, "beta {beta}: {:e}", rel_diff(&dl, &dm));
    }
}

#[test]
fn woodbury_needs_fewer_iterations_than_laplace_on_ert() {
    let problem = ert_problem(17, false);
    let mut counts = Vec::new();
    for algorithm in [Algorithm::WoodburyMinres, Algorithm::LaplaceMinres] {
        let config = GnConfig { algorithm, max_outer_steps: 1, ..GnConfig::default() };
        let (_, report) = gauss_newton(&problem, &config).unwrap();
        assert!(report.steps[0].converged);
        counts.push(report.steps[0].minres_iters.unwrap());
    }
    assert!(counts[0] < counts[1], "{counts:?}");
}

#[test]
fn gauss_newton_reports_every_step() {
    let problem = ert_problem(17, false);
    let (_, report) = gauss_newton(&problem, &GnConfig::default()).unwrap();
    assert_eq!(report.steps.len(), 2);
    assert!(report.steps.iter().all(|s| s.converged && s.minres_iters.is_some()));
    assert!(report.steps[1].misfit < report.steps[0].misfit);
    assert!(report.final_misfit < report.steps[1].misfit);
}

#[test]
fn gauss_newton_rejects_bad_config() {
    let problem = ert_problem(17, true);
    for config in [
        GnConfig { beta: 0.0, ..GnConfig::default() },
        GnConfig { beta: f64::NAN, ..GnConfig::default() },
        GnConfig { max_outer_steps: 0, ..GnConfig::default() },
        GnConfig { minres_tol: -1.0, ..GnConfig::default() },
    ] {
        assert!(matches!(gauss_newton(&problem, &config), Err(Error::Parameter(_))));
    }
}

#[test]
fn algorithm_names_round_trip() {
    for a in [Algorithm::Direct, Algorithm::WoodburyMinres, Algorithm::LaplaceMinres] {
        assert_eq!(a.to_string().parse::<Algorithm>().unwrap(), a);
    }
    assert!("cg".parse::<Algorithm>().is_err());
}
