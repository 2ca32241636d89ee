use crate::error::{dim_check, Error, Result};
use crate::linalg::{axpy, dot, norm2};

/// Stopping parameters for [`minres`].
#[derive(Debug, Clone, Copy)]
pub struct MinresOptions {
    /// Relative Euclidean tolerance `‖b - A x‖₂ ≤ tol ‖b‖₂`.
    pub tol: f64,
    pub max_iter: usize,
}

impl MinresOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter }
    }
}

/// Convergence history of one MINRES run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MinresReport {
    pub iterations: usize,
    /// `‖r_k‖₂ / ‖b‖₂` of the recurred residual, starting with `k = 0`.
    pub relative_residuals: Vec<f64>,
    /// `‖r_k‖_{P⁻¹} / ‖r_0‖_{P⁻¹}`, the quantity MINRES minimizes; non-increasing.
    pub preconditioned_residuals: Vec<f64>,
    /// True residual `‖b - A x‖₂ / ‖b‖₂` of the returned iterate.
    pub true_relative_residual: f64,
    pub converged: bool,
}

/// Preconditioned MINRES for a symmetric operator and an SPD preconditioner.
///
/// `apply_a(x, y)` writes `y = A x`, `apply_pinv(r, z)` writes `z = P⁻¹ r`. The
/// iteration minimizes the `P⁻¹`-norm of the residual over the preconditioned Krylov
/// space; the stopping test uses the Euclidean norm of the residual. The residual
/// vector is carried along by recurrence; once it passes the test the true residual is
/// recomputed, and iteration continues if that exceeds `10 tol`.
///
/// Reaching `max_iter` is not an error: the last iterate is returned with
/// `converged = false`.
pub fn minres<A, P>(
    apply_a: A,
    apply_pinv: P,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: MinresOptions,
) -> Result<(Vec<f64>, MinresReport)>
where
    A: Fn(&[f64], &mut [f64]),
    P: Fn(&[f64], &mut [f64]),
{
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!("MINRES tolerance must be positive, got {}", opts.tol)));
    }
    let n = b.len();
    let mut x = match x0 {
        Some(x0) => {
            dim_check("MINRES initial guess", n, x0.len())?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut report = MinresReport::default();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        report.relative_residuals.push(0.0);
        report.preconditioned_residuals.push(0.0);
        report.converged = true;
        return Ok((x, report));
    }

    let mut tmp = vec![0.0; n];
    apply_a(&x, &mut tmp);
    let mut r: Vec<f64> = b.iter().zip(&tmp).map(|(bi, ai)| bi - ai).collect();
    let r0_norm = norm2(&r);
    report.relative_residuals.push(r0_norm / b_norm);
    report.preconditioned_residuals.push(1.0);
    if r0_norm <= opts.tol * b_norm {
        report.true_relative_residual = r0_norm / b_norm;
        report.converged = true;
        return Ok((x, report));
    }

    // Lanczos vectors: v (unpreconditioned), z = P⁻¹ v.
    let mut v_prev = vec![0.0; n];
    let mut v = r.clone();
    let mut z = vec![0.0; n];
    apply_pinv(&v, &mut z);
    let gamma_sq = dot(&z, &v);
    if !(gamma_sq > 0.0) {
        return Err(Error::Breakdown {
            iteration: 0,
            reason: format!("preconditioned residual norm² = {gamma_sq:e} with nonzero residual"),
        });
    }
    let mut gamma = gamma_sq.sqrt();
    let mut gamma_prev = 1.0;
    let eta0 = gamma;
    let mut eta = gamma;
    let (mut s_prev, mut s) = (0.0, 0.0);
    let (mut c_prev, mut c) = (1.0, 1.0);
    // Search directions w and their images A w.
    let mut w_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut aw_prev = vec![0.0; n];
    let mut aw = vec![0.0; n];
    let mut az = vec![0.0; n];
    let mut z_next = vec![0.0; n];

    for iter in 1..=opts.max_iter {
        z.iter_mut().for_each(|zi| *zi /= gamma);
        apply_a(&z, &mut az);
        let delta = dot(&az, &z);
        // v_next = A z - (delta/gamma) v - (gamma/gamma_prev) v_prev
        let mut v_next = az.clone();
        axpy(-delta / gamma, &v, &mut v_next);
        axpy(-gamma / gamma_prev, &v_prev, &mut v_next);
        apply_pinv(&v_next, &mut z_next);
        let gamma_next_sq = dot(&z_next, &v_next);
        // A Lanczos vector at round-off level relative to A z means the Krylov space
        // is exhausted.
        let exhausted = norm2(&v_next) <= 16.0 * f64::EPSILON * norm2(&az)
            || gamma_next_sq.abs() <= 16.0 * f64::EPSILON * norm2(&z_next) * norm2(&v_next);
        if !exhausted && gamma_next_sq < 0.0 {
            return Err(Error::Breakdown {
                iteration: iter,
                reason: format!("preconditioner is not positive definite ({gamma_next_sq:e})"),
            });
        }
        let gamma_next = if exhausted { 0.0 } else { gamma_next_sq.sqrt() };

        let alpha0 = c * delta - c_prev * s * gamma;
        let alpha1 = alpha0.hypot(gamma_next);
        let alpha2 = s * delta + c_prev * c * gamma;
        let alpha3 = s_prev * gamma;
        if alpha1 == 0.0 {
            return Err(Error::Breakdown {
                iteration: iter,
                reason: "singular tridiagonal projection".into(),
            });
        }
        let c_next = alpha0 / alpha1;
        let s_next = gamma_next / alpha1;

        // w_next = (z - alpha3 w_prev - alpha2 w) / alpha1, same for A w.
        let mut w_next = z.clone();
        axpy(-alpha3, &w_prev, &mut w_next);
        axpy(-alpha2, &w, &mut w_next);
        w_next.iter_mut().for_each(|e| *e /= alpha1);
        let mut aw_next = az.clone();
        axpy(-alpha3, &aw_prev, &mut aw_next);
        axpy(-alpha2, &aw, &mut aw_next);
        aw_next.iter_mut().for_each(|e| *e /= alpha1);

        let step = c_next * eta;
        axpy(step, &w_next, &mut x);
        axpy(-step, &aw_next, &mut r);
        eta = -s_next * eta;

        report.iterations = iter;
        let mut rel = norm2(&r) / b_norm;
        report.preconditioned_residuals.push(eta.abs() / eta0);

        let happy = gamma_next == 0.0;
        if rel <= opts.tol || happy {
            apply_a(&x, &mut tmp);
            r.iter_mut().zip(b.iter().zip(&tmp)).for_each(|(ri, (bi, ai))| *ri = bi - ai);
            let true_rel = norm2(&r) / b_norm;
            if true_rel <= 10.0 * opts.tol {
                report.relative_residuals.push(rel.min(true_rel));
                report.true_relative_residual = true_rel;
                report.converged = true;
                return Ok((x, report));
            }
            if happy {
                report.relative_residuals.push(true_rel);
                report.true_relative_residual = true_rel;
                return Ok((x, report));
            }
            // Recurrence drifted: continue from the true residual.
            rel = true_rel;
        }
        report.relative_residuals.push(rel);

        std::mem::swap(&mut v_prev, &mut v);
        v = v_next;
        std::mem::swap(&mut z, &mut z_next);
        w_prev = std::mem::replace(&mut w, w_next);
        aw_prev = std::mem::replace(&mut aw, aw_next);
        gamma_prev = gamma;
        gamma = gamma_next;
        s_prev = s;
        s = s_next;
        c_prev = c;
        c = c_next;
    }

    apply_a(&x, &mut tmp);
    let true_res: f64 = b.iter().zip(&tmp).map(|(bi, ai)| (bi - ai).powi(2)).sum::<f64>().sqrt();
    report.true_relative_residual = true_res / b_norm;
    report.converged = false;
    Ok((x, report))
}
