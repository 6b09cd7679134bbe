//! Solvers for the positivity-constrained quadratic matrix equation
//! `V W + eta(W) W = I`, where `Re V` is positive definite and `eta` is a
//! positivity-preserving covariance map.
//!
//! The unique solution with `Re W > 0` is the fixed point of
//! `F(W) = [V + eta(W)]^{-1}`, reachable by plain iteration from any
//! starting point in the strict right half-plane. Close to the real axis the
//! contraction constant approaches one, so a damped (averaged) variant and a
//! Newton stage are provided; Newton alone can land on spurious roots
//! outside the half-plane, which the positivity certificate detects.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::eta::{kron, unvec_col, vec_col, EtaError, EtaMap};
use crate::linalg::{CMat, LinalgError};

/// Absolute slack used when comparing measured quantities against the
/// certified bounds.
pub const CERT_SLACK: f64 = 1e-8;

/// Relative pivot floor below which the Newton Jacobian counts as singular.
pub const NEWTON_PIVOT_RTOL: f64 = 1e-12;

/// Newton steps allowed inside the hybrid method before falling back to the
/// averaged iteration. Quadratic convergence needs tens of steps at most.
const HYBRID_NEWTON_CAP: usize = 1000;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("V is not strictly in the right half-plane: lambda_min(Re V) = {lambda_min:.3e}")]
    NotStrictlyPositive { lambda_min: f64 },
    #[error("Im z must be positive, got {0:.3e}")]
    ImZNotPositive(f64),
    #[error("eta dimension {eta} does not match V dimension {v}")]
    DimensionMismatch { eta: usize, v: usize },
    #[error("Newton Jacobian is numerically singular")]
    SingularJacobian,
    #[error("Newton requires a linear eta representation")]
    NotLinear,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Eta(#[from] EtaError),
}

/// A solve instance: `V` in the strict right half-plane plus a covariance
/// map of matching dimension. The margin `lambda_min(Re V)` is checked and
/// stored at construction.
#[derive(Clone, Debug)]
pub struct Problem {
    v: CMat,
    eta: EtaMap,
    re_v_lambda_min: f64,
}

impl Problem {
    pub fn new(v: CMat, eta: EtaMap) -> Result<Problem, SolverError> {
        if eta.dim() != v.dim() {
            return Err(SolverError::DimensionMismatch {
                eta: eta.dim(),
                v: v.dim(),
            });
        }
        let lambda_min = v.re_part().lambda_min();
        if lambda_min <= 0.0 {
            return Err(SolverError::NotStrictlyPositive { lambda_min });
        }
        Ok(Problem {
            v,
            eta,
            re_v_lambda_min: lambda_min,
        })
    }

    /// Instance for the spectral equation at a point `z` in the upper
    /// half-plane: `V = -i z I`.
    pub fn from_z(z: Complex64, eta: EtaMap) -> Result<Problem, SolverError> {
        if !(z.im > 0.0) {
            return Err(SolverError::ImZNotPositive(z.im));
        }
        let dim = eta.dim();
        let v = CMat::scalar(dim, Complex64::new(z.im, -z.re));
        Problem::new(v, eta)
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn v(&self) -> &CMat {
        &self.v
    }

    pub fn eta(&self) -> &EtaMap {
        &self.eta
    }

    /// `lambda_min(Re V)`, the half-plane margin of `V`.
    pub fn re_v_margin(&self) -> f64 {
        self.re_v_lambda_min
    }

    /// `||(Re V)^{-1}|| = 1 / lambda_min(Re V)`, the certified norm bound.
    pub fn norm_bound(&self) -> f64 {
        1.0 / self.re_v_lambda_min
    }

    /// `V W + eta(W) W - I`.
    pub fn residual_matrix(&self, w: &CMat) -> CMat {
        let vw = &self.v * w;
        let ew = &self.eta.eval(w) * w;
        &(&vw + &ew) - &CMat::identity(self.dim())
    }

    /// Frobenius norm of the residual.
    pub fn residual(&self, w: &CMat) -> f64 {
        self.residual_matrix(w).fro_norm()
    }

    /// `F(W) = [V + eta(W)]^{-1}`.
    ///
    /// For `W` with `Re W >= 0` this is always well defined, with
    /// `||F(W)|| <= ||(Re V)^{-1}||` and `Re F(W) >= 0`; both are checked in
    /// debug builds.
    pub fn apply_f(&self, w: &CMat) -> Result<CMat, SolverError> {
        let out = self.apply_f_raw(w)?;
        #[cfg(debug_assertions)]
        {
            if w.re_part().lambda_min() >= -1e-10 {
                let bound = self.norm_bound();
                let norm = out.op_norm();
                debug_assert!(
                    norm <= bound * (1.0 + 1e-12) + 1e-9,
                    "||F(W)|| = {norm} exceeds certified bound {bound}"
                );
                let lam = out.re_part().lambda_min();
                debug_assert!(lam >= -1e-10, "Re F(W) lost positivity: lambda_min {lam}");
            }
        }
        Ok(out)
    }

    fn apply_f_raw(&self, w: &CMat) -> Result<CMat, SolverError> {
        let k = &self.v + &self.eta.eval(w);
        Ok(k.inverse()?)
    }

    /// Theorem-style certificate for a candidate solution: the norm bound
    /// `||W|| <= ||(Re V)^{-1}||` and the interior bound
    /// `Re W >= 1/(m^2 ||(Re V)^{-1}||) I` with
    /// `m = ||V|| + sup ||eta(W)||` over the certified ball.
    pub fn certify(&self, w: &CMat) -> PositivityCertificate {
        let norm_bound = self.norm_bound();
        let m = self.v.op_norm() + self.eta.bound(norm_bound);
        let re_lower_bound = 1.0 / (m * m * norm_bound);
        let measured_norm = w.op_norm();
        let measured_lambda_min_re = w.re_part().lambda_min();
        PositivityCertificate {
            norm_bound,
            re_lower_bound,
            m,
            norm_holds: measured_norm <= norm_bound + CERT_SLACK,
            re_holds: measured_lambda_min_re >= re_lower_bound - CERT_SLACK,
            measured_norm,
            measured_lambda_min_re,
        }
    }
}

/// Iteration scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// `W <- F(W)`.
    Plain,
    /// `W <- (1 - theta) W + theta F(W)`.
    Averaged,
    /// Full-matrix Newton on the residual; linear `eta` only.
    Newton,
    /// Averaged until the residual drops below `newton_switch_tol`, then
    /// Newton; falls back to averaged if Newton misbehaves.
    Hybrid,
}

/// Starting point of the iteration.
#[derive(Clone, Debug)]
pub enum InitialPoint {
    /// The identity matrix; always in the strict right half-plane.
    Identity,
    Matrix(CMat),
}

impl InitialPoint {
    pub fn resolve(&self, dim: usize) -> CMat {
        match self {
            InitialPoint::Identity => CMat::identity(dim),
            InitialPoint::Matrix(m) => {
                assert_eq!(m.dim(), dim, "initial point dimension mismatch");
                m.clone()
            }
        }
    }
}

/// Named starting points usable from configs and the CLI.
///
/// `"identity"` works at any dimension. `"toeplitz3-center"` is the 3x3
/// matrix `i * [[1-0.1i, 0, 1], [0, 1-0.1i, 0], [1, 0, 1-0.1i]]`, the
/// customary center start for the block-Toeplitz sweep; started from here
/// the contraction finds the certified root while pure Newton at very small
/// `Im z` converges to a spurious one.
pub fn named_initial(name: &str, dim: usize) -> Option<CMat> {
    match name {
        "identity" | "default" => Some(CMat::identity(dim)),
        "toeplitz3-center" if dim == 3 => {
            let a = Complex64::new(0.1, 1.0); // i * (1 - 0.1i)
            let b = Complex64::new(0.0, 1.0); // i * 1
            let zero = Complex64::new(0.0, 0.0);
            Some(
                CMat::from_rows(&[
                    vec![a, zero, b],
                    vec![zero, a, zero],
                    vec![b, zero, a],
                ])
                .expect("static shape"),
            )
        }
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub method: Method,
    /// Averaging weight in `(0, 1]`; `1` is the plain iteration.
    pub theta: f64,
    /// Frobenius residual tolerance; convergence additionally requires the
    /// last update step to be at most this large.
    pub tol: f64,
    pub max_iter: usize,
    /// Hybrid only: residual at which the Newton stage takes over.
    pub newton_switch_tol: f64,
    pub initial: InitialPoint,
    /// Record the residual trace for diagnostics.
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Hybrid,
            theta: 0.5,
            tol: 1e-12,
            max_iter: 200_000,
            newton_switch_tol: 1e-3,
            initial: InitialPoint::Identity,
            record_trace: false,
        }
    }
}

/// Certified bounds versus measured values for a candidate solution.
#[derive(Clone, Debug, Serialize)]
pub struct PositivityCertificate {
    pub norm_bound: f64,
    pub re_lower_bound: f64,
    pub m: f64,
    pub norm_holds: bool,
    pub re_holds: bool,
    pub measured_norm: f64,
    pub measured_lambda_min_re: f64,
}

impl PositivityCertificate {
    pub fn holds(&self) -> bool {
        self.norm_holds && self.re_holds
    }

    /// Both certified bounds hold and the solution sits strictly inside the
    /// half-plane. The strict interior test matters at very small
    /// `Im z`, where `re_lower_bound` collapses toward zero and the slack
    /// alone cannot separate boundary roots from certified ones.
    pub fn certified(&self) -> bool {
        self.holds() && self.measured_lambda_min_re > 0.0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveResult {
    pub w: CMat,
    /// `||V W + eta(W) W - I||_F`, recomputed independently of the loop.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub certificate: PositivityCertificate,
    pub method_used: Method,
    /// Converged to a root that fails the positivity certificate. Newton can
    /// do this; the contraction methods cannot.
    pub wrong_root: bool,
    /// Hybrid only: the Newton stage was abandoned and the averaged
    /// iteration finished the job.
    pub newton_fallback: bool,
    /// Plain-iteration diagnostic: consecutive iterates looked like a
    /// 2-cycle (`||W_{n+2} - W_n|| << ||W_{n+1} - W_n||`).
    pub oscillation_detected: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_trace: Option<Vec<f64>>,
}

/// Dispatches on `config.method`.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    match config.method {
        Method::Plain => solve_plain(problem, config),
        Method::Averaged => solve_averaged(problem, config),
        Method::Newton => solve_newton(problem, config),
        Method::Hybrid => solve_hybrid(problem, config),
    }
}

/// Plain fixed-point iteration `W <- F(W)`.
pub fn solve_plain(problem: &Problem, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    contraction_solve(problem, config, 1.0, Method::Plain)
}

/// Averaged iteration `W <- (1 - theta) W + theta F(W)`; same fixed points
/// as the plain map.
pub fn solve_averaged(
    problem: &Problem,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    contraction_solve(problem, config, config.theta, Method::Averaged)
}

fn contraction_solve(
    problem: &Problem,
    config: &SolverConfig,
    theta: f64,
    tag: Method,
) -> Result<SolveResult, SolverError> {
    let mut trace = config.record_trace.then(Vec::new);
    let w0 = config.initial.resolve(problem.dim());
    let out = contraction_loop(
        problem,
        w0,
        theta,
        config.tol,
        None,
        config.max_iter,
        trace.as_mut(),
    )?;
    Ok(finish(
        problem,
        out.w,
        out.iterations,
        out.converged,
        tag,
        false,
        out.oscillation,
        trace,
        config.tol,
    ))
}

/// Full-matrix Newton iteration on `R(W) = V W + eta(W) W - I`.
pub fn solve_newton(problem: &Problem, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    let l = problem
        .eta()
        .to_linear_tensor()
        .map_err(|_| SolverError::NotLinear)?;
    let mut trace = config.record_trace.then(Vec::new);
    let w0 = config.initial.resolve(problem.dim());
    let out = newton_loop(problem, w0, config.tol, config.max_iter, &l, trace.as_mut())?;
    Ok(finish(
        problem,
        out.w,
        out.iterations,
        out.converged,
        Method::Newton,
        false,
        false,
        trace,
        config.tol,
    ))
}

/// Averaged iteration until `newton_switch_tol`, then Newton to `tol`.
/// Falls back to the averaged iteration when Newton hits a singular
/// Jacobian, diverges, stalls, or converges to an uncertified root.
pub fn solve_hybrid(problem: &Problem, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    let l = problem
        .eta()
        .to_linear_tensor()
        .map_err(|_| SolverError::NotLinear)?;
    let mut trace = config.record_trace.then(Vec::new);
    let w0 = config.initial.resolve(problem.dim());
    let phase1 = contraction_loop(
        problem,
        w0,
        config.theta,
        config.tol,
        Some(config.newton_switch_tol),
        config.max_iter,
        trace.as_mut(),
    )?;
    if phase1.converged {
        // Degenerate configuration (switch tolerance at or below tol) or a
        // start that is already essentially converged.
        return Ok(finish(
            problem,
            phase1.w,
            phase1.iterations,
            true,
            Method::Hybrid,
            false,
            phase1.oscillation,
            trace,
            config.tol,
        ));
    }
    if !phase1.switched {
        // Budget exhausted before the switch point.
        return Ok(finish(
            problem,
            phase1.w,
            phase1.iterations,
            false,
            Method::Hybrid,
            false,
            phase1.oscillation,
            trace,
            config.tol,
        ));
    }

    let remaining = config.max_iter.saturating_sub(phase1.iterations);
    let newton_budget = remaining.min(HYBRID_NEWTON_CAP);
    let newton = newton_loop(
        problem,
        phase1.w.clone(),
        config.tol,
        newton_budget,
        &l,
        trace.as_mut(),
    );
    let mut spent = phase1.iterations;
    match newton {
        Ok(out) if out.converged => {
            spent += out.iterations;
            let candidate = finish(
                problem,
                out.w,
                spent,
                true,
                Method::Hybrid,
                false,
                phase1.oscillation,
                trace.clone(),
                config.tol,
            );
            if !candidate.wrong_root {
                return Ok(candidate);
            }
            log::debug!("hybrid Newton stage converged to an uncertified root; falling back");
        }
        Ok(out) => {
            spent += out.iterations;
            log::debug!("hybrid Newton stage stalled after {} steps", out.iterations);
        }
        Err(SolverError::SingularJacobian) => {
            log::debug!("hybrid Newton stage hit a singular Jacobian; falling back");
        }
        Err(e) => return Err(e),
    }

    // Resume the contraction from the trusted pre-Newton iterate.
    let budget = config.max_iter.saturating_sub(spent);
    let phase2 = contraction_loop(
        problem,
        phase1.w,
        config.theta,
        config.tol,
        None,
        budget,
        trace.as_mut(),
    )?;
    Ok(finish(
        problem,
        phase2.w,
        spent + phase2.iterations,
        phase2.converged,
        Method::Hybrid,
        true,
        phase1.oscillation || phase2.oscillation,
        trace,
        config.tol,
    ))
}

/// One Newton step `W - J^{-1} R(W)` with the residual Jacobian
/// `J = (I kron V) + (W^T kron I) L + (I kron eta(W))`.
pub fn newton_step(problem: &Problem, w: &CMat) -> Result<CMat, SolverError> {
    let l = problem
        .eta()
        .to_linear_tensor()
        .map_err(|_| SolverError::NotLinear)?;
    let eta_w = problem.eta().eval(w);
    let k = problem.v() + &eta_w;
    let resid = &(&k * w) - &CMat::identity(problem.dim());
    newton_update(problem, w, &eta_w, &resid, &l)
}

fn newton_update(
    problem: &Problem,
    w: &CMat,
    eta_w: &CMat,
    resid: &CMat,
    l: &CMat,
) -> Result<CMat, SolverError> {
    let d = problem.dim();
    let id = CMat::identity(d);
    let wt = CMat::from_fn(d, |i, j| w[(j, i)]);
    let j = &(&kron(&id, problem.v()) + &(&kron(&wt, &id) * l)) + &kron(&id, eta_w);
    let floor = NEWTON_PIVOT_RTOL * j.fro_norm();
    let lu = j.lu(floor).map_err(|_| SolverError::SingularJacobian)?;
    let delta = lu.solve_vec(&vec_col(resid));
    Ok(&*w - &unvec_col(d, &delta))
}

struct LoopOutcome {
    w: CMat,
    iterations: usize,
    converged: bool,
    switched: bool,
    oscillation: bool,
}

fn contraction_loop(
    problem: &Problem,
    w0: CMat,
    theta: f64,
    tol: f64,
    switch_tol: Option<f64>,
    max_iter: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<LoopOutcome, SolverError> {
    assert!(
        theta > 0.0 && theta <= 1.0,
        "averaging weight must be in (0, 1]"
    );
    let d = problem.dim();
    let id = CMat::identity(d);
    let keep = Complex64::new(1.0 - theta, 0.0);
    let mix = Complex64::new(theta, 0.0);

    let mut w = w0;
    let mut prev_w: Option<CMat> = None;
    let mut last_step = 0.0;
    let mut iterations = 0usize;
    let mut osc_run = 0usize;
    let mut oscillation = false;

    loop {
        let eta_w = problem.eta().eval(&w);
        // Same association as `Problem::residual`, so the final recheck
        // reproduces this value bit for bit.
        let residual = (&(&(problem.v() * &w) + &(&eta_w * &w)) - &id).fro_norm();
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(residual);
        }
        if residual <= tol && last_step <= tol {
            return Ok(LoopOutcome {
                w,
                iterations,
                converged: true,
                switched: false,
                oscillation,
            });
        }
        if let Some(st) = switch_tol {
            if residual <= st {
                return Ok(LoopOutcome {
                    w,
                    iterations,
                    converged: false,
                    switched: true,
                    oscillation,
                });
            }
        }
        if iterations >= max_iter {
            return Ok(LoopOutcome {
                w,
                iterations,
                converged: false,
                switched: false,
                oscillation,
            });
        }

        let fw = (problem.v() + &eta_w).inverse()?;
        let w_next = if theta == 1.0 {
            fw
        } else {
            &w.scale(keep) + &fw.scale(mix)
        };
        let step = (&w_next - &w).fro_norm();
        if let Some(pw) = &prev_w {
            // 2-cycle signature: the double step collapses while single
            // steps stay large.
            let double_step = (&w_next - pw).fro_norm();
            if last_step > 0.0 && double_step <= 0.01 * last_step {
                osc_run += 1;
                if osc_run >= 10 && !oscillation {
                    oscillation = true;
                    log::debug!(
                        "iteration exhibits 2-cycle-like behavior at step {iterations} \
                         (double step {double_step:.3e} vs step {last_step:.3e})"
                    );
                }
            } else {
                osc_run = 0;
            }
        }
        prev_w = Some(std::mem::replace(&mut w, w_next));
        last_step = step;
        iterations += 1;
    }
}

struct NewtonOutcome {
    w: CMat,
    iterations: usize,
    converged: bool,
}

fn newton_loop(
    problem: &Problem,
    w0: CMat,
    tol: f64,
    max_iter: usize,
    l: &CMat,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<NewtonOutcome, SolverError> {
    let d = problem.dim();
    let id = CMat::identity(d);
    let mut w = w0;
    let mut last_step = 0.0;
    let mut iterations = 0usize;
    loop {
        let eta_w = problem.eta().eval(&w);
        let resid_mat = &(&(problem.v() * &w) + &(&eta_w * &w)) - &id;
        let residual = resid_mat.fro_norm();
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(residual);
        }
        if !residual.is_finite() {
            return Ok(NewtonOutcome {
                w,
                iterations,
                converged: false,
            });
        }
        if residual <= tol && last_step <= tol {
            return Ok(NewtonOutcome {
                w,
                iterations,
                converged: true,
            });
        }
        if iterations >= max_iter {
            return Ok(NewtonOutcome {
                w,
                iterations,
                converged: false,
            });
        }
        let w_next = newton_update(problem, &w, &eta_w, &resid_mat, l)?;
        last_step = (&w_next - &w).fro_norm();
        w = w_next;
        iterations += 1;
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &Problem,
    w: CMat,
    iterations: usize,
    loop_converged: bool,
    method: Method,
    newton_fallback: bool,
    oscillation_detected: bool,
    residual_trace: Option<Vec<f64>>,
    tol: f64,
) -> SolveResult {
    let residual = problem.residual(&w);
    let converged = loop_converged && residual <= tol;
    let certificate = problem.certify(&w);
    let wrong_root = converged && !certificate.certified();
    SolveResult {
        w,
        residual,
        iterations,
        converged,
        certificate,
        method_used: method,
        wrong_root,
        newton_fallback,
        oscillation_detected,
        residual_trace,
    }
}
