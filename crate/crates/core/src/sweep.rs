//! Spectral sweep: traces the matrix Cauchy transform along the real axis
//! and recovers the eigenvalue density by Stieltjes inversion.
//!
//! A sweep solves the fixed-point equation at `z = t + i eps` on a grid of
//! `t` values, marching outward from a center point in two phases and
//! warm-starting every solve from its inward neighbor. The scalar transform
//! is `H = tr(G) / d` and the density at `t` is `-Im H / pi`. The two
//! directions are independent warm-start chains and run concurrently when
//! the `parallel` feature is enabled.

use std::io;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::eta::EtaMap;
use crate::linalg::CMat;
use crate::par;
use crate::solver::{solve, InitialPoint, Problem, SolveResult, SolverConfig, SolverError};

/// CSV header for density curves.
pub const CURVE_CSV_HEADER: [&str; 7] = [
    "t",
    "density",
    "re_H",
    "im_H",
    "iterations",
    "residual",
    "positivity_ok",
];

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error("deformed solve did not converge within {max_iter} iterations")]
    MaxIterExceeded { max_iter: usize },
    #[error("invalid atomic measure: {0}")]
    InvalidMeasure(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error)]
pub enum CurveIoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad curve data: {0}")]
    Parse(String),
}

/// Grid and solver settings for one sweep.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub eta: EtaMap,
    pub t_min: f64,
    pub t_max: f64,
    /// Grid resolution.
    pub step: f64,
    /// Imaginary offset `eps` of the sweep line. The certified norm bound
    /// grows like `1/eps`, so very small offsets make solves expensive.
    pub im_offset: f64,
    /// Sweep origin; both phases march outward from here.
    pub center: f64,
    pub solver: SolverConfig,
}

impl SweepConfig {
    pub fn new(eta: EtaMap, t_min: f64, t_max: f64, step: f64) -> SweepConfig {
        SweepConfig {
            eta,
            t_min,
            t_max,
            step,
            im_offset: 1e-6,
            center: 0.0,
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if !(self.t_min < self.t_max) {
            return Err(SweepError::InvalidGrid(format!(
                "t_min {} must be below t_max {}",
                self.t_min, self.t_max
            )));
        }
        if !(self.step > 0.0) {
            return Err(SweepError::InvalidGrid(format!(
                "step {} must be positive",
                self.step
            )));
        }
        if !(self.im_offset > 0.0) {
            return Err(SweepError::InvalidGrid(format!(
                "im_offset {} must be positive",
                self.im_offset
            )));
        }
        Ok(())
    }
}

/// One grid point of a density curve.
#[derive(Clone, Debug, Serialize)]
pub struct DensityRow {
    pub t: f64,
    /// `-Im H / pi`; NaN when the solver failed at this point.
    pub density: f64,
    /// Scalar Cauchy transform `tr(G) / d`.
    pub re_h: f64,
    pub im_h: f64,
    pub iterations: usize,
    pub residual: f64,
    pub positivity_ok: bool,
}

/// Density curve rows, sorted ascending in `t`.
#[derive(Clone, Debug, Default)]
pub struct DensityCurve {
    pub rows: Vec<DensityRow>,
}

impl DensityCurve {
    /// Trapezoid integral of the density over the grid, skipping pairs that
    /// include a failed row.
    pub fn integrate(&self) -> f64 {
        let mut total = 0.0;
        for pair in self.rows.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.density.is_finite() && b.density.is_finite() {
                total += 0.5 * (a.density + b.density) * (b.t - a.t);
            }
        }
        total
    }

    /// Range of `t` where the density exceeds `floor`.
    pub fn support_estimate(&self, floor: f64) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &self.rows {
            if row.density.is_finite() && row.density > floor {
                lo = lo.min(row.t);
                hi = hi.max(row.t);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    pub fn worst_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn all_rows_ok(&self) -> bool {
        self.rows.iter().all(|r| r.positivity_ok)
    }

    /// Writes the curve in the fixed CSV format, floats at full double
    /// precision (17 significant digits).
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), CurveIoError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CURVE_CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(&[
                fmt_f64(row.t),
                fmt_f64(row.density),
                fmt_f64(row.re_h),
                fmt_f64(row.im_h),
                row.iterations.to_string(),
                fmt_f64(row.residual),
                row.positivity_ok.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<DensityCurve, CurveIoError> {
        let mut reader = csv::Reader::from_reader(input);
        {
            let headers = reader.headers()?;
            if headers != CURVE_CSV_HEADER.as_slice() {
                return Err(CurveIoError::Parse(format!(
                    "unexpected header {headers:?}"
                )));
            }
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != CURVE_CSV_HEADER.len() {
                return Err(CurveIoError::Parse(format!(
                    "row has {} fields, expected {}",
                    record.len(),
                    CURVE_CSV_HEADER.len()
                )));
            }
            rows.push(DensityRow {
                t: parse_f64(&record[0])?,
                density: parse_f64(&record[1])?,
                re_h: parse_f64(&record[2])?,
                im_h: parse_f64(&record[3])?,
                iterations: record[4]
                    .parse()
                    .map_err(|e| CurveIoError::Parse(format!("iterations: {e}")))?,
                residual: parse_f64(&record[5])?,
                positivity_ok: record[6]
                    .parse()
                    .map_err(|e| CurveIoError::Parse(format!("positivity_ok: {e}")))?,
            });
        }
        let mut sorted = true;
        for pair in rows.windows(2) {
            if !(pair[0].t < pair[1].t) {
                sorted = false;
            }
        }
        if !sorted {
            return Err(CurveIoError::Parse("rows are not sorted by t".into()));
        }
        Ok(DensityCurve { rows })
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64, CurveIoError> {
    s.parse()
        .map_err(|e| CurveIoError::Parse(format!("{s:?}: {e}")))
}

/// Solves the spectral equation at one point `z` in the upper half-plane and
/// returns `G = -i W` together with the full solve result. `warm_start`, when
/// given, replaces the configured initial point.
pub fn solve_at(
    z: Complex64,
    eta: &EtaMap,
    solver_config: &SolverConfig,
    warm_start: Option<&CMat>,
) -> Result<(CMat, SolveResult), SolverError> {
    let problem = Problem::from_z(z, eta.clone())?;
    let mut cfg = solver_config.clone();
    if let Some(w) = warm_start {
        cfg.initial = InitialPoint::Matrix(w.clone());
    }
    let result = solve(&problem, &cfg)?;
    let g = result.w.scale(Complex64::new(0.0, -1.0));
    Ok((g, result))
}

/// Runs the two-phase outward sweep and assembles the density curve.
///
/// Rows where the solver fails to converge are emitted with `density = NaN`
/// and `positivity_ok = false`; the sweep continues past them.
pub fn sweep(config: &SweepConfig) -> Result<DensityCurve, SweepError> {
    config.validate()?;
    let eps = config.im_offset;
    let z_center = Complex64::new(config.center, eps);
    let (g0, r0) = solve_at(z_center, &config.eta, &config.solver, None)?;
    let warm = r0.converged.then(|| r0.w.clone());

    let (pos, neg) = par::join(
        || march(config, 1.0, warm.clone()),
        || march(config, -1.0, warm.clone()),
    );
    let (pos, neg) = (pos?, neg?);

    let mut rows = Vec::with_capacity(pos.len() + neg.len() + 1);
    rows.extend(neg.into_iter().rev());
    if in_grid(config, config.center) {
        rows.push(make_row(config.center, &g0, &r0));
    }
    rows.extend(pos);
    debug_assert!(rows.windows(2).all(|p| p[0].t < p[1].t));
    Ok(DensityCurve { rows })
}

fn grid_slack(config: &SweepConfig) -> f64 {
    config.step * 1e-6
}

fn in_grid(config: &SweepConfig, t: f64) -> bool {
    let slack = grid_slack(config);
    t >= config.t_min - slack && t <= config.t_max + slack
}

/// One directional warm-start chain (`dir = +-1`), center excluded.
fn march(
    config: &SweepConfig,
    dir: f64,
    mut warm: Option<CMat>,
) -> Result<Vec<DensityRow>, SweepError> {
    let slack = grid_slack(config);
    let eps = config.im_offset;
    let mut rows = Vec::new();
    let mut n = 1u64;
    loop {
        let t = config.center + dir * config.step * n as f64;
        if t > config.t_max + slack || t < config.t_min - slack {
            break;
        }
        let z = Complex64::new(t, eps);
        let (g, res) = solve_at(z, &config.eta, &config.solver, warm.as_ref())?;
        if res.converged {
            warm = Some(res.w.clone());
        }
        if in_grid(config, t) {
            rows.push(make_row(t, &g, &res));
        }
        n += 1;
    }
    Ok(rows)
}

fn make_row(t: f64, g: &CMat, res: &SolveResult) -> DensityRow {
    let d = g.dim() as f64;
    let h = g.trace() / d;
    let density = if res.converged {
        -h.im / std::f64::consts::PI
    } else {
        f64::NAN
    };
    // The certified root has Im H <= 0; a converged row violating that is
    // flagged rather than silently kept.
    let positivity_ok =
        res.converged && !res.wrong_root && density.is_finite() && density >= -1e-10;
    DensityRow {
        t,
        density,
        re_h: h.re,
        im_h: h.im,
        iterations: res.iterations,
        residual: res.residual,
        positivity_ok,
    }
}

/// Solves the scalar deformed equation `g = G1(z - sigma2 * g)` by plain
/// iteration from `g0 = -i`, where `G1(w) = sum_k weight_k / (w - a_k)` is
/// the Cauchy transform of an atomic measure. Returns the root with
/// `Im g < 0` (asserted).
pub fn solve_deformed_scalar(
    z: Complex64,
    sigma2: f64,
    atoms: &[(f64, f64)],
    tol: f64,
    max_iter: usize,
) -> Result<Complex64, SweepError> {
    if !(z.im > 0.0) {
        return Err(SweepError::Solver(SolverError::ImZNotPositive(z.im)));
    }
    if atoms.is_empty() {
        return Err(SweepError::InvalidMeasure("no atoms".into()));
    }
    if sigma2 < 0.0 {
        return Err(SweepError::InvalidMeasure(format!(
            "sigma2 {sigma2} must be nonnegative"
        )));
    }
    let mut total = 0.0;
    for &(weight, _) in atoms {
        if !(weight > 0.0) {
            return Err(SweepError::InvalidMeasure(format!(
                "atom weight {weight} must be positive"
            )));
        }
        total += weight;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(SweepError::InvalidMeasure(format!(
            "atom weights sum to {total}, expected 1"
        )));
    }

    let g1 = |w: Complex64| -> Complex64 {
        atoms
            .iter()
            .map(|&(weight, pos)| Complex64::new(weight, 0.0) / (w - pos))
            .sum()
    };
    let mut g = Complex64::new(0.0, -1.0);
    for _ in 0..max_iter {
        let next = g1(z - g * sigma2);
        if (next - g).norm() <= tol {
            assert!(
                next.im < 0.0,
                "deformed solution left the lower half-plane: {next}"
            );
            return Ok(next);
        }
        g = next;
    }
    Err(SweepError::MaxIterExceeded { max_iter })
}
