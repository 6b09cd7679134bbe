//! The covariance map `eta`: a positivity-preserving analytic map on the
//! strict right half-plane of `d x d` matrices.
//!
//! Four concrete representations are supported:
//!
//! * **Kraus**: `eta(W) = sum_i A_i W A_i*`. Positivity preservation is
//!   structural, no runtime check needed.
//! * **Linear tensor**: a `d^2 x d^2` matrix `L` acting on column-stacked
//!   `vec(W)`. Checked probabilistically for positivity preservation at
//!   load time, with a Choi-matrix diagnostic on the side.
//! * **Toeplitz3**: the built-in 3x3 block-Toeplitz covariance,
//!   `eta(M) = (M + K_B M K_B + K_C M K_C) / 3` with the block-occupancy
//!   matrices `K_B = [[0,1,0],[1,0,1],[0,1,0]]` and
//!   `K_C = [[0,0,1],[0,0,0],[1,0,0]]`. On the structured input pattern
//!   `[[f, 0, h], [0, g, 0], [h, 0, f]]` this is exactly
//!   `(1/3) [[2f+g, 0, g+2h], [0, 2f+g+2h, 0], [g+2h, 0, 2f+g]]`; inputs
//!   off that pattern trigger a deviation warning and fall through to the
//!   Kraus action, the map's canonical completely positive extension.
//! * **Callback**: an arbitrary evaluator declared analytic and
//!   positivity-preserving by the caller, together with a norm bound
//!   function. The solver treats it as a black box; Newton is unavailable.
//!
//! The column-stacking convention is fixed crate-wide:
//! `vec(A X B) = (B^T kron A) vec(X)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{CMat, HermMat, LinalgError};
use crate::rng::{stream_rng, uniform};
use crate::sampling;

/// Margin below which a sampled `lambda_min(Re eta(W))` counts as a
/// positivity violation.
pub const POSITIVITY_MARGIN: f64 = -1e-10;

/// Magnitude at which off-pattern input to the Toeplitz3 map triggers a
/// pattern-deviation warning.
pub const PATTERN_WARN_TOL: f64 = 1e-8;

/// Trials used when validating a map at load time.
const LOAD_CHECK_TRIALS: usize = 64;
const LOAD_CHECK_SEED: u64 = 0x07a3_11c7;

#[derive(Debug, Error)]
pub enum EtaError {
    #[error("map has no linear-tensor form (callback representation)")]
    NotLinear,
    #[error("invalid eta spec: {0}")]
    Spec(String),
    #[error("positivity-preservation check failed: worst margin {worst_margin:.3e}")]
    NotPositivityPreserving { worst_margin: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

type EvalFn = dyn Fn(&CMat) -> CMat + Send + Sync;
type BoundFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Repr {
    Kraus(Vec<CMat>),
    LinearTensor(CMat),
    Toeplitz3,
    Callback {
        eval: Arc<EvalFn>,
        bound: Arc<BoundFn>,
    },
}

/// A covariance map together with its dimension.
///
/// Immutable after construction and cheap to clone; `eval` is pure, so maps
/// can be shared freely across threads.
#[derive(Clone)]
pub struct EtaMap {
    dim: usize,
    repr: Repr,
}

impl fmt::Debug for EtaMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Kraus(ops) => write!(f, "EtaMap::Kraus(dim={}, k={})", self.dim, ops.len()),
            Repr::LinearTensor(_) => write!(f, "EtaMap::LinearTensor(dim={})", self.dim),
            Repr::Toeplitz3 => write!(f, "EtaMap::Toeplitz3"),
            Repr::Callback { .. } => write!(f, "EtaMap::Callback(dim={})", self.dim),
        }
    }
}

impl EtaMap {
    /// `eta(W) = sum_i A_i W A_i*`. Positivity-preserving by construction.
    pub fn kraus(dim: usize, operators: Vec<CMat>) -> Result<EtaMap, EtaError> {
        for (i, a) in operators.iter().enumerate() {
            if a.dim() != dim {
                return Err(EtaError::Spec(format!(
                    "Kraus operator {} has dimension {}, expected {}",
                    i,
                    a.dim(),
                    dim
                )));
            }
        }
        Ok(EtaMap {
            dim,
            repr: Repr::Kraus(operators),
        })
    }

    /// The zero map (empty Kraus family).
    pub fn zero(dim: usize) -> EtaMap {
        EtaMap {
            dim,
            repr: Repr::Kraus(Vec::new()),
        }
    }

    /// Scalar `eta(w) = w`, the semicircle covariance.
    pub fn scalar_semicircle() -> EtaMap {
        EtaMap {
            dim: 1,
            repr: Repr::Kraus(vec![CMat::identity(1)]),
        }
    }

    /// Linear map given by its `d^2 x d^2` tensor on column-stacked input.
    ///
    /// No positivity check is run here; use
    /// [`EtaMap::check_positivity_preserving`] or load through
    /// [`EtaMap::from_spec`], which rejects failing maps.
    pub fn linear_tensor(dim: usize, tensor: CMat) -> Result<EtaMap, EtaError> {
        if tensor.dim() != dim * dim {
            return Err(EtaError::Spec(format!(
                "linear tensor has dimension {}, expected {}",
                tensor.dim(),
                dim * dim
            )));
        }
        Ok(EtaMap {
            dim,
            repr: Repr::LinearTensor(tensor),
        })
    }

    /// The built-in 3x3 block-Toeplitz covariance map.
    pub fn toeplitz3() -> EtaMap {
        EtaMap {
            dim: 3,
            repr: Repr::Toeplitz3,
        }
    }

    /// Black-box analytic map declared positivity-preserving by the caller,
    /// with `bound(r) >= sup { ||eta(W)|| : Re W >= 0, ||W|| <= r }`.
    ///
    /// The declaration is verified by sampling; maps that fail are rejected.
    pub fn callback(
        dim: usize,
        eval: Arc<EvalFn>,
        bound: Arc<BoundFn>,
    ) -> Result<EtaMap, EtaError> {
        let map = EtaMap {
            dim,
            repr: Repr::Callback { eval, bound },
        };
        let report = map.check_positivity_preserving(LOAD_CHECK_TRIALS, LOAD_CHECK_SEED);
        if !report.pass {
            return Err(EtaError::NotPositivityPreserving {
                worst_margin: report.worst_margin,
            });
        }
        Ok(map)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True for representations with an exact linear-tensor form.
    pub fn is_linear(&self) -> bool {
        !matches!(self.repr, Repr::Callback { .. })
    }

    /// Applies the map.
    pub fn eval(&self, w: &CMat) -> CMat {
        assert_eq!(w.dim(), self.dim, "eta input dimension mismatch");
        match &self.repr {
            Repr::Kraus(ops) => {
                let mut out = CMat::zeros(self.dim);
                for a in ops {
                    out = &out + &(&(a * w) * &a.adjoint());
                }
                out
            }
            Repr::LinearTensor(l) => unvec_col(self.dim, &l.mul_vec(&vec_col(w))),
            Repr::Toeplitz3 => toeplitz3_eval(w),
            Repr::Callback { eval, .. } => {
                let out = eval(w);
                assert_eq!(out.dim(), self.dim, "callback output dimension mismatch");
                out
            }
        }
    }

    /// The `d^2 x d^2` matrix `L` with `vec(eta(W)) = L vec(W)`.
    pub fn to_linear_tensor(&self) -> Result<CMat, EtaError> {
        match &self.repr {
            Repr::Kraus(ops) => {
                let d2 = self.dim * self.dim;
                let mut l = CMat::zeros(d2);
                for a in ops {
                    // vec(A W A*) = (conj(A) kron A) vec(W)
                    let conj_a = CMat::from_fn(self.dim, |i, j| a[(i, j)].conj());
                    l = &l + &kron(&conj_a, a);
                }
                Ok(l)
            }
            Repr::LinearTensor(l) => Ok(l.clone()),
            Repr::Toeplitz3 => {
                let mut l = CMat::zeros(9);
                for a in toeplitz3_kraus() {
                    // Real operators: conj(A) = A.
                    l = &l + &kron(&a, &a);
                }
                Ok(l)
            }
            Repr::Callback { .. } => Err(EtaError::NotLinear),
        }
    }

    /// Samples `trials` random `W` with `Re W >= eps I` (`eps` log-uniform in
    /// `[1e-6, 1]`) and reports the worst `lambda_min(Re eta(W))` seen.
    ///
    /// A failing report is an outcome, not an error; construction paths that
    /// must reject bad maps act on `report.pass`.
    pub fn check_positivity_preserving(&self, trials: usize, seed: u64) -> PositivityReport {
        assert!(trials >= 1, "at least one trial required");
        let mut worst = f64::INFINITY;
        for trial in 0..trials {
            let mut rng = stream_rng(seed, trial as u64);
            let eps = 1e-6 * 1e6_f64.powf(uniform(&mut rng));
            let w = sampling::right_half_plane(&mut rng, self.dim, eps);
            let margin = self.eval(&w).re_part().lambda_min();
            worst = worst.min(margin);
        }
        let choi_lambda_min = match &self.repr {
            Repr::LinearTensor(_) => self.choi_lambda_min(),
            _ => None,
        };
        PositivityReport {
            pass: worst >= POSITIVITY_MARGIN,
            trials,
            worst_margin: worst,
            choi_lambda_min,
        }
    }

    /// Smallest eigenvalue of the Choi matrix `sum_ij E_ij kron eta(E_ij)`,
    /// when that matrix is Hermitian. Advisory: nonnegative means completely
    /// positive, which is stronger than the solver needs.
    fn choi_lambda_min(&self) -> Option<f64> {
        let d = self.dim;
        let mut choi = CMat::zeros(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut unit = CMat::zeros(d);
                unit[(i, j)] = Complex64::new(1.0, 0.0);
                choi = &choi + &kron(&unit, &self.eval(&unit));
            }
        }
        HermMat::new(&choi).ok().map(|h| h.lambda_min())
    }

    /// Upper bound on `sup { ||eta(W)|| : W in A_+, ||W|| <= r }`.
    pub fn bound(&self, r: f64) -> f64 {
        assert!(r > 0.0, "radius must be positive");
        match &self.repr {
            Repr::Kraus(ops) => {
                let s: f64 = ops.iter().map(|a| a.op_norm().powi(2)).sum();
                r * s
            }
            Repr::LinearTensor(l) => r * (self.dim as f64).sqrt() * l.op_norm(),
            Repr::Toeplitz3 => {
                let s: f64 = toeplitz3_kraus().iter().map(|a| a.op_norm().powi(2)).sum();
                r * s
            }
            Repr::Callback { bound, .. } => bound(r),
        }
    }

    /// Rehydrates a map from its JSON spec, rejecting linear-tensor maps that
    /// fail the probabilistic positivity check.
    pub fn from_spec(spec: &EtaSpec) -> Result<EtaMap, EtaError> {
        if spec.dim == 0 {
            return Err(EtaError::Spec("dim must be at least 1".into()));
        }
        match spec.kind.as_str() {
            "kraus" => {
                let data = spec
                    .data
                    .as_ref()
                    .ok_or_else(|| EtaError::Spec("kraus spec requires data".into()))?;
                let ops: Vec<CMat> = serde_json::from_value(data.clone())
                    .map_err(|e| EtaError::Spec(format!("kraus data: {e}")))?;
                EtaMap::kraus(spec.dim, ops)
            }
            "linear_tensor" => {
                let data = spec
                    .data
                    .as_ref()
                    .ok_or_else(|| EtaError::Spec("linear_tensor spec requires data".into()))?;
                let tensor: CMat = serde_json::from_value(data.clone())
                    .map_err(|e| EtaError::Spec(format!("linear_tensor data: {e}")))?;
                let map = EtaMap::linear_tensor(spec.dim, tensor)?;
                let report = map.check_positivity_preserving(LOAD_CHECK_TRIALS, LOAD_CHECK_SEED);
                if !report.pass {
                    return Err(EtaError::NotPositivityPreserving {
                        worst_margin: report.worst_margin,
                    });
                }
                Ok(map)
            }
            "toeplitz3" => {
                if spec.dim != 3 {
                    return Err(EtaError::Spec(format!(
                        "toeplitz3 requires dim 3, got {}",
                        spec.dim
                    )));
                }
                Ok(EtaMap::toeplitz3())
            }
            other => Err(EtaError::Spec(format!("unknown eta kind {other:?}"))),
        }
    }

    /// Spec form for manifests; callbacks have none.
    pub fn to_spec(&self) -> Option<EtaSpec> {
        let (kind, data) = match &self.repr {
            Repr::Kraus(ops) => ("kraus", Some(serde_json::to_value(ops).unwrap())),
            Repr::LinearTensor(l) => ("linear_tensor", Some(serde_json::to_value(l).unwrap())),
            Repr::Toeplitz3 => ("toeplitz3", None),
            Repr::Callback { .. } => return None,
        };
        Some(EtaSpec {
            kind: kind.to_string(),
            dim: self.dim,
            data,
        })
    }
}

/// Outcome of the sampled positivity-preservation check.
#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub pass: bool,
    pub trials: usize,
    /// Worst `lambda_min(Re eta(W))` over all sampled `W`.
    pub worst_margin: f64,
    /// Choi-matrix smallest eigenvalue, reported for linear-tensor maps.
    pub choi_lambda_min: Option<f64>,
}

/// JSON description of a covariance map.
///
/// `kind` is one of `"kraus"`, `"linear_tensor"`, `"toeplitz3"`. Kraus data
/// is a list of `d x d` complex matrices, a linear tensor is one
/// `d^2 x d^2` matrix; complex entries are `[re, im]` pairs, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaSpec {
    pub kind: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<serde_json::Value>,
}

/// Column-stacked vectorization: `vec(W)[j*d + i] = W[i][j]`.
pub fn vec_col(w: &CMat) -> Vec<Complex64> {
    let d = w.dim();
    let mut v = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            v.push(w[(i, j)]);
        }
    }
    v
}

/// Inverse of [`vec_col`].
pub fn unvec_col(dim: usize, v: &[Complex64]) -> CMat {
    assert_eq!(v.len(), dim * dim, "vectorized length mismatch");
    CMat::from_fn(dim, |i, j| v[j * dim + i])
}

/// Kronecker product `a kron b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let da = a.dim();
    let db = b.dim();
    CMat::from_fn(da * db, |i, j| {
        a[(i / db, j / db)] * b[(i % db, j % db)]
    })
}

/// The three Kraus operators of the block-Toeplitz covariance, scaled so
/// that `eta(M) = sum_i A_i M A_i`. Each is `K / sqrt(3)` for a symmetric
/// 0/1 occupancy matrix `K`, so the family is selfadjoint.
fn toeplitz3_kraus() -> [CMat; 3] {
    let s = 1.0 / 3.0_f64.sqrt();
    let v = Complex64::new(s, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let k_a = CMat::scalar(3, v);
    let k_b = CMat::from_rows(&[
        vec![zero, v, zero],
        vec![v, zero, v],
        vec![zero, v, zero],
    ])
    .expect("static shape");
    let k_c = CMat::from_rows(&[
        vec![zero, zero, v],
        vec![zero, zero, zero],
        vec![v, zero, zero],
    ])
    .expect("static shape");
    [k_a, k_b, k_c]
}

fn toeplitz3_eval(w: &CMat) -> CMat {
    let f = w[(0, 0)];
    let h = w[(0, 2)];
    let deviation = w[(0, 1)]
        .norm()
        .max(w[(1, 0)].norm())
        .max(w[(1, 2)].norm())
        .max(w[(2, 1)].norm())
        .max((w[(2, 2)] - f).norm())
        .max((w[(2, 0)] - h).norm());
    if deviation > PATTERN_WARN_TOL {
        log::warn!(
            "toeplitz3 input deviates from its structured pattern by {deviation:.3e}"
        );
    }

    let mut out = CMat::zeros(3);
    for a in toeplitz3_kraus() {
        out = &out + &(&(&a * w) * &a);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn flip() -> CMat {
        CMat::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap()
    }

    #[test]
    fn toeplitz3_on_all_ones_slots() {
        // f = g = h = 1 must give (1/3) [[3,0,3],[0,5,0],[3,0,3]].
        let mut w = CMat::zeros(3);
        w[(0, 0)] = c(1.0, 0.0);
        w[(1, 1)] = c(1.0, 0.0);
        w[(0, 2)] = c(1.0, 0.0);
        w[(2, 0)] = c(1.0, 0.0);
        w[(2, 2)] = c(1.0, 0.0);
        let out = EtaMap::toeplitz3().eval(&w);
        let expect = CMat::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(5.0 / 3.0, 0.0), c(0.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ])
        .unwrap();
        assert!((&out - &expect).max_abs() <= 1e-15);
    }

    #[test]
    fn identity_kraus_is_identity_map() {
        let eta = EtaMap::kraus(2, vec![CMat::identity(2)]).unwrap();
        let w = CMat::from_rows(&[
            vec![c(1.0, 2.0), c(0.5, -0.25)],
            vec![c(-1.0, 0.0), c(3.0, 1.0)],
        ])
        .unwrap();
        assert!((&eta.eval(&w) - &w).max_abs() <= 1e-15);
    }

    #[test]
    fn flip_kraus_swaps_diagonal() {
        let eta = EtaMap::kraus(2, vec![flip()]).unwrap();
        let w = CMat::diag(&[c(2.0, 0.0), c(0.5, 0.0)]);
        let expect = CMat::diag(&[c(0.5, 0.0), c(2.0, 0.0)]);
        assert!((&eta.eval(&w) - &expect).max_abs() <= 1e-15);
    }

    #[test]
    fn single_kraus_identity_tensor_is_identity() {
        let eta = EtaMap::kraus(2, vec![CMat::identity(2)]).unwrap();
        let l = eta.to_linear_tensor().unwrap();
        assert!((&l - &CMat::identity(4)).max_abs() <= 1e-15);
    }

    fn tensor_matches_eval_on_units(eta: &EtaMap) {
        let d = eta.dim();
        let l = eta.to_linear_tensor().unwrap();
        for i in 0..d {
            for j in 0..d {
                let mut unit = CMat::zeros(d);
                unit[(i, j)] = c(1.0, 0.0);
                let via_eval = vec_col(&eta.eval(&unit));
                let via_tensor = l.mul_vec(&vec_col(&unit));
                for (a, b) in via_eval.iter().zip(&via_tensor) {
                    assert!((a - b).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn tensor_agrees_with_eval_on_matrix_units() {
        let mut rng = stream_rng(31, 0);
        let a = sampling::complex_gaussian(&mut rng, 3);
        let b = sampling::complex_gaussian(&mut rng, 3);
        tensor_matches_eval_on_units(&EtaMap::kraus(3, vec![a, b]).unwrap());
        tensor_matches_eval_on_units(&EtaMap::toeplitz3());
    }

    #[test]
    fn kraus_check_passes() {
        let mut rng = stream_rng(32, 0);
        let a = sampling::complex_gaussian(&mut rng, 3);
        let eta = EtaMap::kraus(3, vec![a]).unwrap();
        let report = eta.check_positivity_preserving(50, 1);
        assert!(report.pass, "worst margin {}", report.worst_margin);
    }

    #[test]
    fn toeplitz3_tensor_as_linear_tensor_passes_check() {
        let l = EtaMap::toeplitz3().to_linear_tensor().unwrap();
        let eta = EtaMap::linear_tensor(3, l).unwrap();
        let report = eta.check_positivity_preserving(50, 2);
        assert!(report.pass, "worst margin {}", report.worst_margin);
        // The map is completely positive, so the Choi diagnostic is PSD.
        let choi = report.choi_lambda_min.expect("choi reported");
        assert!(choi >= -1e-10, "choi lambda_min {choi}");
    }

    #[test]
    fn negated_identity_tensor_fails_check() {
        let l = CMat::identity(4).scale(c(-1.0, 0.0));
        let eta = EtaMap::linear_tensor(2, l).unwrap();
        let report = eta.check_positivity_preserving(50, 3);
        assert!(!report.pass);
        assert!(report.worst_margin < 0.0);
    }

    #[test]
    fn bound_examples() {
        let eta = EtaMap::kraus(2, vec![CMat::identity(2)]).unwrap();
        assert!((eta.bound(5.0) - 5.0).abs() <= 1e-12);
        let eta = EtaMap::kraus(2, vec![flip()]).unwrap();
        assert!((eta.bound(2.0) - 2.0).abs() <= 1e-9);
        assert_eq!(EtaMap::zero(4).bound(3.0), 0.0);
    }

    #[test]
    fn toeplitz3_bound_dominates_sampled_norms() {
        let eta = EtaMap::toeplitz3();
        let bound = eta.bound(1.0);
        let mut rng = stream_rng(33, 0);
        for _ in 0..100 {
            let w = sampling::right_half_plane(&mut rng, 3, 1e-3);
            let norm = w.op_norm();
            let out_norm = eta.eval(&w.scale(c(1.0 / norm, 0.0))).op_norm();
            assert!(out_norm <= bound + 1e-9, "{out_norm} > {bound}");
        }
    }

    #[test]
    fn bound_dominates_for_kraus_samples() {
        let mut rng = stream_rng(34, 0);
        let a = sampling::complex_gaussian(&mut rng, 3);
        let b = sampling::complex_gaussian(&mut rng, 3);
        let eta = EtaMap::kraus(3, vec![a, b]).unwrap();
        let r = 2.5;
        let bound = eta.bound(r);
        for _ in 0..100 {
            let w = sampling::right_half_plane(&mut rng, 3, 1e-3);
            let w = w.scale(c(r / w.op_norm(), 0.0));
            assert!(eta.eval(&w).op_norm() <= bound + 1e-9);
        }
    }

    #[test]
    fn hermiticity_is_preserved() {
        let mut rng = stream_rng(35, 0);
        for eta in [
            EtaMap::toeplitz3(),
            EtaMap::kraus(3, vec![sampling::complex_gaussian(&mut rng, 3)]).unwrap(),
        ] {
            for _ in 0..20 {
                let w = CMat::from(sampling::hermitian(&mut rng, 3));
                let out = eta.eval(&w);
                assert!((&out - &out.adjoint()).max_abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn spec_round_trip_and_load_rejection() {
        let eta = EtaMap::toeplitz3();
        let spec = eta.to_spec().unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let parsed: EtaSpec = serde_json::from_str(&json).unwrap();
        let back = EtaMap::from_spec(&parsed).unwrap();
        assert_eq!(back.dim(), 3);

        // eta(W) = -W must be rejected at load time.
        let neg = EtaMap::linear_tensor(2, CMat::identity(4).scale(c(-1.0, 0.0))).unwrap();
        let spec = neg.to_spec().unwrap();
        assert!(matches!(
            EtaMap::from_spec(&spec),
            Err(EtaError::NotPositivityPreserving { .. })
        ));

        // Unknown keys are rejected by the schema.
        let bad = r#"{"kind":"toeplitz3","dim":3,"extra":1}"#;
        assert!(serde_json::from_str::<EtaSpec>(bad).is_err());
    }

    #[test]
    fn callback_maps_reject_non_positive_evaluators() {
        let neg = EtaMap::callback(
            2,
            Arc::new(|w: &CMat| w.scale(c(-1.0, 0.0))),
            Arc::new(|r| r),
        );
        assert!(matches!(
            neg,
            Err(EtaError::NotPositivityPreserving { .. })
        ));
        let ok = EtaMap::callback(2, Arc::new(|w: &CMat| w.clone()), Arc::new(|r| r)).unwrap();
        assert!(matches!(ok.to_linear_tensor(), Err(EtaError::NotLinear)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Linear representations act linearly: eval(a W1 + W2) = a eval(W1) + eval(W2).
        #[test]
        fn linearity_of_linear_representations(seed in 0u64..1000, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let mut rng = stream_rng(seed, 9);
            let a = sampling::complex_gaussian(&mut rng, 3);
            for eta in [EtaMap::kraus(3, vec![a]).unwrap(), EtaMap::toeplitz3()] {
                let w1 = sampling::complex_gaussian(&mut rng, 3);
                let w2 = sampling::complex_gaussian(&mut rng, 3);
                let alpha = c(re, im);
                let lhs = eta.eval(&(&w1.scale(alpha) + &w2));
                let rhs = &eta.eval(&w1).scale(alpha) + &eta.eval(&w2);
                prop_assert!((&lhs - &rhs).max_abs() <= 1e-12);
            }
        }

        // vec / unvec are mutually inverse.
        #[test]
        fn vec_unvec_round_trip(seed in 0u64..1000) {
            let mut rng = stream_rng(seed, 10);
            let w = sampling::complex_gaussian(&mut rng, 4);
            let back = unvec_col(4, &vec_col(&w));
            prop_assert!((&back - &w).max_abs() == 0.0);
        }

        // The fixed stacking convention: vec(A X B) = (B^T kron A) vec(X).
        #[test]
        fn stacking_convention(seed in 0u64..1000) {
            let mut rng = stream_rng(seed, 11);
            let a = sampling::complex_gaussian(&mut rng, 3);
            let x = sampling::complex_gaussian(&mut rng, 3);
            let b = sampling::complex_gaussian(&mut rng, 3);
            let lhs = vec_col(&(&(&a * &x) * &b));
            let bt = CMat::from_fn(3, |i, j| b[(j, i)]);
            let rhs = kron(&bt, &a).mul_vec(&vec_col(&x));
            for (l, r) in lhs.iter().zip(&rhs) {
                prop_assert!((l - r).norm() <= 1e-12);
            }
        }
    }
}
