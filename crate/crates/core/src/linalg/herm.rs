//! Hermitian matrices and a cyclic Jacobi eigensolver.

use num_complex::Complex64;

use super::{CMat, LinalgError};

/// Per-component Hermiticity tolerance accepted at construction.
const HERMITICITY_ATOL: f64 = 1e-12;

/// Jacobi convergence: off-diagonal Frobenius norm relative to the input.
const JACOBI_RTOL: f64 = 1e-12;

/// Full cyclic sweeps before giving up.
const JACOBI_MAX_SWEEPS: usize = 100;

/// A complex matrix stored exactly Hermitian: the lower triangle mirrors the
/// upper one and the diagonal is real.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMat {
    inner: CMat,
}

impl HermMat {
    /// Checks Hermiticity to within `1e-12` per real component, then stores
    /// the symmetrized matrix `(M + M*) / 2`.
    pub fn new(m: &CMat) -> Result<HermMat, LinalgError> {
        let d = m.dim();
        let mut deviation: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                let diff = m[(i, j)] - m[(j, i)].conj();
                deviation = deviation.max(diff.re.abs()).max(diff.im.abs());
            }
        }
        if deviation > HERMITICITY_ATOL {
            return Err(LinalgError::NotHermitian { deviation });
        }
        Ok(Self::symmetrize(m))
    }

    /// Symmetrizes without checking. Intended for matrices that are Hermitian
    /// by construction (Gram matrices, real/imaginary parts).
    pub(crate) fn symmetrize(m: &CMat) -> HermMat {
        HermMat::from_fn(m.dim(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
    }

    /// Builds from the upper triangle of `f`; the lower triangle is mirrored
    /// and the diagonal forced real.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> HermMat {
        let mut inner = CMat::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                if i == j {
                    inner[(i, i)] = Complex64::new(v.re, 0.0);
                } else {
                    inner[(i, j)] = v;
                    inner[(j, i)] = v.conj();
                }
            }
        }
        HermMat { inner }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.inner
    }

    /// Smallest eigenvalue.
    pub fn lambda_min(&self) -> f64 {
        let eig = self.eig().expect("Jacobi eigensolver failed");
        eig.eigenvalues[0]
    }

    /// Full eigendecomposition by cyclic Jacobi rotations.
    pub fn eig(&self) -> Result<EigDecomp, LinalgError> {
        let d = self.dim();
        let mut a = self.inner.clone();
        let mut u = CMat::identity(d);
        let scale = self.inner.fro_norm();
        let stop = JACOBI_RTOL * scale.max(f64::MIN_POSITIVE);
        // Rotations below this threshold cannot affect convergence.
        let skip = stop / ((d * d) as f64);

        if d > 1 {
            let mut converged = false;
            for _sweep in 0..JACOBI_MAX_SWEEPS {
                if off_diag_fro(&a) <= stop {
                    converged = true;
                    break;
                }
                for p in 0..d {
                    for q in (p + 1)..d {
                        rotate(&mut a, &mut u, p, q, skip);
                    }
                }
            }
            if !converged && off_diag_fro(&a) > stop {
                return Err(LinalgError::NoConvergence {
                    sweeps: JACOBI_MAX_SWEEPS,
                });
            }
        }

        let mut order: Vec<usize> = (0..d).collect();
        let diag: Vec<f64> = (0..d).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
        let eigenvectors = CMat::from_fn(d, |i, j| u[(i, order[j])]);
        Ok(EigDecomp {
            eigenvalues,
            eigenvectors,
        })
    }
}

impl From<HermMat> for CMat {
    fn from(h: HermMat) -> CMat {
        h.inner
    }
}

fn off_diag_fro(a: &CMat) -> f64 {
    let d = a.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation eliminating the (p, q) entry of the Hermitian working
/// matrix `a`, accumulated into `u`.
fn rotate(a: &mut CMat, u: &mut CMat, p: usize, q: usize, skip: f64) {
    let d = a.dim();
    let apq = a[(p, q)];
    let m = apq.norm();
    if m <= skip {
        return;
    }
    let phase = apq / m;
    let alpha = a[(p, p)].re;
    let beta = a[(q, q)].re;
    // tan(2 theta) = 2m / (beta - alpha); pick the smaller-angle root.
    let tau = (beta - alpha) / (2.0 * m);
    let t = if tau >= 0.0 {
        1.0 / (tau + (tau * tau + 1.0).sqrt())
    } else {
        1.0 / (tau - (tau * tau + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let s_ph = phase * s;
    let s_ph_conj = phase.conj() * s;

    // A <- A Q with Q = I except Q[p][p]=c, Q[p][q]=s*ph, Q[q][p]=-s*conj(ph), Q[q][q]=c.
    for r in 0..d {
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        a[(r, p)] = arp * c - arq * s_ph_conj;
        a[(r, q)] = arp * s_ph + arq * c;
    }
    // A <- Q* A.
    for r in 0..d {
        let apr = a[(p, r)];
        let aqr = a[(q, r)];
        a[(p, r)] = apr * c - aqr * s_ph;
        a[(q, r)] = apr * s_ph_conj + aqr * c;
    }
    // Restore exact Hermitian structure of the touched entries.
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    a[(p, p)] = Complex64::new(app, 0.0);
    a[(q, q)] = Complex64::new(aqq, 0.0);
    for r in 0..d {
        if r != p && r != q {
            a[(p, r)] = a[(r, p)].conj();
            a[(q, r)] = a[(r, q)].conj();
        }
    }

    // U <- U Q.
    for r in 0..d {
        let urp = u[(r, p)];
        let urq = u[(r, q)];
        u[(r, p)] = urp * c - urq * s_ph_conj;
        u[(r, q)] = urp * s_ph + urq * c;
    }
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues in ascending
/// order and a unitary matrix whose columns are the eigenvectors.
#[derive(Clone, Debug)]
pub struct EigDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl EigDecomp {
    /// `U diag(lambda) U*`.
    pub fn reconstruct(&self) -> CMat {
        let lam = CMat::diag(
            &self
                .eigenvalues
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect::<Vec<_>>(),
        );
        &(&self.eigenvectors * &lam) * &self.eigenvectors.adjoint()
    }
}
