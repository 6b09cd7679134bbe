//! Eigenvalues of real symmetric matrices via Householder tridiagonalization
//! and implicit QL with shifts.
//!
//! This is the fast path for the Monte Carlo sampler, where matrices reach
//! dimension in the hundreds and only eigenvalues are needed. The cyclic
//! Jacobi solver in [`super::herm`] stays the reference implementation for
//! the small Hermitian problems.

use super::LinalgError;

const QL_MAX_ITER: usize = 50;

/// Eigenvalues (ascending) of a real symmetric matrix given as a flat
/// row-major `n x n` slice. Only the lower triangle is read.
pub fn sym_eigenvalues(a: &[f64], n: usize) -> Result<Vec<f64>, LinalgError> {
    assert_eq!(a.len(), n * n, "flat matrix length must be n^2");
    assert!(n >= 1);
    let mut w = a.to_vec();
    let (mut d, mut e) = tridiagonalize(&mut w, n);
    ql_eigenvalues(&mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(d)
}

/// Householder reduction to tridiagonal form, lower-triangle variant without
/// eigenvector accumulation. Returns (diagonal, subdiagonal) with the
/// subdiagonal in `e[1..]`.
fn tridiagonalize(w: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += w[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = w[i * n + l];
            } else {
                for k in 0..=l {
                    w[i * n + k] /= scale;
                    h += w[i * n + k] * w[i * n + k];
                }
                let f = w[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                w[i * n + l] = f - g;
                let mut fsum = 0.0;
                for j in 0..=l {
                    let mut gj = 0.0;
                    for k in 0..=j {
                        gj += w[j * n + k] * w[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        gj += w[k * n + j] * w[i * n + k];
                    }
                    e[j] = gj / h;
                    fsum += e[j] * w[i * n + j];
                }
                let hh = fsum / (h + h);
                for j in 0..=l {
                    let fj = w[i * n + j];
                    let gj = e[j] - hh * fj;
                    e[j] = gj;
                    for k in 0..=j {
                        w[j * n + k] -= fj * e[k] + gj * w[i * n + k];
                    }
                }
            }
        } else {
            e[i] = w[i * n + l];
        }
    }
    for i in 0..n {
        d[i] = w[i * n + i];
    }
    (d, e)
}

/// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal matrix,
/// eigenvalues only. `e[1..]` holds the subdiagonal on entry.
fn ql_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<(), LinalgError> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd + f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(LinalgError::NoConvergence {
                    sweeps: QL_MAX_ITER,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let t = (d[i] - g) * s + 2.0 * c * b;
                p = s * t;
                d[i + 1] = g + p;
                g = c * t - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
