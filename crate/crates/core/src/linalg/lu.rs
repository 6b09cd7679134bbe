//! LU factorization with partial pivoting.

use num_complex::Complex64;

use super::{CMat, LinalgError};

/// Packed LU factors of a square complex matrix, `P A = L U`.
pub struct LuFactors {
    lu: CMat,
    perm: Vec<usize>,
    smallest_pivot: f64,
}

impl LuFactors {
    /// Factors `a`, failing with [`LinalgError::SingularMatrix`] when a pivot
    /// magnitude is at or below `pivot_floor`.
    pub(crate) fn new(a: &CMat, pivot_floor: f64) -> Result<LuFactors, LinalgError> {
        let d = a.dim();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..d).collect();
        let mut smallest_pivot = f64::INFINITY;
        for k in 0..d {
            // Partial pivoting: largest magnitude in column k at or below row k.
            let mut best = k;
            let mut best_mag = lu[(k, k)].norm();
            for r in (k + 1)..d {
                let mag = lu[(r, k)].norm();
                if mag > best_mag {
                    best = r;
                    best_mag = mag;
                }
            }
            if best_mag <= pivot_floor {
                return Err(LinalgError::SingularMatrix {
                    pivot: best_mag,
                    threshold: pivot_floor,
                });
            }
            if best != k {
                for j in 0..d {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(best, j)];
                    lu[(best, j)] = tmp;
                }
                perm.swap(k, best);
            }
            smallest_pivot = smallest_pivot.min(best_mag);
            let pivot = lu[(k, k)];
            for r in (k + 1)..d {
                let factor = lu[(r, k)] / pivot;
                lu[(r, k)] = factor;
                if factor.norm_sqr() == 0.0 {
                    continue;
                }
                for j in (k + 1)..d {
                    let sub = factor * lu[(k, j)];
                    lu[(r, j)] -= sub;
                }
            }
        }
        Ok(LuFactors {
            lu,
            perm,
            smallest_pivot,
        })
    }

    pub fn smallest_pivot(&self) -> f64 {
        self.smallest_pivot
    }

    /// Solves `A x = b`.
    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let d = self.lu.dim();
        assert_eq!(b.len(), d, "rhs length mismatch");
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        // Forward substitution (unit lower triangle).
        for i in 1..d {
            for j in 0..i {
                let sub = self.lu[(i, j)] * x[j];
                x[i] -= sub;
            }
        }
        // Back substitution.
        for i in (0..d).rev() {
            for j in (i + 1)..d {
                let sub = self.lu[(i, j)] * x[j];
                x[i] -= sub;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    /// Full inverse, one triangular solve per unit vector.
    pub fn inverse(&self) -> Result<CMat, LinalgError> {
        let d = self.lu.dim();
        let mut out = CMat::zeros(d);
        let mut e = vec![Complex64::new(0.0, 0.0); d];
        for col in 0..d {
            e[col] = Complex64::new(1.0, 0.0);
            let x = self.solve_vec(&e);
            e[col] = Complex64::new(0.0, 0.0);
            for row in 0..d {
                out[(row, col)] = x[row];
            }
        }
        Ok(out)
    }
}
