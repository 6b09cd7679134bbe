//! Dense complex matrices and the small set of factorizations the rest of
//! the crate is built on.
//!
//! Dimensions here are tiny (block dimension d, rarely above 16), so
//! everything is a straightforward dense implementation: row-major storage,
//! LU with partial pivoting for inversion, cyclic Jacobi for Hermitian
//! eigenproblems. The one exception is [`sym_eigenvalues`], a real-symmetric
//! tridiagonalization path used by the Monte Carlo sampler where matrices
//! reach dimension in the hundreds.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

mod herm;
mod lu;
mod realsym;

pub use herm::{EigDecomp, HermMat};
pub use lu::LuFactors;
pub use realsym::sym_eigenvalues;

/// Relative pivot floor for [`CMat::inverse`].
pub const INVERSE_PIVOT_RTOL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("singular matrix: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },
    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is not Hermitian: max component deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("invalid matrix shape: {0}")]
    BadShape(String),
}

/// Dense `d x d` complex matrix, row-major.
///
/// All arithmetic is closed over a single dimension; mixing dimensions is a
/// programming error and panics.
#[derive(Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        CMat {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMat::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// `z * I`.
    pub fn scalar(dim: usize, z: Complex64) -> Self {
        let mut m = CMat::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = CMat::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Builds a matrix from nested rows, checking squareness.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(LinalgError::BadShape("empty matrix".into()));
        }
        let mut m = CMat::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(LinalgError::BadShape(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    dim
                )));
            }
            for (j, &z) in row.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)]).collect())
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, z: Complex64) -> CMat {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|&a| a * z).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry magnitude; handy for structure checks.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Operator (spectral) norm, the largest singular value.
    pub fn op_norm(&self) -> f64 {
        // sqrt(lambda_max(M* M)); M* M is Hermitian PSD.
        let gram = &self.adjoint() * self;
        let herm = HermMat::symmetrize(&gram);
        let eig = herm
            .eig()
            .expect("Jacobi eigensolver failed on a Gram matrix");
        eig.eigenvalues
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(0.0)
            .sqrt()
    }

    /// Hermitian part `(M + M*) / 2`.
    pub fn re_part(&self) -> HermMat {
        HermMat::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Anti-Hermitian part divided by `i`: `(M - M*) / (2i)`, Hermitian.
    pub fn im_part(&self) -> HermMat {
        let half_i = Complex64::new(0.0, -0.5); // 1/(2i)
        HermMat::from_fn(self.dim, |i, j| (self[(i, j)] - self[(j, i)].conj()) * half_i)
    }

    /// LU factorization with partial pivoting. Fails when a pivot magnitude
    /// drops to `pivot_floor` or below.
    pub fn lu(&self, pivot_floor: f64) -> Result<LuFactors, LinalgError> {
        LuFactors::new(self, pivot_floor)
    }

    /// Matrix inverse via LU with partial pivoting.
    pub fn inverse(&self) -> Result<CMat, LinalgError> {
        let floor = INVERSE_PIVOT_RTOL * self.fro_norm();
        self.lu(floor)?.inverse()
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "vector length mismatch");
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self[(i, j)] * v[j])
                    .sum::<Complex64>()
            })
            .collect()
    }

}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

fn assert_same_dim(a: &CMat, b: &CMat) {
    assert_eq!(
        a.dim, b.dim,
        "matrix dimension mismatch: {} vs {}",
        a.dim, b.dim
    );
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_same_dim(self, rhs);
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_same_dim(self, rhs);
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_same_dim(self, rhs);
        let d = self.dim;
        let mut out = CMat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let aik = self[(i, k)];
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|&a| -a).collect(),
        }
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// JSON form: nested rows of [re, im] pairs, row-major.
impl Serialize for CMat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<Complex64>>::deserialize(deserializer)?;
        CMat::from_rows(&rows).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, uniform};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_cmat(dim: usize, seed: u64) -> CMat {
        let mut rng = stream_rng(seed, 0);
        CMat::from_fn(dim, |_, _| {
            c(uniform(&mut rng) * 2.0 - 1.0, uniform(&mut rng) * 2.0 - 1.0)
        })
    }

    #[test]
    fn identity_is_neutral() {
        let m = random_cmat(2, 7);
        let id = CMat::identity(2);
        assert_eq!((&id * &m), m);
        assert_eq!((&m * &id), m);
    }

    #[test]
    fn adjoint_is_an_involution() {
        let m = random_cmat(4, 11);
        assert_eq!(m.adjoint().adjoint(), m);
    }

    #[test]
    fn product_adjoint_reverses_factors() {
        // (A B)* = B* A*, checked entrywise against a direct computation.
        let a = random_cmat(3, 21);
        let b = random_cmat(3, 22);
        let lhs = (&a * &b).adjoint();
        let mut expect = CMat::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = c(0.0, 0.0);
                for k in 0..3 {
                    // conj of (A B)[j][i]
                    s += (a[(j, k)] * b[(k, i)]).conj();
                }
                expect[(i, j)] = s;
            }
        }
        assert!((&lhs - &expect).fro_norm() <= 1e-14);
        let rhs = &b.adjoint() * &a.adjoint();
        assert!((&lhs - &rhs).fro_norm() <= 1e-14);
    }

    #[test]
    fn re_im_parts_reassemble() {
        for seed in 0..20u64 {
            let m = random_cmat(3, 100 + seed);
            let re = m.re_part();
            let im = m.im_part();
            let back = &CMat::from(re) + &CMat::from(im).scale(c(0.0, 1.0));
            assert!((&back - &m).max_abs() <= 1e-14);
        }
    }

    #[test]
    fn re_im_of_i_times_identity() {
        let m = CMat::scalar(2, c(0.0, 1.0));
        assert!(CMat::from(m.re_part()).max_abs() <= 1e-15);
        assert!((&CMat::from(m.im_part()) - &CMat::identity(2)).max_abs() <= 1e-15);
    }

    #[test]
    fn re_part_hand_example() {
        // M = [[1+2i, 3], [0, -i]] -> Re M = [[1, 1.5], [1.5, 0]]
        let m = CMat::from_rows(&[
            vec![c(1.0, 2.0), c(3.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, -1.0)],
        ])
        .unwrap();
        let re = CMat::from(m.re_part());
        let expect = CMat::from_rows(&[
            vec![c(1.0, 0.0), c(1.5, 0.0)],
            vec![c(1.5, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        assert!((&re - &expect).max_abs() <= 1e-15);
    }

    #[test]
    fn hermitian_matrix_has_zero_im_part() {
        let m = CMat::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, -1.0)],
            vec![c(1.0, 1.0), c(-0.5, 0.0)],
        ])
        .unwrap();
        assert!((&CMat::from(m.re_part()) - &m).max_abs() <= 1e-15);
        assert!(CMat::from(m.im_part()).max_abs() <= 1e-15);
    }

    #[test]
    fn inverse_of_identity_and_diagonal() {
        let id = CMat::identity(3);
        assert!((&id.inverse().unwrap() - &id).max_abs() <= 1e-15);
        let d = CMat::diag(&[c(2.0, 0.0), c(4.0, 0.0)]);
        let expect = CMat::diag(&[c(0.5, 0.0), c(0.25, 0.0)]);
        assert!((&d.inverse().unwrap() - &expect).max_abs() <= 1e-15);
    }

    #[test]
    fn inverse_residual_on_random_matrices() {
        for seed in 0..50u64 {
            let m = random_cmat(4, 400 + seed);
            // Shift away from singularity.
            let m = &m + &CMat::scalar(4, c(3.0, 0.0));
            let inv = m.inverse().unwrap();
            let resid = (&(&m * &inv) - &CMat::identity(4)).fro_norm();
            assert!(resid <= 1e-10, "residual {resid} too large");
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut m = CMat::zeros(2);
        m[(0, 0)] = c(1.0, 0.0);
        m[(0, 1)] = c(2.0, 0.0);
        m[(1, 0)] = c(2.0, 0.0);
        m[(1, 1)] = c(4.0, 0.0);
        assert!(matches!(
            m.inverse(),
            Err(LinalgError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn op_norm_examples() {
        assert!((CMat::identity(5).op_norm() - 1.0).abs() <= 1e-12);
        // Nilpotent Jordan block [[0,2],[0,0]] has singular values {2, 0}.
        let mut m = CMat::zeros(2);
        m[(0, 1)] = c(2.0, 0.0);
        assert!((m.op_norm() - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn op_norm_is_submultiplicative() {
        for seed in 0..30u64 {
            let a = random_cmat(3, 900 + seed);
            let b = random_cmat(3, 950 + seed);
            let lhs = (&a * &b).op_norm();
            let rhs = a.op_norm() * b.op_norm();
            assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
        }
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn dimension_mismatch_panics() {
        let a = CMat::identity(2);
        let b = CMat::identity(3);
        let _ = &a + &b;
    }

    #[test]
    fn serde_round_trip() {
        let m = random_cmat(3, 3030);
        let json = serde_json::to_string(&m).unwrap();
        let back: CMat = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
    }
}
