//! Random matrix draws shared by the positivity checker and property tests.

use num_complex::Complex64;
use rand_chacha::rand_core::RngCore;

use crate::linalg::{CMat, HermMat};
use crate::rng::normal_pair;

/// Matrix with independent standard complex Gaussian entries
/// (real and imaginary parts each `N(0, 1/2)`).
pub fn complex_gaussian(rng: &mut impl RngCore, dim: usize) -> CMat {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(dim, |_, _| {
        let (x, y) = normal_pair(rng);
        Complex64::new(x * scale, y * scale)
    })
}

/// Random Hermitian matrix, entries of order one.
pub fn hermitian(rng: &mut impl RngCore, dim: usize) -> HermMat {
    complex_gaussian(rng, dim).re_part()
}

/// Random positive semidefinite matrix `C C* / d`.
pub fn positive_semidefinite(rng: &mut impl RngCore, dim: usize) -> HermMat {
    let c = complex_gaussian(rng, dim);
    let gram = &c * &c.adjoint();
    HermMat::symmetrize(&gram.scale(Complex64::new(1.0 / dim as f64, 0.0)))
}

/// Random element of the strict right half-plane: `Re W >= margin * I`.
pub fn right_half_plane(rng: &mut impl RngCore, dim: usize, margin: f64) -> CMat {
    assert!(margin > 0.0, "margin must be positive");
    let re = positive_semidefinite(rng, dim);
    let im = hermitian(rng, dim);
    let shifted = &CMat::from(re) + &CMat::scalar(dim, Complex64::new(margin, 0.0));
    &shifted + &CMat::from(im).scale(Complex64::new(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn right_half_plane_samples_have_positive_real_part() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..50 {
            let w = right_half_plane(&mut rng, 3, 0.25);
            assert!(w.re_part().lambda_min() >= 0.25 - 1e-12);
        }
    }

    #[test]
    fn psd_samples_are_psd() {
        let mut rng = stream_rng(6, 0);
        for _ in 0..50 {
            let p = positive_semidefinite(&mut rng, 4);
            assert!(p.lambda_min() >= -1e-12);
        }
    }
}
