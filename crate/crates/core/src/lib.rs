//! Numerical core for computing asymptotic eigenvalue densities of block
//! random matrices.
//!
//! The central object is the quadratic matrix equation
//! `V W + eta(W) W = I`, posed for `V` with positive-definite real part and
//! a positivity-preserving covariance map `eta`. It has exactly one solution
//! with `Re W > 0`, and that solution is the fixed point of
//! `W -> [V + eta(W)]^{-1}`. Everything else is built around that fact:
//!
//! * [`linalg`] - dense complex matrices, Hermitian eigensolver, LU.
//! * [`eta`] - covariance-map representations and their contracts.
//! * [`solver`] - plain, averaged, Newton, and hybrid iterations with
//!   runtime positivity certificates.
//! * [`sweep`] - warm-started solves along the real axis and Stieltjes
//!   inversion into a density curve.
//! * [`oracle`] - Monte Carlo block-matrix sampler and histogram
//!   comparisons validating the analytic curves.
//!
//! With the default `parallel` feature, Monte Carlo trials and the two sweep
//! directions run on rayon; disabling the feature yields a fully sequential
//! build with identical outputs.

pub mod eta;
pub mod linalg;
pub mod oracle;
mod par;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod sweep;

pub use eta::{EtaMap, EtaSpec};
pub use linalg::{CMat, EigDecomp, HermMat};
pub use solver::{
    named_initial, solve, InitialPoint, Method, PositivityCertificate, Problem, SolveResult,
    SolverConfig, SolverError,
};
pub use sweep::{solve_at, sweep, DensityCurve, SweepConfig};
pub use oracle::{empirical_spectrum, BlockProfile, SpectrumSample};
