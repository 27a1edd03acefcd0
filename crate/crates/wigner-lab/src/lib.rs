//! wigner-lab: a random-matrix spectral laboratory.
//!
//! The crate samples Wigner Hermitian ensembles, computes their spectra with
//! an in-repo complex Householder + implicit-QL eigensolver, and numerically
//! verifies the exact identities behind the local semicircle law: the
//! diagonal-resolvent / minor recursion, Cauchy interlacing, the bootstrap
//! halving inequality, eigenvector delocalization statistics, and the
//! concentration lemmas for rank-m projections of random vectors.
//!
//! The numerical core is generic over the scalar type through [`real::Real`]
//! (implemented for `f32` and `f64`); the concrete aliases below fix the
//! default `f64` instantiation used by the sampling code, the experiment
//! harness, and the `wigner-lab` CLI.

pub mod concentration;
pub mod delocalization;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod real;
pub mod report;
pub mod seeding;
pub mod selfconsistent;
pub mod spectral;
pub mod stats;
pub mod stieltjes;

pub use error::{Error, Result};

/// Default scalar type for sampling and experiments.
pub type Scalar = f64;
/// Complex number over the default scalar.
pub type Cplx = num_complex::Complex<Scalar>;
/// Dense complex matrix over the default scalar.
pub type Matrix = linalg::CMatrix<Scalar>;
/// Hermitian matrix over the default scalar.
pub type Hermitian = ensemble::HermitianMatrix<Scalar>;
/// Eigendecomposition over the default scalar.
pub type Decomposition = spectral::EigenDecomposition<Scalar>;
