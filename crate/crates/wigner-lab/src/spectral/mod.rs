//! Spectral substrate: the in-repo Hermitian eigensolver, principal-minor
//! extraction, Cauchy interlacing checks, and the counting-function defect
//! bound max_x |N F(x) - (N-1) F^(k)(x)| <= 1.

mod eigh;
pub mod io;

pub use eigh::{eigh, eigvalsh, EigenDecomposition};

use crate::ensemble::HermitianMatrix;
use crate::error::{Error, Result};
use crate::linalg::norm_sqr;
use crate::real::{Real, C};

/// Row/column-k principal minor of H together with the removed column.
#[derive(Debug, Clone)]
pub struct MinorExtraction<R: Real> {
    /// B^(k): H with row and column k deleted.
    pub b: HermitianMatrix<R>,
    /// a^(k): column k of H with entry k deleted (a_i = h_{i,k}).
    pub a: Vec<C<R>>,
    pub h_kk: R,
}

/// Extract the k-th principal minor (k is 0-based).
pub fn minor<R: Real>(h: &HermitianMatrix<R>, k: usize) -> Result<MinorExtraction<R>> {
    let n = h.n();
    if n < 2 {
        return Err(Error::EmptyMinor);
    }
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, n });
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
    let b = HermitianMatrix::from_upper(n - 1, |i, j| h.at(keep[i], keep[j]))?;
    let a: Vec<C<R>> = keep.iter().map(|&i| h.at(i, k)).collect();
    Ok(MinorExtraction {
        b,
        a,
        h_kk: h.at(k, k).re,
    })
}

/// Maximum interlacing violation between the spectrum of H and of a minor:
/// max over alpha of max(mu_alpha - lambda_alpha, lambda_alpha - mu_{alpha+1}, 0).
pub fn interlacing_check<R: Real>(full: &[R], minor_spec: &[R]) -> Result<R> {
    if minor_spec.len() + 1 != full.len() {
        return Err(Error::DimensionMismatch {
            expected: full.len().saturating_sub(1),
            got: minor_spec.len(),
        });
    }
    let mut worst = R::zero();
    for (alpha, &lam) in minor_spec.iter().enumerate() {
        let below = full[alpha] - lam;
        let above = lam - full[alpha + 1];
        worst = worst.max(below).max(above);
    }
    Ok(worst.max(R::zero()))
}

/// max_x |N F(x) - (N-1) F^(k)(x)| over all jump points of the two empirical
/// counting functions. Interlacing forces this to be at most 1.
pub fn cdf_defect<R: Real>(full: &[R], minor_spec: &[R]) -> R {
    let mut pts: Vec<R> = full.iter().chain(minor_spec.iter()).copied().collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let count_le = |eigs: &[R], x: R| eigs.iter().filter(|&&t| t <= x).count() as i64;
    let mut worst = 0i64;
    for &x in &pts {
        let diff = (count_le(full, x) - count_le(minor_spec, x)).abs();
        worst = worst.max(diff);
    }
    R::of(worst as f64)
}

/// Quality report for an eigendecomposition against its source matrix.
#[derive(Debug, Clone, Copy)]
pub struct DecompositionCheck<R: Real> {
    /// max_alpha ||H v - mu v|| / max(1, ||H||_F)
    pub max_residual: R,
    /// max |v_a . v_b - delta_ab|
    pub max_orthogonality: R,
    /// |sum mu - trace H|
    pub trace_defect: R,
}

pub fn check_decomposition<R: Real>(
    h: &HermitianMatrix<R>,
    decomp: &EigenDecomposition<R>,
) -> DecompositionCheck<R> {
    let n = h.n();
    let scale = R::one().max(h.frobenius_norm());
    let mut max_residual = R::zero();
    for alpha in 0..n {
        let v = decomp.eigenvector(alpha);
        let hv = h.matvec(&v);
        let mu = decomp.eigenvalues[alpha];
        let resid = hv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b.scale(mu)).norm_sqr())
            .fold(R::zero(), |x, y| x + y)
            .sqrt();
        max_residual = max_residual.max(resid / scale);
    }
    let mut max_orth = R::zero();
    for a in 0..n {
        let va = decomp.eigenvector(a);
        for b in a..n {
            let vb = decomp.eigenvector(b);
            let d = crate::linalg::dot(&va, &vb);
            let target = if a == b { R::one() } else { R::zero() };
            let dev = (d - num_complex::Complex::new(target, R::zero()))
                .norm_sqr()
                .sqrt();
            max_orth = max_orth.max(dev);
        }
    }
    let sum: R = decomp.eigenvalues.iter().copied().sum();
    DecompositionCheck {
        max_residual,
        max_orthogonality: max_orth,
        trace_defect: (sum - h.trace()).abs(),
    }
}

/// Largest deviation of any eigenvector from unit norm.
pub fn max_norm_defect<R: Real>(decomp: &EigenDecomposition<R>) -> R {
    (0..decomp.n())
        .map(|a| (norm_sqr(&decomp.eigenvector(a)).sqrt() - R::one()).abs())
        .fold(R::zero(), |x, y| x.max(y))
}
