//! The self-consistent-recursion machinery: overlap coefficients
//! xi_alpha = N |a . u_alpha|^2, the centered fluctuation
//! X_k = (1/N) sum (xi_alpha - 1)/(lambda_alpha - z), the diagonal-resolvent
//! identity, the drift term delta_k with its interlacing bound, the
//! perturbed fixed point M + 1/(M+z) = delta, the dyadic bootstrap ladder,
//! the Y statistic and the analytic gradient identity, and the Hoelder
//! weights c_alpha.

use crate::ensemble::HermitianMatrix;
use crate::error::{Error, Result};
use crate::linalg::{dot, lu_factor, CMatrix};
use crate::real::{Real, C};
use crate::spectral::{eigh, minor};
use crate::stieltjes::{m_empirical, m_sc, SpectralParameter};
use num_complex::Complex;

/// xi_alpha = n_full |a . u_alpha|^2 for every column of `u`.
pub fn xi_coefficients<R: Real>(a: &[C<R>], u: &CMatrix<R>, n_full: usize) -> Result<Vec<R>> {
    if a.len() != u.rows() {
        return Err(Error::DimensionMismatch {
            expected: u.rows(),
            got: a.len(),
        });
    }
    let scale = R::of(n_full as f64);
    Ok((0..u.cols())
        .map(|alpha| {
            let mut acc = Complex::new(R::zero(), R::zero());
            for i in 0..u.rows() {
                acc += a[i].conj() * u[(i, alpha)];
            }
            scale * acc.norm_sqr()
        })
        .collect())
}

/// X = (1/N) sum_alpha (xi_alpha - 1)/(lambda_alpha - z).
pub fn x_statistic<R: Real>(
    xi: &[R],
    lambda: &[R],
    z: SpectralParameter<R>,
    n_full: usize,
) -> C<R> {
    debug_assert_eq!(xi.len(), lambda.len());
    let zc = z.z();
    let mut acc = Complex::new(R::zero(), R::zero());
    for (&x, &l) in xi.iter().zip(lambda) {
        acc += (Complex::new(l, R::zero()) - zc).inv().scale(x - R::one());
    }
    acc.unscale(R::of(n_full as f64))
}

/// Y = (1/N) sum_alpha xi_alpha / |lambda_alpha - z|.
pub fn y_statistic<R: Real>(xi: &[R], lambda: &[R], z: SpectralParameter<R>, n_full: usize) -> R {
    debug_assert_eq!(xi.len(), lambda.len());
    let zc = z.z();
    let mut acc = R::zero();
    for (&x, &l) in xi.iter().zip(lambda) {
        acc += x / (Complex::new(l, R::zero()) - zc).norm_sqr().sqrt();
    }
    acc / R::of(n_full as f64)
}

/// Per-k bundle of minor spectral data at a fixed z.
#[derive(Debug, Clone)]
pub struct MinorData<R: Real> {
    pub k: usize,
    /// Minor eigenvalues, ascending.
    pub lambda: Vec<R>,
    /// Minor eigenvectors, column alpha for lambda_alpha.
    pub u: CMatrix<R>,
    /// Removed column a^(k).
    pub a: Vec<C<R>>,
    pub h_kk: R,
    pub xi: Vec<R>,
    /// m^(k)(z), normalized by N-1.
    pub m_minor: C<R>,
    pub x_k: C<R>,
}

/// Eigensolve the k-th minor and assemble all z-dependent statistics.
pub fn minor_data<R: Real>(
    h: &HermitianMatrix<R>,
    k: usize,
    z: SpectralParameter<R>,
) -> Result<MinorData<R>> {
    let n = h.n();
    let ext = minor(h, k)?;
    let decomp = eigh(&ext.b)?;
    let xi = xi_coefficients(&ext.a, &decomp.eigenvectors, n)?;
    let m_minor = m_empirical(&decomp.eigenvalues, z)?;
    let x_k = x_statistic(&xi, &decomp.eigenvalues, z, n);
    Ok(MinorData {
        k,
        lambda: decomp.eigenvalues,
        u: decomp.eigenvectors,
        a: ext.a,
        h_kk: ext.h_kk,
        xi,
        m_minor,
        x_k,
    })
}

/// Both sides of the diagonal-resolvent identity
/// G(k,k) = [h_kk - z - (1/N) sum xi_alpha/(lambda_alpha - z)]^{-1},
/// the left side by a dense linear solve.
pub fn resolvent_diag_identity<R: Real>(
    h: &HermitianMatrix<R>,
    k: usize,
    z: SpectralParameter<R>,
) -> Result<(C<R>, C<R>, R)> {
    let n = h.n();
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, n });
    }
    let zc = z.z();
    // lhs: column k of (H - z)^{-1}
    let mut shifted = h.to_cmatrix();
    for i in 0..n {
        shifted[(i, i)] -= zc;
    }
    let lu = lu_factor(&shifted)?;
    let mut e = vec![Complex::new(R::zero(), R::zero()); n];
    e[k] = Complex::new(R::one(), R::zero());
    let lhs = lu.solve(&e)[k];
    // rhs from the minor spectral data (empty sum at N = 1)
    let rhs = if n == 1 {
        (Complex::new(h.at(0, 0).re, R::zero()) - zc).inv()
    } else {
        let md = minor_data(h, k, z)?;
        let mut sum = Complex::new(R::zero(), R::zero());
        for (&x, &l) in md.xi.iter().zip(&md.lambda) {
            sum += (Complex::new(l, R::zero()) - zc).inv().scale(x);
        }
        (Complex::new(md.h_kk, R::zero()) - zc - sum.unscale(R::of(n as f64))).inv()
    };
    let diff = (lhs - rhs).norm_sqr().sqrt();
    Ok((lhs, rhs, diff))
}

/// delta_k = h_kk + m - (1 - 1/N) m^(k) - X_k, plus the interlacing drift
/// bound |m - (1 - 1/N) m^(k)| <= pi/(N eta).
pub fn delta_k<R: Real>(
    md: &MinorData<R>,
    m_full: C<R>,
    z: SpectralParameter<R>,
    n_full: usize,
) -> (C<R>, R, bool) {
    let nf = R::of(n_full as f64);
    let one_minus = R::one() - R::one() / nf;
    let drift = (m_full - md.m_minor.scale(one_minus)).norm_sqr().sqrt();
    let bound = R::pi() / (nf * z.eta);
    let value = Complex::new(md.h_kk, R::zero()) + m_full
        - md.m_minor.scale(one_minus)
        - md.x_k;
    (value, drift, drift <= bound)
}

/// Root of M + 1/(M + z) = delta, branch tracked by continuity from the
/// Herglotz root at delta = 0.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedRoot<R: Real> {
    pub value: C<R>,
    /// Set when the discriminant came close to the branch cut along the
    /// tracking path; the branch choice may be unreliable.
    pub flagged: bool,
}

pub fn perturbed_root<R: Real>(z: C<R>, delta: C<R>) -> PerturbedRoot<R> {
    let four = Complex::new(R::of(4.0), R::zero());
    let half = R::half();
    let mut current = m_sc(z);
    let mut flagged = false;
    let steps = 8usize;
    for s in 1..=steps {
        let d = delta.scale(R::of(s as f64) / R::of(steps as f64));
        let disc = (z * z - four + (z * d).scale(R::two()) + d * d).sqrt();
        let base = (-z).scale(half) + d.scale(half);
        let r1 = base + disc.scale(half);
        let r2 = base - disc.scale(half);
        if disc.norm_sqr().sqrt() < R::of(1e-8) {
            flagged = true;
        }
        current = if (r1 - current).norm_sqr() <= (r2 - current).norm_sqr() {
            r1
        } else {
            r2
        };
    }
    PerturbedRoot {
        value: current,
        flagged,
    }
}

/// One level of the dyadic bootstrap ladder z_n = E + i 2^n eta0.
#[derive(Debug, Clone, Copy)]
pub struct LadderLevel<R: Real> {
    pub n: usize,
    pub eta_n: R,
    pub m: C<R>,
    /// |m(z_n) + 1/(m(z_n) + z_n)|
    pub fixed_point_residual: R,
    /// Im m(z_n) / Im m(z_{n+1}); None at the top level.
    pub halving_ratio: Option<R>,
}

#[derive(Debug, Clone)]
pub struct LadderReport<R: Real> {
    pub e: R,
    pub eta0: R,
    /// Levels ordered by descending n (top of the ladder first).
    pub levels: Vec<LadderLevel<R>>,
}

pub fn bootstrap_ladder<R: Real>(eigs: &[R], e: R, eta0: R) -> Result<LadderReport<R>> {
    if !(eta0 > R::zero() && eta0 < R::one()) {
        return Err(Error::InvalidParameter(format!(
            "eta0 must be in (0,1), got {eta0}"
        )));
    }
    let n_max = (R::one() / eta0).to_f64_lossy().log2().floor() as usize;
    let mut levels: Vec<LadderLevel<R>> = Vec::with_capacity(n_max + 1);
    let mut prev_im: Option<R> = None;
    for n in (0..=n_max).rev() {
        let eta_n = eta0 * R::of((1u64 << n) as f64);
        let p = SpectralParameter::new(e, eta_n)?;
        let m = m_empirical(eigs, p)?;
        let resid = (m + (m + p.z()).inv()).norm_sqr().sqrt();
        let halving_ratio = prev_im.map(|hi| m.im / hi);
        prev_im = Some(m.im);
        levels.push(LadderLevel {
            n,
            eta_n,
            m,
            fixed_point_residual: resid,
            halving_ratio,
        });
    }
    Ok(LadderReport { e, eta0, levels })
}

/// Analytic vs finite-difference value of |grad(Im X)|^2 with respect to the
/// sqrt(N)-scaled coupling b (xi_alpha = |b . u_alpha|^2):
/// analytic = 4 (eta^2/N^2) sum xi_alpha / |lambda_alpha - z|^4.
pub fn gradient_identity_check<R: Real>(
    coupling: &[C<R>],
    lambda: &[R],
    u: &CMatrix<R>,
    z: SpectralParameter<R>,
    n_full: usize,
) -> Result<(R, R, R)> {
    if coupling.len() != u.rows() {
        return Err(Error::DimensionMismatch {
            expected: u.rows(),
            got: coupling.len(),
        });
    }
    let nf = R::of(n_full as f64);
    let zc = z.z();
    let im_x = |b: &[C<R>]| -> R {
        let mut acc = R::zero();
        for alpha in 0..u.cols() {
            let overlap = dot(b, &u.col(alpha));
            let xi = overlap.norm_sqr();
            acc += (xi - R::one()) * z.eta / (Complex::new(lambda[alpha], R::zero()) - zc).norm_sqr();
        }
        acc / nf
    };
    // analytic form
    let mut analytic = R::zero();
    for alpha in 0..u.cols() {
        let xi = dot(coupling, &u.col(alpha)).norm_sqr();
        let d2 = (Complex::new(lambda[alpha], R::zero()) - zc).norm_sqr();
        analytic += xi / (d2 * d2);
    }
    analytic = analytic * R::of(4.0) * z.eta * z.eta / (nf * nf);
    // central finite differences in every real coordinate of b
    let step = R::of(1e-6);
    let mut numeric = R::zero();
    let mut b = coupling.to_vec();
    for i in 0..b.len() {
        for part in 0..2 {
            let orig = b[i];
            let bump = if part == 0 {
                Complex::new(step, R::zero())
            } else {
                Complex::new(R::zero(), step)
            };
            b[i] = orig + bump;
            let plus = im_x(&b);
            b[i] = orig - bump;
            let minus = im_x(&b);
            b[i] = orig;
            let d = (plus - minus) / (R::two() * step);
            numeric += d * d;
        }
    }
    let scale = analytic.max(numeric).max(R::of(1e-300));
    let rel_err = (analytic - numeric).abs() / scale;
    Ok((analytic, numeric, rel_err))
}

/// Hoelder weights c_alpha = rho N |lambda_alpha - z| / nu with
/// rho = (nu/N) sum 1/|lambda_alpha - z|, so that sum 1/c_alpha = 1.
pub fn holder_weights<R: Real>(
    lambda: &[R],
    z: SpectralParameter<R>,
    nu: R,
    n_full: usize,
) -> Result<(Vec<R>, R)> {
    if !(nu > R::zero()) {
        return Err(Error::InvalidParameter("nu must be positive".into()));
    }
    if lambda.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let nf = R::of(n_full as f64);
    let zc = z.z();
    let dists: Vec<R> = lambda
        .iter()
        .map(|&l| (Complex::new(l, R::zero()) - zc).norm_sqr().sqrt())
        .collect();
    let rho = nu / nf * dists.iter().map(|&d| R::one() / d).fold(R::zero(), |a, b| a + b);
    let c: Vec<R> = dists.iter().map(|&d| rho * nf * d / nu).collect();
    Ok((c, rho))
}

/// Full-sweep record for one matrix at one z: m, per-k data, the recursion
/// closure residual |m - (1/N) sum_k 1/(-m - z + delta_k)|, and drift stats.
#[derive(Debug, Clone)]
pub struct SweepRow<R: Real> {
    pub k: usize,
    pub x_k: C<R>,
    pub abs_delta_k: R,
    pub drift: R,
    pub drift_bound: R,
}

#[derive(Debug, Clone)]
pub struct SweepReport<R: Real> {
    pub m: C<R>,
    pub rows: Vec<SweepRow<R>>,
    pub closure_residual: R,
    pub max_drift_excess: R,
    pub max_interlacing_violation: R,
    pub max_cdf_defect: R,
}

/// Eigensolve H and all its minors at z, verifying the exact recursion
/// closure m = (1/N) sum_k [h_kk - z - (1-1/N) m^(k) - X_k]^{-1}.
pub fn sweep<R: Real>(h: &HermitianMatrix<R>, z: SpectralParameter<R>) -> Result<SweepReport<R>> {
    let n = h.n();
    let full = crate::spectral::eigvalsh(h)?;
    let m = m_empirical(&full, z)?;
    let zc = z.z();
    let mut rows = Vec::with_capacity(n);
    let mut recon = Complex::new(R::zero(), R::zero());
    let mut max_drift_excess = R::neg_infinity();
    let mut max_interlace = R::zero();
    let mut max_cdf = R::zero();
    for k in 0..n {
        let md = minor_data(h, k, z)?;
        let (delta, drift, _ok) = delta_k(&md, m, z, n);
        let bound = R::pi() / (R::of(n as f64) * z.eta);
        max_drift_excess = max_drift_excess.max(drift - bound);
        max_interlace = max_interlace.max(crate::spectral::interlacing_check(&full, &md.lambda)?);
        max_cdf = max_cdf.max(crate::spectral::cdf_defect(&full, &md.lambda));
        recon += (-m - zc + delta).inv();
        rows.push(SweepRow {
            k,
            x_k: md.x_k,
            abs_delta_k: delta.norm_sqr().sqrt(),
            drift,
            drift_bound: bound,
        });
    }
    recon = recon.unscale(R::of(n as f64));
    Ok(SweepReport {
        m,
        rows,
        closure_residual: (m - recon).norm_sqr().sqrt(),
        max_drift_excess,
        max_interlacing_violation: max_interlace,
        max_cdf_defect: max_cdf,
    })
}
