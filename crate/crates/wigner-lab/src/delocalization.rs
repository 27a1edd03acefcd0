//! Eigenvector delocalization statistics: sup and ell-4 norms per
//! eigenvector, the first-component identity
//! |v_1|^2 = [1 + (1/N) sum xi_alpha/(mu - lambda_alpha)^2]^{-1},
//! interval occupancy counts, the window counting law, and the lower-tail
//! experiment for subset sums of xi.

use crate::ensemble::{EntryDistribution, HermitianMatrix};
use crate::error::{Error, Result};
use crate::linalg::{dot, orthonormalize};
use crate::real::Real;
use crate::seeding::{stream_rng, trial_seed};
use crate::selfconsistent::MinorData;
use crate::spectral::EigenDecomposition;
use crate::stats::wilson_interval;
use crate::stieltjes::rho_sc;
use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenvectorStats<R: Real> {
    pub mu: R,
    pub sup_norm: R,
    pub l4_norm: R,
    pub in_bulk: bool,
}

/// Per-eigenvector norms; `in_bulk` flags |mu| <= 2 - kappa.
pub fn eigenvector_stats<R: Real>(
    decomp: &EigenDecomposition<R>,
    kappa: R,
) -> Vec<EigenvectorStats<R>> {
    let edge = R::two() - kappa;
    (0..decomp.n())
        .map(|alpha| {
            let v = decomp.eigenvector(alpha);
            let sup = v
                .iter()
                .map(|z| z.norm_sqr())
                .fold(R::zero(), |a, b| a.max(b))
                .sqrt();
            let l4 = v
                .iter()
                .map(|z| {
                    let s = z.norm_sqr();
                    s * s
                })
                .fold(R::zero(), |a, b| a + b)
                .powf(R::of(0.25));
            let mu = decomp.eigenvalues[alpha];
            EigenvectorStats {
                mu,
                sup_norm: sup,
                l4_norm: l4,
                in_bulk: mu.abs() <= edge,
            }
        })
        .collect()
}

/// Outcome of checking the first-component identity across all eigenvectors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct V1IdentityReport<R: Real> {
    pub max_abs_diff: R,
    pub checked: usize,
    /// Eigenvectors skipped because mu came within the degeneracy guard of a
    /// minor eigenvalue.
    pub skipped: usize,
}

/// Guard distance below which a (mu, lambda_alpha) pair is skipped.
const DEGENERACY_GUARD: f64 = 1e-8;

/// Verify |v_k|^2 against the minor spectral representation, where `md` is
/// the k-th minor bundle of the same matrix (k = md.k). Applies to every
/// eigenvector of `decomp` whose eigenvalue is separated from the minor
/// spectrum.
pub fn v1_identity_check<R: Real>(
    h: &HermitianMatrix<R>,
    decomp: &EigenDecomposition<R>,
    md: &MinorData<R>,
) -> Result<V1IdentityReport<R>> {
    let n = h.n();
    if decomp.n() != n || md.lambda.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: md.lambda.len() + 1,
        });
    }
    let guard = R::of(DEGENERACY_GUARD);
    let nf = R::of(n as f64);
    let mut max_diff = R::zero();
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for alpha in 0..n {
        let mu = decomp.eigenvalues[alpha];
        let sep = md
            .lambda
            .iter()
            .map(|&l| (mu - l).abs())
            .fold(R::infinity(), |a, b| a.min(b));
        if sep <= guard {
            skipped += 1;
            continue;
        }
        let mut sum = R::zero();
        for (&xi, &l) in md.xi.iter().zip(&md.lambda) {
            let d = mu - l;
            sum += xi / (d * d);
        }
        let predicted = R::one() / (R::one() + sum / nf);
        let vk = decomp.eigenvector(alpha)[md.k].norm_sqr();
        max_diff = max_diff.max((vk - predicted).abs());
        checked += 1;
    }
    Ok(V1IdentityReport {
        max_abs_diff: max_diff,
        checked,
        skipped,
    })
}

/// Occupancy of the intervals I_n = [n eta, (n+1) eta] covering the spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalOccupancy<R: Real> {
    pub eta: R,
    /// Index of the leftmost interval.
    pub n_min: i64,
    /// counts[j] is the occupancy of I_{n_min + j}.
    pub counts: Vec<usize>,
    pub max_count: usize,
}

pub fn interval_max_count<R: Real>(eigs: &[R], eta: R) -> Result<IntervalOccupancy<R>> {
    if !(eta > R::zero()) {
        return Err(Error::InvalidParameter("eta must be positive".into()));
    }
    if eigs.is_empty() {
        return Ok(IntervalOccupancy {
            eta,
            n_min: 0,
            counts: Vec::new(),
            max_count: 0,
        });
    }
    let idx = |x: R| (x / eta).to_f64_lossy().floor() as i64;
    let n_min = eigs
        .iter()
        .map(|&x| idx(x))
        .min()
        .unwrap();
    let n_max = eigs.iter().map(|&x| idx(x)).max().unwrap();
    let mut counts = vec![0usize; (n_max - n_min + 1) as usize];
    for &x in eigs {
        counts[(idx(x) - n_min) as usize] += 1;
    }
    let max_count = counts.iter().copied().max().unwrap_or(0);
    Ok(IntervalOccupancy {
        eta,
        n_min,
        counts,
        max_count,
    })
}

/// sup over an E-grid (step eta_star/4, |E| <= 2 - kappa) of
/// |N_{eta*}(E)/(2 N eta*) - rho_sc(E)|.
pub fn counting_law_check<R: Real>(eigs: &[R], kappa: R, eta_star: R) -> Result<R> {
    if !(eta_star > R::zero()) {
        return Err(Error::InvalidParameter("eta_star must be positive".into()));
    }
    if eigs.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let n = R::of(eigs.len() as f64);
    let e_max = R::two() - kappa;
    let step = eta_star / R::of(4.0);
    let steps = (e_max * R::two() / step).to_f64_lossy().ceil() as usize;
    let mut sorted: Vec<R> = eigs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // inclusive window [E - eta*, E + eta*]
    let count_in = |a: R, b: R| {
        sorted.partition_point(|&t| t <= b) - sorted.partition_point(|&t| t < a)
    };
    let mut sup = R::zero();
    for s in 0..=steps {
        let e = (-e_max + step * R::of(s as f64)).min(e_max);
        let cnt = R::of(count_in(e - eta_star, e + eta_star) as f64);
        let dev = (cnt / (R::two() * n * eta_star) - rho_sc(e)).abs();
        sup = sup.max(dev);
    }
    Ok(sup)
}

/// Empirical lower-tail probability P(sum_{alpha in A} xi_alpha <= delta m).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailEstimate {
    pub trials: u64,
    pub hits: u64,
    pub phat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Monte Carlo over fresh couplings against a fixed orthonormal frame of
/// rank `m_rank` in ambient dimension `ambient`. The coupling components are
/// x + i y with x, y drawn from `dist`; with gaussian components of variance
/// 1/2 each, the subset sum is exactly (1/2) chi^2 with 2 m degrees of
/// freedom.
pub fn xi_lower_tail(
    m_rank: usize,
    ambient: usize,
    delta: f64,
    trials: u64,
    dist: &EntryDistribution,
    seed: u64,
) -> Result<TailEstimate> {
    if trials < 1_000 {
        return Err(Error::InvalidParameter("need at least 1000 trials".into()));
    }
    if !(delta > 0.0) || delta >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    if m_rank == 0 || m_rank > ambient {
        return Err(Error::InvalidParameter(format!(
            "rank {m_rank} out of range for ambient {ambient}"
        )));
    }
    let frame = random_frame(ambient, m_rank, trial_seed(seed, u64::MAX))?;
    let threshold = delta * m_rank as f64;
    let dist = *dist;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(trial_seed(seed, t));
            let b: Vec<Complex<f64>> = (0..ambient)
                .map(|_| Complex::new(dist.sample(&mut rng), dist.sample(&mut rng)))
                .collect();
            let sum: f64 = frame.iter().map(|u| dot(u, &b).norm_sqr()).sum();
            u64::from(sum <= threshold)
        })
        .sum();
    let phat = hits as f64 / trials as f64;
    let (ci_lo, ci_hi) = wilson_interval(hits, trials, 1.96);
    Ok(TailEstimate {
        trials,
        hits,
        phat,
        ci_lo,
        ci_hi,
    })
}

/// Orthonormal frame of `m` complex Gaussian vectors in dimension `n`.
pub fn random_frame(n: usize, m: usize, seed: u64) -> Result<Vec<Vec<Complex<f64>>>> {
    use rand_distr::{Distribution, Normal};
    let mut rng = stream_rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut cols: Vec<Vec<Complex<f64>>> = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| Complex::new(normal.sample(&mut rng), normal.sample(&mut rng)))
                .collect()
        })
        .collect();
    orthonormalize(&mut cols)?;
    Ok(cols)
}

/// Quantile summary of normalized sup norms for the JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct SupNormSummary {
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
    pub max: f64,
}

pub fn sup_norm_summary(normalized: &[f64]) -> SupNormSummary {
    SupNormSummary {
        q50: crate::stats::quantile(normalized, 0.50),
        q90: crate::stats::quantile(normalized, 0.90),
        q99: crate::stats::quantile(normalized, 0.99),
        max: normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_wigner, WignerConfig};
    use crate::selfconsistent::minor_data;
    use crate::spectral::eigh;
    use crate::stieltjes::{semicircle_quantiles, SpectralParameter};
    use num_complex::Complex64;

    #[test]
    fn scalar_eigenvector() {
        let h = sample_wigner(&WignerConfig::gue(1, 4)).unwrap();
        let d = eigh(&h).unwrap();
        let stats = eigenvector_stats(&d, 0.5);
        assert!((stats[0].sup_norm - 1.0).abs() < 1e-12);
        assert!((stats[0].l4_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_vector_extremes() {
        // uniform vector: sup = 1/sqrt(N), l4 = N^{-1/4}
        let n = 16;
        use crate::linalg::CMatrix;
        let mut q = CMatrix::zeros(n, n);
        for i in 0..n {
            q[(i, 0)] = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
        }
        let d = crate::spectral::EigenDecomposition {
            eigenvalues: vec![0.0; n],
            eigenvectors: q,
        };
        let stats = eigenvector_stats(&d, 0.5);
        assert!((stats[0].sup_norm - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
        assert!((stats[0].l4_norm - (n as f64).powf(-0.25)).abs() < 1e-12);
    }

    #[test]
    fn norm_chain_per_eigenvector() {
        let h = sample_wigner(&WignerConfig::gue(20, 6)).unwrap();
        let d = eigh(&h).unwrap();
        for s in eigenvector_stats(&d, 0.5) {
            // ||v||_4^4 <= ||v||_inf^2 for unit vectors, and 1/sqrt(N) <= sup <= 1
            assert!(s.l4_norm.powi(4) <= s.sup_norm.powi(2) + 1e-12);
            assert!(s.sup_norm >= 1.0 / (20f64).sqrt() - 1e-12);
            assert!(s.sup_norm <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn v1_identity_diagonal_decoupled() {
        // diagonal H: a^(k) = 0 so the formula gives |v_k|^2 = 1 for the
        // eigenvector living on coordinate k
        let h = crate::ensemble::HermitianMatrix::from_upper(3, |i, j| {
            if i == j {
                Complex64::new(i as f64 + 1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let d = eigh(&h).unwrap();
        let md = minor_data(&h, 0, SpectralParameter::new(0.3, 0.1).unwrap()).unwrap();
        let rep = v1_identity_check(&h, &d, &md).unwrap();
        assert!(rep.max_abs_diff < 1e-12);
        assert_eq!(rep.checked, 3);
    }

    #[test]
    fn v1_identity_2x2() {
        let h = sample_wigner(&WignerConfig::gue(2, 8)).unwrap();
        let d = eigh(&h).unwrap();
        let md = minor_data(&h, 0, SpectralParameter::new(0.3, 0.1).unwrap()).unwrap();
        let rep = v1_identity_check(&h, &d, &md).unwrap();
        assert!(rep.max_abs_diff < 1e-12, "diff {}", rep.max_abs_diff);
    }

    #[test]
    fn v1_identity_random_16() {
        let h = sample_wigner(&WignerConfig::gue(16, 902)).unwrap();
        let d = eigh(&h).unwrap();
        let md = minor_data(&h, 0, SpectralParameter::new(0.3, 0.1).unwrap()).unwrap();
        let rep = v1_identity_check(&h, &d, &md).unwrap();
        assert!(rep.max_abs_diff <= 1e-10, "diff {}", rep.max_abs_diff);
        assert_eq!(rep.skipped, 0);
    }

    #[test]
    fn interval_counts() {
        let occ = interval_max_count(&[0.05, 0.07, 0.35], 0.1).unwrap();
        assert_eq!(occ.n_min, 0);
        assert_eq!(occ.counts, vec![2, 0, 0, 1]);
        assert_eq!(occ.max_count, 2);
        let total: usize = occ.counts.iter().sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn interval_counts_empty() {
        let occ = interval_max_count::<f64>(&[], 0.1).unwrap();
        assert_eq!(occ.max_count, 0);
        assert!(occ.counts.is_empty());
    }

    #[test]
    fn interval_counts_clustered() {
        let occ = interval_max_count(&[0.01; 7], 0.5).unwrap();
        assert_eq!(occ.max_count, 7);
    }

    #[test]
    fn quantile_spectrum_occupancy_matches_density() {
        let n = 500;
        let eta = 0.05;
        let eigs = semicircle_quantiles::<f64>(n);
        let occ = interval_max_count(&eigs, eta).unwrap();
        let peak = occ.max_count as f64 / (2.0 * n as f64 * eta / 2.0);
        // max over intervals of N_I/(N eta) approximates max rho_sc = 1/pi
        let ratio = occ.max_count as f64 / (n as f64 * eta);
        assert!(
            (ratio - 1.0 / std::f64::consts::PI).abs() / (1.0 / std::f64::consts::PI) < 0.15,
            "ratio {ratio} peak {peak}"
        );
    }

    #[test]
    fn counting_law_quantile_spectrum() {
        let eigs = semicircle_quantiles::<f64>(2000);
        let sup = counting_law_check(&eigs, 0.5, 0.05).unwrap();
        assert!(sup <= 0.03, "sup {sup}");
    }

    #[test]
    fn counting_law_pathological_spectrum() {
        // all eigenvalues at zero: deviation at E = 0 is 1/(2 eta*) - 1/pi
        let eigs = vec![0.0; 100];
        let sup = counting_law_check(&eigs, 0.5, 0.05).unwrap();
        let want = 1.0 / (2.0 * 0.05) - 1.0 / std::f64::consts::PI;
        assert!((sup - want).abs() < 1e-9, "sup {sup} want {want}");
    }

    #[test]
    fn xi_tail_gaussian_small_case() {
        // coarse consistency with the chi-square law at modest trial count
        let est = xi_lower_tail(
            2,
            16,
            0.5,
            20_000,
            &EntryDistribution::gaussian(0.5),
            9,
        )
        .unwrap();
        // P((1/2) chi^2_4 <= 1) = P(chi^2_4 <= 2) = 1 - e^{-1}(1 + 1) ~ 0.2642
        let want = 1.0 - (-1.0f64).exp() * 2.0;
        assert!(est.ci_lo <= want && want <= est.ci_hi, "{est:?} want {want}");
    }

    #[test]
    fn xi_tail_parameter_errors() {
        let d = EntryDistribution::gaussian(0.5);
        assert!(xi_lower_tail(2, 16, 0.5, 10, &d, 0).is_err());
        assert!(xi_lower_tail(0, 16, 0.5, 2000, &d, 0).is_err());
        assert!(xi_lower_tail(20, 16, 0.5, 2000, &d, 0).is_err());
        assert!(xi_lower_tail(2, 16, 1.5, 2000, &d, 0).is_err());
    }

    #[test]
    fn xi_subset_sum_matches_chi_square_law() {
        // KS distance between Sigma xi over |A| = 10 and (1/2) chi^2_20
        let m = 10;
        let ambient = 40;
        let frame = random_frame(ambient, m, 77).unwrap();
        let trials = 10_000;
        let samples: Vec<f64> = (0..trials)
            .map(|t| {
                let mut rng = stream_rng(trial_seed(123, t));
                let d = EntryDistribution::gaussian(0.5);
                let b: Vec<Complex64> = (0..ambient)
                    .map(|_| Complex64::new(d.sample(&mut rng), d.sample(&mut rng)))
                    .collect();
                frame.iter().map(|u| dot(u, &b).norm_sqr()).sum()
            })
            .collect();
        // CDF of (1/2) chi^2_{2m}: regularized lower incomplete gamma, which
        // for integer shape m reduces to 1 - e^{-x} sum_{j<m} x^j/j!
        let cdf = |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            let mut term = 1.0;
            let mut sum = 1.0;
            for j in 1..m {
                term *= x / j as f64;
                sum += term;
            }
            1.0 - (-x).exp() * sum
        };
        let d = crate::stats::ks_one_sample(&samples, cdf);
        assert!(d <= 0.02, "KS distance {d}");
    }

    #[test]
    fn component_exchangeability() {
        // |v_1|^2 and |v_{N/2}|^2 have the same empirical mean across trials
        let n = 24;
        let trials = 40;
        let mut first = Vec::new();
        let mut middle = Vec::new();
        for t in 0..trials {
            let h = sample_wigner(&WignerConfig::gue(n, 5000 + t)).unwrap();
            let d = eigh(&h).unwrap();
            for alpha in 0..n {
                let v = d.eigenvector(alpha);
                first.push(v[0].norm_sqr());
                middle.push(v[n / 2].norm_sqr());
            }
        }
        let (m1, s1) = crate::stats::mean_se(&first);
        let (m2, s2) = crate::stats::mean_se(&middle);
        let se = (s1 * s1 + s2 * s2).sqrt();
        assert!((m1 - m2).abs() < 4.0 * se, "m1 {m1} m2 {m2} se {se}");
    }
}
