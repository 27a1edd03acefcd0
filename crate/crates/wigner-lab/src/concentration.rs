//! Concentration of |Pz|^2 for rank-m orthogonal projections P applied to
//! random vectors z with independent entries, plus moment-ratio and
//! Khintchine-type diagnostics.

use crate::ensemble::EntryDistribution;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::seeding::{stream_rng, trial_seed};
use crate::stats::{mean_se, wilson_interval};
use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Rank-m orthogonal projection in C^n, stored as an orthonormal frame so
/// that |Pz|^2 = sum_j |u_j . z|^2 costs O(n m) per application.
#[derive(Debug, Clone)]
pub struct Projection {
    n: usize,
    frame: Vec<Vec<Complex<f64>>>,
}

impl Projection {
    pub fn from_frame(n: usize, frame: Vec<Vec<Complex<f64>>>) -> Result<Self> {
        for u in &frame {
            if u.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: u.len(),
                });
            }
        }
        if frame.len() > n {
            return Err(Error::InvalidParameter(format!(
                "rank {} exceeds dimension {n}",
                frame.len()
            )));
        }
        Ok(Self { n, frame })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.frame.len()
    }

    pub fn frame(&self) -> &[Vec<Complex<f64>>] {
        &self.frame
    }

    /// |Pz|^2.
    pub fn norm_sq(&self, z: &[Complex<f64>]) -> Result<f64> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        Ok(self.frame.iter().map(|u| dot(u, z).norm_sqr()).sum())
    }

    /// P z as a vector.
    pub fn apply(&self, z: &[Complex<f64>]) -> Result<Vec<Complex<f64>>> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        let mut out = vec![Complex::new(0.0, 0.0); self.n];
        for u in &self.frame {
            let c = dot(u, z);
            for (o, &ui) in out.iter_mut().zip(u) {
                *o += ui * c;
            }
        }
        Ok(out)
    }

    /// Entry P_{ij} of the projection matrix (for invariant checks).
    pub fn entry(&self, i: usize, j: usize) -> Complex<f64> {
        self.frame
            .iter()
            .map(|u| u[i] * u[j].conj())
            .sum()
    }
}

/// Haar-like random projection: orthonormalized iid Gaussian columns.
/// Rank 0 and rank n are valid degenerate cases (P = 0 and P = I).
pub fn random_projection(n: usize, m: usize, seed: u64) -> Result<Projection> {
    if m > n {
        return Err(Error::InvalidParameter(format!(
            "rank {m} exceeds dimension {n}"
        )));
    }
    if m == 0 {
        return Projection::from_frame(n, Vec::new());
    }
    let frame = crate::delocalization::random_frame(n, m, seed)?;
    Projection::from_frame(n, frame)
}

fn sample_vector<RG: Rng>(
    n: usize,
    dist: &EntryDistribution,
    complex_entries: bool,
    rng: &mut RG,
) -> Vec<Complex<f64>> {
    (0..n)
        .map(|_| {
            if complex_entries {
                Complex::new(dist.sample(rng), dist.sample(rng))
            } else {
                Complex::new(dist.sample(rng), 0.0)
            }
        })
        .collect()
}

/// Per-entry second moment a = E|z_i|^2 for the given component law.
pub fn entry_second_moment(dist: &EntryDistribution, complex_entries: bool) -> f64 {
    if complex_entries {
        2.0 * dist.variance
    } else {
        dist.variance
    }
}

/// Monte Carlo lower-tail estimate P(|Pz|^2 <= delta * a * m) with a Wilson
/// confidence interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LowerTailReport {
    pub m: usize,
    pub delta: f64,
    pub trials: u64,
    pub hits: u64,
    pub phat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn lower_tail_estimate(
    proj: &Projection,
    dist: &EntryDistribution,
    complex_entries: bool,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<LowerTailReport> {
    if !(delta > 0.0) || delta >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    if trials < 1_000 {
        return Err(Error::InvalidParameter("need at least 1000 trials".into()));
    }
    let a = entry_second_moment(dist, complex_entries);
    let threshold = delta * a * proj.rank() as f64;
    let dist = *dist;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(trial_seed(seed, t));
            let z = sample_vector(proj.n(), &dist, complex_entries, &mut rng);
            u64::from(proj.norm_sq(&z).unwrap() <= threshold)
        })
        .sum();
    let phat = hits as f64 / trials as f64;
    let (ci_lo, ci_hi) = wilson_interval(hits, trials, 1.96);
    Ok(LowerTailReport {
        m: proj.rank(),
        delta,
        trials,
        hits,
        phat,
        ci_lo,
        ci_hi,
    })
}

/// Normalized centered moment: || |Pz|^2 - a m ||_q / (sqrt(q) sqrt(m)),
/// estimated by Monte Carlo. `q` must be even with 2 <= q; a domain warning
/// flag is set when q >= m, where the sqrt(q m) normalization leaves the
/// regime the bound targets.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentRatio {
    pub q: u32,
    pub m: usize,
    pub ratio: f64,
    pub stderr: f64,
    pub out_of_regime: bool,
}

pub fn centered_moment_ratio(
    proj: &Projection,
    dist: &EntryDistribution,
    complex_entries: bool,
    q: u32,
    trials: u64,
    seed: u64,
) -> Result<MomentRatio> {
    if q < 2 || q % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "q must be even and >= 2, got {q}"
        )));
    }
    if trials < 1_000 {
        return Err(Error::InvalidParameter("need at least 1000 trials".into()));
    }
    let m = proj.rank();
    if m == 0 {
        return Err(Error::InvalidParameter("projection rank is zero".into()));
    }
    let a = entry_second_moment(dist, complex_entries);
    let center = a * m as f64;
    let dist = *dist;
    let powers: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(trial_seed(seed, t));
            let z = sample_vector(proj.n(), &dist, complex_entries, &mut rng);
            (proj.norm_sq(&z).unwrap() - center).powi(q as i32)
        })
        .collect();
    let (mean, se) = mean_se(&powers);
    let qf = q as f64;
    let norm_q = mean.max(0.0).powf(1.0 / qf);
    let scale = qf.sqrt() * (m as f64).sqrt();
    // delta-method standard error for the q-th root
    let stderr = if mean > 0.0 {
        norm_q * se / (qf * mean)
    } else {
        f64::NAN
    };
    Ok(MomentRatio {
        q,
        m,
        ratio: norm_q / scale,
        stderr: stderr / scale,
        out_of_regime: q as usize >= m,
    })
}

/// Monte Carlo Khintchine ratio ||X||_q / (sqrt(q) ||X||_2) for the linear
/// form X = sum_j a_j x_j, with ||X||_2 computed exactly from the
/// coefficients and the per-component second moment.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KhintchineRatio {
    pub q: u32,
    pub ratio: f64,
    pub stderr: f64,
    pub l2_exact: f64,
}

pub fn khintchine_ratio(
    coeffs: &[f64],
    dist: &EntryDistribution,
    q: u32,
    trials: u64,
    seed: u64,
) -> Result<KhintchineRatio> {
    if q < 2 || q % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "q must be even and >= 2, got {q}"
        )));
    }
    if trials < 1_000 {
        return Err(Error::InvalidParameter("need at least 1000 trials".into()));
    }
    let sum_sq: f64 = coeffs.iter().map(|a| a * a).sum();
    if sum_sq == 0.0 {
        return Err(Error::InvalidParameter(
            "all coefficients are zero".into(),
        ));
    }
    let l2_exact = (sum_sq * dist.variance).sqrt();
    let coeffs: Vec<f64> = coeffs.to_vec();
    let dist = *dist;
    let powers: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(trial_seed(seed, t));
            let x: f64 = coeffs.iter().map(|&a| a * dist.sample(&mut rng)).sum();
            x.powi(q as i32)
        })
        .collect();
    let (mean, se) = mean_se(&powers);
    let qf = q as f64;
    let norm_q = mean.max(0.0).powf(1.0 / qf);
    let scale = qf.sqrt() * l2_exact;
    let stderr = if mean > 0.0 {
        norm_q * se / (qf * mean) / scale
    } else {
        f64::NAN
    };
    Ok(KhintchineRatio {
        q,
        ratio: norm_q / scale,
        stderr,
        l2_exact,
    })
}

/// Exact q-th moment ratio for Rademacher coefficients by enumerating all
/// sign patterns; only feasible for small n (used as a test oracle and by
/// the check subcommand).
pub fn khintchine_ratio_exact_rademacher(coeffs: &[f64], q: u32) -> Result<f64> {
    if q < 2 || q % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "q must be even and >= 2, got {q}"
        )));
    }
    let n = coeffs.len();
    if n == 0 || n > 24 {
        return Err(Error::InvalidParameter(format!(
            "enumeration needs 1 <= n <= 24, got {n}"
        )));
    }
    let sum_sq: f64 = coeffs.iter().map(|a| a * a).sum();
    if sum_sq == 0.0 {
        return Err(Error::InvalidParameter("all coefficients are zero".into()));
    }
    let total = 1u64 << n;
    let mut acc = 0.0;
    for bits in 0..total {
        let mut x = 0.0;
        for (j, &a) in coeffs.iter().enumerate() {
            if bits >> j & 1 == 1 {
                x += a;
            } else {
                x -= a;
            }
        }
        acc += x.powi(q as i32);
    }
    let mean = acc / total as f64;
    let norm_q = mean.powf(1.0 / q as f64);
    Ok(norm_q / ((q as f64).sqrt() * sum_sq.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn proj(n: usize, m: usize, seed: u64) -> Projection {
        random_projection(n, m, seed).unwrap()
    }

    #[test]
    fn projection_idempotent_and_trace() {
        let p = proj(12, 5, 3);
        // trace = rank
        let tr: Complex64 = (0..12).map(|i| p.entry(i, i)).sum();
        assert!((tr.re - 5.0).abs() < 1e-10 && tr.im.abs() < 1e-12);
        // P^2 = P entrywise
        for i in 0..12 {
            for j in 0..12 {
                let pij = p.entry(i, j);
                let p2ij: Complex64 = (0..12).map(|k| p.entry(i, k) * p.entry(k, j)).sum();
                assert!((pij - p2ij).norm() < 1e-10);
            }
        }
        // hermitian
        for i in 0..12 {
            for j in 0..12 {
                assert!((p.entry(i, j) - p.entry(j, i).conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_ranks() {
        let z: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let p0 = proj(8, 0, 1);
        assert_eq!(p0.norm_sq(&z).unwrap(), 0.0);
        let pn = proj(8, 8, 1);
        let full: f64 = z.iter().map(|c| c.norm_sqr()).sum();
        assert!((pn.norm_sq(&z).unwrap() - full).abs() < 1e-9 * full);
        assert!(random_projection(8, 9, 1).is_err());
    }

    #[test]
    fn frame_vector_fixed() {
        let p = proj(10, 3, 5);
        let u = p.frame()[1].clone();
        assert!((p.norm_sq(&u).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mean_matches_a_m() {
        let p = proj(30, 7, 11);
        let dist = EntryDistribution::gaussian(0.5);
        let trials = 20_000u64;
        let vals: Vec<f64> = (0..trials)
            .map(|t| {
                let mut rng = crate::seeding::stream_rng(crate::seeding::trial_seed(21, t));
                let z = sample_vector(30, &dist, true, &mut rng);
                p.norm_sq(&z).unwrap()
            })
            .collect();
        let (mean, se) = mean_se(&vals);
        let a = entry_second_moment(&dist, true);
        assert!((mean - a * 7.0).abs() < 4.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn gaussian_tail_matches_chi_square() {
        // complex gaussian entries with component variance 1/2: |Pz|^2 is
        // (1/2) chi^2_{2m}; with m = 3, delta = 0.5, threshold a*m*delta = 1.5,
        // so P = P(chi^2_6 <= 3)
        let p = proj(20, 3, 7);
        let est = lower_tail_estimate(
            &p,
            &EntryDistribution::gaussian(0.5),
            true,
            0.5,
            40_000,
            17,
        )
        .unwrap();
        // P(chi^2_6 <= 3) = 1 - e^{-3/2}(1 + 3/2 + 9/8)
        let want = 1.0 - (-1.5f64).exp() * (1.0 + 1.5 + 1.125);
        assert!(est.ci_lo <= want && want <= est.ci_hi, "{est:?} want {want}");
    }

    #[test]
    fn unitary_invariance_of_gaussian_norms() {
        // for gaussian z, |Pz|^2 has the same law for any rank-m projection:
        // compare samples from two independent projections by KS distance
        let dist = EntryDistribution::gaussian(0.5);
        let sample = |p: &Projection, seed: u64| -> Vec<f64> {
            (0..8_000u64)
                .map(|t| {
                    let mut rng = crate::seeding::stream_rng(crate::seeding::trial_seed(seed, t));
                    let z = sample_vector(p.n(), &dist, true, &mut rng);
                    p.norm_sq(&z).unwrap()
                })
                .collect()
        };
        let a = sample(&proj(25, 6, 100), 41);
        let b = sample(&proj(25, 6, 200), 42);
        let d = crate::stats::ks_two_sample(&a, &b);
        assert!(d <= 0.025, "KS {d}");
    }

    #[test]
    fn moment_ratio_q2_gaussian() {
        // q = 2: || |Pz|^2 - m ||_2 = sqrt(Var) = sqrt(m) for the
        // (1/2) chi^2_{2m} law, so the ratio is exactly 1/sqrt(2)
        let p = proj(24, 8, 13);
        let r = centered_moment_ratio(
            &p,
            &EntryDistribution::gaussian(0.5),
            true,
            2,
            60_000,
            23,
        )
        .unwrap();
        let want = 1.0 / 2.0f64.sqrt();
        assert!(
            (r.ratio - want).abs() < 4.0 * r.stderr + 0.01,
            "ratio {} want {want} se {}",
            r.ratio,
            r.stderr
        );
        assert!(!r.out_of_regime);
    }

    #[test]
    fn moment_ratio_regime_flag() {
        let p = proj(16, 4, 19);
        let r = centered_moment_ratio(
            &p,
            &EntryDistribution::gaussian(0.5),
            true,
            4,
            2_000,
            29,
        )
        .unwrap();
        assert!(r.out_of_regime);
    }

    #[test]
    fn moment_ratio_rejects_odd_q() {
        let p = proj(16, 4, 19);
        let d = EntryDistribution::gaussian(0.5);
        assert!(centered_moment_ratio(&p, &d, true, 3, 2_000, 0).is_err());
        assert!(centered_moment_ratio(&p, &d, true, 0, 2_000, 0).is_err());
    }

    #[test]
    fn khintchine_gaussian_q4() {
        // gaussian X: E X^4 = 3 sigma^4, so ||X||_4/(2 ||X||_2) = 3^{1/4}/2
        let coeffs = vec![1.0, -0.5, 2.0, 0.25, 1.5];
        let r = khintchine_ratio(
            &coeffs,
            &EntryDistribution::gaussian(1.0),
            4,
            120_000,
            31,
        )
        .unwrap();
        let want = 3.0f64.powf(0.25) / 2.0;
        assert!(
            (r.ratio - want).abs() < 4.0 * r.stderr + 0.01,
            "ratio {} want {want}",
            r.ratio
        );
    }

    #[test]
    fn khintchine_q2_is_inv_sqrt2() {
        // q = 2 with exact l2: ratio estimates ||X||_2/(sqrt 2 ||X||_2)
        let coeffs = vec![0.3, 0.7, -1.1];
        for dist in [
            EntryDistribution::gaussian(1.0),
            EntryDistribution::rademacher(),
            EntryDistribution::smoothed_uniform(1.0),
        ] {
            let r = khintchine_ratio(&coeffs, &dist, 2, 40_000, 37).unwrap();
            let want = 1.0 / 2.0f64.sqrt();
            assert!(
                (r.ratio - want).abs() < 0.02,
                "{:?}: ratio {} want {want}",
                dist.kind,
                r.ratio
            );
        }
    }

    #[test]
    fn khintchine_rejects_zero_coeffs() {
        let d = EntryDistribution::gaussian(1.0);
        assert!(khintchine_ratio(&[0.0, 0.0], &d, 2, 2_000, 0).is_err());
    }

    #[test]
    fn rademacher_exact_enumeration_oracle() {
        // n = 16 exact enumeration vs Monte Carlo at q = 4
        let coeffs: Vec<f64> = (0..16).map(|j| 1.0 + 0.1 * j as f64).collect();
        let exact = khintchine_ratio_exact_rademacher(&coeffs, 4).unwrap();
        let mc = khintchine_ratio(
            &coeffs,
            &EntryDistribution::rademacher(),
            4,
            200_000,
            43,
        )
        .unwrap();
        assert!(
            (mc.ratio - exact).abs() < 5.0 * mc.stderr + 0.005,
            "mc {} exact {exact}",
            mc.ratio
        );
    }

    #[test]
    fn rademacher_exact_small_cases() {
        // single coefficient: X = +-a, ||X||_q = a for all q
        let r = khintchine_ratio_exact_rademacher(&[2.0], 4).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        // two equal coefficients at q = 2: ratio 1/sqrt(2) exactly
        let r2 = khintchine_ratio_exact_rademacher(&[1.0, 1.0], 2).unwrap();
        assert!((r2 - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
    }
}
