//! Transform-level analytics: the empirical Stieltjes transform
//! m(z) = (1/N) sum 1/(mu - z), the Cauchy-regularized density of states,
//! the closed-form semicircle transform m_sc and density rho_sc, the window
//! counting function, and the deviation sweep over the bulk grid
//! S = { E + i eta : |E| <= 2 - kappa, eta_min <= eta <= 1 }.

use crate::error::{Error, Result};
use crate::real::{Real, C};
use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

/// Spectral probe point z = E + i eta, eta > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralParameter<R: Real> {
    pub e: R,
    pub eta: R,
}

impl<R: Real> SpectralParameter<R> {
    pub fn new(e: R, eta: R) -> Result<Self> {
        if !(eta > R::zero()) {
            return Err(Error::InvalidParameter(format!(
                "eta must be strictly positive, got {eta}"
            )));
        }
        Ok(Self { e, eta })
    }

    #[inline]
    pub fn z(&self) -> C<R> {
        Complex::new(self.e, self.eta)
    }
}

/// Empirical Stieltjes transform of a spectrum at z.
pub fn m_empirical<R: Real>(eigs: &[R], z: SpectralParameter<R>) -> Result<C<R>> {
    if eigs.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let zc = z.z();
    let mut acc = Complex::new(R::zero(), R::zero());
    for &mu in eigs {
        acc += (Complex::new(mu, R::zero()) - zc).inv();
    }
    Ok(acc.unscale(R::of(eigs.len() as f64)))
}

/// Density of states regularized at scale eta: Im m(E + i eta) / pi.
pub fn rho_eta<R: Real>(eigs: &[R], e: R, eta: R) -> Result<R> {
    if !(eta > R::zero()) {
        return Err(Error::InvalidParameter("eta must be positive".into()));
    }
    if eigs.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let mut acc = R::zero();
    for &mu in eigs {
        let d = mu - e;
        acc += eta / (d * d + eta * eta);
    }
    Ok(acc / (R::of(eigs.len() as f64) * R::pi()))
}

/// Semicircle Stieltjes transform: the root of M + 1/(M + z) = 0 with
/// Im M > 0. Both quadratic roots are formed and the Herglotz one selected,
/// which is branch-cut safe near E = +-2.
pub fn m_sc<R: Real>(z: C<R>) -> C<R> {
    let four = Complex::new(R::of(4.0), R::zero());
    let disc = (z * z - four).sqrt();
    let half = R::half();
    let r1 = (-z + disc).scale(half);
    let r2 = (-z - disc).scale(half);
    if r1.im > r2.im {
        r1
    } else {
        r2
    }
}

/// Wigner semicircle density (1/2pi) sqrt(4 - x^2) on [-2, 2].
pub fn rho_sc<R: Real>(e: R) -> R {
    let four = R::of(4.0);
    if e * e >= four {
        R::zero()
    } else {
        (four - e * e).sqrt() / (R::two() * R::pi())
    }
}

/// Semicircle distribution function F_sc(x) = P(mu <= x).
pub fn cdf_sc<R: Real>(x: R) -> R {
    let two = R::two();
    if x <= -two {
        return R::zero();
    }
    if x >= two {
        return R::one();
    }
    let four = R::of(4.0);
    let half = R::half();
    half + (x * (four - x * x).sqrt() + four * (x / two).asin()) / (four * R::pi())
}

/// Quantile spectrum mu_alpha = F_sc^{-1}((alpha - 1/2)/N), the deterministic
/// stand-in for a perfectly semicircular spectrum.
pub fn semicircle_quantiles<R: Real>(n: usize) -> Vec<R> {
    (0..n)
        .map(|alpha| {
            let p = (R::of(alpha as f64) + R::half()) / R::of(n as f64);
            // bisection on the monotone CDF
            let mut lo = R::of(-2.0);
            let mut hi = R::of(2.0);
            for _ in 0..200 {
                let mid = (lo + hi) * R::half();
                if cdf_sc(mid) < p {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= R::epsilon() * R::of(4.0) {
                    break;
                }
            }
            (lo + hi) * R::half()
        })
        .collect()
}

/// Number of eigenvalues within eta_star of E.
pub fn counting<R: Real>(eigs: &[R], e: R, eta_star: R) -> Result<usize> {
    if !(eta_star > R::zero()) {
        return Err(Error::InvalidParameter("eta_star must be positive".into()));
    }
    Ok(eigs.iter().filter(|&&mu| (mu - e).abs() <= eta_star).count())
}

/// Evaluation grid over the bulk set: uniform in E with the given spacing,
/// dyadic in eta from eta_min up to 1.
#[derive(Debug, Clone)]
pub struct SpectralGrid<R: Real> {
    pub kappa: R,
    pub eta_min: R,
    pub spacing: R,
    pub points: Vec<SpectralParameter<R>>,
}

impl<R: Real> SpectralGrid<R> {
    pub fn new(kappa: R, eta_min: R, spacing: R) -> Result<Self> {
        if !(kappa > R::zero() && kappa < R::two()) {
            return Err(Error::InvalidParameter(format!("kappa must be in (0,2), got {kappa}")));
        }
        if !(eta_min > R::zero() && eta_min <= R::one()) {
            return Err(Error::InvalidParameter(format!(
                "eta_min must be in (0,1], got {eta_min}"
            )));
        }
        if !(spacing > R::zero()) {
            return Err(Error::InvalidParameter("spacing must be positive".into()));
        }
        let e_max = R::two() - kappa;
        let mut etas = Vec::new();
        let mut eta = eta_min;
        while eta < R::one() {
            etas.push(eta);
            eta = eta * R::two();
        }
        etas.push(R::one());
        let steps = (e_max * R::two() / spacing).to_f64_lossy().ceil() as usize;
        let mut points = Vec::with_capacity(etas.len() * (steps + 1));
        for &eta in &etas {
            for s in 0..=steps {
                let e = (-e_max + spacing * R::of(s as f64)).min(e_max);
                points.push(SpectralParameter { e, eta });
            }
        }
        Ok(Self {
            kappa,
            eta_min,
            spacing,
            points,
        })
    }
}

/// Result of the sup-deviation sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridDeviation<R: Real> {
    pub sup: R,
    pub argmax: SpectralParameter<R>,
    /// Set when the grid spacing is too coarse for the Lipschitz bound
    /// 1/eta^2 at the finest level: the sup may be underestimated between
    /// grid points.
    pub under_resolved: bool,
}

/// Sup over the grid of |m_N(z) - m_sc(z)|, with the maximizing point.
/// Parallel over grid points with a deterministic by-index reduction.
pub fn grid_sup_deviation<R: Real>(
    eigs: &[R],
    grid: &SpectralGrid<R>,
) -> Result<GridDeviation<R>> {
    if eigs.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let under_resolved = grid.spacing > grid.eta_min * grid.eta_min / R::of(4.0);
    let best = grid
        .points
        .par_iter()
        .enumerate()
        .map(|(idx, &p)| {
            let dev = (m_empirical(eigs, p).unwrap() - m_sc(p.z())).norm_sqr().sqrt();
            (idx, dev)
        })
        .reduce(
            || (usize::MAX, R::neg_infinity()),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(GridDeviation {
        sup: best.1,
        argmax: grid.points[best.0],
        under_resolved,
    })
}

/// One row of the plot-data emission for the deviation sweep.
#[derive(Debug, Clone, Copy)]
pub struct GridRow<R: Real> {
    pub e: R,
    pub eta: R,
    pub m: C<R>,
    pub msc: C<R>,
}

pub fn grid_rows<R: Real>(eigs: &[R], grid: &SpectralGrid<R>) -> Result<Vec<GridRow<R>>> {
    grid.points
        .iter()
        .map(|&p| {
            let m = m_empirical(eigs, p)?;
            Ok(GridRow {
                e: p.e,
                eta: p.eta,
                m,
                msc: m_sc(p.z()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn sp(e: f64, eta: f64) -> SpectralParameter<f64> {
        SpectralParameter::new(e, eta).unwrap()
    }

    #[test]
    fn single_atom_transform() {
        let m = m_empirical(&[1.5], sp(0.2, 0.3)).unwrap();
        let want = (Complex64::new(1.5, 0.0) - Complex64::new(0.2, 0.3)).inv();
        assert!((m - want).norm() < 1e-15);
    }

    #[test]
    fn two_atom_hand_value() {
        // eigs {-1, +1} at z = i: (1/2)(1/(-1-i) + 1/(1-i)) = i/2
        let m = m_empirical(&[-1.0, 1.0], sp(0.0, 1.0)).unwrap();
        assert!((m - Complex64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn herglotz_positive_imaginary() {
        let eigs = semicircle_quantiles::<f64>(50);
        for &(e, eta) in &[(0.0, 0.01), (1.3, 0.5), (-1.9, 0.07)] {
            let m = m_empirical(&eigs, sp(e, eta)).unwrap();
            assert!(m.im > 0.0);
        }
    }

    #[test]
    fn rho_matches_im_m_over_pi() {
        let eigs = vec![-0.7, 0.1, 0.4, 1.2];
        let (e, eta) = (0.25, 0.15);
        let m = m_empirical(&eigs, sp(e, eta)).unwrap();
        let rho = rho_eta(&eigs, e, eta).unwrap();
        assert!((m.im / std::f64::consts::PI - rho).abs() < 1e-15);
    }

    #[test]
    fn rho_peak_single_atom() {
        let eta = 0.02;
        let rho = rho_eta(&[0.0], 0.0, eta).unwrap();
        assert!((rho - 1.0 / (std::f64::consts::PI * eta)).abs() < 1e-12);
    }

    #[test]
    fn rho_two_atoms_hand_value() {
        let rho = rho_eta(&[-1.0, 1.0], 0.0, 1.0).unwrap();
        assert!((rho - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn rho_eta_integrates_to_one() {
        // wide Simpson window plus arctangent tails
        let eigs = vec![-0.9, -0.2, 0.3, 1.4];
        let eta = 0.1;
        let (a, b) = (-60.0, 60.0);
        let steps = 400_000;
        let h = (b - a) / steps as f64;
        let f = |x: f64| rho_eta(&eigs, x, eta).unwrap();
        let mut s = f(a) + f(b);
        for k in 1..steps {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s *= h / 3.0;
        // Cauchy tail mass outside [a, b] per atom: 1 - (1/pi)(atan((b-mu)/eta) - atan((a-mu)/eta))
        let tail: f64 = eigs
            .iter()
            .map(|&mu| {
                1.0 - (((b - mu) / eta).atan() - ((a - mu) / eta).atan()) / std::f64::consts::PI
            })
            .sum::<f64>()
            / eigs.len() as f64;
        assert!((s + tail - 1.0).abs() < 1e-6, "sum {} tail {}", s, tail);
    }

    #[test]
    fn msc_at_i() {
        // root of M + 1/(M+i) = 0: i (sqrt(5) - 1)/2
        let m = m_sc(Complex64::new(0.0, 1.0));
        let want = Complex64::new(0.0, (5f64.sqrt() - 1.0) / 2.0);
        assert!((m - want).norm() < 1e-14);
    }

    #[test]
    fn msc_edge_limit_center() {
        let m = m_sc(Complex64::new(0.0, 1e-12));
        assert!((m - Complex64::new(0.0, 1.0)).norm() < 1e-6);
    }

    #[test]
    fn msc_fixed_point_residual_on_grid() {
        let grid = SpectralGrid::new(0.5, 0.01, 0.05).unwrap();
        for p in &grid.points {
            let z = p.z();
            let m = m_sc(z);
            let resid = (m + (m + z).inv()).norm();
            assert!(resid <= 1e-13, "residual {resid} at {z}");
        }
    }

    #[test]
    fn rho_sc_values() {
        assert!((rho_sc(0.0) - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(rho_sc(2.0), 0.0);
        assert_eq!(rho_sc(-2.0), 0.0);
        assert_eq!(rho_sc(3.0), 0.0);
        assert!((rho_sc(1.0) - 3f64.sqrt() / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn rho_sc_integrates_to_one() {
        // Simpson over [-2, 2]
        let steps = 2_000_000;
        let h = 4.0 / steps as f64;
        let mut s = rho_sc(-2.0) + rho_sc(2.0);
        for k in 1..steps {
            s += rho_sc(-2.0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s *= h / 3.0;
        assert!((s - 1.0).abs() < 1e-10, "integral {s}");
    }

    #[test]
    fn counting_windows() {
        let eigs = vec![-1.0, 0.0, 1.0];
        assert_eq!(counting(&eigs, 0.0, 10.0).unwrap(), 3);
        assert_eq!(counting(&eigs, 5.0, 0.5).unwrap(), 0);
        assert_eq!(counting(&[0.0], 0.0, 1.0).unwrap(), 1);
        assert!(counting(&eigs, 0.0, 0.0).is_err());
    }

    #[test]
    fn conjugate_symmetry_under_mirroring() {
        let eigs = vec![-0.8, 0.2, 1.1];
        let mirrored: Vec<f64> = eigs.iter().map(|x| -x).collect();
        let m1 = m_empirical(&eigs, sp(0.4, 0.2)).unwrap();
        let m2 = m_empirical(&mirrored, sp(-0.4, 0.2)).unwrap();
        assert!((m1 - (-m2.conj())).norm() < 1e-14);
    }

    #[test]
    fn halving_inequality_pointwise() {
        let eigs = semicircle_quantiles::<f64>(64);
        for &(e, eta) in &[(0.0, 0.1), (1.2, 0.03), (-0.5, 0.4)] {
            let hi = m_empirical(&eigs, sp(e, eta)).unwrap().im;
            let lo = m_empirical(&eigs, sp(e, eta / 2.0)).unwrap().im;
            assert!(lo >= hi / 2.0 - 1e-14);
        }
    }

    #[test]
    fn quantile_spectrum_close_to_semicircle() {
        let n = 500;
        let eigs = semicircle_quantiles::<f64>(n);
        let grid = SpectralGrid::new(0.5, 0.05, 0.01).unwrap();
        let dev = grid_sup_deviation(&eigs, &grid).unwrap();
        assert!(dev.sup <= 0.05, "sup {}", dev.sup);
    }

    #[test]
    fn degenerate_grid_is_pointwise() {
        let eigs = vec![-1.0, 1.0];
        let grid = SpectralGrid {
            kappa: 0.5,
            eta_min: 1.0,
            spacing: 1.0,
            points: vec![sp(0.0, 1.0)],
        };
        let dev = grid_sup_deviation(&eigs, &grid).unwrap();
        let want = (m_empirical(&eigs, sp(0.0, 1.0)).unwrap() - m_sc(Complex64::new(0.0, 1.0))).norm();
        assert!((dev.sup - want).abs() < 1e-15);
    }

    #[test]
    fn coarse_grid_flagged() {
        let eigs = vec![0.0];
        let grid = SpectralGrid::new(0.5, 0.01, 0.01).unwrap();
        assert!(grid_sup_deviation(&eigs, &grid).unwrap().under_resolved);
        let fine = SpectralGrid::new(0.5, 0.5, 0.05).unwrap();
        assert!(!grid_sup_deviation(&eigs, &fine).unwrap().under_resolved);
    }

    #[test]
    fn cdf_quantile_consistency() {
        let q = semicircle_quantiles::<f64>(100);
        for (alpha, &x) in q.iter().enumerate() {
            let p = (alpha as f64 + 0.5) / 100.0;
            assert!((cdf_sc(x) - p).abs() < 1e-10);
        }
        assert!(q.windows(2).all(|w| w[0] < w[1]));
    }
}
