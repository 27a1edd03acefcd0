//! Hermitian Wigner ensembles.
//!
//! Entries follow h_ij = N^{-1/2}(x_ij + i y_ij) above the diagonal and
//! h_ii = N^{-1/2} x_ii on it, with x, y i.i.d. centered draws from a
//! configurable distribution. The off-diagonal variance is 1/2 per real
//! component, so E|h_ij|^2 = 1/N.

use crate::error::{Error, Result};
use crate::real::{Real, C};
use crate::seeding::{entry_seed, stream_rng};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Entry law for the i.i.d. matrix elements (per real component).
///
/// `Gaussian` and `SmoothedUniform` have smooth positive densities and are
/// the laws admitted everywhere; `Rademacher` is bounded but has no density
/// and is only meant for the bounded-i.i.d. concentration experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistKind {
    Gaussian,
    SmoothedUniform,
    Rademacher,
}

impl DistKind {
    pub fn name(self) -> &'static str {
        match self {
            DistKind::Gaussian => "gaussian",
            DistKind::SmoothedUniform => "smoothed_uniform",
            DistKind::Rademacher => "rademacher",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(DistKind::Gaussian),
            "smoothed_uniform" => Ok(DistKind::SmoothedUniform),
            "rademacher" => Ok(DistKind::Rademacher),
            other => Err(Error::Config(format!("unknown distribution '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryDistribution {
    pub kind: DistKind,
    /// Variance per real component.
    pub variance: f64,
}

/// Smoothing width of the convolving Gaussian, as a fraction of the uniform
/// support width.
const SMOOTH_FRAC: f64 = 0.05;

impl EntryDistribution {
    pub fn new(kind: DistKind, variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variance must be positive, got {variance}"
            )));
        }
        Ok(Self { kind, variance })
    }

    pub fn gaussian(variance: f64) -> Self {
        Self::new(DistKind::Gaussian, variance).unwrap()
    }

    pub fn smoothed_uniform(variance: f64) -> Self {
        Self::new(DistKind::SmoothedUniform, variance).unwrap()
    }

    pub fn rademacher() -> Self {
        Self::new(DistKind::Rademacher, 1.0).unwrap()
    }

    /// True when the law is almost surely bounded (Appendix hypothesis).
    pub fn is_bounded(&self) -> bool {
        matches!(self.kind, DistKind::Rademacher)
    }

    /// Uniform half-width L and smoothing sigma for the smoothed uniform:
    /// Var = L^2/3 + (2 L SMOOTH_FRAC)^2 is rescaled to the declared variance.
    fn smoothed_params(&self) -> (f64, f64) {
        let unit_var = 1.0 / 3.0 + (2.0 * SMOOTH_FRAC).powi(2);
        let l = (self.variance / unit_var).sqrt();
        (l, 2.0 * SMOOTH_FRAC * l)
    }

    pub fn sample<G: Rng>(&self, rng: &mut G) -> f64 {
        match self.kind {
            DistKind::Gaussian => {
                let normal = Normal::new(0.0, self.variance.sqrt()).unwrap();
                normal.sample(rng)
            }
            DistKind::SmoothedUniform => {
                let (l, sigma) = self.smoothed_params();
                let u: f64 = rng.gen_range(-l..l);
                let g = Normal::new(0.0, sigma).unwrap().sample(rng);
                u + g
            }
            DistKind::Rademacher => {
                let s = self.variance.sqrt();
                if rng.gen::<bool>() {
                    s
                } else {
                    -s
                }
            }
        }
    }

    /// Density at `x` for laws that have one.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self.kind {
            DistKind::Gaussian => {
                let s2 = self.variance;
                Some((-x * x / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt())
            }
            DistKind::SmoothedUniform => {
                let (l, sigma) = self.smoothed_params();
                let phi = |t: f64| 0.5 * (1.0 + erf(t / std::f64::consts::SQRT_2));
                Some((phi((x + l) / sigma) - phi((x - l) / sigma)) / (2.0 * l))
            }
            DistKind::Rademacher => None,
        }
    }
}

/// erf via the erfc rational approximation (fractional error < 1.2e-7).
pub fn erf(x: f64) -> f64 {
    1.0 - erfc(x)
}

pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Configuration of one Wigner ensemble draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerConfig {
    pub n: usize,
    /// Off-diagonal component law; variance must be 1/2 per real component.
    pub off_diag: EntryDistribution,
    pub diag: EntryDistribution,
    pub seed: u64,
}

impl WignerConfig {
    /// GUE convention: Gaussian off-diagonal components of variance 1/2 and
    /// Gaussian diagonal of variance 1.
    pub fn gue(n: usize, seed: u64) -> Self {
        Self {
            n,
            off_diag: EntryDistribution::gaussian(0.5),
            diag: EntryDistribution::gaussian(1.0),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension);
        }
        if (self.off_diag.variance - 0.5).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "off-diagonal variance per component must be 1/2, got {}",
                self.off_diag.variance
            )));
        }
        Ok(())
    }
}

/// Dense Hermitian matrix, full storage, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<R: Real> {
    n: usize,
    data: Vec<C<R>>,
}

impl<R: Real> HermitianMatrix<R> {
    /// Build from an entry generator for the upper triangle (j >= i).
    /// Hermiticity is forced: the lower triangle mirrors the upper and the
    /// diagonal keeps only its real part.
    pub fn from_upper<F: FnMut(usize, usize) -> C<R>>(n: usize, mut f: F) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension);
        }
        let mut data = vec![Complex::new(R::zero(), R::zero()); n * n];
        for i in 0..n {
            for j in i..n {
                let v = if i == j {
                    Complex::new(f(i, j).re, R::zero())
                } else {
                    f(i, j)
                };
                data[i * n + j] = v;
                data[j * n + i] = v.conj();
            }
        }
        Ok(Self { n, data })
    }

    /// Wrap raw row-major entries, verifying Hermiticity exactly.
    pub fn from_entries(n: usize, data: Vec<C<R>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension);
        }
        assert_eq!(data.len(), n * n);
        let mut max_asym = R::zero();
        for i in 0..n {
            for j in i..n {
                let d = (data[i * n + j] - data[j * n + i].conj()).norm_sqr().sqrt();
                if d > max_asym {
                    max_asym = d;
                }
            }
        }
        if max_asym > R::zero() {
            return Err(Error::NotHermitian {
                max_asym: max_asym.to_f64_lossy(),
            });
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C<R> {
        self.data[i * self.n + j]
    }

    pub fn entries(&self) -> &[C<R>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C<R>] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> R {
        (0..self.n).map(|i| self.at(i, i).re).fold(R::zero(), |a, b| a + b)
    }

    pub fn frobenius_norm(&self) -> R {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(R::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn matvec(&self, x: &[C<R>]) -> Vec<C<R>> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let mut acc = Complex::new(R::zero(), R::zero());
                for (a, b) in self.row(i).iter().zip(x) {
                    acc += a * b;
                }
                acc
            })
            .collect()
    }

    pub fn to_cmatrix(&self) -> crate::linalg::CMatrix<R> {
        crate::linalg::CMatrix::from_rows(self.n, self.n, self.data.clone())
    }
}

/// Sample a Hermitian Wigner matrix. Entry (i, j) draws from its own derived
/// stream, so the result is independent of evaluation order and identical
/// across thread counts.
pub fn sample_wigner(config: &WignerConfig) -> Result<HermitianMatrix<f64>> {
    config.validate()?;
    let n = config.n;
    let scale = 1.0 / (n as f64).sqrt();
    let mut rows: Vec<Vec<Complex<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![Complex::new(0.0, 0.0); n];
            for j in i..n {
                let mut rng = stream_rng(entry_seed(config.seed, i, j));
                row[j] = if i == j {
                    Complex::new(config.diag.sample(&mut rng) * scale, 0.0)
                } else {
                    let x = config.off_diag.sample(&mut rng);
                    let y = config.off_diag.sample(&mut rng);
                    Complex::new(x * scale, y * scale)
                };
            }
            row
        })
        .collect();
    // mirror the strictly-upper part
    for i in 0..n {
        for j in 0..i {
            rows[i][j] = rows[j][i].conj();
        }
    }
    let data: Vec<Complex<f64>> = rows.into_iter().flatten().collect();
    HermitianMatrix::from_entries(n, data)
}

/// Empirical moments with standard errors, for sanity-checking entry laws.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub mean: f64,
    pub variance: f64,
    pub fourth_moment: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_fourth: f64,
    pub samples: usize,
}

pub fn moment_report(dist: &EntryDistribution, samples: usize, seed: u64) -> Result<MomentReport> {
    if samples < 1000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let mut rng = stream_rng(seed);
    let draws: Vec<f64> = (0..samples).map(|_| dist.sample(&mut rng)).collect();
    let nf = samples as f64;
    let mean = draws.iter().sum::<f64>() / nf;
    let m2 = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    let m4c = draws.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let m4 = draws.iter().map(|x| x.powi(4)).sum::<f64>() / nf;
    let m8 = draws.iter().map(|x| x.powi(8)).sum::<f64>() / nf;
    Ok(MomentReport {
        mean,
        variance: m2,
        fourth_moment: m4,
        se_mean: (m2 / nf).sqrt(),
        se_variance: ((m4c - m2 * m2).max(0.0) / nf).sqrt(),
        se_fourth: ((m8 - m4 * m4).max(0.0) / nf).sqrt(),
        samples,
    })
}
