//! Dense Hermitian eigensolver.
//!
//! Householder reflectors reduce H to complex tridiagonal form while the
//! unitary is accumulated; a diagonal phase similarity makes the subdiagonal
//! real nonnegative; implicit-shift QL with Wilkinson shifts then
//! diagonalizes the real symmetric tridiagonal matrix, rotating the complex
//! eigenvector columns along the way.

use crate::ensemble::HermitianMatrix;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::real::{Real, C};
use num_complex::Complex;

/// Iteration cap per eigenvalue in the QL sweep.
const MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone)]
pub struct EigenDecomposition<R: Real> {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<R>,
    /// Column alpha is the unit eigenvector of eigenvalue alpha.
    pub eigenvectors: CMatrix<R>,
}

impl<R: Real> EigenDecomposition<R> {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, alpha: usize) -> Vec<C<R>> {
        self.eigenvectors.col(alpha)
    }
}

/// Hermiticity guard shared by the full and values-only drivers.
fn check_hermitian<R: Real>(h: &HermitianMatrix<R>) -> Result<()> {
    let n = h.n();
    let scale = R::one().max(h.frobenius_norm());
    let tol = R::of(1e-12) * scale;
    let mut max_asym = R::zero();
    for i in 0..n {
        for j in i..n {
            let d = (h.at(i, j) - h.at(j, i).conj()).norm_sqr().sqrt();
            if d > max_asym {
                max_asym = d;
            }
        }
    }
    if max_asym > tol {
        return Err(Error::NotHermitian {
            max_asym: max_asym.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Reduce to real symmetric tridiagonal (d, e); when `q` is given it
/// accumulates the unitary so that Q^* H Q = T.
fn tridiagonalize<R: Real>(
    h: &HermitianMatrix<R>,
    q: Option<&mut CMatrix<R>>,
) -> (Vec<R>, Vec<R>) {
    let n = h.n();
    let zero = Complex::new(R::zero(), R::zero());
    let mut a: Vec<C<R>> = h.entries().to_vec();
    let mut accum = q;
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];

    for k in 0..n.saturating_sub(2) {
        // column k below the diagonal
        let mut xnorm2 = R::zero();
        for i in k + 1..n {
            xnorm2 = xnorm2 + a[i * n + k].norm_sqr();
        }
        let xnorm = xnorm2.sqrt();
        if xnorm == R::zero() {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let phase = if x0 == zero {
            Complex::new(R::one(), R::zero())
        } else {
            x0.unscale(x0.norm())
        };
        let alpha = -phase.scale(xnorm);
        // Householder vector v = x - alpha e1 over rows k+1..n
        for i in k + 1..n {
            v[i] = a[i * n + k];
        }
        v[k + 1] -= alpha;
        let vnorm2 = (k + 1..n).map(|i| v[i].norm_sqr()).fold(R::zero(), |x, y| x + y);
        if vnorm2 == R::zero() {
            continue;
        }
        let beta = R::two() / vnorm2;

        // p = beta * A v on the trailing block
        for i in k + 1..n {
            let row = &a[i * n..(i + 1) * n];
            let mut acc = zero;
            for j in k + 1..n {
                acc += row[j] * v[j];
            }
            p[i] = acc.scale(beta);
        }
        // kappa = (beta/2) v^* p is real since A is Hermitian
        let mut vp = zero;
        for i in k + 1..n {
            vp += v[i].conj() * p[i];
        }
        let kappa = vp.scale(beta * R::half());
        // w = p - kappa v; A <- A - v w^* - w v^*
        for i in k + 1..n {
            p[i] -= kappa * v[i];
        }
        for i in k + 1..n {
            let vi = v[i];
            let wi = p[i];
            for j in k + 1..n {
                let upd = vi * p[j].conj() + wi * v[j].conj();
                a[i * n + j] -= upd;
            }
        }
        // fix the eliminated column/row
        a[(k + 1) * n + k] = alpha;
        a[k * n + k + 1] = alpha.conj();
        for i in k + 2..n {
            a[i * n + k] = zero;
            a[k * n + i] = zero;
        }
        // Q <- Q (I - beta v v^*)
        if let Some(qm) = accum.as_deref_mut() {
            for r in 0..n {
                let row = qm.row_mut(r);
                let mut acc = zero;
                for j in k + 1..n {
                    acc += row[j] * v[j];
                }
                let acc = acc.scale(beta);
                for j in k + 1..n {
                    row[j] -= acc * v[j].conj();
                }
            }
        }
    }

    // phase similarity making the subdiagonal real nonnegative
    let mut d = vec![R::zero(); n];
    let mut e = vec![R::zero(); n.saturating_sub(1)];
    let mut ph = vec![Complex::new(R::one(), R::zero()); n];
    for i in 0..n {
        d[i] = a[i * n + i].re;
    }
    for i in 0..n.saturating_sub(1) {
        let t = a[(i + 1) * n + i];
        let mag = t.norm();
        e[i] = mag;
        ph[i + 1] = if mag == R::zero() {
            ph[i]
        } else {
            ph[i] * t.unscale(mag)
        };
    }
    if let Some(qm) = accum.as_deref_mut() {
        for r in 0..n {
            let row = qm.row_mut(r);
            for j in 0..n {
                row[j] *= ph[j];
            }
        }
    }
    (d, e)
}

/// Implicit-shift QL on the tridiagonal (d, e); rotations are applied to the
/// complex columns of `q` when present. Adapted from the classic tql2 sweep.
fn ql_implicit<R: Real>(d: &mut [R], e: &mut [R], mut q: Option<&mut CMatrix<R>>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let eps = R::epsilon();
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::NoConvergence { index: l });
            }
            // Wilkinson shift
            let mut g = (d[l + 1] - d[l]) / (R::two() * e[l]);
            let mut r = g.hypot(R::one());
            let denom = g + if g >= R::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / denom;
            let mut s = R::one();
            let mut c = R::one();
            let mut p = R::zero();
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == R::zero() {
                    d[i + 1] -= p;
                    e[m] = R::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let t = (d[i] - g) * s + R::two() * c * b;
                p = s * t;
                d[i + 1] = g + p;
                g = c * t - b;
                if let Some(qm) = q.as_deref_mut() {
                    for row in 0..qm.rows() {
                        let rr = qm.row_mut(row);
                        let f1 = rr[i + 1];
                        rr[i + 1] = f1.scale(c) + rr[i].scale(s);
                        rr[i] = rr[i].scale(c) - f1.scale(s);
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = R::zero();
        }
    }
    Ok(())
}

fn sort_and_fix_phases<R: Real>(d: &mut [R], q: Option<&mut CMatrix<R>>) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let dv: Vec<R> = d.to_vec();
    for (target, &src) in order.iter().enumerate() {
        d[target] = dv[src];
    }
    if let Some(qm) = q {
        let mut sorted = CMatrix::zeros(qm.rows(), n);
        for (target, &src) in order.iter().enumerate() {
            for rr in 0..qm.rows() {
                sorted[(rr, target)] = qm[(rr, src)];
            }
        }
        *qm = sorted;
        // phase: largest-magnitude component becomes real positive
        for col in 0..n {
            let mut best = R::zero();
            let mut idx = 0;
            for rr in 0..qm.rows() {
                let v = qm[(rr, col)].norm_sqr();
                if v > best {
                    best = v;
                    idx = rr;
                }
            }
            let z = qm[(idx, col)];
            let mag = z.norm();
            if mag > R::zero() {
                let ph = z.conj().unscale(mag);
                for rr in 0..qm.rows() {
                    qm[(rr, col)] *= ph;
                }
            }
        }
    }
}

/// Full eigendecomposition (values ascending, orthonormal eigenvectors).
pub fn eigh<R: Real>(h: &HermitianMatrix<R>) -> Result<EigenDecomposition<R>> {
    check_hermitian(h)?;
    let n = h.n();
    let mut q = CMatrix::identity(n);
    let (mut d, mut e) = tridiagonalize(h, Some(&mut q));
    ql_implicit(&mut d, &mut e, Some(&mut q))?;
    sort_and_fix_phases(&mut d, Some(&mut q));
    Ok(EigenDecomposition {
        eigenvalues: d,
        eigenvectors: q,
    })
}

/// Eigenvalues only; skips all unitary accumulation.
pub fn eigvalsh<R: Real>(h: &HermitianMatrix<R>) -> Result<Vec<R>> {
    check_hermitian(h)?;
    let (mut d, mut e) = tridiagonalize(h, None);
    ql_implicit(&mut d, &mut e, None)?;
    sort_and_fix_phases(&mut d, None);
    Ok(d)
}
