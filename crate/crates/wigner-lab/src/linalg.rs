//! Small dense complex linear algebra: the matrix container shared by the
//! eigensolver, LU factorization for resolvent cross-checks, and
//! Gram-Schmidt orthonormalization for random projections.

use crate::error::{Error, Result};
use crate::real::{Real, C};
use num_complex::Complex;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<R: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<R>>,
}

impl<R: Real> CMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(R::zero(), R::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(R::one(), R::zero());
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<C<R>>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C<R>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [C<R>] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[C<R>] {
        &self.data
    }

    /// Column `j` as an owned vector.
    pub fn col(&self, j: usize) -> Vec<C<R>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// y = A x.
    pub fn matvec(&self, x: &[C<R>]) -> Vec<C<R>> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let mut acc = Complex::new(R::zero(), R::zero());
                for (a, b) in row.iter().zip(x) {
                    acc += a * b;
                }
                acc
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> R {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(R::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }
}

impl<R: Real> std::ops::Index<(usize, usize)> for CMatrix<R> {
    type Output = C<R>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<R> {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> std::ops::IndexMut<(usize, usize)> for CMatrix<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<R> {
        &mut self.data[i * self.cols + j]
    }
}

/// Hermitian inner product x·y = Σ conj(x_i) y_i.
#[inline]
pub fn dot<R: Real>(x: &[C<R>], y: &[C<R>]) -> C<R> {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = Complex::new(R::zero(), R::zero());
    for (a, b) in x.iter().zip(y) {
        acc += a.conj() * b;
    }
    acc
}

#[inline]
pub fn norm_sqr<R: Real>(x: &[C<R>]) -> R {
    x.iter().map(|z| z.norm_sqr()).fold(R::zero(), |a, b| a + b)
}

/// LU factorization with partial pivoting, stored in-place.
pub struct Lu<R: Real> {
    lu: CMatrix<R>,
    piv: Vec<usize>,
    swaps: usize,
}

pub fn lu_factor<R: Real>(a: &CMatrix<R>) -> Result<Lu<R>> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols(),
        });
    }
    let mut lu = a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    let mut swaps = 0usize;
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].norm_sqr();
        for i in k + 1..n {
            let v = lu[(i, k)].norm_sqr();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == R::zero() {
            return Err(Error::Numeric("singular matrix in LU".into()));
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            piv.swap(k, p);
            swaps += 1;
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            for j in k + 1..n {
                let sub = factor * lu[(k, j)];
                lu[(i, j)] -= sub;
            }
        }
    }
    Ok(Lu { lu, piv, swaps })
}

impl<R: Real> Lu<R> {
    pub fn solve(&self, b: &[C<R>]) -> Vec<C<R>> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x: Vec<C<R>> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                let sub = self.lu[(i, j)] * x[j];
                x[i] -= sub;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let sub = self.lu[(i, j)] * x[j];
                x[i] -= sub;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn det(&self) -> C<R> {
        let n = self.lu.rows();
        let mut d = Complex::new(R::one(), R::zero());
        for i in 0..n {
            d *= self.lu[(i, i)];
        }
        if self.swaps % 2 == 1 {
            d = -d;
        }
        d
    }
}

/// Inverse by LU; used only for small-N identity cross-checks.
pub fn lu_inverse<R: Real>(a: &CMatrix<R>) -> Result<CMatrix<R>> {
    let n = a.rows();
    let lu = lu_factor(a)?;
    let mut inv = CMatrix::zeros(n, n);
    let mut e = vec![Complex::new(R::zero(), R::zero()); n];
    for j in 0..n {
        e[j] = Complex::new(R::one(), R::zero());
        let col = lu.solve(&e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
        e[j] = Complex::new(R::zero(), R::zero());
    }
    Ok(inv)
}

/// Orthonormalize the given vectors in place (modified Gram-Schmidt with one
/// reorthogonalization pass). Errors if the set is numerically dependent.
pub fn orthonormalize<R: Real>(vecs: &mut [Vec<C<R>>]) -> Result<()> {
    let n = match vecs.first() {
        Some(v) => v.len(),
        None => return Ok(()),
    };
    for i in 0..vecs.len() {
        for _pass in 0..2 {
            for j in 0..i {
                let proj = {
                    let (head, tail) = vecs.split_at_mut(i);
                    dot(&head[j], &tail[0])
                };
                let (head, tail) = vecs.split_at_mut(i);
                for (t, h) in tail[0].iter_mut().zip(head[j].iter()) {
                    *t -= proj * h;
                }
            }
        }
        let nrm = norm_sqr(&vecs[i]).sqrt();
        if nrm <= R::of(1e-12) * R::of(n as f64) {
            return Err(Error::Numeric("dependent vectors in orthonormalization".into()));
        }
        for v in vecs[i].iter_mut() {
            *v = v.unscale(nrm);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn m2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> CMatrix<f64> {
        CMatrix::from_rows(2, 2, vec![a, b, c, d])
    }

    #[test]
    fn lu_solves_2x2() {
        let a = m2(
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(3.0, 0.0),
        );
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        let lu = lu_factor(&a).unwrap();
        let x = lu.solve(&b);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).norm() < 1e-14);
        }
    }

    #[test]
    fn det_matches_cofactor() {
        let a = m2(
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(3.0, 0.0),
        );
        let det = lu_factor(&a).unwrap().det();
        // 2*3 - (1+i)(1-i) = 6 - 2 = 4
        assert!((det - Complex64::new(4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = m2(
            Complex64::new(1.0, 0.5),
            Complex64::new(2.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(3.0, 0.0),
        );
        let inv = lu_inverse(&a).unwrap();
        for i in 0..2 {
            let e: Vec<Complex64> = (0..2)
                .map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
                .collect();
            let col = inv.matvec(&a.col(i));
            for (x, y) in col.iter().zip(&e) {
                assert!((x - y).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn gram_schmidt_orthonormal() {
        let mut vs = vec![
            vec![Complex64::new(1.0, 2.0), Complex64::new(0.5, 0.0), Complex64::new(0.0, -1.0)],
            vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)],
        ];
        orthonormalize(&mut vs).unwrap();
        assert!((norm_sqr(&vs[0]) - 1.0).abs() < 1e-14);
        assert!((norm_sqr(&vs[1]) - 1.0).abs() < 1e-14);
        assert!(dot(&vs[0], &vs[1]).norm() < 1e-13);
    }
}
