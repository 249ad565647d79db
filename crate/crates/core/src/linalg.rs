//! Small dense linear algebra over [`Scalar`].
//!
//! Dimensions here are tiny (feature vectors of a few dozen entries), so a
//! row-major `Vec` with hand-written loops is all the oracles need.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Euclidean projection onto the closed unit ball, in place. Returns whether `v` moved.
pub fn project_unit_ball<T: Scalar>(v: &mut [T]) -> bool {
    let n = norm2(v);
    if n > T::one() {
        for x in v.iter_mut() {
            *x = *x / n;
        }
        true
    } else {
        false
    }
}

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn scaled_identity(dim: usize, diag: T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = diag;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::config("matrix rows must form a square"));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.dim);
        self.data.chunks(self.dim).map(|row| dot(row, x)).collect()
    }

    /// `xᵀ M x`.
    pub fn quad_form(&self, x: &[T]) -> T {
        dot(x, &self.mul_vec(x))
    }

    /// `M += w · x xᵀ`.
    pub fn add_outer(&mut self, x: &[T], w: T) {
        let d = self.dim;
        for i in 0..d {
            let wi = w * x[i];
            for j in 0..d {
                self.data[i * d + j] = self.data[i * d + j] + wi * x[j];
            }
        }
    }

    /// Treating `self` as `A⁻¹`, replaces it with `(A + x xᵀ)⁻¹` (Sherman–Morrison).
    pub fn sherman_morrison_add(&mut self, x: &[T]) {
        let px = self.mul_vec(x);
        let denom = T::one() + dot(x, &px);
        let d = self.dim;
        for i in 0..d {
            let s = px[i] / denom;
            for j in 0..d {
                self.data[i * d + j] = self.data[i * d + j] - s * px[j];
            }
        }
        self.symmetrize();
    }

    pub fn symmetrize(&mut self) {
        let d = self.dim;
        let half = T::lit(0.5);
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = (self.data[i * d + j] + self.data[j * d + i]) * half;
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg;
            }
        }
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Solves `A x = b` for symmetric positive-definite `A` by Cholesky factorization.
    pub fn cholesky_solve(&self, b: &[T]) -> Result<Vec<T>> {
        let d = self.dim;
        let mut l = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s = s - l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if !(s > T::zero()) {
                        return Err(Error::numeric("matrix is not positive definite"));
                    }
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        let mut y = vec![T::zero(); d];
        for i in 0..d {
            let mut s = b[i];
            for k in 0..i {
                s = s - l[i * d + k] * y[k];
            }
            y[i] = s / l[i * d + i];
        }
        let mut x = vec![T::zero(); d];
        for i in (0..d).rev() {
            let mut s = y[i];
            for k in (i + 1)..d {
                s = s - l[k * d + i] * x[k];
            }
            x[i] = s / l[i * d + i];
        }
        Ok(x)
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues and the matching eigenvectors (as columns, i.e.
    /// `vectors[k]` is the k-th eigenvector).
    pub fn symmetric_eigen(&self) -> (Vec<T>, Vec<Vec<T>>) {
        let d = self.dim;
        let mut a = self.clone();
        a.symmetrize();
        let mut v = Self::scaled_identity(d, T::one());
        let eps = T::epsilon();
        for _sweep in 0..100 {
            let mut off = T::zero();
            let mut total = T::zero();
            for i in 0..d {
                for j in 0..d {
                    let x = a.get(i, j) * a.get(i, j);
                    total = total + x;
                    if i != j {
                        off = off + x;
                    }
                }
            }
            if off <= eps * eps * total || off == T::zero() {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a.get(p, q);
                    if apq == T::zero() {
                        continue;
                    }
                    let app = a.get(p, p);
                    let aqq = a.get(q, q);
                    let theta = (aqq - app) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..d {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                    for k in 0..d {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
        let values = (0..d).map(|i| a.get(i, i)).collect();
        let vectors = (0..d).map(|k| (0..d).map(|i| v.get(i, k)).collect()).collect();
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> T {
        let (vals, _) = self.symmetric_eigen();
        vals.into_iter().fold(T::infinity(), T::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sherman_morrison_matches_cholesky_solve() {
        let mut a = SquareMatrix::<f64>::scaled_identity(3, 1.0);
        let mut inv = SquareMatrix::<f64>::scaled_identity(3, 1.0);
        let xs = [[0.3, -0.2, 0.5], [0.1, 0.9, -0.1], [-0.4, 0.4, 0.4]];
        for x in &xs {
            a.add_outer(x, 1.0);
            inv.sherman_morrison_add(x);
        }
        let b = [1.0, -2.0, 0.5];
        let direct = a.cholesky_solve(&b).unwrap();
        let incremental = inv.mul_vec(&b);
        for (u, v) in direct.iter().zip(&incremental) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_recovers_diagonal_spectrum() {
        let m = SquareMatrix::from_rows(&[vec![2.0f64, 1.0], vec![1.0, 2.0]]).unwrap();
        let (mut vals, vecs) = m.symmetric_eigen();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        for v in &vecs {
            assert!((norm2(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(m.cholesky_solve(&[1.0, 1.0]), Err(Error::Numeric(_))));
    }

    #[test]
    fn ball_projection() {
        let mut v = vec![3.0f32, 4.0];
        assert!(project_unit_ball(&mut v));
        assert!((norm2(&v) - 1.0).abs() < 1e-6);
        let mut w = vec![0.3f32, 0.4];
        assert!(!project_unit_ball(&mut w));
    }
}
