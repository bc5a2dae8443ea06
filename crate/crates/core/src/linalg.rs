//! Small dense matrices and the handful of kernels the engines need.
//!
//! Networks here have tens to a few hundred agents, so everything is dense
//! row-major storage. Spectra are delegated to `nalgebra` in `f64`.

use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).iter().copied().sum()).collect()
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| *a * *b).sum())
            .collect())
    }

    /// `vᵀ M`, i.e. `Mᵀ v`.
    pub fn vec_mul(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: v.len() });
        }
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == T::zero() {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o = *o + vi * m;
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix<T>, f: impl Fn(T, T) -> T) -> Result<Matrix<T>> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn scale(&self, s: T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Solves `self * x = rhs` by LU decomposition with partial pivoting.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let lu = Lu::new(self)?;
        lu.solve(rhs)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        let n = self.rows;
        let lu = Lu::new(self)?;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = lu.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].to_f64_lossy())
    }

    /// All eigenvalues as `(re, im)` pairs, computed in `f64`: symmetric input
    /// goes through a symmetric solver, anything else through a real Schur form.
    pub fn eigenvalues(&self) -> Result<Vec<(f64, f64)>> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        let m = self.to_nalgebra();
        let scale = m.amax().max(f64::MIN_POSITIVE);
        if (&m - m.transpose()).amax() <= 1e-14 * scale {
            let sym = (&m + m.transpose()) * 0.5;
            return Ok(sym.symmetric_eigenvalues().iter().map(|&x| (x, 0.0)).collect());
        }
        let schur = Schur::try_new(m, f64::EPSILON, 100_000).ok_or(Error::EigenNoConvergence)?;
        Ok(schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

struct Lu<T> {
    n: usize,
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    fn new(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.rows, got: a.cols });
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let tiny = T::epsilon() * scale.max(T::one()) * T::lit(n.max(1) as f64);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= tiny || !pmax.is_finite() {
                return Err(Error::SingularSystem);
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in (k + 1)..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] = lu[(i, j)] - f * v;
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let mut y: Vec<T> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s = s - self.lu[(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s = s - self.lu[(i, j)] * y[j];
            }
            y[i] = s / self.lu[(i, i)];
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a: Matrix<f64> = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = a.solve(&[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(a.solve(&[1.0, 1.0]), Err(Error::SingularSystem));
    }

    #[test]
    fn inverse_roundtrip() {
        let a = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![0.2, 3.0, 1.0],
            vec![1.0, 0.0, 2.0],
        ])
        .unwrap();
        let prod = a.matmul(&a.inverse().unwrap()).unwrap();
        assert!(prod.max_abs_diff(&Matrix::identity(3)) < 1e-13);
    }

    #[test]
    fn vec_mul_is_transpose_product() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.vec_mul(&[1.0, 1.0]).unwrap(), a.transpose().mul_vec(&[1.0, 1.0]).unwrap());
    }

    #[test]
    fn eigenvalues_of_rotation() {
        let a = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let mut ev = a.eigenvalues().unwrap();
        ev.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap());
        assert!((ev[0].1 + 1.0).abs() < 1e-12 && ev[0].0.abs() < 1e-12);
        assert!((ev[1].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_constant_off_diagonal() {
        // β on the diagonal, α elsewhere: β + (n−1)α once and β − α otherwise
        let (n, alpha, beta) = (6, 0.3, -0.2);
        let a = Matrix::from_fn(n, n, |i, j| if i == j { beta } else { alpha });
        let mut ev: Vec<f64> = a.eigenvalues().unwrap().iter().map(|z| z.0).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!(ev[..n - 1].iter().all(|x| (x - (beta - alpha)).abs() < 1e-12));
        assert!((ev[n - 1] - (beta + 5.0 * alpha)).abs() < 1e-12);
    }
}
