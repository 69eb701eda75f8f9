use serde::{Deserialize, Serialize};

use super::field::Scalar;
use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        let n = rows.len();
        Self::new(n, cols, rows.into_iter().flatten().collect())
    }

    pub fn column(values: Vec<T>) -> Self {
        let n = values.len();
        Matrix { rows: n, cols: 1, data: values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn vstack(blocks: &[Matrix<T>]) -> Result<Self> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::invalid("cannot stack matrices with different column counts"));
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let data = blocks.iter().flat_map(|b| b.data.iter().copied()).collect();
        Ok(Matrix { rows, cols, data })
    }

    pub fn matmul(&self, rhs: &Matrix<T>) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::invalid(format!(
                "shape mismatch {}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == T::zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    out.data[i * rhs.cols + c] = out.data[i * rhs.cols + c] + a * rhs[(l, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::invalid(format!(
                "vector has length {}, matrix has {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect())
    }

    /// `sum_l coeffs[l] * blocks[l]` for equally shaped blocks.
    pub fn linear_combination(coeffs: &[T], blocks: &[Matrix<T>]) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::invalid("empty linear combination"));
        };
        if coeffs.len() != blocks.len() || blocks.iter().any(|b| b.shape() != first.shape()) {
            return Err(Error::invalid("blocks and coefficients do not line up"));
        }
        let mut out = Self::zeros(first.rows, first.cols);
        for (&c, b) in coeffs.iter().zip(blocks) {
            if c == T::zero() {
                continue;
            }
            for (o, &v) in out.data.iter_mut().zip(&b.data) {
                *o = *o + c * v;
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.magnitude()).fold(0.0, f64::max)
    }

    /// Solves `self * X = rhs` by Gaussian elimination with partial pivoting.
    /// Returns `None` when the system is singular (to working precision for
    /// reals).
    pub fn solve(&self, rhs: &Matrix<T>) -> Option<Matrix<T>> {
        let n = self.rows;
        assert_eq!(n, self.cols, "solve needs a square matrix");
        assert_eq!(n, rhs.rows, "right-hand side has wrong row count");
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = a.max_abs();
        let floor = scale * n as f64 * 1e-13;
        for col in 0..n {
            let (piv, mag) = (col..n)
                .map(|i| (i, a[(i, col)].magnitude()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if mag <= floor || mag == 0.0 {
                return None;
            }
            if piv != col {
                a.swap_rows(piv, col);
                b.swap_rows(piv, col);
            }
            let inv = a[(col, col)].inv()?;
            for i in col + 1..n {
                let f = a[(i, col)] * inv;
                if f == T::zero() {
                    continue;
                }
                for c in col..n {
                    a[(i, c)] = a[(i, c)] - f * a[(col, c)];
                }
                for c in 0..m {
                    b[(i, c)] = b[(i, c)] - f * b[(col, c)];
                }
            }
        }
        let mut x = Matrix::zeros(n, m);
        for i in (0..n).rev() {
            let inv = a[(i, i)].inv()?;
            for c in 0..m {
                let mut acc = b[(i, c)];
                for l in i + 1..n {
                    acc = acc - a[(i, l)] * x[(l, c)];
                }
                x[(i, c)] = acc * inv;
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Matrix<T>> {
        self.solve(&Matrix::identity(self.rows))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::super::field::Fp;
    use super::*;

    #[test]
    fn solve_real_system() {
        let a = Matrix::from_rows(vec![vec![0.0, 2.0], vec![3.0, 1.0]]).unwrap();
        let x = Matrix::column(vec![1.5, -2.0]);
        let b = a.matmul(&x).unwrap();
        let got = a.solve(&b).unwrap();
        for (g, w) in got.data().iter().zip(x.data()) {
            assert!((g - w).abs() < 1e-14);
        }
    }

    #[test]
    fn solve_prime_system_is_exact() {
        let a = Matrix::from_rows(vec![
            vec![Fp::from_i64(1), Fp::from_i64(1), Fp::from_i64(1)],
            vec![Fp::from_i64(1), Fp::from_i64(2), Fp::from_i64(4)],
            vec![Fp::from_i64(1), Fp::from_i64(3), Fp::from_i64(9)],
        ])
        .unwrap();
        let inv = a.inverse().unwrap();
        assert_eq!(a.matmul(&inv).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn singular_detected() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(a.inverse().is_none());
        let p = Matrix::from_rows(vec![
            vec![Fp::from_i64(1), Fp::from_i64(2)],
            vec![Fp::from_i64(2), Fp::from_i64(4)],
        ])
        .unwrap();
        assert!(p.inverse().is_none());
    }
}
