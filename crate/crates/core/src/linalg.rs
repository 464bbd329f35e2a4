//! Small dense matrices over exact scalars.

use crate::error::{Error, Result};
use crate::series::Scalar;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
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

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..=i).all(|j| self[(i, j)] == -&self[(j, i)]))
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    out[(i, j)] += &prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Scalar::zero();
                for (j, vj) in v.iter().enumerate() {
                    acc += &(&self[(i, j)] * vj);
                }
                acc
            })
            .collect()
    }

    /// Exact inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::Singular("matrix is not square".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a[(r, col)].is_zero())
                .ok_or_else(|| Error::Singular(format!("no pivot in column {col}")))?;
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let p = a[(col, col)].inv().unwrap();
            a.scale_row(col, &p);
            inv.scale_row(col, &p);
            for r in 0..n {
                if r != col && !a[(r, col)].is_zero() {
                    let factor = a[(r, col)].clone();
                    a.sub_row_multiple(r, col, &factor);
                    inv.sub_row_multiple(r, col, &factor);
                }
            }
        }
        Ok(inv)
    }

    /// Rank by row reduction.
    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut r = 0;
        for col in 0..self.cols {
            let Some(pivot) = (r..self.rows).find(|&i| !a[(i, col)].is_zero()) else {
                continue;
            };
            a.swap_rows(r, pivot);
            let pinv = a[(r, col)].inv().unwrap();
            for i in r + 1..self.rows {
                if !a[(i, col)].is_zero() {
                    let factor = &a[(i, col)] * &pinv;
                    a.sub_row_multiple(i, r, &factor);
                }
            }
            r += 1;
        }
        r
    }

    pub fn det(&self) -> Scalar {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Scalar::one();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !a[(r, col)].is_zero()) else {
                return Scalar::zero();
            };
            if pivot != col {
                a.swap_rows(col, pivot);
                det = -det;
            }
            let p = a[(col, col)].clone();
            det = &det * &p;
            let pinv = p.inv().unwrap();
            for r in col + 1..n {
                if !a[(r, col)].is_zero() {
                    let factor = &a[(r, col)] * &pinv;
                    a.sub_row_multiple(r, col, &factor);
                }
            }
        }
        det
    }

    /// Sylvester inertia `(n_plus, n_minus, n_zero)` of a real symmetric matrix,
    /// by symmetric Gaussian elimination (congruence transforms only).
    pub fn inertia(&self) -> Result<(usize, usize, usize)> {
        if !self.is_symmetric() || self.data.iter().any(|s| !s.is_real()) {
            return Err(Error::Invalid("inertia needs a real symmetric matrix".into()));
        }
        let n = self.rows;
        let mut a: Vec<Vec<BigRational>> =
            (0..n).map(|i| (0..n).map(|j| self[(i, j)].re().clone()).collect()).collect();
        let (mut pos, mut neg) = (0, 0);
        let mut active: Vec<usize> = (0..n).collect();
        while let Some(&k0) = active.first() {
            let mut k = k0;
            if a[k][k].is_zero() {
                if let Some(&j) = active.iter().find(|&&j| !a[j][j].is_zero()) {
                    k = j;
                } else if let Some(&j) = active.iter().skip(1).find(|&&j| !a[k0][j].is_zero()) {
                    // row/col k0 += row/col j makes the diagonal 2*a[k0][j] != 0
                    for r in 0..n {
                        let v = a[r][j].clone();
                        a[r][k0] += v;
                    }
                    for c in 0..n {
                        let v = a[j][c].clone();
                        a[k0][c] += v;
                    }
                } else {
                    // zero row within the active block
                    active.retain(|&r| r != k0);
                    continue;
                }
            }
            let p = a[k][k].clone();
            if p.is_positive() {
                pos += 1;
            } else {
                neg += 1;
            }
            active.retain(|&r| r != k);
            for &r in &active {
                if a[r][k].is_zero() {
                    continue;
                }
                let f = &a[r][k] / &p;
                for &c in &active {
                    let v = &f * &a[k][c];
                    a[r][c] -= v;
                }
                a[r][k] = BigRational::zero();
                a[k][r] = BigRational::zero();
            }
        }
        Ok((pos, neg, n - pos - neg))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn scale_row(&mut self, r: usize, s: &Scalar) {
        for j in 0..self.cols {
            let v = &self[(r, j)] * s;
            self[(r, j)] = v;
        }
    }

    fn sub_row_multiple(&mut self, target: usize, src: usize, factor: &Scalar) {
        for j in 0..self.cols {
            let v = factor * &self[(src, j)];
            self[(target, j)] -= &v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| Scalar::from(v)).collect()).collect())
    }

    #[test]
    fn inverse_roundtrip() {
        let a = m(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(3));
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_err());
    }

    #[test]
    fn det_and_inertia_of_hyperbolic_block() {
        let q = m(&[&[0, -1], &[-1, 0]]);
        assert_eq!(q.det(), Scalar::from(-1));
        assert_eq!(q.inertia().unwrap(), (1, 1, 0));
        let q2 = m(&[&[3, -1], &[-1, 0]]);
        assert_eq!(q2.inertia().unwrap(), (1, 1, 0));
        assert_eq!(m(&[&[1, 0], &[0, 2]]).inertia().unwrap(), (2, 0, 0));
        assert_eq!(m(&[&[-1, 0, 0], &[0, 0, 0], &[0, 0, 5]]).inertia().unwrap(), (1, 1, 1));
    }
}
