//! Small dense row-major matrices.
//!
//! Everything the toolchain compares is tiny (at most a few hundred rows),
//! so a flat `Vec` with explicit `(rows, cols)` is all that is needed.

use std::fmt;
use std::ops::{Add, Mul};

use num_complex::Complex64;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type RealMat = Mat<f64>;
pub type ComplexMat = Mat<Complex64>;

/// Element types a [`Mat`] can hold.
pub trait Scalar: Copy + Add<Output = Self> + Mul<Output = Self> + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn abs_diff(self, other: Self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn abs_diff(self, other: Self) -> f64 {
        (self - other).abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn abs_diff(self, other: Self) -> f64 {
        (self - other).norm()
    }
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let data: Vec<T> = rows.iter().flat_map(|row| {
            assert_eq!(row.len(), c, "ragged rows");
            row.iter().copied()
        }).collect();
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// Matrix product; `None` when inner dimensions disagree.
    pub fn matmul(&self, rhs: &Mat<T>) -> Option<Mat<T>> {
        if self.cols != rhs.rows {
            return None;
        }
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let idx = i * rhs.cols + j;
                    out.data[idx] = out.data[idx] + a * rhs[(k, j)];
                }
            }
        }
        Some(out)
    }

    pub fn apply(&self, x: &[T]) -> Option<Vec<T>> {
        if x.len() != self.cols {
            return None;
        }
        Some(
            (0..self.rows)
                .map(|r| {
                    self.row(r)
                        .iter()
                        .zip(x)
                        .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
                })
                .collect(),
        )
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Mat<T>) -> Mat<T> {
        let (r1, c1) = self.dims();
        let (r2, c2) = rhs.dims();
        Mat::from_fn(r1 * r2, c1 * c2, |r, c| self[(r / r2, c / c2)] * rhs[(r % r2, c % c2)])
    }

    /// Horizontal block concatenation `[self | rhs]`.
    pub fn hcat(&self, rhs: &Mat<T>) -> Option<Mat<T>> {
        if self.rows != rhs.rows {
            return None;
        }
        Some(Mat::from_fn(self.rows, self.cols + rhs.cols, |r, c| {
            if c < self.cols {
                self[(r, c)]
            } else {
                rhs[(r, c - self.cols)]
            }
        }))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Mat<U> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        self.map(|x| s * x)
    }

    /// Largest elementwise absolute difference, `None` on a shape mismatch.
    pub fn max_abs_diff(&self, other: &Mat<T>) -> Option<f64> {
        if self.dims() != other.dims() {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a.abs_diff(b))
                .fold(0.0, f64::max),
        )
    }

    /// True when each row and each column holds exactly one `1` and zeros elsewhere.
    pub fn is_permutation(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let mut col_seen = vec![false; self.cols];
        for r in 0..self.rows {
            let mut found = None;
            for (c, &v) in self.row(r).iter().enumerate() {
                if v == T::one() {
                    if found.is_some() {
                        return false;
                    }
                    found = Some(c);
                } else if v != T::zero() {
                    return false;
                }
            }
            match found {
                Some(c) if !col_seen[c] => col_seen[c] = true,
                _ => return false,
            }
        }
        true
    }
}

impl ComplexMat {
    /// Real parts, provided every imaginary part is within `tol` of zero.
    pub fn to_real(&self, tol: f64) -> Option<RealMat> {
        if self.data.iter().any(|z| z.im.abs() > tol) {
            return None;
        }
        Some(self.map(|z| z.re))
    }

    /// Interleaved real form: each entry `a+bi` becomes `[[a, -b], [b, a]]`.
    pub fn interleaved(&self) -> RealMat {
        Mat::from_fn(2 * self.rows, 2 * self.cols, |r, c| {
            let z = self[(r / 2, c / 2)];
            match (r % 2, c % 2) {
                (0, 0) | (1, 1) => z.re,
                (0, 1) => -z.im,
                _ => z.im,
            }
        })
    }
}

impl RealMat {
    pub fn to_complex(&self) -> ComplexMat {
        self.map(|x| Complex64::new(x, 0.0))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

/// Interleaves a complex vector as `(re, im, re, im, ...)`.
pub fn interleave(x: &[Complex64]) -> Vec<f64> {
    x.iter().flat_map(|z| [z.re, z.im]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_identities_is_identity() {
        let a = RealMat::identity(2);
        let b = RealMat::identity(3);
        assert_eq!(a.kron(&b), RealMat::identity(6));
    }

    #[test]
    fn kron_block_layout() {
        let a = RealMat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = RealMat::identity(2);
        let k = a.kron(&b);
        assert_eq!(k[(0, 2)], 2.0);
        assert_eq!(k[(3, 1)], 3.0);
        assert_eq!(k[(3, 3)], 4.0);
        assert_eq!(k[(0, 1)], 0.0);
    }

    #[test]
    fn interleaved_block_rule() {
        let m = ComplexMat::from_rows(&[vec![Complex64::new(1.0, 2.0)]]);
        let r = m.interleaved();
        assert_eq!(r.to_rows(), vec![vec![1.0, -2.0], vec![2.0, 1.0]]);
    }

    #[test]
    fn permutation_detection() {
        assert!(RealMat::identity(4).is_permutation());
        let mut m = RealMat::identity(3);
        m[(0, 1)] = 1.0;
        assert!(!m.is_permutation());
        assert!(!RealMat::zeros(2, 2).is_permutation());
    }

    #[test]
    fn matmul_dimension_mismatch() {
        assert!(RealMat::zeros(2, 3).matmul(&RealMat::zeros(2, 3)).is_none());
    }
}
