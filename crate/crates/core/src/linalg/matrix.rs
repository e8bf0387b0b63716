//! Dense complex matrices, row-major.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{re, Real, C};

/// Dense complex matrix stored row-major; entry `(i, j)` lives at `i * cols + j`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self {
            rows,
            cols,
            data: data.iter().map(|&x| re(x)).collect(),
        }
    }

    pub fn from_diagonal(diag: &[C<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C<T>> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C<T>> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C<T> {
        self.diagonal().into_iter().sum()
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(re(s))
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: C<T>, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Kronecker product: `(A⊗B)[i·n+k, j·n+l] = A[i,j]·B[k,l]` with `n = B.rows`.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.rows, other.cols);
        let mut out = Self::zeros(self.rows * p, self.cols * q);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..p {
                    for l in 0..q {
                        out[(i * p + k, j * q + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `{A, B} = AB + BA`.
    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(C::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.norm()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|x| x.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Largest singular value, from the spectrum of `A†A`.
    pub fn spectral_norm(&self) -> Result<T> {
        if self.data.is_empty() {
            return Ok(T::zero());
        }
        let gram = &self.adjoint() * self;
        let values = super::eigen::eigenvalues(&gram)?;
        Ok(values
            .iter()
            .fold(T::zero(), |m, v| m.max(v.re))
            .max(T::zero())
            .sqrt())
    }

    /// Max-norm distance to the adjoint.
    pub fn hermiticity_defect(&self) -> T {
        let mut d = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && self.hermiticity_defect() <= tol
    }

    /// Row-stacking vectorization `(ρ₀₀, ρ₀₁, …, ρ₁₀, …)ᵀ`.
    pub fn vectorize(&self) -> Vec<C<T>> {
        self.data.clone()
    }

    /// Inverse of [`CMatrix::vectorize`] for a square `d×d` matrix.
    pub fn unvectorize(v: &[C<T>]) -> Result<Self> {
        let d = (v.len() as f64).sqrt().round() as usize;
        if d * d != v.len() {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: v.len(),
            });
        }
        Ok(Self::from_vec(d, d, v.to_vec()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub(crate) fn ensure_square(&self, n: usize) -> Result<()> {
        if self.rows != n || self.cols != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if self.rows != n { self.rows } else { self.cols },
            });
        }
        Ok(())
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn add(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<T: Real> AddAssign<&CMatrix<T>> for CMatrix<T> {
    fn add_assign(&mut self, rhs: &CMatrix<T>) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl<T: Real> SubAssign<&CMatrix<T>> for CMatrix<T> {
    fn sub_assign(&mut self, rhs: &CMatrix<T>) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl<T: Real> Neg for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn neg(self) -> CMatrix<T> {
        self.scale(-C::one())
    }
}

impl<T: fmt::Debug> fmt::Debug for CMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for x in &self.data[i * self.cols..(i + 1) * self.cols] {
                write!(f, "({:?}, {:?})  ", x.re, x.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
