//! General (non-Hermitian) complex eigendecomposition.
//!
//! Householder reduction to upper Hessenberg form, then single-shift complex
//! QR sweeps with Wilkinson shifts until the matrix is upper triangular
//! (complex Schur form `A = Z·T·Z†`). Eigenvectors come from back-substitution
//! on `T` followed by the change of basis `Z`.

use num_traits::{One, Zero};

use super::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Eigenvalues and unit-norm right eigenvectors (stored as columns).
#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<C<T>>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> Eigen<T> {
    pub fn vector(&self, k: usize) -> Vec<C<T>> {
        self.vectors.column(k)
    }
}

/// Complex Schur decomposition: unitary `z` and upper-triangular `t` with `A = z·t·z†`.
#[derive(Debug, Clone)]
pub struct Schur<T> {
    pub z: CMatrix<T>,
    pub t: CMatrix<T>,
}

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

pub fn eigenvalues<T: Real>(a: &CMatrix<T>) -> Result<Vec<C<T>>> {
    Ok(schur(a)?.t.diagonal())
}

pub fn eigen<T: Real>(a: &CMatrix<T>) -> Result<Eigen<T>> {
    let Schur { z, t } = schur(a)?;
    let n = t.nrows();
    let values = t.diagonal();
    let small = T::epsilon() * t.frobenius_norm().max(T::min_positive_value());

    let mut vectors = CMatrix::zeros(n, n);
    let mut y = vec![C::zero(); n];
    for k in 0..n {
        let lambda = values[k];
        y.iter_mut().for_each(|v| *v = C::zero());
        y[k] = C::one();
        for i in (0..k).rev() {
            let mut acc: C<T> = C::zero();
            for j in i + 1..=k {
                acc += t[(i, j)] * y[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                denom = C::new(small, T::zero());
            }
            y[i] = -acc / denom;
        }
        let x = z.mul_vec(&y);
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt();
        for (i, v) in x.into_iter().enumerate() {
            vectors[(i, k)] = v / norm;
        }
    }
    Ok(Eigen { values, vectors })
}

pub fn schur<T: Real>(a: &CMatrix<T>) -> Result<Schur<T>> {
    a.ensure_square(a.nrows())?;
    let n = a.nrows();
    let mut h = a.clone();
    let mut z = CMatrix::identity(n);
    hessenberg(&mut h, &mut z);
    qr_sweeps(&mut h, &mut z)?;
    // Below-diagonal entries are deflated remnants; drop them.
    for i in 0..n {
        for j in 0..i {
            h[(i, j)] = C::zero();
        }
    }
    Ok(Schur { z, t: h })
}

fn hessenberg<T: Real>(h: &mut CMatrix<T>, z: &mut CMatrix<T>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    let two = T::lit(2.0);
    for k in 0..n - 2 {
        let mut v: Vec<C<T>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = v.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == T::zero() {
            C::one()
        } else {
            x0 / x0.norm()
        };
        v[0] = x0 + phase * xnorm;
        let vnorm = v.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        v.iter_mut().for_each(|x| *x = *x / vnorm);

        // H ← P·H with P = I − 2vv† acting on rows k+1..n.
        for j in 0..n {
            let mut s = C::zero();
            for (r, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + r, j)];
            }
            s = s * two;
            for (r, vi) in v.iter().enumerate() {
                h[(k + 1 + r, j)] -= *vi * s;
            }
        }
        // H ← H·P and Z ← Z·P on columns k+1..n.
        for m in [&mut *h, &mut *z] {
            for i in 0..n {
                let mut s = C::zero();
                for (r, vi) in v.iter().enumerate() {
                    s += m[(i, k + 1 + r)] * *vi;
                }
                s = s * two;
                for (r, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + r)] -= s * vi.conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C::zero();
        }
    }
}

/// Rotation `G = [[c, s], [−s̄, c]]` with real `c`, chosen so that `G·[a; b] = [r; 0]`.
#[derive(Clone, Copy)]
struct Givens<T> {
    c: T,
    s: C<T>,
}

impl<T: Real> Givens<T> {
    fn zeroing(a: C<T>, b: C<T>) -> Self {
        let (na, nb) = (a.norm(), b.norm());
        if nb == T::zero() {
            return Self { c: T::one(), s: C::zero() };
        }
        if na == T::zero() {
            return Self { c: T::zero(), s: b.conj() / nb };
        }
        let r = na.hypot(nb);
        Self {
            c: na / r,
            s: (a / na) * b.conj() / r,
        }
    }

    /// Rows `(p, q)` of `m`, columns `cols`: `[x; y] ← G·[x; y]`.
    fn apply_rows(&self, m: &mut CMatrix<T>, p: usize, q: usize, cols: std::ops::Range<usize>) {
        let c = C::new(self.c, T::zero());
        for j in cols {
            let (x, y) = (m[(p, j)], m[(q, j)]);
            m[(p, j)] = c * x + self.s * y;
            m[(q, j)] = c * y - self.s.conj() * x;
        }
    }

    /// Columns `(p, q)` of `m`, rows `rows`: `[x, y] ← [x, y]·G†`.
    fn apply_cols(&self, m: &mut CMatrix<T>, p: usize, q: usize, rows: std::ops::Range<usize>) {
        let c = C::new(self.c, T::zero());
        for i in rows {
            let (x, y) = (m[(i, p)], m[(i, q)]);
            m[(i, p)] = x * c + y * self.s.conj();
            m[(i, q)] = y * c - x * self.s;
        }
    }
}

fn wilkinson_shift<T: Real>(h: &CMatrix<T>, hi: usize) -> C<T> {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half = T::lit(0.5);
    let mean = (a + d) * half;
    let diff = (a - d) * half;
    let disc = (diff * diff + b * c).sqrt();
    let (l1, l2) = (mean + disc, mean - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn qr_sweeps<T: Real>(h: &mut CMatrix<T>, z: &mut CMatrix<T>) -> Result<()> {
    let n = h.nrows();
    if n < 2 {
        return Ok(());
    }
    let eps = T::epsilon();
    let norm = h.frobenius_norm();
    let tiny = T::min_positive_value() / eps;
    let max_total = MAX_SWEEPS_PER_EIGENVALUE * n;

    let mut hi = n - 1;
    let mut since_deflation = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // Locate the start of the unreduced block ending at `hi`.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut scale = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if scale == T::zero() {
                scale = norm;
            }
            if sub <= eps * scale || sub <= tiny {
                h[(lo, lo - 1)] = C::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        total += 1;
        since_deflation += 1;
        if total > max_total {
            return Err(Error::NoConvergence { iterations: total });
        }

        let mu = if since_deflation % 11 == 0 {
            // Exceptional shift to break cycles.
            let sub = h[(hi, hi - 1)].norm();
            h[(hi, hi)] + C::new(T::lit(0.75) * sub, T::lit(0.25) * sub)
        } else {
            wilkinson_shift(h, hi)
        };

        for i in lo..=hi {
            h[(i, i)] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for j in lo..hi {
            let g = Givens::zeroing(h[(j, j)], h[(j + 1, j)]);
            g.apply_rows(h, j, j + 1, j..n);
            h[(j + 1, j)] = C::zero();
            rotations.push(g);
        }
        for (offset, g) in rotations.iter().enumerate() {
            let j = lo + offset;
            g.apply_cols(h, j, j + 1, 0..(j + 2).min(hi + 1));
            g.apply_cols(z, j, j + 1, 0..n);
        }
        for i in lo..=hi {
            h[(i, i)] += mu;
        }
    }
    Ok(())
}
