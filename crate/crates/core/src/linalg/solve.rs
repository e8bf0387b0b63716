//! LU factorisation with partial pivoting.

use num_traits::Zero;

use super::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves `A·X = B` for square `A`.
pub fn solve<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = a.nrows();
    a.ensure_square(n)?;
    if b.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.nrows() });
    }
    let m = b.ncols();
    let mut lu = a.clone();
    let mut x = b.clone();

    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| lu[(i, k)].norm().partial_cmp(&lu[(j, k)].norm()).unwrap())
            .unwrap();
        if lu[(pivot, k)].is_zero() {
            return Err(Error::Singular);
        }
        if pivot != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot, j)];
                lu[(pivot, j)] = tmp;
            }
            for j in 0..m {
                let tmp = x[(k, j)];
                x[(k, j)] = x[(pivot, j)];
                x[(pivot, j)] = tmp;
            }
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / d;
            if f.is_zero() {
                continue;
            }
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= f * u;
            }
            for j in 0..m {
                let u = x[(k, j)];
                x[(i, j)] -= f * u;
            }
        }
    }
    for j in 0..m {
        for i in (0..n).rev() {
            let mut acc = x[(i, j)];
            for l in i + 1..n {
                acc -= lu[(i, l)] * x[(l, j)];
            }
            x[(i, j)] = acc / lu[(i, i)];
        }
    }
    Ok(x)
}
