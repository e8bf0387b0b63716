//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use super::{solve, CMatrix};
use crate::error::{Error, Result};
use crate::scalar::{re, Real};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Squarings beyond this indicate a hopeless exponent.
const MAX_SQUARINGS: i32 = 1000;

pub fn expm<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = a.nrows();
    a.ensure_square(n)?;
    let norm = a.norm_one();
    if !norm.is_finite() {
        return Err(Error::Overflow { norm: f64::INFINITY });
    }
    let ratio = norm.to_f64().unwrap_or(f64::INFINITY) / THETA13;
    let squarings = if ratio > 1.0 { ratio.log2().ceil() as i32 } else { 0 };
    if squarings > MAX_SQUARINGS {
        return Err(Error::Overflow { norm: norm.to_f64().unwrap_or(f64::INFINITY) });
    }
    let scaled = a.scale_real(T::lit(2f64.powi(-squarings)));

    let b = |i: usize| re(T::lit(PADE13[i]));
    let ident = CMatrix::identity(n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let mut inner_u = a6.scale(b(13));
    inner_u.axpy(b(11), &a4);
    inner_u.axpy(b(9), &a2);
    let mut u = &a6 * &inner_u;
    u.axpy(b(7), &a6);
    u.axpy(b(5), &a4);
    u.axpy(b(3), &a2);
    u.axpy(b(1), &ident);
    let u = &scaled * &u;

    let mut inner_v = a6.scale(b(12));
    inner_v.axpy(b(10), &a4);
    inner_v.axpy(b(8), &a2);
    let mut v = &a6 * &inner_v;
    v.axpy(b(6), &a6);
    v.axpy(b(4), &a4);
    v.axpy(b(2), &a2);
    v.axpy(b(0), &ident);

    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::Overflow { norm: norm.to_f64().unwrap_or(f64::INFINITY) });
    }
    Ok(r)
}
