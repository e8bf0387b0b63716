//! Small post-processing helpers for sampled signals.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Angular frequency maximising the periodogram of `values` (mean removed)
/// on a uniform grid, searched over `(0, ω_max]` and refined by golden section.
pub fn dominant_angular_frequency<T: Real>(times: &[T], values: &[T], omega_max: T) -> Result<T> {
    if times.len() != values.len() || times.len() < 4 {
        return Err(Error::InvalidParameter { name: "values", reason: "need at least four paired samples".into() });
    }
    let n = T::from_count(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let power = |w: T| {
        let (mut c, mut s) = (T::zero(), T::zero());
        for (&t, &v) in times.iter().zip(values) {
            let x = v - mean;
            c += x * (w * t).cos();
            s += x * (w * t).sin();
        }
        c * c + s * s
    };
    let span = times[times.len() - 1] - times[0];
    if !(span > T::zero()) {
        return Err(Error::InvalidParameter { name: "times", reason: "zero time span".into() });
    }
    // Grid spacing a quarter of the Fourier resolution.
    let dw = T::lit(0.5) * T::PI() / span;
    let steps = (omega_max / dw).ceil().to_usize().unwrap_or(1).max(1);
    let (mut best, mut best_p) = (dw, T::neg_infinity());
    for i in 1..=steps {
        let w = dw * T::from_count(i);
        let p = power(w);
        if p > best_p {
            best = w;
            best_p = p;
        }
    }
    let (mut a, mut b) = ((best - dw).max(T::zero()), best + dw);
    let g = T::lit(0.618_033_988_749_894_8);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if power(c) > power(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(T::lit(0.5) * (a + b))
}

/// Least-squares slope of `y = m·x` and its R² about the mean of `y`.
pub fn fit_through_origin<T: Real>(x: &[T], y: &[T]) -> Result<(T, T)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter { name: "x", reason: "need at least two paired points".into() });
    }
    let sxx: T = x.iter().map(|v| *v * *v).sum();
    if !(sxx > T::zero()) {
        return Err(Error::InvalidParameter { name: "x", reason: "all abscissae zero".into() });
    }
    let sxy: T = x.iter().zip(y).map(|(a, b)| *a * *b).sum();
    let m = sxy / sxx;
    let ybar = y.iter().copied().sum::<T>() / T::from_count(y.len());
    let ss_res: T = x.iter().zip(y).map(|(a, b)| (*b - m * *a).powi(2)).sum();
    let ss_tot: T = y.iter().map(|b| (*b - ybar).powi(2)).sum();
    let r2 = if ss_tot > T::zero() { T::one() - ss_res / ss_tot } else { T::one() };
    Ok((m, r2))
}

/// True when no sample exceeds its predecessor by more than `tol`.
pub fn is_nonincreasing<T: Real>(values: &[T], tol: T) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tol)
}
