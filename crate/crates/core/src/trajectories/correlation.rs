//! Stationary two-time correlation of the recombination current.
//!
//! The stationary state of the measurement equation is `ρ∞ = I/d` whenever the
//! dynamics is ergodic (it commutes with both `H` and `Q_S`, and unital
//! evolution keeps it fixed). Two reductions of the correlation are reported:
//!
//! * literal: `k²(Tr{e^{Aτ}ρ_s} − (Tr{Q_S ρ∞})²)` with `ρ_s = Q_S ρ∞ Q_S`.
//!   Trace preservation makes this the constant `k²(Tr ρ_s − (Tr Q_S ρ∞)²)`.
//! * projected: `k²(Tr{Q_S e^{Aτ}ρ_s} − (Tr{Q_S ρ∞})²)`, the connected current
//!   correlation that a jump record actually measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{draw, expectation, stream_rng, JumpStepper, Moments, StateVector, StepScheme, CHUNK};
use crate::dynamics::EquationVariant;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::models::RipModel;
use crate::spectra::{build_superoperator, matrix_exponential};
use crate::scalar::Real;

pub fn stationary_state<T: Real>(model: &RipModel<T>) -> CMatrix<T> {
    let d = model.dim();
    CMatrix::identity(d).scale_real(T::one() / T::from_count(d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationAnalytic<T> {
    pub tau: Vec<T>,
    pub literal: Vec<T>,
    pub projected: Vec<T>,
}

fn validate_lags<T: Real>(tau: &[T]) -> Result<()> {
    if tau.is_empty() {
        return Err(Error::InvalidParameter { name: "tau", reason: "empty lag grid".into() });
    }
    if let Some(bad) = tau.iter().find(|t| !(**t >= T::zero()) || !t.is_finite()) {
        return Err(Error::InvalidParameter { name: "tau", reason: format!("lags must be finite and non-negative, got {bad}") });
    }
    Ok(())
}

pub fn correlation_analytic<T: Real>(model: &RipModel<T>, tau: &[T]) -> Result<CorrelationAnalytic<T>> {
    validate_lags(tau)?;
    let a = build_superoperator(model, EquationVariant::Kominis);
    let q = model.q_s();
    let rho_inf = stationary_state(model);
    let rho_s = &(q * &rho_inf) * q;
    let k2 = model.k() * model.k();
    let mean = (q * &rho_inf).trace().re;
    let offset = mean * mean;
    let v = rho_s.vectorize();

    let rows: Vec<(T, T)> = tau
        .par_iter()
        .map(|&t| -> Result<(T, T)> {
            let evolved = CMatrix::unvectorize(&matrix_exponential(&a, t)?.mul_vec(&v))?;
            let lit = k2 * (evolved.trace().re - offset);
            let proj = k2 * ((q * &evolved).trace().re - offset);
            Ok((lit, proj))
        })
        .collect::<Result<_>>()?;
    let (literal, projected) = rows.into_iter().unzip();
    Ok(CorrelationAnalytic { tau: tau.to_vec(), literal, projected })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationOptions<T> {
    pub t_burn: T,
    pub t_window: T,
    pub dt: T,
    pub n_traj: usize,
    pub scheme: StepScheme,
}

impl<T: Real> CorrelationOptions<T> {
    pub fn new(t_burn: T, t_window: T, dt: T, n_traj: usize) -> Self {
        Self { t_burn, t_window, dt, n_traj, scheme: StepScheme::default() }
    }

    pub fn with_scheme(mut self, scheme: StepScheme) -> Self {
        self.scheme = scheme;
        self
    }
}

/// Monte Carlo estimate of the current correlation.
///
/// For every jump at `t_j` inside the window the estimator adds
/// `k⟨Q_S⟩(t_j + τ)`; dividing by `2T_window` gives `raw`, whose expectation is
/// `k²Tr{Q_S e^{Aτ}ρ_s}`. `connected` subtracts `k²(Tr Q_S ρ∞)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate<T> {
    /// Lags actually used (rounded to multiples of the step).
    pub tau: Vec<T>,
    pub raw: Vec<T>,
    pub connected: Vec<T>,
    /// Standard error across trajectories; shared by `raw` and `connected`.
    pub se: Vec<T>,
    /// Difference of the mean current between the two window halves.
    pub drift: T,
    pub drift_se: T,
}

pub fn correlation_mc<T: Real>(
    model: &RipModel<T>,
    psi0: &StateVector<T>,
    tau: &[T],
    opts: &CorrelationOptions<T>,
    master_seed: u64,
) -> Result<CorrelationEstimate<T>> {
    validate_lags(tau)?;
    if opts.n_traj < 2 {
        return Err(Error::InvalidParameter { name: "n_traj", reason: "need at least two trajectories".into() });
    }
    if !(opts.t_burn >= T::zero()) || !(opts.t_window > T::zero()) {
        return Err(Error::InvalidParameter { name: "t_window", reason: "burn-in must be non-negative and window positive".into() });
    }
    if psi0.amplitudes().len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: psi0.amplitudes().len() });
    }
    let stepper = JumpStepper::new(model, opts.dt, opts.scheme)?;
    let dt = opts.dt;
    let steps = |t: T| (t / dt).round().to_usize().unwrap_or(0);
    let n_burn = steps(opts.t_burn);
    let n_win = steps(opts.t_window).max(2);
    let lags: Vec<usize> = tau.iter().map(|&t| steps(t)).collect();
    let l_max = *lags.iter().max().unwrap_or(&0);
    let total = n_burn + n_win + l_max;
    let t_win = T::from_count(n_win) * dt;
    let k = model.k();
    let q = model.q_s();
    let half_window = n_burn + n_win / 2;

    let n_chunks = opts.n_traj.div_ceil(CHUNK);
    // Per trajectory: one value per lag, then the drift.
    let partials: Vec<Moments<T>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<Moments<T>> {
            let mut sums = Moments::new(lags.len() + 1);
            let mut row = vec![T::zero(); lags.len() + 1];
            let mut qs = vec![T::zero(); total + 1];
            let mut jumps = Vec::new();
            for idx in c * CHUNK..((c + 1) * CHUNK).min(opts.n_traj) {
                let mut rng = stream_rng(master_seed, idx as u64);
                let mut psi = psi0.amplitudes().to_vec();
                jumps.clear();
                qs[0] = expectation(q, &psi);
                for n in 1..=total {
                    if stepper.step(&mut psi, draw(&mut rng))? && n > n_burn && n <= n_burn + n_win {
                        jumps.push(n);
                    }
                    qs[n] = expectation(q, &psi);
                }
                let norm = k / (T::lit(2.0) * t_win);
                for (j, &l) in lags.iter().enumerate() {
                    row[j] = jumps.iter().map(|&n| qs[n + l]).sum::<T>() * norm;
                }
                let first = jumps.iter().filter(|&&n| n <= half_window).count();
                let second = jumps.len() - first;
                let half_t = t_win * T::lit(0.5);
                row[lags.len()] = (T::from_count(second) - T::from_count(first)) / (T::lit(2.0) * half_t);
                sums.push(&row);
            }
            Ok(sums)
        })
        .collect::<Result<_>>()?;

    let mut acc = Moments::new(lags.len() + 1);
    for p in &partials {
        acc.merge(p);
    }
    let (mut raw, mut se) = acc.finish();
    let (drift, drift_se) = (raw.pop().unwrap_or(T::zero()), se.pop().unwrap_or(T::zero()));
    if drift.abs() > T::lit(5.0) * drift_se + T::tol(1e-12) {
        return Err(Error::BurnIn {
            drift: drift.to_f64().unwrap_or(f64::NAN),
            bound: (T::lit(5.0) * drift_se).to_f64().unwrap_or(f64::NAN),
        });
    }

    let rho_inf = stationary_state(model);
    let mean = (q * &rho_inf).trace().re;
    let offset = k * k * mean * mean;
    let connected = raw.iter().map(|&r| r - offset).collect();
    Ok(CorrelationEstimate {
        tau: lags.iter().map(|&l| T::from_count(l) * dt).collect(),
        raw,
        connected,
        se,
        drift,
        drift_se,
    })
}
