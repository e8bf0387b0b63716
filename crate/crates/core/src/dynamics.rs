//! Master-equation right-hand sides and time propagation.
//!
//! Two generators are supported:
//!
//! * **Kominis** (measurement form): `dρ/dt = −i[H, ρ] − k[Q_S, [Q_S, ρ]]`,
//!   trace preserving, with `k = k_S + k_T`.
//! * **Haberkorn** (phenomenological form):
//!   `dρ/dt = −i[H, ρ] − k_S{Q_S, ρ} − k_T{Q_T, ρ}`, which loses trace at the
//!   recombination rate.
//!
//! Propagation uses classical fourth-order Runge–Kutta at a fixed step
//! `dt = min(dt_hint, 0.05/(‖H‖₂ + 2k))`, repeated at `dt/2` to bound the error
//! on `Tr{ρQ_S}`.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, CMatrix};
use crate::models::RipModel;
use crate::scalar::{imag_unit, re, Real, C};
use crate::spin::HilbertSpace;

/// Which master equation drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquationVariant {
    Kominis,
    Haberkorn,
}

impl EquationVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Kominis => "kominis",
            Self::Haberkorn => "haberkorn",
        }
    }
}

/// Density matrix on a model space. Initial states are validated (Hermitian,
/// unit trace, positive semidefinite); propagated Haberkorn states carry their
/// reduced trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    space: HilbertSpace,
    matrix: CMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(space: HilbertSpace, matrix: CMatrix<T>) -> Result<Self> {
        matrix.ensure_square(space.total_dim())?;
        let herm = matrix.hermiticity_defect();
        if herm > T::tol(1e-10) {
            return Err(Error::Invariant { what: "hermiticity", t: 0.0, deviation: to_f64(herm) });
        }
        let tr_err = (matrix.trace().re - T::one()).abs();
        if tr_err > T::tol(1e-9) {
            return Err(Error::Invariant { what: "unit trace", t: 0.0, deviation: to_f64(tr_err) });
        }
        let min_ev = min_eigenvalue(&matrix)?;
        if min_ev < -T::tol(1e-9) {
            return Err(Error::Invariant { what: "positivity", t: 0.0, deviation: to_f64(-min_ev) });
        }
        Ok(Self { space, matrix })
    }

    pub(crate) fn from_parts(space: HilbertSpace, matrix: CMatrix<T>) -> Self {
        Self { space, matrix }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalised) state vector.
    pub fn pure(space: HilbertSpace, psi: &[C<T>]) -> Result<Self> {
        let n = space.total_dim();
        if psi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: psi.len() });
        }
        let norm2: T = psi.iter().map(|x| x.norm_sqr()).sum();
        if norm2 <= T::zero() {
            return Err(Error::InvalidParameter { name: "psi", reason: "zero vector".into() });
        }
        let m = CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / norm2);
        Ok(Self { space, matrix: m })
    }

    /// `I/d`.
    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        let matrix = CMatrix::identity(d).scale_real(T::one() / T::from_count(d));
        Self { space, matrix }
    }

    /// A projector normalised to unit trace (e.g. `Q_S/Tr Q_S`).
    pub fn from_projector(space: HilbertSpace, p: &CMatrix<T>) -> Result<Self> {
        let tr = p.trace().re;
        if tr <= T::zero() {
            return Err(Error::InvalidParameter { name: "projector", reason: "zero trace".into() });
        }
        Self::new(space, p.scale_real(T::one() / tr))
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    /// `Tr{ρ²}`.
    pub fn purity(&self) -> T {
        (&self.matrix * &self.matrix).trace().re
    }
}

fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn min_eigenvalue<T: Real>(m: &CMatrix<T>) -> Result<T> {
    let herm = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        (m[(i, j)] + m[(j, i)].conj()) * T::lit(0.5)
    });
    Ok(eigenvalues(&herm)?
        .iter()
        .fold(T::infinity(), |acc, v| acc.min(v.re)))
}

fn check_dims<T: Real>(rho: &CMatrix<T>, model: &RipModel<T>) -> Result<()> {
    rho.ensure_square(model.dim())
}

/// `D[B]ρ = B†Bρ + ρB†B − 2BρB†`.
pub fn dissipator<T: Real>(b: &CMatrix<T>, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
    rho.ensure_square(b.nrows())?;
    b.ensure_square(b.nrows())?;
    let bd = b.adjoint();
    let bdb = &bd * b;
    let mut out = bdb.anticommutator(rho);
    out.axpy(re(T::lit(-2.0)), &(&(b * rho) * &bd));
    Ok(out)
}

fn hamiltonian_part<T: Real>(h: &CMatrix<T>, rho: &CMatrix<T>) -> CMatrix<T> {
    h.commutator(rho).scale(-imag_unit::<T>())
}

/// `−i[H, ρ] − k[Q_S, [Q_S, ρ]]`.
pub fn rhs_kominis<T: Real>(rho: &CMatrix<T>, model: &RipModel<T>) -> Result<CMatrix<T>> {
    check_dims(rho, model)?;
    let mut out = hamiltonian_part(model.hamiltonian(), rho);
    let k = model.k();
    if !k.is_zero() {
        let q = model.q_s();
        let inner = q.commutator(rho);
        out.axpy(re(-k), &q.commutator(&inner));
    }
    Ok(out)
}

/// `−i[H, ρ] − k_S(ρQ_S + Q_Sρ) − k_T(ρQ_T + Q_Tρ)`.
pub fn rhs_haberkorn<T: Real>(rho: &CMatrix<T>, model: &RipModel<T>) -> Result<CMatrix<T>> {
    check_dims(rho, model)?;
    let mut out = hamiltonian_part(model.hamiltonian(), rho);
    if !model.k_s().is_zero() {
        out.axpy(re(-model.k_s()), &model.q_s().anticommutator(rho));
    }
    if !model.k_t().is_zero() {
        out.axpy(re(-model.k_t()), &model.q_t().anticommutator(rho));
    }
    Ok(out)
}

pub fn rhs<T: Real>(variant: EquationVariant, rho: &CMatrix<T>, model: &RipModel<T>) -> Result<CMatrix<T>> {
    match variant {
        EquationVariant::Kominis => rhs_kominis(rho, model),
        EquationVariant::Haberkorn => rhs_haberkorn(rho, model),
    }
}

/// `Tr{ρQ_S}` (real part).
pub fn singlet_probability<T: Real>(rho: &DensityMatrix<T>, model: &RipModel<T>) -> T {
    trace_product(rho.matrix(), model.q_s()).re
}

fn trace_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> C<T> {
    let n = a.nrows();
    let mut acc = C::zero();
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Controls for [`propagate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagateOptions<T> {
    pub t_max: T,
    /// Upper bound on the internal step; the stiffness rule may pick smaller.
    pub dt_hint: T,
    /// Number of output samples including `t = 0` and `t = t_max`.
    pub n_out: usize,
}

impl<T: Real> PropagateOptions<T> {
    pub fn new(t_max: T) -> Self {
        Self {
            t_max,
            dt_hint: T::lit(0.01),
            n_out: 1000,
        }
    }

    pub fn with_samples(mut self, n_out: usize) -> Self {
        self.n_out = n_out;
        self
    }

    pub fn with_dt_hint(mut self, dt_hint: T) -> Self {
        self.dt_hint = dt_hint;
        self
    }
}

/// Sampled trajectory of the density matrix.
#[derive(Debug, Clone)]
pub struct PropagationResult<T> {
    pub variant: EquationVariant,
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    pub singlet_prob: Vec<T>,
    /// Running `∫ 2k_S Tr{ρQ_S} dt`, integrated alongside ρ.
    pub singlet_yield: Vec<T>,
    /// Running `∫ 2k_T Tr{ρQ_T} dt`.
    pub triplet_yield: Vec<T>,
    /// Internal step actually used (after halving).
    pub dt: T,
    /// Step-halving error estimate on `Tr{ρQ_S}`.
    pub halving_error: T,
}

impl<T: Real> PropagationResult<T> {
    pub fn traces(&self) -> Vec<T> {
        self.states.iter().map(DensityMatrix::trace).collect()
    }

    pub fn purities(&self) -> Vec<T> {
        self.states.iter().map(DensityMatrix::purity).collect()
    }

    pub fn final_state(&self) -> &DensityMatrix<T> {
        self.states.last().expect("propagation has at least two samples")
    }
}

/// The stiffness-limited step `min(dt_hint, 0.05/(‖H‖₂ + 2k))`.
pub fn stable_step<T: Real>(model: &RipModel<T>, dt_hint: T) -> Result<T> {
    let scale = model.hamiltonian().spectral_norm()? + T::lit(2.0) * model.k();
    if scale <= T::zero() {
        return Ok(dt_hint);
    }
    Ok(dt_hint.min(T::lit(0.05) / scale))
}

pub fn propagate<T: Real>(
    model: &RipModel<T>,
    variant: EquationVariant,
    rho0: &DensityMatrix<T>,
    opts: &PropagateOptions<T>,
) -> Result<PropagationResult<T>> {
    check_dims(rho0.matrix(), model)?;
    if !(opts.t_max > T::zero()) || !opts.t_max.is_finite() {
        return Err(Error::InvalidParameter { name: "t_max", reason: format!("must be positive, got {}", opts.t_max) });
    }
    if !(opts.dt_hint > T::zero()) {
        return Err(Error::InvalidParameter { name: "dt_hint", reason: format!("must be positive, got {}", opts.dt_hint) });
    }
    if opts.n_out < 2 {
        return Err(Error::InvalidParameter { name: "n_out", reason: "need at least two samples".into() });
    }

    let spacing = opts.t_max / T::from_count(opts.n_out - 1);
    let dt_target = stable_step(model, opts.dt_hint)?;
    let substeps = (spacing / dt_target).ceil().to_usize().unwrap_or(usize::MAX).max(1);

    let coarse = integrate(model, variant, rho0, opts, substeps)?;
    let fine = integrate(model, variant, rho0, opts, 2 * substeps)?;

    let scale = fine.singlet_prob.iter().fold(T::zero(), |m, s| m.max(s.abs()));
    let error = coarse
        .singlet_prob
        .iter()
        .zip(&fine.singlet_prob)
        .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    let bound = T::tol(1e-7) * opts.t_max.max(T::one()) * scale.max(T::min_positive_value());
    if error > bound {
        return Err(Error::StepHalving { error: to_f64(error), bound: to_f64(bound) });
    }
    let mut fine = fine;
    fine.halving_error = error;
    check_invariants(&fine)?;
    Ok(fine)
}

fn integrate<T: Real>(
    model: &RipModel<T>,
    variant: EquationVariant,
    rho0: &DensityMatrix<T>,
    opts: &PropagateOptions<T>,
    substeps: usize,
) -> Result<PropagationResult<T>> {
    let n_out = opts.n_out;
    let spacing = opts.t_max / T::from_count(n_out - 1);
    let h = spacing / T::from_count(substeps);
    let half = h * T::lit(0.5);
    let sixth = h / T::lit(6.0);
    let two_ks = T::lit(2.0) * model.k_s();
    let two_kt = T::lit(2.0) * model.k_t();
    let yield_rate = |rho: &CMatrix<T>| {
        (
            two_ks * trace_product(rho, model.q_s()).re,
            two_kt * trace_product(rho, model.q_t()).re,
        )
    };

    let space = rho0.space().clone();
    let mut rho = rho0.matrix().clone();
    let (mut ys, mut yt) = (T::zero(), T::zero());

    let mut res = PropagationResult {
        variant,
        times: Vec::with_capacity(n_out),
        states: Vec::with_capacity(n_out),
        singlet_prob: Vec::with_capacity(n_out),
        singlet_yield: Vec::with_capacity(n_out),
        triplet_yield: Vec::with_capacity(n_out),
        dt: h,
        halving_error: T::zero(),
    };
    let record = |i: usize, rho: &CMatrix<T>, ys: T, yt: T, res: &mut PropagationResult<T>| {
        let t = if i + 1 == n_out { opts.t_max } else { T::from_count(i) * spacing };
        res.times.push(t);
        res.singlet_prob.push(trace_product(rho, model.q_s()).re);
        res.states.push(DensityMatrix::from_parts(space.clone(), rho.clone()));
        res.singlet_yield.push(ys);
        res.triplet_yield.push(yt);
    };

    record(0, &rho, ys, yt, &mut res);
    for i in 1..n_out {
        for _ in 0..substeps {
            let k1 = rhs(variant, &rho, model)?;
            let mut s2 = rho.clone();
            s2.axpy(re(half), &k1);
            let k2 = rhs(variant, &s2, model)?;
            let mut s3 = rho.clone();
            s3.axpy(re(half), &k2);
            let k3 = rhs(variant, &s3, model)?;
            let mut s4 = rho.clone();
            s4.axpy(re(h), &k3);
            let k4 = rhs(variant, &s4, model)?;

            let g = [yield_rate(&rho), yield_rate(&s2), yield_rate(&s3), yield_rate(&s4)];
            ys += sixth * (g[0].0 + T::lit(2.0) * (g[1].0 + g[2].0) + g[3].0);
            yt += sixth * (g[0].1 + T::lit(2.0) * (g[1].1 + g[2].1) + g[3].1);

            rho.axpy(re(sixth), &k1);
            rho.axpy(re(T::lit(2.0) * sixth), &k2);
            rho.axpy(re(T::lit(2.0) * sixth), &k3);
            rho.axpy(re(sixth), &k4);
        }
        if !rho.is_finite() {
            return Err(Error::Invariant { what: "finite state", t: to_f64(T::from_count(i) * spacing), deviation: f64::INFINITY });
        }
        record(i, &rho, ys, yt, &mut res);
    }
    Ok(res)
}

fn check_invariants<T: Real>(res: &PropagationResult<T>) -> Result<()> {
    for (t, state) in res.times.iter().zip(&res.states) {
        let t = to_f64(*t);
        let herm = state.matrix().hermiticity_defect();
        if herm > T::tol(1e-10) {
            return Err(Error::Invariant { what: "hermiticity", t, deviation: to_f64(herm) });
        }
        if res.variant == EquationVariant::Kominis {
            let dev = (state.trace() - T::one()).abs();
            if dev > T::tol(1e-9) {
                return Err(Error::Invariant { what: "unit trace", t, deviation: to_f64(dev) });
            }
        }
        let min_ev = min_eigenvalue(state.matrix())?;
        if min_ev < -T::tol(1e-8) {
            return Err(Error::Invariant { what: "positivity", t, deviation: to_f64(-min_ev) });
        }
    }
    Ok(())
}

/// Total singlet and triplet recombination yields over the propagation window
/// (Haberkorn only, where lost trace is recombined population).
pub fn recombination_yields<T: Real>(result: &PropagationResult<T>, _model: &RipModel<T>) -> Result<(T, T)> {
    if result.variant != EquationVariant::Haberkorn {
        return Err(Error::YieldsUndefined);
    }
    let ys = *result.singlet_yield.last().unwrap_or(&T::zero());
    let yt = *result.triplet_yield.last().unwrap_or(&T::zero());
    Ok((ys, yt))
}
