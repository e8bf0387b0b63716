//! Quantum-jump unraveling of the measurement master equation.
//!
//! A trajectory is a normalised state `|ψ⟩` that evolves deterministically
//! under `H − ik(Q_S − ⟨Q_S⟩)` and jumps to `Q_S|ψ⟩/√⟨Q_S⟩` at rate
//! `2k⟨Q_S⟩`. Averaging `|ψ⟩⟨ψ|` over realisations reproduces the Kominis
//! master equation.
//!
//! Random numbers come from a ChaCha8 stream keyed by the master seed, with the
//! trajectory index selecting the stream and one draw consumed per step, so
//! every trajectory is reproducible on its own and ensembles do not depend on
//! how work is scheduled.

mod correlation;

pub use correlation::{
    correlation_analytic, correlation_mc, stationary_state, CorrelationAnalytic, CorrelationEstimate,
    CorrelationOptions,
};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm, CMatrix};
use crate::models::RipModel;
use crate::scalar::{imag_unit, re, Real, C};
use crate::spin::HilbertSpace;

/// Trajectories per reduction chunk; fixed so sums never depend on thread count.
pub(crate) const CHUNK: usize = 64;

/// Normalised pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    space: HilbertSpace,
    amplitudes: Vec<C<T>>,
}

impl<T: Real> StateVector<T> {
    /// Normalises `amplitudes`.
    pub fn new(space: HilbertSpace, amplitudes: Vec<C<T>>) -> Result<Self> {
        let n = space.total_dim();
        if amplitudes.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: amplitudes.len() });
        }
        let mut amplitudes = amplitudes;
        if !normalize(&mut amplitudes) {
            return Err(Error::InvalidParameter { name: "psi", reason: "zero vector".into() });
        }
        Ok(Self { space, amplitudes })
    }

    /// Basis state `|index⟩`.
    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        let mut v = vec![C::zero(); space.total_dim()];
        *v.get_mut(index).ok_or(Error::DimensionMismatch { expected: space.total_dim(), got: index })? = re(T::one());
        Self::new(space, v)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    pub fn norm(&self) -> T {
        norm(&self.amplitudes)
    }

    pub fn expectation(&self, op: &CMatrix<T>) -> T {
        expectation(op, &self.amplitudes)
    }
}

fn norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
}

fn normalize<T: Real>(v: &mut [C<T>]) -> bool {
    let n = norm(v);
    if !(n > T::zero()) || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x = *x / n);
    true
}

pub(crate) fn expectation<T: Real>(op: &CMatrix<T>, v: &[C<T>]) -> T {
    let ov = op.mul_vec(v);
    v.iter().zip(&ov).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Largest step the trajectory contract allows:
/// `min(0.01/(2k), 0.02/‖H‖₂)`.
pub fn max_step<T: Real>(model: &RipModel<T>) -> Result<T> {
    let mut limit = T::infinity();
    if model.k() > T::zero() {
        limit = limit.min(T::lit(0.01) / (T::lit(2.0) * model.k()));
    }
    let hn = model.hamiltonian().spectral_norm()?;
    if hn > T::zero() {
        limit = limit.min(T::lit(0.02) / hn);
    }
    Ok(limit)
}

pub fn check_dt_contract<T: Real>(model: &RipModel<T>, dt: T) -> Result<()> {
    let limit = max_step(model)?;
    if !(dt > T::zero()) || dt > limit * (T::one() + T::lit(1e-12)) {
        return Err(Error::DtContract {
            dt: dt.to_f64().unwrap_or(f64::NAN),
            limit: limit.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// One first-order step, exactly as the conditional evolution is written:
/// with probability `2k⟨Q_S⟩dt` jump to `Q_S|ψ⟩/√⟨Q_S⟩`, otherwise drift by
/// `−i·dt·H|ψ⟩ − k·dt·(Q_S − ⟨Q_S⟩)|ψ⟩`; renormalise either way.
/// `draw` is a uniform variate in `[0, 1)`.
pub fn jump_step<T: Real>(psi: &StateVector<T>, model: &RipModel<T>, dt: T, draw: T) -> Result<(StateVector<T>, bool)> {
    check_dt_contract(model, dt)?;
    let mut amps = psi.amplitudes.clone();
    let jumped = first_order_step(&mut amps, model.hamiltonian(), model.q_s(), model.k(), dt, draw)?;
    Ok((StateVector { space: psi.space.clone(), amplitudes: amps }, jumped))
}

/// Jump probability of a first-order step: `2k⟨Q_S⟩dt`.
pub fn jump_probability<T: Real>(psi: &StateVector<T>, model: &RipModel<T>, dt: T) -> T {
    T::lit(2.0) * model.k() * psi.expectation(model.q_s()) * dt
}

fn first_order_step<T: Real>(psi: &mut [C<T>], h: &CMatrix<T>, q: &CMatrix<T>, k: T, dt: T, draw: T) -> Result<bool> {
    let qpsi = q.mul_vec(psi);
    let qexp: T = psi.iter().zip(&qpsi).map(|(a, b)| (a.conj() * b).re).sum();
    let p = T::lit(2.0) * k * qexp * dt;
    if draw < p {
        if !(qexp > T::epsilon()) {
            return Err(Error::ZeroJumpWeight);
        }
        psi.copy_from_slice(&qpsi);
        normalize(psi);
        return Ok(true);
    }
    let hpsi = h.mul_vec(psi);
    let minus_i_dt = -imag_unit::<T>() * dt;
    for i in 0..psi.len() {
        let drift = minus_i_dt * hpsi[i] - (qpsi[i] - psi[i] * qexp) * (k * dt);
        psi[i] += drift;
    }
    normalize(psi);
    Ok(false)
}

/// How a single step of the unraveling is discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepScheme {
    /// The literal first-order step of [`jump_step`]; bias is O(dt).
    FirstOrder,
    /// Exact no-jump propagator `e^{−iH_eff dt}` with `H_eff = H − ikQ_S`,
    /// jump probability `1 − ‖e^{−iH_eff dt}ψ‖²`, and the projection applied at
    /// mid-step. Same one-draw-per-step structure, bias O(dt²).
    #[default]
    Midpoint,
}

/// Precomputed stepping data for a model and step size.
#[derive(Debug, Clone)]
pub struct JumpStepper<T> {
    h: CMatrix<T>,
    q: CMatrix<T>,
    k: T,
    dt: T,
    scheme: StepScheme,
    full: CMatrix<T>,
    half: CMatrix<T>,
}

impl<T: Real> JumpStepper<T> {
    pub fn new(model: &RipModel<T>, dt: T, scheme: StepScheme) -> Result<Self> {
        check_dt_contract(model, dt)?;
        let mut heff = model.hamiltonian().clone();
        heff.axpy(C::new(T::zero(), -model.k()), model.q_s());
        let gen = heff.scale(-imag_unit::<T>());
        let (full, half) = match scheme {
            StepScheme::Midpoint => (expm(&gen.scale_real(dt))?, expm(&gen.scale_real(dt * T::lit(0.5)))?),
            StepScheme::FirstOrder => (CMatrix::identity(model.dim()), CMatrix::identity(model.dim())),
        };
        Ok(Self {
            h: model.hamiltonian().clone(),
            q: model.q_s().clone(),
            k: model.k(),
            dt,
            scheme,
            full,
            half,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Advances `psi` in place; returns whether a jump fired.
    pub fn step(&self, psi: &mut [C<T>], draw: T) -> Result<bool> {
        match self.scheme {
            StepScheme::FirstOrder => first_order_step(psi, &self.h, &self.q, self.k, self.dt, draw),
            StepScheme::Midpoint => {
                let mut next = self.full.mul_vec(psi);
                let survive = next.iter().map(|x| x.norm_sqr()).sum::<T>();
                let p = if self.k > T::zero() {
                    (T::one() - survive).max(T::zero()).min(T::one())
                } else {
                    T::zero()
                };
                if draw < p {
                    next = self.half.mul_vec(&self.q.mul_vec(&self.half.mul_vec(psi)));
                    if !(norm(&next) > T::epsilon()) {
                        return Err(Error::ZeroJumpWeight);
                    }
                    normalize(&mut next);
                    psi.copy_from_slice(&next);
                    return Ok(true);
                }
                normalize(&mut next);
                psi.copy_from_slice(&next);
                Ok(false)
            }
        }
    }
}

/// Controls shared by single trajectories and ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOptions<T> {
    pub t_max: T,
    /// Upper bound on the step; the actual step divides the output spacing.
    pub dt: T,
    /// Output samples including `t = 0` and `t = t_max`.
    pub n_out: usize,
    pub scheme: StepScheme,
    /// Stop at the first jump (irreversible recombination). An extension
    /// beyond the conditional evolution, for first-jump statistics only.
    pub absorbing: bool,
}

impl<T: Real> TrajectoryOptions<T> {
    pub fn new(t_max: T, dt: T) -> Self {
        Self {
            t_max,
            dt,
            n_out: 201,
            scheme: StepScheme::default(),
            absorbing: false,
        }
    }

    pub fn with_samples(mut self, n_out: usize) -> Self {
        self.n_out = n_out;
        self
    }

    pub fn with_scheme(mut self, scheme: StepScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn absorbing(mut self, absorbing: bool) -> Self {
        self.absorbing = absorbing;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_max > T::zero()) || !self.t_max.is_finite() {
            return Err(Error::InvalidParameter { name: "t_max", reason: format!("must be positive, got {}", self.t_max) });
        }
        if self.n_out < 2 {
            return Err(Error::InvalidParameter { name: "n_out", reason: "need at least two samples".into() });
        }
        Ok(())
    }

    /// `(steps per output interval, effective dt)`.
    fn grid(&self) -> (usize, T) {
        let spacing = self.t_max / T::from_count(self.n_out - 1);
        let stride = (spacing / self.dt * (T::one() - T::lit(1e-12))).ceil().to_usize().unwrap_or(1).max(1);
        (stride, spacing / T::from_count(stride))
    }
}

/// One realisation of the jump process.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub seed: u64,
    pub index: u64,
    pub times: Vec<T>,
    pub qs_expect: Vec<T>,
    /// Jump epochs, taken at the midpoint of the step in which they fire.
    pub jump_times: Vec<T>,
    /// `k⟨Q_S⟩` on the output grid.
    pub rc_samples: Vec<T>,
    /// Set in absorbing mode when the trajectory ended at its first jump.
    pub terminated_at: Option<T>,
    /// Jumps per output interval.
    pub bin_counts: Vec<u32>,
}

pub(crate) fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub(crate) fn draw<T: Real>(rng: &mut ChaCha8Rng) -> T {
    T::lit(rng.random::<f64>())
}

/// Simulates trajectory 0 of the stream keyed by `seed`.
pub fn simulate_trajectory<T: Real>(
    model: &RipModel<T>,
    psi0: &StateVector<T>,
    opts: &TrajectoryOptions<T>,
    seed: u64,
) -> Result<TrajectoryRecord<T>> {
    simulate_ensemble_member(model, psi0, opts, seed, 0)
}

/// Simulates trajectory `index` of the ensemble keyed by `master_seed`.
pub fn simulate_ensemble_member<T: Real>(
    model: &RipModel<T>,
    psi0: &StateVector<T>,
    opts: &TrajectoryOptions<T>,
    master_seed: u64,
    index: u64,
) -> Result<TrajectoryRecord<T>> {
    opts.validate()?;
    let (stride, dt) = opts.grid();
    let stepper = JumpStepper::new(model, dt, opts.scheme)?;
    run_trajectory(&stepper, model, psi0, opts, stride, master_seed, index)
}

fn run_trajectory<T: Real>(
    stepper: &JumpStepper<T>,
    model: &RipModel<T>,
    psi0: &StateVector<T>,
    opts: &TrajectoryOptions<T>,
    stride: usize,
    master_seed: u64,
    index: u64,
) -> Result<TrajectoryRecord<T>> {
    if psi0.amplitudes.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: psi0.amplitudes.len() });
    }
    let mut rng = stream_rng(master_seed, index);
    let dt = stepper.dt();
    let spacing = dt * T::from_count(stride);
    let intervals = opts.n_out - 1;
    let k = model.k();
    let q = model.q_s();

    let mut psi = psi0.amplitudes.clone();
    let mut rec = TrajectoryRecord {
        seed: master_seed,
        index,
        times: Vec::with_capacity(opts.n_out),
        qs_expect: Vec::with_capacity(opts.n_out),
        jump_times: Vec::new(),
        rc_samples: Vec::with_capacity(opts.n_out),
        terminated_at: None,
        bin_counts: vec![0; intervals],
    };
    let sample = |i: usize, psi: &[C<T>], rec: &mut TrajectoryRecord<T>| {
        let t = if i == intervals { opts.t_max } else { T::from_count(i) * spacing };
        let qs = expectation(q, psi).max(T::zero()).min(T::one());
        rec.times.push(t);
        rec.qs_expect.push(qs);
        rec.rc_samples.push(k * qs);
    };

    sample(0, &psi, &mut rec);
    let half = T::lit(0.5);
    'outer: for i in 0..intervals {
        for s in 0..stride {
            let n = i * stride + s;
            if stepper.step(&mut psi, draw(&mut rng))? {
                let t = (T::from_count(n) + half) * dt;
                rec.jump_times.push(t);
                rec.bin_counts[i] += 1;
                if opts.absorbing {
                    rec.terminated_at = Some(t);
                    break 'outer;
                }
            }
        }
        sample(i + 1, &psi, &mut rec);
    }
    Ok(rec)
}

/// Ensemble statistics over independent trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult<T> {
    pub n_traj: usize,
    pub times: Vec<T>,
    pub mean_qs: Vec<T>,
    /// Standard error of `mean_qs`.
    pub se_qs: Vec<T>,
    /// Jumps per unit time per trajectory in each output interval.
    pub mean_jump_rate: Vec<T>,
    pub se_jump_rate: Vec<T>,
    /// Average of `|ψ⟩⟨ψ|` at each sample.
    pub rho_estimate: Vec<CMatrix<T>>,
    /// `√(Σᵢⱼ Var(|ψ⟩⟨ψ|ᵢⱼ)/N)`, the Frobenius-norm standard error of `rho_estimate`.
    pub se_rho: Vec<T>,
    pub mean_jump_count: T,
    pub se_jump_count: T,
}

/// Running means and squared deviations (Welford), mergeable in a fixed order.
#[derive(Clone)]
pub(crate) struct Moments<T> {
    n: usize,
    mean: Vec<T>,
    m2: Vec<T>,
}

impl<T: Real> Moments<T> {
    pub(crate) fn new(len: usize) -> Self {
        Self { n: 0, mean: vec![T::zero(); len], m2: vec![T::zero(); len] }
    }

    pub(crate) fn push(&mut self, xs: &[T]) {
        self.n += 1;
        let nf = T::from_count(self.n);
        for ((m, m2), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(xs) {
            let delta = x - *m;
            *m += delta / nf;
            *m2 += delta * (x - *m);
        }
    }

    pub(crate) fn merge(&mut self, o: &Self) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = o.clone();
            return;
        }
        let (na, nb) = (T::from_count(self.n), T::from_count(o.n));
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = o.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += o.m2[i] + delta * delta * na * nb / n;
        }
        self.n += o.n;
    }

    /// Means and standard errors of the mean.
    pub(crate) fn finish(&self) -> (Vec<T>, Vec<T>) {
        let nf = T::from_count(self.n);
        let se = self.m2.iter().map(|&m2| (m2.max(T::zero()) / (nf - T::one()) / nf).sqrt()).collect();
        (self.mean.clone(), se)
    }
}

#[derive(Clone)]
struct Sums<T> {
    q: Moments<T>,
    bins: Moments<T>,
    count: Moments<T>,
    rho: Vec<CMatrix<T>>,
    rho2: Vec<T>,
}

impl<T: Real> Sums<T> {
    fn new(n_out: usize, d: usize) -> Self {
        Self {
            q: Moments::new(n_out),
            bins: Moments::new(n_out - 1),
            count: Moments::new(1),
            rho: vec![CMatrix::zeros(d, d); n_out],
            rho2: vec![T::zero(); n_out],
        }
    }

    fn add_state(&mut self, i: usize, psi: &[C<T>]) {
        let m = &mut self.rho[i];
        let d = psi.len();
        for a in 0..d {
            for b in 0..d {
                m[(a, b)] += psi[a] * psi[b].conj();
            }
        }
        let n2: T = psi.iter().map(|x| x.norm_sqr()).sum();
        self.rho2[i] += n2 * n2;
    }

    fn merge(&mut self, o: &Self) {
        self.q.merge(&o.q);
        self.bins.merge(&o.bins);
        self.count.merge(&o.count);
        for (a, b) in self.rho.iter_mut().zip(&o.rho) {
            *a += b;
        }
        for (a, b) in self.rho2.iter_mut().zip(&o.rho2) {
            *a += *b;
        }
    }
}

/// Averages `n_traj ≥ 2` trajectories seeded from `master_seed`. Work is split
/// into fixed chunks reduced in index order, so the result is bit-identical
/// for any degree of parallelism.
pub fn ensemble_average<T: Real>(
    model: &RipModel<T>,
    psi0: &StateVector<T>,
    opts: &TrajectoryOptions<T>,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleResult<T>> {
    if n_traj < 2 {
        return Err(Error::InvalidParameter { name: "n_traj", reason: "need at least two trajectories".into() });
    }
    if opts.absorbing {
        return Err(Error::InvalidParameter { name: "absorbing", reason: "ensemble averages need surviving trajectories".into() });
    }
    opts.validate()?;
    if psi0.amplitudes.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: psi0.amplitudes.len() });
    }
    let (stride, dt) = opts.grid();
    let stepper = JumpStepper::new(model, dt, opts.scheme)?;
    let d = model.dim();
    let n_chunks = n_traj.div_ceil(CHUNK);
    let spacing = dt * T::from_count(stride);

    let partials: Vec<Sums<T>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<Sums<T>> {
            let mut sums = Sums::new(opts.n_out, d);
            let mut qs = vec![T::zero(); opts.n_out];
            let mut rates = vec![T::zero(); opts.n_out - 1];
            for idx in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
                let bins = member_with_states(&stepper, model, psi0, opts.n_out, stride, master_seed, idx as u64, &mut sums, &mut qs)?;
                for (r, &cnt) in rates.iter_mut().zip(&bins) {
                    *r = T::from_count(cnt as usize) / spacing;
                }
                let total: u32 = bins.iter().sum();
                sums.q.push(&qs);
                sums.bins.push(&rates);
                sums.count.push(&[T::from_count(total as usize)]);
            }
            Ok(sums)
        })
        .collect::<Result<_>>()?;

    let mut acc = Sums::new(opts.n_out, d);
    for p in &partials {
        acc.merge(p);
    }

    let nf = T::from_count(n_traj);
    let intervals = opts.n_out - 1;
    let times: Vec<T> = (0..opts.n_out)
        .map(|i| if i == intervals { opts.t_max } else { T::from_count(i) * spacing })
        .collect();
    let (mean_qs, se_qs) = acc.q.finish();
    let (mean_jump_rate, se_jump_rate) = acc.bins.finish();
    let rho_estimate: Vec<CMatrix<T>> = acc.rho.iter().map(|m| m.scale_real(T::one() / nf)).collect();
    let se_rho = rho_estimate
        .iter()
        .zip(&acc.rho2)
        .map(|(m, &s2)| {
            let mean_sq = s2 / nf;
            let f2 = m.frobenius_norm().powi(2);
            ((mean_sq - f2).max(T::zero()) / (nf - T::one())).sqrt()
        })
        .collect();
    let (count, count_se) = acc.count.finish();

    Ok(EnsembleResult {
        n_traj,
        times,
        mean_qs,
        se_qs,
        mean_jump_rate,
        se_jump_rate,
        rho_estimate,
        se_rho,
        mean_jump_count: count[0],
        se_jump_count: count_se[0],
    })
}

/// Runs one member, streaming projectors into `sums` and `⟨Q_S⟩` into `qs`;
/// returns per-bin jump counts.
#[allow(clippy::too_many_arguments)]
fn member_with_states<T: Real>(
    stepper: &JumpStepper<T>,
    model: &RipModel<T>,
    psi0: &StateVector<T>,
    n_out: usize,
    stride: usize,
    master_seed: u64,
    index: u64,
    sums: &mut Sums<T>,
    qs: &mut [T],
) -> Result<Vec<u32>> {
    let mut rng = stream_rng(master_seed, index);
    let q = model.q_s();
    let mut psi = psi0.amplitudes.clone();
    let mut bins = vec![0u32; n_out - 1];
    let clamp = |x: T| x.max(T::zero()).min(T::one());
    sums.add_state(0, &psi);
    qs[0] = clamp(expectation(q, &psi));
    for (i, bin) in bins.iter_mut().enumerate() {
        for _ in 0..stride {
            if stepper.step(&mut psi, draw(&mut rng))? {
                *bin += 1;
            }
        }
        sums.add_state(i + 1, &psi);
        qs[i + 1] = clamp(expectation(q, &psi));
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_toy_model, ToyModelParams};

    fn toy(w: f64, m: f64, k: f64) -> RipModel<f64> {
        build_toy_model(&ToyModelParams::new(w, m, k)).unwrap()
    }

    fn ket(model: &RipModel<f64>, amps: [f64; 2]) -> StateVector<f64> {
        StateVector::new(model.space().clone(), amps.iter().map(|&x| re(x)).collect()).unwrap()
    }

    #[test]
    fn triplet_is_dark() {
        let model = toy(1.0, 0.0, 2.0);
        let t = ket(&model, [0.0, 1.0]);
        assert_eq!(jump_probability(&t, &model, 1e-3), 0.0);
        let (next, jumped) = jump_step(&t, &model, 1e-3, 0.0).unwrap();
        assert!(!jumped);
        assert_eq!(next.amplitudes(), t.amplitudes());
    }

    #[test]
    fn singlet_is_fixed_by_jump() {
        let model = toy(1.0, 1.0, 1.0);
        let s = ket(&model, [1.0, 0.0]);
        let (next, jumped) = jump_step(&s, &model, 1e-3, 0.0).unwrap();
        assert!(jumped);
        assert_eq!(next.amplitudes(), s.amplitudes());
    }

    #[test]
    fn superposition_jump_probability_and_outcome() {
        let (k, dt) = (1.0, 4e-3);
        let model = toy(1.0, 1.0, k);
        let plus = ket(&model, [1.0, 1.0]);
        assert!((jump_probability(&plus, &model, dt) - k * dt).abs() < 1e-15);
        let (next, jumped) = jump_step(&plus, &model, dt, 0.5 * k * dt).unwrap();
        assert!(jumped);
        assert!((next.amplitudes()[0] - re(1.0)).norm() < 1e-15 && next.amplitudes()[1].norm() < 1e-15);
        let (_, jumped) = jump_step(&plus, &model, dt, 1.5 * k * dt).unwrap();
        assert!(!jumped);
    }

    #[test]
    fn dt_contract_enforced() {
        let model = toy(1.0, 1.0, 1.0);
        let s = ket(&model, [1.0, 0.0]);
        assert!(matches!(jump_step(&s, &model, 0.01, 0.5), Err(Error::DtContract { .. })));
        assert!(check_dt_contract(&model, 0.005).is_ok());
        assert!(check_dt_contract(&toy(0.0, 0.0, 0.0), 10.0).is_ok());
    }

    #[test]
    fn norm_preserved_by_both_schemes() {
        let model = toy(1.0, 1.0, 1.0);
        for scheme in [StepScheme::FirstOrder, StepScheme::Midpoint] {
            let stepper = JumpStepper::new(&model, 0.005, scheme).unwrap();
            let mut psi = vec![re(0.6), C::new(0.0, 0.8)];
            let mut rng = stream_rng(1, 0);
            for _ in 0..5000 {
                stepper.step(&mut psi, draw(&mut rng)).unwrap();
                assert!((norm(&psi) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dark_trajectory_never_jumps() {
        let model = toy(0.0, 0.0, 1.0);
        let t = ket(&model, [0.0, 1.0]);
        let rec = simulate_trajectory(&model, &t, &TrajectoryOptions::new(5.0, 0.005), 3).unwrap();
        assert!(rec.jump_times.is_empty());
        assert!(rec.qs_expect.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn trajectories_are_deterministic() {
        let model = toy(1.0, 1.0, 1.0);
        let s = ket(&model, [1.0, 0.0]);
        let opts = TrajectoryOptions::new(10.0, 0.005);
        let a = simulate_trajectory(&model, &s, &opts, 42).unwrap();
        let b = simulate_trajectory(&model, &s, &opts, 42).unwrap();
        assert_eq!(a, b);
        assert!(!a.jump_times.is_empty());
        assert!(a.jump_times.windows(2).all(|w| w[1] > w[0]));
        assert!(a.jump_times.iter().all(|&t| (0.0..=10.0).contains(&t)));
        assert!(a.qs_expect.iter().all(|&q| (0.0..=1.0).contains(&q)));
        let c = simulate_trajectory(&model, &s, &opts, 43).unwrap();
        assert_ne!(a.jump_times, c.jump_times);
    }

    #[test]
    fn absorbing_mode_stops_at_first_jump() {
        let model = toy(0.0, 0.0, 1.0);
        let s = ket(&model, [1.0, 0.0]);
        let opts = TrajectoryOptions::new(50.0, 0.005).absorbing(true);
        let rec = simulate_trajectory(&model, &s, &opts, 7).unwrap();
        assert_eq!(rec.jump_times.len(), 1);
        assert_eq!(rec.terminated_at, Some(rec.jump_times[0]));
        assert!(ensemble_average(&model, &s, &opts, 4, 1).is_err());
    }

    #[test]
    fn closed_system_ensemble_has_no_spread() {
        let model = toy(1.0, 1.0, 0.0);
        let s = ket(&model, [1.0, 0.0]);
        let opts = TrajectoryOptions::new(3.0, 0.005).with_samples(31);
        let ens = ensemble_average(&model, &s, &opts, 70, 5).unwrap();
        assert!(ens.se_qs.iter().all(|&x| x < 1e-12));
        assert_eq!(ens.mean_jump_count, 0.0);
        let single = simulate_trajectory(&model, &s, &opts, 5).unwrap();
        for (a, b) in ens.mean_qs.iter().zip(&single.qs_expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ensemble_reduction_is_thread_independent() {
        let model = toy(1.0, 1.0, 1.0);
        let s = ket(&model, [1.0, 0.0]);
        let opts = TrajectoryOptions::new(2.0, 0.005).with_samples(21);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| ensemble_average(&model, &s, &opts, 300, 11).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn ensemble_needs_two_trajectories() {
        let model = toy(1.0, 1.0, 1.0);
        let s = ket(&model, [1.0, 0.0]);
        assert!(ensemble_average(&model, &s, &TrajectoryOptions::new(1.0, 0.005), 1, 0).is_err());
    }
}
