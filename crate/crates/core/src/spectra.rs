//! Liouvillian superoperators and their spectra.
//!
//! Density matrices are vectorised by row stacking, so
//! `vec(XρY) = (X ⊗ Yᵀ)·vec(ρ)` and the toy-model vector is
//! `(ρ_SS, ρ_ST, ρ_TS, ρ_TT)ᵀ`. Every eigenvalue is written `−λ + iω_e` with
//! decay rate `λ` and effective mixing frequency `ω_e`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::EquationVariant;
use crate::error::{Error, Result};
use crate::linalg::{eigen, expm, CMatrix};
use crate::models::RipModel;
use crate::scalar::{imag_unit, re, Real, C};

/// Matrix `A` with `d vec(ρ)/dt = A·vec(ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator<T> {
    dim: usize,
    variant: EquationVariant,
    matrix: CMatrix<T>,
}

impl<T: Real> Superoperator<T> {
    /// Hilbert-space dimension `d` (the matrix is `d²×d²`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> EquationVariant {
        self.variant
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    /// Applies the generator to a density matrix via its vectorisation.
    pub fn apply(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        rho.ensure_square(self.dim)?;
        CMatrix::unvectorize(&self.matrix.mul_vec(&rho.vectorize()))
    }
}

/// `X ⊗ I` and `I ⊗ Yᵀ` blocks for row stacking.
fn left<T: Real>(x: &CMatrix<T>) -> CMatrix<T> {
    x.kron(&CMatrix::identity(x.nrows()))
}

fn right<T: Real>(y: &CMatrix<T>) -> CMatrix<T> {
    CMatrix::identity(y.nrows()).kron(&y.transpose())
}

pub fn build_superoperator<T: Real>(model: &RipModel<T>, variant: EquationVariant) -> Superoperator<T> {
    let h = model.hamiltonian();
    let mut a = (&left(h) - &right(h)).scale(-imag_unit::<T>());
    match variant {
        EquationVariant::Kominis => {
            let q = model.q_s();
            let q2 = q * q;
            let mut d = &left(&q2) + &right(&q2);
            d.axpy(re(T::lit(-2.0)), &q.kron(&q.transpose()));
            a.axpy(re(-model.k()), &d);
        }
        EquationVariant::Haberkorn => {
            for (rate, q) in [(model.k_s(), model.q_s()), (model.k_t(), model.q_t())] {
                a.axpy(re(-rate), &(&left(q) + &right(q)));
            }
        }
    }
    Superoperator {
        dim: model.dim(),
        variant,
        matrix: a,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeClass {
    Stationary,
    Zeno,
    Normal,
}

impl ModeClass {
    pub fn name(self) -> &'static str {
        match self {
            Self::Stationary => "stationary",
            Self::Zeno => "zeno",
            Self::Normal => "normal",
        }
    }
}

/// One Liouvillian eigenpair, eigenvalue `−λ + iω_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMode<T> {
    pub lambda: T,
    pub omega_e: T,
    pub classification: Option<ModeClass>,
    pub right_eigenvector: Vec<C<T>>,
}

impl<T: Real> SpectralMode<T> {
    pub fn eigenvalue(&self) -> C<T> {
        C::new(-self.lambda, self.omega_e)
    }
}

/// All `d²` eigenpairs sorted by decay rate (ties by frequency), each
/// residual-checked against `1e-9·‖A‖₂`.
pub fn spectrum<T: Real>(a: &Superoperator<T>) -> Result<Vec<SpectralMode<T>>> {
    let m = a.matrix();
    let e = eigen(m)?;
    let bound = (T::tol(1e-9) * m.spectral_norm()?).max(T::min_positive_value());
    let mut modes = Vec::with_capacity(e.values.len());
    for (k, &mu) in e.values.iter().enumerate() {
        let v = e.vector(k);
        let av = m.mul_vec(&v);
        let residual = av
            .iter()
            .zip(&v)
            .map(|(x, y)| (*x - mu * *y).norm_sqr())
            .sum::<T>()
            .sqrt();
        if residual > bound {
            return Err(Error::Residual {
                residual: residual.to_f64().unwrap_or(f64::NAN),
                bound: bound.to_f64().unwrap_or(f64::NAN),
            });
        }
        modes.push(SpectralMode {
            lambda: -mu.re,
            omega_e: mu.im,
            classification: None,
            right_eigenvector: v,
        });
    }
    modes.sort_by(|x, y| {
        x.lambda
            .partial_cmp(&y.lambda)
            .unwrap()
            .then(x.omega_e.partial_cmp(&y.omega_e).unwrap())
    });
    Ok(modes)
}

/// Threshold below which a decay rate or frequency counts as zero:
/// `1e-10·max(1, spectral radius)`.
pub fn zero_tolerance<T: Real>(modes: &[SpectralMode<T>]) -> T {
    let radius = modes.iter().fold(T::zero(), |m, x| m.max(x.eigenvalue().norm()));
    T::tol(1e-10) * radius.max(T::one())
}

/// Smallest decay rate above [`zero_tolerance`], or zero if every mode is undamped.
pub fn min_nonzero_decay_rate<T: Real>(modes: &[SpectralMode<T>]) -> T {
    let tol = zero_tolerance(modes);
    modes
        .iter()
        .map(|m| m.lambda)
        .filter(|&l| l > tol)
        .fold(None, |acc: Option<T>, l| Some(acc.map_or(l, |a| a.min(l))))
        .unwrap_or(T::zero())
}

/// Labels modes as stationary (`λ ≈ 0, ω_e ≈ 0`), Zeno (the smallest strictly
/// positive `λ`, together with its complex-conjugate partner) or normal.
///
/// Fails with [`Error::AmbiguousClassification`] when a second, unrelated mode
/// decays within `1e-8` of the Zeno candidate.
pub fn classify_modes<T: Real>(modes: &[SpectralMode<T>], _model: &RipModel<T>) -> Result<Vec<SpectralMode<T>>> {
    let tol = zero_tolerance(modes);
    let mut out: Vec<SpectralMode<T>> = modes.to_vec();
    for m in &mut out {
        m.classification = Some(if m.lambda.abs() <= tol && m.omega_e.abs() <= tol {
            ModeClass::Stationary
        } else {
            ModeClass::Normal
        });
    }

    let zeno = out
        .iter()
        .enumerate()
        .filter(|(_, m)| m.lambda > tol)
        .min_by(|(_, a), (_, b)| a.lambda.partial_cmp(&b.lambda).unwrap())
        .map(|(i, _)| i);
    let Some(z) = zeno else {
        return Ok(out);
    };
    let (lz, wz) = (out[z].lambda, out[z].omega_e);
    let pair_tol = T::tol(1e-8) * out[z].eigenvalue().norm().max(T::one());
    let partner = if wz.abs() > tol {
        out.iter().enumerate().position(|(i, m)| {
            i != z && (m.lambda - lz).abs() <= pair_tol && (m.omega_e + wz).abs() <= pair_tol
        })
    } else {
        None
    };

    let gap = T::tol(1e-8);
    for (i, m) in out.iter().enumerate() {
        if i == z || Some(i) == partner || m.lambda <= tol {
            continue;
        }
        if (m.lambda - lz).abs() < gap {
            return Err(Error::AmbiguousClassification(
                lz.to_f64().unwrap_or(f64::NAN),
                m.lambda.to_f64().unwrap_or(f64::NAN),
            ));
        }
    }
    out[z].classification = Some(ModeClass::Zeno);
    if let Some(p) = partner {
        out[p].classification = Some(ModeClass::Zeno);
    }
    Ok(out)
}

/// Zeno decay rate from classified modes.
pub fn zeno_rate<T: Real>(modes: &[SpectralMode<T>]) -> Option<T> {
    modes
        .iter()
        .find(|m| m.classification == Some(ModeClass::Zeno))
        .map(|m| m.lambda)
}

/// Spectra across a grid of total measurement rates.
#[derive(Debug, Clone)]
pub struct ZenoScan<T> {
    pub k_values: Vec<T>,
    /// Classified when unambiguous, unclassified otherwise.
    pub modes_per_k: Vec<Vec<SpectralMode<T>>>,
    /// `None` where no strictly decaying mode exists or classification is ambiguous.
    pub lambda_qz_per_k: Vec<Option<T>>,
    pub ambiguous: Vec<bool>,
    pub min_nonzero_lambda_per_k: Vec<T>,
}

/// Scans `k` (keeping the model's singlet/triplet split) in parallel; results
/// are independent of scheduling.
pub fn zeno_scan<T: Real>(model: &RipModel<T>, variant: EquationVariant, k_grid: &[T]) -> Result<ZenoScan<T>> {
    if k_grid.iter().any(|&k| !(k >= T::zero()) || !k.is_finite()) {
        return Err(Error::InvalidParameter { name: "k_grid", reason: "rates must be finite and non-negative".into() });
    }
    if k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter { name: "k_grid", reason: "must be strictly increasing".into() });
    }
    let points: Vec<_> = k_grid
        .par_iter()
        .map(|&k| -> Result<_> {
            let m = model.with_total_rate(k)?;
            let modes = spectrum(&build_superoperator(&m, variant))?;
            let min_nz = min_nonzero_decay_rate(&modes);
            Ok(match classify_modes(&modes, &m) {
                Ok(classified) => {
                    let lqz = zeno_rate(&classified);
                    (classified, lqz, false, min_nz)
                }
                Err(Error::AmbiguousClassification(..)) => (modes, None, true, min_nz),
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut scan = ZenoScan {
        k_values: k_grid.to_vec(),
        modes_per_k: Vec::with_capacity(points.len()),
        lambda_qz_per_k: Vec::with_capacity(points.len()),
        ambiguous: Vec::with_capacity(points.len()),
        min_nonzero_lambda_per_k: Vec::with_capacity(points.len()),
    };
    for (modes, lqz, amb, mnz) in points {
        scan.modes_per_k.push(modes);
        scan.lambda_qz_per_k.push(lqz);
        scan.ambiguous.push(amb);
        scan.min_nonzero_lambda_per_k.push(mnz);
    }
    Ok(scan)
}

/// Zeno time of the singlet state and the heuristic rate built from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZenoTime<T> {
    /// `τ_Z⁻¹ = √(⟨S|H²|S⟩ − ⟨S|H|S⟩²)`.
    pub inverse_zeno_time: T,
    /// `τ/τ_Z²` with `τ = 1/k`; `None` when `k = 0`.
    pub heuristic_rate: Option<T>,
}

pub fn zeno_time<T: Real>(model: &RipModel<T>) -> Result<ZenoTime<T>> {
    let s = model.singlet_state().ok_or(Error::InvalidParameter {
        name: "model",
        reason: "singlet projector must have rank one".into(),
    })?;
    let h = model.hamiltonian();
    let hs = h.mul_vec(&s);
    let mean: T = s.iter().zip(&hs).map(|(a, b)| (a.conj() * b).re).sum();
    let second: T = hs.iter().map(|x| x.norm_sqr()).sum();
    let inv = (second - mean * mean).max(T::zero()).sqrt();
    let k = model.k();
    let heuristic_rate = (k > T::zero()).then(|| inv * inv / k);
    Ok(ZenoTime {
        inverse_zeno_time: inv,
        heuristic_rate,
    })
}

/// `e^{Aτ}` by scaling and squaring.
pub fn matrix_exponential<T: Real>(a: &Superoperator<T>, tau: T) -> Result<CMatrix<T>> {
    if !(tau >= T::zero()) {
        return Err(Error::InvalidParameter { name: "tau", reason: format!("must be non-negative, got {tau}") });
    }
    expm(&a.matrix().scale_real(tau))
}
