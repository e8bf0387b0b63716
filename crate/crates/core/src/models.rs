//! Radical-ion-pair models: the two-level singlet/triplet toy model and the
//! minimal realistic pair (two electrons plus one spin-1/2 nucleus).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{re, Real, C};
use crate::spin::{embed, singlet_projector, spin_half_operators, triplet_projector, HilbertSpace, Operator};

/// Parameters of the two-level model `H = ω|S⟩⟨S| + Ω(|S⟩⟨T| + |T⟩⟨S|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ToyModelParams<T> {
    /// Singlet energy ω.
    pub singlet_energy: T,
    /// Singlet–triplet mixing amplitude Ω.
    pub mixing: T,
    /// Singlet recombination rate.
    pub k_s: T,
    /// Triplet recombination rate.
    #[serde(default = "zero")]
    pub k_t: T,
}

/// Parameters of `H = a·s₁·I + b·(s₁z + s₂z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct MultispinModelParams<T> {
    /// Isotropic hyperfine coupling `a` of electron 1 to the nucleus.
    pub hyperfine: T,
    /// Electron Zeeman frequency `b`.
    #[serde(default = "zero")]
    pub zeeman: T,
    pub k_s: T,
    #[serde(default = "zero")]
    pub k_t: T,
}

fn zero<T: Real>() -> T {
    T::zero()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Toy,
    Multispin,
}

/// A ready-to-simulate model: Hamiltonian, channel projectors and rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RipModel<T> {
    kind: ModelKind,
    hamiltonian: Operator<T>,
    q_s: Operator<T>,
    q_t: Operator<T>,
    k_s: T,
    k_t: T,
}

fn check_nonneg<T: Real>(name: &'static str, x: T) -> Result<()> {
    if !x.is_finite() || x < T::zero() {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and non-negative, got {x}"),
        });
    }
    Ok(())
}

fn check_finite<T: Real>(name: &'static str, x: T) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {x}"),
        });
    }
    Ok(())
}

impl<T: Real> ToyModelParams<T> {
    pub fn new(singlet_energy: T, mixing: T, k_s: T) -> Self {
        Self {
            singlet_energy,
            mixing,
            k_s,
            k_t: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("singlet_energy", self.singlet_energy)?;
        check_nonneg("mixing", self.mixing)?;
        check_nonneg("k_s", self.k_s)?;
        check_nonneg("k_t", self.k_t)
    }
}

impl<T: Real> MultispinModelParams<T> {
    pub fn new(hyperfine: T, zeeman: T, k_s: T) -> Self {
        Self {
            hyperfine,
            zeeman,
            k_s,
            k_t: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("hyperfine", self.hyperfine)?;
        check_finite("zeeman", self.zeeman)?;
        check_nonneg("k_s", self.k_s)?;
        check_nonneg("k_t", self.k_t)
    }
}

/// Two-level model in the basis `(|S⟩, |T⟩)`.
pub fn build_toy_model<T: Real>(p: &ToyModelParams<T>) -> Result<RipModel<T>> {
    p.validate()?;
    let space = HilbertSpace::qubit();
    let (w, m, z) = (p.singlet_energy, p.mixing, T::zero());
    let h = CMatrix::from_real(2, 2, &[w, m, m, z]);
    let q_s = CMatrix::from_real(2, 2, &[T::one(), z, z, z]);
    let q_t = CMatrix::from_real(2, 2, &[z, z, z, T::one()]);
    Ok(RipModel {
        kind: ModelKind::Toy,
        hamiltonian: Operator::new(space.clone(), h)?,
        q_s: Operator::new(space.clone(), q_s)?,
        q_t: Operator::new(space, q_t)?,
        k_s: p.k_s,
        k_t: p.k_t,
    })
}

/// Electron 1, electron 2, nucleus on slots 0, 1, 2.
pub fn build_multispin_model<T: Real>(p: &MultispinModelParams<T>) -> Result<RipModel<T>> {
    p.validate()?;
    let space = HilbertSpace::new(vec![2, 2, 2])?;
    let s = spin_half_operators::<T>();
    let d = space.total_dim();
    let mut h = CMatrix::zeros(d, d);
    for comp in &s {
        let e1 = embed(comp, 0, &space)?;
        let nuc = embed(comp, 2, &space)?;
        h.axpy(re(p.hyperfine), &(&e1 * &nuc));
    }
    let sz_total = &embed(&s[2], 0, &space)? + &embed(&s[2], 1, &space)?;
    h.axpy(re(p.zeeman), &sz_total);
    Ok(RipModel {
        kind: ModelKind::Multispin,
        hamiltonian: Operator::new(space.clone(), h)?,
        q_s: singlet_projector(&space, (0, 1))?,
        q_t: triplet_projector(&space, (0, 1))?,
        k_s: p.k_s,
        k_t: p.k_t,
    })
}

impl<T: Real> RipModel<T> {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn space(&self) -> &HilbertSpace {
        self.hamiltonian.space()
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &CMatrix<T> {
        self.hamiltonian.matrix()
    }

    pub fn q_s(&self) -> &CMatrix<T> {
        self.q_s.matrix()
    }

    pub fn q_t(&self) -> &CMatrix<T> {
        self.q_t.matrix()
    }

    pub fn k_s(&self) -> T {
        self.k_s
    }

    pub fn k_t(&self) -> T {
        self.k_t
    }

    /// Total measurement rate `k = k_S + k_T`.
    pub fn k(&self) -> T {
        self.k_s + self.k_t
    }

    pub fn with_rates(&self, k_s: T, k_t: T) -> Result<Self> {
        check_nonneg("k_s", k_s)?;
        check_nonneg("k_t", k_t)?;
        Ok(Self {
            k_s,
            k_t,
            ..self.clone()
        })
    }

    /// Rescales the rates to total `k`, keeping the triplet fraction `k_T/k`
    /// (all singlet when both rates are zero).
    pub fn with_total_rate(&self, k: T) -> Result<Self> {
        let total = self.k();
        let frac = if total > T::zero() { self.k_t / total } else { T::zero() };
        self.with_rates(k * (T::one() - frac), k * frac)
    }

    /// `|S⟩` when the singlet projector has rank one (the toy model).
    pub fn singlet_state(&self) -> Option<Vec<C<T>>> {
        let q = self.q_s();
        let rank = q.trace().re.round().to_usize()?;
        if rank != 1 {
            return None;
        }
        let col = (0..q.ncols())
            .max_by(|&a, &b| q[(a, a)].re.partial_cmp(&q[(b, b)].re).unwrap())?;
        let v = q.column(col);
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt();
        Some(v.into_iter().map(|x| x / norm).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues;

    fn toy(w: f64, m: f64) -> RipModel<f64> {
        build_toy_model(&ToyModelParams::new(w, m, 1.0)).unwrap()
    }

    #[test]
    fn toy_hamiltonian_matches_matrix_form() {
        let m = toy(1.0, 1.0);
        assert_eq!(*m.hamiltonian(), CMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 0.0]));
        assert_eq!(toy(0.0, 0.0).hamiltonian().max_abs(), 0.0);
    }

    #[test]
    fn toy_eigenvalues_are_golden() {
        let mut ev: Vec<f64> = eigenvalues(toy(1.0, 1.0).hamiltonian())
            .unwrap()
            .iter()
            .map(|v| v.re)
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let s5 = 5f64.sqrt();
        assert!((ev[0] - (1.0 - s5) / 2.0).abs() < 1e-14);
        assert!((ev[1] - (1.0 + s5) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn unmixed_toy_commutes_with_projector() {
        let m = toy(3.0, 0.0);
        assert_eq!(m.hamiltonian().commutator(m.q_s()).max_abs(), 0.0);
    }

    #[test]
    fn negative_rates_rejected() {
        let mut p = ToyModelParams::new(1.0, 1.0, -1.0);
        assert!(matches!(build_toy_model(&p), Err(Error::InvalidParameter { name: "k_s", .. })));
        p.k_s = 1.0;
        p.k_t = -0.1;
        assert!(build_toy_model(&p).is_err());
        p.k_t = 0.0;
        p.mixing = -1.0;
        assert!(build_toy_model(&p).is_err());
        let q = MultispinModelParams { hyperfine: 1.0, zeeman: 0.0, k_s: 1.0, k_t: -2.0 };
        assert!(build_multispin_model(&q).is_err());
    }

    #[test]
    fn multispin_hamiltonian_properties() {
        let m = build_multispin_model(&MultispinModelParams::new(1.0, 0.0, 1.0)).unwrap();
        assert_eq!(m.dim(), 8);
        assert!(m.hamiltonian().trace().norm() < 1e-14);
        assert!(m.hamiltonian().hermiticity_defect() < 1e-12);
        assert!(m.hamiltonian().commutator(m.q_s()).max_abs() > 0.1);

        let zero = build_multispin_model(&MultispinModelParams::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(zero.hamiltonian().max_abs(), 0.0);
    }

    #[test]
    fn multispin_conserves_total_jz() {
        let m = build_multispin_model(&MultispinModelParams::new(1.3, 0.7, 1.0)).unwrap();
        let sz = &spin_half_operators::<f64>()[2];
        let space = m.space().clone();
        let mut jz = CMatrix::zeros(8, 8);
        for slot in 0..3 {
            jz += &embed(sz, slot, &space).unwrap();
        }
        assert!(m.hamiltonian().commutator(&jz).max_abs() < 1e-12);
    }

    #[test]
    fn projectors_partition_identity() {
        for m in [
            toy(1.0, 1.0),
            build_multispin_model(&MultispinModelParams::new(1.0, 0.5, 2.0)).unwrap(),
        ] {
            let sum = m.q_s() + m.q_t();
            assert!((&sum - &CMatrix::identity(m.dim())).max_abs() < 1e-12);
            assert!((m.q_s() * m.q_t()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn rate_rescaling_keeps_split() {
        let p = ToyModelParams { singlet_energy: 1.0, mixing: 1.0, k_s: 3.0, k_t: 1.0 };
        let m = build_toy_model(&p).unwrap().with_total_rate(8.0).unwrap();
        assert_eq!((m.k_s(), m.k_t(), m.k()), (6.0, 2.0, 8.0));
        let m0 = build_toy_model(&ToyModelParams::new(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(m0.with_total_rate(5.0).unwrap().k_s(), 5.0);
    }

    #[test]
    fn singlet_state_only_for_rank_one() {
        assert_eq!(toy(1.0, 1.0).singlet_state().unwrap(), vec![re(1.0), re(0.0)]);
        let m = build_multispin_model(&MultispinModelParams::new(1.0, 0.0, 1.0)).unwrap();
        assert!(m.singlet_state().is_none());
    }
}
