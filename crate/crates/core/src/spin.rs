//! Spin operators on composite Hilbert spaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{re, Real, C};

/// Tensor-product space with ordered subsystem dimensions, e.g. `[2, 2, 2]`
/// for two electrons and one spin-1/2 nucleus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    subsystem_dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(subsystem_dims: Vec<usize>) -> Result<Self> {
        if subsystem_dims.is_empty() {
            return Err(Error::InvalidSubsystem(0));
        }
        if let Some(&bad) = subsystem_dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSubsystem(bad));
        }
        Ok(Self { subsystem_dims })
    }

    /// A single two-level system.
    pub fn qubit() -> Self {
        Self { subsystem_dims: vec![2] }
    }

    pub fn subsystem_dims(&self) -> &[usize] {
        &self.subsystem_dims
    }

    pub fn total_dim(&self) -> usize {
        self.subsystem_dims.iter().product()
    }
}

/// A square matrix bound to the space it acts on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operator<T> {
    space: HilbertSpace,
    matrix: CMatrix<T>,
}

impl<T: Real> Operator<T> {
    pub fn new(space: HilbertSpace, matrix: CMatrix<T>) -> Result<Self> {
        matrix.ensure_square(space.total_dim())?;
        Ok(Self { space, matrix })
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        Self {
            matrix: CMatrix::identity(space.total_dim()),
            space: space.clone(),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Kronecker product of two square matrices.
pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kron(b)
}

/// Spin-1/2 operators `(sx, sy, sz)`, each half the corresponding Pauli matrix.
pub fn spin_half_operators<T: Real>() -> [CMatrix<T>; 3] {
    let h = T::lit(0.5);
    let z = T::zero();
    let sx = CMatrix::from_real(2, 2, &[z, h, h, z]);
    let sy = CMatrix::from_vec(2, 2, vec![re(z), C::new(z, -h), C::new(z, h), re(z)]);
    let sz = CMatrix::from_real(2, 2, &[h, z, z, -h]);
    [sx, sy, sz]
}

/// Places `op` on subsystem `slot`, identity elsewhere.
pub fn embed<T: Real>(op: &CMatrix<T>, slot: usize, space: &HilbertSpace) -> Result<CMatrix<T>> {
    let dims = space.subsystem_dims();
    if slot >= dims.len() {
        return Err(Error::SlotOutOfRange { slot, len: dims.len() });
    }
    op.ensure_square(dims[slot])?;
    let mut out = CMatrix::identity(1);
    for (i, &d) in dims.iter().enumerate() {
        out = if i == slot {
            out.kron(op)
        } else {
            out.kron(&CMatrix::identity(d))
        };
    }
    Ok(out)
}

fn check_electron_slots(space: &HilbertSpace, (i, j): (usize, usize)) -> Result<()> {
    let dims = space.subsystem_dims();
    let spin_half = |s: usize| dims.get(s) == Some(&2);
    if i == j || !spin_half(i) || !spin_half(j) {
        return Err(Error::InvalidElectronSlots(i, j));
    }
    Ok(())
}

/// `s_i · s_j` on the full space.
pub fn spin_dot<T: Real>(space: &HilbertSpace, (i, j): (usize, usize)) -> Result<CMatrix<T>> {
    let s = spin_half_operators::<T>();
    let mut out = CMatrix::zeros(space.total_dim(), space.total_dim());
    for comp in &s {
        let a = embed(comp, i, space)?;
        let b = embed(comp, j, space)?;
        out += &(&a * &b);
    }
    Ok(out)
}

/// Singlet projector `Q_S = 1/4 − s₁·s₂` on the given electron slots.
pub fn singlet_projector<T: Real>(space: &HilbertSpace, slots: (usize, usize)) -> Result<Operator<T>> {
    check_electron_slots(space, slots)?;
    let mut q = CMatrix::identity(space.total_dim()).scale_real(T::lit(0.25));
    q -= &spin_dot(space, slots)?;
    Operator::new(space.clone(), q)
}

/// Triplet projector `Q_T = 1 − Q_S`.
pub fn triplet_projector<T: Real>(space: &HilbertSpace, slots: (usize, usize)) -> Result<Operator<T>> {
    let qs = singlet_projector::<T>(space, slots)?;
    let qt = &CMatrix::identity(space.total_dim()) - qs.matrix();
    Operator::new(space.clone(), qt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues;
    use proptest::prelude::*;

    fn pauli(k: usize) -> CMatrix<f64> {
        spin_half_operators::<f64>()[k].scale_real(2.0)
    }

    fn basis(n: usize, k: usize) -> Vec<C<f64>> {
        let mut v = vec![re(0.0); n];
        v[k] = re(1.0);
        v
    }

    #[test]
    fn hilbert_space_invariants() {
        let s = HilbertSpace::new(vec![2, 2, 2]).unwrap();
        assert_eq!(s.total_dim(), 8);
        assert_eq!(HilbertSpace::new(vec![2, 1]), Err(Error::InvalidSubsystem(1)));
        assert!(HilbertSpace::new(vec![]).is_err());
    }

    #[test]
    fn spin_half_identities() {
        let [sx, sy, sz] = spin_half_operators::<f64>();
        assert_eq!(sz, CMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, -0.5]));
        let casimir = &(&(&sx * &sx) + &(&sy * &sy)) + &(&sz * &sz);
        assert!((&casimir - &CMatrix::identity(2).scale_real(0.75)).max_abs() < 1e-15);
        let i = C::new(0.0, 1.0);
        assert!((&sx.commutator(&sy) - &sz.scale(i)).max_abs() < 1e-15);
        assert!((&sy.commutator(&sz) - &sx.scale(i)).max_abs() < 1e-15);
        assert!((&sz.commutator(&sx) - &sy.scale(i)).max_abs() < 1e-15);
    }

    #[test]
    fn embed_examples() {
        let two = HilbertSpace::new(vec![2, 2]).unwrap();
        let m = embed(&pauli(2), 0, &two).unwrap();
        assert_eq!(m, kron(&pauli(2), &CMatrix::identity(2)));
        assert_eq!(embed(&CMatrix::<f64>::identity(2), 1, &two).unwrap(), CMatrix::identity(4));

        let three = HilbertSpace::new(vec![2, 2, 2]).unwrap();
        let m = embed(&pauli(0), 2, &three).unwrap();
        assert_eq!(m.mul_vec(&basis(8, 0)), basis(8, 1));
    }

    #[test]
    fn embed_errors() {
        let two = HilbertSpace::new(vec![2, 2]).unwrap();
        assert!(matches!(embed(&pauli(0), 2, &two), Err(Error::SlotOutOfRange { .. })));
        let three_level = CMatrix::<f64>::identity(3);
        assert!(matches!(embed(&three_level, 0, &two), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn two_spin_projectors() {
        let space = HilbertSpace::new(vec![2, 2]).unwrap();
        let qs = singlet_projector::<f64>(&space, (0, 1)).unwrap();
        let qt = triplet_projector::<f64>(&space, (0, 1)).unwrap();
        let (qs, qt) = (qs.matrix(), qt.matrix());
        assert!((qs.trace().re - 1.0).abs() < 1e-12);
        assert!((qt.trace().re - 3.0).abs() < 1e-12);
        assert!((&(qs * qs) - qs).max_abs() < 1e-12);
        assert!((&(qs + qt) - &CMatrix::identity(4)).max_abs() < 1e-15);
        assert!((qs * qt).max_abs() < 1e-12);
        // Singlet (|↑↓⟩ − |↓↑⟩)/√2 is the image.
        let h = 0.5f64;
        assert!((qs[(1, 1)].re - h).abs() < 1e-15 && (qs[(1, 2)].re + h).abs() < 1e-15);
    }

    #[test]
    fn singlet_rank_doubles_with_nucleus() {
        let space = HilbertSpace::new(vec![2, 2, 2]).unwrap();
        let qs = singlet_projector::<f64>(&space, (0, 1)).unwrap();
        assert!((qs.matrix().trace().re - 2.0).abs() < 1e-12);
        let mut ev: Vec<f64> = eigenvalues(qs.matrix()).unwrap().iter().map(|v| v.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, v) in ev.iter().enumerate() {
            let want = if k >= 6 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "eigenvalue {k} = {v}");
        }
    }

    #[test]
    fn invalid_slots_rejected() {
        let space = HilbertSpace::new(vec![2, 3]).unwrap();
        assert_eq!(
            singlet_projector::<f64>(&space, (0, 1)).unwrap_err(),
            Error::InvalidElectronSlots(0, 1)
        );
        let space = HilbertSpace::new(vec![2, 2]).unwrap();
        assert!(singlet_projector::<f64>(&space, (1, 1)).is_err());
        assert!(triplet_projector::<f64>(&space, (0, 5)).is_err());
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = CMatrix<f64>> {
        proptest::collection::vec((-3i8..=3, -3i8..=3), n * n).prop_map(move |v| {
            CMatrix::from_vec(n, n, v.into_iter().map(|(a, b)| C::new(a as f64, b as f64)).collect())
        })
    }

    proptest! {
        #[test]
        fn kron_is_associative(a in arb_matrix(2), b in arb_matrix(2), c in arb_matrix(2)) {
            prop_assert_eq!(a.kron(&b).kron(&c), a.kron(&b.kron(&c)));
        }

        #[test]
        fn embeddings_on_distinct_slots_commute(a in arb_matrix(2), b in arb_matrix(2), s in 0usize..3, t in 0usize..3) {
            prop_assume!(s != t);
            let space = HilbertSpace::new(vec![2, 2, 2]).unwrap();
            let ea = embed(&a, s, &space).unwrap();
            let eb = embed(&b, t, &space).unwrap();
            prop_assert_eq!(&ea * &eb, &eb * &ea);
        }

        #[test]
        fn projectors_are_orthogonal_idempotents(i in 0usize..3, j in 0usize..3) {
            prop_assume!(i != j);
            let space = HilbertSpace::new(vec![2, 2, 2]).unwrap();
            for p in [singlet_projector::<f64>(&space, (i, j)).unwrap(), triplet_projector(&space, (i, j)).unwrap()] {
                let m = p.matrix();
                prop_assert!((&(m * m) - m).max_abs() < 1e-12);
                prop_assert!(m.hermiticity_defect() < 1e-12);
            }
        }
    }
}
