//! Radical-ion-pair spin dynamics under continuous singlet-triplet measurement.
//!
//! The crate builds toy and multi-spin radical-pair models, propagates their
//! density matrices under two competing master equations, diagonalises the
//! corresponding Liouvillians to expose quantum-Zeno modes, and unravels the
//! measurement equation into quantum-jump trajectories.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.
//!
//! ```
//! use rip_zeno::{build_toy_model, build_superoperator, spectrum, min_nonzero_decay_rate};
//! use rip_zeno::{EquationVariant, ToyModelParams};
//!
//! let model = build_toy_model(&ToyModelParams::new(1.0, 1.0, 100.0)).unwrap();
//! let modes = spectrum(&build_superoperator(&model, EquationVariant::Kominis)).unwrap();
//! let slowest: f64 = min_nonzero_decay_rate(&modes);
//! assert!((slowest - 0.04).abs() < 1e-4);
//! ```

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod scalar;
pub mod spectra;
pub mod spin;
pub mod trajectories;

pub use dynamics::{
    dissipator, propagate, recombination_yields, rhs, rhs_haberkorn, rhs_kominis, singlet_probability, stable_step,
    DensityMatrix, EquationVariant, PropagateOptions, PropagationResult,
};
pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use models::{
    build_multispin_model, build_toy_model, ModelKind, MultispinModelParams, RipModel, ToyModelParams,
};
pub use scalar::{Real, C};
pub use spectra::{
    build_superoperator, classify_modes, matrix_exponential, min_nonzero_decay_rate, spectrum, zeno_rate, zeno_scan,
    zeno_time, ModeClass, SpectralMode, Superoperator, ZenoScan, ZenoTime,
};
pub use spin::{embed, kron, singlet_projector, spin_dot, spin_half_operators, triplet_projector, HilbertSpace, Operator};
pub use trajectories::{
    check_dt_contract, correlation_analytic, correlation_mc, ensemble_average, jump_step, simulate_ensemble_member,
    simulate_trajectory, stationary_state, CorrelationAnalytic, CorrelationEstimate, CorrelationOptions,
    EnsembleResult, JumpStepper, StateVector, StepScheme, TrajectoryOptions, TrajectoryRecord,
};

pub type CMatrix64 = CMatrix<f64>;
pub type RipModel64 = RipModel<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type Superoperator64 = Superoperator<f64>;
pub type SpectralMode64 = SpectralMode<f64>;
pub type StateVector64 = StateVector<f64>;
pub type PropagationResult64 = PropagationResult<f64>;
pub type EnsembleResult64 = EnsembleResult<f64>;
