use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("subsystem dimension {0} is invalid (must be at least 2)")]
    InvalidSubsystem(usize),

    #[error("slot {slot} out of range for a space with {len} subsystems")]
    SlotOutOfRange { slot: usize, len: usize },

    #[error("invalid electron slots ({0}, {1}): slots must differ and both be spin-1/2")]
    InvalidElectronSlots(usize, usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("singular matrix in linear solve")]
    Singular,

    #[error("matrix exponential overflowed (scaled norm {norm:e})")]
    Overflow { norm: f64 },

    #[error("eigenpair residual {residual:e} exceeds bound {bound:e}")]
    Residual { residual: f64, bound: f64 },

    #[error("ambiguous Zeno-mode classification: candidate rates {0:e} and {1:e} are indistinguishable")]
    AmbiguousClassification(f64, f64),

    #[error("step-halving check failed: estimated error {error:e} exceeds {bound:e}; reduce dt_hint")]
    StepHalving { error: f64, bound: f64 },

    #[error("invariant `{what}` violated at t = {t}: deviation {deviation:e}")]
    Invariant { what: &'static str, t: f64, deviation: f64 },

    #[error("time step {dt:e} violates the trajectory contract (dt must be <= {limit:e})")]
    DtContract { dt: f64, limit: f64 },

    #[error("attempted quantum jump from a state with vanishing singlet weight; dt too coarse")]
    ZeroJumpWeight,

    #[error("yields are only defined for the haberkorn variant")]
    YieldsUndefined,

    #[error("burn-in too short: recombination current drifts by {drift:e} (> {bound:e})")]
    BurnIn { drift: f64, bound: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
