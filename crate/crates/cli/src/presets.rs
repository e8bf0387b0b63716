//! Built-in run configurations.

use rip_zeno::{EquationVariant, MultispinModelParams, StepScheme, ToyModelParams};

use crate::config::{
    CompareConfig, ConfigError, CorrelationConfig, Grid, InitialState, LogGrid, ModelConfig, OutputConfig,
    PropagateConfig, RunConfig, SpectrumConfig, TrajectoriesConfig,
};
use crate::Command;

pub const NAMES: [&str; 5] = ["fig2ab", "fig2c", "jumps", "correlation", "compare"];

fn toy(k: f64) -> ModelConfig {
    ModelConfig::Toy(ToyModelParams::new(1.0, 1.0, k))
}

fn base(model: ModelConfig) -> RunConfig {
    RunConfig {
        variant: EquationVariant::Kominis,
        seed: None,
        model,
        spectrum: None,
        propagate: None,
        trajectories: None,
        correlation: None,
        compare: None,
        output: OutputConfig::default(),
    }
}

/// The preset and the subcommand it belongs to.
pub fn preset(name: &str) -> Result<(Command, RunConfig), ConfigError> {
    let out = match name {
        // Decay rates and frequencies against k for ω = Ω = 1.
        "fig2ab" => {
            let mut c = base(toy(1.0));
            c.spectrum = Some(SpectrumConfig { k_grid: Grid::Log(LogGrid { min: 0.1, max: 1000.0, points: 81 }) });
            (Command::Spectrum, c)
        }
        // Singlet population from ρ0 = Q_S at three measurement rates.
        "fig2c" => {
            let mut c = base(toy(1.0));
            c.propagate = Some(PropagateConfig {
                k_values: Some(vec![0.1, 1.0, 20.0]),
                t_max: 200.0,
                n_out: 4001,
                dt_hint: 0.01,
                initial: InitialState::Singlet,
            });
            (Command::Propagate, c)
        }
        "jumps" => {
            let mut c = base(toy(1.0));
            c.seed = Some(1);
            c.trajectories = Some(TrajectoriesConfig {
                t_max: 10.0,
                dt: 5e-3,
                n_out: 101,
                n_traj: 10_000,
                scheme: StepScheme::Midpoint,
                initial: InitialState::Singlet,
                dump: 0,
            });
            (Command::Trajectories, c)
        }
        "correlation" => {
            let mut c = base(toy(1.0));
            c.seed = Some(1);
            c.correlation = Some(CorrelationConfig {
                tau_grid: Grid::Values((0..=20).map(|i| 0.25 * i as f64).collect()),
                t_burn: 20.0,
                t_window: 20.0,
                dt: 5e-3,
                n_traj: 2000,
                scheme: StepScheme::Midpoint,
                initial: InitialState::Triplet,
            });
            (Command::Correlation, c)
        }
        "compare" => {
            let mut c = base(ModelConfig::Multispin(MultispinModelParams::new(1.0, 0.0, 1.0)));
            c.compare = Some(CompareConfig {
                k_grid: Grid::Values((0..=10).map(|i| 10.0 * i as f64).collect()),
                fit_range: [10.0, 100.0],
            });
            (Command::Compare, c)
        }
        other => {
            return Err(ConfigError::field(
                "--preset",
                format!("unknown preset `{other}` (available: {})", NAMES.join(", ")),
            ))
        }
    };
    Ok(out)
}
