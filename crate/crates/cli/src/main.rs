//! `rip-zeno`: spectra, propagation, quantum-jump ensembles and current
//! correlations for radical-ion-pair models.

mod commands;
mod config;
mod output;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::RunError;
use config::{ConfigError, Format, RunConfig};
use output::{write_manifest, ManifestInput, Outputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Liouvillian decay rates and frequencies over a k grid.
    Spectrum,
    /// Density-matrix propagation: singlet population, trace and purity.
    Propagate,
    /// Quantum-jump ensemble against the master equation.
    Trajectories,
    /// Recombination-current correlation, analytic and Monte Carlo.
    Correlation,
    /// Slowest decay rate of both master equations on the multispin model.
    Compare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Propagate => "propagate",
            Self::Trajectories => "trajectories",
            Self::Correlation => "correlation",
            Self::Compare => "compare",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rip-zeno", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in configuration (fig2ab, fig2c, jumps, correlation, compare).
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Main output file; siblings and the manifest are written next to it.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Master seed for stochastic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => {
            let (cmd, cfg) = presets::preset(name)?;
            if cmd != cli.command {
                return Err(ConfigError::field(
                    "--preset",
                    format!("preset `{name}` belongs to `{}`, not `{}`", cmd.name(), cli.command.name()),
                ));
            }
            cfg
        }
        (None, None) => return Err(ConfigError::general("either --config or --preset is required")),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(format) = cli.format {
        cfg.output.format = format;
    }
    if let Some(out) = &cli.out {
        cfg.output.path = Some(out.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), RunError> {
    let cfg = resolve(cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError::field("--threads", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError::field("--threads", e.to_string()))?;
    }
    let format = cfg.output.format;
    let out = cfg
        .output
        .path
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.{}", cli.command.name(), format.extension())));

    let start = Instant::now();
    let mut files = Outputs::default();
    let derived = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &out, format, &mut files),
        Command::Propagate => commands::propagate_cmd(&cfg, &out, format, &mut files),
        Command::Trajectories => commands::trajectories(&cfg, &out, format, &mut files),
        Command::Correlation => commands::correlation(&cfg, &out, format, &mut files),
        Command::Compare => commands::compare(&cfg, &out, format, &mut files),
    }?;
    let manifest = write_manifest(
        &out,
        ManifestInput {
            command: cli.command.name(),
            preset: cli.preset.as_deref(),
            config: &cfg,
            threads: rayon::current_num_threads(),
            seconds: start.elapsed().as_secs_f64(),
            derived,
            outputs: &files.files,
        },
    )?;
    for f in &files.files {
        println!("{}", f.path);
    }
    println!("{}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
