//! The five subcommands. Each is a pure function of its configuration and seed.

use std::fmt;
use std::io;
use std::path::Path;

use rip_zeno::analysis::{dominant_angular_frequency, fit_through_origin, is_nonincreasing};
use rip_zeno::{
    check_dt_contract, correlation_analytic, correlation_mc, ensemble_average, propagate, simulate_ensemble_member,
    zeno_scan, CorrelationOptions, DensityMatrix, EquationVariant, ModelKind, PropagateOptions, RipModel64,
    StateVector, TrajectoryOptions, C,
};
use serde_json::{json, Map, Value};

use crate::config::{require_positive, ConfigError, Format, InitialState, ModelConfig, RunConfig};
use crate::output::{sibling, Cell, Outputs, Table};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(rip_zeno::Error),
    Io(io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "config error: {e}"),
            Self::Numerical(e) => write!(f, "numerical contract failure: {e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<rip_zeno::Error> for RunError {
    fn from(e: rip_zeno::Error) -> Self {
        use rip_zeno::Error as E;
        match e {
            E::DtContract { .. }
            | E::InvalidParameter { .. }
            | E::DimensionMismatch { .. }
            | E::InvalidSubsystem(_)
            | E::SlotOutOfRange { .. }
            | E::InvalidElectronSlots(..)
            | E::YieldsUndefined => Self::Config(ConfigError::general(e.to_string())),
            _ => Self::Numerical(e),
        }
    }
}

pub type Derived = Map<String, Value>;

fn section<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T, ConfigError> {
    block.as_ref().ok_or_else(|| ConfigError::field(name, "section required for this command"))
}

/// Density matrix for `initial`.
fn initial_density(model: &RipModel64, initial: InitialState) -> Result<DensityMatrix<f64>, RunError> {
    Ok(match initial {
        InitialState::Singlet => DensityMatrix::from_projector(model.space().clone(), model.q_s())?,
        InitialState::Triplet => DensityMatrix::from_projector(model.space().clone(), model.q_t())?,
        InitialState::Mixed => DensityMatrix::maximally_mixed(model.space().clone()),
    })
}

/// Pure state for `initial`: the projector applied to the basis vector with the
/// largest weight in it (`|S⟩`, `|T⟩` for the toy model).
fn initial_pure(model: &RipModel64, initial: InitialState, field: &str) -> Result<StateVector<f64>, RunError> {
    let p = match initial {
        InitialState::Singlet => model.q_s(),
        InitialState::Triplet => model.q_t(),
        InitialState::Mixed => return Err(ConfigError::field(field, "trajectories need a pure initial state").into()),
    };
    let d = model.dim();
    let j = (0..d).fold(0, |best, i| if p[(i, i)].re > p[(best, best)].re { i } else { best });
    let amps: Vec<C<f64>> = (0..d).map(|i| p[(i, j)]).collect();
    Ok(StateVector::new(model.space().clone(), amps)?)
}

pub fn spectrum(cfg: &RunConfig, out: &Path, format: Format, files: &mut Outputs) -> Result<Derived, RunError> {
    let block = section(&cfg.spectrum, "spectrum")?;
    let model = cfg.model.build()?;
    let grid = block.k_grid.values("spectrum.k_grid")?;
    let scan = zeno_scan(&model, cfg.variant, &grid)?;

    let mut t = Table::new(&["k", "mode", "lambda", "omega_e", "class"]);
    for (i, &k) in scan.k_values.iter().enumerate() {
        for (j, m) in scan.modes_per_k[i].iter().enumerate() {
            let class = if scan.ambiguous[i] { "ambiguous" } else { m.classification.map_or("unclassified", |c| c.name()) };
            t.push(vec![k.into(), j.into(), m.lambda.into(), m.omega_e.into(), class.into()]);
        }
    }
    files.write(out, &t.render(format))?;

    let mut d = Derived::new();
    let last = scan.k_values.len() - 1;
    d.insert("k_max".into(), json!(scan.k_values[last]));
    d.insert("lambda_qz_at_k_max".into(), json!(scan.lambda_qz_per_k[last]));
    d.insert("ambiguous_points".into(), json!(scan.ambiguous.iter().filter(|a| **a).count()));
    if let (ModelConfig::Toy(p), Some(l)) = (&cfg.model, scan.lambda_qz_per_k[last]) {
        if p.mixing != 0.0 {
            d.insert("zeno_asymptote_ratio".into(), json!(l * scan.k_values[last] / (4.0 * p.mixing * p.mixing)));
        }
    }
    Ok(d)
}

pub fn propagate_cmd(cfg: &RunConfig, out: &Path, format: Format, files: &mut Outputs) -> Result<Derived, RunError> {
    let block = section(&cfg.propagate, "propagate")?;
    let model = cfg.model.build()?;
    require_positive("propagate.t_max", block.t_max)?;
    require_positive("propagate.dt_hint", block.dt_hint)?;
    if block.n_out < 2 {
        return Err(ConfigError::field("propagate.n_out", "need at least two samples").into());
    }
    let ks = match &block.k_values {
        Some(v) if v.is_empty() => return Err(ConfigError::field("propagate.k_values", "empty").into()),
        Some(v) => v.clone(),
        None => vec![model.k()],
    };
    let rho0 = initial_density(&model, block.initial)?;
    let opts = PropagateOptions::new(block.t_max).with_samples(block.n_out).with_dt_hint(block.dt_hint);

    let mut t = Table::new(&["k", "t", "qs", "trace", "purity"]);
    let mut series = Vec::new();
    for &k in &ks {
        let m = model.with_total_rate(k).map_err(|e| ConfigError::field("propagate.k_values", e.to_string()))?;
        let res = propagate(&m, cfg.variant, &rho0, &opts).map_err(|e| match RunError::from(e) {
            RunError::Numerical(e) => {
                eprintln!("propagation failed at k = {k}, t_max = {}, dt_hint = {}", block.t_max, block.dt_hint);
                RunError::Numerical(e)
            }
            other => other,
        })?;
        let (traces, purities) = (res.traces(), res.purities());
        for i in 0..res.times.len() {
            t.push(vec![k.into(), res.times[i].into(), res.singlet_prob[i].into(), traces[i].into(), purities[i].into()]);
        }
        let omega = dominant_angular_frequency(&res.times, &res.singlet_prob, 20.0).ok();
        let trace_dev = traces.iter().fold(0.0f64, |a, tr| a.max((tr - 1.0).abs()));
        series.push(json!({
            "k": k,
            "final_qs": res.singlet_prob.last(),
            "dominant_angular_frequency": omega,
            "qs_nonincreasing": is_nonincreasing(&res.singlet_prob, 1e-9),
            "max_trace_deviation": trace_dev,
            "internal_dt": res.dt,
            "halving_error": res.halving_error,
        }));
    }
    files.write(out, &t.render(format))?;
    let mut d = Derived::new();
    d.insert("series".into(), Value::Array(series));
    Ok(d)
}

/// Simpson integral over a uniform grid with an even number of intervals.
fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    let mut s = y[0] + y[n];
    for (i, v) in y.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

pub fn trajectories(cfg: &RunConfig, out: &Path, format: Format, files: &mut Outputs) -> Result<Derived, RunError> {
    let block = section(&cfg.trajectories, "trajectories")?;
    let seed = cfg.require_seed()?;
    let model = cfg.model.build()?;
    require_positive("trajectories.t_max", block.t_max)?;
    require_positive("trajectories.dt", block.dt)?;
    if block.n_out < 2 {
        return Err(ConfigError::field("trajectories.n_out", "need at least two samples").into());
    }
    if block.n_traj == 0 {
        return Err(ConfigError::field("trajectories.n_traj", "must be at least 1").into());
    }
    check_dt_contract(&model, block.dt)
        .map_err(|e| ConfigError::field("trajectories.dt", e.to_string()))?;
    let psi0 = initial_pure(&model, block.initial, "trajectories.initial")?;
    let opts = TrajectoryOptions::new(block.t_max, block.dt).with_samples(block.n_out).with_scheme(block.scheme);

    // Master-equation reference on an 8× finer grid (for the jump-count integral).
    let refine = 8;
    let intervals = block.n_out - 1;
    let rho0 = DensityMatrix::pure(model.space().clone(), psi0.amplitudes())?;
    let fine = propagate(
        &model,
        EquationVariant::Kominis,
        &rho0,
        &PropagateOptions::new(block.t_max).with_samples(intervals * refine + 1),
    )?;
    let reference: Vec<f64> = fine.singlet_prob.iter().step_by(refine).copied().collect();
    let h = block.t_max / (intervals * refine) as f64;
    let k = model.k();

    let (times, mean, se, rates, rate_se, count, count_se) = if block.n_traj >= 2 {
        let e = ensemble_average(&model, &psi0, &opts, block.n_traj, seed)?;
        (e.times, e.mean_qs, e.se_qs, e.mean_jump_rate, e.se_jump_rate, e.mean_jump_count, e.se_jump_count)
    } else {
        let r = simulate_ensemble_member(&model, &psi0, &opts, seed, 0)?;
        let spacing = block.t_max / intervals as f64;
        let rates: Vec<f64> = r.bin_counts.iter().map(|&c| c as f64 / spacing).collect();
        let n = r.jump_times.len() as f64;
        let zeros = vec![0.0; r.times.len()];
        (r.times, r.qs_expect, zeros.clone(), rates, zeros[..intervals].to_vec(), n, 0.0)
    };

    let mut t = Table::new(&["t", "mean_qs", "se_qs", "reference_qs"]);
    let (mut max_dev, mut max_ratio, mut pass) = (0.0f64, 0.0f64, true);
    let mut bound_at_max = 0.0;
    for i in 0..times.len() {
        t.push(vec![times[i].into(), mean[i].into(), se[i].into(), reference[i].into()]);
        let dev = (mean[i] - reference[i]).abs();
        if dev > max_dev {
            max_dev = dev;
            bound_at_max = 5.0 * se[i];
        }
        if se[i] > 0.0 {
            max_ratio = max_ratio.max(dev / se[i]);
        }
        pass &= dev <= 5.0 * se[i] + 1e-12;
    }
    files.write(out, &t.render(format))?;

    let mut jr = Table::new(&["t_start", "t_end", "jump_rate", "jump_rate_se", "expected_rate"]);
    let mut bins_outside = 0;
    for b in 0..intervals {
        let expected = 2.0 * k * simpson(&fine.singlet_prob[b * refine..=(b + 1) * refine], h) / (h * refine as f64);
        if (rates[b] - expected).abs() > 3.0 * rate_se[b] {
            bins_outside += 1;
        }
        jr.push(vec![times[b].into(), times[b + 1].into(), rates[b].into(), rate_se[b].into(), expected.into()]);
    }
    files.write(&sibling(out, "jump_rate", format), &jr.render(format))?;

    for i in 0..block.dump.min(block.n_traj) {
        let r = simulate_ensemble_member(&model, &psi0, &opts, seed, i as u64)?;
        let mut tt = Table::new(&["t", "qs", "rc"]);
        for j in 0..r.times.len() {
            tt.push(vec![r.times[j].into(), r.qs_expect[j].into(), r.rc_samples[j].into()]);
        }
        files.write(&sibling(out, &format!("traj{i}"), format), &tt.render(format))?;
        let mut jt = Table::new(&["jump_time"]);
        for &tj in &r.jump_times {
            jt.push(vec![tj.into()]);
        }
        files.write(&sibling(out, &format!("traj{i}.jumps"), format), &jt.render(format))?;
    }

    let expected_count = 2.0 * k * simpson(&fine.singlet_prob, h);
    let mut d = Derived::new();
    d.insert("n_traj".into(), json!(block.n_traj));
    d.insert("max_deviation".into(), json!(max_dev));
    d.insert("bound_at_max_deviation".into(), json!(bound_at_max));
    d.insert("max_deviation_over_se".into(), json!(max_ratio));
    d.insert("within_5_se".into(), json!(pass));
    d.insert("mean_jump_count".into(), json!(count));
    d.insert("se_jump_count".into(), json!(count_se));
    d.insert("expected_jump_count".into(), json!(expected_count));
    d.insert("jump_count_within_3_se".into(), json!((count - expected_count).abs() <= 3.0 * count_se));
    d.insert("jump_rate_bins_outside_3_se".into(), json!(bins_outside));
    Ok(d)
}

pub fn correlation(cfg: &RunConfig, out: &Path, format: Format, files: &mut Outputs) -> Result<Derived, RunError> {
    let block = section(&cfg.correlation, "correlation")?;
    let seed = cfg.require_seed()?;
    let model = cfg.model.build()?;
    let tau = block.tau_grid.values("correlation.tau_grid")?;
    require_positive("correlation.dt", block.dt)?;
    require_positive("correlation.t_window", block.t_window)?;
    if block.n_traj < 2 {
        return Err(ConfigError::field("correlation.n_traj", "need at least two trajectories").into());
    }
    check_dt_contract(&model, block.dt).map_err(|e| ConfigError::field("correlation.dt", e.to_string()))?;
    let psi0 = initial_pure(&model, block.initial, "correlation.initial")?;

    let opts = CorrelationOptions::new(block.t_burn, block.t_window, block.dt, block.n_traj).with_scheme(block.scheme);
    let mc = correlation_mc(&model, &psi0, &tau, &opts, seed)?;
    let exact = correlation_analytic(&model, &mc.tau)?;

    let mut t = Table::new(&["tau", "g_literal", "g_projected", "g_mc", "g_mc_se"]);
    let mut within = 0;
    for i in 0..mc.tau.len() {
        t.push(vec![
            mc.tau[i].into(),
            exact.literal[i].into(),
            exact.projected[i].into(),
            mc.connected[i].into(),
            mc.se[i].into(),
        ]);
        if (mc.connected[i] - exact.projected[i]).abs() <= 5.0 * mc.se[i] + 1e-12 {
            within += 1;
        }
    }
    files.write(out, &t.render(format))?;

    let lit_min = exact.literal.iter().copied().fold(f64::INFINITY, f64::min);
    let lit_max = exact.literal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut d = Derived::new();
    d.insert("fraction_within_5_se".into(), json!(within as f64 / mc.tau.len() as f64));
    d.insert("literal_spread".into(), json!(lit_max - lit_min));
    d.insert("burn_in_drift".into(), json!(mc.drift));
    d.insert("burn_in_drift_se".into(), json!(mc.drift_se));
    Ok(d)
}

pub fn compare(cfg: &RunConfig, out: &Path, format: Format, files: &mut Outputs) -> Result<Derived, RunError> {
    let block = section(&cfg.compare, "compare")?;
    let model = cfg.model.build()?;
    if model.kind() != ModelKind::Multispin {
        return Err(ConfigError::field("model.kind", "compare runs on the multispin model").into());
    }
    let grid = block.k_grid.values("compare.k_grid")?;
    let kom = zeno_scan(&model, EquationVariant::Kominis, &grid)?;
    let hab = zeno_scan(&model, EquationVariant::Haberkorn, &grid)?;

    let mut t = Table::new(&["k", "min_lambda_kominis", "min_lambda_haberkorn"]);
    for (i, &k) in grid.iter().enumerate() {
        t.push(vec![
            Cell::from(k),
            kom.min_nonzero_lambda_per_k[i].into(),
            hab.min_nonzero_lambda_per_k[i].into(),
        ]);
    }
    files.write(out, &t.render(format))?;

    let [lo, hi] = block.fit_range;
    let idx: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] >= lo && grid[i] <= hi).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
    let hs: Vec<f64> = idx.iter().map(|&i| hab.min_nonzero_lambda_per_k[i]).collect();
    let ks: Vec<f64> = idx.iter().map(|&i| kom.min_nonzero_lambda_per_k[i]).collect();
    let mut d = Derived::new();
    if let Ok((slope, r2)) = fit_through_origin(&xs, &hs) {
        d.insert("haberkorn_fit_slope".into(), json!(slope));
        d.insert("haberkorn_fit_r2".into(), json!(r2));
    }
    d.insert("haberkorn_increasing".into(), json!(hs.windows(2).all(|w| w[1] > w[0])));
    d.insert("kominis_decreasing".into(), json!(ks.windows(2).all(|w| w[1] < w[0])));
    if let (Some(first), Some(last)) = (ks.first(), ks.last()) {
        d.insert("kominis_ratio_last_over_first".into(), json!(last / first));
    }
    Ok(d)
}
