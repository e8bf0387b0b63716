mod common;

use std::fs;

use common::{column, manifest, read_csv, run, run_ok, write_config};
use sha2::{Digest, Sha256};
use tempfile::tempdir;

const TOY: &str = r#"
[model]
kind = "toy"
singlet_energy = 1.0
mixing = 1.0
k_s = 1.0
"#;

fn code(out: &std::process::Output) -> Option<i32> {
    out.status.code()
}

#[test]
fn missing_source_is_a_config_error() {
    let dir = tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["spectrum"])), Some(2));
}

#[test]
fn preset_must_match_subcommand() {
    let dir = tempdir().unwrap();
    let out = run(dir.path(), &["spectrum", "--preset", "jumps"]);
    assert_eq!(code(&out), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--preset"));
    assert_eq!(code(&run(dir.path(), &["spectrum", "--preset", "nope"])), Some(2));
}

#[test]
fn unknown_field_is_named() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &format!("{TOY}\n[spectrum]\nk_grid = [1.0]\nkgrid = 3\n"));
    let out = run(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kgrid"));
}

#[test]
fn negative_rate_and_bad_grid_are_config_errors() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!("{}\n[spectrum]\nk_grid = [1.0]\n", TOY.replace("k_s = 1.0", "k_s = -1.0")),
    );
    assert_eq!(code(&run(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()])), Some(2));
    let cfg = write_config(dir.path(), "d.toml", &format!("{TOY}\n[spectrum]\nk_grid = [2.0, 1.0]\n"));
    let out = run(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spectrum.k_grid"));
}

#[test]
fn stochastic_commands_need_a_seed() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!("{TOY}\n[trajectories]\nt_max = 1.0\ndt = 0.001\nn_traj = 10\n"),
    );
    let out = run(dir.path(), &["trajectories", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    run_ok(dir.path(), &["trajectories", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
}

#[test]
fn coarse_step_violates_the_contract() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!("seed = 1\n{TOY}\n[trajectories]\nt_max = 1.0\ndt = 0.1\nn_traj = 10\n"),
    );
    let out = run(dir.path(), &["trajectories", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trajectories.dt"));
}

#[test]
fn unsettled_correlation_window_is_a_numerical_failure() {
    // Starting in the singlet with no burn-in, the current relaxes inside the window.
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!(
            "seed = 1\n{TOY}\n[correlation]\ntau_grid = [0.0]\nt_burn = 0.0\nt_window = 2.0\n\
             dt = 0.005\nn_traj = 4000\ninitial = \"singlet\"\n"
        ),
    );
    let out = run(dir.path(), &["correlation", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn manifest_records_hashes_and_config() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("s.csv");
    run_ok(dir.path(), &["spectrum", "--preset", "fig2ab", "--out", out.to_str().unwrap()]);
    let m = manifest(&out);
    assert_eq!(m["command"], "spectrum");
    assert_eq!(m["preset"], "fig2ab");
    assert!(m["config_toml"].as_str().unwrap().contains("[spectrum"));
    let files = m["outputs"].as_array().unwrap();
    assert_eq!(files.len(), 1);
    let bytes = fs::read(&out).unwrap();
    assert_eq!(files[0]["sha256"], hex::encode(Sha256::digest(&bytes)));
    assert_eq!(files[0]["bytes"], bytes.len());
    let ratio = m["derived"]["zeno_asymptote_ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
}

#[test]
fn unmeasured_spectrum_is_all_zero() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &format!("{TOY}\n[spectrum]\nk_grid = [0.0]\n"));
    let out = dir.path().join("s.csv");
    run_ok(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let lambda = column(&out, "lambda");
    assert_eq!(lambda.len(), 4);
    assert!(lambda.iter().all(|l| l.abs() < 1e-12), "{lambda:?}");
}

#[test]
fn csv_round_trips_seventeen_digits() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("s.csv");
    run_ok(dir.path(), &["spectrum", "--preset", "fig2ab", "--out", out.to_str().unwrap()]);
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["k", "mode", "lambda", "omega_e", "class"]);
    let mantissa = rows[0][0].split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
}

#[test]
fn json_output() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("c.json");
    run_ok(dir.path(), &["compare", "--preset", "compare", "--format", "json", "--out", out.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["columns"][1], "min_lambda_kominis");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 11);
    // k = 0 has no decaying mode.
    assert_eq!(rows[0][1].as_f64().unwrap(), 0.0);
    assert_eq!(rows[0][2].as_f64().unwrap(), 0.0);
    let kom: Vec<f64> = rows[1..].iter().map(|r| r[1].as_f64().unwrap()).collect();
    assert!(kom.windows(2).all(|w| w[1] < w[0]), "{kom:?}");
    assert_eq!(manifest(&out)["derived"]["kominis_decreasing"], true);
}

#[test]
fn compare_needs_the_multispin_model() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &format!("{TOY}\n[compare]\nk_grid = [1.0, 2.0]\n"));
    let out = run(dir.path(), &["compare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.kind"));
}

#[test]
fn unmeasured_correlation_vanishes() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!(
            "seed = 4\n{}\n[correlation]\ntau_grid = [0.0, 0.5, 1.0]\nt_burn = 1.0\nt_window = 2.0\n\
             dt = 0.005\nn_traj = 20\n",
            TOY.replace("k_s = 1.0", "k_s = 0.0")
        ),
    );
    let out = dir.path().join("g.csv");
    run_ok(dir.path(), &["correlation", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    for c in ["g_literal", "g_projected", "g_mc", "g_mc_se"] {
        assert!(column(&out, c).iter().all(|g| *g == 0.0), "{c}");
    }
}

#[test]
fn single_trajectory_dump_matches_summary() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!("seed = 9\n{TOY}\n[trajectories]\nt_max = 5.0\ndt = 0.001\nn_out = 51\nn_traj = 1\ndump = 1\n"),
    );
    let out = dir.path().join("t.csv");
    run_ok(dir.path(), &["trajectories", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let dump = dir.path().join("t.traj0.csv");
    assert_eq!(column(&out, "t"), column(&dump, "t"));
    assert_eq!(column(&out, "mean_qs"), column(&dump, "qs"));
    assert!(column(&out, "se_qs").iter().all(|s| *s == 0.0));
    // Recombination current k⟨Q_S⟩ with k = 1.
    assert_eq!(column(&dump, "rc"), column(&dump, "qs"));
    assert!(dir.path().join("t.traj0.jumps.csv").exists());
    assert!(dir.path().join("t.jump_rate.csv").exists());
    assert_eq!(manifest(&out)["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!("seed = 2\n{TOY}\n[trajectories]\nt_max = 3.0\ndt = 0.002\nn_out = 31\nn_traj = 300\n"),
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    run_ok(dir.path(), &["trajectories", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    run_ok(dir.path(), &["trajectories", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    run_ok(dir.path(), &["trajectories", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", c.to_str().unwrap()]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn default_output_name_follows_the_command() {
    let dir = tempdir().unwrap();
    run_ok(dir.path(), &["compare", "--preset", "compare"]);
    assert!(dir.path().join("compare.csv").exists());
    assert!(dir.path().join("compare.csv.manifest.json").exists());
}

#[test]
fn zero_threads_is_rejected() {
    let dir = tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["compare", "--preset", "compare", "--threads", "0"])), Some(2));
}
