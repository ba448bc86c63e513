//! End-to-end CLI tests: exit codes, byte-identical reruns, grid expansion
//! order, and config validation, all through the real binary.

use colbai_core::bandit::{Instance, RewardFamily, WeightVector};
use colbai_core::hard::HardInstance;
use colbai_core::harness::{run_trials, Algorithm, ExperimentConfig, InstanceSource};
use colbai_core::rng::derive_seed;
use std::path::Path;
use std::process::{Command, Output};

fn colbai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colbai"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn tiny_run_config() -> ExperimentConfig {
    let instance = Instance::new(
        vec![vec![0.2, 0.3], vec![0.9, 0.8]],
        WeightVector::uniform(2),
        RewardFamily::PointMass,
    )
    .unwrap();
    ExperimentConfig {
        schema: 1,
        experiment_id: "tiny".to_string(),
        instance_source: InstanceSource::Explicit { instance },
        algorithm: Algorithm::ColLearn { rounds: 1 },
        horizon: 16,
        trials: 2,
        seed: 7,
        workers: 1,
    }
}

#[test]
fn missing_config_exits_2_and_names_the_path() {
    let out = colbai(&["run", "--config", "/nonexistent/conf.json"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("/nonexistent/conf.json"),
        "stderr: {stderr}"
    );
}

#[test]
fn unknown_flag_is_rejected() {
    let out = colbai(&["run", "--config", "x.json", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tiny_run_has_expected_rows_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_json(
        dir.path(),
        "run.json",
        &serde_json::to_value(tiny_run_config()).unwrap(),
    );
    let out = colbai(&["run", "--config", &config]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6); // seed header, trial header, 2 rows, summary header, 1 row
    assert_eq!(lines[0], "# master_seed=7");
    assert!(lines[2].starts_with("tiny,0,7,2,2,1,16,col_learn,explicit,true,"));
    assert!(lines[3].starts_with("tiny,1,7,"));
    assert!(lines[5].starts_with("tiny,16,2,2,1,"));

    // Byte-identical rerun, also with a different worker count.
    let again = colbai(&["run", "--config", &config]);
    assert_eq!(out.stdout, again.stdout);
    let wide = colbai(&["run", "--config", &config, "--workers", "8"]);
    assert_eq!(out.stdout, wide.stdout);
}

#[test]
fn seed_override_wins_over_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_json(
        dir.path(),
        "run.json",
        &serde_json::to_value(tiny_run_config()).unwrap(),
    );
    let overridden = colbai(&["run", "--config", &config, "--seed", "99"]);
    let text = String::from_utf8(overridden.stdout.clone()).unwrap();
    assert!(text.starts_with("# master_seed=99"));

    let mut edited = tiny_run_config();
    edited.seed = 99;
    let config2 = write_json(
        dir.path(),
        "run2.json",
        &serde_json::to_value(edited).unwrap(),
    );
    let direct = colbai(&["run", "--config", &config2]);
    assert_eq!(overridden.stdout, direct.stdout);
}

#[test]
fn run_writes_to_out_file_and_json_format_parses() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_json(
        dir.path(),
        "run.json",
        &serde_json::to_value(tiny_run_config()).unwrap(),
    );
    let out_path = dir.path().join("result.csv");
    let out = colbai(&[
        "run",
        "--config",
        &config,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let content = std::fs::read_to_string(&out_path).unwrap();
    assert!(content.starts_with("# master_seed=7"));

    let json_out = colbai(&["run", "--config", &config, "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&json_out.stdout).unwrap();
    assert_eq!(doc["master_seed"], 7);
    assert_eq!(doc["trials"].as_array().unwrap().len(), 2);
    assert_eq!(doc["summary"]["successes"], 2);
}

#[test]
fn run_rejects_bad_schema_and_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = serde_json::to_value(tiny_run_config()).unwrap();
    v["schema"] = serde_json::json!(2);
    let config = write_json(dir.path(), "bad_schema.json", &v);
    assert_eq!(colbai(&["run", "--config", &config]).status.code(), Some(2));

    let mut v = serde_json::to_value(tiny_run_config()).unwrap();
    v["unexpected"] = serde_json::json!(true);
    let config = write_json(dir.path(), "unknown_field.json", &v);
    assert_eq!(colbai(&["run", "--config", &config]).status.code(), Some(2));
}

fn sweep_value(grid: serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "schema": 1,
        "base": serde_json::to_value(tiny_run_config()).unwrap(),
        "grid": grid,
    })
}

#[test]
fn sweep_rounds_grid_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_json(
        dir.path(),
        "sweep.json",
        &sweep_value(serde_json::json!({"R": [1, 2, 3]})),
    );
    let out = colbai(&["sweep", "--config", &config]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5); // seed header, summary header, 3 rows
    assert!(lines[2].starts_with("tiny/R=1,16,"));
    assert!(lines[3].starts_with("tiny/R=2,16,"));
    assert!(lines[4].starts_with("tiny/R=3,16,"));
}

#[test]
fn sweep_empty_dimension_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_json(
        dir.path(),
        "sweep.json",
        &sweep_value(serde_json::json!({"T": []})),
    );
    assert_eq!(
        colbai(&["sweep", "--config", &config]).status.code(),
        Some(2)
    );
    let config = write_json(
        dir.path(),
        "sweep2.json",
        &sweep_value(serde_json::json!({})),
    );
    assert_eq!(
        colbai(&["sweep", "--config", &config]).status.code(),
        Some(2)
    );
}

#[test]
fn sweep_points_reproduce_individual_runs() {
    let dir = tempfile::tempdir().unwrap();
    let horizons = [8u64, 16, 32];
    let config = write_json(
        dir.path(),
        "sweep.json",
        &sweep_value(serde_json::json!({"T": horizons})),
    );
    let out = colbai(&["sweep", "--config", &config]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let sweep_rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(sweep_rows.len(), 3);

    for (index, &t) in horizons.iter().enumerate() {
        let mut point = tiny_run_config();
        point.horizon = t;
        point.seed = derive_seed(7, index as u64);
        let (_, summary) = run_trials(&point).unwrap();
        // Same derived seed, same trial count: the summary row tail after the
        // experiment_id must match the sweep's exactly.
        let expected_tail = format!(
            ",{},{},{},{},{},{},{},{}",
            t,
            summary.trials,
            summary.successes,
            summary.success_rate,
            summary.wilson_lo,
            summary.wilson_hi,
            summary.mean_pulls,
            summary.speedup.map(|s| s.to_string()).unwrap_or_default()
        );
        assert!(
            sweep_rows[index].ends_with(&expected_tail),
            "row {} = {} does not end with {}",
            index,
            sweep_rows[index],
            expected_tail
        );
    }
}

#[test]
fn sweep_two_arm_weights_and_delta() {
    let instance =
        Instance::two_arm(0.1, WeightVector::uniform(2), RewardFamily::Bernoulli).unwrap();
    let base = ExperimentConfig {
        schema: 1,
        experiment_id: "ta".to_string(),
        instance_source: InstanceSource::Explicit { instance },
        algorithm: Algorithm::TwoArmWeighted { delta: 0.1 },
        horizon: 64,
        trials: 10,
        seed: 3,
        workers: 1,
    };
    let dir = tempfile::tempdir().unwrap();
    let config = write_json(
        dir.path(),
        "sweep.json",
        &serde_json::json!({
            "schema": 1,
            "base": serde_json::to_value(&base).unwrap(),
            "grid": {"K": [2, 4], "delta": [0.05, 0.1], "weights_preset": ["uniform", "single_agent"]},
        }),
    );
    let out = colbai(&["sweep", "--config", &config]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows[0].starts_with("ta/K=2/delta=0.05/weights=uniform,"));
    assert!(rows[7].starts_with("ta/K=4/delta=0.1/weights=single_agent,"));

    // delta grid on a non-two-arm base is a config error.
    let config = write_json(
        dir.path(),
        "bad.json",
        &sweep_value(serde_json::json!({"delta": [0.1]})),
    );
    assert_eq!(
        colbai(&["sweep", "--config", &config]).status.code(),
        Some(2)
    );
}

#[test]
fn gen_instance_hard_round_trips_and_depends_on_seed() {
    let dir = tempfile::tempdir().unwrap();
    let gen = serde_json::json!({
        "schema": 1,
        "kind": {"hard": {"params": {"n": 32, "L": 2, "eta": 5.0}}},
        "seed": 11,
    });
    let config = write_json(dir.path(), "gen.json", &gen);
    let out = colbai(&["gen-instance", "--config", &config]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let hi: HardInstance = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(hi.params.n, 32);

    let again = colbai(&["gen-instance", "--config", &config]);
    assert_eq!(out.stdout, again.stdout);

    let other = colbai(&["gen-instance", "--config", &config, "--seed", "12"]);
    assert_eq!(other.status.code(), Some(0));
    let hi2: HardInstance = serde_json::from_slice(&other.stdout).unwrap();
    assert_ne!(hi.bits, hi2.bits);
}

#[test]
fn gen_instance_explicit_echoes_full_precision() {
    let instance = Instance::new(
        vec![vec![1.0 / 3.0, 0.9999999999999999]],
        WeightVector::new(vec![0.7, 0.30000000000000004]).unwrap(),
        RewardFamily::Bernoulli,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let config = write_json(
        dir.path(),
        "gen.json",
        &serde_json::json!({"schema": 1, "kind": {"explicit": {"instance": serde_json::to_value(&instance).unwrap()}}}),
    );
    let out = colbai(&["gen-instance", "--config", &config]);
    assert_eq!(out.status.code(), Some(0));
    let back: Instance = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(instance, back);
}

#[test]
fn validate_hard_passes_at_desk_scale() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_json(
        dir.path(),
        "validate.json",
        &serde_json::json!({
            "schema": 1,
            "params": {"n": 625, "L": 2, "eta": 5.0},
            "seed": 21,
            "options": {
                "e0_samples": 20000,
                "h_samples": 4000,
                "acceptance_attempts": 2000,
                "gap_checks": [[5.0, 6]],
                "normalization_lengths": [1, 6],
            },
        }),
    );
    let out = colbai(&["validate-hard", "--config", &config]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert_eq!(text.lines().next().unwrap(), "# master_seed=21");
    assert!(
        text.lines().skip(1).all(|l| l.starts_with("PASS ")),
        "{text}"
    );
}

#[test]
fn validate_hard_eta_too_small_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_json(
        dir.path(),
        "validate.json",
        &serde_json::json!({"schema": 1, "params": {"n": 625, "L": 2, "eta": 3.0}}),
    );
    let out = colbai(&["validate-hard", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("eta"), "stderr: {stderr}");
}

#[test]
fn validate_hard_reports_failures_with_exit_1() {
    // n far above eta^(2L) breaks the conditional-complexity bound (and the
    // acceptance-rate floor), so the suite must FAIL with exit code 1.
    let dir = tempfile::tempdir().unwrap();
    let config = write_json(
        dir.path(),
        "validate.json",
        &serde_json::json!({
            "schema": 1,
            "params": {"n": 5000, "L": 2, "eta": 5.0},
            "seed": 22,
            "options": {
                "e0_samples": 4000,
                "h_samples": 3000,
                "acceptance_attempts": 1000,
                "gap_checks": [[5.0, 4]],
                "normalization_lengths": [1],
            },
        }),
    );
    let out = colbai(&["validate-hard", "--config", &config]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "stdout: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("FAIL ")), "{text}");
}

#[test]
fn shipped_example_configs_parse() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["schema"], 1, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 4, "expected shipped example configs, found {seen}");
}
