//! End-to-end tests of the `gmn` binary: exit codes, JSON shapes,
//! determinism, and the config-file/environment precedence rules.

use std::io::Write;
use std::process::{Command, Output};

fn gmn() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gmn"));
    cmd.env_remove("GMN_SEED");
    cmd
}

fn run_ok(args: &[&str]) -> Output {
    let output = gmn().args(args).output().expect("binary runs");
    assert!(
        output.status.success(),
        "gmn {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn json_of(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn classical_bound_certifies_three_quarters() {
    let output = run_ok(&["classical-bound"]);
    let v = json_of(&output);
    assert_eq!(v["max_probability"], "3/4");
    assert_eq!(v["num_maximizers"], 128);
    let table = v["comm_table"].as_array().unwrap();
    assert_eq!(table.len(), 4);
    assert_eq!(table[0]["max_probability"], "3/4");
    assert_eq!(table[3]["max_probability"], "1");
}

#[test]
fn classical_bound_lists_all_maximizers_on_request() {
    let output = run_ok(&["classical-bound", "--list-maximizers"]);
    let v = json_of(&output);
    assert_eq!(v["maximizers"].as_array().unwrap().len(), 128);
}

#[test]
fn classical_bound_mixtures_stay_bounded() {
    let output = run_ok(&["classical-bound", "--mixtures", "1000"]);
    let v = json_of(&output);
    assert_eq!(v["mixtures"]["count"], 1000);
    assert_eq!(v["mixtures"]["within_bound"], true);
    assert!(v["mixtures"]["max_value"].as_f64().unwrap() <= 0.75);
}

#[test]
fn comm_search_two_bits_wins_always() {
    let output = run_ok(&["comm-search", "--alice-bits", "1", "--bob-bits", "1"]);
    let v = json_of(&output);
    assert_eq!(v["max_probability"], "1");
    assert_eq!(v["max_wins"], 32);
    assert_eq!(v["example_protocol"]["communication_bits"], 2);
}

#[test]
fn comm_search_zero_bits_gives_local_bound() {
    let output = run_ok(&["comm-search", "--alice-bits", "0", "--bob-bits", "0"]);
    let v = json_of(&output);
    assert_eq!(v["max_probability"], "3/4");
    assert!(v["example_protocol"]["alice_message"].is_null());
    assert!(v["example_protocol"]["bob_message"].is_null());
}

#[test]
fn comm_search_rejects_budget_above_one() {
    let output = gmn()
        .args(["comm-search", "--alice-bits", "2", "--bob-bits", "0"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&output), 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("budget"));
}

#[test]
fn run_noiseless_wins_everything() {
    let output = run_ok(&[
        "run",
        "--visibility",
        "1",
        "--seed",
        "1",
        "--rounds-per-variation",
        "50",
    ]);
    let v = json_of(&output);
    assert_eq!(v["schema"], "gmn-report/1");
    assert_eq!(v["pooled"]["probability"], 1.0);
    assert_eq!(v["pooled"]["total"], 1600);
    assert_eq!(v["variations"].as_array().unwrap().len(), 32);
}

#[test]
fn run_calibrated_visibility_lands_near_published_rate() {
    let output = run_ok(&[
        "run",
        "--visibility",
        "0.702",
        "--rounds-per-variation",
        "1000",
        "--seed",
        "42",
    ]);
    let v = json_of(&output);
    let pooled = v["pooled"]["probability"].as_f64().unwrap();
    assert!((pooled - 0.851).abs() <= 0.01, "pooled {pooled}");
}

#[test]
fn run_is_deterministic_across_worker_counts() {
    let mut outputs = Vec::new();
    for workers in ["1", "8"] {
        let output = run_ok(&[
            "run",
            "--visibility",
            "0.702",
            "--rounds-per-variation",
            "100",
            "--seed",
            "42",
            "--workers",
            workers,
        ]);
        outputs.push(output.stdout);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn run_rejects_out_of_domain_flags() {
    for args in [
        vec!["run", "--visibility", "1.5"],
        vec!["run", "--white-noise", "-0.1"],
        vec!["run", "--efficiency", "1,0,1"],
        vec!["run", "--efficiency", "1,1"],
        vec!["run", "--rounds-per-variation", "0"],
        vec!["run", "--workers", "0"],
    ] {
        let output = gmn().args(&args).output().unwrap();
        assert_eq!(exit_code(&output), 2, "args {args:?}");
    }
}

#[test]
fn run_unwritable_output_path_is_io_error() {
    let output = gmn()
        .args([
            "run",
            "--rounds-per-variation",
            "1",
            "--out",
            "/nonexistent-dir/report.json",
        ])
        .output()
        .unwrap();
    assert_eq!(exit_code(&output), 3);
}

#[test]
fn run_writes_the_out_path_and_nothing_else() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let output = run_ok(&[
        "run",
        "--rounds-per-variation",
        "5",
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(output.stdout.is_empty());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(report["seed"], 3);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn run_emits_csv_with_one_row_per_variation() {
    let output = run_ok(&[
        "run",
        "--rounds-per-variation",
        "10",
        "--seed",
        "2",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 33);
    assert_eq!(
        lines[0],
        "variation_a_halfunits,variation_b_halfunits,variation_c_halfunits,\
         parity,played,correct,win_probability,std_error,zscore"
    );
    assert!(lines[1].starts_with("0,0,0,even,10,"));
}

#[test]
fn config_file_merges_under_explicit_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    let mut file = std::fs::File::create(&path).unwrap();
    writeln!(file, "# run configuration").unwrap();
    writeln!(file, "visibility = 0.5").unwrap();
    writeln!(file, "rounds-per-variation = 20").unwrap();
    writeln!(file, "seed = 9").unwrap();
    drop(file);

    let from_file = run_ok(&["run", "--config", path.to_str().unwrap()]);
    let v = json_of(&from_file);
    assert_eq!(v["config"]["visibility"], 0.5);
    assert_eq!(v["config"]["rounds_per_variation"], 20);
    assert_eq!(v["seed"], 9);

    let overridden = run_ok(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--visibility",
        "0.8",
    ]);
    let v = json_of(&overridden);
    assert_eq!(v["config"]["visibility"], 0.8);
    assert_eq!(v["seed"], 9);
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "verbosity = 3\n").unwrap();
    let output = gmn()
        .args(["run", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn seed_env_var_is_honored_and_flag_wins() {
    let base = run_ok(&["run", "--rounds-per-variation", "10", "--seed", "123"]);

    let from_env = gmn()
        .env("GMN_SEED", "123")
        .args(["run", "--rounds-per-variation", "10"])
        .output()
        .unwrap();
    assert!(from_env.status.success());
    assert_eq!(from_env.stdout, base.stdout);

    let flag_wins = gmn()
        .env("GMN_SEED", "5")
        .args(["run", "--rounds-per-variation", "10", "--seed", "123"])
        .output()
        .unwrap();
    assert!(flag_wins.status.success());
    assert_eq!(flag_wins.stdout, base.stdout);

    let invalid = gmn()
        .env("GMN_SEED", "not-a-number")
        .args(["run", "--rounds-per-variation", "10"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&invalid), 2);
}

#[test]
fn reproduce_paper_matches_published_statistics() {
    let output = run_ok(&["reproduce-paper", "--seed", "7"]);
    let v = json_of(&output);
    assert_eq!(v["paper"]["correct"], 28768);
    assert_eq!(v["paper"]["incorrect"], 5032);
    assert_eq!(v["paper"]["pooled_probability"], 0.851);
    let simulated = v["simulated"]["pooled_probability"].as_f64().unwrap();
    assert!((simulated - 0.851).abs() <= 0.006, "simulated {simulated}");
    let median = v["simulated"]["per_variation_zscore_median"]
        .as_f64()
        .unwrap();
    assert!((7.0..=11.0).contains(&median), "median z {median}");
    assert_eq!(v["checks"]["rotation_identity"], true);
    assert_eq!(v["checks"]["preparation_pipeline"], true);
    assert_eq!(v["checks"]["classical_bound"], "3/4");
}

#[test]
fn reproduce_paper_is_seed_reproducible() {
    let a = run_ok(&["reproduce-paper", "--seed", "11"]);
    let b = run_ok(&["reproduce-paper", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let output = gmn().output().unwrap();
    assert_eq!(exit_code(&output), 2);
}
