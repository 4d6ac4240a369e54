//! End-to-end checks of the command-line surface: exit codes, report
//! agreement, determinism, and the file formats.

use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stot"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_reference_instance(name: &str) -> PathBuf {
    let path = tmp(name);
    let inst = stot_core::reference_instance();
    std::fs::write(&path, serde_json::to_string_pretty(&inst).unwrap()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solve_reports_the_reference_value() {
    let file = write_reference_instance("ref_solve.json");
    let out = run(&["solve", file.to_str().unwrap()]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["command"], "solve");
    let value = report["results"]["value"].as_f64().unwrap();
    assert!((value - 0.8).abs() <= 1e-9);
    assert!(report["instance_digest"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
}

#[test]
fn solve_duals_verify_agree_to_the_last_digit() {
    let file = write_reference_instance("ref_agree.json");
    let solve = stdout_json(&run(&["solve", file.to_str().unwrap()]));
    let plan = tmp("ref_agree_plan.json");
    std::fs::write(&plan, solve["results"]["plan"].to_string()).unwrap();

    let duals = stdout_json(&run(&["duals", file.to_str().unwrap()]));
    let verify = stdout_json(&run(&[
        "verify",
        file.to_str().unwrap(),
        "--plan",
        plan.to_str().unwrap(),
    ]));

    let v_solve = solve["results"]["value"].as_f64().unwrap();
    let v_duals = duals["results"]["primal_value"].as_f64().unwrap();
    let v_verify = verify["results"]["optimal_value"].as_f64().unwrap();
    assert_eq!(v_solve.to_bits(), v_duals.to_bits());
    assert_eq!(v_solve.to_bits(), v_verify.to_bits());
    assert_eq!(verify["results"]["equivalent"], Value::Bool(true));
}

#[test]
fn generated_instances_validate_and_reproduce() {
    let out1 = run(&["gen", "--seed", "7", "--nx", "3", "--ny", "4", "--scenarios", "2"]);
    let out2 = run(&["gen", "--seed", "7", "--nx", "3", "--ny", "4", "--scenarios", "2"]);
    assert!(out1.status.success());
    assert_eq!(out1.stdout, out2.stdout, "gen must be byte-deterministic");

    let path = tmp("gen7.json");
    std::fs::write(&path, &out1.stdout).unwrap();
    let val = run(&["validate", path.to_str().unwrap()]);
    assert!(val.status.success());
    let report = stdout_json(&val);
    assert_eq!(report["results"]["valid"], Value::Bool(true));
    assert_eq!(report["results"]["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn invalid_weights_exit_2_and_cite_weights() {
    let mut inst = stot_core::reference_instance();
    inst.scenarios[1].weight = 0.6;
    let path = tmp("bad_weights.json");
    std::fs::write(&path, serde_json::to_string(&inst).unwrap()).unwrap();
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("weights"), "stderr: {stderr}");
    // the report still lists the violation
    let report = stdout_json(&out);
    assert_eq!(report["results"]["valid"], Value::Bool(false));
}

#[test]
fn malformed_json_exits_2_with_a_location() {
    let path = tmp("broken.json");
    std::fs::write(&path, b"{\"space_X\": [not json").unwrap();
    let out = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line"), "stderr: {stderr}");
}

#[test]
fn non_monotone_plans_exit_1_with_a_witness() {
    let file = write_reference_instance("ref_cm.json");
    // anti-diagonal coupling in the swap-cost scenario
    let plan = tmp("bad_plan.json");
    std::fs::write(
        &plan,
        r#"{"couplings": [[[0.3, 0.0], [0.3, 0.4]], [[0.0, 0.5], [0.5, 0.0]]]}"#,
    )
    .unwrap();
    let out = run(&[
        "check-cm",
        file.to_str().unwrap(),
        "--plan",
        plan.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["results"]["monotone"], Value::Bool(false));
    let witness = &report["results"]["per_scenario"][1]["witness"];
    assert!((witness["defect"].as_f64().unwrap() - (-2.0)).abs() <= 1e-12);
}

#[test]
fn cycle_length_bound_resolution() {
    let file = write_reference_instance("ref_env.json");
    let out = bin()
        .args(["check-cm", file.to_str().unwrap()])
        .env("KT_MAX_CYCLE_LEN", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["results"]["max_len"], Value::from(3));

    let flag_wins = bin()
        .args(["check-cm", file.to_str().unwrap(), "--max-len", "4"])
        .env("KT_MAX_CYCLE_LEN", "3")
        .output()
        .unwrap();
    let report = stdout_json(&flag_wins);
    assert_eq!(report["results"]["max_len"], Value::from(4));

    let bad_env = bin()
        .args(["check-cm", file.to_str().unwrap()])
        .env("KT_MAX_CYCLE_LEN", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
}

fn write_pair(name: &str, p: f64) -> PathBuf {
    let pair = stot_core::gen::kernel_pair(21, 3, 2, p);
    let path = tmp(name);
    std::fs::write(&path, serde_json::to_string(&pair).unwrap()).unwrap();
    path
}

#[test]
fn wp_and_kr_agree_at_exponent_one() {
    let path = write_pair("pair1.json", 1.0);
    let wp = stdout_json(&run(&["wp", path.to_str().unwrap()]));
    let kr_out = run(&["kr", path.to_str().unwrap()]);
    assert!(kr_out.status.success());
    let kr = stdout_json(&kr_out);
    let a = wp["results"]["value"].as_f64().unwrap();
    let b = kr["results"]["value"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-9);
    assert_eq!(kr["results"]["agrees_with_primal"], Value::Bool(true));
}

#[test]
fn kr_rejects_other_exponents_and_wp_flag_overrides() {
    let path = write_pair("pair2.json", 2.0);
    let kr = run(&["kr", path.to_str().unwrap()]);
    assert_eq!(kr.status.code(), Some(2));

    let wp2 = stdout_json(&run(&["wp", path.to_str().unwrap()]));
    let wp1 = stdout_json(&run(&["wp", path.to_str().unwrap(), "--p", "1"]));
    assert_eq!(wp2["results"]["p"].as_f64().unwrap(), 2.0);
    assert_eq!(wp1["results"]["p"].as_f64().unwrap(), 1.0);
}

#[test]
fn smooth_rejects_level_zero() {
    let file = write_reference_instance("ref_smooth.json");
    let out = run(&["smooth", file.to_str().unwrap(), "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let ok = run(&["smooth", file.to_str().unwrap(), "--n", "2"]);
    assert!(ok.status.success());
    let report = stdout_json(&ok);
    assert_eq!(
        report["results"]["per_scenario_cost_n"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
}

#[test]
fn missing_file_exits_2() {
    let out = run(&["solve", "/nonexistent/path.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_plan_is_an_input_error() {
    let file = write_reference_instance("ref_infeas.json");
    let plan = tmp("infeasible_plan.json");
    std::fs::write(
        &plan,
        r#"{"couplings": [[[1.0, 0.0], [0.3, 0.4]], [[0.5, 0.0], [0.0, 0.5]]]}"#,
    )
    .unwrap();
    let out = run(&[
        "verify",
        file.to_str().unwrap(),
        "--plan",
        plan.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
