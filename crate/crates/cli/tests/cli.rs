use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fxeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fxeq")).args(args).env_remove("FXEQ_OUT_DIR").output().unwrap()
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn json_stderr(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fxeq-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn eval_reports_gamma_values() {
    let out = fxeq(&["eval", "--g", "x", "--x", "0.5,4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    assert_eq!(v["command"], "eval");
    let rows = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    assert!((rows[0]["value"].as_f64().unwrap() - sqrt_pi).abs() < 1e-9);
    assert!((rows[1]["value"].as_f64().unwrap() - 6.0).abs() < 1e-8);
    assert_eq!(rows[0]["converged"], true);
    assert_eq!(rows[0]["method"], "direct_12");
}

#[test]
fn non_convergence_exits_with_two() {
    let out = fxeq(&["eval", "--g", "x", "--x", "0.5", "--n-max", "10", "--accel", "none"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_stdout(&out)["results"][0]["converged"], false);
}

#[test]
fn parse_errors_are_structured() {
    let out = fxeq(&["eval", "--g", "x +", "--x", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let e = json_stderr(&out);
    assert_eq!(e["error"]["kind"], "parse");
    assert_eq!(e["error"]["position"], 3);
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_are_structured() {
    for args in [
        &["eval", "--g", "x", "--grid", "5:1:0.5"][..],
        &["eval", "--g", "x"],
        &["convexity", "--f", "x", "--window", "3"],
        &["frobnicate"],
    ] {
        let out = fxeq(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let e = json_stderr(&out);
        assert!(e["error"]["message"].as_str().is_some(), "{args:?}");
    }
    let out = fxeq(&["eval", "--g", "x", "--grid", "5:1:0.5"]);
    assert_eq!(json_stderr(&out)["error"]["kind"], "usage");
}

#[test]
fn non_positive_g_is_rejected() {
    let out = fxeq(&["eval", "--g", "x - 3", "--x", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_stderr(&out)["error"]["kind"], "non_positive");
}

#[test]
fn help_exits_cleanly() {
    let out = fxeq(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("eval"));
}

#[test]
fn parameters_bind_into_expressions() {
    let out = fxeq(&["eval", "--g", "x*a^x", "-p", "a=2", "--method", "transformed", "--x", "2.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out)["results"][0]["value"].as_f64().unwrap();
    assert!((v - 4.876_042_043_022_143).abs() / v < 1e-8);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["eval", "--g", "x", "--grid", "0.5:3:0.5"][..],
        &["convexity", "--f", "gamma_ref(x)", "--log", "--order", "1,2", "--window", "2:20"],
        &["demo", "bohr-mollerup"],
    ] {
        let a = fxeq(args);
        let b = fxeq(args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn seeds_change_sampled_systems() {
    let run = |seed: &str| {
        let out = fxeq(&["convexity", "--f", "sin(x)", "--window", "0:10", "--seed", seed]);
        json_stdout(&out)["reports"][0]["positive_witness"].clone()
    };
    assert_eq!(run("1"), run("1"));
    assert_ne!(run("1"), run("2"));
}

#[test]
fn out_dir_receives_report_and_traces() {
    let dir = scratch_dir("trace");
    let out = fxeq(&["eval", "--g", "x", "--x", "1.5", "--trace", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let body = std::fs::read_to_string(dir.join("eval.json")).unwrap();
    assert_eq!(body.as_bytes(), &out.stdout[..]);
    let csv = std::fs::read_to_string(dir.join("eval_trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,n,value,accelerated"));
    assert!(lines.count() > 5);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn csv_output_prints_traces() {
    let out = fxeq(&["eval", "--g", "x", "--x", "2", "--output", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("x,n,value,accelerated\n"));
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last.len(), 4);
    // traces hold the log-domain sequence, whose limit is ln Γ(2) = 0
    assert!(last[2].parse::<f64>().unwrap().abs() < 1e-3);
}

#[test]
fn demos_write_their_artifacts() {
    let dir = scratch_dir("demo");
    let out = fxeq(&["demo", "bohr-mollerup", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for name in ["bohr_mollerup.json", "bohr_mollerup_residuals.csv", "demo_bohr-mollerup.json"] {
        assert!(dir.join(name).is_file(), "{name}");
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn summand_and_lim_commands() {
    let out = fxeq(&["summand", "--f", "ln(x)", "--exp", "--x", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json_stdout(&out)["results"][0]["value"].as_f64().unwrap() - 6.0).abs() < 1e-7);
    let out = fxeq(&["lim", "--g", "x*3^x"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json_stdout(&out)["results"][0]["value"].as_f64().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn check_reports_each_condition() {
    let out = fxeq(&["check", "--g", "x*exp(sin(2*pi*x))", "--condition", "webster,ratio"]);
    let v = json_stdout(&out);
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports[0]["condition_id"], "webster_11");
    assert_eq!(reports[0]["verdict"], "fails");
    assert_eq!(reports[1]["condition_id"], "ratio_sequence");
    assert_eq!(reports[1]["verdict"], "holds");
}
