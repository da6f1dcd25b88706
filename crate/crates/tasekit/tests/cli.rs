//! End-to-end checks of the installed binary: exit codes, output format,
//! and byte-level determinism. Everything runs the real executable via
//! `CARGO_BIN_EXE_tasekit`, not library shims.

use std::process::{Command, Output};

fn tasekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tasekit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn metadata_value(text: &str, key: &str) -> String {
    let prefix = format!("# {key}=");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("missing metadata key {key} in:\n{text}"))
        .to_string()
}

#[test]
fn alpha_table_is_exactly_the_calibrated_table() {
    let out = tasekit(&["alpha-table"]);
    assert!(out.status.success());
    assert_eq!(
        stdout_of(&out),
        "scheme,p=1,p=2,p=3,p=4\n\
         RK1,0.50,,,\n\
         RK2,0.50,1.50,,\n\
         RK3,0.40,1.20,2.80,\n\
         RK4,0.36,1.08,2.51,5.38\n"
    );
}

#[test]
fn run_case_reports_errors_and_exits_zero() {
    let out = tasekit(&["run-case", "--case", "ode-stiff"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert_eq!(metadata_value(&text, "diverged"), "false");
    let linf: f64 = metadata_value(&text, "linf_rel").parse().unwrap();
    assert!(linf > 0.5 && linf < 1.0, "linf {linf}");
    // exactly one state row for the scalar problem
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "index,y_final,y_exact");
    assert_eq!(rows.len(), 2);
}

#[test]
fn unknown_case_is_a_config_error() {
    let out = tasekit(&["run-case", "--case", "no-such-case"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout_of(&out).is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown case"), "{err}");
}

#[test]
fn conflicting_step_flags_are_a_usage_error() {
    let out = tasekit(&[
        "run-case", "--case", "ode-stiff", "--dt", "1.0", "--dt-ratio", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_tase_order_is_a_config_error() {
    let out = tasekit(&["run-case", "--case", "ode-stiff", "--tase", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["run-case", "--case", "diffusion-dirichlet"];
    let a = tasekit(&args);
    let b = tasekit(&args);
    assert!(a.status.success() && b.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = std::env::temp_dir().join("tasekit-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("dirichlet.csv");
    let piped = tasekit(&["run-case", "--case", "diffusion-dirichlet"]);
    let filed = tasekit(&[
        "run-case",
        "--case",
        "diffusion-dirichlet",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(filed.status.success());
    assert!(filed.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    assert_eq!(written, piped.stdout);
    std::fs::remove_file(&path).ok();
}

#[test]
fn unwritable_out_path_is_a_config_error() {
    let out = tasekit(&[
        "run-case",
        "--case",
        "ode-stiff",
        "--out",
        "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diverged_run_still_exits_zero() {
    // The polar case without preconditioning blows past the divergence
    // norm within a handful of steps.
    let out = tasekit(&["run-case", "--case", "polar", "--tase", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert_eq!(metadata_value(&text, "diverged"), "true");
    let step: usize = metadata_value(&text, "diverged_at_step").parse().unwrap();
    assert!(step <= 10, "diverged at step {step}");
}

#[test]
fn converge_emits_four_rows_and_an_order() {
    let out = tasekit(&["converge", "--case", "ode-stiff"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 5, "header + 4 refinement rows");
    let order: f64 = metadata_value(&text, "observed_order_linf").parse().unwrap();
    assert!(order > 1.0, "order {order}");
}

#[test]
fn dt_ratio_is_recorded_against_the_tightest_scale() {
    let out = tasekit(&[
        "run-case", "--case", "ode-stiff", "--dt-ratio", "10000",
    ]);
    let text = stdout_of(&out);
    // stability dt is 0.2, so ratio 1e4 means dt = 2000 over horizon 2e4
    assert_eq!(metadata_value(&text, "steps"), "10");
    let dt: f64 = metadata_value(&text, "dt").parse().unwrap();
    assert!((dt - 2000.0).abs() < 1e-9);
}

#[test]
fn imag_scan_row_count_matches_samples() {
    let out = tasekit(&[
        "imag-scan", "--scheme", "ERK2", "--tase", "2", "--samples", "64", "--ymax", "1e8",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 65, "header + origin + 64 log-spaced samples");
    let max: f64 = metadata_value(&text, "max_abs").parse().unwrap();
    assert!(max <= 1.0 + 1e-9, "midpoint with p=2 at its default alpha stays bounded, got {max}");
}

#[test]
fn stability_map_grid_flag_controls_row_count() {
    let out = tasekit(&[
        "stability-map", "--scheme", "ERK1", "--tase", "1", "--grid", "11x13",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 11 * 13);
    let bad = tasekit(&["stability-map", "--scheme", "ERK1", "--grid", "11by13"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn scheme_names_are_case_insensitive_with_rk_aliases() {
    let a = tasekit(&["run-case", "--case", "ode-stiff", "--scheme", "rk2"]);
    let b = tasekit(&["run-case", "--case", "ode-stiff", "--scheme", "ERK2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
