//! End-to-end tests of the `qtherm` binary: output formats, exit
//! codes, and the documented example invocations.

use std::process::{Command, Output};

use serde_json::Value;

const PI: &str = "3.141592653589793";
const LN_2: &str = "0.6931471805599453";
const HEADER: &str =
    "t,t_tilde,omega_t,coupling_t,X,Y,Z,U_over_Eg,nu,thermal_residual_y,thermal_residual_hyp";

fn qtherm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtherm"))
        .args(args)
        .env_remove("QT_DEFAULT_TOL")
        .output()
        .expect("binary should run")
}

fn qtherm_with_tol(args: &[&str], tol: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtherm"))
        .args(args)
        .env("QT_DEFAULT_TOL", tol)
        .output()
        .expect("binary should run")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

fn record(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("stdout is a JSON record")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exits normally")
}

fn field(v: &Value, path: &[&str]) -> f64 {
    let mut cur = v;
    for p in path {
        cur = &cur[p];
    }
    cur.as_f64()
        .unwrap_or_else(|| panic!("{} is not a number: {cur}", path.join(".")))
}

/// Data rows of a CSV output (header checked, comments skipped).
fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER), "header must be first");
    lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            l.split(',')
                .map(|x| x.parse().expect("numeric cell"))
                .collect()
        })
        .collect()
}

#[test]
fn tune_sds_exact_reports_closed_forms_and_twin() {
    let out = qtherm(&[
        "tune",
        "--beta-eg",
        LN_2,
        "--mode",
        "sds-exact",
        "--format",
        "record",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let rec = record(&out);
    assert_eq!(rec["outputs"]["index"]["l"], 0);
    assert_eq!(rec["outputs"]["index"]["n"], 1);
    let w = field(&rec, &["outputs", "params", "omega_prime"]);
    let k = field(&rec, &["outputs", "params", "coupling"]);
    let tau = field(&rec, &["outputs", "params", "tau_tilde"]);
    assert!((w - 3.0f64.sqrt().recip()).abs() < 1e-15);
    assert!((k - 4.0 / 3.0).abs() < 1e-15);
    assert!((tau - 3.0f64.sqrt() / 4.0).abs() < 1e-15);
    assert_eq!(rec["outputs"]["twin"]["index"]["l"], 1);
    assert_eq!(rec["outputs"]["twin"]["index"]["n"], 0);
    let tw = field(&rec, &["outputs", "twin", "params", "omega_prime"]);
    let tk = field(&rec, &["outputs", "twin", "params", "coupling"]);
    assert!((tw - 3.0f64.sqrt()).abs() < 1e-15);
    assert!((tk + 4.0 / 3.0).abs() < 1e-15);
}

#[test]
fn tune_rejects_off_set_targets_with_ranked_suggestions() {
    let out = qtherm(&["tune", "--beta-eg", PI, "--mode", "sds-exact"]);
    assert_eq!(code(&out), 3);
    let err = stderr(&out);
    assert!(err.contains("not on the discrete set"), "stderr: {err}");
    let first = err.find("(l, n) = (11, 12)").expect("(11, 12) suggested");
    let second = err.find("(l, n) = (22, 24)").expect("(22, 24) suggested");
    assert!(first < second, "suggestions must be fastest first");
}

#[test]
fn tune_newton_converges_for_an_off_set_target() {
    let out = qtherm(&[
        "tune",
        "--beta-eg",
        PI,
        "--mode",
        "newton",
        "--format",
        "record",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let rec = record(&out);
    assert_eq!(rec["outputs"]["solution"]["converged"], true);
    let residual = field(&rec, &["outputs", "solution", "residual_norm"]);
    assert!(residual <= 1e-8, "residual {residual}");
    // The nearest-in-temperature seed stalls; a farther set member on
    // the suggestion front carries the iteration home.
    let trials = rec["outputs"]["trials"].as_array().expect("trials array");
    assert!(trials.len() >= 2, "expected a retried seed, got {trials:?}");
    assert_eq!(trials[0]["seed"]["l"], 11);
    assert_eq!(trials[0]["converged"], false);
    assert_eq!(rec["outputs"]["seed"]["l"], 21);
    assert_eq!(rec["outputs"]["seed"]["n"], 23);
    let tau = field(&rec, &["outputs", "solution", "tau_tilde"]);
    assert!((tau - 11.274345).abs() < 1e-2, "tau_tilde {tau}");
}

#[test]
fn tune_envelope_brackets_the_set() {
    let out = qtherm(&[
        "tune",
        "--beta-eg",
        LN_2,
        "--mode",
        "envelope",
        "--format",
        "record",
    ]);
    assert_eq!(code(&out), 0);
    let rec = record(&out);
    let beta = 0.6931471805599453f64;
    let lower_w = field(&rec, &["outputs", "lower", "omega_prime"]);
    let lower_k = field(&rec, &["outputs", "lower", "coupling"]);
    let upper_w = field(&rec, &["outputs", "upper", "omega_prime"]);
    let upper_k = field(&rec, &["outputs", "upper", "coupling"]);
    assert!((lower_w - (0.5 * beta).tanh().sqrt()).abs() < 1e-12);
    assert!((lower_k - 1.0 / beta.sinh()).abs() < 1e-12);
    assert!((upper_w - lower_w.recip()).abs() < 1e-12);
    assert!((upper_k + lower_k).abs() < 1e-12);
    // At a set temperature the branches pass through the member pair.
    assert!((lower_w - 3.0f64.sqrt().recip()).abs() < 1e-12);
    assert!((lower_k - 4.0 / 3.0).abs() < 1e-12);
}

#[test]
fn tune_has_no_csv_form() {
    let out = qtherm(&["tune", "--beta-eg", LN_2, "--format", "csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn approx_reproduces_the_reference_first_row_and_fastest_case() {
    let out = qtherm(&["approx", "--beta-eg", PI, "--format", "record"]);
    assert_eq!(code(&out), 0);
    let rec = record(&out);
    let rows = rec["outputs"]["rows"].as_array().expect("rows");
    assert!(!rows.is_empty());
    assert_eq!(rows[0]["l"], 11);
    assert_eq!(rows[0]["n"], 12);
    assert!((field(&rows[0], &["beta_eg"]) - 3.178).abs() < 1e-3);
    assert!((field(&rows[0], &["rel_error_percent"]) - 1.16).abs() < 5e-3);
    assert!((field(&rows[0], &["tau_tilde"]) - 5.99).abs() < 1e-2);

    let out = qtherm(&[
        "approx",
        "--beta-eg",
        LN_2,
        "--rel-tol",
        "1e-12",
        "--format",
        "record",
    ]);
    assert_eq!(code(&out), 0);
    let rec = record(&out);
    let rows = rec["outputs"]["rows"].as_array().expect("rows");
    assert_eq!(rows.len(), 1, "log 2 is on the set: one exact row");
    assert_eq!(rows[0]["l"], 0);
    assert_eq!(rows[0]["n"], 1);
    assert!((field(&rows[0], &["tau_tilde"]) - 0.43301).abs() < 1e-5);
}

#[test]
fn approx_tau_cap_filters_slow_protocols() {
    let out = qtherm(&[
        "approx", "--beta-eg", PI, "--tau-max", "12", "--format", "record",
    ]);
    assert_eq!(code(&out), 0);
    let rec = record(&out);
    for row in rec["outputs"]["rows"].as_array().expect("rows") {
        assert!(field(row, &["tau_tilde"]) <= 12.0);
    }
}

#[test]
fn temperature_flag_is_the_reciprocal_of_beta() {
    let by_beta = qtherm(&["tune", "--beta-eg", LN_2, "--format", "record"]);
    let by_temp = qtherm(&[
        "tune",
        "--temperature",
        "1.4426950408889634",
        "--format",
        "record",
    ]);
    assert_eq!(code(&by_beta), 0);
    assert_eq!(code(&by_temp), 0);
    assert_eq!(
        record(&by_beta)["outputs"],
        record(&by_temp)["outputs"],
        "1/T and beta forms must agree"
    );
}

#[test]
fn evolve_by_index_lands_on_the_closed_form_endpoint() {
    let out = qtherm(&["evolve", "--index", "0,1", "--samples", "16"]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 17, "initial sample plus sixteen per stage");
    let first = &rows[0];
    assert_eq!(first[0], 0.0);
    assert_eq!(first[7], 1.0, "U(0) must be exactly E_g");
    let last = rows.last().expect("nonempty");
    let (x, y, z, u) = (last[4], last[5], last[6], last[7]);
    assert!((x - 17.0 / 15.0).abs() < 1e-12);
    assert!(y.abs() < 1e-12);
    assert!((z + 8.0 / 15.0).abs() < 1e-12);
    assert!((u - 5.0 / 3.0).abs() < 1e-12);
    assert!((last[1] - 0.4330127018922193).abs() < 1e-12, "t_tilde at tau");
}

#[test]
fn evolve_off_curve_params_fail_thermality() {
    let out = qtherm(&[
        "evolve",
        "--params",
        "1.7,0.9,0.37",
        "--samples",
        "8",
        "--format",
        "record",
    ]);
    assert_eq!(code(&out), 0, "an off-curve endpoint is data, not an error");
    let rec = record(&out);
    assert_eq!(rec["outputs"]["final"]["thermal"], false);
    assert_eq!(rec["outputs"]["final"]["beta_eg"], Value::Null);
    assert!(field(&rec, &["outputs", "final", "thermal_residual_hyp"]) > 1e-3);
}

#[test]
fn evolve_tail_is_stationary_after_thermalization() {
    let out = qtherm(&[
        "evolve", "--index", "0,1", "--samples", "40", "--tail", "10",
    ]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 81, "initial + stage + tail samples");
    let at_tau = &rows[40];
    assert!((at_tau[1] - 0.4330127018922193).abs() < 1e-12);
    for row in &rows[41..] {
        for c in 4..=6 {
            assert!(
                (row[c] - at_tau[c]).abs() < 1e-9,
                "tail row at t = {} drifted in column {c}",
                row[0]
            );
        }
    }
}

#[test]
fn evolve_writes_csv_to_file_in_record_mode() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("trajectory.csv");
    let out = qtherm(&[
        "evolve",
        "--index",
        "0,1",
        "--samples",
        "4",
        "--out",
        path.to_str().expect("utf-8 path"),
        "--format",
        "record",
    ]);
    assert_eq!(code(&out), 0);
    let rec = record(&out);
    assert_eq!(rec["outputs"]["rows"], 5);
    let written = std::fs::read_to_string(&path).expect("file written");
    let rows = csv_rows(&written);
    assert_eq!(rows.len(), 5);
}

#[test]
fn unwritable_output_path_is_an_io_failure() {
    let out = qtherm(&[
        "evolve",
        "--index",
        "0,1",
        "--samples",
        "2",
        "--out",
        "/nonexistent-dir/trajectory.csv",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("cannot write"));
}

#[test]
fn sequence_round_trip_checkpoints_pass() {
    let out = qtherm(&["sequence", "0,1", "11,12", "--samples", "8"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let checkpoints: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("# checkpoint"))
        .collect();
    assert_eq!(checkpoints.len(), 3, "thermal, ground, thermal");
    for c in &checkpoints {
        assert!(c.ends_with(" pass"), "checkpoint line: {c}");
    }
    assert!(text.contains("# sequence all_passed=true"));

    let out = qtherm(&[
        "sequence", "0,1", "11,12", "--samples", "2", "--format", "record",
    ]);
    assert_eq!(code(&out), 0);
    let rec = record(&out);
    assert_eq!(rec["outputs"]["all_passed"], true);
    let beta = field(&rec, &["outputs", "final", "beta_eg"]);
    assert!((beta - 24.0f64.ln()).abs() < 1e-9, "final beta_eg {beta}");
}

#[test]
fn sequence_covers_both_directions_and_rethermalization() {
    for (initial, target) in [("0,1", "0,1"), ("11,12", "0,1")] {
        let out = qtherm(&[
            "sequence", initial, target, "--samples", "2", "--format", "record",
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        let rec = record(&out);
        assert_eq!(rec["outputs"]["all_passed"], true);
        let beta = field(&rec, &["outputs", "final", "beta_eg"]);
        assert!(
            (beta - 2.0f64.ln()).abs() < 1e-9,
            "{initial} -> {target} finished at beta_eg {beta}"
        );
    }
}

#[test]
fn environment_tolerance_is_validated_and_applied() {
    let out = qtherm_with_tol(&["sequence", "0,1", "11,12", "--samples", "2"], "banana");
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("QT_DEFAULT_TOL"));

    let out = qtherm_with_tol(&["sequence", "0,1", "11,12", "--samples", "2"], "1e-30");
    assert_eq!(code(&out), 1, "roundoff exceeds a 1e-30 tolerance");
    assert!(stdout(&out).contains(" fail"));

    let out = qtherm_with_tol(&["sequence", "0,1", "11,12", "--samples", "2"], "1e-6");
    assert_eq!(code(&out), 0);
}

#[test]
fn conflicting_or_missing_stage_flags_are_usage_errors() {
    assert_eq!(
        code(&qtherm(&["evolve", "--index", "0,1", "--params", "1,1,1"])),
        2
    );
    assert_eq!(code(&qtherm(&["evolve"])), 2);
    assert_eq!(code(&qtherm(&["tune"])), 2);
    assert_eq!(
        code(&qtherm(&["tune", "--beta-eg", "1", "--temperature", "1"])),
        2
    );
    assert_eq!(code(&qtherm(&["frobnicate"])), 2);
}

#[test]
fn domain_violations_exit_three() {
    assert_eq!(code(&qtherm(&["tune", "--beta-eg=-2"])), 3);
    let out = qtherm(&["evolve", "--params=0.5,-1,1", "--samples", "2"]);
    assert_eq!(code(&out), 3, "unstable minus mode is a domain error");
}

#[test]
fn run_records_roundtrip_bit_exactly() {
    let out = qtherm(&[
        "evolve", "--index", "0,1", "--samples", "4", "--format", "record",
    ]);
    let first = record(&out);
    let reparsed: Value =
        serde_json::from_str(&serde_json::to_string(&first).expect("serializes"))
            .expect("reparses");
    assert_eq!(first, reparsed, "serialization must not lose precision");
    let x = field(&first, &["outputs", "final", "r", "x"]);
    assert!((x - 17.0 / 15.0).abs() < 1e-15);
}

#[test]
fn verify_suites_pass_on_a_pristine_build() {
    let all = qtherm(&["verify", "all"]);
    assert_eq!(code(&all), 0, "stdout: {}", stdout(&all));
    assert!(stdout(&all).contains(" 0 failed"));

    let sds = qtherm(&["verify", "sds"]);
    assert_eq!(code(&sds), 0);
    assert!(stdout(&sds).contains("l,n <= 50"));

    let dynamics = qtherm(&["verify", "dynamics", "--format", "record"]);
    assert_eq!(code(&dynamics), 0);
    let rec = record(&dynamics);
    assert_eq!(rec["outputs"]["failed"], 0);
}

#[test]
fn csv_schema_is_stable() {
    // The header is load-bearing for downstream consumers; spell it
    // out so an accidental rename in the library fails here.
    for args in [
        vec!["evolve", "--index", "0,1", "--samples", "2"],
        vec!["sequence", "0,1", "1,2", "--samples", "2"],
    ] {
        let out = qtherm(&args);
        let text = stdout(&out);
        assert_eq!(
            text.lines().next(),
            Some(HEADER),
            "args: {args:?}"
        );
    }
}
