//! End-to-end runs of the binary: flags, config files, recorded outputs
//! and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SWEEP_HEADER: &str = "E,k,pq,T_phase,T_steinberg,T_dwell,P_t,P_r,v_eff,regime,superluminal,note";
const COMPARE_HEADER: &str = "E,T_phase,T_steinberg,T_dwell,ratio,residual_phase,residual_steinberg";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tunneltime"))
        .args(args)
        .output()
        .unwrap()
}

fn run_expecting(args: &[&str], code: i32) -> Output {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "args {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

fn data_rows(path: &Path, header: &str) -> Vec<Vec<String>> {
    let body = std::fs::read_to_string(path).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next().unwrap(), header, "header mismatch in {path:?}");
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn sweep_writes_the_expected_rectangle_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "sweep.csv");
    let run = run_expecting(
        &[
            "sweep", "--potential", "barrier", "--V", "2", "--a", "1", "--E-min", "0.5",
            "--E-max", "1.5", "--steps", "11", "--out", out.to_str().unwrap(),
        ],
        0,
    );
    assert!(text(&run.stdout).contains("wrote 11 rows"));

    let rows = data_rows(&out, SWEEP_HEADER);
    assert_eq!(rows.len(), 11);
    let middle = &rows[5];
    assert_eq!(middle[0], "1.00000000000");
    assert_eq!(middle[1], "1.41421356237");
    // tanh(sqrt(2) * 1) / 1 at the half-height energy.
    assert_eq!(middle[3], "0.888385561586");
    let ts: f64 = middle[4].parse().unwrap();
    let td: f64 = middle[5].parse().unwrap();
    assert!((ts - td).abs() < 1e-9, "weak {ts} vs dwell {td}");
    for row in &rows {
        let pt: f64 = row[6].parse().unwrap();
        let pr: f64 = row[7].parse().unwrap();
        assert!((pt + pr - 1.0).abs() < 1e-10);
        assert_eq!(row[10], "", "no light speed given, so no superluminal flag");
        assert!(row[9].starts_with("sub_barrier"));
    }
}

#[test]
fn sweep_zero_height_rows_are_free_flight() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "free.csv");
    run_expecting(
        &[
            "sweep", "--potential", "barrier", "--V", "0", "--a", "2", "--E-min", "0.5",
            "--E-max", "2", "--steps", "4", "--out", out.to_str().unwrap(),
        ],
        0,
    );
    for row in data_rows(&out, SWEEP_HEADER) {
        let e: f64 = row[0].parse().unwrap();
        let k = (2.0 * e).sqrt();
        let t: f64 = row[3].parse().unwrap();
        assert!((t - 2.0 / k).abs() < 1e-10 * t);
        assert_eq!(row[9], "free");
    }
}

#[test]
fn sweep_marks_threshold_rows_and_keeps_going() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "threshold.csv");
    let run = run_expecting(
        &[
            "sweep", "--potential", "barrier", "--V", "2", "--a", "1", "--E-min", "1",
            "--E-max", "3", "--steps", "3", "--out", out.to_str().unwrap(),
        ],
        0,
    );
    assert!(text(&run.stdout).contains("(1 threshold rows excluded from the data columns)"));
    let rows = data_rows(&out, SWEEP_HEADER);
    assert_eq!(rows.len(), 3);
    assert_eq!(
        rows[1].join(","),
        "2.00000000000,2.00000000000,,,,,,,,threshold,,threshold"
    );
    assert!(rows[0][9].starts_with("sub_barrier"));
    assert!(rows[2][9].starts_with("above_barrier"));
}

#[test]
fn sweep_rejects_a_degenerate_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "never.csv");
    let run = run_expecting(
        &[
            "sweep", "--potential", "barrier", "--V", "2", "--a", "1", "--E-min", "1",
            "--E-max", "1", "--steps", "1", "--out", out.to_str().unwrap(),
        ],
        2,
    );
    assert!(text(&run.stderr).contains("error:"));
    assert!(!out.exists());
}

#[test]
fn sweep_overflow_rows_exit_3_but_the_file_still_lands() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "overflow.csv");
    // p*a ~ 759 for every energy here: the evanescent envelope would
    // overflow, so each row is refused while the run completes.
    let run = run_expecting(
        &[
            "sweep", "--potential", "barrier", "--V", "2e5", "--a", "1.2", "--E-min", "0.5",
            "--E-max", "1.5", "--steps", "3", "--out", out.to_str().unwrap(),
        ],
        3,
    );
    assert!(text(&run.stdout).contains("wrote 0 rows"));
    assert!(text(&run.stderr).contains("E = "));
    assert_eq!(data_rows(&out, SWEEP_HEADER).len(), 0);
}

#[test]
fn sweep_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (tmp(&dir, "one.csv"), tmp(&dir, "two.csv"));
    for out in [&a, &b] {
        run_expecting(
            &[
                "sweep", "--potential", "barrier", "--V", "2", "--a", "1.3", "--E-min", "0.2",
                "--E-max", "3.7", "--steps", "29", "--out", out.to_str().unwrap(),
            ],
            0,
        );
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn sweep_json_format_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "sweep.json");
    run_expecting(
        &[
            "sweep", "--potential", "barrier", "--V", "2", "--a", "1", "--E-min", "0.5",
            "--E-max", "1.5", "--steps", "5", "--format", "json", "--out",
            out.to_str().unwrap(),
        ],
        0,
    );
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0]["E"].as_f64().unwrap(), 0.5);
    assert!(rows[0]["T_phase"].as_f64().unwrap() > 0.0);
    assert_eq!(rows[0]["regime"].as_str().unwrap(), "sub_barrier");
}

#[test]
fn sweep_config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tmp(&dir, "cfg.json");
    std::fs::write(
        &cfg,
        r#"{"potential": "barrier", "V": 2.0, "a": 1.0, "E_min": 0.5, "E_max": 1.5, "steps": 3}"#,
    )
    .unwrap();
    let out = tmp(&dir, "merged.csv");
    run_expecting(
        &[
            "sweep", "--config", cfg.to_str().unwrap(), "--steps", "7", "--out",
            out.to_str().unwrap(),
        ],
        0,
    );
    assert_eq!(data_rows(&out, SWEEP_HEADER).len(), 7, "flag overrides config");
}

#[test]
fn sweep_config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tmp(&dir, "typo.json");
    std::fs::write(&cfg, r#"{"potential": "barrier", "hight": 3.0}"#).unwrap();
    let run = run_expecting(&["sweep", "--config", cfg.to_str().unwrap()], 2);
    assert!(text(&run.stderr).contains("hight"));
}

#[test]
fn sweep_piecewise_stack_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tmp(&dir, "stack.json");
    std::fs::write(
        &cfg,
        r#"{
            "potential": "piecewise",
            "E_min": 0.5, "E_max": 0.9, "steps": 3,
            "segments": [
                {"x_start": 0.0, "x_end": 0.5, "v": 2.0},
                {"x_start": 0.5, "x_end": 1.5, "v": 0.0},
                {"x_start": 1.5, "x_end": 2.0, "v": 2.0}
            ]
        }"#,
    )
    .unwrap();
    let out = tmp(&dir, "stack.csv");
    run_expecting(
        &["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        0,
    );
    let rows = data_rows(&out, SWEEP_HEADER);
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(row[2], "", "no single interior wavenumber for a stack");
        assert!(row[3].parse::<f64>().unwrap() > 0.0);
        assert!(row[5].parse::<f64>().unwrap() > 0.0, "dwell column filled");
        assert_eq!(row[11], "stack: phase time from numeric derivative");
    }
}

#[test]
fn sweep_step_rows_report_the_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "step.csv");
    run_expecting(
        &[
            "sweep", "--potential", "step", "--V", "2", "--b", "1", "--E-min", "0.5",
            "--E-max", "1.5", "--steps", "3", "--out", out.to_str().unwrap(),
        ],
        0,
    );
    for row in data_rows(&out, SWEEP_HEADER) {
        assert!(row[3].parse::<f64>().unwrap() > 0.0, "round-trip time present");
        assert_eq!(row[4], "", "no crossing, so no weak-measurement time");
        assert_eq!(row[5], "");
        assert_eq!(row[11], "round trip");
    }
}

#[test]
fn sweep_well_depth_is_negated() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "well.csv");
    run_expecting(
        &[
            "sweep", "--potential", "well", "--V", "2", "--a", "1", "--E-min", "0.5",
            "--E-max", "1.5", "--steps", "3", "--out", out.to_str().unwrap(),
        ],
        0,
    );
    for row in data_rows(&out, SWEEP_HEADER) {
        assert!(row[9].starts_with("above_barrier"), "E > -|V| always: {}", row[9]);
        let e: f64 = row[0].parse().unwrap();
        let beta: f64 = row[2].parse().unwrap();
        assert!((beta - (2.0 * (e + 2.0)).sqrt()).abs() < 1e-10, "interior speeds up");
    }
}

#[test]
fn sweep_delta_family_effective_height() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "delta.csv");
    run_expecting(
        &[
            "sweep", "--potential", "delta", "--C", "1", "--a", "0.1", "--delta-scaling",
            "va2", "--E-min", "0.5", "--E-max", "1.5", "--steps", "3", "--out",
            out.to_str().unwrap(),
        ],
        0,
    );
    for row in data_rows(&out, SWEEP_HEADER) {
        // V = C/a^2 = 100 here, far above every grid energy.
        let e: f64 = row[0].parse().unwrap();
        let p: f64 = row[2].parse().unwrap();
        assert!((p - (2.0 * (100.0 - e)).sqrt()).abs() < 1e-9);
        assert!(row[9].starts_with("sub_barrier"));
    }
}

#[test]
fn sweep_log_spacing_pins_the_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "log.csv");
    run_expecting(
        &[
            "sweep", "--potential", "barrier", "--V", "20", "--a", "1", "--E-min", "0.1",
            "--E-max", "10", "--steps", "3", "--spacing", "log", "--out",
            out.to_str().unwrap(),
        ],
        0,
    );
    let rows = data_rows(&out, SWEEP_HEADER);
    assert_eq!(rows[0][0], "0.100000000000");
    assert_eq!(rows[1][0], "1.00000000000");
    assert_eq!(rows[2][0], "10.0000000000");
}

#[test]
fn verify_passes_and_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "verify_report.json");
    let run = run_expecting(&["verify", "--out", out.to_str().unwrap()], 0);
    let stdout = text(&run.stdout);
    assert_eq!(stdout.matches("PASS").count(), 9, "all nine identities: {stdout}");
    assert!(!stdout.contains("FAIL"));
    assert!(stdout.contains("all identities hold"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert_eq!(report["checks"].as_array().unwrap().len(), 9);
}

#[test]
fn verify_fails_honestly_at_an_impossible_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "strict.json");
    let run = run_expecting(&["verify", "--tol", "1e-15", "--out", out.to_str().unwrap()], 1);
    let stdout = text(&run.stdout);
    assert!(stdout.contains("FAIL"));
    assert!(stdout.contains("identity failures found"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(false));
}

#[test]
fn report_reproduces_the_saturated_crossing() {
    let run = run_expecting(
        &[
            "report", "--m", "1", "--E", "1", "--V", "2", "--a", "2.8284271247461903",
            "--c", "2.8284271247461903",
        ],
        0,
    );
    let stdout = text(&run.stdout);
    assert!(stdout.contains("opacity pa = 4.00000000000"), "{stdout}");
    assert!(stdout.contains("P_t = 0.00134095068303"), "{stdout}");
    assert!(stdout.contains("opaque-barrier estimate"));
    assert!(stdout.contains("superluminal onset: a* = 2.82842712475"));
    assert!(stdout.contains("the saturated crossing outruns light"));
}

#[test]
fn report_above_the_region_has_no_onset() {
    let stdout = text(
        &run_expecting(&["report", "--E", "3", "--V", "2", "--a", "1", "--c", "5"], 0).stdout,
    );
    assert!(stdout.contains("superluminal onset: none above the region"));
    assert!(stdout.contains("weak-measurement time: not defined above the region"));
    assert!(stdout.contains("beta"));
}

#[test]
fn report_on_the_threshold_gives_one_sided_limits() {
    let stdout = text(&run_expecting(&["report", "--E", "2", "--V", "2", "--a", "1"], 0).stdout);
    assert!(stdout.contains("sits on the threshold"));
    assert!(stdout.contains("just below (E = V(1 - 1e-6))"));
    assert!(stdout.contains("just above (E = V(1 + 1e-6))"));
}

#[test]
fn report_warns_near_the_threshold() {
    let stdout = text(&run_expecting(&["report", "--E", "1.98", "--V", "2", "--a", "1"], 0).stdout);
    assert!(stdout.contains("within 5% of the threshold"));
}

#[test]
fn compare_zero_height_collapses_all_clocks() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "free_compare.csv");
    run_expecting(
        &[
            "compare", "--V", "0", "--a", "2", "--E-min", "0.5", "--E-max", "1.5", "--steps",
            "4", "--out", out.to_str().unwrap(),
        ],
        0,
    );
    for row in data_rows(&out, COMPARE_HEADER) {
        let t: f64 = row[1].parse().unwrap();
        let ts: f64 = row[2].parse().unwrap();
        let td: f64 = row[3].parse().unwrap();
        assert!((t - ts).abs() <= 1e-8 * t);
        assert!((t - td).abs() <= 1e-8 * t);
        assert!((row[4].parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn compare_rejects_energies_reaching_the_region() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "never.csv");
    let run = run_expecting(
        &[
            "compare", "--V", "2", "--a", "1", "--E-min", "0.5", "--E-max", "2.5", "--steps",
            "3", "--out", out.to_str().unwrap(),
        ],
        2,
    );
    assert!(text(&run.stderr).contains("error:"));
    assert!(!out.exists());
}
