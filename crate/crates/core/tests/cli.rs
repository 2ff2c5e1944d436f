use std::fs;
use std::process::Command;

use wfem::experiments::{parse_report, CSV_HEADER, INTERP_GRID_POINTS, INTERP_HEADER};

fn wfem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wfem"))
}

#[test]
fn convergence_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv.csv");
    let run = wfem()
        .args(["convergence", "--s", "0.3", "--s", "0.6", "--levels", "2..3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("s = 0.6"));
    let report = parse_report(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.series.len(), 2);
    assert_eq!(report.series[1].rows.len(), 2);
    assert_eq!(report.series[1].rates_hs.len(), 1);
}

#[test]
fn csv_goes_to_stdout_without_out() {
    let run = wfem().args(["exact", "--s", "0.5", "--levels", "3"]).output().unwrap();
    assert!(run.status.success());
    let text = String::from_utf8(run.stdout).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn json_config_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("b.csv");
    fs::write(
        &cfg,
        format!(
            r#"{{"experiment": "bonito", "s_values": [0.4], "levels": [2, 3], "out_path": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let run = wfem().arg("--config").arg(&cfg).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stdout));
    let report = parse_report(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.series[0].s, 0.4);

    // a subcommand must agree with the file
    let run = wfem().arg("--config").arg(&cfg).arg("exact").output().unwrap();
    assert_eq!(run.status.code(), Some(1));
}

#[test]
fn invalid_input_fails_with_a_failure_line() {
    let run = wfem().args(["convergence", "--s", "0.99"]).output().unwrap();
    assert_eq!(run.status.code(), Some(1));
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("FAIL ")), "{stdout}");

    let run = wfem().args(["exact", "--delta", "poly4"]).output().unwrap();
    assert_eq!(run.status.code(), Some(1));
    let run = wfem().args(["bonito", "--epsilon", "0"]).output().unwrap();
    assert_eq!(run.status.code(), Some(1));
    let run = wfem().args(["convergence", "--levels", "4..2"]).output().unwrap();
    assert!(!run.status.success());
    let run = wfem().output().unwrap();
    assert!(!run.status.success());
}

#[test]
fn dump_matrix_writes_symmetric_text() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.txt");
    let run = wfem().args(["convergence", "--s", "0.4", "--levels", "2", "--dump-matrix"]).arg(&path).output().unwrap();
    assert!(run.status.success());
    let rows: Vec<Vec<f64>> = fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 5);
        assert!(row[i] > 0.0);
        for (j, v) in row.iter().enumerate() {
            assert_eq!(*v, rows[j][i]);
        }
    }
}

#[test]
fn interp_demo_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("interp.csv");
    let run = wfem().args(["interp-demo", "--out"]).arg(&out).output().unwrap();
    assert!(run.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some(INTERP_HEADER));
    // three default values of s
    assert_eq!(text.lines().count(), 3 * INTERP_GRID_POINTS + 1);
}
