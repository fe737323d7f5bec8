use std::process::Command;

fn hpefie() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hpefie"))
}

#[test]
fn poincare_suite_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = hpefie().args(["run", "--suite", "poincare", "--p-max", "3", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["measured"] == 0.0));
}

#[test]
fn report_goes_to_stdout_without_out_dir() {
    let out = hpefie().args(["run", "--suite", "algebraic", "--p-max", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["suite"], "algebraic");
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS edge generators are divergence-free"));
}

#[test]
fn failed_check_exits_one_with_detail() {
    let dir = tempfile::tempdir().unwrap();
    let thresholds = dir.path().join("t.json");
    std::fs::write(&thresholds, r#"{"extinction": 1e-9}"#).unwrap();
    let out = hpefie()
        .args(["run", "--suite", "extinction", "--fixture", "cube", "--p", "0", "--thresholds"])
        .arg(&thresholds)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("suite extinction failed: extinction error at the finest level")
    );
}

#[test]
fn screen_interpolation_with_graded_degrees() {
    let out = hpefie()
        .args([
            "run",
            "--suite",
            "interpolation",
            "--fixture",
            "L-screen",
            "--graded",
            "0:0:2",
            "--levels",
            "2",
            "--samples",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_invocations_exit_nonzero() {
    let cases: [&[&str]; 5] = [
        &["run", "--suite", "nonsense"],
        &["run", "--suite", "rates", "--fixture", "torus"],
        &["run", "--suite", "rates", "--mesh", "/nonexistent.mesh"],
        &["run", "--suite", "rates", "--fixture", "cube", "--levels", "0"],
        &["run", "--suite", "extinction", "--fixture", "square-screen"],
    ];
    for args in cases {
        let out = hpefie().args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
