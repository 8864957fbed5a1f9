use std::process::Command;

fn mixgas() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mixgas"))
}

#[test]
fn printed_defaults_parse_back() {
    let out = mixgas().arg("--print-defaults").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed = mixgas::config::parse_config(&text).unwrap();
    assert_eq!(parsed, mixgas::config::RunConfig::default());
}

#[test]
fn missing_config_is_a_validation_error() {
    let out = mixgas().args(["--config", "/nonexistent/run.cfg"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_key_is_reported_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "[grid]\ncells = 16\ncolour = blue\n").unwrap();
    let out = mixgas().arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grid.colour"), "{err}");
    assert!(err.contains('3'), "{err}");
}

#[test]
fn bad_flag_and_bad_mode_exit_one() {
    assert_eq!(mixgas().arg("--frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(mixgas().args(["--mode", "dance"]).output().unwrap().status.code(), Some(1));
}

#[test]
fn check_mode_passes() {
    let out = mixgas().args(["--mode", "check", "--seed", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
}

#[test]
fn type1_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "mode = run-type1\n[grid]\ncells = 16\n[time]\nt_end = 0.02\n").unwrap();
    let out = mixgas().arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = std::fs::read_to_string(dir.path().join("o/trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,cell,x,rho_1,rho_2,theta,p\n"));
    let budget = std::fs::read_to_string(dir.path().join("o/budget.csv")).unwrap();
    assert!(budget.starts_with("t,mass_1,mass_2,energy"));
}
