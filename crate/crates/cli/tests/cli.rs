use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scalarflat"))
        .current_dir(dir)
        .env_remove("SCALARFLAT_OUT")
        .args(args)
        .output()
        .unwrap()
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path.join("report.json")).unwrap()).unwrap()
}

#[test]
fn dirichlet_flat_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--mode", "dirichlet", "--grid", "41x4", "--lambda-steps", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&dir.path().join("out"));
    assert_eq!(r["mode"], "dirichlet");
    assert_eq!(r["extrema"]["phi"]["min"], 1.0);
    assert!(dir.path().join("out/fields.csv").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("job.toml"),
        "mode = \"meancurv\"\nf = 0.1\nbeta = 3.0\ngrid = \"41x1\"\nout = \"from-config\"\n",
    )
    .unwrap();
    let out = run(dir.path(), &["--config", "job.toml", "--grid", "81x1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&dir.path().join("from-config"));
    assert_eq!(r["mode"], "meancurv");
    let csv = std::fs::read_to_string(dir.path().join("from-config/fields.csv")).unwrap();
    assert_eq!(csv.lines().count(), 82);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_scalarflat"))
        .current_dir(dir.path())
        .env("SCALARFLAT_OUT", "env-out")
        .args(["--mode", "oracle", "--f", "0.1", "--beta", "3", "--grid", "11x1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let a = report(&dir.path().join("env-out"))["scalars"]["a"].as_f64().unwrap();
    assert!((a - 0.1 * (1.0 + a).powi(3)).abs() < 1e-12, "{a}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // config errors
    assert_eq!(run(dir.path(), &["--mode", "nope"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["--mode", "meancurv"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["--mode", "dirichlet", "--tol", "0"]).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.toml"), "mode = \"dirichlet\"\n\ngrid = 3\n").unwrap();
    let out = run(dir.path(), &["--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("grid"), "{err}");

    // solve failure, with the failure recorded in the report
    let out = run(dir.path(), &["--mode", "meancurv", "--f", "0.16", "--beta", "3", "--grid", "41x1", "--out", "fail"]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&dir.path().join("fail"));
    assert_eq!(r["failure"]["stage"], "sub/supersolutions");
    assert!(String::from_utf8_lossy(&out.stderr).contains("no supersolution"));
}

#[test]
fn dump_system_writes_triplets() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["--mode", "dirichlet", "--metric", "conformal:1,0,1", "--grid", "21x1", "--lambda-steps", "2", "--dump-system", "sys.txt"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("sys.txt")).unwrap();
    assert!(text.lines().count() > 21);
}

#[test]
fn negative_f_from_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--mode", "oracle", "--f", "-1", "--beta", "3", "--grid", "11x1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let u1 = report(&dir.path().join("out"))["scalars"]["u(1)"].as_f64().unwrap();
    assert!((u1 - 0.68233).abs() < 1e-5);
}
