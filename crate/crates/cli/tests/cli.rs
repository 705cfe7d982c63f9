use std::fs;
use std::path::Path;
use std::process::Command;

fn nep() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nep"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

const STRING_RUN: &str = r#"
algorithm = "rsrr"
N = 40
L = 1
seed = 3

[problem]
builtin = "loaded_string"
n = 60

[region]
kind = "interval"
a = 3.0
b = 2000.0

[output]
directory = "out"
prefix = "string"
"#;

#[test]
fn solve_writes_tables_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), STRING_RUN);
    let out = nep().arg("solve").arg(&cfg).env("NEP_THREADS", "2").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/string.eigenpairs.csv")).unwrap();
    assert!(csv.starts_with("index,re,im,residual,weighted_residual,inside"));
    assert!(csv.lines().count() > 5);
    assert!(dir.path().join("out/string.metadata.json").is_file());
    assert!(dir.path().join("out/string.subspace_sigma.csv").is_file());

    let report_dir = dir.path().join("again");
    let out = nep()
        .args(["report", dir.path().join("out/string.eigenpairs.json").to_str().unwrap()])
        .args(["--out-dir", report_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(report_dir.join("report.eigenpairs.csv")).unwrap(), csv);
}

#[test]
fn probe_dumps_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), STRING_RUN);
    let out = nep().arg("probe").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("out/string.probe.json")).unwrap();
    let table = nep_core::probing::ProbeTable::from_json(&text).unwrap();
    assert_eq!(table.len(), 40);
}

#[test]
fn unaccepted_gap_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = STRING_RUN.replace("seed = 3", "seed = 3\ntol_gap = 1e200");
    let cfg = write_config(dir.path(), &body);
    let out = nep().arg("solve").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &STRING_RUN.replace("N = 40\n", ""));
    let out = nep().arg("solve").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`N`"));
    let out = nep().arg("solve").arg(dir.path().join("missing.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = nep().arg("solve").arg(&cfg).env("NEP_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
