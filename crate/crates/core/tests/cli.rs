use std::fs;
use std::process::Command;

use pencilpow::harness::output::read_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pencilpow"))
}

#[test]
fn run_merges_file_and_flags_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.conf");
    let out = dir.path().join("out");
    fs::write(&config, "# small run\nexperiment = general_square\nn = 32\ntrials = 2\np_max = 9\nspectrum = disk\n").unwrap();
    let status = bin()
        .args(["run", "--config", config.to_str().unwrap(), "--n", "8", "--p-max", "3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));

    let records = read_csv(&out.join("general_square.csv")).unwrap();
    assert_eq!(records.len(), 2 * 3);
    assert!(records.iter().all(|r| r.p >= 1 && r.p <= 3));
    assert!(out.join("general_square.svg").exists());
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    for line in ["n = 8", "trials = 2", "p_max = 3", "spectrum = disk", "file = general_square.csv"] {
        assert!(manifest.lines().any(|l| l == line), "missing `{line}` in\n{manifest}");
    }
}

#[test]
fn run_rejects_bad_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--experiment", "general_square", "--n", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = bin().args(["run", "--experiment", "nonsense"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn bounds_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["bounds", "--trials", "1", "--p-max", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("bound_report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 of 2 rows exceed a bound"));
}

#[test]
fn quick_check_passes() {
    let out = bin().args(["check", "--quick", "--seed", "3"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
