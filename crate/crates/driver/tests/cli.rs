use std::path::Path;
use std::process::{Command, Output};

fn breathe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_breathe")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn busch_levels_writes_provenance_header() {
    let tmp = tempfile::tempdir().unwrap();
    let o = breathe(tmp.path(), &["busch", "levels", "--g", "0,1,1000", "-o", "levels.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(tmp.path().join("levels.csv")).unwrap();
    assert!(text.lines().next().unwrap().starts_with("# "));
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(body[0].starts_with("g,g_rel,breathing_relative"));
    assert_eq!(body.len(), 4);
    let f0: f64 = body[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((f0 - 2.0).abs() < 1e-12);
}

#[test]
fn run_then_spectrum_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let o = breathe(tmp.path(), &["run", "--g", "1", "--out", "res"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["series.csv", "spectrum.csv", "peaks.csv", "summary.csv", "config.toml"] {
        assert!(tmp.path().join("res").join(f).is_file(), "{f}");
    }
    let o = breathe(tmp.path(), &["spectrum", "res/series.csv", "--out", "again"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("again/spectrum.csv").is_file());
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = breathe(tmp.path(), &["run", "--g", "-1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("quench.g"));

    std::fs::write(tmp.path().join("bad.toml"), "[quench]\nbogus = 1\n").unwrap();
    let o = breathe(tmp.path(), &["run", "--config", "bad.toml"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let o = breathe(tmp.path(), &["ed-quench", "-n", "8", "-m", "40"]);
    assert_eq!(code(&o), 2);
    assert!(!tmp.path().join(".breathe-cache").exists());
}

#[test]
fn numerical_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = breathe(
        tmp.path(),
        &[
            "gp-quench",
            "--g",
            "20",
            "-n",
            "11",
            "--periods",
            "4",
            "--set",
            "gp.nodes=256",
            "--set",
            "gp.half_width=6.0",
        ],
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_input_is_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = breathe(tmp.path(), &["spectrum", "nope.csv"]);
    assert_eq!(code(&o), 1);
}
