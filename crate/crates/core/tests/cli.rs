use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ma_beamopt::io::read_solution;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ma-beamopt"))
        .arg("--quiet")
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn write_scenario(dir: &Path, body: &str) {
    fs::write(dir.join("s.json"), body).unwrap();
}

#[test]
fn solve_then_pattern() {
    let dir = tempfile::tempdir().unwrap();
    write_scenario(
        dir.path(),
        r#"{"n_antennas": 4, "aperture": 4, "signal_dirs": [60], "interference_dirs": [120]}"#,
    );
    let out = run(&["solve", "--scenario", "s.json", "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = read_solution(&dir.path().join("res/solution.json")).unwrap();
    assert_eq!(sol.scheme, "proposed");
    assert_eq!(sol.solution.apv.len(), 4);
    assert!(sol.solution.delta > 3.9);

    let pat = fs::read_to_string(dir.path().join("res/pattern.csv")).unwrap();
    assert!(pat.starts_with("angle_deg,gain,gain_db\n"));
    assert_eq!(pat.lines().count(), 362);

    let out = run(
        &[
            "pattern",
            "--scenario",
            "s.json",
            "--solution",
            "res/solution.json",
            "--grid-deg",
            "1",
            "--out",
            "p.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("p.csv")).unwrap().lines().count(),
        182
    );
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    write_scenario(
        dir.path(),
        r#"{"signal_dirs": [30, 120], "interference_dirs": [10, 150]}"#,
    );
    let out = run(
        &[
            "solve",
            "--scenario",
            "s.json",
            "--scheme",
            "fpa",
            "--eta",
            "0.01",
            "--out",
            ".",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let sol = read_solution(&dir.path().join("solution.json")).unwrap();
    assert!(sol.solution.interference_gains.iter().all(|&g| g <= 0.01 + 1e-6));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write_scenario(dir.path(), r#"{"signal_dirs": [30], "n_antenas": 3}"#);
    assert_eq!(
        run(&["solve", "--scenario", "s.json"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["solve", "--scenario", "missing.json"], dir.path()).status.code(),
        Some(2)
    );
    write_scenario(dir.path(), r#"{"signal_dirs": [30]}"#);
    assert_eq!(
        run(&["solve", "--scenario", "s.json", "--scheme", "nope"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["benchmark", "--experiment", "fig9"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(run(&["solve"], dir.path()).status.code(), Some(2));
}

#[test]
fn schemes_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["schemes"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    for s in ["proposed", "fpa", "aps", "awi"] {
        assert!(text.contains(s));
    }
}
