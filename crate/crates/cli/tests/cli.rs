use std::path::Path;
use std::process::{Command, Output};

fn elastowave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastowave")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

/// Coarse verification scenario as configuration text.
fn coarse(dir: &Path) -> String {
    let out = elastowave(&["preset", "verification-matching"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out).replace("h = 0.1", "h = 0.5").replace("end = 0.1", "end = 0.02");
    write(dir, "coarse.toml", &text)
}

#[test]
fn preset_prints_parseable_config() {
    for name in ["verification-matching", "verification-nonmatching", "scholte", "cavity-demo"] {
        let out = elastowave(&["preset", name]);
        assert!(out.status.success(), "{name}: {}", stderr(&out));
        elastowave::driver::ScenarioConfig::parse(&stdout(&out)).unwrap();
    }
    let full = stdout(&elastowave(&["preset", "cavity-demo", "--full"]));
    let cfg = elastowave::driver::ScenarioConfig::parse(&full).unwrap();
    assert_eq!(cfg.time.dt, Some(1e-5));
}

#[test]
fn unknown_preset_is_a_parse_error() {
    let out = elastowave(&["preset", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("scholte"));
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = coarse(dir.path());
    let out_dir = dir.path().join("out");
    let out = elastowave(&["run", "-c", &cfg, "--threads", "1", "--output-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("energy error"));
    let meta = std::fs::read_to_string(out_dir.join("metadata.json")).unwrap();
    assert!(meta.contains("\"zeta\": 0.0"));
    assert!(meta.contains("\"threads\": 1"));
}

#[test]
fn runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(coarse(dir.path())).unwrap() + "\n[[receivers.points]]\nname = \"r\"\ndomain = \"elastic\"\nlocation = [-0.5, 0.5, 0.5]\n";
    let cfg = write(dir.path(), "rec.toml", &text);
    let mut series = Vec::new();
    for k in 0..2 {
        let d = dir.path().join(format!("run{k}"));
        let out = elastowave(&["run", "-c", &cfg, "--threads", "1", "--output-dir", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
        series.push(std::fs::read(d.join("receivers").join("r.csv")).unwrap());
    }
    assert_eq!(series[0], series[1]);
}

#[test]
fn converge_prints_table_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = coarse(dir.path());
    let out = elastowave(&[
        "converge", "-c", &cfg, "--sweep", "N", "--values", "1,2,3", "--output-dir", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("param,energy_error,l2_error\n"));
    assert!(text.contains("energy slope"));
    assert_eq!(std::fs::read_to_string(dir.path().join("errors.csv")).unwrap().lines().count(), 4);
}

#[test]
fn converge_with_one_value_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = coarse(dir.path());
    let out = elastowave(&["converge", "-c", &cfg, "--sweep", "h", "--values", "0.5"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("at least 3"), "{}", stderr(&out));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[time]\nend = 1\nbogus = 2\n");
    let out = elastowave(&["run", "-c", &bad]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let missing = dir.path().join("missing.toml");
    assert_eq!(elastowave(&["run", "-c", missing.to_str().unwrap()]).status.code(), Some(5));

    let text = std::fs::read_to_string(coarse(dir.path())).unwrap();
    let diverge = text.replace("safety = 0.5", "safety = 0.5\ndt = 5.0").replace("end = 0.02", "end = 500.0");
    let out = elastowave(&["run", "-c", &write(dir.path(), "diverge.toml", &diverge)]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("step"), "{}", stderr(&out));

    let outside = text + "\n[[receivers.points]]\nname = \"far\"\ndomain = \"elastic\"\nlocation = [5.0, 5.0, 5.0]\n";
    let out = elastowave(&["run", "-c", &write(dir.path(), "outside.toml", &outside)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}
