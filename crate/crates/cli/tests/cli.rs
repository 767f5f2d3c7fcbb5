use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use orbital::io::{load_config_file, read_atoms_csv};
use orbital::enumerate_series;

fn preset(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/presets").join(name).display().to_string()
}

fn orbital(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbital")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn variant(dir: &Path, name: &str, from: &str, to: &str) -> String {
    let text = std::fs::read_to_string(preset("exercise.cfg")).unwrap();
    assert!(text.contains(from));
    let path = dir.join(name);
    std::fs::write(&path, text.replace(from, to)).unwrap();
    path.display().to_string()
}

fn p(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[test]
fn presets_validate() {
    for name in ["exercise.cfg", "sierpinski-condensation.cfg", "fern-condensation.cfg"] {
        let o = orbital(&["validate", &preset(name)]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}

#[test]
fn schema_violations_exit_one_with_paths() {
    let dir = tempfile::tempdir().unwrap();
    let bad = variant(dir.path(), "bad.cfg", "\"map_probs\": [1.0]", "\"map_probs\": [0.6], \"extra\": 1");
    let o = orbital(&["validate", &bad]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("map_probs") && err.contains("extra"), "{err}");

    let o = orbital(&["--json-errors", "validate", &bad]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(v["error"], "schema");
    let fields: Vec<&str> = v["violations"].as_array().unwrap().iter().map(|x| x["field"].as_str().unwrap()).collect();
    assert!(fields.contains(&"map_probs"), "{fields:?}");
}

#[test]
fn parse_errors_carry_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = p(dir.path(), "broken.cfg");
    std::fs::write(&path, "{\n  \"dimension\": 1,\n  \"maps\": [\n").unwrap();
    let o = orbital(&["--json-errors", "validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(v["error"], "parse");
    assert!(v["line"].as_u64().unwrap() >= 3);
}

#[test]
fn missing_file_is_a_runtime_error() {
    let o = orbital(&["validate", "/nonexistent/system.cfg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn build_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["exercise.cfg", "sierpinski-condensation.cfg"] {
        let out = p(dir.path(), &format!("{name}.csv"));
        let o = orbital(&["build", &preset(name), "--depth", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let cfg = load_config_file(preset(name)).unwrap();
        let expect = enumerate_series(cfg.system(), 7, 0.0).unwrap();
        assert_eq!(read_atoms_csv(&out).unwrap(), expect.measure);

        let meta_text = std::fs::read_to_string(format!("{}.meta.jsonl", out.display())).unwrap();
        let meta: serde_json::Value = serde_json::from_str(meta_text.trim()).unwrap();
        assert_eq!(meta["depth"], 7);
        assert_eq!(meta["route"], "enum");
        assert_eq!(meta["tail_bound"].as_f64().unwrap(), expect.tail_bound);
        assert_eq!(meta["raw_mass"].as_f64().unwrap(), expect.raw_mass);
    }
}

#[test]
fn routes_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["exercise.cfg", "sierpinski-condensation.cfg"] {
        let files: Vec<Vec<u8>> = ["enum", "neumann"]
            .iter()
            .map(|route| {
                let out = p(dir.path(), &format!("{name}.{route}.csv"));
                let o = orbital(&["build", &preset(name), "--depth", "8", "--route", route, "--out", out.to_str().unwrap()]);
                assert_eq!(o.status.code(), Some(0));
                std::fs::read(out).unwrap()
            })
            .collect();
        assert_eq!(files[0], files[1], "{name}");
    }
}

#[test]
fn build_with_tolerance_and_cdf() {
    let dir = tempfile::tempdir().unwrap();
    let cdf = p(dir.path(), "cdf.csv");
    let o = orbital(&["build", &preset("exercise.cfg"), "--tol", "1e-6", "--cdf", cdf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(meta["depth"], 19);
    let text = std::fs::read_to_string(cdf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,cdf"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] - 0.5).abs() < 1e-6);
    assert!(text.trim_end().ends_with(",1"));
    assert_eq!(text.lines().count(), 21);

    let o = orbital(&["build", &preset("exercise.cfg"), "--depth", "3", "--tol", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_exercise_meets_bounds() {
    let o = orbital(&["verify", &preset("exercise.cfg"), "--depth", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(r["residual"]["value"].as_f64().unwrap() <= 2.0 * 0.5f64.powi(21));
    assert_eq!(r["uniqueness"]["ok"], true);
    assert_eq!(r["additivity"]["ok"], true);
}

#[test]
fn study_table() {
    let o = orbital(&["study-exercise", &preset("exercise.cfg"), "--ps", "1,0.5,0.01", "--x", "0.9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(text.lines().next(), Some("p,mass,mass_over_p"));
    assert_eq!(rows[0][1], 1.0);
    assert!((rows[1][1] - 0.9375).abs() < 1e-9);
    assert!((rows[2][1] - 0.01 * (0..=3).map(|n| 0.99f64.powi(n)).sum::<f64>()).abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let high = variant(dir.path(), "high.cfg", "\"point\": [0.0]", "\"point\": [0.75]");
    let o = orbital(&["study-exercise", &high]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn samples_have_requested_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "s.csv");
    let o = orbital(&["sample", &preset("sierpinski-condensation.cfg"), "--count", "1000", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("x,y"));
    assert_eq!(text.lines().count(), 1001);
    let o = orbital(&["sample", &preset("exercise.cfg"), "--count", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn render_writes_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "s.pgm");
    let args = ["render", &preset("sierpinski-condensation.cfg"), "--res", "64x48", "--scale", "linear", "--out", out.to_str().unwrap()];
    assert_eq!(orbital(&args).status.code(), Some(0));
    let first = std::fs::read(&out).unwrap();
    assert!(first.starts_with(b"P5\n64 48\n255\n"));
    assert_eq!(first.len(), b"P5\n64 48\n255\n".len() + 64 * 48);
    assert!(first.iter().skip(13).any(|&b| b == 255));
    assert_eq!(orbital(&args).status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn render_outside_the_mass_warns() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "blank.pgm");
    let o = orbital(&[
        "render",
        &preset("sierpinski-condensation.cfg"),
        "--res",
        "4x4",
        "--box=5,5,6,6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    assert!(std::fs::read(&out).unwrap()[b"P5\n4 4\n255\n".len()..].iter().all(|&b| b == 0));
}

#[test]
fn render_rejects_line_systems() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "x.pgm");
    let o = orbital(&["render", &preset("exercise.cfg"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}
