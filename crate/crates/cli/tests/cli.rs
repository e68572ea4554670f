use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nulldist"))
}

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        let f = Self { dir: tempfile::tempdir().unwrap() };
        f.write("mink3.json", r#"{"kind":"minkowski","dim":2}"#);
        f.write("mink2.json", r#"{"kind":"minkowski","dim":1}"#);
        f.write("t.json", r#"{"kind":"coordinate_t"}"#);
        f.write("t3.json", r#"{"kind":"composed","phi":{"family":"power","exponent":3}}"#);
        f.write(
            "grw.json",
            r#"{"kind":"grw","interval":[0,null],"warp":{"family":"power","exponent":1.0},"fiber":{"kind":"euclidean","dim":2}}"#,
        );
        f.write(
            "cone.json",
            r#"{"kind":"cone","base":{"kind":"minkowski","dim":2},"vertices":[[0,-1,0],[0,1,0]]}"#,
        );
        f
    }

    fn write(&self, name: &str, body: &str) {
        std::fs::write(self.dir.path().join(name), body).unwrap();
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn distance_example() {
    let f = Files::new();
    let o = run(f.dir.path(), &["distance", "--model", "mink3.json", "--tau", "t.json", "-p", "0,0,0", "-q", "0,3,4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["lower"], 5.0);
    assert_eq!(v["upper"], 5.0);
    assert!(v["witness"]["breaks"].is_array());
}

#[test]
fn sphere_csv_lies_on_cylinder() {
    let f = Files::new();
    let o = run(
        f.dir.path(),
        &["sphere", "--model", "mink2.json", "--tau", "t.json", "--center", "0,0", "--r", "1", "-n", "100", "--format", "csv"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,r"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100);
    for r in rows {
        assert!((r[0].abs().max(r[1].abs()) - 1.0).abs() < 2e-3, "{r:?}");
    }
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed: 0"));
}

#[test]
fn tips_no_spill_fails_condition_a_with_sequence() {
    let f = Files::new();
    let o = run(f.dir.path(), &["check-conditions", "--field", "tips-no-spill", "--region", "-1,1,-1,1", "--which", "a"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["holds"], false);
    assert!(v["witness"]["trend"].as_array().unwrap().len() >= 4);
    let b = run(f.dir.path(), &["check-conditions", "--field", "tips-no-spill", "--region", "-1,1,-1,1", "--which", "b"]);
    assert_eq!(stdout_json(&b)["holds"], true);
}

#[test]
fn identical_runs_are_byte_identical() {
    let f = Files::new();
    let args = ["sphere", "--model", "mink3.json", "--tau", "t3.json", "--center", "0.5,0,0", "--r", "0.3", "-n", "5", "--seed", "42"];
    let a = run(f.dir.path(), &args);
    let b = run(f.dir.path(), &args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout_json(&a)["seed"], 42);
    let anti = ["check-antilip", "--model", "mink3.json", "--tau", "t3.json", "--region", "-1,1,-1,1,-1,1", "--samples", "500", "--seed", "3"];
    assert_eq!(run(f.dir.path(), &anti).stdout, run(f.dir.path(), &anti).stdout);
}

#[test]
fn emitted_numbers_round_trip() {
    let f = Files::new();
    let out = f.path("d.json");
    let o = run(
        f.dir.path(),
        &["distance", "--model", "grw.json", "--tau", "t.json", "-p", "1,0,0", "-q", "1.3,2,0.5", "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    fn numbers(v: &Value, out: &mut Vec<f64>) {
        match v {
            Value::Number(n) => out.push(n.as_f64().unwrap()),
            Value::Array(a) => a.iter().for_each(|x| numbers(x, out)),
            Value::Object(m) => m.values().for_each(|x| numbers(x, out)),
            _ => {}
        }
    }
    let mut all = Vec::new();
    numbers(&v, &mut all);
    assert!(all.len() > 10);
    for x in all {
        let back: f64 = serde_json::to_string(&x).unwrap().parse().unwrap();
        assert_eq!(back.to_bits(), x.to_bits());
    }
    assert!(v["lower"].as_f64().unwrap() <= v["upper"].as_f64().unwrap());
}

#[test]
fn causal_and_audit() {
    let f = Files::new();
    let o = run(f.dir.path(), &["causal", "--model", "mink3.json", "-p", "0,0,0", "-q", "2,1,1"]);
    assert_eq!(stdout_json(&o)["relation"], "chronological_future");
    let o = run(f.dir.path(), &["audit", "--model", "mink3.json", "--tau", "t.json", "-p", "0,0,0", "-q", "0,2,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout_json(&o)["audit"].is_object());
}

#[test]
fn cosmo_on_bisector_reports_ties() {
    let f = Files::new();
    let o = run(f.dir.path(), &["cosmo", "--model", "cone.json", "-q", "3,0,0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["generators"].as_array().unwrap().len(), 2);
    assert!(v["gradient"]["undefined"].is_string());
    let o = run(f.dir.path(), &["cosmo", "--model", "cone.json", "-q", "3,0.5,0", "-p", "2.5,0.7,0.1", "--samples", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["agh"]["violations"], 0);
    assert!((v["tau"].as_f64().unwrap() - (9.0f64 - 0.25).sqrt()).abs() < 1e-12);
}

#[test]
fn invalid_input_exits_2_with_json_error() {
    let f = Files::new();
    for args in [
        vec!["distance", "--model", "missing.json", "--tau", "t.json", "-p", "0,0,0", "-q", "1,0,0"],
        vec!["distance", "--model", "mink3.json", "--tau", "t.json", "-p", "0,0", "-q", "1,0,0"],
        vec!["distance", "--model", "mink3.json", "--tau", "t.json", "-p", "0,0,0"],
        vec!["cosmo", "--model", "mink3.json", "-q", "1,0,0"],
        vec!["causal", "--model", "mink3.json", "-p", "0,0,0", "-q", "1,0,0", "--format", "csv"],
    ] {
        let o = run(f.dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err: Value = serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&o.stderr)));
        assert!(err["error"].is_string() && err["message"].is_string());
    }
}

#[test]
fn non_convergence_exits_1() {
    let f = Files::new();
    // One bounce cannot close the gap for same-slice t³ points.
    let o = run(
        f.dir.path(),
        &["distance", "--model", "mink2.json", "--tau", "t3.json", "-p", "0,0", "-q", "0,1", "--max-bounces", "1"],
    );
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
    let v = stdout_json(&o);
    assert_eq!(v["converged"], false);
}
