use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;
use torus_lasso::{find_lasso, LassoOutcome};
use torus_lasso_cli::{parse_tube_csv, ScenarioFile};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_torus-lasso"));
    c.env_remove("TORUS_LASSO_WORKERS");
    c
}

fn write_scenario(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run(cmd: &str, scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(cmd).arg("--scenario").arg(scenario).arg("--out").arg(out).args(extra).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

fn scalar(a: f64) -> Value {
    scalar_from(a, 1.0)
}

fn scalar_from(a: f64, x0: f64) -> Value {
    json!({
        "system": {"name": "linear", "matrix": [[a]]},
        "x0": [x0], "eps": 0.1, "tau": 0.01, "period_steps": 50, "max_periods": 4
    })
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn simulate_zero_field_gives_constant_rows() {
    let dir = TempDir::new().unwrap();
    let s = write_scenario(
        dir.path(),
        "s.json",
        &json!({"system": {"name": "linear", "matrix": [[0.0, 0.0], [0.0, 0.0]]},
                "x0": [0.25, -3.0], "eps": 0.1, "tau": 0.1, "period_steps": 10, "steps": 20}),
    );
    let out = dir.path().join("traj.csv");
    let o = run("simulate", &s, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x1,x2");
    assert_eq!(lines.len(), 22);
    for l in &lines[1..] {
        let cols: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!((cols[1], cols[2]), (0.25, -3.0));
    }
}

#[test]
fn invalid_scenarios_exit_1() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let mut bad_tau = scalar(-1.0);
    bad_tau["tau"] = json!(0.0);
    let mut unknown = scalar(-1.0);
    unknown["colour"] = json!("red");
    let mut wrong_dim = scalar(-1.0);
    wrong_dim["x0"] = json!([1.0, 2.0]);
    let mut negative_w = scalar(-1.0);
    negative_w["w_half_width"] = json!(-0.1);
    let mut zero_k = scalar(-1.0);
    zero_k["period_steps"] = json!(0);
    for (i, v) in [bad_tau, unknown, wrong_dim, negative_w, zero_k].iter().enumerate() {
        let s = write_scenario(dir.path(), &format!("bad{i}.json"), v);
        for cmd in ["simulate", "lasso"] {
            let o = run(cmd, &s, &out, &[]);
            assert_eq!(code(&o), 1, "case {i} {cmd}");
            assert!(String::from_utf8_lossy(&o.stderr).contains("invalid scenario"));
        }
    }
    let o = run("lasso", &dir.path().join("missing.json"), &out, &[]);
    assert_eq!(code(&o), 1);
}

#[test]
fn lasso_exit_codes() {
    let dir = TempDir::new().unwrap();
    let cases =
        [(scalar_from(-1.0, 0.01), 0, "certified"), (scalar(0.5), 2, "no_inclusion"), (scalar(1e5), 3, "blow_up")];
    for (i, (v, expect, status)) in cases.iter().enumerate() {
        let s = write_scenario(dir.path(), &format!("s{i}.json"), v);
        let out = dir.path().join(format!("out{i}"));
        let o = run("lasso", &s, &out, &[]);
        assert_eq!(code(&o), *expect, "{}", String::from_utf8_lossy(&o.stderr));
        let summary = read_json(&out.join("summary.json"));
        assert_eq!(summary["status"], *status);
    }
    // no room to grow the step region: enclosure fails at once
    let mut tight = scalar(0.5);
    tight["propagation"] = json!({"kappa": 1.0, "margin_abs": 0.0, "max_retries": 0});
    let s = write_scenario(dir.path(), "tight.json", &tight);
    let o = run("lasso", &s, &dir.path().join("tight"), &[]);
    assert_eq!(code(&o), 4);
    assert_eq!(read_json(&dir.path().join("tight/summary.json"))["status"], "step_enclosure");
}

#[test]
fn contracting_summary_and_tube_round_trip() {
    let dir = TempDir::new().unwrap();
    let v = scalar_from(-1.0, 0.01);
    let s = write_scenario(dir.path(), "s.json", &v);
    let out = dir.path().join("out");
    assert_eq!(code(&run("lasso", &s, &out, &[])), 0);
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["i0"], 0);
    assert_eq!(summary["T"], 0.5);
    assert_eq!(summary["periods"].as_array().unwrap().len(), 2);

    let scenario = ScenarioFile::load(&s).unwrap();
    let run = find_lasso(&scenario.build_system().unwrap(), &scenario.x0, &scenario.lasso_settings()).unwrap();
    let LassoOutcome::Certified(lasso) = run.outcome else { panic!() };
    let rows = parse_tube_csv(&std::fs::read_to_string(out.join("tube.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), lasso.tube.balls.len());
    for (i, (row, ball)) in rows.iter().zip(&lasso.tube.balls).enumerate() {
        assert_eq!(row.step, i);
        assert_eq!(row.ball.t.to_bits(), ball.t.to_bits());
        assert_eq!(row.ball.radius.to_bits(), ball.radius.to_bits());
        assert!(row.ball.center.iter().zip(&ball.center).all(|(a, b)| a.to_bits() == b.to_bits()));
        match lasso.tube.constants.get(i) {
            Some(lc) => assert_eq!(row.constants, Some((lc.k.lambda, lc.k.c, lc.k.gamma))),
            None => assert_eq!(row.constants, None),
        }
    }
}

#[test]
fn forced_oscillator_single_period_is_not_certified() {
    let dir = TempDir::new().unwrap();
    let mut v: Value = serde_json::from_str(include_str!("../../../scenarios/forced_vdp.json")).unwrap();
    v["max_periods"] = json!(1);
    let s = write_scenario(dir.path(), "s.json", &v);
    let out = dir.path().join("out");
    let o = run("lasso", &s, &out, &[]);
    assert_ne!(code(&o), 0);
    assert_ne!(read_json(&out.join("summary.json"))["status"], "certified");
}

fn ring_cover(count: usize) -> Value {
    json!({
        "system": {"name": "linear", "matrix": [[-0.5, 1.0], [-1.0, -0.5]]},
        "x0": [0.0, 0.0], "eps": 0.05, "tau": 0.002, "period_steps": 300, "w_half_width": 0.005,
        "sources": {"ring": {"center": [0.0, 0.0], "radius": 0.02, "plane": [0, 1], "count": count, "jitter": 0.005}}
    })
}

#[test]
fn cover_writes_one_file_per_source() {
    let dir = TempDir::new().unwrap();
    let s = write_scenario(dir.path(), "s.json", &ring_cover(5));
    let out = dir.path().join("out");
    let o = run("cover", &s, &out, &["--workers", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for i in 0..5 {
        assert!(out.join(format!("lasso_{i:03}.csv")).exists());
    }
    let report = read_json(&out.join("cover_report.json"));
    assert_eq!(report["certified"], 5);
    assert_eq!(report["lassos"][4]["index"], 4);
}

#[test]
fn cover_with_failures_exits_2() {
    let dir = TempDir::new().unwrap();
    let mut v = ring_cover(2);
    v["sources"] = json!({"points": [[0.01, 0.0], [3.0, 0.0]]});
    let s = write_scenario(dir.path(), "s.json", &v);
    let out = dir.path().join("out");
    assert_eq!(code(&run("cover", &s, &out, &[])), 2);
    let report = read_json(&out.join("cover_report.json"));
    assert_eq!((report["certified"].as_u64(), report["failed"].as_u64()), (Some(1), Some(1)));
    assert_eq!(report["failures"][0]["index"], 1);
}

#[test]
fn cover_rejects_empty_sources() {
    let dir = TempDir::new().unwrap();
    let mut v = ring_cover(1);
    v["sources"] = json!({"points": []});
    let s = write_scenario(dir.path(), "s.json", &v);
    assert_eq!(code(&run("cover", &s, &dir.path().join("out"), &[])), 1);
    v.as_object_mut().unwrap().remove("sources");
    let s = write_scenario(dir.path(), "s2.json", &v);
    assert_eq!(code(&run("cover", &s, &dir.path().join("out"), &[])), 1);
}

#[test]
fn cover_output_independent_of_workers() {
    let dir = TempDir::new().unwrap();
    let s = write_scenario(dir.path(), "s.json", &ring_cover(6));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run("cover", &s, &a, &["--workers", "1"])), 0);
    let o = bin()
        .args(["cover", "--scenario"])
        .arg(&s)
        .arg("--out")
        .arg(&b)
        .env("TORUS_LASSO_WORKERS", "4")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("on 4 workers"));
    for name in ["cover_report.json", "lasso_000.csv", "lasso_005.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn flags_override_scenario() {
    let dir = TempDir::new().unwrap();
    let s = write_scenario(dir.path(), "s.json", &ring_cover(2));
    let out = dir.path().join("out");
    let o = run("cover", &s, &out, &["--seed", "42", "--lambda-zero-mode", "paper"]);
    assert_eq!(code(&o), 0);
    let report = read_json(&out.join("cover_report.json"));
    assert_eq!(report["settings"]["policy"]["seed"], 42);
    assert_eq!(report["settings"]["propagation"]["lambda_mode"], "paper");
    let o = run("cover", &s, &out, &["--lambda-zero-mode", "sometimes"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn bundled_scenarios_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let s = ScenarioFile::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if s.sources.is_some() {
            assert!(!s.source_points().unwrap().is_empty());
        }
        n += 1;
    }
    assert!(n >= 4);
}
