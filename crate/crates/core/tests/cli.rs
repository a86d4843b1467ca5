use std::path::{Path, PathBuf};

use equipart::cli::files::{ResultFile, Scenario};
use equipart::cli::{run, EXIT_INPUT, EXIT_NO_ZERO, EXIT_OK, EXIT_VERIFY};
use tempfile::TempDir;

fn equipart(args: &[&str]) -> i32 {
    run(std::iter::once("equipart").chain(args.iter().copied()))
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gauss(dir: &TempDir, d: usize, n: usize, seed: u64) -> PathBuf {
    let out = path(dir, "scenario.json");
    let (d, n, seed) = (d.to_string(), n.to_string(), seed.to_string());
    assert_eq!(equipart(&["gen", "gauss", "--d", &d, "--n", &n, "--seed", &seed, "--out", s(&out)]), EXIT_OK);
    out
}

#[test]
fn solve_then_verify_reproduces() {
    let dir = TempDir::new().unwrap();
    let sc = gauss(&dir, 2, 300, 4);
    for cmd in ["solve-sphere", "solve-slab"] {
        let res = path(&dir, &format!("{cmd}.json"));
        assert_eq!(equipart(&[cmd, "--scenario", s(&sc), "--out", s(&res)]), EXIT_OK, "{cmd}");
        let parsed = ResultFile::parse(&std::fs::read_to_string(&res).unwrap()).unwrap();
        assert!(parsed.pass);
        assert_eq!(parsed.command, cmd);
        assert_eq!(equipart(&["verify", "--result", s(&res)]), EXIT_OK);
    }
}

#[test]
fn tampered_solution_fails_verification() {
    let dir = TempDir::new().unwrap();
    let sc = gauss(&dir, 2, 300, 5);
    let res = path(&dir, "r.json");
    assert_eq!(equipart(&["solve-sphere", "--scenario", s(&sc), "--out", s(&res)]), EXIT_OK);
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&res).unwrap()).unwrap();
    let params = &mut doc["solution"]["parameters"];
    for key in ["radius", "offset", "r2"] {
        if let Some(x) = params.get_mut(key) {
            *x = serde_json::json!(x.as_f64().unwrap() + 1.0);
        }
    }
    std::fs::write(&res, serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(equipart(&["verify", "--result", s(&res)]), EXIT_VERIFY);
}

#[test]
fn discrete_planar_wedge() {
    let dir = TempDir::new().unwrap();
    let sc = path(&dir, "w.json");
    assert_eq!(
        equipart(&["gen", "gauss", "--d", "2", "--count", "2", "--n", "200", "--seed", "3", "--out", s(&sc)]),
        EXIT_OK
    );
    let res = path(&dir, "r.json");
    assert_eq!(equipart(&["solve-wedge", "--scenario", s(&sc), "--h", "0", "--out", s(&res)]), EXIT_OK);
    let parsed = ResultFile::parse(&std::fs::read_to_string(&res).unwrap()).unwrap();
    assert_eq!(parsed.verify_h, 0.0);
    assert!(parsed.residuals.iter().all(|r| *r == 0.0));
    assert_eq!(equipart(&["verify", "--result", s(&res)]), EXIT_OK);
}

#[test]
fn counterexample_has_no_zero() {
    let dir = TempDir::new().unwrap();
    let sc = path(&dir, "c.json");
    assert_eq!(equipart(&["gen", "counterexample", "--n", "200", "--out", s(&sc)]), EXIT_OK);
    let res = path(&dir, "r.json");
    assert_eq!(equipart(&["solve-sphere", "--scenario", s(&sc), "--out", s(&res)]), EXIT_NO_ZERO);
    let parsed = ResultFile::parse(&std::fs::read_to_string(&res).unwrap()).unwrap();
    assert!(!parsed.pass);
    assert!(parsed.optimality.unwrap().delta >= 0.05);
}

#[test]
fn input_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(equipart(&["solve-sphere", "--scenario", s(&path(&dir, "missing.json"))]), EXIT_INPUT);
    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, "{\"version\": 1, \"d\": 2}").unwrap();
    assert_eq!(equipart(&["solve-sphere", "--scenario", s(&bad)]), EXIT_INPUT);
    let sc = gauss(&dir, 2, 50, 0);
    assert_eq!(equipart(&["solve-sphere", "--scenario", s(&sc), "--h", "-1"]), EXIT_INPUT);
    assert_eq!(equipart(&["solve-sphere", "--scenario", s(&sc), "--tol", "0"]), EXIT_INPUT);
    assert_eq!(equipart(&["no-such-command"]), EXIT_INPUT);
    assert_eq!(equipart(&["--help"]), EXIT_OK);
}

#[test]
fn scenario_files_round_trip() {
    let dir = TempDir::new().unwrap();
    let sc = gauss(&dir, 3, 40, 2);
    let text = std::fs::read_to_string(&sc).unwrap();
    let parsed = Scenario::parse(&text).unwrap();
    assert_eq!(parsed.to_json(), text);
    let lines = path(&dir, "l.json");
    assert_eq!(equipart(&["gen", "lines", "--n", "4", "--out", s(&lines)]), EXIT_OK);
    let text = std::fs::read_to_string(&lines).unwrap();
    assert_eq!(Scenario::parse(&text).unwrap().to_json(), text);
}

#[test]
fn selftest_passes() {
    assert_eq!(equipart(&["selftest", "--seed", "1"]), EXIT_OK);
}
