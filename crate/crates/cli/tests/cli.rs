use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use wegscheider::explorer::{CheckReport, DEFAULT_STATE_CAP};
use wegscheider::pcp::{compile, EncodingParams, PcpInstance};
use wegscheider::simulator::{petri_experiment, PetriModel};
use wegscheider::sitegraph::{parse_model, RateMode};

const SOLVABLE: &str = r#"{"alphabet": ["a", "b"], "pairs": [["aa", "a"], ["ba", "ab"], ["b", "ab"]]}"#;
const UNSOLVABLE: &str = r#"{"alphabet": ["a"], "pairs": [["a", "aa"]]}"#;
const PARAMS: &str = r#"{"epsilon": 1.5, "e_switch": 1.0, "base_rate": 1.0}"#;

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        let d = Dir(tempfile::tempdir().unwrap());
        d.put("solvable.json", SOLVABLE);
        d.put("unsolvable.json", UNSOLVABLE);
        d.put("params.json", PARAMS);
        d
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn put(&self, name: &str, text: &str) {
        std::fs::write(self.path(name), text).unwrap();
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_wegscheider")).current_dir(self.0.path()).args(args).output().unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn solve_pcp_lists_solutions() {
    let d = Dir::new();
    d.ok(&["solve-pcp", "--instance", "solvable.json", "--max-len", "3", "-o", "s.json"]);
    let s = d.json("s.json");
    assert_eq!(s["solutions"], serde_json::json!([[1, 2, 3], [1, 3]]));
}

#[test]
fn compile_writes_parseable_model() {
    let d = Dir::new();
    let stdout = d.ok(&["compile", "--instance", "solvable.json", "--params", "params.json", "--extended", "-o", "m.ka"]);
    assert!(stdout.contains("26 directed rules"));
    let text = read(&d.path("m.ka"));
    let model = parse_model(&text).unwrap();
    assert_eq!(model.rules.len(), 26);
    let x = PcpInstance::from_json_str(SOLVABLE).unwrap();
    assert_eq!(text, compile(&x, &EncodingParams::default(), true).unwrap().model_text());
    let plain = d.ok(&["compile", "--instance", "solvable.json"]);
    assert_eq!(parse_model(&plain).unwrap().rules.len(), 14);
}

#[test]
fn check_report_matches_library() {
    let d = Dir::new();
    let stdout = d.ok(&[
        "check", "--instance", "solvable.json", "--params", "params.json", "--bound", "4", "-o", "r.json", "--dot", "c.dot",
        "--csv", "c.csv", "--threads", "2",
    ]);
    assert!(stdout.contains("verdict: violation"));
    let r = d.json("r.json");
    assert_eq!(r["equilibrium"]["verdict"], "violation");
    let sum = r["equilibrium"]["witness"]["energy_sum"].as_f64().unwrap();
    assert!((sum - 2.5).abs() < 1e-9);
    let x = PcpInstance::from_json_str(SOLVABLE).unwrap();
    let (lib, _) = CheckReport::run(&x, &EncodingParams::default(), 4, DEFAULT_STATE_CAP, false, 1e-9).unwrap();
    assert_eq!(r, serde_json::to_value(&lib).unwrap());
    assert!(read(&d.path("c.dot")).starts_with("digraph"));
    assert!(read(&d.path("c.csv")).starts_with("n,count,bound,exceeds\n0,"));
}

#[test]
fn check_unsolvable_converges() {
    let d = Dir::new();
    d.put("eps1.json", r#"{"epsilon": 1.0, "e_switch": 1.0}"#);
    d.ok(&["check", "--instance", "unsolvable.json", "--params", "eps1.json", "--bound", "6", "-o", "r.json"]);
    let r = d.json("r.json");
    assert_eq!(r["equilibrium"]["verdict"], "equilibrium");
    assert_eq!(r["partition"]["verdict"], "converges");
    d.put("eps0.json", r#"{"epsilon": 0.0, "e_switch": 1.0}"#);
    let out = d.run(&["check", "--instance", "unsolvable.json", "--params", "eps0.json", "--bound", "3", "-o", "z.json"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert_eq!(d.json("z.json")["partition"]["verdict"], "divergence_suspected");
}

#[test]
fn explore_engine_and_oracle_agree() {
    let d = Dir::new();
    d.ok(&["explore", "--instance", "solvable.json", "--bound", "2", "--extended", "-o", "e.json"]);
    d.ok(&["explore", "--instance", "solvable.json", "--bound", "2", "--extended", "--oracle", "-o", "o.json"]);
    let (e, o) = (d.json("e.json"), d.json("o.json"));
    assert_eq!(e["num_states"], o["num_states"]);
    assert_eq!(e["num_edges"], o["num_edges"]);
    assert_eq!(e["states"], o["states"]);
}

#[test]
fn petri_report_matches_library() {
    let d = Dir::new();
    d.ok(&["petri", "--e1", "1.0", "--e2", "0.5", "--events", "1000000", "--seed", "7", "-o", "p.json"]);
    let p = d.json("p.json");
    assert!(p["total_variation"].as_f64().unwrap() < 0.05);
    let lib = petri_experiment(&PetriModel::new(1.0, 0.5, RateMode::UnitRate), 1_000_000, 7, 10, 10, 10).unwrap();
    assert_eq!(p, serde_json::to_value(&lib).unwrap());
}

#[test]
fn simulate_stops_at_solution() {
    let d = Dir::new();
    let args = ["simulate", "--instance", "solvable.json", "--extended", "--stop-at-solution", "--events", "10000000"];
    d.ok(&[&args[..], &["--seed", "1", "-o", "a.json", "--csv", "a.csv"]].concat());
    let a = d.json("a.json");
    assert_eq!(a["stopped"], true);
    let last = a["final_state"].as_str().unwrap();
    assert!(last == "B[1,3]@0:" || last == "B[1,2,3]@0:", "{last}");
    d.ok(&[&args[..], &["--seed", "1", "-o", "b.json"]].concat());
    assert_eq!(a, d.json("b.json"));
    assert!(read(&d.path("a.csv")).starts_with("state,time,fraction\n"));
}

#[test]
fn simulate_rule_model() {
    let d = Dir::new();
    d.put("petri.ka", "%agent: A()\n%agent: B()\n%init: empty\n%rule: make -> A() @ 1.0, 2.0\n");
    d.ok(&["simulate", "--model", "petri.ka", "--time", "50", "--rate-mode", "unit_rate", "-o", "s.json"]);
    let s = d.json("s.json");
    assert!((s["total_time"].as_f64().unwrap() - 50.0).abs() < 1e-9);
    assert!(s["occupancy"].as_array().unwrap().iter().any(|r| r["state"] == ""));
}

#[test]
fn exit_codes() {
    let d = Dir::new();
    assert_eq!(d.run(&["check", "--bound", "4"]).status.code(), Some(2));
    assert_eq!(d.run(&["simulate", "--instance", "solvable.json"]).status.code(), Some(2));
    assert_eq!(d.run(&["frobnicate"]).status.code(), Some(2));
    let missing = d.run(&["check", "--instance", "missing.json"]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.json"));
    d.put("bad.json", r#"{"alphabet": ["a"], "pairs": [["a", "b"]]}"#);
    assert_eq!(d.run(&["solve-pcp", "--instance", "bad.json"]).status.code(), Some(3));
    assert_eq!(d.run(&["petri", "--e1", "-0.1", "--events", "10"]).status.code(), Some(3));
}
