use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn purelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_purelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn golden_matrix_matches() {
    let golden = data("golden.json");
    let o = purelab(&["axioms", "--theory", "all", "--dim", "2", "--expect", golden.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["expectation"]["matched"], true);
    assert_eq!(v["entries"].as_array().unwrap().len(), 18);
}

#[test]
fn golden_mismatch_exits_one() {
    let text = std::fs::read_to_string(data("golden.json"))
        .unwrap()
        .replacen("\"purification\": \"fails\"", "\"purification\": \"holds\"", 1);
    let dir = std::env::temp_dir().join(format!("purelab-golden-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("wrong.json");
    std::fs::write(&path, text).unwrap();
    let o = purelab(&["axioms", "--theory", "all", "--expect", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("classical/purification"));
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let a = purelab(&["axioms", "--theory", "all", "--seed", "7"]);
    let b = purelab(&["axioms", "--theory", "all", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let a = purelab(&["comb", "--seed", "3"]);
    let b = purelab(&["comb", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn missing_script_is_an_input_error() {
    let o = purelab(&["eval", "missing.opc"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.opc"));
}

#[test]
fn all_theories_only_for_axioms() {
    assert_eq!(purelab(&["teleport", "--theory", "all"]).status.code(), Some(2));
    assert_eq!(purelab(&["twirl", "--theory", "nonsense"]).status.code(), Some(2));
    assert_eq!(purelab(&["teleport", "--dim", "0"]).status.code(), Some(2));
}

#[test]
fn help_lists_commands_and_examples() {
    let o = purelab(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for cmd in ["axioms", "eval", "norm", "discriminate", "choi", "teleport", "twirl", "ec", "comb", "dilate"] {
        assert!(text.contains(cmd), "help misses {cmd}");
    }
    assert!(text.contains("Exit codes"));
    let o = purelab(&["teleport", "--help"]);
    assert!(stdout(&o).contains("Example: purelab teleport"));
}

#[test]
fn teleport_reports_probabilities() {
    let o = purelab(&["teleport", "--dim", "2,3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs[0]["probability"], 0.25);
    assert_eq!(runs[1]["outcomes"], 9);
}

#[test]
fn eval_teleport_script() {
    let script = data("scripts/teleport.opc");
    let o = purelab(&["eval", script.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["run"], "tele");
    assert_eq!(v["result"]["kind"], "map");
    let o = purelab(&["eval", script.to_str().unwrap(), "--run", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn state_commands_read_documents() {
    let (a, b) = (data("zero.json"), data("plus.json"));
    let o = purelab(&["discriminate", a.to_str().unwrap(), b.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = v["p_success"].as_f64().unwrap();
    assert!((p - (0.5 + 0.5 / 2f64.sqrt())).abs() < 1e-12);
    let o = purelab(&["norm", a.to_str().unwrap(), b.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["norm"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn error_correction_builtins() {
    for code in ["bit-flip", "depolarizing", "real-counterexample"] {
        let o = purelab(&["ec", "--code", code]);
        assert_eq!(o.status.code(), Some(0), "{code}: {}", stdout(&o));
    }
    let o = purelab(&["ec", "--code", "depolarizing"]);
    assert!(stdout(&o).contains("not-correctable"));
}

#[test]
fn markdown_and_out_file() {
    let dir = std::env::temp_dir().join(format!("purelab-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("matrix.md");
    let o = purelab(&["axioms", "--theory", "all", "--format", "md", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let md = std::fs::read_to_string(&path).unwrap();
    assert!(md.starts_with("| check | classical | quantum | real-quantum |"));
    assert!(md.contains("fails (10, 9)"));
}

#[test]
fn remaining_commands_succeed() {
    for args in [
        vec!["choi", "--count", "10"],
        vec!["twirl", "--dim", "3"],
        vec!["dilate"],
        vec!["comb", "--memory", "3"],
    ] {
        let o = purelab(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    // the Weyl twirl needs complex phases
    assert_eq!(purelab(&["twirl", "--theory", "real-quantum"]).status.code(), Some(2));
}
