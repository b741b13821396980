use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use systemic::cli::run;
use tempfile::TempDir;

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        let f = Files { dir: tempfile::tempdir().unwrap() };
        f.write("p3.txt", "n 3\n0 1 1\n1 2 1\n");
        f.write("k3.txt", "n 3\n0 1 1\n0 2 1\n1 2 1\n");
        f.write("c5.txt", "n 5\n0 1 1\n1 2 1\n2 3 1\n3 4 1\n0 4 1\n");
        f.write("p6.txt", "# path\nn 6\n0 1 1\n1 2 2\n2 3 1\n3 4 0.5\n4 5 1\n");
        f.write("cand6.txt", "n 6\n0 5 1\n0 2 3\n1 4 0.2\n2 5 1\n0 1 9\n");
        f.write("bad.txt", "n 3\n0 1 1\n1 2 1\n1 0 2\n");
        f.write("split.txt", "n 4\n0 1 1\n2 3 1\n");
        f
    }

    fn write(&self, name: &str, text: &str) {
        std::fs::write(self.dir.path().join(name), text).unwrap();
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }
}

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("systemic").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../report.schema.json");
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text, systemic::report::SCHEMA);
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, out: &str) -> Value {
    let json: Value = serde_json::from_str(out).unwrap();
    let errors: Vec<String> = v.iter_errors(&json).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema errors {errors:?} for {out}");
    json
}

fn all_commands(f: &Files) -> Vec<(Vec<String>, i32)> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        (s(&["measure", "--graph", &f.path("p3.txt"), "--measure", "energy1"]), 0),
        (s(&["measure", "--graph", &f.path("c5.txt"), "--measure", "zeta_measure", "--p", "inf", "--k", "2"]), 0),
        (s(&["measure", "--graph", &f.path("p6.txt"), "--measure", "schur_sum", "--f", "exp_decay:0.5"]), 0),
        (s(&["zeta", "--graph", &f.path("c5.txt"), "--p", "2"]), 0),
        (s(&["hpnorm", "--graph", &f.path("p6.txt"), "--p", "3", "--numeric", "--tol", "1e-11"]), 0),
        (s(&["hpnorm", "--graph", &f.path("k3.txt"), "--p", "inf"]), 0),
        (s(&["trees", "--graph", &f.path("k3.txt")]), 0),
        (s(&["props", "--measure", "energy1", "--property", "convexity", "--trials", "20", "--seed", "3"]), 0),
        (s(&["props", "--measure", "entropy", "--property", "subadditivity", "--trials", "20"]), 1),
        (s(&["optimize-weights", "--topology", &f.path("p3.txt"), "--measure", "energy1"]), 0),
        (s(&["rewire", "--n", "4", "--m", "4", "--alpha", "4", "--measure", "energy1"]), 0),
        (s(&["augment", "--graph", &f.path("p6.txt"), "--k", "2", "--candidates", &f.path("cand6.txt")]), 0),
        (
            s(&["augment", "--graph", &f.path("p6.txt"), "--k", "2", "--candidates", &f.path("cand6.txt"), "--exhaustive", "--f", "inverse_sq"]),
            0,
        ),
        (s(&["simulate-h2", "--graph", &f.path("k3.txt"), "--dt", "1e-2", "--horizon", "50", "--trials", "4", "--seed", "1"]), 0),
        (s(&["validate", "--graph", &f.path("c5.txt")]), 0),
        (s(&["validate", "--graph", &f.path("split.txt")]), 1),
    ]
}

#[test]
fn every_report_matches_the_schema() {
    let f = Files::new();
    let v = schema();
    for (args, expected) in all_commands(&f) {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, out, err) = invoke(&refs);
        assert_eq!(code, expected, "{args:?}: {err}");
        let json = assert_valid(&v, &out);
        assert_eq!(json["command"], Value::String(args[0].clone()));
        assert!(json["timing"].is_null());
    }
}

#[test]
fn reports_are_byte_identical() {
    let f = Files::new();
    for (args, _) in all_commands(&f) {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = invoke(&refs);
        let b = invoke(&refs);
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn timing_is_opt_in() {
    let f = Files::new();
    let (code, out, _) = invoke(&["measure", "--graph", &f.path("p3.txt"), "--measure", "energy1", "--timing"]);
    assert_eq!(code, 0);
    let json = assert_valid(&schema(), &out);
    assert!(json["timing"].as_f64().unwrap() >= 0.0);
}

#[test]
fn path_energy_example() {
    let f = Files::new();
    let (code, out, _) = invoke(&["measure", "--graph", &f.path("p3.txt"), "--measure", "energy1"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"value\": 0.6666666666666666"), "{out}");
    let json: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["schema_version"], "1.0.0");
    assert_eq!(json["inputs"]["measure"], "energy1");
}

#[test]
fn triangle_trees_example() {
    let f = Files::new();
    let (code, out, _) = invoke(&["trees", "--graph", &f.path("k3.txt")]);
    assert_eq!(code, 0);
    let json: Value = serde_json::from_str(&out).unwrap();
    let r = &json["results"];
    assert_eq!(r["tau"].as_f64().unwrap(), 3.0);
    let ln9 = -(9f64.ln());
    assert!((r["entropy_spectral"].as_f64().unwrap() - ln9).abs() < 1e-12);
    assert!((r["entropy_matrix_tree"].as_f64().unwrap() - ln9).abs() < 1e-12);
    assert_eq!(r["printed_form_deviates"], true);
    assert!((r["counterexample"]["matrix_tree"].as_f64().unwrap() - ln9).abs() < 1e-12);
    assert_eq!(r["counterexample"]["printed_form"].as_f64().unwrap(), 0.0);
    let warnings = json["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("log(n/tau)")));
}

#[test]
fn duplicate_edge_reports_line() {
    let f = Files::new();
    let (code, out, err) = invoke(&["validate", "--graph", &f.path("bad.txt")]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn disconnected_graph_fails_audit() {
    let f = Files::new();
    let (code, out, _) = invoke(&["validate", "--graph", &f.path("split.txt")]);
    assert_eq!(code, 1);
    let json: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["results"]["connected"], false);
    let (code, _, err) = invoke(&["measure", "--graph", &f.path("split.txt"), "--measure", "energy1"]);
    assert_eq!(code, 2);
    assert!(err.contains("connectivity"));
}

#[test]
fn input_errors_exit_2() {
    let f = Files::new();
    let p3 = f.path("p3.txt");
    for args in [
        vec!["measure", "--graph", &p3, "--measure", "nonsense"],
        vec!["measure", "--graph", &p3, "--measure", "zeta_measure"],
        vec!["hpnorm", "--graph", &p3, "--p", "1"],
        vec!["hpnorm", "--graph", &p3, "--p", "inf", "--numeric"],
        vec!["props", "--measure", "energy1", "--property", "bogus"],
        vec!["rewire", "--n", "9", "--m", "10", "--measure", "energy1"],
        vec!["simulate-h2", "--graph", &p3, "--dt", "1"],
        vec!["measure", "--graph", &p3, "--measure", "energy1", "--bogus"],
        vec!["measure"],
    ] {
        let (code, out, err) = invoke(&args);
        assert_eq!(code, 2, "{args:?}");
        assert!(out.is_empty(), "{args:?}");
        assert!(!err.is_empty(), "{args:?}");
    }
}

#[test]
fn hpnorm_numeric_agrees() {
    let f = Files::new();
    let (_, out, _) = invoke(&["hpnorm", "--graph", &f.path("p6.txt"), "--p", "4", "--numeric"]);
    let json: Value = serde_json::from_str(&out).unwrap();
    assert!(json["results"]["relative_difference"].as_f64().unwrap() < 1e-8);
}

#[test]
fn weights_on_path() {
    let f = Files::new();
    let (_, out, _) = invoke(&["optimize-weights", "--topology", &f.path("p3.txt"), "--measure", "energy1"]);
    let json: Value = serde_json::from_str(&out).unwrap();
    let r = &json["results"];
    assert!((r["objective"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-9);
    for w in r["weights"].as_array().unwrap() {
        assert!((w.as_f64().unwrap() - 0.5).abs() < 1e-6);
    }
}

fn binary() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_systemic"))
}

#[test]
fn binary_exit_codes_and_thread_cap() {
    let f = Files::new();
    let run_bin = |args: &[&str], threads: &str| {
        Command::new(binary()).args(args).env("SYSTEMIC_THREADS", threads).output().unwrap()
    };
    let args = ["props", "--measure", "h2", "--property", "schur", "--trials", "10"];
    let single = run_bin(&args, "1");
    let auto = run_bin(&args, "0");
    assert_eq!(single.status.code(), Some(0));
    assert_eq!(single.stdout, auto.stdout);

    let bad = run_bin(&["validate", "--graph", &f.path("bad.txt")], "0");
    assert_eq!(bad.status.code(), Some(2));
    let cap = run_bin(&["validate", "--graph", &f.path("c5.txt")], "many");
    assert_eq!(cap.status.code(), Some(2));
    let help = run_bin(&["--help"], "0");
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("simulate-h2"));
}

#[test]
fn sweep_writes_plot_data() {
    let (code, out, _) = invoke(&["sweep", "--family", "cycle", "--n-min", "3", "--n-max", "8", "--measure", "hinf"]);
    assert_eq!(code, 0);
    let rows: Vec<(usize, f64)> = out
        .lines()
        .skip(1)
        .map(|l| {
            let (n, v) = l.split_once(',').unwrap();
            (n.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 6);
    for (n, v) in rows {
        // 1/λ_2 of C_n
        let l2 = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / n as f64).cos();
        assert!((v - 1.0 / l2).abs() < 1e-10 * v);
    }
}
