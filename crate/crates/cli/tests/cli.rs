use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> PathBuf {
    root().join("fixtures").join(format!("{name}.json"))
}

fn horolmmp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horolmmp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Fixture name, extra `run` flags.
const RUNS: &[(&str, &[&str])] = &[
    ("sl3_rank1", &[]),
    ("sl3_rank1_delta0", &[]),
    ("sl3_rank1_deltaX1X2", &[]),
    ("sl3_degenerate", &[]),
    ("sl3_x9", &[]),
    ("ex1_case1", &[]),
    ("ex1_case2", &[]),
    ("ex1_case3", &["--max-epsilon", "10"]),
    ("ex1_q4", &[]),
    ("ex2", &[]),
    ("ex2_delta4", &[]),
];

const FAILS: &[&str] = &["ex1", "ex1_uncertified", "ex1_q1"];

/// Compares against `fixtures/golden`, or rewrites it when HOROLMMP_BLESS is set.
fn golden(name: &str, actual: &str) {
    let path = root().join("fixtures/golden").join(name);
    if std::env::var_os("HOROLMMP_BLESS").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

#[test]
fn every_fixture_validates() {
    for entry in fs::read_dir(root().join("fixtures")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let o = horolmmp(&["validate", path.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
        }
    }
}

#[test]
fn runs_match_goldens() {
    for (name, flags) in RUNS {
        let f = fixture(name);
        let mut args = vec!["run", f.to_str().unwrap()];
        args.extend_from_slice(flags);
        let o = horolmmp(&args);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let report = stdout(&o);
        assert!(report.starts_with("{\n  \"schema\": \"horolmmp/1\""), "{name}");
        golden(&format!("{name}.json"), &report);
    }
}

#[test]
fn failures_match_goldens() {
    for name in FAILS {
        let f = fixture(name);
        let o = horolmmp(&["run", f.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{name}");
        assert!(stdout(&o).is_empty());
        golden(&format!("{name}.error.json"), &stderr(&o));
    }
}

#[test]
fn report_file_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("sl3_rank1_deltaX1X2");
    let mut texts = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}.json"));
        let o = horolmmp(&["run", f.to_str().unwrap(), "--report", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        texts.push(fs::read(&out).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    let only: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(only.len(), 2, "no temporary files left behind: {only:?}");
}

#[test]
fn deltax1x2_report_contents() {
    let o = horolmmp(&["run", fixture("sl3_rank1_deltaX1X2").to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["classification"]["breakpoints"], serde_json::json!(["1", "2", "5/2"]));
    let kinds: Vec<&str> = v["events"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["divisorial", "flip", "fiber_type"]);
    assert_eq!(v["events"][0]["contracted"], serde_json::json!(["X1"]));
    for ver in v["verifications"].as_array().unwrap() {
        assert_eq!(ver["status"], "passed", "{ver}");
    }
}

#[test]
fn stabilized_run_records_window() {
    let o = horolmmp(&["run", fixture("ex1_case3").to_str().unwrap(), "--max-epsilon", "10"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["classification"]["eps_max"], serde_json::Value::Null);
    assert_eq!(v["events"][0]["kind"], "stabilized");
    assert_eq!(v["events"][0]["stabilized"]["window"], "10");
}

#[test]
fn uncertified_pair_is_a_domain_error() {
    let o = horolmmp(&["run", fixture("ex1_uncertified").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "pair_not_certified");
    assert!(err["error"]["message"].as_str().unwrap().contains("pair not certified"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(horolmmp(&["run"]).status.code(), Some(2));
    assert_eq!(horolmmp(&["bogus"]).status.code(), Some(2));
    let f = fixture("sl3_rank1");
    assert_eq!(horolmmp(&["query", f.to_str().unwrap(), "nonsense"]).status.code(), Some(2));
    assert_eq!(horolmmp(&["run", f.to_str().unwrap(), "--max-epsilon", "1/0"]).status.code(), Some(2));
}

#[test]
fn strict_and_lenient_input() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("sl3_rank1")).unwrap().replacen('{', "{\n  \"comment\": \"x\",", 1);
    let path = dir.path().join("extra.json");
    fs::write(&path, text).unwrap();
    let p = path.to_str().unwrap();
    let o = horolmmp(&["validate", p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("comment: unknown field"));
    let o = horolmmp(&["--lenient", "validate", p]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("unknown field ignored"));
}

#[test]
fn truncated_and_malformed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("sl3_rank1")).unwrap();
    let cut = dir.path().join("cut.json");
    fs::write(&cut, &text[..100]).unwrap();
    let o = horolmmp(&["validate", cut.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at byte 100"), "{}", stderr(&o));
    let zero = dir.path().join("zero.json");
    fs::write(&zero, text.replacen("\"4\"", "\"1/0\"", 1)).unwrap();
    let o = horolmmp(&["validate", zero.to_str().unwrap()]);
    assert!(stderr(&o).contains("zero denominator"), "{}", stderr(&o));
}

#[test]
fn queries() {
    let q = |name: &str, args: &[&str]| -> serde_json::Value {
        let f = fixture(name);
        let mut all = vec!["query", f.to_str().unwrap()];
        all.extend_from_slice(args);
        let o = horolmmp(&all);
        assert!(o.status.success(), "{}", stderr(&o));
        serde_json::from_str(&stdout(&o)).unwrap()
    };
    let curves = q("sl3_rank1", &["curves"]);
    let list = curves["curves"].as_array().unwrap();
    let edges: Vec<_> = list.iter().filter(|c| c["kind"] == "edge").collect();
    assert_eq!(edges.len(), 1);
    assert_eq!(edges[0]["degree"], "2");
    assert_eq!(list.iter().filter(|c| c["kind"] == "color_vertex").count(), 4);
    assert_eq!(q("ex1", &["qcartier", "--divisor", "K"])["q_cartier"], false);
    assert_eq!(q("ex1_case1", &["qcartier", "--divisor", "K+Delta"])["q_cartier"], true);
    assert_eq!(q("ex2", &["qfactorial"])["q_factorial"], true);
    assert_eq!(q("ex1", &["qfactorial"])["q_factorial"], false);
    assert_eq!(q("ex1_case2", &["singularities"])["singularity"], "not_lc");
    let m = q("ex1_q4", &["morphism", fixture("ex1_q1").to_str().unwrap()]);
    assert_eq!(m["exists"], true);
    assert_eq!(q("sl3_rank1", &["morphism", fixture("sl3_x9").to_str().unwrap()])["exists"], true);
    assert_eq!(q("sl3_x9", &["morphism", fixture("sl3_rank1").to_str().unwrap()])["exists"], false);
    let klt = q("ex2", &["klt-boundary", "--divisor", "X1+X2+X3+D_alpha"]);
    assert_eq!(klt["m"], "2");
    assert_eq!(klt["singularity"], "klt");
}

#[test]
fn render_writes_svgs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("svg");
    let f = fixture("sl3_rank1_delta0");
    let o = horolmmp(&["render", f.to_str().unwrap(), "--epsilons", "0,1/2,1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["composite.svg", "q_eps_0.svg", "q_eps_1.svg", "q_eps_1_2.svg"]);
    // The last snapshot is a single dot.
    let last = fs::read_to_string(out.join("q_eps_1.svg")).unwrap();
    assert_eq!(last.matches("<circle").count(), 1);
    assert!(!last.contains("<polygon"));
    let first = fs::read_to_string(out.join("q_eps_0.svg")).unwrap();
    assert_eq!(first.matches("<circle").count(), 2);
    // Deterministic output.
    let again = dir.path().join("again");
    horolmmp(&["render", f.to_str().unwrap(), "--epsilons", "0,1/2,1", "--out", again.to_str().unwrap()]);
    assert_eq!(fs::read(out.join("composite.svg")).unwrap(), fs::read(again.join("composite.svg")).unwrap());
}

#[test]
fn render_marks_empty_and_rejects_higher_rank() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("sl3_rank1_delta0");
    let out = dir.path().join("e");
    let o = horolmmp(&["render", f.to_str().unwrap(), "--epsilons", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(out.join("q_eps_3.svg")).unwrap().contains(">empty</text>"));

    let text = r#"{"space": {"weight_dim": 1, "basis_labels": ["w"], "colors": [], "lattice_M": [[1]]},
        "gstable": [{"name": "X1", "x": [1]}, {"name": "X2", "x": [-1]}],
        "divisor_D": {"gstable": ["1", "1"], "colors": []}}"#;
    let p1 = dir.path().join("p1.json");
    fs::write(&p1, text).unwrap();
    let o = horolmmp(&["render", p1.to_str().unwrap(), "--epsilons", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("render supports 2D weight spaces only"));
}

#[test]
fn run_with_svg_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("sl3_rank1_deltaX1X2");
    let report = dir.path().join("report.json");
    let svg = dir.path().join("svg");
    let o = horolmmp(&["run", f.to_str().unwrap(), "--report", report.to_str().unwrap(), "--svg", svg.to_str().unwrap(), "--samples", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = fs::read_dir(&svg).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    // [0,1): 3; [1,2): 3; {2}: 1; (2,5/2): 2; eps_max: 1; composite.
    assert_eq!(names.len(), 11, "{names:?}");
}
