use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use lasso_cis::instances::example_one;
use lasso_cis::invariance::implicit_rcis;
use lasso_cis::io::{rcis_from_json, ImplicitRcisFile, ProblemFile, SystemFile, SCHEMA_VERSION};
use lasso_cis::numlin::Vector;
use lasso_cis::polytope::HPolytope;
use lasso_cis::runtime::Plant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lasso-cis"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary runs")
}

fn run_stdin(args: &[&str], dir: &Path, input: &str) -> Output {
    let mut child =
        bin().args(args).current_dir(dir).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const EXAMPLE_ONE: &str = r#"{"version": 1,
 "system": {"A": [[0,1],[0,0]], "B": [[0],[1]],
  "Sxu": {"G": [[-1,0,0],[1,0,0],[-1,1.5,0],[1,-2,0],[0,0,1],[0,0,-1]], "f": [1,1,0,0,1,1]}},
 "spec": {"tau": 1, "lambda": 2}}"#;

const EXAMPLE_ONE_SHRUNK: &str = r#"{"version": 1,
 "system": {"A": [[0,1],[0,0]], "B": [[0],[1]],
  "Sxu": {"G": [[-1,0,0],[1,0,0],[-1,1.5,0],[1,-2,0],[0,0,1],[0,0,-1]], "f": [1,1,-0.05,0,1,1]}},
 "spec": {"tau": 0, "lambda": 1}}"#;

const DOUBLE_INTEGRATOR: &str = r#"{"version": 1,
 "system": {"A": [[1,1],[0,1]], "B": [[0],[1]],
  "Sxu": {"G": [[1,0,0],[-1,0,0],[0,1,0],[0,-1,0],[0,0,1],[0,0,-1]], "f": [1,1,1,1,0.1,0.1]}},
 "spec": {"tau": 2, "lambda": 2}}"#;

/// `x⁺ = u` on `|x| ≤ 1, |u| ≤ 1`; the safe set at `t ≥ 2` is smaller.
const PURE_INPUT: &str = r#"{"version": 1,
 "system": {"A": [[0]], "B": [[1]],
  "Sxu": {"G": [[1,0],[-1,0],[0,1],[0,-1]], "f": [1,1,1,1]}},
 "spec": {"tau": 0, "lambda": 1},
 "safe_schedule": [{"t": 2, "Sxu": {"G": [[1,0],[-1,0],[0,1],[0,-1]], "f": [0.5,0.5,0.5,0.5]}}]}"#;

fn setup(files: &[(&str, &str)]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in files {
        fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

#[test]
fn synth_output_reads_back_field_for_field() {
    let dir = setup(&[("ex1.json", EXAMPLE_ONE)]);
    let o = run(&["synth", "ex1.json", "--out-dir", "out"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("tau=1 lambda=2"));

    let read = rcis_from_json(&fs::read_to_string(dir.path().join("out/rcis_tau1_lambda2.json")).unwrap()).unwrap();
    let (sys, s) = example_one();
    let plant = Plant::new(&sys).unwrap();
    let built = implicit_rcis(&plant.nilpotent, &plant.shifted_safe_set(&s).unwrap(), &read.spec).unwrap();
    assert_eq!(ImplicitRcisFile::from(&read), ImplicitRcisFile::from(&built));
}

#[test]
fn example_one_explicit_set_is_the_origin() {
    let dir = setup(&[("ex1.json", EXAMPLE_ONE)]);
    let o = run(&["synth", "ex1.json", "--tau", "0", "--lambda", "2", "--explicit", "--out-dir", "out"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let text = fs::read_to_string(dir.path().join("out/explicit_tau0_lambda2.json")).unwrap();
    let ex: HPolytope = serde_json::from_str(&text).unwrap();
    assert!(ex.contains_point(&Vector::zeros(2), 1e-9));
    let b = ex.bounding_box().unwrap().unwrap();
    assert!(b.lower.amin() > -1e-6 && b.upper.amax() < 1e-6, "{b:?}");
}

#[test]
fn hierarchy_level_writes_one_file_per_pair() {
    let dir = setup(&[("di.json", DOUBLE_INTEGRATOR)]);
    let o = run(&["synth", "di.json", "--q", "3", "--out-dir", "out", "--json-out", "summary.json"], dir.path());
    assert!(o.status.success(), "{o:?}");
    for (t, l) in [(0, 3), (1, 2), (2, 1)] {
        assert!(dir.path().join(format!("out/rcis_tau{t}_lambda{l}.json")).exists());
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["components"].as_array().unwrap().len(), 3);
}

#[test]
fn project_and_check_agree_with_synth() {
    let dir = setup(&[("di.json", DOUBLE_INTEGRATOR)]);
    assert!(run(&["synth", "di.json", "--out-dir", "."], dir.path()).status.success());
    let p = run(&["project", "rcis_tau2_lambda2.json", "--out", "x.json"], dir.path());
    assert!(p.status.success(), "{p:?}");
    let c = run(&["check", "di.json", "x.json", "--samples", "300", "--seed", "3"], dir.path());
    assert!(c.status.success(), "{c:?}");
    assert!(stdout(&c).contains("violations=0 invariant=true"), "{}", stdout(&c));
    let m = run(&["maximal", "di.json", "--out", "max.json"], dir.path());
    assert!(m.status.success());
    let cmax: HPolytope = serde_json::from_str(&fs::read_to_string(dir.path().join("max.json")).unwrap()).unwrap();
    let x: HPolytope = serde_json::from_str(&fs::read_to_string(dir.path().join("x.json")).unwrap()).unwrap();
    assert!(cmax.contains_within(&x, 1e-6).unwrap());
}

#[test]
fn problem_without_disturbance_round_trips() {
    let p = ProblemFile::parse(EXAMPLE_ONE).unwrap();
    assert_eq!(p.version, SCHEMA_VERSION);
    let (sys, s) = p.system.build().unwrap();
    let again = SystemFile::from_parts(&sys, &s);
    assert!(again.e.is_none() && again.w.is_none());
}

#[test]
fn filter_clamps_and_passes() {
    let dir = setup(&[("p.json", PURE_INPUT)]);
    let o = run_stdin(&["filter", "p.json", "--stream"], dir.path(), "0 0.5 2\n1 1 0.3\n# comment\n\n");
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o), "1 corrected 0\n0.3 pass 1\n");
}

#[test]
fn filter_prints_twelve_significant_digits() {
    let dir = setup(&[("p.json", PURE_INPUT)]);
    let o = run_stdin(&["filter", "p.json"], dir.path(), "0 0 0.123456789012345\n");
    assert_eq!(stdout(&o), "0.123456789012 pass 0\n");
}

#[test]
fn exit_codes() {
    let dir = setup(&[
        ("ex1.json", EXAMPLE_ONE),
        ("shrunk.json", EXAMPLE_ONE_SHRUNK),
        ("p.json", PURE_INPUT),
        ("bad.json", "{\"version\": 1, \"system\": "),
    ]);
    let code = |o: Output| o.status.code().unwrap();
    assert_eq!(code(run(&["synth", "bad.json"], dir.path())), 1);
    assert_eq!(code(run(&["synth", "shrunk.json", "--out-dir", "o"], dir.path())), 2);
    assert!(dir.path().join("o/rcis_tau0_lambda1.json").exists());
    assert_eq!(code(run_stdin(&["filter", "ex1.json"], dir.path(), "0 0.3 0.1 0.5\n")), 4);
    assert_eq!(code(run_stdin(&["filter", "p.json"], dir.path(), "0 0 0\n1 0 0\n2 0 0\n")), 5);
    assert_eq!(code(run_stdin(&["filter", "p.json"], dir.path(), "0 0\n")), 1);
}

#[test]
fn bench_is_deterministic() {
    let dir = setup(&[]);
    let args = ["bench", "volume", "--instances", "2", "--samples", "2000", "--seed", "5", "--omit-timing"];
    let a = run(&args, dir.path());
    let b = run(&args, dir.path());
    assert!(a.status.success(), "{a:?}");
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("# seed=5\n"));
    assert_eq!(text.lines().count(), 2 + 3 * 2);
    assert_eq!(run(&["bench", "tables"], dir.path()).status.code(), Some(2));
}

#[test]
fn safe_box_of_example_one_is_degenerate() {
    let dir = setup(&[("ex1.json", EXAMPLE_ONE), ("p.json", PURE_INPUT)]);
    let o = run(&["box", "ex1.json"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["degenerate"], true);
    let o = run(&["box", "p.json", "--mode", "sum-width"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["upper"][0].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((v["lower"][0].as_f64().unwrap() + 1.0).abs() < 1e-6);
}
