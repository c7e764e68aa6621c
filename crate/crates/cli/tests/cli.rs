use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hyperset(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperset"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HYPERSET_WORKERS")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const SMALL: &str = r#"
seeds = [1, 2, 3]

[budget]
ticks = 20000

[output]
dir = "out"

[[methods]]
selector = "nhh"
variant = "x0"

[[methods]]
selector = "nhh"
variant = "xstar"

[[methods]]
selector = "luby"
variant = "xa"
restart_unit = 10

[[instances]]
generate = { domain = "tsp", size = 30, seed = 4 }

[[instances]]
id = "cnf"
path = "tiny.cnf"
"#;

const TINY_CNF: &str = "c tiny\np cnf 4 5\n1 -2 0\n2 3 0\n-1 -3 0\n4 -2 0\n-4 1 3 0\n";

fn small_project() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), SMALL).unwrap();
    fs::write(dir.path().join("tiny.cnf"), TINY_CNF).unwrap();
    dir
}

#[test]
fn run_writes_results_and_resumes() {
    let dir = small_project();
    let out = hyperset(&["run", "exp.toml"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let results = dir.path().join("out");
    for f in ["results.csv", "aggregates.json", "report.md", "cells.jsonl"] {
        assert!(results.join(f).exists(), "{f} missing");
    }
    let csv = fs::read_to_string(results.join("results.csv")).unwrap();
    assert!(csv.starts_with("method,instance,seed,best_cost,wall_time_ms"));
    assert_eq!(csv.lines().count(), 1 + 3 * 2 * 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("NHH*"));

    // a second run finds every cell in the journal and reproduces the file
    let again = hyperset(&["run", "exp.toml"], dir.path());
    assert_eq!(code(&again), 0);
    assert_eq!(
        fs::read_to_string(results.join("results.csv")).unwrap(),
        csv
    );
}

#[test]
fn score_rebuilds_the_report() {
    let dir = small_project();
    assert_eq!(
        code(&hyperset(&["run", "exp.toml", "-o", "first"], dir.path())),
        0
    );
    let out = hyperset(
        &["score", "first/results.csv", "-o", "rescored"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read_to_string(dir.path().join("first/aggregates.json")).unwrap(),
        fs::read_to_string(dir.path().join("rescored/aggregates.json")).unwrap()
    );
}

#[test]
fn score_against_reference_medians() {
    let dir = small_project();
    assert_eq!(code(&hyperset(&["run", "exp.toml"], dir.path())), 0);
    fs::write(
        dir.path().join("ref.csv"),
        "instance,method,median\ncnf,OTHER,0\ntsp-30-s4,OTHER,1.0\n",
    )
    .unwrap();
    let out = hyperset(
        &[
            "score",
            "out/results.csv",
            "--reference",
            "ref.csv",
            "-o",
            "vs",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("vs/report.md")).unwrap();
    assert!(report.contains("Reference competitors: OTHER"));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = small_project();
    let ok = hyperset(&["validate", "exp.toml"], dir.path());
    assert_eq!(code(&ok), 0);
    assert!(String::from_utf8_lossy(&ok.stdout).contains("18 runs"));

    fs::write(
        dir.path().join("typo.toml"),
        SMALL.replace("variant = \"x0\"", "varient = \"x0\""),
    )
    .unwrap();
    assert_eq!(code(&hyperset(&["validate", "typo.toml"], dir.path())), 1);

    fs::remove_file(dir.path().join("tiny.cnf")).unwrap();
    let missing = hyperset(&["run", "exp.toml"], dir.path());
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("tiny.cnf"));
    assert!(
        !dir.path().join("out").exists(),
        "nothing runs before validation passes"
    );

    assert_eq!(code(&hyperset(&["validate", "nope.toml"], dir.path())), 1);
    assert_eq!(code(&hyperset(&["score", "nope.csv"], dir.path())), 1);
}

#[test]
fn bad_worker_override_is_a_validation_error() {
    let dir = small_project();
    let out = Command::new(env!("CARGO_BIN_EXE_hyperset"))
        .args(["run", "exp.toml"])
        .current_dir(dir.path())
        .env("HYPERSET_WORKERS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("HYPERSET_WORKERS"));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = small_project();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let out = hyperset(&["run", "exp.toml", "-o", "blocker/out"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn gen_and_validate_instances() {
    let dir = tempfile::tempdir().unwrap();
    for (domain, file) in [("tsp", "a.tsp"), ("bpp", "b.bpp"), ("maxsat", "c.cnf")] {
        let out = hyperset(
            &["gen", "-d", domain, "-s", "40", "--seed", "9", "-o", file],
            dir.path(),
        );
        assert_eq!(code(&out), 0);
        let check = hyperset(&["validate", "--instance", file], dir.path());
        assert_eq!(
            code(&check),
            0,
            "{}",
            String::from_utf8_lossy(&check.stderr)
        );
        assert!(String::from_utf8_lossy(&check.stdout).contains("size 40"));
    }
    let stdout = hyperset(&["gen", "-d", "maxsat", "-s", "100"], dir.path());
    assert!(String::from_utf8_lossy(&stdout.stdout).contains("p cnf 100 400"));

    assert_eq!(
        code(&hyperset(&["gen", "-d", "tsp", "-s", "501"], dir.path())),
        1
    );

    fs::write(dir.path().join("broken.cnf"), "p cnf 2 1\n1 5 0\n").unwrap();
    assert_eq!(
        code(&hyperset(
            &["validate", "--instance", "broken.cnf"],
            dir.path()
        )),
        1
    );
    fs::write(dir.path().join("mystery.dat"), "1\n").unwrap();
    assert_eq!(
        code(&hyperset(
            &["validate", "--instance", "mystery.dat"],
            dir.path()
        )),
        1
    );
}
