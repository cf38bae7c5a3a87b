use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn condbayes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condbayes")).args(args).output().unwrap()
}

fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests").join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Failure: the given exit code, nothing on stdout, one line on stderr.
fn assert_fails(out: &Output, code: i32) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", stderr(out));
    assert!(out.stdout.is_empty(), "partial output: {}", stdout(out));
    assert_eq!(stderr(out).lines().count(), 1, "stderr: {}", stderr(out));
}

#[test]
fn table_matches_golden_file() {
    let out = condbayes(&["table"]);
    assert!(out.status.success());
    let golden = std::fs::read_to_string(core_fixture("golden/regional_table.txt")).unwrap();
    assert_eq!(stdout(&out), golden);

    let explicit = condbayes(&[
        "table",
        "--sensitivity", "0.99",
        "--specificity", "0.99",
        "--max-positives", "3",
        "--format", "text",
    ]);
    assert_eq!(explicit.stdout, out.stdout);
}

#[test]
fn table_from_csv_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("regions.csv");
    std::fs::write(&path, "region,prevalence\nTown,0.5\n").unwrap();
    let out = condbayes(&[
        "table", "--input", path.to_str().unwrap(),
        "--sensitivity", "0.5", "--specificity", "0.5",
        "--max-positives", "2", "--format", "csv",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "region,prevalence,ppv_1,ppv_2\nTown,0.5,0.5000,0.5000\n");

    std::fs::write(&path, "region,prevalence\nTown,0.5\nVillage,1.5\n").unwrap();
    let out = condbayes(&["table", "--input", path.to_str().unwrap()]);
    assert_fails(&out, 1);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    std::fs::write(&path, "place,rate\nTown,0.5\n").unwrap();
    assert_fails(&condbayes(&["table", "--input", path.to_str().unwrap()]), 2);
    assert_fails(&condbayes(&["table", "--input", "/nonexistent/regions.csv"]), 2);
}

#[test]
fn ppv_trace() {
    let out = condbayes(&[
        "ppv", "--sensitivity", "0.95", "--specificity", "0.95", "--prevalence", "0.001",
        "--n-positives", "4", "--precision", "3", "--format", "csv",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "n,result,posterior\n1,+,0.019\n2,+,0.265\n3,+,0.873\n4,+,0.992\n");

    let out = condbayes(&[
        "ppv", "--sensitivity", "0.95", "--specificity", "0.95", "--prevalence", "0.5",
        "--results", "+-", "--format", "json",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["steps"].as_array().unwrap().len(), 2);
}

#[test]
fn ppv_errors() {
    let base = ["ppv", "--sensitivity", "0.95", "--specificity", "0.95"];
    let with = |extra: &[&str]| condbayes(&[&base[..], extra].concat());
    assert_fails(&with(&["--prevalence", "1.2", "--n-positives", "1"]), 1);
    assert_fails(&with(&["--prevalence", "0.1", "--results", "+x"]), 2);
    assert_fails(&with(&["--prevalence", "0.1"]), 2);
    assert_fails(&with(&["--prevalence", "0.1", "--results", "+", "--n-positives", "1"]), 2);
    assert_fails(&with(&["--prevalence", "abc", "--n-positives", "1"]), 2);
    // Impossible evidence: a positive when the test never reports positives.
    let out = condbayes(&[
        "ppv", "--sensitivity", "0", "--specificity", "1", "--prevalence", "0.2", "--results", "+",
    ]);
    assert_fails(&out, 1);
}

#[test]
fn check_scenarios() {
    let out = condbayes(&["check", core_fixture("scenarios/sixteen_outcomes.toml").to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("P(A1 ∩ A2 | B') = 1/2"), "{text}");
    assert!(text.contains("conditionally independent given B': no"), "{text}");

    let out = condbayes(&["check", core_fixture("scenarios/two_positives.toml").to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("0.265"));

    let out = condbayes(&["check", core_fixture("scenarios/unknown_check.toml").to_str().unwrap()]);
    assert_fails(&out, 2);
    assert!(stderr(&out).contains("exchangeable"));
}

#[test]
fn simulate_is_deterministic() {
    let args = [
        "simulate", "--sensitivity", "0.95", "--specificity", "0.95", "--prevalence", "0.5",
        "--trials", "5000", "--seed", "17", "--alpha", "0.01", "--beta", "0.99", "--max-tests", "50",
    ];
    let first = condbayes(&args);
    let second = condbayes(&args);
    let serial = condbayes(&[&args[..], &["--serial"]].concat());
    assert!(first.status.success(), "{}", stderr(&first));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, serial.stdout);
    assert!(stdout(&first).contains("trials                   5000"));

    let healthy = condbayes(&[&args[..], &["--fix-truth", "healthy", "--format", "json"]].concat());
    let json: serde_json::Value = serde_json::from_slice(&healthy.stdout).unwrap();
    assert_eq!(json["diseased_trials"], 0);
    assert_eq!(json["false_absent_rate"], serde_json::Value::Null);
}

#[test]
fn simulate_errors() {
    let base = [
        "simulate", "--sensitivity", "0.95", "--specificity", "0.95", "--prevalence", "0.5",
        "--seed", "1", "--max-tests", "10",
    ];
    let with = |extra: &[&str]| condbayes(&[&base[..], extra].concat());
    assert_fails(&with(&["--trials", "0", "--alpha", "0.1", "--beta", "0.9"]), 1);
    assert_fails(&with(&["--trials", "10", "--alpha", "0.2,0.1", "--beta", "0.9"]), 1);
    assert_fails(&with(&["--trials", "10", "--alpha", "0.1"]), 2);
    assert_fails(&with(&["--trials", "10", "--alpha", "0.1", "--beta", "0.9", "--fix-truth", "maybe"]), 2);
}

#[test]
fn threshold_counts_positives() {
    let out = condbayes(&[
        "threshold", "--sensitivity", "0.99", "--specificity", "0.99", "--prevalence", "0.001",
        "--confidence", "0.999",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "tests: 4\nposterior: 0.999990\n");

    let out = condbayes(&[
        "threshold", "--sensitivity", "0.5", "--specificity", "0.5", "--prevalence", "0.1",
        "--confidence", "0.9",
    ]);
    assert_fails(&out, 1);
}

#[test]
fn usage_errors() {
    assert_fails(&condbayes(&[]), 2);
    assert_fails(&condbayes(&["frobnicate"]), 2);
    assert_fails(&condbayes(&["table", "--format", "yaml"]), 2);
    let help = condbayes(&["--help"]);
    assert!(help.status.success());
    assert!(stdout(&help).contains("threshold"));
}
