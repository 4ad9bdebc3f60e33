use std::path::PathBuf;
use std::process::{Command, Output};

fn qline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qline")).args(args).output().expect("binary runs")
}

fn config(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    p.to_str().unwrap().to_owned()
}

fn records(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8(out.stdout.clone()).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn keys(v: &serde_json::Value) -> Vec<&str> {
    v.as_object().unwrap().keys().map(String::as_str).collect()
}

fn sorted(mut k: Vec<&str>) -> Vec<&str> {
    k.sort_unstable();
    k
}

#[test]
fn run_records_follow_the_schema() {
    let out = qline(&["run", "--config", &config("passive.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out);
    assert_eq!(recs.len(), 3);
    let expected = sorted(vec![
        "schema",
        "epoch",
        "pair",
        "sift_count",
        "qber_estimate",
        "final_key_len",
        "aborted",
        "abort_reason",
        "abort_detail",
    ]);
    for r in &recs {
        assert_eq!(sorted(keys(r)), expected);
        assert_eq!(r["schema"], "qline.run/1");
    }
    let pairs: Vec<_> = recs.iter().map(|r| r["pair"].as_str().unwrap()).collect();
    assert_eq!(pairs, ["AC", "CB", "AB"]);
}

#[test]
fn verify_records_follow_the_schema() {
    let out = qline(&["verify", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    let check = sorted(vec!["schema", "suite", "check", "passed", "residual", "detail"]);
    let summary = sorted(vec!["schema", "suite", "check", "passed", "max_residual", "mutation"]);
    for r in &recs {
        assert_eq!(r["schema"], "qline.verify/1");
        let want = if r["check"] == "summary" { &summary } else { &check };
        assert_eq!(&sorted(keys(r)), want, "{r}");
    }
    let last = recs.last().unwrap();
    assert_eq!(last["suite"], "all");
    assert_eq!(last["passed"], true);
    let suites: Vec<_> =
        recs.iter().filter(|r| r["check"] == "summary").map(|r| r["suite"].as_str().unwrap()).collect();
    assert_eq!(suites, ["alice_assumption", "charlie_is_alice", "charlie_is_bob", "resources", "all"]);
}

#[test]
fn every_mutation_makes_verify_fail_with_numeric_residuals() {
    for m in ["biased-prep", "skewed-charlie", "basis-dependent-loss", "broken-simulator"] {
        let out = qline(&["verify", "--mutate", m]);
        assert_eq!(out.status.code(), Some(1), "{m}");
        let recs = records(&out);
        assert!(recs.iter().any(|r| r["passed"] == false && r["check"] != "summary"), "{m}");
        for r in &recs {
            let x = if r["check"] == "summary" { &r["max_residual"] } else { &r["residual"] };
            assert!(x.as_f64().is_some_and(f64::is_finite), "{m}: {r}");
        }
        assert_eq!(recs.last().unwrap()["mutation"], m);
    }
}

#[test]
fn broken_simulator_is_distinguished() {
    let out = qline(&[
        "distinguish",
        "--config",
        &config("passive.toml"),
        "--samples",
        "400",
        "--mutate",
        "broken-simulator",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out);
    let expected = sorted(vec![
        "schema",
        "variant",
        "distinguisher",
        "simulator",
        "n_samples",
        "advantage",
        "ci_low",
        "ci_high",
        "ci_contains_zero",
        "guessed_real",
    ]);
    for r in &recs {
        assert_eq!(sorted(keys(r)), expected);
        assert_eq!(r["simulator"], "ignores-mismatch");
    }
    for variant in ["AC", "CB", "AB"] {
        let best = recs
            .iter()
            .filter(|r| r["variant"] == variant)
            .map(|r| r["advantage"].as_f64().unwrap())
            .fold(0.0, f64::max);
        assert!(best >= 0.9, "{variant}: {best}");
    }
}

#[test]
fn faithful_simulator_intervals_contain_zero() {
    let out = qline(&["distinguish", "--config", &config("passive.toml"), "--samples", "400"]);
    assert_eq!(out.status.code(), Some(0));
    for r in records(&out) {
        assert_eq!(r["ci_contains_zero"], true, "{r}");
        assert_eq!(r["simulator"], "faithful");
    }
}

#[test]
fn all_aborted_run_exits_3() {
    let out = qline(&["run", "--config", &config("intercept_resend.toml")]);
    assert_eq!(out.status.code(), Some(3));
    for r in records(&out) {
        assert_eq!(r["aborted"], true);
        assert_eq!(r["abort_reason"], "qber_above_threshold");
    }
}

#[test]
fn malformed_config_exits_2_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    for text in ["parties = \"three\"\nseed = 1\n", "parties = 1\nrounds = 10\nseed = 1\n", "rounds = = 3"] {
        std::fs::write(&bad, text).unwrap();
        let out = qline(&["run", "--config", bad.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    let out = qline(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_seed_exits_2_unless_given_on_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noseed.toml");
    std::fs::write(&path, "parties = 3\nrounds = 500\n").unwrap();
    let out = qline(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    let out = qline(&["run", "--config", path.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unknown_mutation_is_a_usage_error() {
    assert_eq!(qline(&["verify", "--mutate", "nonsense"]).status.code(), Some(2));
    let out = qline(&["distinguish", "--config", &config("passive.toml"), "--mutate", "biased-prep"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_byte_identical_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("lossy_five_party.toml");
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "1", "3"].iter().enumerate() {
        let path = dir.path().join(format!("out{i}.jsonl"));
        let out = qline(&["run", "--config", &cfg, "--jobs", jobs, "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let other = qline(&["run", "--config", &cfg, "--seed", "1"]);
    assert_ne!(other.stdout, outputs[0]);
}
