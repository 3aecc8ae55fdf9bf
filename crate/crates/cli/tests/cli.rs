use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use pse_cli::{run, CliOutput, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};

fn instances() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances")
}

fn inst(name: &str) -> String {
    instances().join(name).to_string_lossy().into_owned()
}

fn pse(args: &[&str]) -> CliOutput {
    run(std::iter::once("pse").chain(args.iter().copied()))
}

/// Parses the single data row of a one-record report.
fn record(out: &CliOutput) -> Vec<String> {
    let mut lines = out.stdout.lines();
    assert!(lines.next().unwrap().starts_with("instance,problem,method"));
    lines.next().unwrap().split(',').map(str::to_string).collect()
}

fn num(field: &str) -> f64 {
    field.parse().unwrap_or_else(|_| panic!("not a number: `{field}`"))
}

#[test]
fn classify_single_input_is_polynomial() {
    let out = pse(&["classify", "--instance", &inst("single_input.json")]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(out.stdout, "P\tsingle-input\n");
}

#[test]
fn greedy_packing_on_six_four() {
    let out = pse(&[
        "solve",
        "--problem",
        "hens-matches",
        "--instance",
        &inst("six_four.json"),
        "--method",
        "greedy-packing",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let r = record(&out);
    assert_eq!(&r[..4], ["six_four", "hens-matches", "greedy-packing", "ok"]);
    assert!(num(&r[4]) >= 3.0);
    assert!(num(&r[6]) >= 1.0);
}

#[test]
fn solve_records_satisfy_certificate_rules() {
    let cases = [
        ("pooling", "haverly.json", vec!["mccormick", "piecewise", "discretize", "alternating", "grid-oracle"]),
        ("stn", "chain.json", vec!["lp-round", "greedy"]),
        ("hens-matches", "six_four.json", vec!["lp-round", "water-filling", "greedy-packing", "single-interval"]),
        ("hens-utility", "pair.json", vec!["cascade"]),
        ("hens-multistage", "pair.json", vec!["alternating"]),
    ];
    for (problem, file, methods) in cases {
        for m in methods {
            let out = pse(&["solve", "--problem", problem, "--instance", &inst(file), "--method", m, "--stages", "1"]);
            assert_eq!(out.code, EXIT_OK, "{problem}/{m}: {}", out.stderr);
            let r = record(&out);
            if let (Ok(obj), Ok(bound)) = (r[4].parse::<f64>(), r[5].parse::<f64>()) {
                assert!(obj >= bound - 1e-6, "{problem}/{m}: {obj} < {bound}");
                if !r[6].is_empty() {
                    assert!(num(&r[6]) >= 1.0 - 1e-9, "{problem}/{m}");
                }
            }
        }
    }
}

#[test]
fn exact_routes() {
    let out = pse(&["exact", "--problem", "hens-matches", "--instance", &inst("six_four.json")]);
    assert_eq!(out.code, EXIT_OK);
    let r = record(&out);
    assert_eq!((r[3].as_str(), num(&r[4])), ("optimal", 3.0));

    let out = pse(&["exact", "--problem", "stn", "--instance", &inst("chain.json"), "--time-limit", "30"]);
    assert_eq!(num(&record(&out)[4]), 2.0);

    let out = pse(&["exact", "--problem", "hens-multistage", "--instance", &inst("pair.json")]);
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("no exact method"));
}

#[test]
fn usage_errors_exit_two() {
    let bad = [
        vec!["solve", "--problem", "pooling", "--instance", "nope.json", "--method", "mccormick"],
        vec!["solve", "--problem", "tsp", "--instance", "x.json", "--method", "m"],
        vec!["classify", "--instance", "x.json", "--frobnicate"],
        vec!["export", "--instance", "x.json", "--formulation", "qq", "--out", "y"],
        vec!["frob"],
    ];
    for args in bad {
        let out = pse(&args);
        assert_eq!(out.code, EXIT_USAGE, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let six = inst("six_four.json");
    let out = pse(&["solve", "--problem", "pooling", "--instance", &six, "--method", "mccormick"]);
    assert_eq!(out.code, EXIT_USAGE);
    let out = pse(&["solve", "--problem", "stn", "--instance", &inst("chain.json"), "--method", "cascade"]);
    assert!(out.stderr.contains("lp-round, greedy"), "{}", out.stderr);
    let out = pse(&["classify", "--instance", &six]);
    assert_eq!(out.code, EXIT_USAGE);
}

#[test]
fn schema_error_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"kind\": \"hens\", \"version\": 1, \"payload\": {\"hot\": [{\"id\": \"h\"}], \"cold\": []}}").unwrap();
    let out = pse(&["classify", "--instance", path.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("payload.hot[0]"), "{}", out.stderr);
}

#[test]
fn heuristic_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // the recipe recycles, which the list scheduler cannot order
    let path = dir.path().join("loop.json");
    fs::write(
        &path,
        r#"{"kind": "stn", "version": 1, "payload": {"horizon": 4,
            "states": [{"id": "a"}, {"id": "b", "demand": 1.0}],
            "tasks": [
              {"id": "fwd", "consume": {"a": 1.0}, "produce": {"b": 1.0}, "units": [{"unit": "u", "p": 1, "b": [0.0, 2.0]}]},
              {"id": "back", "consume": {"b": 1.0}, "produce": {"a": 1.0}, "units": [{"unit": "u", "p": 1, "b": [0.0, 2.0]}]}
            ]}}"#,
    )
    .unwrap();
    let out = pse(&["solve", "--problem", "stn", "--instance", path.to_str().unwrap(), "--method", "greedy"]);
    assert_eq!(out.code, EXIT_FAILURE, "{out:?}");
    assert_eq!(record(&out)[3], "failed");
    assert!(out.stdout.contains("recycle"));
}

#[test]
fn export_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("six_four.json", "matches"),
        ("pair.json", "multistage"),
        ("haverly.json", "p"),
        ("haverly.json", "pq"),
        ("chain.json", "dt"),
        ("chain.json", "ct"),
    ];
    for (file, f) in cases {
        let a = dir.path().join(format!("{f}_a.lp"));
        let b = dir.path().join(format!("{f}_b.lp"));
        for out in [&a, &b] {
            let r = pse(&["export", "--instance", &inst(file), "--formulation", f, "--out", out.to_str().unwrap()]);
            assert_eq!(r.code, EXIT_OK, "{f}: {}", r.stderr);
        }
        let text = fs::read(&a).unwrap();
        assert!(!text.is_empty());
        assert_eq!(text, fs::read(&b).unwrap(), "{f}");
    }
    let out = dir.path().join("pw.lp");
    let r = pse(&["export", "--instance", &inst("haverly.json"), "--formulation", "pq", "--pieces", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK);
    assert!(!fs::read_to_string(&out).unwrap().contains(" * "));
}

#[test]
fn gen_round_trips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let p = path.to_str().unwrap();
    let out = pse(&["gen", "--problem", "hens", "--seed", "4", "--hot", "2", "--cold", "2", "--out", p]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let first = fs::read_to_string(&path).unwrap();
    let again = pse(&["gen", "--problem", "hens", "--seed", "4", "--hot", "2", "--cold", "2"]);
    assert_eq!(again.stdout, first);
    let out = pse(&["exact", "--problem", "hens-matches", "--instance", p]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    for problem in ["pooling", "stn", "single-interval"] {
        assert_eq!(pse(&["gen", "--problem", problem, "--seed", "1"]).code, EXIT_OK, "{problem}");
    }
}

#[test]
fn bench_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let suite = inst("suite.json");
    assert_eq!(pse(&["bench", "--suite", &suite, "--out", a.to_str().unwrap()]).code, EXIT_OK);
    assert_eq!(pse(&["bench", "--suite", &suite, "--out", b.to_str().unwrap(), "--sequential"]).code, EXIT_OK);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    // 2x6 pooling, 2x3 stn, 3x4 + 2x1 matches, 2x2 utility, 1 multistage
    assert_eq!(text.lines().count(), 1 + 12 + 6 + 12 + 2 + 4 + 1);
    assert!(!text.contains("error"), "{text}");
    let other = pse(&["bench", "--suite", &suite, "--seed", "12"]);
    assert_ne!(other.stdout, text);
}

#[test]
fn binary_smoke() {
    let out = Command::new(env!("CARGO_BIN_EXE_pse"))
        .args(["classify", "--instance", &inst("haverly.json")])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "NP-hard\ttwo-outputs-single-attribute\n");
    let out = Command::new(env!("CARGO_BIN_EXE_pse")).arg("--bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
}

#[test]
fn seed_comes_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_pse"))
        .args(["gen", "--problem", "stn"])
        .env("PSE_SEED", "9")
        .output()
        .unwrap();
    let explicit = pse(&["gen", "--problem", "stn", "--seed", "9"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), explicit.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_pse"))
        .args(["gen", "--problem", "stn"])
        .env("PSE_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}
