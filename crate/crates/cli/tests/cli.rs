use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn privtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privtree")).args(args).output().expect("spawn privtree")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", stderr(out));
    serde_json::from_str(&stdout(out)).unwrap()
}

struct Scratch(TempDir);

impl Scratch {
    fn new() -> Self {
        Scratch(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str, body: &str) -> String {
        let p = self.0.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_owned()
    }

    fn path(&self, name: &str) -> String {
        self.0.path().join(name).to_str().unwrap().to_owned()
    }
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

/// 400 points on a jittered grid in the unit square.
fn grid_csv() -> String {
    let mut s = String::new();
    for i in 0..20 {
        for j in 0..20 {
            s += &format!("{},{}\n", (i as f64 + 0.37) / 20.0, (j as f64 + 0.61) / 20.0);
        }
    }
    s
}

const FOUR_SEQS: &str = "A B\nB\nA A B\nA A A B\n";

#[test]
fn spatial_build_then_whole_domain_query_is_n_without_noise() {
    let s = Scratch::new();
    let pts = s.file("pts.csv", &grid_csv());
    let tree = s.path("tree.json");
    let out = privtree(&["spatial-build", "--input", &pts, "--epsilon", "1", "--noiseless", "--output", &tree]);
    let summary = json(&out);
    assert!(summary["nodes"].as_u64().unwrap() > 1);
    assert!(summary["build_seconds"].is_number());
    assert!(stderr(&out).contains("NOT differentially private"));

    let wl = s.file("wl.csv", "0,0,1,1\n-1,-1,2,2\n");
    let report = json(&privtree(&["range-query", "--tree", &tree, "--workload", &wl, "--input", &pts]));
    assert_eq!(report["answers"], serde_json::json!([400.0, 400.0]));
    assert_eq!(report["relative_errors"], serde_json::json!([0.0, 0.0]));
}

#[test]
fn malformed_csv_reports_line_and_exit_2() {
    let s = Scratch::new();
    let pts = s.file("bad.csv", "0.1,0.2\n# comment\n0.3,zz\n");
    let out = privtree(&["spatial-build", "--input", &pts, "--epsilon", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let outside = s.file("out.csv", "0.1,0.2\n1.5,0.2\n");
    assert_eq!(code(&privtree(&["spatial-build", "--input", &outside, "--epsilon", "1"])), 2);
}

#[test]
fn config_errors_exit_1_before_reading_data() {
    let missing = "/nonexistent/points.csv";
    for eps in ["0", "-1", "nan"] {
        let out = privtree(&["spatial-build", "--input", missing, "--epsilon", eps]);
        assert_eq!(code(&out), 1, "epsilon {eps}: {}", stderr(&out));
    }
    assert_eq!(code(&privtree(&["spatial-build", "--input", missing])), 1);
    assert_eq!(code(&privtree(&["spatial-build", "--input", missing, "--epsilon", "1", "--budget-split", "1"])), 1);
    assert_eq!(code(&privtree(&["spatial-build", "--input", missing, "--epsilon", "1", "--fanout", "3"])), 1);
    assert_eq!(
        code(&privtree(&["spatial-build", "--input", missing, "--epsilon", "1", "--fanout", "8", "--domain", "0,0,1,1"])),
        1
    );
    // with valid settings the missing file is an input error
    assert_eq!(code(&privtree(&["spatial-build", "--input", missing, "--epsilon", "1"])), 2);
    assert_eq!(code(&privtree(&["no-such-command"])), 1);
}

#[test]
fn empty_workload_and_dimension_mismatch() {
    let s = Scratch::new();
    let pts = s.file("pts.csv", &grid_csv());
    let tree = s.path("tree.json");
    assert_eq!(code(&privtree(&["spatial-build", "--input", &pts, "--epsilon", "1", "--output", &tree])), 0);

    let empty = s.file("empty.csv", "");
    let report = json(&privtree(&["range-query", "--tree", &tree, "--workload", &empty]));
    assert_eq!(report["queries"], 0);
    assert_eq!(report["answers"], serde_json::json!([]));

    let three_d = s.file("wl3.csv", "0,0,0,1,1,1\n");
    assert_eq!(code(&privtree(&["range-query", "--tree", &tree, "--workload", &three_d])), 2);
    let pts3 = s.file("pts3.csv", "0.1,0.1,0.1\n");
    let wl = s.file("wl.csv", "0,0,1,1\n");
    assert_eq!(code(&privtree(&["range-query", "--tree", &tree, "--workload", &wl, "--input", &pts3])), 2);
}

#[test]
fn four_sequences_noiseless_top1_is_a_with_six() {
    let s = Scratch::new();
    let seqs = s.file("four_seqs.txt", FOUR_SEQS);
    let top = json(&privtree(&["seq-topk", "--input", &seqs, "--epsilon", "1", "--lmax", "10", "--noiseless", "--k", "1"]));
    assert_eq!(top, serde_json::json!([{ "string": "A", "estimate": 6.0 }]));
}

#[test]
fn missing_lmax_is_a_config_error() {
    let s = Scratch::new();
    let seqs = s.file("four_seqs.txt", FOUR_SEQS);
    for cmd in ["seq-build", "seq-topk", "seq-synth"] {
        let out = privtree(&[cmd, "--input", &seqs, "--epsilon", "1"]);
        assert_eq!(code(&out), 1, "{cmd}");
        assert!(stderr(&out).contains("--lmax"));
    }
    let out = privtree(&["seq-build", "--input", &seqs, "--epsilon", "1", "--lmax", "10", "--fanout", "5"]);
    assert_eq!(code(&out), 1);
    let bad = s.file("bad.txt", "A $ B\n");
    assert_eq!(code(&privtree(&["seq-build", "--input", &bad, "--epsilon", "1", "--lmax", "10"])), 2);
}

fn run_twice(args: &[&str], s: &Scratch) -> (String, String) {
    let a = s.path("a.out");
    let b = s.path("b.out");
    for p in [&a, &b] {
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--output", p.as_str()]);
        let out = privtree(&full);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    }
    (read(a), read(b))
}

#[test]
fn fixed_seed_gives_identical_artifacts() {
    let s = Scratch::new();
    let pts = s.file("pts.csv", &grid_csv());
    let seqs = s.file("seqs.txt", &FOUR_SEQS.repeat(20));
    let runs: Vec<Vec<&str>> = vec![
        vec!["spatial-build", "--input", &pts, "--epsilon", "0.5", "--seed", "9"],
        vec!["seq-build", "--input", &seqs, "--epsilon", "2", "--lmax", "6", "--seed", "9"],
        vec!["seq-topk", "--input", &seqs, "--epsilon", "2", "--lmax", "6", "--seed", "9", "--k", "5"],
        vec!["seq-synth", "--input", &seqs, "--epsilon", "2", "--lmax", "6", "--seed", "9", "--count", "50"],
        vec!["svt-audit", "--variant", "binary", "--k", "4"],
    ];
    for args in &runs {
        let (a, b) = run_twice(args, &s);
        assert_eq!(a, b, "{args:?}");
    }
    let (x, _) = run_twice(&["spatial-build", "--input", &pts, "--epsilon", "0.5", "--seed", "10"], &s);
    let (y, _) = run_twice(&runs[0], &s);
    assert_ne!(x, y, "different seeds should give different noise");
}

/// Build times vary between runs; everything else must match.
fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("build_seconds");
            m.values_mut().for_each(strip_timings);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

#[test]
fn eval_is_deterministic_across_job_counts() {
    let base = ["eval", "--synthetic", "uniform", "--n", "3000", "--epsilon", "1", "--trials", "4", "--queries", "50", "--seed", "3"];
    let mut reports: Vec<Value> = ["1", "3"]
        .iter()
        .map(|j| {
            let mut args = base.to_vec();
            args.extend(["--jobs", j]);
            json(&privtree(&args))
        })
        .collect();
    reports.iter_mut().for_each(strip_timings);
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0]["methods"].as_array().unwrap().len(), 2);
    assert_eq!(code(&privtree(&["eval", "--synthetic", "uniform", "--epsilon", "1", "--methods", "kd"])), 1);
    assert_eq!(code(&privtree(&["eval", "--epsilon", "1"])), 1);
}

#[test]
fn synth_from_file_matches_inline_build() {
    let s = Scratch::new();
    let seqs = s.file("seqs.txt", &FOUR_SEQS.repeat(10));
    let pst = s.path("pst.json");
    let build = ["--epsilon", "3", "--lmax", "5", "--seed", "21"];
    let mut args = vec!["seq-build", "--input", &seqs, "--output", &pst];
    args.extend(build);
    assert_eq!(code(&privtree(&args)), 0);

    let from_file = privtree(&["seq-synth", "--pst", &pst, "--seed", "21", "--count", "30"]);
    let mut inline = vec!["seq-synth", "--input", &seqs, "--count", "30"];
    inline.extend(build);
    let inline = privtree(&inline);
    assert_eq!(json(&from_file), json(&inline));
    for row in json(&from_file).as_array().unwrap() {
        let toks: Vec<&str> = row["sequence"].as_str().unwrap().split_whitespace().collect();
        assert!(toks.len() <= 5);
        assert!(toks.iter().all(|t| *t == "A" || *t == "B"));
    }
    assert_eq!(code(&privtree(&["seq-synth", "--pst", &pst, "--input", &seqs])), 1);
}

#[test]
fn svt_audit_verdicts_and_errors() {
    let report = json(&privtree(&["svt-audit"]));
    let verdict = |v: &str| {
        report.as_array().unwrap().iter().find(|e| e["variant"] == v).unwrap()["verdict"].as_str().unwrap().to_owned()
    };
    assert_eq!(verdict("binary"), "VIOLATES");
    assert_eq!(verdict("vanilla"), "VIOLATES");
    assert_eq!(verdict("improved"), "SATISFIES");
    for e in report.as_array().unwrap() {
        for key in ["variant", "k", "lambda", "theta", "t", "log_ratio", "claimed_bound", "verdict"] {
            assert!(e.get(key).is_some(), "missing {key}");
        }
    }
    assert_eq!(code(&privtree(&["svt-audit", "--variant", "sparse"])), 1);
    assert_eq!(code(&privtree(&["svt-audit", "--variant", "binary", "--k", "7"])), 1);
    assert_eq!(code(&privtree(&["svt-audit", "--lambda", "0"])), 1);
    let table = privtree(&["svt-audit", "--variant", "vanilla", "--format", "table"]);
    assert_eq!(code(&table), 0);
    assert!(stdout(&table).contains("VIOLATES"));
}

fn is_integral(x: f64) -> bool {
    x.fract() == 0.0
}

#[test]
fn released_artifacts_hold_no_exact_counts() {
    let s = Scratch::new();
    let pts = s.file("pts.csv", &grid_csv());
    let tree_path = s.path("tree.json");
    assert_eq!(code(&privtree(&["spatial-build", "--input", &pts, "--epsilon", "1", "--output", &tree_path])), 0);
    let text = read(&tree_path);
    assert!(!text.contains("exact"));
    let tree: Value = serde_json::from_str(&text).unwrap();
    for node in tree["nodes"].as_array().unwrap() {
        let leaf = node["children"].as_array().unwrap().is_empty();
        match node.get("noisy_count") {
            Some(c) => {
                assert!(leaf, "internal node publishes a count");
                assert!(!is_integral(c.as_f64().unwrap()));
            }
            None => assert!(!leaf, "leaf without a count"),
        }
    }

    let seqs = s.file("seqs.txt", &FOUR_SEQS.repeat(5));
    let pst_path = s.path("pst.json");
    let out = privtree(&["seq-build", "--input", &seqs, "--epsilon", "1", "--lmax", "6", "--output", &pst_path]);
    assert_eq!(code(&out), 0);
    let text = read(&pst_path);
    assert!(!text.contains("exact"));
    let pst: Value = serde_json::from_str(&text).unwrap();
    let mut counts = 0;
    for node in pst["nodes"].as_array().unwrap() {
        if let Some(h) = node.get("hist").and_then(Value::as_object) {
            for v in h.values() {
                counts += 1;
                let x = v.as_f64().unwrap();
                // clamped zeros are allowed; other values carry noise
                assert!(x == 0.0 || !is_integral(x), "integral count {x}");
            }
        }
    }
    assert!(counts > 0);
}

#[test]
fn config_file_overrides_flags() {
    let s = Scratch::new();
    let pts = s.file("pts.csv", &grid_csv());
    let cfg = s.file("cfg.json", r#"{"epsilon": 1.0, "seed": 5}"#);
    let a = s.path("a.json");
    let b = s.path("b.json");
    let out = privtree(&["spatial-build", "--config", &cfg, "--input", &pts, "--epsilon", "0", "--output", &a]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = privtree(&["spatial-build", "--input", &pts, "--epsilon", "1", "--seed", "5", "--output", &b]);
    assert_eq!(code(&out), 0);
    assert_eq!(read(&a), read(&b));

    let bad = s.file("bad.json", r#"{"epsilonn": 1.0}"#);
    assert_eq!(code(&privtree(&["spatial-build", "--config", &bad, "--input", &pts])), 1);
    let missing: PathBuf = s.0.path().join("nope.json");
    assert_eq!(code(&privtree(&["svt-audit", "--config", missing.to_str().unwrap()])), 1);
}
