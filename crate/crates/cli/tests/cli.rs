use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lamp"))
        .args(args)
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn tiny(dir: &Path) -> (String, String) {
    let dat = "1 2 5\n1 2\n1 2 3\n1 2\n1 2 4\n3\n3 4\n4\n2 3\n3 5\n4 5\n3\n5\n3 4\n";
    let lab = "1\n1\n1\n1\n1\n0\n0\n0\n0\n0\n0\n0\n0\n0\n";
    (write(dir, "tiny.dat", dat), write(dir, "tiny.lab", lab))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn strategies_write_identical_pattern_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (dat, lab) = tiny(tmp.path());
    let mut files = Vec::new();
    for s in ["inc", "dec", "brute"] {
        let out = tmp.path().join(s);
        let o = lamp(&[
            "run",
            "--data",
            &dat,
            "--labels",
            &lab,
            "--strategy",
            s,
            "--out",
            p(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(fs::read(out.join("patterns.tsv")).unwrap());
        let summary = json(&out.join("summary.json"));
        let tsv = String::from_utf8(files.last().unwrap().clone()).unwrap();
        assert_eq!(
            tsv.lines().count() as u64 - 1,
            summary["num_significant"].as_u64().unwrap()
        );
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
    let text = String::from_utf8(files[0].clone()).unwrap();
    assert!(text.starts_with("items\tsupport\ta\tp_value\tlog10_p\n"));
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("1\t5\t5\t4.99500499501e-4\t"));
    assert!(text.lines().nth(2).unwrap().starts_with("1 2\t5\t5\t"));
}

#[test]
fn summary_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let (dat, lab) = tiny(tmp.path());
    let o = lamp(&[
        "run",
        "--data",
        &dat,
        "--labels",
        &lab,
        "--out",
        p(tmp.path()),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(tmp.path().join("summary.json")).unwrap();
    let s: lamp_core::RunSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&s).unwrap() + "\n", text);
    assert_eq!((s.total, s.n), (14, 5));
    assert!(s.num_significant <= s.num_testable.parse().unwrap());
}

#[test]
fn ratio_mode_reports_testability_only() {
    let tmp = tempfile::tempdir().unwrap();
    let (dat, _) = tiny(tmp.path());
    let o = lamp(&[
        "run",
        "--data",
        &dat,
        "--ratio",
        "2",
        "--out",
        p(tmp.path()),
    ]);
    assert!(o.status.success());
    let s = json(&tmp.path().join("summary.json"));
    assert_eq!(s["n"], 7);
    assert_eq!(s["num_significant"], 0);
    assert!(s["notice"].as_str().unwrap().contains("testability"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let (dat, lab) = tiny(tmp.path());
    let missing = lamp(&["run", "--data", "/no/such/file.dat", "--labels", &lab]);
    assert_eq!(missing.status.code(), Some(2));
    let bad = write(tmp.path(), "bad.dat", "1 two\n");
    assert_eq!(
        lamp(&["run", "--data", &bad, "--ratio", "2"]).status.code(),
        Some(2)
    );
    let short = write(tmp.path(), "short.lab", "1\n0\n");
    assert_eq!(
        lamp(&["run", "--data", &dat, "--labels", &short])
            .status
            .code(),
        Some(2)
    );
    let same = write(tmp.path(), "same.lab", &"1\n".repeat(14));
    let o = lamp(&[
        "run",
        "--data",
        &dat,
        "--labels",
        &same,
        "--out",
        p(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
    let o = lamp(&[
        "estimate",
        "--data",
        &dat,
        "--labels",
        &lab,
        "--K",
        "15",
        "--out",
        p(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimate_without_resampling_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let (dat, lab) = tiny(tmp.path());
    let o = lamp(&[
        "run",
        "--data",
        &dat,
        "--labels",
        &lab,
        "--out",
        p(tmp.path()),
    ]);
    assert!(o.status.success());
    let exact = json(&tmp.path().join("summary.json"));
    let o = lamp(&[
        "estimate",
        "--data",
        &dat,
        "--labels",
        &lab,
        "--K",
        "1",
        "--reps",
        "1",
        "--no-resample",
        "--out",
        p(tmp.path()),
    ]);
    assert!(o.status.success());
    let est = json(&tmp.path().join("estimate.json"));
    assert_eq!(
        est["sigma_hat_mean"].as_f64().unwrap(),
        exact["sigma_rt"].as_f64().unwrap()
    );
    assert_eq!(
        est["runs"][0]["estimated_testable"].to_string(),
        exact["num_testable"].as_str().unwrap()
    );
    assert_eq!(est["approximate"], true);
    assert_eq!(est["rng"], "ChaCha8Rng");
}

#[test]
fn estimate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (dat, lab) = tiny(tmp.path());
    let run = |dir: &str| {
        let out = tmp.path().join(dir);
        let o = lamp(&[
            "estimate",
            "--data",
            &dat,
            "--labels",
            &lab,
            "--K",
            "2",
            "--reps",
            "5",
            "--seed",
            "3",
            "--out",
            p(&out),
        ]);
        assert!(o.status.success());
        let mut v = json(&out.join("estimate.json"));
        v["dataset"] = Value::Null;
        v
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn compare_lists_naive_factors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lamp(&["gen-tictactoe", "--out", p(tmp.path())]);
    assert!(o.status.success());
    let dat = tmp.path().join("tictactoe.dat");
    let lab = tmp.path().join("tictactoe.lab");
    let o = lamp(&[
        "compare",
        "--data",
        p(&dat),
        "--labels",
        p(&lab),
        "--out",
        p(tmp.path()),
    ]);
    assert!(o.status.success());
    let tsv = fs::read_to_string(tmp.path().join("compare.tsv")).unwrap();
    let rows: Vec<Vec<&str>> = tsv.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows[0], ["method", "factor", "factor_sci"]);
    assert_eq!(rows[1], ["lamp", "3462", "3.46e+03"]);
    assert_eq!(rows.last().unwrap(), &["naive_all", "262143", "2.62e+05"]);
    assert_eq!(rows.len(), 7);
}
