use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn rectif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rectif")).args(args).output().expect("spawn rectif")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn ratio(s: &Value, task: usize, key: &str) -> f64 {
    s["tasks"][task]["ratios"][key].as_f64().unwrap_or_else(|| panic!("{key} missing in {s}"))
}

const SEGMENT: &str = r#"{"generator": {"kind": "segment", "length": 2.0, "spacing": 0.015625}}"#;

#[test]
fn dini_on_segment_gives_one_bounded_row_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dini.json",
        &format!(r#"{{"input": {SEGMENT}, "tasks": [{{"task": "dini", "points": 5, "t_max": 0.25}}]}}"#),
    );
    let out = tmp.path().join("out");
    let o = rectif(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(out.join("01_dini.csv")).unwrap();
    let headers = rd.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["x1", "x2", "slope", "energy", "bounded"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| &r[4] == "1"));
    let s = summary(&out);
    assert_eq!(s["schema"], 1);
    assert_eq!(ratio(&s, 0, "fraction_bounded"), 1.0);
}

#[test]
fn cantor_carleson_ratio_dominates_segment() {
    let tmp = tempfile::tempdir().unwrap();
    // an interior root, so the endpoints stay out of every ball
    let seg = write_config(
        tmp.path(),
        "seg.json",
        r#"{"input": {"generator": {"kind": "segment", "length": 2.0, "spacing": 0.0078125}},
            "tasks": [{"task": "carleson", "tree": {"j_max": 8, "unit": 2.0, "root_level": 3, "root_point": 128}}], "out": "seg"}"#,
    );
    let cantor = write_config(
        tmp.path(),
        "cantor.json",
        r#"{"input": {"generator": {"kind": "cantor4", "generations": 5}},
            "tasks": [{"task": "carleson", "tree": {"j_max": 10, "unit": 1.5}}], "out": "cantor"}"#,
    );
    for cfg in [&seg, &cantor] {
        let o = rectif(&["run", cfg.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let rs = ratio(&summary(&tmp.path().join("seg")), 0, "ratio");
    let rc = ratio(&summary(&tmp.path().join("cantor")), 0, "ratio");
    assert!(rc > 0.1 && rc >= 5.0 * rs, "cantor {rc} segment {rs}");
}

#[test]
fn empty_task_list_exits_zero_with_empty_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "empty.json", &format!(r#"{{"input": {SEGMENT}, "tasks": []}}"#));
    let o = rectif(&["run", cfg.to_str().unwrap(), "--strict"]);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&tmp.path().join("out"));
    assert_eq!(s["tasks"].as_array().unwrap().len(), 0);
}

#[test]
fn unreadable_config_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    assert_eq!(rectif(&["run", missing.to_str().unwrap()]).status.code(), Some(2));
    let bad = write_config(tmp.path(), "bad.json", "{ not json");
    assert_eq!(rectif(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn failed_task_exits_one_and_verification_failure_only_under_strict() {
    let tmp = tempfile::tempdir().unwrap();
    // λ below the admissible threshold is a task error
    let err = write_config(
        tmp.path(),
        "err.json",
        &format!(r#"{{"input": {SEGMENT}, "tasks": [{{"task": "cz", "nu": {{"atoms": [[5, 1.0]]}}, "lambda_factor": 0.5}}]}}"#),
    );
    let o = rectif(&["run", err.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(summary(&tmp.path().join("out"))["tasks"][0]["status"], "error");

    // rounding residue in the interior exceeds a zero tolerance
    let coarse = write_config(
        tmp.path(),
        "coarse.json",
        &format!(
            r#"{{"input": {SEGMENT}, "tasks": [{{"task": "wavelet-lemma", "depth": 8, "level_min": 0, "level_max": 3, "tol": 0.0}}], "out": "coarse"}}"#
        ),
    );
    let o = rectif(&["run", coarse.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&tmp.path().join("coarse"))["tasks"][0]["status"], "verification-failed");
    let o = rectif(&["run", coarse.to_str().unwrap(), "--strict"]);
    assert_eq!(o.status.code(), Some(1));
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "all.json",
        r#"{"input": {"generator": {"kind": "lipschitz_graph", "amplitude": 0.3, "frequency": 1.0, "extent": 4.0, "spacing": 0.0625}},
            "tasks": [
                {"task": "coeffs-sweep", "kind": "c", "points": 4, "scales": 5},
                {"task": "coeffs-sweep", "kind": "beta2", "points": 4, "scales": 3},
                {"task": "coeffs-sweep", "kind": "alpha", "j_max": 1, "min_points": 20, "alpha": {"grid_steps": 2, "polish_evals": 24}},
                {"task": "dini", "points": 3, "t_max": 0.5, "octaves": 4},
                {"task": "carleson", "tree": {"j_max": 4}, "coef": {"kind": "comega", "modes": [[1, 1.0, 0.0]], "delta": 0.05}},
                {"task": "alpha-energy", "tree": {"j_max": 1}, "alpha": {"grid_steps": 2, "polish_evals": 24}},
                {"task": "beta-energy", "tree": {"j_max": 4}},
                {"task": "cz", "nu": {"bump": {"from": 20, "to": 24, "factor": 30.0}}, "lambda_factor": 2.0},
                {"task": "wavelet-lemma", "level_min": -1, "level_max": 4, "depth": 10},
                {"task": "weak11", "nu": {"atoms": [[30, 0.5]]}, "octaves": 4}
            ]}"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, threads) in [(&a, "1"), (&b, "2")] {
        let o = rectif(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let s = summary(&a);
    for t in s["tasks"].as_array().unwrap() {
        assert_eq!(t["status"], "ok", "{t}");
    }
    let (fa, fb) = (read_all(&a), read_all(&b));
    assert_eq!(fa.len(), 12);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.0, y.0);
        assert!(x.1 == y.1, "{} differs between runs", x.0);
    }
}

#[test]
fn report_merges_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let one = write_config(
        tmp.path(),
        "one.json",
        &format!(r#"{{"input": {SEGMENT}, "tasks": [{{"task": "dini", "points": 3, "t_max": 0.25}}], "out": "one"}}"#),
    );
    let two = write_config(
        tmp.path(),
        "two.json",
        r#"{"input": {"generator": {"kind": "cantor4", "generations": 3}},
            "tasks": [{"task": "carleson", "tree": {"j_max": 6, "unit": 1.5}}], "out": "two"}"#,
    );
    for cfg in [&one, &two] {
        assert!(rectif(&["run", cfg.to_str().unwrap()]).status.success());
    }
    let s1 = tmp.path().join("one/summary.json");
    let s2 = tmp.path().join("two/summary.json");
    let rows = |out: &Path| -> Vec<Vec<String>> {
        let mut rd = csv::Reader::from_path(out.join("report.csv")).unwrap();
        assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), ["generator", "task", "kind", "metric", "value", "status"]);
        rd.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
    };

    let r1 = tmp.path().join("r1");
    assert!(rectif(&["report", s1.to_str().unwrap(), "--out", r1.to_str().unwrap()]).status.success());
    let r11 = tmp.path().join("r11");
    assert!(rectif(&["report", s1.to_str().unwrap(), s1.to_str().unwrap(), "--out", r11.to_str().unwrap()]).status.success());
    assert_eq!(rows(&r1), rows(&r11));

    let r2 = tmp.path().join("r2");
    assert!(rectif(&["report", s2.to_str().unwrap(), "--out", r2.to_str().unwrap()]).status.success());
    let r12 = tmp.path().join("r12");
    assert!(rectif(&["report", s1.to_str().unwrap(), s2.to_str().unwrap(), "--out", r12.to_str().unwrap()]).status.success());
    let mut union = rows(&r1);
    union.extend(rows(&r2));
    union.sort();
    assert_eq!(rows(&r12), union);

    let plot = std::fs::read_to_string(r12.join("plot.csv")).unwrap();
    assert!(plot.starts_with("series,x,y\n"));
    assert!(plot.contains("cantor4_g3/carleson/c/energy_by_level,"));
}

#[test]
fn report_rejects_other_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "old.json", r#"{"schema": 2, "generator": "x", "points": 0, "tasks": []}"#);
    let o = rectif(&["report", p.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
