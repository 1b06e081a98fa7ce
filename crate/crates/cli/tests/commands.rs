use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gaitbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaitbench"))
        .args(args)
        .env_remove("GAITBENCH_API_KEY")
        .output()
        .expect("spawn gaitbench")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn generate(dir: &Path, name: &str, config: Option<&str>) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["generate", "--out", p(&out)];
    let cfg = dir.join(format!("{name}.toml"));
    if let Some(text) = config {
        std::fs::write(&cfg, text).unwrap();
        args.extend(["--config", p(&cfg)]);
    }
    let o = gaitbench(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn small(dir: &Path) -> PathBuf {
    generate(dir, "small.jsonl", Some("n_subjects = 5\ncycles_per_class = 2\n"))
}

fn run(args: &[&str]) -> Output {
    let o = gaitbench(&[&["run"], args].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    o
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn default_generate_writes_420_lines_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "a.jsonl", None);
    let b = generate(dir.path(), "b.jsonl", None);
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes.iter().filter(|&&c| c == b'\n').count(), 420);
    assert_eq!(bytes, std::fs::read(&b).unwrap());

    let o = gaitbench(&["generate", "--out", p(&dir.path().join("c.jsonl")), "--seed", "43"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("20 subjects"));
    assert_ne!(bytes, std::fs::read(dir.path().join("c.jsonl")).unwrap());
}

#[test]
fn malformed_generator_config_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for (text, field) in [
        ("n_subject = 5\n", "n_subject"),
        ("noise_sd_deg = \"loud\"\n", "noise_sd_deg"),
        ("class_effect_scale = -1.0\n", "class_effect_scale"),
        ("n_subjects = 0\n", "n_subjects"),
    ] {
        let cfg = dir.path().join("bad.toml");
        std::fs::write(&cfg, text).unwrap();
        let o = gaitbench(&["generate", "--config", p(&cfg), "--out", p(&dir.path().join("x.jsonl"))]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(field), "{text}: {}", stderr(&o));
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(gaitbench(&["run", "--out", "x"]).status.code(), Some(2));
    assert_eq!(gaitbench(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(gaitbench(&["report"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let out = dir.path().join("o");
    let grounded_knn = gaitbench(&[
        "run",
        "--arm",
        "knn",
        "--dataset",
        p(&ds),
        "--out",
        p(&out),
        "--grounded",
    ]);
    assert_eq!(grounded_knn.status.code(), Some(2));
    let no_backend = gaitbench(&["run", "--arm", "llm", "--dataset", p(&ds), "--out", p(&out)]);
    assert_eq!(no_backend.status.code(), Some(2));
    assert!(stderr(&no_backend).contains("--backend"));
    let missing = gaitbench(&[
        "run",
        "--arm",
        "knn",
        "--dataset",
        p(&dir.path().join("nope")),
        "--out",
        p(&out),
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn knn_bundle_has_multiclass_and_binary_sections() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let out = dir.path().join("knn");
    run(&["--arm", "knn", "--dataset", p(&ds), "--out", p(&out), "--k", "3"]);
    let m = json(&out.join("metrics.json"));
    assert_eq!(m["n_records"], 70);
    assert!(m["multiclass"]["mcc"].is_f64());
    assert!(m["binary"]["macro_f1"].is_f64());
    assert!(m.get("confidence").is_none_or(Value::is_null));
    for f in [
        "predictions.jsonl",
        "confusion_multiclass.csv",
        "confusion_binary.csv",
        "diagnostics.json",
        "config_echo.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(json(&out.join("config_echo.json"))["knn"]["k"], 3);
}

#[test]
fn ocsvm_writes_one_tuning_entry_per_fold() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let out = dir.path().join("ocsvm");
    run(&["--arm", "ocsvm", "--dataset", p(&ds), "--out", p(&out), "--jobs", "2"]);
    let t = json(&out.join("tuning.json"));
    let folds = t.as_array().unwrap();
    assert_eq!(folds.len(), 5);
    let ids: Vec<_> = folds.iter().map(|f| f["fold"].as_u64().unwrap()).collect();
    assert_eq!(ids, [0, 1, 2, 3, 4]);
    let m = json(&out.join("metrics.json"));
    assert!(m.get("multiclass").is_none_or(Value::is_null));
    assert!(!out.join("confusion_multiclass.csv").exists());
}

#[test]
fn mock_llm_needs_no_credential_but_http_does() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let out = dir.path().join("mock");
    run(&[
        "--arm",
        "llm",
        "--backend",
        "mock",
        "--grounded",
        "--dataset",
        p(&ds),
        "--out",
        p(&out),
        "--jobs",
        "3",
    ]);
    let m = json(&out.join("metrics.json"));
    assert_eq!(m["meta"]["grounded"], true);
    assert_eq!(m["confidence"].as_array().unwrap().len(), 3);
    let verdicts = std::fs::read_to_string(out.join("verdicts.jsonl")).unwrap();
    assert_eq!(verdicts.lines().count(), 70);
    assert!(json(&out.join("config_echo.json"))["llm"]["template_sha256"].is_string());

    let http_out = dir.path().join("http");
    let o = gaitbench(&[
        "run",
        "--arm",
        "llm",
        "--backend",
        "http",
        "--model",
        "gpt-4o",
        // nothing listens here; exit 3 must come before any connection attempt
        "--endpoint",
        "http://127.0.0.1:9",
        "--dataset",
        p(&ds),
        "--out",
        p(&http_out),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("GAITBENCH_API_KEY"));
    assert!(!http_out.exists());
}

#[test]
fn fault_injected_mock_run_succeeds_with_failures_in_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let out = dir.path().join("faulty");
    run(&[
        "--arm",
        "llm",
        "--backend",
        "mock",
        "--fault",
        "every-nth:4",
        "--max-retries",
        "1",
        "--dataset",
        p(&ds),
        "--out",
        p(&out),
    ]);
    let d = json(&out.join("diagnostics.json"));
    let failed = d["n_failed"].as_u64().unwrap();
    assert!(failed > 0);
    assert_eq!(d["failures"].as_array().unwrap().len() as u64, failed);
    let m = json(&out.join("metrics.json"));
    assert_eq!(m["binary"]["n"].as_u64().unwrap(), 70 - failed);
}

#[test]
fn echo_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let out = dir.path().join("knn");
    run(&["--arm", "knn", "--dataset", p(&ds), "--out", p(&out)]);
    std::fs::write(
        &ds,
        std::fs::read_to_string(&ds)
            .unwrap()
            .lines()
            .take(69)
            .collect::<Vec<_>>()
            .join("\n"),
    )
    .unwrap();
    let echo = out.join("config_echo.json");
    let o = gaitbench(&["run", "--config", p(&echo), "--out", p(&dir.path().join("again"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sha256"));
}

#[test]
fn rerun_from_echo_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let arms: [&[&str]; 3] = [
        &["--arm", "knn", "--k", "3"],
        &["--arm", "ocsvm", "--seed", "9", "--jobs", "3"],
        &["--arm", "llm", "--backend", "mock", "--grounded", "--jobs", "4"],
    ];
    for (i, arm) in arms.iter().enumerate() {
        let first = dir.path().join(format!("first{i}"));
        run(&[*arm, &["--dataset", p(&ds), "--out", p(&first)]].concat());
        let second = dir.path().join(format!("second{i}"));
        run(&["--config", p(&first.join("config_echo.json")), "--out", p(&second)]);
        for f in ["predictions.jsonl", "config_echo.json", "metrics.json"] {
            assert_eq!(
                std::fs::read(first.join(f)).unwrap(),
                std::fs::read(second.join(f)).unwrap(),
                "{arm:?} {f}"
            );
        }
    }
}

fn split_text_row(line: &str) -> Vec<String> {
    line.split("  ")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

#[test]
fn report_merges_bundles_and_csv_matches_text() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let knn = dir.path().join("knn");
    let llm = dir.path().join("llm");
    run(&["--arm", "knn", "--dataset", p(&ds), "--out", p(&knn)]);
    run(&[
        "--arm",
        "llm",
        "--backend",
        "mock",
        "--grounded",
        "--dataset",
        p(&ds),
        "--out",
        p(&llm),
    ]);
    let csv_path = dir.path().join("table.csv");
    let o = gaitbench(&["report", p(&knn), p(&llm), "--csv", p(&csv_path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();

    let text_rows: Vec<Vec<String>> = text
        .lines()
        .filter(|l| !l.starts_with('*'))
        .map(split_text_row)
        .collect();
    assert_eq!(text_rows[0], ["Metric", "knn", "llm"]);
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let headers: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, text_rows[0]);
    let csv_rows: Vec<Vec<String>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    assert_eq!(csv_rows, text_rows[1..]);

    let row = |name: &str| csv_rows.iter().find(|r| r[0] == name).unwrap().clone();
    for name in ["Multiclass F1", "Multiclass MCC", "Binary F1", "Binary MCC"] {
        assert_eq!(row(name).len(), 3);
        assert!(row(name)[1..].iter().all(|v| v.parse::<f64>().is_ok()), "{name}");
    }
    for level in ["High", "Medium", "Low"] {
        let share = row(&format!("{level} % samples"));
        let f1 = row(&format!("{level} F1"));
        let mcc = row(&format!("{level} MCC"));
        assert_eq!([&share[1], &f1[1], &mcc[1]], ["—"; 3], "{level}");
        assert!(share[2].trim_end_matches('*').ends_with('%'), "{level}");
        // an insufficient stratum keeps its share but no scores
        let small = share[2].ends_with('*');
        assert_eq!(f1[2] == "—", small, "{level}");
        assert_eq!(mcc[2] == "—", small, "{level}");
    }
    assert_ne!(row("High F1")[2], "—");
    assert_eq!(
        text.lines().any(|l| l.starts_with('*')),
        csv_rows.iter().any(|r| r[2].ends_with('*'))
    );
    assert_eq!(row("Reference")[2], "yes");
}

#[test]
fn corrupt_bundle_names_file_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let knn = dir.path().join("knn");
    run(&["--arm", "knn", "--dataset", p(&ds), "--out", p(&knn)]);
    let metrics = knn.join("metrics.json");
    let mut m = json(&metrics);
    m.as_object_mut().unwrap().remove("binary");
    std::fs::write(&metrics, m.to_string()).unwrap();
    let o = gaitbench(&["report", p(&knn)]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("metrics.json") && e.contains("binary"), "{e}");
}
