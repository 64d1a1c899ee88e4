//! End-to-end checks of the command-line surface: JSON outputs, exit
//! codes, determinism across reruns and thread counts, and file round
//! trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kmedian"))
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kmedian-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_line3(dir: &Path) -> PathBuf {
    let path = dir.join("line3.json");
    std::fs::write(
        &path,
        r#"{"metric": "euclidean", "points": [[0], [1], [3]]}"#,
    )
    .unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn solve_planted_line_from_the_shell() {
    let dir = tempdir("solve");
    let instance = write_line3(&dir);
    let output = run(&[
        "solve",
        "--instance",
        instance.to_str().unwrap(),
        "-k",
        "2",
        "--mode",
        "planted",
        "--trials",
        "50",
        "--seed",
        "7",
        "--epsilon",
        "0.1",
    ]);
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["cost"].as_f64().unwrap(), 1.0);
    assert_eq!(report["format"].as_u64().unwrap(), 1);
}

#[test]
fn identical_config_gives_identical_bytes_across_thread_counts() {
    let dir = tempdir("determinism");
    let instance = write_line3(&dir);
    let base = [
        "solve",
        "--instance",
        instance.to_str().unwrap(),
        "-k",
        "2",
        "--trials",
        "64",
        "--seed",
        "11",
        "--epsilon",
        "0.5",
    ];
    let first = run(&base);
    let second = run(&base);
    assert_eq!(first.stdout, second.stdout, "reruns must be byte-identical");
    let mut with_one_thread = base.to_vec();
    with_one_thread.extend(["--threads", "1"]);
    let mut with_four_threads = base.to_vec();
    with_four_threads.extend(["--threads", "4"]);
    let one = run(&with_one_thread);
    let four = run(&with_four_threads);
    assert_eq!(
        one.stdout, four.stdout,
        "thread count must not change output"
    );
    assert_eq!(first.stdout, one.stdout);
}

#[test]
fn gen_and_coverage_are_byte_deterministic() {
    let gen_args = [
        "gen", "--type", "random", "-n", "25", "-d", "3", "-m", "60", "--seed", "9",
    ];
    let a = run(&gen_args);
    let b = run(&gen_args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let dir = tempdir("gen-cov");
    let h_path = dir.join("h.json");
    std::fs::write(&h_path, &a.stdout).unwrap();
    let cov_args = [
        "coverage",
        "--hypergraph",
        h_path.to_str().unwrap(),
        "--random-sets",
        "7",
        "--alpha",
        "0.4",
        "--seed",
        "3",
    ];
    let c = run(&cov_args);
    let d = run(&cov_args);
    assert!(c.status.success());
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn gen_output_round_trips() {
    let output = run(&[
        "gen", "--type", "planted", "-n", "6", "-d", "3", "-m", "12", "--seed", "5",
    ]);
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let parsed = kmedian::gadgets::Hypergraph::from_json(&text).unwrap();
    assert_eq!(parsed.to_json() + "\n", text);
    assert_eq!(parsed.n, 6);
    assert_eq!(parsed.edges.len(), 12);
}

#[test]
fn reduce_output_passes_metric_validation() {
    let dir = tempdir("reduce");
    let h_path = dir.join("h.json");
    let gen = run(&[
        "gen",
        "--type",
        "planted",
        "-n",
        "4",
        "-d",
        "3",
        "-m",
        "8",
        "--seed",
        "2",
        "--output",
        h_path.to_str().unwrap(),
    ]);
    assert!(gen.status.success());
    let reduced_path = dir.join("reduced.json");
    let sidecar_path = dir.join("side.json");
    let reduce = run(&[
        "reduce",
        "--hypergraph",
        h_path.to_str().unwrap(),
        "--copies",
        "3",
        "--sidecar",
        sidecar_path.to_str().unwrap(),
        "--output",
        reduced_path.to_str().unwrap(),
    ]);
    assert!(reduce.status.success());
    let instance = kmedian::metric::MetricInstance::from_json(
        &std::fs::read_to_string(&reduced_path).unwrap(),
    )
    .unwrap();
    assert!(instance.validate().is_empty());
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sidecar_path).unwrap()).unwrap();
    assert_eq!(sidecar["k"].as_u64().unwrap(), 2);
    assert_eq!(instance.n(), 4 + 8 * 3);
}

#[test]
fn coverage_statistics_run() {
    let dir = tempdir("coverage");
    let h_path = dir.join("h.json");
    run(&[
        "gen",
        "--type",
        "random",
        "-n",
        "30",
        "-d",
        "3",
        "-m",
        "100",
        "--seed",
        "4",
        "--output",
        h_path.to_str().unwrap(),
    ]);
    let output = run(&[
        "coverage",
        "--hypergraph",
        h_path.to_str().unwrap(),
        "--random-sets",
        "5",
        "--alpha",
        "0.5",
        "--seed",
        "6",
    ]);
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["results"].as_array().unwrap().len(), 5);
    for line in report["results"].as_array().unwrap() {
        let fraction = line["fraction"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&fraction));
    }
}

#[test]
fn bounds_verify_reports_clean_grid() {
    let output = run(&["bounds", "--verify", "--resolution", "100", "--d-max", "10"]);
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(
        report["envelope"]["violations"].as_array().unwrap().len(),
        0
    );
    assert!((report["constants"]["alpha_alg"].as_f64().unwrap() - 1.546).abs() < 1e-3);
}

#[test]
fn exit_code_two_on_bad_input() {
    let missing = run(&["solve", "--instance", "/nonexistent/x.json", "-k", "2"]);
    assert_eq!(missing.status.code(), Some(2));
    let error: serde_json::Value = serde_json::from_slice(&missing.stderr).unwrap();
    assert_eq!(error["code"].as_i64().unwrap(), 2);

    let dir = tempdir("badjson");
    let path = dir.join("bad.json");
    std::fs::write(&path, "{broken").unwrap();
    let bad = run(&["solve", "--instance", path.to_str().unwrap(), "-k", "2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn exit_code_three_on_budget_overflow() {
    let dir = tempdir("budget");
    // 40 points with epsilon 0.5 explode the guess budget for k = 5
    let points: Vec<String> = (0..40)
        .map(|i| format!("[{}]", i as f64 * 1.37 + 1.0))
        .collect();
    let path = dir.join("big.json");
    std::fs::write(
        &path,
        format!(
            r#"{{"metric": "euclidean", "points": [{}]}}"#,
            points.join(", ")
        ),
    )
    .unwrap();
    let output = run(&[
        "solve",
        "--instance",
        path.to_str().unwrap(),
        "-k",
        "5",
        "--mode",
        "full",
        "--epsilon",
        "0.5",
    ]);
    assert_eq!(output.status.code(), Some(3));
    let error: serde_json::Value = serde_json::from_slice(&output.stderr).unwrap();
    assert!(error["error"].as_str().unwrap().contains("guess budget"));
}

#[test]
fn lp_dump_is_written() {
    let dir = tempdir("dump");
    let instance = write_line3(&dir);
    let dump = dir.join("model.lp");
    let output = run(&[
        "solve",
        "--instance",
        instance.to_str().unwrap(),
        "-k",
        "2",
        "--mode",
        "planted",
        "--trials",
        "5",
        "--dump-lp",
        dump.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.contains("Minimize"));
    assert!(text.contains("Subject To"));
}
