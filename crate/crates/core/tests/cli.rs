//! End-to-end tests of the command-line interface: exit codes, artifact
//! files and run-to-run determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rosseland")
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

const SOLVE_CONSTANT: &str = r#"
[problem]
domain = "unit_interval"
n = 32

[problem.range]
t_min = 1.0
t_max = 2.0

[problem.model]
type = "rosseland"
k = 1.0
b = 1.0

[problem.boundary]
type = "constant"
value = 1.5

[output]
formats = ["csv", "json", "vtk", "mtx"]
"#;

#[test]
fn solve_constant_boundary_exits_zero_with_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", SOLVE_CONSTANT);
    let out_dir = tmp.path().join("out");
    let output = run(&[
        "solve",
        config.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    assert_eq!(output.status.code(), Some(0));

    for artifact in ["iterations.csv", "summary.json", "solution.vtk", "system.mtx"] {
        assert!(out_dir.join(artifact).exists(), "missing {artifact}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["report"]["converged"], true);
    let min = summary["solution"]["min"].as_f64().unwrap();
    let max = summary["solution"]["max"].as_f64().unwrap();
    assert!((min - 1.5).abs() <= 1e-10 && (max - 1.5).abs() <= 1e-10);

    let vtk = fs::read_to_string(out_dir.join("solution.vtk")).unwrap();
    assert!(vtk.contains("POINTS 33 double"));
    let mtx = fs::read_to_string(out_dir.join("system.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate real general"));
}

#[test]
fn ellipticity_failure_exits_one_with_message() {
    let config_text = SOLVE_CONSTANT
        .replace("k = 1.0", "k = 0.0")
        .replace("t_min = 1.0", "t_min = 0.0")
        .replace("value = 1.5", "value = 0.5");
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "bad.toml", &config_text);
    let output = run(&["solve", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("ellipticity violation"), "stderr: {stderr}");
    assert!(stderr.contains("z=0"), "stderr: {stderr}");
}

#[test]
fn boundary_range_violation_exits_one() {
    let config_text = SOLVE_CONSTANT.replace("value = 1.5", "value = 3.0");
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "bad.toml", &config_text);
    let output = run(&["validate", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("outside admissible range"), "stderr: {stderr}");
}

#[test]
fn missing_key_names_it() {
    let config_text = SOLVE_CONSTANT.replace("t_min = 1.0\n", "");
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "bad.toml", &config_text);
    let output = run(&["validate", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("t_min"), "stderr: {stderr}");
}

#[test]
fn validate_prints_certificate() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", SOLVE_CONSTANT);
    let output = run(&["validate", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("lambda_min"), "stdout: {stdout}");
    assert!(stdout.contains("lambda_max"), "stdout: {stdout}");
}

#[test]
fn quiet_suppresses_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", SOLVE_CONSTANT);
    let output = run(&["validate", config.to_str().unwrap(), "--quiet"]);
    assert_eq!(output.status.code(), Some(0));
    assert!(output.stdout.is_empty());
}

#[test]
fn non_convergence_exits_two_and_writes_artifacts() {
    let config_text = format!(
        "{}\n[solver]\ntol_l2 = 1e-14\nmax_iterations = 2\n",
        SOLVE_CONSTANT
            .replace("type = \"constant\"\nvalue = 1.5", "type = \"endpoints\"\nleft = 1.0\nright = 2.0")
    );
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", &config_text);
    let out_dir = tmp.path().join("out");
    let output = run(&[
        "solve",
        config.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(output.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    assert!(out_dir.join("iterations.csv").exists());
    assert!(out_dir.join("summary.json").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["report"]["converged"], false);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config_text = SOLVE_CONSTANT
        .replace("type = \"constant\"\nvalue = 1.5", "type = \"endpoints\"\nleft = 1.0\nright = 2.0");
    let config = write_config(tmp.path(), "run.toml", &config_text);
    let mut payloads = Vec::new();
    for run_dir in ["a", "b"] {
        let out_dir = tmp.path().join(run_dir);
        let output = run(&[
            "solve",
            config.to_str().unwrap(),
            "--output-dir",
            out_dir.to_str().unwrap(),
            "--quiet",
        ]);
        assert_eq!(output.status.code(), Some(0));
        payloads.push((
            fs::read(out_dir.join("iterations.csv")).unwrap(),
            fs::read(out_dir.join("summary.json")).unwrap(),
            fs::read(out_dir.join("solution.vtk")).unwrap(),
        ));
    }
    assert_eq!(payloads[0].0, payloads[1].0, "iterations.csv differs");
    assert_eq!(payloads[0].1, payloads[1].1, "summary.json differs");
    assert_eq!(payloads[0].2, payloads[1].2, "solution.vtk differs");
}

const EXPERIMENT_BASE: &str = r#"
[problem]
domain = "unit_interval"
n = 64

[problem.range]
t_min = 1.0
t_max = 2.0

[problem.model]
type = "rosseland"
k = 1.0
b = 1.0

[problem.boundary]
type = "endpoints"
left = 1.0
right = 2.0
"#;

#[test]
fn convergence_experiment_writes_order_table() {
    let config_text = format!(
        "{EXPERIMENT_BASE}\n[experiment]\nkind = \"convergence\"\nlevels = [8, 16, 32, 64, 128]\n"
    );
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", &config_text);
    let out_dir = tmp.path().join("out");
    let output = run(&[
        "experiment",
        config.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let csv = fs::read_to_string(out_dir.join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,h,l2_error,h1_error,l2_order,h1_order"
    );
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 4, "rows: {rows:?}");
    // every row past the first carries observed orders
    for row in &rows[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert!(!fields[4].is_empty() && !fields[5].is_empty(), "row: {row}");
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("experiment convergence"), "stdout: {stdout}");
}

#[test]
fn dependence_and_flux_experiments_run() {
    for (kind, extra, artifact) in [
        (
            "coeff-dependence",
            "epsilons = [1e-1, 1e-2, 1e-3]".to_string(),
            "coeff_dependence.csv",
        ),
        (
            "boundary-dependence",
            "epsilons = [1e-2, 1e-3]\nprofile = { type = \"endpoints\", left = 0.0, right = -0.5 }"
                .to_string(),
            "boundary_dependence.csv",
        ),
        ("flux", String::new(), "flux.csv"),
    ] {
        let config_text = format!("{EXPERIMENT_BASE}\n[experiment]\nkind = \"{kind}\"\n{extra}\n");
        let tmp = tempfile::tempdir().unwrap();
        let config = write_config(tmp.path(), "run.toml", &config_text);
        let out_dir = tmp.path().join("out");
        let output = run(&[
            "experiment",
            config.to_str().unwrap(),
            "--output-dir",
            out_dir.to_str().unwrap(),
            "--quiet",
        ]);
        assert_eq!(
            output.status.code(),
            Some(0),
            "{kind} stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        assert!(out_dir.join(artifact).exists(), "{kind}: missing {artifact}");
        assert!(out_dir.join("summary.json").exists());
    }
}

#[test]
fn experiment_mode_requires_section() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", EXPERIMENT_BASE);
    let output = run(&["experiment", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("[experiment]"));
}

#[test]
fn unreadable_config_exits_one() {
    let output = run(&["solve", "/nonexistent/place/run.toml"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn shipped_configs_run_clean() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        seen += 1;
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let mode = if name.starts_with("solve") {
            "solve"
        } else {
            "experiment"
        };
        let tmp = tempfile::tempdir().unwrap();
        let output = run(&[
            mode,
            path.to_str().unwrap(),
            "--output-dir",
            tmp.path().to_str().unwrap(),
            "--quiet",
        ]);
        assert_eq!(
            output.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        assert!(tmp.path().join("summary.json").exists(), "{name}");
    }
    assert!(seen >= 6, "expected the shipped configs, found {seen}");
}
