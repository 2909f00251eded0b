//! End-to-end tests of the `rbsched` binary: exit codes, output files,
//! replay determinism, and the Gantt export.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rbsched::model::{builtin_instance, serialize_instance, BusType, SetupRule};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rbsched"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn builtin_path() -> String {
    repo_file("instances/builtin.json").display().to_string()
}

fn single_bus_instance_file(dir: &Path) -> String {
    let mut inst = builtin_instance();
    inst.stages = vec![1, 1, 1, 1];
    inst.buffer.rows = 1;
    inst.buffer.cols = 1;
    inst.buses.truncate(1);
    let path = dir.join("single.json");
    std::fs::write(&path, serialize_instance(&inst)).unwrap();
    path.display().to_string()
}

#[test]
fn validate_accepts_shipped_instances() {
    for rel in ["instances/builtin.json", "instances/builtin_factors.json"] {
        let out = run(&["validate", "--instance", &repo_file(rel).display().to_string()]);
        assert!(out.status.success(), "{rel}: {out:?}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("no violations"));
    }
}

#[test]
fn shipped_instance_file_matches_builtin_fixture() {
    let text = std::fs::read_to_string(repo_file("instances/builtin.json")).unwrap();
    let parsed = rbsched::model::parse_instance(&text).unwrap();
    assert_eq!(parsed, builtin_instance());
}

#[test]
fn validate_rejects_asymmetric_matrix_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst = builtin_instance();
    if let SetupRule::Matrix(rows) = &mut inst.setup.rule {
        let a = BusType::new("Type1", "Color1");
        let b = BusType::new("Type2", "Color1");
        *rows.get_mut(&a).unwrap().get_mut(&b).unwrap() = 99;
    }
    let path = dir.path().join("bad.json");
    std::fs::write(&path, serialize_instance(&inst)).unwrap();
    let out = run(&["validate", "--instance", &path.display().to_string()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Type1|Color1") && text.contains("Type2|Color1"), "{text}");
}

#[test]
fn validate_missing_file_exits_2() {
    let out = run(&["validate", "--instance", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_prints_single_bus_makespan() {
    let dir = tempfile::tempdir().unwrap();
    let inst = single_bus_instance_file(dir.path());
    let out_dir = dir.path().join("out");
    let out = run(&[
        "run",
        "--instance",
        &inst,
        "--scheme",
        "min-setup",
        "--seed",
        "7",
        "--out",
        &out_dir.display().to_string(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("makespan: 114"), "{stdout}");
    assert!(stdout.contains("next_stage_setup_total: 0"), "{stdout}");
    assert!(out_dir.join("result.json").exists());
    assert!(out_dir.join("metrics.json").exists());
}

#[test]
fn run_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args_for = |out: &Path| {
        vec![
            "run".to_string(),
            "--instance".into(),
            builtin_path(),
            "--scheme".into(),
            "random".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(bin().args(args_for(&a)).status().unwrap().success());
    assert!(bin().args(args_for(&b)).status().unwrap().success());
    for name in ["result.json", "metrics.json"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between identical invocations");
    }
}

#[test]
fn run_result_satisfies_stage_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "run",
        "--instance",
        &builtin_path(),
        "--seed",
        "3",
        "--out",
        &out_dir.display().to_string(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let metrics: rbsched::sim::Metrics =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics.next_stage_completion <= metrics.makespan);
}

#[test]
fn compare_writes_report_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "compare",
        "--instance",
        &builtin_path(),
        "--runs",
        "2",
        "--seed",
        "5",
        "--out",
        &out_dir.display().to_string(),
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "{out:?}");
    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(csv.starts_with("metric,statistic,value\n"));
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 3));

    let out = run(&[
        "compare",
        "--instance",
        &builtin_path(),
        "--runs",
        "1",
        "--seed",
        "5",
        "--out",
        &out_dir.display().to_string(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let report: rbsched::harness::ComparisonReport =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.runs, 1);
    for stats in [&report.scheme1, &report.scheme2] {
        assert_eq!(stats.makespan.optimal, stats.makespan.worst);
        assert_eq!(stats.makespan.average, stats.makespan.optimal as f64);
    }
}

#[test]
fn gantt_renders_expected_segment_classes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = single_bus_instance_file(dir.path());
    let out_dir = dir.path().join("out");
    assert!(bin()
        .args(["run", "--instance", &inst, "--out", &out_dir.display().to_string()])
        .status()
        .unwrap()
        .success());
    let svg_path = dir.path().join("chart.svg");
    let out = run(&[
        "gantt",
        "--result",
        &out_dir.join("result.json").display().to_string(),
        "--out",
        &svg_path.display().to_string(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    let segments = |class: &str| {
        svg.lines()
            .filter(|l| l.contains(&format!("class=\"{class}\"")) && l.contains("data-bus"))
            .count()
    };
    assert_eq!(segments("proc"), 4);
    // No setup and no buffer residency for a lone pass-through bus.
    assert_eq!(segments("setup"), 0);
    assert_eq!(segments("buffer"), 0);
    assert!(svg.contains("minutes"));
}

#[test]
fn gantt_red_segment_length_equals_changeover_cost() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst = builtin_instance();
    inst.stages = vec![1, 1];
    inst.buffer.rows = 1;
    inst.buffer.cols = 1;
    inst.buses.truncate(2);
    for bus in &mut inst.buses {
        bus.proc_times = vec![5, 10];
    }
    let path = dir.path().join("two.json");
    std::fs::write(&path, serialize_instance(&inst)).unwrap();
    let out_dir = dir.path().join("out");
    assert!(bin()
        .args([
            "run",
            "--instance",
            &path.display().to_string(),
            "--out",
            &out_dir.display().to_string()
        ])
        .status()
        .unwrap()
        .success());
    let svg_path = dir.path().join("chart.svg");
    assert!(bin()
        .args([
            "gantt",
            "--result",
            &out_dir.join("result.json").display().to_string(),
            "--out",
            &svg_path.display().to_string()
        ])
        .status()
        .unwrap()
        .success());
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    // J1 (Type1|Color1) then J2 (Type3|Color2): one 16-minute setup.
    let setup_rects: Vec<&str> = svg
        .lines()
        .filter(|l| l.contains("class=\"setup\"") && l.contains("data-t0"))
        .collect();
    assert_eq!(setup_rects.len(), 1, "{svg}");
    assert!(setup_rects[0].contains("data-t0=\"15\"") && setup_rects[0].contains("data-t1=\"31\""));
}

#[test]
fn gantt_rejects_malformed_result_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = run(&[
        "gantt",
        "--result",
        &path.display().to_string(),
        "--out",
        &dir.path().join("x.svg").display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_cap_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .env("RBSCHED_THREADS", "1")
        .args([
            "compare",
            "--instance",
            &builtin_path(),
            "--runs",
            "2",
            "--seed",
            "1",
            "--out",
            &out_dir.display().to_string(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");

    // 0 selects the automatic degree.
    let out = bin()
        .env("RBSCHED_THREADS", "0")
        .args(["validate", "--instance", &builtin_path()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");

    let out = bin()
        .env("RBSCHED_THREADS", "not-a-number")
        .args(["validate", "--instance", &builtin_path()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
