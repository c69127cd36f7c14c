use std::path::Path;
use std::process::{Command, Output};

use wormsim::DetectionReport;
use wormsim_harness::cli::exit;
use wormsim_harness::read_rows;

fn wormsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wormsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> u8 {
    o.status.code().expect("exit code") as u8
}

#[test]
fn run_writes_trace_report_and_row() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("short.toml"), "sim.duration = 3600\n").unwrap();
    let o = wormsim(
        &["run", "--config", "short.toml", "--nodes", "58", "--protocol", "epidemic", "--seed", "1", "--out", "out"],
        dir.path(),
    );
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let trace = std::fs::read_to_string(out.join("trace.txt")).unwrap();
    assert!(trace.starts_with("0 SCENARIO nodes=58 pairs=5 duration=3600 protocol=epidemic seed=1"));
    let report = DetectionReport::parse_record_file(&std::fs::read_to_string(out.join("report.txt")).unwrap()).unwrap();
    assert_eq!(report.preset_pairs, 5);
    let rows = read_rows(std::fs::File::open(out.join("row.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].true_detections, report.true_detections);
}

#[test]
fn replay_reproduces_the_report_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("short.toml"), "sim.duration = 7200\n").unwrap();
    let o = wormsim(&["run", "--config", "short.toml", "--protocol", "prophet", "--seed", "2", "--out", "."], dir.path());
    assert_eq!(code(&o), exit::OK);
    let o = wormsim(&["replay", "--trace", "trace.txt"], dir.path());
    assert_eq!(code(&o), exit::OK);
    assert_eq!(o.stdout, std::fs::read(dir.path().join("report.txt")).unwrap());

    std::fs::write(dir.path().join("strict.toml"), "detector.z_threshold = 50\n").unwrap();
    let o = wormsim(&["replay", "--trace", "trace.txt", "--params", "strict.toml", "--out", "strict.txt"], dir.path());
    assert_eq!(code(&o), exit::OK);
    let strict = DetectionReport::parse_record_file(&std::fs::read_to_string(dir.path().join("strict.txt")).unwrap()).unwrap();
    assert!(strict.suspects.is_empty() && strict.confirmed_pairs.is_empty());
}

#[test]
fn errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&wormsim(&["run", "--bogus"], d)), exit::USAGE);
    assert_eq!(code(&wormsim(&["run", "--protocol", "carrier-pigeon"], d)), exit::USAGE);
    assert_eq!(code(&wormsim(&["replay", "--trace", "missing.txt"], d)), exit::IO);
    std::fs::write(d.join("bad.toml"), "sim.tick = 0\n").unwrap();
    let o = wormsim(&["run", "--config", "bad.toml"], d);
    assert_eq!(code(&o), exit::CONFIG);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sim.tick"));
    std::fs::write(d.join("typo.toml"), "sim.durration = 5\n").unwrap();
    assert_eq!(code(&wormsim(&["run", "--config", "typo.toml"], d)), exit::CONFIG);
    assert_eq!(code(&wormsim(&["run", "--nodes", "10"], d)), exit::CONFIG);
    std::fs::write(d.join("junk.txt"), "not a trace\n").unwrap();
    assert_eq!(code(&wormsim(&["replay", "--trace", "junk.txt"], d)), exit::INPUT);
    std::fs::write(d.join("junk.csv"), "a,b\n1,2\n").unwrap();
    assert_eq!(code(&wormsim(&["report", "--input", "junk.csv"], d)), exit::INPUT);
    let codes = [exit::OK, exit::USAGE, exit::IO, exit::CONFIG, exit::INPUT];
    for (i, a) in codes.iter().enumerate() {
        assert!(codes[i + 1..].iter().all(|b| a != b));
    }
}

#[test]
fn matrix_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("short.toml"), "sim.duration = 2400\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_wormsim"))
        .args(["matrix", "--config", "short.toml", "--seeds", "5", "--out", "results.csv"])
        .env(wormsim_harness::WORKERS_ENV, "2")
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(std::fs::File::open(d.join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 80);

    let o = wormsim(&["report", "--input", "results.csv", "--out", "plots"], d);
    assert_eq!(code(&o), exit::OK);
    let summary = std::fs::read_to_string(d.join("plots/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 16);
    let density = std::fs::read_to_string(d.join("plots/density.csv")).unwrap();
    assert_eq!(density.lines().count(), 1 + 4);
    assert!(d.join("plots/series.csv").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("spray-and-wait"));
}

#[test]
fn matrix_can_keep_traces() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("short.toml"), "sim.duration = 600\n").unwrap();
    let o = wormsim(
        &["matrix", "--config", "short.toml", "--seeds", "1", "--nodes", "58", "--protocols", "first-contact,epidemic", "--traces", "traces"],
        d,
    );
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("traces/trace_n58_first-contact_s1.txt").exists());
    assert!(d.join("traces/trace_n58_epidemic_s1.txt").exists());
}

#[test]
fn shipped_config_is_the_reference_scenario() {
    let text = include_str!("../../../configs/reference.toml");
    let cfg = wormsim::load_config(text).unwrap();
    assert_eq!(cfg, wormsim::ScenarioConfig::default());
    assert_eq!(wormsim::load_config(&cfg.to_document()).unwrap(), cfg);
}
