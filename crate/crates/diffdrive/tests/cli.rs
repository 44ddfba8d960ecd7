use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use diffdrive::report::{ReportFormat, ScenarioReport, SectionBody};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diffdrive"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// Numeric columns of each table1 data row (after the three-word pulley name).
fn table_columns(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| {
            l.split_whitespace()
                .skip(3)
                .map(|v| v.parse().unwrap())
                .collect()
        })
        .collect()
}

#[test]
fn table1_default_prints_rated_and_real() {
    let o = run(&["table1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("Slave Pulley 1"));
    let cols = table_columns(&text);
    let rated: Vec<f64> = cols.iter().map(|r| r[3]).collect();
    let real: Vec<f64> = cols.iter().map(|r| r[4]).collect();
    assert_eq!(rated, [375.0, 300.0, 225.0, 150.0, 450.0]);
    assert_eq!(real, [187.5, 150.0, 112.5, 75.0, 225.0]);
}

#[test]
fn table1_matches_fixture() {
    let text = stdout(&run(&["table1"]));
    let fixture = std::fs::read_to_string(fixture("table1.csv")).unwrap();
    for (line, row) in text.lines().skip(1).zip(fixture.lines().skip(1)) {
        let f: Vec<&str> = row.split(',').collect();
        assert!(line.starts_with(f[0]));
        let nums: Vec<&str> = line.split_whitespace().skip(3).collect();
        assert_eq!(nums[0], f[1]);
        assert_eq!(nums[1], f[2]);
        assert_eq!(nums[3].parse::<f64>().unwrap(), f[3].parse::<f64>().unwrap());
        assert_eq!(nums[4].parse::<f64>().unwrap(), f[4].parse::<f64>().unwrap());
    }
}

#[test]
fn table1_scaled_and_zero_input() {
    let col = |rpm: &str| -> Vec<f64> {
        table_columns(&stdout(&run(&["table1", "--input-rpm", rpm])))
            .iter()
            .map(|r| r[3])
            .collect()
    };
    assert_eq!(col("100"), [250.0, 200.0, 150.0, 100.0, 300.0]);
    assert_eq!(col("0"), [0.0; 5]);
    assert_eq!(run(&["table1", "--input-rpm", "-5"]).status.code(), Some(2));
}

fn drift_mm(o: &Output) -> f64 {
    let text = stdout(o);
    let line = text.lines().find(|l| l.starts_with("insertion_drift")).unwrap();
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn drift_command() {
    let o = run(&["drift", "--epsilon", "0.015", "--revs", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((drift_mm(&o) - 2.1).abs() <= 0.021);
    let o = run(&["drift", "--epsilon", "0", "--revs", "7"]);
    assert!(drift_mm(&o).abs() <= 0.004);
    let o = run(&["drift", "--epsilon", "0.015", "--revs", "7", "--compensated"]);
    assert!(drift_mm(&o).abs() < 0.105);
}

#[test]
fn drift_rejects_out_of_range_epsilon() {
    for args in [
        &["drift", "--epsilon", "0.5"][..],
        &["drift", "--epsilon", "-0.1"],
        &["drift", "--epsilon", "abc"],
        &["drift", "--revs", "0"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains("--"), "{args:?}");
    }
}

#[test]
fn run_writes_sectioned_csv_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = fixture("scenarios/tables.toml");
    for out in [&a, &b] {
        let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.as_bytes(), std::fs::read(&b).unwrap().as_slice());
    let report = ScenarioReport::parse(&text, ReportFormat::Csv).unwrap();
    assert_eq!(report.seed, 2024);
    assert_eq!(report.sections.len(), 4);
    match &report.sections[0].body {
        SectionBody::Accuracy { rows, .. } => {
            assert_eq!(rows.len(), 5);
            assert_eq!(rows[0].target, 122.0);
            assert!(rows.iter().all(|r| r.n == 5 && r.std_dev > 0.0));
        }
        other => panic!("{other:?}"),
    }
    match &report.sections[2].body {
        SectionBody::Drift { rows } => assert!((rows[0].insertion_drift - 2.1).abs() < 0.021),
        other => panic!("{other:?}"),
    }
}

#[test]
fn run_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let cfg = fixture("scenarios/custom_lead.toml");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = ScenarioReport::parse(&std::fs::read_to_string(&out).unwrap(), ReportFormat::Json).unwrap();
    assert_eq!(report.sections.len(), 1);
}

#[test]
fn run_exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let out = out.to_str().unwrap();

    let o = run(&["run", "--config", "/nonexistent.toml", "--out", out]);
    assert_eq!(o.status.code(), Some(5));

    let bad = fixture("invalid/unknown_screw_key.toml");
    let o = run(&["run", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("leed"));

    // a deadband finer than one encoder count cannot be met between counts
    let stuck = dir.path().join("stuck.toml");
    std::fs::write(
        &stuck,
        "[controller]\ninsertion_tol = 0.001\n[[experiment]]\nkind = \"accuracy\"\naxis = \"insertion\"\ntargets = [10.002]\n",
    )
    .unwrap();
    let o = run(&["run", "--config", stuck.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("did not converge"));

    let o = run(&["run", "--config", fixture("scenarios/minimal.toml").to_str().unwrap(), "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(5));

    assert_eq!(run(&["run", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

fn http_get(port: u16, path: &str) -> String {
    let mut s = TcpStream::connect(("127.0.0.1", port)).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut body = String::new();
    s.read_to_string(&mut body).unwrap();
    body
}

struct Server(std::process::Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start_server(extra: &[&str]) -> (Server, u16) {
    let mut child = bin()
        .args(["serve", "--port", "0"])
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let port = line.trim().rsplit(':').next().unwrap().parse().unwrap();
    (Server(child), port)
}

#[test]
fn serve_answers_state_queries() {
    let (_server, port) = start_server(&[]);
    assert!(http_get(port, "/health").ends_with("ok"));
    let state = http_get(port, "/state");
    assert!(state.contains("\"lead\":20.0"), "{state}");
    assert!(state.contains("\"sequence\""));
}

#[test]
fn serve_uses_custom_config() {
    let cfg = fixture("scenarios/custom_lead.toml");
    let (_server, port) = start_server(&["--config", cfg.to_str().unwrap()]);
    let state = http_get(port, "/state");
    assert!(state.contains("\"lead\":12.0"), "{state}");
    assert!(state.contains("\"handedness\":\"left\""), "{state}");
}

#[test]
fn serve_bind_failure_and_bad_port() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let o = run(&["serve", "--port", &port]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("cannot bind"));
    assert_eq!(run(&["serve", "--port", "http"]).status.code(), Some(2));
}
