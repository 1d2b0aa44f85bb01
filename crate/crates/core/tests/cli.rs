//! End-to-end tests of the `gwspeed` binary.

use std::process::{Command, Output};

fn gwspeed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwspeed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn regular_closed_forms() {
    let o = gwspeed(&["regular", "--d", "2", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for want in ["escape=0.5", "speed=0.333333333", "U(.|1)=0.5"] {
        assert!(text.lines().any(|l| l == want), "{want} missing from {text}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(gwspeed(&["--help"]).status.code(), Some(0));
    let o = gwspeed(&["simulate", "--lambda", "1", "--pmf", "2:1", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = gwspeed(&["simulate", "--pmf", "2:0.6,3:0.6", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("probabilities sum to 1.2"));
    let o = gwspeed(&["speed-curve", "--pmf", "2:1", "--lambda-grid", "0:3:1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_csv_and_json_agree() {
    let base = ["simulate", "--pmf", "2:0.5,3:0.5", "--lambda", "0.5", "--steps", "2000", "--replicas", "4", "--seed", "5"];
    let csv_out = stdout(&gwspeed(&base));
    let mut args = base.to_vec();
    args.extend(["--format", "json"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&gwspeed(&args))).unwrap();
    let mut rdr = csv::Reader::from_reader(csv_out.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    for key in ["lambda", "mean", "stderr"] {
        let i = headers.iter().position(|h| h == key).unwrap();
        let from_csv: f64 = row[i].parse().unwrap();
        assert_eq!(from_csv, json[key].as_f64().unwrap(), "{key}");
    }
    assert_eq!(json["graph"], "T");
}

#[test]
fn speed_curve_csv_json_round_trip() {
    let base = [
        "speed-curve", "--pmf", "2:0.5,3:0.5", "--lambda-grid", "0:1:0.25", "--depth", "6",
        "--samples", "500", "--tuples", "2000", "--seed", "9",
    ];
    let o = gwspeed(&base);
    assert_eq!(o.status.code(), Some(0));
    let csv_out = stdout(&o);
    assert!(csv_out.starts_with("lambda,speed_formula,stderr,speed_mc,mc_stderr,ineq8_margin,ineq8_stderr,holds\n"));
    let mut args = base.to_vec();
    args.extend(["--format", "json"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&gwspeed(&args))).unwrap();
    let rows = json["rows"][0].as_array().unwrap();
    let mut rdr = csv::Reader::from_reader(csv_out.as_bytes());
    let records: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), rows.len());
    for (rec, row) in records.iter().zip(rows) {
        for (i, key) in ["lambda", "speed_formula", "stderr"].iter().enumerate() {
            assert_eq!(rec[i].parse::<f64>().unwrap(), row[*key].as_f64().unwrap());
        }
    }
    assert_eq!(json["monotonicity"]["strictly_decreasing"], true);
}

#[test]
fn out_flag_and_thread_count_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let run = |threads: &str, out: &std::path::Path| {
        let o = gwspeed(&[
            "verify", "--suite", "oracles", "--seed", "3", "--threads", threads, "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
        assert!(o.stdout.is_empty());
    };
    run("1", &a);
    run("3", &b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn verify_skips_suites_for_laws_with_leaves() {
    let o = gwspeed(&["verify", "--suite", "bounds", "--pmf", "0:0.25,2:0.75"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("SKIP bounds/all"));
}
