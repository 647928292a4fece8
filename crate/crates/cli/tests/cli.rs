use std::fs;
use std::process::{Command, Output};

use exponents::channel_file::parse_channel_file;
use exponents::curve::parse_curve_csv;
use exponents::{Channel, ExtReal};

fn exponents(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exponents"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn capacity_of_builtins() {
    let o = exponents(&["capacity", "bsc:0.0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "C = 0.693147 nats\nC0 = 0.693147 nats\n");
    let o = exponents(&["capacity", "bsc:0.5", "--bits"]);
    assert!(stdout(&o).contains("C = 0.000000 bits"));
    let o = exponents(&["capacity", "useless:2:2"]);
    assert!(stdout(&o).starts_with("C = 0.000000 nats"));
}

#[test]
fn malformed_sources_exit_with_code_two() {
    for src in ["bsc:1.5", "nope:3", "/nonexistent/channel.json"] {
        let o = exponents(&["capacity", src]);
        assert_eq!(o.status.code(), Some(2), "{src}");
        assert!(!o.stderr.is_empty());
    }
    let o = exponents(&["curve", "bsc:0.1", "--q", "G,H"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identity_curves_follow_the_closed_form() {
    let o = exponents(&["curve", "identity:2", "--q", "G,G_dk", "--rmax", "1.2", "--points", "5"]);
    assert!(o.status.success());
    let file = parse_curve_csv(&stdout(&o)).unwrap();
    assert_eq!(file.rates.len(), 5);
    for (i, r) in file.rates.iter().enumerate() {
        let expected = (r - 2f64.ln()).max(0.0);
        for col in &file.columns {
            assert!(col[i].deviation(&ExtReal::Finite(expected)) <= 1e-3);
        }
    }
}

#[test]
fn error_curves_below_zero_rate_are_infinite() {
    let o = exponents(&["curve", "identity:2", "--q", "E_sp", "--rmin", "0.1", "--rmax", "0.5", "--points", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",inf")), "{text}");
    let o = exponents(&["curve", "bsc:0.1", "--q", "E_sp", "--rmin", "0.01", "--rmax", "0.36", "--points", "6"]);
    let file = parse_curve_csv(&stdout(&o)).unwrap();
    let col = &file.columns[0];
    assert!(col.windows(2).all(|w| w[1].to_f64() <= w[0].to_f64()));
    assert!(col.iter().all(|v| !v.is_infinite()));
}

#[test]
fn curve_file_is_written_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = exponents(&["curve", "random:2x3", "--seed", "4", "--q", "G,E", "--points", "6", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("R,G,E\n"));
    assert_eq!(parse_curve_csv(&text).unwrap().to_csv(), text);
}

#[test]
fn generated_channels_round_trip() {
    let o = exponents(&["gen", "bsc:0.1"]);
    let (name, w) = parse_channel_file(&stdout(&o)).unwrap();
    assert_eq!(name.as_deref(), Some("bsc:0.1"));
    assert_eq!(w, Channel::bsc(0.1).unwrap());
    let o = exponents(&["gen", "z:0.5"]);
    let (_, w) = parse_channel_file(&stdout(&o)).unwrap();
    assert_eq!(w.to_rows(), vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
    let a = stdout(&exponents(&["gen", "random:3x4", "--seed", "9"]));
    let b = stdout(&exponents(&["gen", "random:3x4", "--seed", "9"]));
    assert_eq!(a, b);
    let (_, w) = parse_channel_file(&a).unwrap();
    assert_eq!((w.inputs(), w.outputs()), (3, 4));
}

#[test]
fn empty_verification_corpus_passes() {
    let o = exponents(&["verify", "--sizes", "2x2", "--count", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"checks\": []"));
}

#[test]
fn malformed_corpus_file_fails_in_isolation() {
    let dir = tempfile::tempdir().unwrap();
    let good = stdout(&exponents(&["gen", "bsc:0.2"]));
    fs::write(dir.path().join("good.json"), good).unwrap();
    fs::write(dir.path().join("bad.json"), "{\"input_size\": 2}").unwrap();
    let report = dir.path().join("report.json");
    let o = exponents(&["verify", "--dir", dir.path().to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("\"label\": \"bad.json\""));
    assert!(text.contains("\"invalid\": 1"));
    assert!(!text.contains("\"pass\": false"));
}

#[test]
fn invalid_thread_cap_is_an_infrastructure_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_exponents"))
        .args(["capacity", "bsc:0.1"])
        .env("EXPONENTS_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_exponents"))
        .args(["capacity", "bsc:0.1"])
        .env("EXPONENTS_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
}
