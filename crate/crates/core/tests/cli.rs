use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn iecs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iecs")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn help_lists_every_flag() {
    let top = stdout(&iecs(&["--help"]));
    for word in ["analyze", "simulate", "--threads", "IECS_THREADS"] {
        assert!(top.contains(word), "top-level help lacks {word}");
    }
    let analyze = stdout(&iecs(&["analyze", "--help"]));
    for flag in [
        "--delay",
        "--admissible",
        "--success",
        "--convergence",
        "--duration",
        "--channels",
        "--max-r",
        "--M",
        "--R",
        "--pe",
        "--lambda-max",
        "--out",
    ] {
        assert!(analyze.contains(flag), "analyze help lacks {flag}");
    }
    let simulate = stdout(&iecs(&["simulate", "--help"]));
    for flag in ["--config", "--figure", "--seed", "--out"] {
        assert!(simulate.contains(flag), "simulate help lacks {flag}");
    }
}

#[test]
fn delay_table() {
    let out = iecs(&["analyze", "--delay", "--duration", "7200", "--channels", "8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (row, bound) in rows.iter().zip([5.0, 13.0, 32.0]) {
        let delay: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(delay < bound, "{row}");
    }
}

#[test]
fn admissible_and_success_tables() {
    let text = stdout(&iecs(&["analyze", "--admissible", "--M", "8", "--R", "0"]));
    assert_eq!(text.lines().count(), 1 + 1673);
    assert!(text.lines().nth(1).unwrap().ends_with(",0.000000"));

    let text = stdout(&iecs(&["analyze", "--success", "--M", "7", "--R", "1", "--pe", "0.1", "--lambda-max", "64"]));
    assert_eq!(text.lines().count(), 1 + 64);
    assert!(text.lines().nth(1).unwrap().contains(",1,0.813105,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "frobnicate = 3\n").unwrap();
    let out = iecs(&["simulate", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frobnicate"));

    let infeasible = dir.path().join("infeasible.cfg");
    fs::write(&infeasible, "n = 40\nM = 3\n").unwrap();
    let out = iecs(&["simulate", "--config", infeasible.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    assert_eq!(iecs(&["simulate", "--figure", "8"]).status.code(), Some(2));
    assert_eq!(iecs(&["analyze"]).status.code(), Some(2));
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

const SMALL_RUN: &str = "\
name = small
n = 12
M = 4
R = 1
lambda = 1, 2
k = 4
p_e = 0.2
clients = 3
fec = both
";

#[test]
fn seeded_runs_are_byte_identical_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, SMALL_RUN).unwrap();
    let outs: Vec<_> = (0..3).map(|i| dir.path().join(format!("out{i}"))).collect();
    let run = |out: &Path, threads: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_iecs"))
            .env("IECS_THREADS", threads)
            .args(["simulate", "--config", cfg.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
    };
    run(&outs[0], "1");
    run(&outs[1], "3");
    let first = read_dir(&outs[0]);
    assert_eq!(first, read_dir(&outs[1]));
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["manifest.json", "run.cfg", "small_slots.csv", "small_summary.csv"]);

    // The written run file carries the seed override and replays the run.
    let replay = outs[0].join("run.cfg");
    let status = Command::new(env!("CARGO_BIN_EXE_iecs"))
        .args(["simulate", "--config", replay.to_str().unwrap(), "--out", outs[2].to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(first, read_dir(&outs[2]));

    let manifest: serde_json::Value = serde_json::from_slice(&first[0].1).unwrap();
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 4);
    assert_eq!(manifest["runs"][0]["spec"]["config"]["seed"], 7);
    assert!(manifest["run_file"].as_str().unwrap().contains("seed = 7"));
}

#[test]
fn csv_uses_six_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, SMALL_RUN).unwrap();
    let out = dir.path().join("out");
    assert!(iecs(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(out.join("small_slots.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "deadline_mean").unwrap();
    for line in text.lines().skip(1) {
        let field = line.split(',').nth(col).unwrap();
        assert_eq!(field.split('.').nth(1).map(str::len), Some(6), "{field}");
    }
    assert_eq!(text.lines().count(), 1 + 4 * 12);
}
