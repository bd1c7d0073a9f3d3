use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nlos_core::io;
use nlos_core::simulator::{builtin, Layout};

fn nlos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlos"))
        .args(args)
        .env("NLOS_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// simulate + run + eval for one built-in scenario; returns the eval dir.
fn pipeline(root: &Path, scenario: &str, noise: &str) -> std::path::PathBuf {
    let (sim, run, ev) = (
        root.join(format!("{scenario}-sim")),
        root.join(format!("{scenario}-run")),
        root.join(scenario),
    );
    for args in [
        vec![
            "simulate",
            "--scenario",
            scenario,
            "--noise",
            noise,
            "--out",
            &s(&sim),
        ],
        vec!["run", "--in", &s(&sim), "--out", &s(&run)],
        vec![
            "eval",
            "--run",
            &s(&run),
            "--truth",
            &s(&sim.join("truth.jsonl")),
            "--out",
            &s(&ev),
        ],
    ] {
        let o = nlos(&args);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    }
    ev
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&nlos(&["--help"])), 0);
    assert_eq!(code(&nlos(&["run", "--help"])), 0);
    assert_eq!(code(&nlos(&["frobnicate"])), 1);
    assert_eq!(code(&nlos(&["simulate", "--scenario", "SA"])), 1);
    assert_eq!(
        code(&nlos(&[
            "simulate",
            "--scenario",
            "SA",
            "--seed",
            "x",
            "--out",
            "/tmp/x"
        ])),
        1
    );
}

#[test]
fn invalid_scenario_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc = builtin("SA", &Layout::default()).unwrap();
    sc.pedestrians[0].waypoints[0] = sc.vehicles[0].center;
    let file = dir.path().join("bad.json");
    fs::write(&file, io::to_pretty_json(&sc)).unwrap();
    let out = dir.path().join("out");
    let o = nlos(&["simulate", "--scenario", &s(&file), "--out", &s(&out)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("VA"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn missing_inputs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let gone = dir.path().join("nope");
    let o = nlos(&["run", "--in", &s(&gone), "--out", &s(&dir.path().join("r"))]);
    assert_eq!(code(&o), 1);
    let o = nlos(&[
        "eval",
        "--run",
        &s(&gone),
        "--truth",
        &s(&gone.join("t.jsonl")),
        "--out",
        &s(&dir.path().join("e")),
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(
        code(&nlos(&[
            "simulate",
            "--scenario",
            "SZ",
            "--out",
            &s(&dir.path().join("z"))
        ])),
        1
    );
}

#[test]
fn malformed_frame_line_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert_eq!(
        code(&nlos(&["simulate", "--scenario", "SA", "--out", &s(&sim)])),
        0
    );
    let frames = sim.join("frames.jsonl");
    let mut lines: Vec<String> = fs::read_to_string(&frames)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    lines[3] = "{\"frame\": 2, \"radar\": nope}".into();
    fs::write(&frames, lines.join("\n") + "\n").unwrap();
    let o = nlos(&[
        "run",
        "--in",
        &s(&sim),
        "--out",
        &s(&dir.path().join("run")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains(":4"), "{}", stderr(&o));
}

#[test]
fn empty_frame_stream_gives_empty_results() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert_eq!(
        code(&nlos(&["simulate", "--scenario", "SA", "--out", &s(&sim)])),
        0
    );
    fs::write(sim.join("frames.jsonl"), "").unwrap();
    let run = dir.path().join("run");
    let o = nlos(&["run", "--in", &s(&sim), "--out", &s(&run)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let results = io::read_results(&run.join("results.jsonl")).unwrap();
    assert!(results.is_empty());
}

#[test]
fn zero_noise_eval_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let ev = pipeline(dir.path(), "SA", "zero");
    let t2 = fs::read_to_string(ev.join("table2.csv")).unwrap();
    let header: Vec<&str> = t2.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = t2.lines().nth(1).unwrap().split(',').collect();
    let col = header
        .iter()
        .position(|h| h.starts_with("accuracy"))
        .expect("accuracy column");
    assert_eq!(row[col].parse::<f64>().unwrap(), 1.0, "{t2}");
    assert_eq!(t2.lines().count(), 2);
}

#[test]
fn report_over_three_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let evals: Vec<String> = ["SA", "SB", "SC"]
        .iter()
        .map(|n| s(&pipeline(dir.path(), n, "zero")))
        .collect();
    let out = dir.path().join("report");
    let mut args = vec!["report", "--runs"];
    args.extend(evals.iter().map(String::as_str));
    let out_s = s(&out);
    args.extend(["--out", &out_s]);
    let o = nlos(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(out.join("table2.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );
    assert!(fs::read_dir(&out).unwrap().any(|e| e
        .unwrap()
        .path()
        .extension()
        .is_some_and(|x| x == "svg")));
}

#[test]
fn sweep_over_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = nlos(&[
        "sweep",
        "--scenario",
        "SA",
        "--noise",
        "benchmark",
        "--param",
        "gap",
        "--values",
        "0.8,1.2,1.6",
        "--seeds",
        "2",
        "--out",
        &s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3, "{csv}");
    for (row, v) in rows.iter().zip(["0.8", "1.2", "1.6"]) {
        assert!(row.starts_with(&format!("gap,{v},SA,2,")), "{row}");
    }
}

#[test]
fn seed_controls_output() {
    let dir = tempfile::tempdir().unwrap();
    let sim = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = nlos(&[
            "simulate",
            "--scenario",
            "SB",
            "--noise",
            "benchmark",
            "--seed",
            seed,
            "--out",
            &s(&out),
        ]);
        assert_eq!(code(&o), 0);
        fs::read(out.join("frames.jsonl")).unwrap()
    };
    let (a, b, c) = (sim("a", "3"), sim("b", "3"), sim("c", "4"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}
