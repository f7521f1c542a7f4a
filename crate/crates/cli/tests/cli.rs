use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_edgecache"));
    c.env_remove("EDGECACHE_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn edgecache")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn assert_error(out: &Output, code: i32, kind: &str) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    let line = err.lines().last().unwrap_or_default();
    assert!(line.starts_with(&format!("error kind={kind} code={code} message=\"")), "{line}");
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

#[test]
fn help_lists_every_flag() {
    let cases: &[(&str, &[&str])] = &[
        ("ingest", &["--input", "--out", "--slot-duration", "--origin", "--file-column", "--timestamp-column", "--delimiter", "--release", "--drop-old-releases", "--slots"]),
        ("synth", &["--config", "--slots", "--seed", "--out"]),
        (
            "run",
            &[
                "--trace", "--policy", "--config", "--capacity", "--lambda", "--lambda-r", "--lambda-c", "--gamma", "--alpha0", "--beta0", "--rollouts", "--delta-t",
                "--age-cap", "--seed", "--slots", "--window", "--out", "--format",
            ],
        ),
        ("compare", &["--trace", "--policies", "--jobs", "--capacity", "--rollouts", "--out", "--format"]),
        ("report", &["--input", "--out", "--format"]),
    ];
    for (cmd, flags) in cases {
        let help = ok(&[cmd, "--help"]);
        for f in *flags {
            assert!(help.contains(f), "{cmd} --help is missing {f}");
        }
    }
    let top = ok(&["--help"]);
    for (cmd, _) in cases {
        assert!(top.contains(cmd));
    }
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&["synth", "--slots", "100", "--seed", "1", "--out", s(&a)]);
    ok(&["synth", "--slots", "100", "--seed", "1", "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    ok(&["synth", "--slots", "100", "--seed", "2", "--out", s(&c)]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn free_replacement_with_room_for_everything_hits_always() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    ok(&["synth", "--slots", "60", "--seed", "3", "--out", s(&trace)]);
    let stdout = ok(&["run", "--trace", s(&trace), "--policy", "optimal", "--lambda", "0", "-M", "100000"]);
    let row = stdout.lines().find(|l| l.starts_with("optimal")).unwrap();
    let ratio: f64 = row.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert_eq!(ratio, 1.0);
}

#[test]
fn error_lines_and_exit_codes() {
    assert_error(&run(&["frobnicate"]), 2, "usage");
    assert_error(&run(&["run", "--capacity", "lots"]), 2, "usage");
    assert_error(&run(&["run", "--trace", "/nonexistent/trace.csv"]), 5, "io");
    assert_error(&run(&["run", "--slots", "5", "--policy", "belady"]), 3, "config");
    assert_error(&run(&["run", "--slots", "5", "--gamma", "1.5"]), 3, "config");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "not,a,trace\n1,2\n").unwrap();
    assert_error(&run(&["run", "--trace", s(&bad)]), 4, "input");
}

#[test]
fn run_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let first = ok(&["run", "--policy", "lfuda", "--slots", "80", "-M", "8", "--out", s(&json)]);
    let again = ok(&["report", "--input", s(&json)]);
    assert_eq!(first.lines().take(2).collect::<Vec<_>>(), again.lines().take(2).collect::<Vec<_>>());

    let csv = dir.path().join("r.csv");
    ok(&["report", "--input", s(&json), "--out", s(&csv)]);
    let summary = ok(&["report", "--input", s(&csv)]);
    let row = summary.lines().find(|l| l.starts_with("lfuda")).unwrap();
    assert_eq!(row.split_whitespace().nth(1), Some("80"));

    // the manifest inside the report is enough to reproduce it
    let rerun = dir.path().join("rerun.json");
    ok(&["run", "--config", s(&json), "--slots", "80", "--out", s(&rerun)]);
    assert_eq!(fs::read(&json).unwrap(), fs::read(&rerun).unwrap());
}

#[test]
fn compare_on_demo_trace_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("compare.csv");
    let stdout = ok(&["compare", "-M", "10", "--out", s(&out)]);
    for p in ["lru", "lfuda", "most_popular", "optimal", "origin_ql", "rlma"] {
        assert!(stdout.lines().any(|l| l.split_whitespace().next() == Some(p)), "{p} missing from summary");
    }
    let got = fs::read_to_string(&out).unwrap();
    let want = fs::read_to_string(golden("compare_demo.csv")).unwrap();
    assert_eq!(got.lines().count(), want.lines().count());
    for (i, (g, w)) in got.lines().zip(want.lines()).enumerate() {
        assert_eq!(g, w, "line {}", i + 1);
    }
}
