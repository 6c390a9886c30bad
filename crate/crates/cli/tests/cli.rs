use std::io::Cursor;
use std::process::Command as Process;

use mincal_cli::{run, EXIT_DATA, EXIT_NO_PARSE, EXIT_OK, EXIT_USAGE};

fn mincal(args: &[&str], input: &str) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mincal").chain(args.iter().copied());
    let code = run(argv, &mut Cursor::new(input.as_bytes()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn interpret_cancel_golden() {
    let (code, out, _) = mincal(&["interpret", "cancel", "the", "meeting"], "");
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, "***Slots:\n[ [ action_name cancel ]\n  [ event_name\n    [ the meeting ] ] ]\n");
}

#[test]
fn interpret_shows_defaults_and_pending() {
    let (code, out, _) = mincal(
        &["--today", "1994-06-01", "interpret", "schedule a conference in my office at 5"],
        "",
    );
    assert_eq!(code, EXIT_OK);
    let defaults = out.split("***Defaults:\n").nth(1).expect("defaults block");
    assert!(defaults.contains("[ hour [ 17 ] ]"), "{out}");
    assert!(out.ends_with("pending: event_date\n"), "{out}");
}

#[test]
fn narrower_window_changes_the_default() {
    let (_, out, _) = mincal(&["--window", "5..12", "interpret", "schedule a meeting at 5"], "");
    assert!(out.contains("[ hour [ 5 ] ]"), "{out}");
    let (_, out, _) = mincal(&["--window", "9..17", "interpret", "schedule a meeting at 5"], "");
    assert!(out.contains("[ hour [ 17 ] ]"), "{out}");
}

#[test]
fn parse_after_question_accepts_fragment() {
    let (code, out, _) = mincal(&["parse", "at", "8"], "");
    assert_eq!(code, EXIT_NO_PARSE, "{out}");
    let (code, out, _) = mincal(&["--format", "machine", "parse", "--after", "wh_time", "at", "8"], "");
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(v["construction"], "fragment(pp)");
    assert_eq!(v["message"]["sem_cat"], "fragment");
}

#[test]
fn repl_schedules_and_lists() {
    let input = "schedule a meeting with bob\n\ntomorrow at 3 pm\n:calendar\n:quit\n";
    let (code, out, _) = mincal(&["--today", "1994-06-01", "repl"], input);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("At what time and date?"), "{out}");
    assert!(out.contains("Scheduled a meeting with bob on 1994-06-02 at 15:00."), "{out}");
    assert!(out.contains("ev-0001 1994-06-02 15:00 a meeting"), "{out}");
}

#[test]
fn store_persists_between_runs() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("cal.txt");
    let store = store.to_str().unwrap();
    let base = ["--today", "1994-06-01", "--store", store, "repl"];
    mincal(&base, "schedule a meeting with bob on friday at 10 am\n");
    let (_, out, _) = mincal(&base, ":calendar\ncancel the meeting with bob\n:calendar\n");
    assert!(out.contains("1994-06-03 10:00 a meeting"), "{out}");
    assert!(out.contains("Cancelled a meeting on 1994-06-03 at 10:00."), "{out}");
    assert!(out.ends_with("(no events)\n> "), "{out}");
}

#[test]
fn replay_reports_first_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    std::fs::write(&path, "# today: 1994-06-01\nU: Schedule a meeting!\nS: On what date?\nU: Friday.\nS: never\n").unwrap();
    let (code, out, _) = mincal(&["replay", path.to_str().unwrap()], "");
    assert_eq!(code, EXIT_NO_PARSE);
    assert!(out.contains(":2 Schedule a meeting!\n  expected: On what date?\n  actual:   At what time and date?"), "{out}");
    assert!(!out.contains("Friday"), "stops at the first diff: {out}");
}

#[test]
fn enumerate_check_round_trips() {
    let (code, out, err) = mincal(&["enumerate", "--limit", "25", "--check"], "");
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out.lines().count(), 25);
    assert!(out.lines().any(|l| l == "schedule a meeting"));
    let (code, _, err) = mincal(&["enumerate", "--root", "nosuch(x)"], "");
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("unknown construction"), "{err}");
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cg");
    std::fs::write(&bad, "(construction").unwrap();
    let (code, _, err) = mincal(&["--grammar", bad.to_str().unwrap(), "parse", "x"], "");
    assert_eq!(code, EXIT_DATA);
    assert!(err.starts_with(&format!("mincal: {}", bad.display())), "{err}");
    let (code, _, _) = mincal(&["--kb", "/nonexistent/kb", "parse", "x"], "");
    assert_eq!(code, EXIT_DATA);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(mincal(&["--window", "20..3", "repl"], "").0, EXIT_USAGE);
    assert_eq!(mincal(&["parse"], "").0, EXIT_USAGE);
    assert_eq!(mincal(&["--format", "xml", "parse", "x"], "").0, EXIT_USAGE);
    let (code, out, _) = mincal(&["--help"], "");
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("replay"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_mincal");
    let status = |args: &[&str]| Process::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["parse", "schedule", "a", "meeting"]), Some(EXIT_OK));
    assert_eq!(status(&["parse", "zzz"]), Some(EXIT_NO_PARSE));
    assert_eq!(status(&["bogus"]), Some(EXIT_USAGE));
    assert_eq!(status(&["--app-kb", "/nonexistent", "parse", "x"]), Some(EXIT_DATA));
    let out = Process::new(bin)
        .args(["interpret", "cancel the meeting"])
        .env("MINCAL_FORMAT", "machine")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["frame"]["action_name"], "cancel");
}
