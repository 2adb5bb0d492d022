mod common;

use std::process::{Command, Output};

use common::{corpus_path, solver_available};

fn ibp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ibp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn file(name: &str) -> String {
    corpus_path(&format!("{name}.ibp"))
        .to_string_lossy()
        .into_owned()
}

#[test]
fn exit_codes_per_corpus_file() {
    if !solver_available() {
        eprintln!("skipped: no solver");
        return;
    }
    let expected = [
        ("selection_sort", 0),
        ("selection_sort_bug", 1),
        ("siftdown_bug", 1),
        ("siftdown_strengthened", 1),
        ("siftdown_fixed", 0),
        ("heapsort_skeleton", 0),
        ("heapsort_acyclic", 1),
        ("heapsort_no_asserts", 1),
        ("heapsort_final", 0),
        ("partial", 0),
    ];
    for (name, code) in expected {
        let out = ibp(&["check", "--timeout", "3000", &file(name)]);
        assert_eq!(
            out.status.code(),
            Some(code),
            "{name}:\n{}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
}

#[test]
fn usage_and_load_errors() {
    assert_eq!(ibp(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(ibp(&["check"]).status.code(), Some(3));
    let out = ibp(&["check", "/nonexistent/x.ibp"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn jsonl_is_byte_stable_with_one_job() {
    if !solver_available() {
        return;
    }
    let run = || {
        ibp(&[
            "check",
            "--format",
            "jsonl",
            "--jobs",
            "1",
            &file("selection_sort"),
        ])
        .stdout
    };
    let first = run();
    assert_eq!(first, run());
    let text = String::from_utf8(first).unwrap();
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["type"], "summary");
    assert_eq!(last["status"], "ok");
    assert!(!text.contains("millis"));
}

#[test]
fn termination_can_be_postponed() {
    if !solver_available() {
        return;
    }
    let out = ibp(&[
        "check",
        "--no-termination",
        "--format",
        "jsonl",
        &file("selection_sort"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("TERM005"), "{text}");
    assert!(!text.contains("/termination\""), "{text}");
}

#[test]
fn vcs_prints_the_selected_sequent() {
    let out = ibp(&[
        "vcs",
        "--id",
        "siftdown/Sift/t2#0/goal1/consistency",
        &file("siftdown_bug"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("heap(a, m, n)"), "{text}");
    assert_eq!(
        text.matches("\n[-").count() + usize::from(text.starts_with("[-")),
        7,
        "{text}"
    );
}

#[test]
fn run_sorts_and_reports_violations() {
    let out = ibp(&[
        "run",
        &file("heapsort_final"),
        "--proc",
        "heapsort",
        "--input",
        "a=[3,1,2]",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("a=[1, 2, 3]"));

    let out = ibp(&[
        "run",
        &file("heapsort_final"),
        "--proc",
        "siftdown",
        "--input",
        "m=0; n=4; a=[1,2]",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PreconditionViolation"));

    let out = ibp(&[
        "run",
        &file("heapsort_final"),
        "--proc",
        "heapsort",
        "--input",
        "a=[2,1]",
        "--format",
        "json",
    ]);
    let trace: serde_json::Value = serde_json::from_slice(&out.stdout).expect("trace is JSON");
    assert!(trace["steps"].as_array().is_some_and(|s| !s.is_empty()));
}
