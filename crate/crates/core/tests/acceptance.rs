//! Acceptance gate: all eleven criteria at their stated tolerances.

use std::io::Write;

use ghostsim_core::validate::{run_all_with, run_criterion, Tolerances};

// Straight to the process stderr so the lines survive libtest's capture.
fn report(line: &str) {
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

#[test]
fn all_criteria_pass() {
    let tol = Tolerances::default();
    report("");
    let report = run_all_with(&tol, |r| report(&r.line())).expect("suite runs");
    assert_eq!(report.criteria.len(), 11);
    let failed: Vec<String> = report.failed().map(|c| format!("{} {}", c.id, c.name)).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn tampered_tolerance_fails_the_named_criterion() {
    let tol = Tolerances { product: -1.0, ..Tolerances::default() };
    let r = run_criterion(3, &tol).unwrap();
    println!("{}", r.line());
    assert!(!r.passed);
    assert_eq!(r.name, "product structure");
    assert!(r.detail.contains("rel_error"));
}

#[test]
fn unknown_criterion_is_rejected() {
    assert!(run_criterion(12, &Tolerances::default()).is_err());
}
