//! Prints one line per acceptance criterion and fails if any criterion fails.

use elasticflow::validation::{run_all, DEFAULT_SEED};

#[test]
fn acceptance() {
    let report = run_all(DEFAULT_SEED, false);
    println!();
    for check in &report.checks {
        println!("{}", check.line());
        for detail in &check.details {
            println!("        {detail}");
        }
    }
    let passed = report.checks.iter().filter(|c| c.passed()).count();
    println!("acceptance: {passed}/{} criteria passed", report.checks.len());
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed()).map(|c| c.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
