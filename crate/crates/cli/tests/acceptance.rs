//! One PASS/FAIL line per acceptance criterion, with measured values and
//! the pinned tolerances underneath.

use qtomo_cli::validate::{run_suites, Suite};

#[test]
fn acceptance() {
    let report = run_suites(&Suite::ALL, |c| {
        println!("{}", c.summary());
        for check in &c.checks {
            println!("      {check}");
        }
    });
    let failed: Vec<_> = report
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.id)
        .collect();
    println!(
        "{} of {} criteria passed",
        report.len() - failed.len(),
        report.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
