//! Runs the quick verification suites and prints each verdict.

use belief_trap::runner::{verify_suite, Suite, VerifyOptions};

fn main() -> belief_trap::Result<()> {
    for suite in [
        Suite::Counting,
        Suite::PeExample,
        Suite::Formulas,
        Suite::RuleEquivalence,
        Suite::Cor1,
    ] {
        let report = verify_suite(
            suite,
            &VerifyOptions {
                rollouts: Some(2000),
                ..Default::default()
            },
        )?;
        println!("{suite}: {}", if report.passed { "pass" } else { "fail" });
        for c in &report.checks {
            println!(
                "  {} measured {:?} expected {}",
                c.name, c.measured, c.expected
            );
        }
    }
    Ok(())
}
