//! Acceptance matrix at the reference mesh size: one line per criterion.

use std::process::ExitCode;

use talenti_cli::verify::{Verifier, VerifyOptions, CRITERIA};

const MESH_H: f64 = 0.03;
const SEED: u64 = 0;

/// Criteria that fail on the reference configuration, each with the
/// sub-checks that must still pass.
const EXPECTED_FAILURES: &[(usize, &[&str])] =
    &[(7, &["random plateau fields: P1 seminorm", "random plateau fields: min", "radial interpolant on the disk"])];

fn main() -> ExitCode {
    let verifier = Verifier::new(VerifyOptions::new(MESH_H, SEED).expect("reference mesh size is supported"));
    let mut unexpected = Vec::new();
    for id in 1..=CRITERIA.len() {
        let result = match verifier.criterion(id) {
            Ok(r) => r,
            Err(e) => {
                println!("criterion {id:>2} FAIL {} (error: {e})", CRITERIA[id - 1]);
                unexpected.push(id);
                continue;
            }
        };
        let expected = EXPECTED_FAILURES.iter().find(|(i, _)| *i == id);
        let required_ok = expected
            .is_none_or(|(_, required)| required.iter().all(|part| result.details.iter().any(|d| d.starts_with("ok") && d.contains(part))));
        let note = match (result.passed, expected) {
            (false, Some(_)) if required_ok => " [expected failure]",
            (false, Some(_)) => " [expected failure, but a required sub-check failed]",
            (true, Some(_)) => " [expected failure now passes]",
            _ => "",
        };
        println!("{}{note}", result.summary());
        for line in result.details.iter().filter(|l| l.starts_with("FAIL")) {
            println!("      {line}");
        }
        if (!result.passed && expected.is_none()) || !required_ok {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures in criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
