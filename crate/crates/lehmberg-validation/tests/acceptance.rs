//! One PASS/FAIL line per criterion; exits nonzero if any criterion fails.
//! Positional arguments select criteria by number or name fragment.

use std::process::ExitCode;
use std::time::Instant;

use lehmberg_validation::criteria;

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in criteria() {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str()) || *f == c.number.to_string()) {
            continue;
        }
        let started = Instant::now();
        let outcome = (c.run)();
        let elapsed = started.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) => (elapsed <= c.budget, d),
            Err(d) => (false, d),
        };
        let timing = format!("{:.2}s of {}s", elapsed.as_secs_f64(), c.budget.as_secs());
        println!(
            "{} criterion {} ({}) [{timing}]: {detail}",
            if pass { "PASS" } else { "FAIL" },
            c.number,
            c.name
        );
        if !pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

