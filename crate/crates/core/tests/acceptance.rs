//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! Set `QPREP_SEED` to change the seed of the randomized criteria and pass
//! criterion numbers as arguments to run a subset.

use std::process::ExitCode;

use qprep::reproduce::{run_criterion, CRITERION_IDS};

fn main() -> ExitCode {
    let seed = std::env::var("QPREP_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(2024);
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids: Vec<u32> = if selected.is_empty() { CRITERION_IDS.collect() } else { selected };
    println!("acceptance criteria (seed {seed})");
    let mut failed = 0;
    for id in ids {
        let Some(outcome) = run_criterion(id, seed) else {
            eprintln!("unknown criterion {id}");
            return ExitCode::from(2);
        };
        println!("{}", outcome.line());
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("{failed} criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
