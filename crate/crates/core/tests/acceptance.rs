//! Runs every acceptance criterion at full scale and prints one line per
//! criterion. Set `NOREGRET_QUICK=1` for the reduced-scale variant.

use std::process::ExitCode;

use noregret::harness::acceptance::run_suite;

fn main() -> ExitCode {
    let quick = std::env::var("NOREGRET_QUICK").is_ok_and(|v| v == "1");
    println!("acceptance suite ({} scale)", if quick { "reduced" } else { "full" });
    let outcomes = run_suite(quick, |o| println!("{o}"));
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!("{} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
