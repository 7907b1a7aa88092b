//! Runs the full acceptance suite and prints one line per scenario.
//!
//! cargo run --release --example acceptance_suite -- [seed]

use std::time::Instant;

use inspected_levy::verify::{acceptance_suite, run_scenario, summary_table};

fn main() -> inspected_levy::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let mut reports = Vec::new();
    for scn in acceptance_suite(seed) {
        let start = Instant::now();
        let rep = run_scenario(&scn)?;
        println!("{:<28} {:>7.2}s  {}", scn.name, start.elapsed().as_secs_f64(), if rep.pass { "PASS" } else { "FAIL" });
        reports.push(rep);
    }
    print!("{}", summary_table(&reports));
    Ok(())
}
