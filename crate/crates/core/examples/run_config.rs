//! Drives the command-line layer from an in-memory JSON configuration
//! without touching the filesystem.
//!
//! cargo run --release --example run_config

use inspected_levy::cli::{execute, resolve, run_meta, RunConfig};

const CONFIG: &str = r#"{
    "command": "verify",
    "seed": 11,
    "threads": 2,
    "scenarios": [
        {"name": "pathwise", "check": "pathwise", "sample_size": 2000},
        {"name": "frullani", "check": "frullani"},
        {"name": "geometric_sum", "check": "geometric_sum", "sample_size": 100000,
         "extras": {"p": 0.4, "p_prime": 0.7}},
        {"name": "sn_atom", "check": "sn_marginal", "sample_size": 100000, "model": "sn_bm"}
    ]
}"#;

fn main() -> inspected_levy::Result<()> {
    let resolved = resolve(&RunConfig::from_json(CONFIG)?)?;
    let outcome = execute(&resolved)?;
    print!("{}", outcome.stdout);
    for (name, contents) in &outcome.files {
        println!("{name}: {} bytes", contents.len());
    }
    print!("{}", run_meta(&resolved));
    println!("overall: {}", if outcome.pass { "pass" } else { "fail" });
    Ok(())
}
