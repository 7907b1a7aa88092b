//! The maximum over an exponential horizon as a sum of independent inspected
//! maxima with geometrically growing kill rates.
//!
//! cargo run --release --example cascade

use inspected_levy::path::sample_continuous_pair;
use inspected_levy::verify::{cascade_truncation_ratio, sample_cascade};
use inspected_levy::{Error, LevyModel, RngStream};

fn main() -> inspected_levy::Result<()> {
    let m = LevyModel::compound_poisson_up(2.0, 1.0, 1.0);
    let beta = 0.5;
    for terms in [1, 5, 10, 20] {
        println!("truncation {terms:>2}: last-term ratio {:.2e}", cascade_truncation_ratio(&m, beta, 2.0, terms)?);
    }
    match sample_cascade(&m, beta, 2.0, 1, 10, RngStream::new(6, 0)) {
        Err(Error::TruncationTooCoarse { ratio }) => println!("one term refused (ratio {ratio:.3})"),
        other => println!("unexpected: {other:?}"),
    }
    let n = 100_000;
    let c = sample_cascade(&m, beta, 2.0, 20, n, RngStream::new(6, 1))?;
    let d = RngStream::new(6, 2).try_par_map(n, |r| sample_continuous_pair(&m, beta, r).map(|e| e.max_value))?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("mean: cascade {:.4}, direct {:.4}", mean(&c), mean(&d));
    Ok(())
}
