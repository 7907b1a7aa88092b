//! Exact draws of the maximum and its last argmax over an exponential horizon.
//!
//! cargo run --release --example path_sampling

use inspected_levy::path::sample_continuous_pair;
use inspected_levy::transforms::mean_max_continuous;
use inspected_levy::{LevyModel, RngStream};

fn main() -> inspected_levy::Result<()> {
    let beta = 1.0;
    let n = 200_000;
    for (name, m) in [
        ("sp_cl", LevyModel::compound_poisson_up(2.0, 1.0, 1.0)),
        ("sn_bm", LevyModel::brownian(-1.0, 1.0)),
    ] {
        let draws = RngStream::new(1, 0).try_par_map(n, |r| sample_continuous_pair(&m, beta, r))?;
        let mean = draws.iter().map(|e| e.max_value).sum::<f64>() / n as f64;
        let argmax = draws.iter().map(|e| e.argmax_time).sum::<f64>() / n as f64;
        let exact = mean_max_continuous(&m, m.natural_side(), beta)?;
        println!("{name}: E max = {mean:.4} (closed form {exact:.4}), E argmax = {argmax:.4}");
        println!("  first draw: {:?}", draws[0]);
    }
    Ok(())
}
