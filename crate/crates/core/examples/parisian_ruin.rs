//! Parisian ruin with exponential delays against bankruptcy at Poisson
//! inspection epochs, from zero initial capital.
//!
//! cargo run --release --example parisian_ruin

use inspected_levy::verify::{sample_bankruptcy, sample_parisian};
use inspected_levy::{LevyModel, RngStream};

fn main() {
    let m = LevyModel::compound_poisson_up(2.0, 1.0, 1.0);
    let n = 100_000;
    let (horizon_rate, escape) = (1e-2, 60.0);
    for omega in [0.5, 1.0, 4.0] {
        let st = RngStream::new(5, 0);
        let par = st.labelled("parisian").par_map(n, |r| sample_parisian(&m, omega, horizon_rate, escape, r));
        let bank = st.labelled("bankruptcy").par_map(n, |r| sample_bankruptcy(&m, omega, horizon_rate, escape, r));
        let fp = par.iter().filter(|d| d.parisian.is_some()).count() as f64 / n as f64;
        let fc = par.iter().filter(|d| d.classical.is_some()).count() as f64 / n as f64;
        let fb = bank.iter().filter(|d| d.is_some()).count() as f64 / n as f64;
        println!("omega {omega}: P(parisian ruin) {fp:.4}, P(bankruptcy) {fb:.4}, P(classical ruin) {fc:.4}");
    }
}
