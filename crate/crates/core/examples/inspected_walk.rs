//! The Poisson-inspected walk killed at rate beta, and its empirical moments
//! against the closed forms.
//!
//! cargo run --release --example inspected_walk

use inspected_levy::inspection::sample_inspected_walk;
use inspected_levy::transforms::moments_inspected;
use inspected_levy::verify::empirical_moments;
use inspected_levy::{InspectionParams, LevyModel, RngStream};

fn main() -> inspected_levy::Result<()> {
    let m = LevyModel::compound_poisson_up(2.0, 1.0, 1.0);
    let params = InspectionParams::new(1.0, 1.0)?;
    let walks = RngStream::new(2, 0).try_par_map(200_000, |r| sample_inspected_walk(&m, &params, r))?;
    let w = &walks[0];
    println!("one walk: {} inspections, max {:.4} at epoch {:.4}", w.count, w.max_value, w.argmax_epoch);

    let closed = moments_inspected(&m, m.natural_side(), 1.0, 1.0)?;
    let exact = [
        closed.mean_max,
        closed.mean_argmax,
        closed.cross_moment,
        closed.covariance,
        closed.var_max,
        closed.var_argmax,
    ];
    let names = ["E S", "E G", "E S G", "cov", "var S", "var G"];
    for ((name, (est, se)), x) in names.iter().zip(empirical_moments(&walks)).zip(exact) {
        println!("{name:<6} {est:.5} +/- {se:.5}   closed form {x:.5}");
    }
    Ok(())
}
