//! Laplace exponents and their right-inverses for the two reference models.
//!
//! cargo run --example levy_exponents

use inspected_levy::{LevyModel, Side};

fn main() -> inspected_levy::Result<()> {
    let models = [
        ("sp_cl", LevyModel::compound_poisson_up(2.0, 1.0, 1.0)),
        ("sn_bm", LevyModel::brownian(-1.0, 1.0)),
        ("sn_cp", LevyModel::compound_poisson_down(3.0, 2.0, 0.5)),
    ];
    for (name, m) in &models {
        let side = m.natural_side();
        println!("{name} ({side:?})");
        for x in [0.0, 0.5, 1.0, 2.0] {
            let e = m.exponent(side, x)?;
            println!("  exponent({x}) = {:.6}  d1 = {:.6}  d2 = {:.6}", e.value, e.first_derivative, e.second_derivative);
        }
        for beta in [0.1, 1.0, 10.0] {
            let r = m.right_inverse(side, beta)?;
            println!("  right_inverse({beta}) = {r:.10}  residual = {:.1e}", m.exponent(side, r)?.value - beta);
        }
    }
    // a Brownian model has both one-sided exponents
    let bm = LevyModel::brownian(-1.0, 1.0);
    println!("sn_bm Sp right_inverse(1) = {:.10}", bm.right_inverse(Side::Sp, 1.0)?);
    Ok(())
}
