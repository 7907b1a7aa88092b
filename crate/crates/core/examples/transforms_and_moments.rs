//! Closed-form joint transforms, the factorization identity, and moments.
//!
//! cargo run --example transforms_and_moments

use inspected_levy::transforms::{
    atom_at_zero_sn, frullani_check, joint_lst_continuous, joint_lst_inspected, moments_inspected,
};
use inspected_levy::{LevyModel, Side};

fn main() -> inspected_levy::Result<()> {
    let cl = LevyModel::compound_poisson_up(2.0, 1.0, 1.0);
    let bm = LevyModel::brownian(-1.0, 1.0);
    let (beta, omega) = (1.0, 1.0);

    for (a, g) in [(0.0, 0.0), (1.0, 0.5), (3.0, 2.0)] {
        let slow = joint_lst_continuous(&cl, Side::Sp, beta, a, g)?;
        let fast = joint_lst_continuous(&cl, Side::Sp, beta + omega, a, g)?;
        let insp = joint_lst_inspected(&cl, Side::Sp, beta, omega, a, g)?;
        println!("a={a} g={g}: {slow:.10} = {fast:.10} * {insp:.10}  (gap {:.1e})", slow - fast * insp);
    }

    println!("SN atom at zero: {:.10}", atom_at_zero_sn(&bm, beta, omega)?);
    let (quad, closed) = frullani_check(beta, omega)?;
    println!("Frullani: quadrature {quad:.12}, ln(1 + omega/beta) {closed:.12}");

    for (name, m, side) in [("sp_cl", &cl, Side::Sp), ("sn_bm", &bm, Side::Sn)] {
        let r = moments_inspected(m, side, beta, omega)?;
        println!("{name}: {r:#?}");
    }
    Ok(())
}
