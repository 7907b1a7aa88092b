//! Lindley recursions: closed forms, the two-dimensional recursion, and the
//! killed chain against the geometric maximum.
//!
//! cargo run --release --example lindley_recursions

use inspected_levy::lindley::{
    burn_in_steps, fixed_point_sample, killed_chain_endpoint, lindley_closed_form, lindley_run, two_dim_closed_form,
    two_dim_run,
};
use inspected_levy::path::sample_increment;
use inspected_levy::stats::ks_two_sample;
use inspected_levy::{EmpiricalSample, LevyModel, RngStream};
use rand_distr::{Distribution, Exp};

fn main() -> inspected_levy::Result<()> {
    let x = [3.0, -5.0, 2.0, 2.0, -1.0];
    let w = lindley_run(&x);
    println!("x = {x:?}\nw = {w:?}");
    for n in 1..=x.len() {
        assert_eq!(w[n - 1], lindley_closed_form(&x, n)?);
    }

    let xp = [1.0, 0.0, 2.0, 1.0, 3.0];
    let states = two_dim_run(&x, &xp)?;
    let rx: Vec<f64> = x.iter().rev().copied().collect();
    let rxp: Vec<f64> = xp.iter().rev().copied().collect();
    println!("two-dim state {:?} vs reversed last max {:?}", states[4], two_dim_closed_form(&rx, &rxp, 5)?);

    let m = LevyModel::compound_poisson_up(2.0, 1.0, 1.0);
    let p = 0.5;
    let tau = Exp::new(1.0).expect("positive rate");
    let inc = |r: &mut _| sample_increment(&m, tau.sample(r), r);
    let steps = burn_in_steps(p);
    let st = RngStream::new(3, 0);
    let chain = st.labelled("chain").try_par_map(50_000, |r| killed_chain_endpoint(p, steps, inc, r))?;
    let direct = st.labelled("direct").try_par_map(50_000, |r| fixed_point_sample(p, inc, r))?;
    let rep = ks_two_sample(&EmpiricalSample::new(chain)?, &EmpiricalSample::new(direct)?)?;
    println!("killed chain vs geometric max: D = {:.4}, p = {:.3}", rep.statistic, rep.p_value);
    Ok(())
}
