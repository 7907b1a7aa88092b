//! The equality-in-law and independence tests on simple inputs.
//!
//! cargo run --release --example stats_tests

use rand::Rng;
use rand_distr::{Distribution, Geometric, Normal};

use inspected_levy::lindley::geometric_pmf;
use inspected_levy::stats::{
    chi_square_pmf, distance_covariance_independence, energy_permutation_2d, ks_two_sample, tabulate, PairedSample,
};
use inspected_levy::{EmpiricalSample, RngStream, TestReport};

fn show(label: &str, rep: &TestReport) {
    println!("{label:<32} stat {:>10.4}  p {:.4}  {}", rep.statistic, rep.p_value, if rep.pass { "accept" } else { "reject" });
}

fn main() -> inspected_levy::Result<()> {
    let mut r = RngStream::new(4, 0).generator();
    let z = Normal::new(0.0, 1.0).expect("valid normal");
    let mut normals = |shift: f64, n: usize| -> Vec<f64> { (0..n).map(|_| shift + z.sample(&mut r)).collect() };
    let a = EmpiricalSample::new(normals(0.0, 2000))?;
    show("ks N(0,1) vs N(0,1)", &ks_two_sample(&a, &EmpiricalSample::new(normals(0.0, 2000))?)?);
    show("ks N(0,1) vs N(0.2,1)", &ks_two_sample(&a, &EmpiricalSample::new(normals(0.2, 2000))?)?);

    let geo = Geometric::new(0.3).expect("valid p");
    let draws: Vec<u64> = (0..10_000).map(|_| geo.sample(&mut r)).collect();
    show("chi2 vs G(0.3)", &chi_square_pmf(&tabulate(&draws), &geometric_pmf(0.3)?, 5)?);
    show("chi2 vs G(0.33)", &chi_square_pmf(&tabulate(&draws), &geometric_pmf(0.33)?, 5)?);

    let mut cloud = |rho: f64| -> inspected_levy::Result<PairedSample> {
        PairedSample::new(
            (0..500)
                .map(|_| {
                    let (u, v) = (z.sample(&mut r), z.sample(&mut r));
                    [u, rho * u + (1.0 - rho * rho).sqrt() * v]
                })
                .collect(),
        )
    };
    let (p0, p1, p2) = (cloud(0.0)?, cloud(0.0)?, cloud(0.8)?);
    show("energy indep vs indep", &energy_permutation_2d(&p0, &p1, 200, RngStream::new(4, 1))?);
    show("energy indep vs correlated", &energy_permutation_2d(&p0, &p2, 200, RngStream::new(4, 2))?);

    let x: Vec<Vec<f64>> = (0..300).map(|_| vec![r.gen_range(-1.0..1.0)]).collect();
    let y: Vec<Vec<f64>> = x.iter().map(|v| vec![v[0].abs()]).collect();
    let noise: Vec<Vec<f64>> = (0..300).map(|_| vec![r.gen::<f64>()]).collect();
    show("dcov x vs noise", &distance_covariance_independence(&x, &noise, 200, RngStream::new(4, 3))?);
    show("dcov x vs |x|", &distance_covariance_independence(&x, &y, 200, RngStream::new(4, 4))?);
    Ok(())
}
