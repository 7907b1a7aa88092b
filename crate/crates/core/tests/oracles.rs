//! Independent oracles for the closed forms.
//!
//! The reference transforms below use the analytic roots of the two
//! reference models and are written without the library's root finder.
//! Moments are read off them by Richardson-extrapolated central
//! differences. The frozen decimals were computed once with 30-digit
//! arithmetic.

use approx::assert_relative_eq;

use inspected_levy::levy::Side;
use inspected_levy::transforms::{joint_lst_continuous, joint_lst_inspected, moments_inspected, MomentReport};
use inspected_levy::LevyModel;

/// `phi(a) = 2a - a / (1 + a)` for the SP reference model.
fn phi_cl(a: f64) -> f64 {
    2.0 * a - a / (1.0 + a)
}

fn psi_cl(b: f64) -> f64 {
    ((b - 1.0) + ((1.0 - b).powi(2) + 8.0 * b).sqrt()) / 4.0
}

fn big_psi_bm(b: f64) -> f64 {
    1.0 + (1.0 + 2.0 * b).sqrt()
}

fn cont_cl(b: f64, a: f64, g: f64) -> f64 {
    let den = b + g - phi_cl(a);
    let ratio = if den.abs() < 1e-9 {
        // removable singularity at a = psi(b + g): the limit is 1 / phi'(a)
        1.0 / (2.0 - 1.0 / ((1.0 + a) * (1.0 + a)))
    } else {
        (psi_cl(b + g) - a) / den
    };
    b / psi_cl(b) * ratio
}

fn oracle_sp(b: f64, w: f64, a: f64, g: f64) -> f64 {
    cont_cl(b, a, g) / cont_cl(b + w, a, g)
}

fn oracle_sn(b: f64, w: f64, a: f64, g: f64) -> f64 {
    let r = big_psi_bm;
    r(b) / r(b + w) * (r(b + w + g) + a) / (r(b + g) + a)
}

/// Moments from `L(a, g) = E exp(-a S - g G)` by central differences,
/// Richardson-extrapolated over steps `h` and `h / 2`.
fn fd_moments<F: Fn(f64, f64) -> f64>(l: F) -> MomentReport {
    let once = |h: f64| {
        let f = |a: f64, g: f64| l(a, g);
        let da = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
        let dg = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
        let daa = (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h);
        let dgg = (f(0.0, h) - 2.0 * f(0.0, 0.0) + f(0.0, -h)) / (h * h);
        let dag = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        [da, dg, daa, dgg, dag]
    };
    let h = 2e-3;
    let (c, f) = (once(h), once(h / 2.0));
    let r: Vec<f64> = c.iter().zip(&f).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    let (es, eg) = (-r[0], -r[1]);
    let cross = r[4];
    MomentReport {
        mean_max: es,
        mean_argmax: eg,
        cross_moment: cross,
        covariance: cross - es * eg,
        var_max: r[2] - es * es,
        var_argmax: r[3] - eg * eg,
        cross_moment_as_printed: f64::NAN,
    }
}

fn assert_moments_close(got: &MomentReport, want: &MomentReport, rel: f64) {
    assert_relative_eq!(got.mean_max, want.mean_max, max_relative = rel);
    assert_relative_eq!(got.mean_argmax, want.mean_argmax, max_relative = rel);
    assert_relative_eq!(got.cross_moment, want.cross_moment, max_relative = rel);
    assert_relative_eq!(got.covariance, want.covariance, max_relative = rel);
    assert_relative_eq!(got.var_max, want.var_max, max_relative = rel);
    assert_relative_eq!(got.var_argmax, want.var_argmax, max_relative = rel);
}

fn cl() -> LevyModel {
    LevyModel::compound_poisson_up(2.0, 1.0, 1.0)
}

fn bm() -> LevyModel {
    LevyModel::brownian(-1.0, 1.0)
}

#[test]
fn analytic_roots_match_root_finder() {
    for b in [1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 1e4] {
        assert_relative_eq!(cl().right_inverse(Side::Sp, b).unwrap(), psi_cl(b), max_relative = 1e-11);
        assert_relative_eq!(bm().right_inverse(Side::Sn, b).unwrap(), big_psi_bm(b), max_relative = 1e-11);
    }
    assert_relative_eq!(psi_cl(1.0), 1.0 / 2f64.sqrt(), max_relative = 1e-15);
    assert_relative_eq!(psi_cl(2.0), (1.0 + 17f64.sqrt()) / 4.0, max_relative = 1e-15);
}

#[test]
fn transforms_match_oracle_on_grid() {
    let grid = [0.0, 0.1, 0.4, 1.0, 3.0, 8.0];
    for (b, w) in [(1.0, 1.0), (0.5, 1.0), (0.2, 5.0), (3.0, 0.3)] {
        for &a in &grid {
            for &g in &grid {
                let sp = joint_lst_inspected(&cl(), Side::Sp, b, w, a, g).unwrap();
                assert_relative_eq!(sp, oracle_sp(b, w, a, g), max_relative = 1e-10);
                let sn = joint_lst_inspected(&bm(), Side::Sn, b, w, a, g).unwrap();
                assert_relative_eq!(sn, oracle_sn(b, w, a, g), max_relative = 1e-10);
                let c = joint_lst_continuous(&cl(), Side::Sp, b, a, g).unwrap();
                assert_relative_eq!(c, cont_cl(b, a, g), max_relative = 1e-10);
            }
        }
    }
}

#[test]
fn finite_difference_moments_sp() {
    for (b, w) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
        let fd = fd_moments(|a, g| oracle_sp(b, w, a, g));
        let closed = moments_inspected(&cl(), Side::Sp, b, w).unwrap();
        assert_moments_close(&closed, &fd, 1e-5);
    }
}

#[test]
fn finite_difference_moments_sn() {
    for (b, w) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
        let fd = fd_moments(|a, g| oracle_sn(b, w, a, g));
        let closed = moments_inspected(&bm(), Side::Sn, b, w).unwrap();
        assert_moments_close(&closed, &fd, 1e-5);
    }
}

#[test]
fn finite_difference_of_implemented_transform() {
    // centred at (h0, h0) so every evaluation point stays nonnegative
    let h0 = 0.05;
    let lib = |a: f64, g: f64| joint_lst_inspected(&cl(), Side::Sp, 1.0, 1.0, a + h0, g + h0).unwrap();
    let ora = |a: f64, g: f64| oracle_sp(1.0, 1.0, a + h0, g + h0);
    let (x, y) = (fd_moments(lib), fd_moments(ora));
    assert_moments_close(&x, &y, 1e-7);
}

#[test]
fn frozen_reference_moments() {
    let sp = moments_inspected(&cl(), Side::Sp, 1.0, 1.0).unwrap();
    let want_sp = MomentReport {
        mean_max: 0.1334371560,
        mean_argmax: 0.0783483282,
        cross_moment: 0.1303426874,
        covariance: 0.1198881093,
        var_max: 0.3596117968,
        var_argmax: 0.1052640681,
        cross_moment_as_printed: -0.5030944686,
    };
    assert_moments_close(&sp, &want_sp, 1e-9);
    assert_relative_eq!(sp.cross_moment_as_printed, want_sp.cross_moment_as_printed, max_relative = 1e-9);

    let sn = moments_inspected(&bm(), Side::Sn, 1.0, 1.0).unwrap();
    let want_sn = MomentReport {
        mean_max: 0.0570084094,
        mean_argmax: 0.0731282643,
        cross_moment: 0.0388140969,
        covariance: 0.0346451709,
        var_max: 0.0384830934,
        var_argmax: 0.0683621998,
        cross_moment_as_printed: 0.0388140969,
    };
    assert_moments_close(&sn, &want_sn, 1e-9);
}

#[test]
fn factorization_identity_five_by_five() {
    let grid = [0.0, 0.3, 1.0, 2.5, 7.0];
    for (m, side) in [(cl(), Side::Sp), (bm(), Side::Sn), (bm(), Side::Sp)] {
        for (b, w) in [(1.0, 1.0), (0.3, 4.0)] {
            for &a in &grid {
                for &g in &grid {
                    let lhs = joint_lst_continuous(&m, side, b, a, g).unwrap();
                    let rhs = joint_lst_continuous(&m, side, b + w, a, g).unwrap()
                        * joint_lst_inspected(&m, side, b, w, a, g).unwrap();
                    assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
                }
            }
        }
    }
}

#[test]
fn atom_limit_at_large_alpha() {
    let v = joint_lst_inspected(&bm(), Side::Sn, 1.0, 1.0, 1e9, 0.0).unwrap();
    assert!((v - big_psi_bm(1.0) / big_psi_bm(2.0)).abs() < 1e-9);
}
