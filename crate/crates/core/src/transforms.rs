//! Closed-form joint transforms of `(max, last argmax)` for spectrally
//! one-sided models, the moments they generate, and the Frullani integral.
//!
//! With `q_beta(a, g) = E exp(-a max Y(T_beta) - g G(T_beta))` the
//! continuous-observation transform, the inspected transform is the ratio
//! `q_beta / q_{beta + omega}`:
//!
//! - SP: `q_beta(a, g) = beta / psi(beta) * (psi(beta + g) - a) / (beta + g - phi(a))`
//! - SN: `q_beta(a, g) = Psi(beta) / (Psi(beta + g) + a)`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{LevyModel, Side};
use crate::quadrature;

/// Relative distance to `psi(s)` below which the removable singularity of
/// `(psi(s) - a) / (s - phi(a))` is evaluated by its Taylor limit.
const REMOVABLE_REL: f64 = 1e-7;

/// Moments of `(max S, G)` for the inspected walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean_max: f64,
    pub mean_argmax: f64,
    /// `E[max S * G]`, equal to `covariance + mean_max * mean_argmax`.
    pub cross_moment: f64,
    pub covariance: f64,
    pub var_max: f64,
    pub var_argmax: f64,
    /// The cross moment from its standalone closed-form display. For the SP
    /// side this display disagrees with the transform (and with
    /// `covariance + means`); it is reported for comparison only.
    pub cross_moment_as_printed: f64,
}

impl MomentReport {
    pub fn satisfies_cauchy_schwarz(&self) -> bool {
        self.var_max >= 0.0
            && self.var_argmax >= 0.0
            && self.covariance.abs() <= (self.var_max * self.var_argmax).sqrt() * (1.0 + 1e-12)
    }
}

fn check_rates(beta: f64, omega: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidRate(beta));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidRate(omega));
    }
    Ok(())
}

fn check_args(alpha: f64, gamma: f64) -> Result<()> {
    if !(alpha >= 0.0) || !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "transform arguments must be >= 0 (alpha={alpha}, gamma={gamma})"
        )));
    }
    Ok(())
}

/// `(psi(s) - alpha) / (s - phi(alpha))` for an SP model, with the removable
/// singularity at `alpha = psi(s)` replaced by its second-order expansion.
pub fn sp_ratio(model: &LevyModel, s: f64, alpha: f64) -> Result<f64> {
    let root = model.right_inverse(Side::Sp, s)?;
    let h = alpha - root;
    if h.abs() <= REMOVABLE_REL * root.max(1.0) {
        // s - phi(a) = -phi'(r) h - phi''(r) h^2 / 2 + O(h^3)
        let e = model.exponent(Side::Sp, root)?;
        return Ok(1.0 / (e.first_derivative + 0.5 * e.second_derivative * h));
    }
    let den = s - model.exponent(Side::Sp, alpha)?.value;
    if den.abs() < 1e-13 {
        return Err(Error::SingularDenominator { alpha, rate: s });
    }
    Ok((root - alpha) / den)
}

/// Joint transform of `(max Y(T_beta), G(T_beta))` under continuous observation.
pub fn joint_lst_continuous(model: &LevyModel, side: Side, beta: f64, alpha: f64, gamma: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidRate(beta));
    }
    check_args(alpha, gamma)?;
    match side {
        Side::Sp => {
            let root = model.right_inverse(Side::Sp, beta)?;
            Ok(beta / root * sp_ratio(model, beta + gamma, alpha)?)
        }
        Side::Sn => {
            let r = model.right_inverse(Side::Sn, beta)?;
            Ok(r / (model.right_inverse(Side::Sn, beta + gamma)? + alpha))
        }
    }
}

/// Joint transform of `(max S, G_N)` for the inspected walk, SP case.
pub fn joint_lst_inspected_sp(model: &LevyModel, beta: f64, omega: f64, alpha: f64, gamma: f64) -> Result<f64> {
    check_rates(beta, omega)?;
    check_args(alpha, gamma)?;
    let fast = beta + omega;
    let a = beta / model.right_inverse(Side::Sp, beta)? * sp_ratio(model, beta + gamma, alpha)?;
    let b = model.right_inverse(Side::Sp, fast)? / fast / sp_ratio(model, fast + gamma, alpha)?;
    Ok(a * b)
}

/// Joint transform of `(max S, G_N)` for the inspected walk, SN case.
pub fn joint_lst_inspected_sn(model: &LevyModel, beta: f64, omega: f64, alpha: f64, gamma: f64) -> Result<f64> {
    check_rates(beta, omega)?;
    check_args(alpha, gamma)?;
    let inv = |s: f64| model.right_inverse(Side::Sn, s);
    Ok(inv(beta)? / inv(beta + omega)? * (inv(beta + omega + gamma)? + alpha) / (inv(beta + gamma)? + alpha))
}

pub fn joint_lst_inspected(model: &LevyModel, side: Side, beta: f64, omega: f64, alpha: f64, gamma: f64) -> Result<f64> {
    match side {
        Side::Sp => joint_lst_inspected_sp(model, beta, omega, alpha, gamma),
        Side::Sn => joint_lst_inspected_sn(model, beta, omega, alpha, gamma),
    }
}

/// `P(max S = 0) = Psi(beta) / Psi(beta + omega)` for an SN model.
pub fn atom_at_zero_sn(model: &LevyModel, beta: f64, omega: f64) -> Result<f64> {
    check_rates(beta, omega)?;
    Ok(model.right_inverse(Side::Sn, beta)? / model.right_inverse(Side::Sn, beta + omega)?)
}

/// `E max Y(T_beta)` under continuous observation.
pub fn mean_max_continuous(model: &LevyModel, side: Side, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidRate(beta));
    }
    match side {
        Side::Sp => {
            let slope = model.exponent(Side::Sp, 0.0)?.first_derivative;
            Ok(1.0 / model.right_inverse(Side::Sp, beta)? - slope / beta)
        }
        Side::Sn => Ok(1.0 / model.right_inverse(Side::Sn, beta)?),
    }
}

/// All six moments of `(max S, G_N)` for a spectrally one-sided model.
pub fn moments_inspected(model: &LevyModel, side: Side, beta: f64, omega: f64) -> Result<MomentReport> {
    check_rates(beta, omega)?;
    if !model.supports(side) {
        return Err(Error::UnsupportedSidedness(side));
    }
    let fast = beta + omega;
    let slow_inv = model.inverse_derivatives(side, beta)?;
    let fast_inv = model.inverse_derivatives(side, fast)?;
    let (rb, db, ddb) = (slow_inv.value, slow_inv.first_derivative, slow_inv.second_derivative);
    let (rw, dw, ddw) = (fast_inv.value, fast_inv.first_derivative, fast_inv.second_derivative);
    let e1 = 1.0 / beta - 1.0 / fast;
    let e2 = 1.0 / (beta * beta) - 1.0 / (fast * fast);

    let report = match side {
        Side::Sp => {
            let origin = model.exponent(Side::Sp, 0.0)?;
            let (p1, p2) = (origin.first_derivative, origin.second_derivative);
            if !p2.is_finite() {
                return Err(Error::InfiniteSecondMoment);
            }
            let mean_max = 1.0 / rb - 1.0 / rw - p1 / beta + p1 / fast;
            let mean_argmax = -db / rb + dw / rw + e1;
            let covariance = -p1 * e2 + db / (rb * rb) - dw / (rw * rw);
            let var_max = p2 * e1 + p1 * p1 * e2 - 1.0 / (rb * rb) + 1.0 / (rw * rw);
            let var_argmax = e2 + ddb / rb - ddw / rw - (db / rb).powi(2) + (dw / rw).powi(2);
            let printed = db / (rb * rw) + dw / (rb * rw) - 2.0 * dw / (rw * rw)
                + p1 * e1 * (db / rb - dw / rw)
                + e1 * (1.0 / rw - 1.0 / rb)
                - 2.0 * p1 / beta * e1;
            MomentReport {
                mean_max,
                mean_argmax,
                cross_moment: covariance + mean_max * mean_argmax,
                covariance,
                var_max,
                var_argmax,
                cross_moment_as_printed: printed,
            }
        }
        Side::Sn => {
            let mean_max = 1.0 / rb - 1.0 / rw;
            let mean_argmax = db / rb - dw / rw;
            let cross = db / rb * (1.0 / rb - 1.0 / rw) + 1.0 / rb * (db / rb - dw / rw);
            MomentReport {
                mean_max,
                mean_argmax,
                cross_moment: cross,
                covariance: db / (rb * rb) - dw / (rw * rw),
                var_max: 1.0 / (rb * rb) - 1.0 / (rw * rw),
                var_argmax: ddw / rw - ddb / rb + (db / rb).powi(2) - (dw / rw).powi(2),
                cross_moment_as_printed: cross,
            }
        }
    };
    Ok(report)
}

/// `int_0^inf t^-1 e^{-beta t} (1 - e^{-omega t}) dt` by adaptive quadrature,
/// next to its closed form `log((beta + omega) / beta)`.
///
/// The integral is cut at `50 / beta`; the neglected tail is below
/// `e^-50 / 50`.
pub fn frullani_check(beta: f64, omega: f64) -> Result<(f64, f64)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidRate(beta));
    }
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::InvalidRate(omega));
    }
    let closed = (omega / beta).ln_1p();
    if omega == 0.0 {
        return Ok((0.0, closed));
    }
    let integrand = |t: f64| {
        if t == 0.0 {
            omega
        } else {
            (-beta * t).exp() * -(-omega * t).exp_m1() / t
        }
    };
    let upper = 50.0 / beta;
    // split at the inner time scale so the first panel resolves the decay of 1 - e^{-omega t}
    let knee = (10.0 / omega).min(upper);
    let head = quadrature::integrate(integrand, 0.0, knee, 1e-13, 1e-13)?;
    let tail = quadrature::integrate(integrand, knee, upper, 1e-13, 1e-13)?;
    Ok((head + tail, closed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cl() -> LevyModel {
        LevyModel::compound_poisson_up(2.0, 1.0, 1.0)
    }

    fn bm() -> LevyModel {
        LevyModel::brownian(-1.0, 1.0)
    }

    #[test]
    fn transforms_are_one_at_origin() {
        assert_relative_eq!(joint_lst_inspected_sp(&cl(), 1.0, 1.0, 0.0, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(joint_lst_inspected_sn(&bm(), 1.0, 1.0, 0.0, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        for side in [Side::Sp, Side::Sn] {
            assert_relative_eq!(joint_lst_continuous(&bm(), side, 0.7, 0.0, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sn_transform_example() {
        let v = joint_lst_inspected_sn(&bm(), 1.0, 1.0, 1.0, 0.0).unwrap();
        let (r1, r2) = (1.0 + 3f64.sqrt(), 1.0 + 5f64.sqrt());
        assert_relative_eq!(v, r1 / r2 * (r2 + 1.0) / (r1 + 1.0), epsilon = 1e-12);
        assert!((v - 0.9582).abs() < 1e-4);
    }

    #[test]
    fn sn_atom_is_large_alpha_limit() {
        let atom = atom_at_zero_sn(&bm(), 1.0, 1.0).unwrap();
        assert_relative_eq!(atom, (1.0 + 3f64.sqrt()) / (1.0 + 5f64.sqrt()), epsilon = 1e-12);
        let lim = joint_lst_inspected_sn(&bm(), 1.0, 1.0, 1e9, 0.0).unwrap();
        assert!((lim - atom).abs() < 1e-9);
    }

    #[test]
    fn sn_continuous_marginal_is_exponential_lst() {
        let r = bm().right_inverse(Side::Sn, 1.0).unwrap();
        let v = joint_lst_continuous(&bm(), Side::Sn, 1.0, 0.8, 0.0).unwrap();
        assert_relative_eq!(v, r / (r + 0.8), epsilon = 1e-12);
    }

    #[test]
    fn removable_singularity_is_continuous() {
        let s = 1.3;
        let root = cl().right_inverse(Side::Sp, s).unwrap();
        let at = sp_ratio(&cl(), s, root).unwrap();
        let near = sp_ratio(&cl(), s, root + 1e-4).unwrap();
        assert!((at - near).abs() < 1e-4);
        let slope = cl().exponent(Side::Sp, root).unwrap().first_derivative;
        assert_relative_eq!(at, 1.0 / slope, epsilon = 1e-12);
    }

    #[test]
    fn large_omega_recovers_continuous_transform() {
        for &(a, g) in &[(0.3, 0.2), (1.0, 0.0), (0.0, 2.0)] {
            let inspected = joint_lst_inspected_sp(&cl(), 1.0, 1e9, a, g).unwrap();
            let cont = joint_lst_continuous(&cl(), Side::Sp, 1.0, a, g).unwrap();
            assert!((inspected - cont).abs() < 1e-6, "{a} {g}: {inspected} vs {cont}");
        }
    }

    #[test]
    fn mean_max_reference_values() {
        let sn = moments_inspected(&bm(), Side::Sn, 1.0, 1.0).unwrap();
        let expect_sn = 1.0 / (1.0 + 3f64.sqrt()) - 1.0 / (1.0 + 5f64.sqrt());
        assert_relative_eq!(sn.mean_max, expect_sn, epsilon = 1e-12);
        assert!((sn.mean_max - 0.05701).abs() < 1e-5);
        let sp = moments_inspected(&cl(), Side::Sp, 1.0, 1.0).unwrap();
        let expect_sp = 2f64.sqrt() - 4.0 / (1.0 + 17f64.sqrt()) - 1.0 + 0.5;
        assert_relative_eq!(sp.mean_max, expect_sp, epsilon = 1e-12);
        assert!((sp.mean_max - 0.13343).abs() < 1e-5);
        assert!(sn.covariance > 0.0);
        assert!(sn.satisfies_cauchy_schwarz() && sp.satisfies_cauchy_schwarz());
    }

    #[test]
    fn sn_mean_tends_to_continuous_mean() {
        let r = bm().right_inverse(Side::Sn, 1.0).unwrap();
        let m = moments_inspected(&bm(), Side::Sn, 1.0, 1e8).unwrap();
        assert!((m.mean_max - 1.0 / r).abs() < 1e-3);
    }

    #[test]
    fn printed_sp_cross_moment_differs() {
        let sp = moments_inspected(&cl(), Side::Sp, 1.0, 1.0).unwrap();
        assert!((sp.cross_moment - sp.cross_moment_as_printed).abs() > 0.1);
        let sn = moments_inspected(&bm(), Side::Sn, 1.0, 1.0).unwrap();
        assert_eq!(sn.cross_moment, sn.cross_moment_as_printed);
        assert_relative_eq!(sn.cross_moment, sn.covariance + sn.mean_max * sn.mean_argmax, epsilon = 1e-12);
    }

    #[test]
    fn moments_reject_wrong_side() {
        assert!(matches!(
            moments_inspected(&cl(), Side::Sn, 1.0, 1.0),
            Err(Error::UnsupportedSidedness(Side::Sn))
        ));
    }

    #[test]
    fn frullani_values() {
        let (q, c) = frullani_check(1.0, 1.0).unwrap();
        assert!((q - 2f64.ln()).abs() < 1e-8 && (c - 2f64.ln()).abs() < 1e-15);
        assert_eq!(frullani_check(2.0, 0.0).unwrap(), (0.0, 0.0));
        let (q, c) = frullani_check(0.1, 10.0).unwrap();
        assert!((c - 101f64.ln()).abs() < 1e-12);
        assert!((q - c).abs() < 1e-8);
        assert!(frullani_check(0.0, 1.0).is_err());
    }
}
