//! Lévy model parameterisations and their log-moment exponents.
//!
//! Two exponents are used, one per sidedness class:
//!
//! - spectrally positive (no downward jumps): `phi(a) = log E exp(-a Y(1))`
//! - spectrally negative (no upward jumps):   `Phi(a) = log E exp(a Y(1))`
//!
//! Both are convex on `[0, inf)`, vanish at zero and have closed-form
//! derivatives for the supported models (Brownian motion with drift, and
//! compound Poisson with linear drift and Erlang jump sizes). Their
//! right-inverses `psi` / `Psi` pick the largest nonnegative root.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which exponent is meant: `phi`/`psi` (SP) or `Phi`/`Psi` (SN).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Spectrally positive: no downward jumps.
    Sp,
    /// Spectrally negative: no upward jumps.
    Sn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `Y(t) = drift t + volatility B(t)`.
    BrownianDrift,
    /// `Y(t) = drift t + sum of upward Erlang jumps`, with `drift < 0`.
    CompoundPoissonDriftUp,
    /// `Y(t) = drift t - sum of Erlang jumps`, with `drift > 0`.
    CompoundPoissonDriftDown,
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

/// Parametric Lévy process.
///
/// `drift` is the signed linear coefficient of `Y`; a Cramér–Lundberg net-loss
/// process with premium rate `c` is `CompoundPoissonDriftUp` with
/// `drift = -c`. Jump sizes are Erlang(`jump_shape`, `jump_mu`), i.e. the
/// sum of `jump_shape` exponentials of rate `jump_mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyModel {
    pub kind: ModelKind,
    pub drift: f64,
    #[serde(default)]
    pub volatility: f64,
    #[serde(default)]
    pub jump_rate: f64,
    #[serde(default = "one")]
    pub jump_mu: f64,
    #[serde(default = "one_u32")]
    pub jump_shape: u32,
}

/// An exponent (or right-inverse) value with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentEval {
    pub value: f64,
    pub first_derivative: f64,
    pub second_derivative: f64,
}

const ROOT_TOL: f64 = 1e-12;
const MAX_ITER: usize = 500;

impl LevyModel {
    pub fn brownian(drift: f64, volatility: f64) -> Self {
        Self {
            kind: ModelKind::BrownianDrift,
            drift,
            volatility,
            jump_rate: 0.0,
            jump_mu: 1.0,
            jump_shape: 1,
        }
    }

    /// Downward drift `-premium` plus upward exponential(`mu`) jumps at rate `rate`.
    pub fn compound_poisson_up(premium: f64, rate: f64, mu: f64) -> Self {
        Self {
            kind: ModelKind::CompoundPoissonDriftUp,
            drift: -premium,
            volatility: 0.0,
            jump_rate: rate,
            jump_mu: mu,
            jump_shape: 1,
        }
    }

    /// Upward drift `premium` minus exponential(`mu`) jumps at rate `rate`.
    pub fn compound_poisson_down(premium: f64, rate: f64, mu: f64) -> Self {
        Self {
            kind: ModelKind::CompoundPoissonDriftDown,
            drift: premium,
            volatility: 0.0,
            jump_rate: rate,
            jump_mu: mu,
            jump_shape: 1,
        }
    }

    pub fn with_jump_shape(mut self, shape: u32) -> Self {
        self.jump_shape = shape;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidModel(msg.to_string()));
        if !(self.drift.is_finite()
            && self.volatility.is_finite()
            && self.jump_rate.is_finite()
            && self.jump_mu.is_finite())
        {
            return bad("non-finite parameter");
        }
        if self.volatility < 0.0 {
            return bad("volatility must be nonnegative");
        }
        if self.jump_rate < 0.0 {
            return bad("jump_rate must be nonnegative");
        }
        if self.jump_mu <= 0.0 {
            return bad("jump_mu must be positive");
        }
        if self.jump_shape == 0 {
            return bad("jump_shape must be at least 1");
        }
        match self.kind {
            ModelKind::BrownianDrift if self.jump_rate > 0.0 => {
                bad("brownian_drift carries no jumps (jump_rate must be 0)")
            }
            ModelKind::CompoundPoissonDriftUp | ModelKind::CompoundPoissonDriftDown
                if self.volatility > 0.0 =>
            {
                bad("compound Poisson models have zero volatility")
            }
            ModelKind::CompoundPoissonDriftUp if self.drift >= 0.0 => {
                bad("compound_poisson_drift_up needs a negative drift")
            }
            ModelKind::CompoundPoissonDriftDown if self.drift <= 0.0 => {
                bad("compound_poisson_drift_down needs a positive drift")
            }
            _ => Ok(()),
        }
    }

    pub fn supports(&self, side: Side) -> bool {
        matches!(
            (self.kind, side),
            (ModelKind::BrownianDrift, _)
                | (ModelKind::CompoundPoissonDriftUp, Side::Sp)
                | (ModelKind::CompoundPoissonDriftDown, Side::Sn)
        )
    }

    /// The side whose closed forms apply; Brownian motion defaults to SN.
    pub fn natural_side(&self) -> Side {
        match self.kind {
            ModelKind::CompoundPoissonDriftUp => Side::Sp,
            _ => Side::Sn,
        }
    }

    /// Whether paths are piecewise linear (exact maxima and argmax available).
    pub fn is_piecewise_linear(&self) -> bool {
        self.volatility == 0.0
    }

    /// Signed jump direction: +1 for upward jumps, -1 for downward, 0 for none.
    pub fn jump_sign(&self) -> f64 {
        match self.kind {
            ModelKind::BrownianDrift => 0.0,
            ModelKind::CompoundPoissonDriftUp => 1.0,
            ModelKind::CompoundPoissonDriftDown => -1.0,
        }
    }

    /// `E Y(1)`.
    pub fn mean(&self) -> f64 {
        self.drift + self.jump_sign() * self.jump_rate * self.jump_shape as f64 / self.jump_mu
    }

    /// `Var Y(1)`.
    pub fn variance(&self) -> f64 {
        let k = self.jump_shape as f64;
        let second = k * (k + 1.0) / (self.jump_mu * self.jump_mu);
        self.volatility * self.volatility + self.jump_rate * second * self.jump_sign().abs()
    }

    /// Common form `a x + s^2 x^2 / 2 + rate (M(x) - 1)`, `M` the Erlang LST.
    fn exponent_unchecked(&self, side: Side, x: f64) -> ExponentEval {
        let a = match side {
            Side::Sp => -self.drift,
            Side::Sn => self.drift,
        };
        let s2 = self.volatility * self.volatility;
        let mut value = a * x + 0.5 * s2 * x * x;
        let mut d1 = a + s2 * x;
        let mut d2 = s2;
        if self.jump_sign() != 0.0 && self.jump_rate > 0.0 {
            let k = self.jump_shape as f64;
            let r = self.jump_mu / (self.jump_mu + x);
            let lst = r.powi(self.jump_shape as i32);
            // M(x) - 1 without cancellation for small x
            let lst_m1 = if x < 1e-3 * self.jump_mu {
                (-k * (x / self.jump_mu).ln_1p()).exp_m1()
            } else {
                lst - 1.0
            };
            value += self.jump_rate * lst_m1;
            d1 -= self.jump_rate * k * lst / (self.jump_mu + x);
            d2 += self.jump_rate * k * (k + 1.0) * lst / ((self.jump_mu + x) * (self.jump_mu + x));
        }
        ExponentEval {
            value,
            first_derivative: d1,
            second_derivative: d2,
        }
    }

    /// Exponent of the requested side at `alpha >= 0`.
    pub fn exponent(&self, side: Side, alpha: f64) -> Result<ExponentEval> {
        if !self.supports(side) {
            return Err(Error::UnsupportedSidedness(side));
        }
        if !(alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(self.exponent_unchecked(side, alpha))
    }

    /// Largest `alpha >= 0` with `exponent(alpha) = beta`.
    pub fn right_inverse(&self, side: Side, beta: f64) -> Result<f64> {
        if !self.supports(side) {
            return Err(Error::UnsupportedSidedness(side));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
        }
        let f = |x: f64| self.exponent_unchecked(side, x);
        let growth = f(0.0).first_derivative;
        if self.volatility == 0.0 && growth <= 0.0 && self.exponent_tail_slope(side) <= 0.0 {
            return Err(Error::NoRoot { target: beta });
        }

        // Lower end: the minimiser of the exponent (0 if it is increasing).
        let mut lo = 0.0;
        if growth < 0.0 {
            let mut hi = 1.0;
            let mut guard = 0;
            while f(hi).first_derivative < 0.0 {
                lo = hi;
                hi *= 2.0;
                guard += 1;
                if guard > 1100 {
                    return Err(Error::NoRoot { target: beta });
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid).first_derivative < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
        }
        // Upper end: double until the exponent reaches beta.
        let mut hi = lo.max(1.0);
        let mut guard = 0;
        while f(hi).value < beta {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 1100 {
                return Err(Error::NoRoot { target: beta });
            }
        }

        let tol = ROOT_TOL * beta.max(1.0);
        let mut x = hi;
        for _ in 0..MAX_ITER {
            let e = f(x);
            let resid = e.value - beta;
            if resid.abs() <= tol {
                return Ok(x);
            }
            if resid > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - resid / e.first_derivative;
            x = if e.first_derivative > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(x);
            }
        }
        Err(Error::NonConvergence {
            iterations: MAX_ITER,
        })
    }

    /// Right-inverse value with derivatives by implicit differentiation.
    pub fn inverse_derivatives(&self, side: Side, beta: f64) -> Result<ExponentEval> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        let root = self.right_inverse(side, beta)?;
        let e = self.exponent_unchecked(side, root);
        if e.first_derivative <= 1e-14 {
            return Err(Error::DegenerateDerivative {
                value: e.first_derivative,
            });
        }
        let d1 = 1.0 / e.first_derivative;
        Ok(ExponentEval {
            value: root,
            first_derivative: d1,
            second_derivative: -e.second_derivative * d1 * d1 * d1,
        })
    }

    /// Slope of the exponent as `alpha -> inf` (finite only without diffusion).
    fn exponent_tail_slope(&self, side: Side) -> f64 {
        match side {
            Side::Sp => -self.drift,
            Side::Sn => self.drift,
        }
    }
}

/// `phi(alpha) = log E exp(-alpha Y(1))` for a spectrally positive model.
pub fn laplace_exponent_sp(model: &LevyModel, alpha: f64) -> Result<ExponentEval> {
    model.exponent(Side::Sp, alpha)
}

/// `Phi(alpha) = log E exp(alpha Y(1))` for a spectrally negative model.
pub fn cumulant_sn(model: &LevyModel, alpha: f64) -> Result<ExponentEval> {
    model.exponent(Side::Sn, alpha)
}

pub fn right_inverse(model: &LevyModel, side: Side, beta: f64) -> Result<f64> {
    model.right_inverse(side, beta)
}

pub fn inverse_derivatives(model: &LevyModel, side: Side, beta: f64) -> Result<ExponentEval> {
    model.inverse_derivatives(side, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cl() -> LevyModel {
        LevyModel::compound_poisson_up(2.0, 1.0, 1.0)
    }

    #[test]
    fn small_argument_branch_matches_direct_formula() {
        let m = LevyModel::compound_poisson_up(2.0, 1.5, 2.0).with_jump_shape(3);
        for x in [1e-9f64, 1e-6, 1.9e-3, 2.1e-3] {
            let direct = 2.0 * x + 1.5 * ((2.0 / (2.0 + x)).powi(3) - 1.0);
            let v = m.exponent(Side::Sp, x).unwrap().value;
            assert!((v - direct).abs() <= 1e-15 + 1e-9 * direct.abs(), "{x}: {v} vs {direct}");
        }
    }

    #[test]
    fn brownian_sp_exponent_is_quadratic() {
        let m = LevyModel::brownian(0.0, 2f64.sqrt());
        assert_relative_eq!(laplace_exponent_sp(&m, 3.0).unwrap().value, 9.0, epsilon = 1e-12);
    }

    #[test]
    fn exponents_vanish_at_zero() {
        for m in [cl(), LevyModel::brownian(-1.0, 1.0), LevyModel::compound_poisson_down(3.0, 2.0, 0.5)] {
            assert_eq!(m.exponent(m.natural_side(), 0.0).unwrap().value, 0.0);
        }
    }

    #[test]
    fn compound_poisson_sp_value() {
        assert_relative_eq!(laplace_exponent_sp(&cl(), 1.0).unwrap().value, 1.5, epsilon = 1e-14);
    }

    #[test]
    fn brownian_sn_values() {
        let m = LevyModel::brownian(-1.0, 1.0);
        assert_relative_eq!(cumulant_sn(&m, 2.0).unwrap().value, 0.0, epsilon = 1e-14);
        assert_relative_eq!(cumulant_sn(&m, 1.0).unwrap().value, -0.5, epsilon = 1e-14);
    }

    #[test]
    fn sidedness_is_enforced() {
        let down = LevyModel::compound_poisson_down(2.0, 1.0, 1.0);
        assert!(matches!(laplace_exponent_sp(&down, 1.0), Err(Error::UnsupportedSidedness(Side::Sp))));
        assert!(matches!(cumulant_sn(&cl(), 1.0), Err(Error::UnsupportedSidedness(Side::Sn))));
        let bm = LevyModel::brownian(0.3, 1.0);
        assert!(bm.supports(Side::Sp) && bm.supports(Side::Sn));
    }

    #[test]
    fn right_inverse_examples() {
        let bm = LevyModel::brownian(-1.0, 1.0);
        assert_relative_eq!(bm.right_inverse(Side::Sn, 1.0).unwrap(), 1.0 + 3f64.sqrt(), epsilon = 1e-11);
        assert_relative_eq!(bm.right_inverse(Side::Sn, 0.0).unwrap(), 2.0, epsilon = 1e-11);
        assert_relative_eq!(cl().right_inverse(Side::Sp, 1.0).unwrap(), 0.5f64.sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn inverse_derivative_examples() {
        let bm = LevyModel::brownian(-1.0, 1.0);
        let d = bm.inverse_derivatives(Side::Sn, 1.0).unwrap();
        assert_relative_eq!(d.first_derivative, 1.0 / 3f64.sqrt(), epsilon = 1e-11);
        let bm0 = LevyModel::brownian(0.0, 2f64.sqrt());
        let d = bm0.inverse_derivatives(Side::Sp, 4.0).unwrap();
        assert_relative_eq!(d.value, 2.0, epsilon = 1e-11);
        assert_relative_eq!(d.first_derivative, 0.25, epsilon = 1e-11);
        // psi(b) = sqrt(b) => psi'' = -b^{-3/2}/4
        assert_relative_eq!(d.second_derivative, -0.25 * 4f64.powf(-1.5), epsilon = 1e-11);
    }

    #[test]
    fn degenerate_derivative_at_zero_drift_origin() {
        // Phi(a) = a^2/2 with no drift: Psi(0) = 0 where Phi' = 0.
        let bm = LevyModel::brownian(0.0, 1.0);
        assert!(bm.inverse_derivatives(Side::Sn, 0.0).is_err());
    }

    #[test]
    fn no_root_for_subordinator_like_exponent() {
        // SN exponent of an upward-jump model is unsupported; a zero-drift
        // pure-jump model has a bounded exponent.
        let mut m = LevyModel::compound_poisson_down(1.0, 1.0, 1.0);
        m.drift = 0.0;
        assert!(matches!(m.right_inverse(Side::Sn, 1.0), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn validation_rejects_bad_models() {
        assert!(LevyModel::brownian(0.0, -1.0).validate().is_err());
        let mut m = LevyModel::brownian(0.0, 1.0);
        m.jump_rate = 1.0;
        assert!(m.validate().is_err());
        assert!(LevyModel::compound_poisson_up(-1.0, 1.0, 1.0).validate().is_err());
        assert!(LevyModel::compound_poisson_up(1.0, 1.0, 0.0).validate().is_err());
        assert!(cl().validate().is_ok());
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let m = LevyModel::from_json(
            r#"{"kind":"compound_poisson_drift_up","drift":-2,"jump_rate":1,"jump_mu":1}"#,
        )
        .unwrap();
        assert_eq!(m, cl());
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(LevyModel::from_json(&text).unwrap(), m);
        assert!(LevyModel::from_json(r#"{"kind":"stable","drift":0}"#).is_err());
    }

    #[test]
    fn erlang_mean_and_exponent_derivative() {
        let m = LevyModel::compound_poisson_up(5.0, 2.0, 1.5).with_jump_shape(3);
        let e = m.exponent(Side::Sp, 0.0).unwrap();
        assert_relative_eq!(e.first_derivative, -m.mean(), epsilon = 1e-12);
        assert_relative_eq!(e.second_derivative, m.variance(), epsilon = 1e-12);
    }
}
