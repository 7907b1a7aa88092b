//! Exact samplers for the running maximum of a Lévy path over a horizon.
//!
//! Compound Poisson paths with linear drift are piecewise linear, so the
//! supremum and the last time it is attained are computed exactly from the
//! jump sequence. Brownian paths are sampled on a grid; inside each cell the
//! maximum of the Brownian bridge between the endpoints is drawn exactly, so
//! the maximum carries no discretisation bias. The argmax is then reported as
//! the midpoint of the winning cell (bias at most half a cell).

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{LevyModel, ModelKind};

/// Default grid size used for Brownian paths when none is given.
pub const DEFAULT_CELLS: usize = 256;

/// One sample of `(sup Y, last argmax, Y(horizon), horizon)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathExtrema {
    pub max_value: f64,
    pub argmax_time: f64,
    pub terminal_value: f64,
    pub horizon: f64,
}

impl PathExtrema {
    pub fn check_invariants(&self) -> bool {
        self.max_value >= 0.0
            && self.max_value >= self.terminal_value
            && self.argmax_time >= 0.0
            && self.argmax_time <= self.horizon
            && (self.max_value > 0.0 || self.argmax_time == 0.0)
    }
}

/// A jump of the compound Poisson part: epoch and signed size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidRate(rate));
    }
    Ok(exp_draw(rate, rng))
}

#[inline]
pub(crate) fn exp_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

/// Draws one Erlang jump magnitude.
#[inline]
pub(crate) fn jump_size<R: Rng + ?Sized>(model: &LevyModel, rng: &mut R) -> f64 {
    if model.jump_shape == 1 {
        exp_draw(model.jump_mu, rng)
    } else {
        Gamma::new(model.jump_shape as f64, 1.0 / model.jump_mu)
            .expect("validated shape and rate")
            .sample(rng)
    }
}

/// Jump epochs and signed sizes of the compound Poisson part on `[0, horizon]`.
pub fn sample_jumps<R: Rng + ?Sized>(model: &LevyModel, horizon: f64, rng: &mut R) -> Vec<Jump> {
    let mut jumps = Vec::new();
    if model.jump_rate <= 0.0 || model.jump_sign() == 0.0 {
        return jumps;
    }
    let sign = model.jump_sign();
    let mut t = exp_draw(model.jump_rate, rng);
    while t <= horizon {
        jumps.push(Jump {
            time: t,
            size: sign * jump_size(model, rng),
        });
        t += exp_draw(model.jump_rate, rng);
    }
    jumps
}

/// Exact supremum, last argmax and terminal value of
/// `Y(t) = drift t + sum_{time_i <= t} size_i` on `[0, horizon]`.
///
/// `jumps` must be sorted by time and lie in `(0, horizon]`. The supremum is
/// taken over both left limits and values; ties go to the latest epoch.
pub fn piecewise_linear_extrema(drift: f64, jumps: &[Jump], horizon: f64) -> PathExtrema {
    let mut best = 0.0;
    let mut best_t = 0.0;
    let mut t0 = 0.0;
    let mut y0 = 0.0;
    let consider = |v: f64, t: f64, best: &mut f64, best_t: &mut f64| {
        if v >= *best {
            *best = v;
            *best_t = t;
        }
    };
    for j in jumps {
        // segment [t0, j.time): endpoints y0 and the left limit
        let left_limit = y0 + drift * (j.time - t0);
        consider(y0, t0, &mut best, &mut best_t);
        consider(left_limit, j.time, &mut best, &mut best_t);
        t0 = j.time;
        y0 = left_limit + j.size;
    }
    let terminal = y0 + drift * (horizon - t0);
    consider(y0, t0, &mut best, &mut best_t);
    consider(terminal, horizon, &mut best, &mut best_t);
    PathExtrema {
        max_value: best,
        argmax_time: best_t,
        terminal_value: terminal,
        horizon,
    }
}

pub fn sample_extrema_piecewise_linear<R: Rng + ?Sized>(
    model: &LevyModel,
    horizon: f64,
    rng: &mut R,
) -> Result<PathExtrema> {
    if !model.is_piecewise_linear() {
        return Err(Error::InvalidModel(
            "piecewise-linear sampler needs zero volatility".into(),
        ));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidHorizon(horizon));
    }
    let jumps = sample_jumps(model, horizon, rng);
    Ok(piecewise_linear_extrema(model.drift, &jumps, horizon))
}

/// Exact maximum of a Brownian bridge from `a` to `b` over a cell of length
/// `dt`, by inverting `P(M >= m) = exp(-2 (m - a)(m - b) / (s2 dt))`.
#[inline]
pub fn bridge_maximum(a: f64, b: f64, s2dt: f64, u: f64) -> f64 {
    let d = b - a;
    0.5 * (a + b + (d * d - 2.0 * s2dt * u.ln()).sqrt())
}

pub fn sample_extrema_brownian<R: Rng + ?Sized>(
    model: &LevyModel,
    horizon: f64,
    cells: usize,
    rng: &mut R,
) -> Result<PathExtrema> {
    if model.kind != ModelKind::BrownianDrift || model.jump_rate > 0.0 {
        return Err(Error::InvalidModel(
            "grid sampler handles Brownian motion with drift only".into(),
        ));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidHorizon(horizon));
    }
    if cells == 0 {
        return Err(Error::InvalidParameter("cells must be >= 1".into()));
    }
    let dt = horizon / cells as f64;
    let s = model.volatility;
    let s2dt = s * s * dt;
    let sd = s * dt.sqrt();
    let mut y = 0.0;
    let mut best = 0.0;
    let mut best_cell: Option<usize> = None;
    for c in 0..cells {
        let z: f64 = StandardNormal.sample(rng);
        let next = y + model.drift * dt + sd * z;
        let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
        let m = if s2dt > 0.0 { bridge_maximum(y, next, s2dt, u) } else { y.max(next) };
        if m >= best && m > 0.0 {
            best = m;
            best_cell = Some(c);
        }
        y = next;
    }
    let argmax_time = match best_cell {
        Some(c) => ((c as f64 + 0.5) * dt).min(horizon),
        None => 0.0,
    };
    Ok(PathExtrema {
        max_value: best,
        argmax_time,
        terminal_value: y,
        horizon,
    })
}

/// Exact-law sampler for `(sup Y, G)` at a fixed horizon, dispatching on the model class.
pub fn sample_extrema<R: Rng + ?Sized>(model: &LevyModel, horizon: f64, rng: &mut R) -> Result<PathExtrema> {
    if model.is_piecewise_linear() {
        sample_extrema_piecewise_linear(model, horizon, rng)
    } else {
        sample_extrema_brownian(model, horizon, DEFAULT_CELLS, rng)
    }
}

/// Draws `T ~ exp(beta)` and the extrema of the path up to `T`.
pub fn sample_continuous_pair<R: Rng + ?Sized>(model: &LevyModel, beta: f64, rng: &mut R) -> Result<PathExtrema> {
    let horizon = sample_exponential(beta, rng)?;
    if horizon == 0.0 {
        return Ok(PathExtrema {
            max_value: 0.0,
            argmax_time: 0.0,
            terminal_value: 0.0,
            horizon: 0.0,
        });
    }
    sample_extrema(model, horizon, rng)
}

/// `Y(tau)` for a fixed `tau`, sampled exactly.
pub fn sample_increment<R: Rng + ?Sized>(model: &LevyModel, tau: f64, rng: &mut R) -> f64 {
    let mut y = model.drift * tau;
    if model.volatility > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        y += model.volatility * tau.sqrt() * z;
    }
    if model.jump_rate > 0.0 && model.jump_sign() != 0.0 {
        let sign = model.jump_sign();
        let mut t = exp_draw(model.jump_rate, rng);
        while t <= tau {
            y += sign * jump_size(model, rng);
            t += exp_draw(model.jump_rate, rng);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn exponential_rejects_bad_rate() {
        let mut r = RngStream::new(1, 0).generator();
        assert!(matches!(sample_exponential(0.0, &mut r), Err(Error::InvalidRate(_))));
        assert!(matches!(sample_exponential(-1.0, &mut r), Err(Error::InvalidRate(_))));
        let a = sample_exponential(2.0, &mut RngStream::new(5, 5).generator()).unwrap();
        let b = sample_exponential(2.0, &mut RngStream::new(5, 5).generator()).unwrap();
        assert!(a > 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn decreasing_path_has_zero_maximum() {
        let m = LevyModel::compound_poisson_up(2.0, 0.0, 1.0);
        let mut r = RngStream::new(1, 1).generator();
        let e = sample_extrema_piecewise_linear(&m, 3.0, &mut r).unwrap();
        assert_eq!(e.max_value, 0.0);
        assert_eq!(e.argmax_time, 0.0);
        assert_eq!(e.terminal_value, -6.0);
    }

    #[test]
    fn increasing_path_peaks_at_horizon() {
        let m = LevyModel::compound_poisson_down(1.5, 0.0, 1.0);
        let mut r = RngStream::new(1, 1).generator();
        let e = sample_extrema_piecewise_linear(&m, 2.0, &mut r).unwrap();
        assert_eq!(e.max_value, 3.0);
        assert_eq!(e.argmax_time, 2.0);
    }

    #[test]
    fn hand_built_path() {
        // -t, jump +3 at t=1 (to 2), down to 0.5 at t=2.5, jump +0.5 at 2.5 (to 1), end at 3 -> 0.5
        let jumps = [Jump { time: 1.0, size: 3.0 }, Jump { time: 2.5, size: 0.5 }];
        let e = piecewise_linear_extrema(-1.0, &jumps, 3.0);
        assert_eq!(e.max_value, 2.0);
        assert_eq!(e.argmax_time, 1.0);
        assert_eq!(e.terminal_value, 0.5);
        // a later exact tie goes to the later epoch
        let jumps = [Jump { time: 1.0, size: 3.0 }, Jump { time: 2.0, size: 1.0 }];
        let e = piecewise_linear_extrema(-1.0, &jumps, 3.0);
        assert_eq!(e.max_value, 2.0);
        assert_eq!(e.argmax_time, 2.0);
    }

    #[test]
    fn downward_jumps_peak_at_left_limits() {
        let jumps = [Jump { time: 1.0, size: -2.0 }];
        let e = piecewise_linear_extrema(1.0, &jumps, 2.0);
        assert_eq!(e.max_value, 1.0);
        assert_eq!(e.argmax_time, 1.0);
        assert_eq!(e.terminal_value, 0.0);
    }

    #[test]
    fn brownian_rejects_jumps_and_compound_models() {
        let mut r = RngStream::new(1, 1).generator();
        let cp = LevyModel::compound_poisson_up(2.0, 1.0, 1.0);
        assert!(sample_extrema_brownian(&cp, 1.0, 4, &mut r).is_err());
        let bm = LevyModel::brownian(0.0, 1.0);
        assert!(sample_extrema_brownian(&bm, 1.0, 0, &mut r).is_err());
        assert!(sample_extrema_brownian(&bm, -1.0, 4, &mut r).is_err());
    }

    #[test]
    fn bridge_maximum_is_above_endpoints() {
        for &(a, b, u) in &[(0.0, 1.0, 0.3), (2.0, -1.0, 0.999), (0.0, 0.0, 1.0)] {
            let m = bridge_maximum(a, b, 0.7, u);
            assert!(m >= f64::max(a, b) - 1e-15);
        }
        // u = 1 gives exactly max(a, b)
        assert_eq!(bridge_maximum(0.5, -0.25, 1.0, 1.0), 0.5);
    }

    #[test]
    fn invariants_hold_on_many_samples() {
        let models = [
            LevyModel::compound_poisson_up(2.0, 1.0, 1.0),
            LevyModel::compound_poisson_down(1.0, 2.0, 1.0).with_jump_shape(2),
            LevyModel::brownian(-0.5, 1.0),
        ];
        let mut r = RngStream::new(11, 0).generator();
        for m in &models {
            for _ in 0..20_000 {
                let e = sample_continuous_pair(m, 0.7, &mut r).unwrap();
                assert!(e.check_invariants(), "{m:?} {e:?}");
            }
        }
    }
}
