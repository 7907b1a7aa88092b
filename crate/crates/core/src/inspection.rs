//! The Lévy process observed at Poisson(`omega`) epochs until an independent
//! exp(`beta`) killing time.
//!
//! The default construction runs competing risks: inter-event times are
//! exp(`beta + omega`) and each event is an inspection with probability
//! `omega / (beta + omega)`, otherwise the kill. The direct construction
//! (draw the horizon, lay down the inspection process on it, read the path at
//! those epochs) is kept as an independent cross-check.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::path::{exp_draw, jump_size, sample_increment};
use crate::rng::RngStream;
use crate::stats::{self, EmpiricalSample, TestReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InspectionParams {
    /// Killing rate.
    pub beta: f64,
    /// Inspection rate.
    pub omega: f64,
}

impl InspectionParams {
    pub fn new(beta: f64, omega: f64) -> Result<Self> {
        let p = Self { beta, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidRate(self.beta));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidRate(self.omega));
        }
        Ok(())
    }

    /// Success probability of the geometric inspection count, `beta / (beta + omega)`.
    pub fn q(&self) -> f64 {
        self.beta / (self.beta + self.omega)
    }

    /// `P(N = n) = (1 - q)^n q`.
    pub fn count_pmf(&self, n: u64) -> f64 {
        let q = self.q();
        (1.0 - q).powf(n as f64) * q
    }
}

/// A killed, Poisson-inspected walk together with its running maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectedWalk {
    /// Inspection epochs `U_1 < ... < U_N`.
    pub epochs: Vec<f64>,
    /// Observed values `S_0 = 0, S_1, ..., S_N`.
    pub values: Vec<f64>,
    pub count: usize,
    pub max_value: f64,
    /// Largest index attaining `max_value`.
    pub argmax_index: usize,
    /// `U_{argmax_index}`, with `U_0 = 0`.
    pub argmax_epoch: f64,
    /// The killing time.
    pub horizon: f64,
}

impl InspectedWalk {
    /// Builds the walk from epochs and values (with `values[0] = 0`).
    pub fn from_parts(epochs: Vec<f64>, values: Vec<f64>, horizon: f64) -> Self {
        debug_assert_eq!(values.len(), epochs.len() + 1);
        let (argmax_index, max_value) = last_argmax(&values);
        let argmax_epoch = if argmax_index == 0 { 0.0 } else { epochs[argmax_index - 1] };
        Self {
            count: epochs.len(),
            epochs,
            values,
            max_value,
            argmax_index,
            argmax_epoch,
            horizon,
        }
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.count]
    }

    /// `U_N` (0 for an empty walk).
    pub fn last_epoch(&self) -> f64 {
        self.epochs.last().copied().unwrap_or(0.0)
    }

    /// Running minimum `min_k S_k` (at most 0).
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::min)
    }

    pub fn check_invariants(&self) -> bool {
        let strictly_increasing = self.epochs.windows(2).all(|w| w[0] < w[1]);
        let later_below = self.values[self.argmax_index + 1..].iter().all(|&v| v < self.max_value);
        self.count == self.epochs.len()
            && self.values.len() == self.count + 1
            && self.values[0] == 0.0
            && self.max_value >= 0.0
            && self.values[self.argmax_index] == self.max_value
            && later_below
            && strictly_increasing
            && self.terminal() - self.max_value <= 0.0
    }
}

/// Largest index attaining the maximum, and the maximum.
pub fn last_argmax(values: &[f64]) -> (usize, f64) {
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0;
    for (i, &v) in values.iter().enumerate() {
        if v >= best {
            best = v;
            idx = i;
        }
    }
    (idx, best)
}

/// The alternative last-record definition `max{k : S_k = max_{j<=k} S_j}`.
pub fn last_record_index(values: &[f64]) -> usize {
    let mut running = f64::NEG_INFINITY;
    let mut idx = 0;
    for (i, &v) in values.iter().enumerate() {
        if v >= running {
            running = v;
            idx = i;
        }
    }
    idx
}

pub fn sample_inspection_count<R: Rng + ?Sized>(params: &InspectionParams, rng: &mut R) -> u64 {
    Geometric::new(params.q())
        .expect("q in (0, 1)")
        .sample(rng)
}

/// Competing-risks construction of the inspected walk.
pub fn sample_inspected_walk<R: Rng + ?Sized>(
    model: &LevyModel,
    params: &InspectionParams,
    rng: &mut R,
) -> Result<InspectedWalk> {
    params.validate()?;
    let total = params.beta + params.omega;
    let p_inspect = params.omega / total;
    let mut epochs = Vec::new();
    let mut values = vec![0.0];
    let mut t = 0.0;
    let mut s = 0.0;
    loop {
        let tau = exp_draw(total, rng);
        t += tau;
        if rng.gen::<f64>() >= p_inspect {
            break;
        }
        s += sample_increment(model, tau, rng);
        epochs.push(t);
        values.push(s);
    }
    Ok(InspectedWalk::from_parts(epochs, values, t))
}

/// Direct construction: `T ~ exp(beta)`, Poisson(`omega`) epochs on `[0, T]`,
/// and the path itself simulated on `[0, T]` and read at those epochs.
pub fn sample_inspected_walk_direct<R: Rng + ?Sized>(
    model: &LevyModel,
    params: &InspectionParams,
    rng: &mut R,
) -> Result<InspectedWalk> {
    params.validate()?;
    let horizon = exp_draw(params.beta, rng);
    let mut epochs = Vec::new();
    let mut t = exp_draw(params.omega, rng);
    while t < horizon {
        epochs.push(t);
        t += exp_draw(params.omega, rng);
    }
    let mut values = Vec::with_capacity(epochs.len() + 1);
    values.push(0.0);
    if model.is_piecewise_linear() {
        // full jump path on [0, horizon], then read it at the epochs
        let sign = model.jump_sign();
        let mut jump_t = if model.jump_rate > 0.0 && sign != 0.0 {
            exp_draw(model.jump_rate, rng)
        } else {
            f64::INFINITY
        };
        let mut jump_sum = 0.0;
        for &u in &epochs {
            while jump_t <= u {
                jump_sum += sign * jump_size(model, rng);
                jump_t += exp_draw(model.jump_rate, rng);
            }
            values.push(model.drift * u + jump_sum);
        }
    } else {
        let mut prev = 0.0;
        let mut s = 0.0;
        for &u in &epochs {
            s += sample_increment(model, u - prev, rng);
            prev = u;
            values.push(s);
        }
    }
    Ok(InspectedWalk::from_parts(epochs, values, horizon))
}

/// `(S_N - max S, U_N - G_N)`: the post-maximum pair, independent of
/// `(max S, G_N)`.
pub fn duality_pair(walk: &InspectedWalk) -> (f64, f64) {
    (walk.terminal() - walk.max_value, walk.last_epoch() - walk.argmax_epoch)
}

/// Two-sample agreement of the competing-risks and direct constructions:
/// KS on the maximum and chi-square homogeneity on the inspection count.
/// The combined p-value is the smaller of the two.
pub fn alternative_construction_check(
    model: &LevyModel,
    params: &InspectionParams,
    n: usize,
    stream: RngStream,
) -> Result<TestReport> {
    if n < 10_000 {
        return Err(Error::InvalidParameter(format!("need n >= 1e4, got {n}")));
    }
    let a = stream
        .labelled("competing")
        .try_par_map(n, |r| sample_inspected_walk(model, params, r))?;
    let b = stream
        .labelled("direct")
        .try_par_map(n, |r| sample_inspected_walk_direct(model, params, r))?;
    construction_report(&a, &b, stream.seed)
}

pub(crate) fn construction_report(a: &[InspectedWalk], b: &[InspectedWalk], seed: u64) -> Result<TestReport> {
    let ma = EmpiricalSample::new(a.iter().map(|w| w.max_value).collect())?;
    let mb = EmpiricalSample::new(b.iter().map(|w| w.max_value).collect())?;
    let ks = stats::ks_two_sample(&ma, &mb)?;
    let ca: Vec<u64> = a.iter().map(|w| w.count as u64).collect();
    let cb: Vec<u64> = b.iter().map(|w| w.count as u64).collect();
    let chi = stats::chi_square_homogeneity(&ca, &cb, 5)?;
    let p = ks.p_value.min(chi.p_value);
    Ok(TestReport::new(
        "construction_agreement",
        ks.statistic,
        p,
        stats::DEFAULT_LEVEL,
        a.len(),
        b.len(),
        seed,
    ))
}
