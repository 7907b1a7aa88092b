//! Lindley-type recursions and their solutions.
//!
//! Deterministic engines (classical, killed, two-dimensional, the `z`
//! recursion) come with the closed forms they must match pathwise; the
//! stochastic side provides the geometric-horizon fixed point
//! `W ~ I (W + X)^+`, `I ~ Bernoulli(1 - p)`, whose unique solution is the
//! maximum of a random walk stopped after `N` steps, `N + 1 ~ Geometric(p)`.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// State of the two-dimensional recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoDimState {
    pub w: f64,
    pub w_prime: f64,
}

/// Closed form of the two-dimensional recursion on the reversed input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LastMax {
    /// `max_{k <= n} s_k`.
    pub m: f64,
    /// Last index attaining `m`.
    pub k: usize,
    /// `s'_k`.
    pub m_prime: f64,
}

/// `w_0 = 0`, `w_n = (w_{n-1} + x_n)^+`; returns `w_1..w_n`.
pub fn lindley_run(x: &[f64]) -> Vec<f64> {
    let mut w = 0.0_f64;
    x.iter()
        .map(|&xi| {
            w = (w + xi).max(0.0);
            w
        })
        .collect()
}

/// `s_n - min_{k <= n} s_k` with `s_0 = 0`. `n = 0` gives 0.
pub fn lindley_closed_form(x: &[f64], n: usize) -> Result<f64> {
    if n > x.len() {
        return Err(Error::IndexOutOfRange { index: n, len: x.len() });
    }
    let mut s = 0.0_f64;
    let mut min = 0.0_f64;
    for &xi in &x[..n] {
        s += xi;
        min = min.min(s);
    }
    Ok(s - min)
}

/// `W_n = flag_n (W_{n-1} + x_n)^+`.
pub fn killed_lindley_run(x: &[f64], flags: &[bool]) -> Result<Vec<f64>> {
    if x.len() != flags.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: flags.len(),
        });
    }
    let mut w = 0.0_f64;
    Ok(x.iter()
        .zip(flags)
        .map(|(&xi, &keep)| {
            w = if keep { (w + xi).max(0.0) } else { 0.0 };
            w
        })
        .collect())
}

fn check_second(xp: &[f64]) -> Result<()> {
    match xp.iter().position(|&v| !(v >= 0.0)) {
        Some(index) => Err(Error::NegativeSecondCoordinate {
            index,
            value: xp[index],
        }),
        None => Ok(()),
    }
}

/// `w_n = (w_{n-1} + x_n)^+`, `w'_n = (w'_{n-1} + x'_n) 1{w_{n-1} + x_n >= 0}`.
pub fn two_dim_run(x: &[f64], xp: &[f64]) -> Result<Vec<TwoDimState>> {
    if x.len() != xp.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: xp.len(),
        });
    }
    check_second(xp)?;
    let mut st = TwoDimState { w: 0.0, w_prime: 0.0 };
    Ok(x.iter()
        .zip(xp)
        .map(|(&a, &b)| {
            let pre = st.w + a;
            st = if pre >= 0.0 {
                TwoDimState {
                    w: pre,
                    w_prime: st.w_prime + b,
                }
            } else {
                TwoDimState { w: 0.0, w_prime: 0.0 }
            };
            st
        })
        .collect())
}

/// Maximum of the partial sums over `0..=n`, its last index, and the
/// second-coordinate partial sum at that index.
pub fn two_dim_closed_form(x: &[f64], xp: &[f64], n: usize) -> Result<LastMax> {
    if x.len() != xp.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: xp.len(),
        });
    }
    if n > x.len() {
        return Err(Error::IndexOutOfRange { index: n, len: x.len() });
    }
    check_second(xp)?;
    let (mut s, mut sp) = (0.0_f64, 0.0_f64);
    let mut out = LastMax { m: 0.0, k: 0, m_prime: 0.0 };
    for i in 0..n {
        s += x[i];
        sp += xp[i];
        if s >= out.m {
            out = LastMax { m: s, k: i + 1, m_prime: sp };
        }
    }
    Ok(out)
}

/// `z_1 = u_1`, `z_{n+1} = u_{n+1} + (z_n - v_n)^+`; returns `z_1..z_{len(u)}`.
///
/// Needs `len(v) >= len(u) - 1`; extra entries of `v` are ignored.
pub fn z_recursion_run(u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    for (index, &value) in u.iter().chain(v).enumerate() {
        if !(value >= 0.0) {
            return Err(Error::NegativeInput { index, value });
        }
    }
    if u.is_empty() {
        return Ok(Vec::new());
    }
    if v.len() + 1 < u.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let mut z = u[0];
    let mut out = Vec::with_capacity(u.len());
    out.push(z);
    for i in 1..u.len() {
        z = u[i] + (z - v[i - 1]).max(0.0);
        out.push(z);
    }
    Ok(out)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(())
}

/// Draws `max_{k <= N} S_k` with `P(N = n) = p (1 - p)^n` and i.i.d.
/// increments from `increment`.
pub fn fixed_point_sample<R, F>(p: f64, mut increment: F, rng: &mut R) -> Result<f64>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> f64,
{
    check_p(p)?;
    let n = Geometric::new(p).expect("p in (0, 1)").sample(rng);
    let mut s = 0.0_f64;
    let mut best = 0.0_f64;
    for _ in 0..n {
        s += increment(rng);
        best = best.max(s);
    }
    Ok(best)
}

/// Runs `W_n = I_n (W_{n-1} + X_n)^+` from `W_0 = 0` with i.i.d.
/// `I_n ~ Bernoulli(1 - p)` for `steps` steps and returns `W_steps`.
pub fn killed_chain_endpoint<R, F>(p: f64, steps: usize, mut increment: F, rng: &mut R) -> Result<f64>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> f64,
{
    check_p(p)?;
    let mut w = 0.0_f64;
    for _ in 0..steps {
        let x = increment(rng);
        w = if rng.gen::<f64>() < 1.0 - p { (w + x).max(0.0) } else { 0.0 };
    }
    Ok(w)
}

/// Burn-in used for convergence runs: ten mean regeneration cycles.
pub fn burn_in_steps(p: f64) -> usize {
    (10.0 / p).ceil() as usize
}

/// Tail mass below which a pmf vector is considered complete.
pub const PMF_TAIL_TOL: f64 = 1e-12;

/// Equilibrium (size-biased tail) law `P(N_e = n) = P(N >= n) / (E N + 1)`
/// for a finite pmf vector `pmf[n] = P(N = n)`.
pub fn size_biased_pmf(pmf: &[f64]) -> Result<Vec<f64>> {
    if pmf.is_empty() || pmf.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("pmf entries must be finite and nonnegative".into()));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("pmf sums to {total}")));
    }
    let mean: f64 = pmf.iter().enumerate().map(|(n, &v)| n as f64 * v).sum();
    if !mean.is_finite() {
        return Err(Error::InfiniteMean);
    }
    // P(N >= n), accumulated from the tail to avoid cancellation
    let mut tail = vec![0.0; pmf.len()];
    let mut acc = 0.0;
    for n in (0..pmf.len()).rev() {
        acc += pmf[n];
        tail[n] = acc;
    }
    let norm = mean + 1.0;
    Ok(tail.into_iter().map(|t| t / norm).collect())
}

/// `P(N = n) = p (1 - p)^n`, truncated once the remaining tail is below
/// [`PMF_TAIL_TOL`]; the residual tail is folded into the last cell.
pub fn geometric_pmf(p: f64) -> Result<Vec<f64>> {
    check_p(p)?;
    let mut out = Vec::new();
    let mut tail = 1.0_f64;
    let mut term = p;
    while tail > PMF_TAIL_TOL {
        out.push(term);
        tail -= term;
        term *= 1.0 - p;
        if out.len() > 50_000_000 {
            break;
        }
    }
    if let Some(last) = out.last_mut() {
        *last += tail.max(0.0);
    }
    Ok(out)
}
