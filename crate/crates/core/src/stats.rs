//! Tests for equality in law and independence.
//!
//! - Kolmogorov–Smirnov (one- and two-sample, asymptotic p-values),
//! - chi-square goodness of fit against a pmf, and two-sample homogeneity,
//! - an energy-distance permutation test for paired (2D) samples,
//! - a distance-covariance permutation test for independence.
//!
//! KS p-values use the asymptotic Kolmogorov law; with atoms (ties) they are
//! conservative. The 2D energy statistic uses the Euclidean norm written as an
//! angular average of absolute projections, `|v| = 1/2 * int_0^pi |<v, e_t>| dt`,
//! evaluated with a midpoint rule over [`ENERGY_DIRECTIONS`] angles. Each
//! direction is then a 1D problem solvable in linear time after sorting, which
//! keeps permutation tests on tens of thousands of points cheap.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Significance level used throughout: a test passes when `p > 0.01`.
pub const DEFAULT_LEVEL: f64 = 0.01;

/// Number of angles in the projection quadrature of the energy statistic.
pub const ENERGY_DIRECTIONS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test_name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub n1: usize,
    pub n2: usize,
    pub seed: u64,
}

impl TestReport {
    pub fn new(name: &str, statistic: f64, p_value: f64, threshold: f64, n1: usize, n2: usize, seed: u64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            test_name: name.to_string(),
            statistic,
            p_value,
            threshold,
            pass: p_value > threshold,
            n1,
            n2,
            seed,
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.test_name = name.to_string();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A nonempty 1D sample with a sorted copy.
#[derive(Debug, Clone)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("sample contains NaN".into()));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { values, sorted })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of observations `<= x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance (0 for a single observation).
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.len() as f64).sqrt()
    }

    pub fn median(&self) -> f64 {
        median_sorted(&self.sorted)
    }
}

/// A nonempty 2D sample.
#[derive(Debug, Clone)]
pub struct PairedSample {
    points: Vec<[f64; 2]>,
}

impl PairedSample {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("paired sample contains non-finite values".into()));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }
}

fn median_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Robust scale: median absolute deviation, falling back to the mean
/// absolute deviation about the median (atom-heavy data), then to 1.
pub fn robust_scale(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let med = median_sorted(&s);
    let mut dev: Vec<f64> = s.iter().map(|v| (v - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let mad = median_sorted(&dev);
    if mad > 0.0 {
        return mad;
    }
    let mean_dev = dev.iter().sum::<f64>() / dev.len() as f64;
    if mean_dev > 0.0 {
        mean_dev
    } else {
        1.0
    }
}

/// Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small lambda
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=20 {
            let odd = (2 * k - 1) as f64;
            s += (c * odd * odd).exp();
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let en = effective_n.sqrt();
    kolmogorov_sf((en + 0.12 + 0.11 / en) * d)
}

/// Two-sided two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &EmpiricalSample, b: &EmpiricalSample) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (xa, xb) = (a.sorted(), b.sorted());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let p = ks_p_value(d, na * nb / (na + nb));
    Ok(TestReport::new("ks_two_sample", d, p, DEFAULT_LEVEL, xa.len(), xb.len(), 0))
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(a: &EmpiricalSample, cdf: F) -> Result<TestReport> {
    let xs = a.sorted();
    let n = xs.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let p = ks_p_value(d, n);
    Ok(TestReport::new("ks_one_sample", d, p, DEFAULT_LEVEL, xs.len(), 0, 0))
}

fn chi_square_sf(stat: f64, df: usize) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).map(|c| c.sf(stat)).unwrap_or(0.0)
}

/// Groups consecutive cells until each group's weight reaches `min`; a light
/// remainder is folded into the last group. Returns group boundaries.
fn merge_cells(weights: &[f64], min: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if acc >= min {
            groups.push(start..i + 1);
            start = i + 1;
            acc = 0.0;
        }
    }
    if start < weights.len() {
        match groups.last_mut() {
            Some(last) => last.end = weights.len(),
            None => groups.push(0..weights.len()),
        }
    }
    groups
}

/// Chi-square goodness of fit of category counts (`observed[k]` = number of
/// draws equal to `k`) against `expected_pmf`. Observed categories beyond the
/// pmf are pooled into its last cell. Cells with expected count below
/// `tail_merge_min` are merged with their neighbours.
pub fn chi_square_pmf(observed: &[u64], expected_pmf: &[f64], tail_merge_min: usize) -> Result<TestReport> {
    let total_p: f64 = expected_pmf.iter().sum();
    if (total_p - 1.0).abs() > 1e-9 || expected_pmf.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::InvalidParameter(format!("expected pmf sums to {total_p}")));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let k = expected_pmf.len();
    let mut obs = vec![0u64; k];
    for (i, &c) in observed.iter().enumerate() {
        obs[i.min(k - 1)] += c;
    }
    let expected: Vec<f64> = expected_pmf.iter().map(|p| p * n as f64).collect();
    let groups = merge_cells(&expected, tail_merge_min as f64);
    if groups.len() < 2 {
        return Err(Error::DegenerateCells(groups.len()));
    }
    let mut stat = 0.0;
    for g in &groups {
        let e: f64 = expected[g.clone()].iter().sum();
        let o: f64 = obs[g.clone()].iter().sum::<u64>() as f64;
        if e > 0.0 {
            stat += (o - e) * (o - e) / e;
        } else if o > 0.0 {
            stat = f64::INFINITY;
        }
    }
    let p = chi_square_sf(stat, groups.len() - 1);
    Ok(TestReport::new("chi_square_pmf", stat, p, DEFAULT_LEVEL, n as usize, 0, 0))
}

/// Turns raw integer observations into category counts.
pub fn tabulate(draws: &[u64]) -> Vec<u64> {
    let max = draws.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; max + 1];
    for &d in draws {
        counts[d as usize] += 1;
    }
    counts
}

/// Two-sample chi-square homogeneity test on integer-valued observations.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], min_expected: usize) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (ta, tb) = (tabulate(a), tabulate(b));
    let k = ta.len().max(tb.len());
    let get = |t: &[u64], i: usize| t.get(i).copied().unwrap_or(0) as f64;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let total = na + nb;
    // merge on the smaller expected count of the two rows
    let weights: Vec<f64> = (0..k)
        .map(|i| (get(&ta, i) + get(&tb, i)) * na.min(nb) / total)
        .collect();
    let groups = merge_cells(&weights, min_expected as f64);
    if groups.len() < 2 {
        // a single common cell: the two samples agree trivially
        return Ok(TestReport::new("chi_square_homogeneity", 0.0, 1.0, DEFAULT_LEVEL, a.len(), b.len(), 0));
    }
    let mut stat = 0.0;
    for g in &groups {
        let oa: f64 = g.clone().map(|i| get(&ta, i)).sum();
        let ob: f64 = g.clone().map(|i| get(&tb, i)).sum();
        let col = oa + ob;
        let (ea, eb) = (col * na / total, col * nb / total);
        stat += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    }
    let p = chi_square_sf(stat, groups.len() - 1);
    Ok(TestReport::new("chi_square_homogeneity", stat, p, DEFAULT_LEVEL, a.len(), b.len(), 0))
}

fn permutation_p(observed: f64, perm_stats: &[f64]) -> f64 {
    // relative slack so that exact ties under floating-point reordering count
    let tol = 1e-12 * observed.abs().max(1e-300);
    let exceed = perm_stats.iter().filter(|&&s| s >= observed - tol).count();
    (1 + exceed) as f64 / (perm_stats.len() + 1) as f64
}

/// Projections of standardised points on `ENERGY_DIRECTIONS` angles, each
/// sorted, with the original index kept alongside.
struct Projections {
    /// per direction: (value, original index), sorted by value
    dirs: Vec<Vec<(f64, u32)>>,
}

impl Projections {
    fn new(points: &[[f64; 2]]) -> Self {
        let sx = robust_scale(&points.iter().map(|p| p[0]).collect::<Vec<_>>());
        let sy = robust_scale(&points.iter().map(|p| p[1]).collect::<Vec<_>>());
        let dirs = (0..ENERGY_DIRECTIONS)
            .into_par_iter()
            .map(|k| {
                let t = (k as f64 + 0.5) * std::f64::consts::PI / ENERGY_DIRECTIONS as f64;
                let (c, s) = (t.cos(), t.sin());
                let mut v: Vec<(f64, u32)> = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (c * p[0] / sx + s * p[1] / sy, i as u32))
                    .collect();
                v.sort_by(|a, b| a.0.total_cmp(&b.0));
                v
            })
            .collect();
        Self { dirs }
    }

    /// Energy statistic for the labelling `in_a[i]`, with `na` points in A.
    fn energy(&self, in_a: &[bool], na: usize) -> f64 {
        let nb = in_a.len() - na;
        let mut within_a = 0.0;
        let mut within_b = 0.0;
        let mut total = 0.0;
        for dir in &self.dirs {
            let (mut ca, mut sa, mut cb, mut sb) = (0.0, 0.0, 0.0, 0.0);
            let (mut c_all, mut s_all) = (0.0, 0.0);
            let (mut wa, mut wb, mut wt) = (0.0, 0.0, 0.0);
            for &(z, i) in dir {
                wt += z * c_all - s_all;
                c_all += 1.0;
                s_all += z;
                if in_a[i as usize] {
                    wa += z * ca - sa;
                    ca += 1.0;
                    sa += z;
                } else {
                    wb += z * cb - sb;
                    cb += 1.0;
                    sb += z;
                }
            }
            within_a += wa;
            within_b += wb;
            total += wt;
        }
        // |v| = (pi / (2K)) * sum_k |<v, e_k>|
        let scale = std::f64::consts::PI / (2.0 * ENERGY_DIRECTIONS as f64);
        let (within_a, within_b, total) = (within_a * scale, within_b * scale, total * scale);
        let between = total - within_a - within_b;
        let (na, nb) = (na as f64, nb as f64);
        2.0 * between / (na * nb) - 2.0 * within_a / (na * na) - 2.0 * within_b / (nb * nb)
    }
}

/// Energy-distance permutation test between two 2D samples.
///
/// Coordinates are standardised by the pooled robust scale. The p-value is
/// `(1 + #{perm >= observed}) / (permutations + 1)`.
pub fn energy_permutation_2d(
    a: &PairedSample,
    b: &PairedSample,
    permutations: usize,
    stream: RngStream,
) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if permutations < 100 {
        return Err(Error::InvalidParameter(format!("need >= 100 permutations, got {permutations}")));
    }
    let pooled: Vec<[f64; 2]> = a.points().iter().chain(b.points()).copied().collect();
    let proj = Projections::new(&pooled);
    let na = a.len();
    let labels: Vec<bool> = (0..pooled.len()).map(|i| i < na).collect();
    let observed = proj.energy(&labels, na);
    let perm_stats: Vec<f64> = (0..permutations)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.substream(k as u64).generator();
            let mut l = labels.clone();
            l.shuffle(&mut rng);
            proj.energy(&l, na)
        })
        .collect();
    let p = permutation_p(observed, &perm_stats);
    Ok(TestReport::new("energy_permutation_2d", observed, p, DEFAULT_LEVEL, na, b.len(), stream.seed))
}

fn standardised_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = rows[0].len();
    let scales: Vec<f64> = (0..dim)
        .map(|d| robust_scale(&rows.iter().map(|r| r[d]).collect::<Vec<_>>()))
        .collect();
    rows.iter()
        .map(|r| r.iter().zip(&scales).map(|(v, s)| v / s).collect())
        .collect()
}

/// Double-centred Euclidean distance matrix, row-major.
fn centred_distances(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[i * n + j] = dist;
            d[j * n + i] = dist;
        }
    }
    let row_means: Vec<f64> = (0..n).map(|i| d[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] += grand - row_means[i] - row_means[j];
        }
    }
    d
}

/// Distance-covariance permutation test of independence between row vectors
/// `x[i]` and `y[i]`. Memory is quadratic in `n`; keep `n` in the low
/// thousands.
pub fn distance_covariance_independence(
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    permutations: usize,
    stream: RngStream,
) -> Result<TestReport> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if permutations < 100 {
        return Err(Error::InvalidParameter(format!("need >= 100 permutations, got {permutations}")));
    }
    let n = x.len();
    let a = centred_distances(&standardised_rows(x));
    let b = centred_distances(&standardised_rows(y));
    let dcov = |perm: &[usize]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            let ra = &a[i * n..(i + 1) * n];
            let rb = &b[perm[i] * n..(perm[i] + 1) * n];
            for j in 0..n {
                s += ra[j] * rb[perm[j]];
            }
        }
        s / (n * n) as f64
    };
    let identity: Vec<usize> = (0..n).collect();
    let observed = dcov(&identity);
    let perm_stats: Vec<f64> = (0..permutations)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.substream(k as u64).generator();
            let mut p = identity.clone();
            p.shuffle(&mut rng);
            dcov(&p)
        })
        .collect();
    let p = if observed.abs() < 1e-300 && perm_stats.iter().all(|s| s.abs() < 1e-300) {
        1.0
    } else {
        permutation_p(observed, &perm_stats)
    };
    Ok(TestReport::new("distance_covariance", observed, p, DEFAULT_LEVEL, n, n, stream.seed))
}
