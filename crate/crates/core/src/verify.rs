//! Named verification scenarios.
//!
//! Each scenario draws its samples from streams derived from its own seed,
//! runs one or more tests, and runs a negative control that must reject.
//! A [`ScenarioReport`] passes when every test and tolerance check passes
//! and every control rejects.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inspection::{self, sample_inspected_walk, InspectedWalk, InspectionParams};
use crate::levy::{LevyModel, ModelKind, Side};
use crate::lindley;
use crate::path::{exp_draw, jump_size, sample_continuous_pair, sample_increment};
use crate::rng::{RngStream, StreamRng};
use crate::stats::{self, EmpiricalSample, PairedSample, TestReport};
use crate::transforms;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Pathwise,
    TransformIdentity,
    Frullani,
    Moments,
    SnMarginal,
    Theorem1,
    Theorem2,
    FixedPoint,
    Cascade,
    GeometricPmf,
    GeometricSum,
    Parisian,
    Construction,
    Duality,
    Calibration,
}

impl CheckKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckKind::Pathwise => "pathwise",
            CheckKind::TransformIdentity => "transform_identity",
            CheckKind::Frullani => "frullani",
            CheckKind::Moments => "moments",
            CheckKind::SnMarginal => "sn_marginal",
            CheckKind::Theorem1 => "theorem1",
            CheckKind::Theorem2 => "theorem2",
            CheckKind::FixedPoint => "fixed_point",
            CheckKind::Cascade => "cascade",
            CheckKind::GeometricPmf => "geometric_pmf",
            CheckKind::GeometricSum => "geometric_sum",
            CheckKind::Parisian => "parisian",
            CheckKind::Construction => "construction",
            CheckKind::Duality => "duality",
            CheckKind::Calibration => "calibration",
        }
    }

    /// Whether the check is a Monte Carlo test (and so needs `sample_size >= 1000`).
    pub fn is_statistical(&self) -> bool {
        !matches!(self, CheckKind::Pathwise | CheckKind::TransformIdentity | CheckKind::Frullani)
    }
}

fn default_model() -> LevyModel {
    LevyModel::compound_poisson_up(2.0, 1.0, 1.0)
}

fn default_params() -> InspectionParams {
    InspectionParams { beta: 1.0, omega: 1.0 }
}

/// A named, seeded verification experiment.
///
/// `extras` holds check-specific knobs (cascade `factor`, `truncation`,
/// `permutations`, ...); absent keys take the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub check: CheckKind,
    #[serde(default = "default_model")]
    pub model: LevyModel,
    #[serde(default = "default_params")]
    pub params: InspectionParams,
    #[serde(default)]
    pub sample_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
}

impl Scenario {
    pub fn new(name: &str, check: CheckKind, model: LevyModel, params: InspectionParams, sample_size: usize, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            check,
            model,
            params,
            sample_size,
            seed,
            extras: BTreeMap::new(),
        }
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    pub fn extra(&self, key: &str, default: f64) -> f64 {
        self.extras.get(key).copied().unwrap_or(default)
    }

    fn extra_count(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.extra(key, default as f64);
        if !(v >= 0.0 && v.fract() == 0.0 && v < 1e12) {
            return Err(Error::InvalidParameter(format!("{key} must be a nonnegative integer, got {v}")));
        }
        Ok(v as usize)
    }

    pub fn stream(&self) -> RngStream {
        RngStream::new(self.seed, 0).labelled(self.check.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("scenario name must be nonempty".into()));
        }
        if self.check.is_statistical() && self.sample_size < 1000 {
            return Err(Error::Config(format!(
                "scenario {}: sample_size must be >= 1000, got {}",
                self.name, self.sample_size
            )));
        }
        self.model.validate()?;
        self.params.validate()
    }
}

/// A value that must lie in `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceCheck {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

impl ToleranceCheck {
    pub fn within(name: &str, observed: f64, expected: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            observed,
            expected,
            lower,
            upper,
            pass: observed >= lower && observed <= upper,
        }
    }

    /// `|observed - expected| <= k * se`.
    pub fn standard_errors(name: &str, observed: f64, expected: f64, se: f64, k: f64) -> Self {
        Self::within(name, observed, expected, expected - k * se, expected + k * se)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Test(TestReport),
    Tolerance(ToleranceCheck),
}

/// A deliberately wrong hypothesis; `rejected` must be true.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlReport {
    pub name: String,
    pub evidence: Evidence,
    pub rejected: bool,
}

impl ControlReport {
    pub fn test(report: TestReport) -> Self {
        Self {
            name: report.test_name.clone(),
            rejected: !report.pass,
            evidence: Evidence::Test(report),
        }
    }

    pub fn tolerance(check: ToleranceCheck) -> Self {
        Self {
            name: check.name.clone(),
            rejected: !check.pass,
            evidence: Evidence::Tolerance(check),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub check: CheckKind,
    pub seed: u64,
    pub sample_size: usize,
    pub tests: Vec<TestReport>,
    pub tolerances: Vec<ToleranceCheck>,
    pub controls: Vec<ControlReport>,
    pub pass: bool,
}

impl ScenarioReport {
    fn new(scn: &Scenario) -> Self {
        Self {
            name: scn.name.clone(),
            check: scn.check,
            seed: scn.seed,
            sample_size: scn.sample_size,
            tests: Vec::new(),
            tolerances: Vec::new(),
            controls: Vec::new(),
            pass: false,
        }
    }

    fn test(mut self, report: TestReport) -> Self {
        self.tests.push(report);
        self
    }

    fn tolerance(mut self, check: ToleranceCheck) -> Self {
        self.tolerances.push(check);
        self
    }

    fn control(mut self, control: ControlReport) -> Self {
        self.controls.push(control);
        self
    }

    fn finish(mut self) -> Self {
        self.pass = self.tests.iter().all(|t| t.pass)
            && self.tolerances.iter().all(|t| t.pass)
            && self.controls.iter().all(|c| c.rejected);
        self
    }
}

fn sample(values: Vec<f64>) -> Result<EmpiricalSample> {
    EmpiricalSample::new(values)
}

fn ks(name: &str, a: Vec<f64>, b: Vec<f64>, seed: u64) -> Result<TestReport> {
    Ok(stats::ks_two_sample(&sample(a)?, &sample(b)?)?.named(name).with_seed(seed))
}

fn continuous_max(model: &LevyModel, beta: f64, rng: &mut StreamRng) -> Result<f64> {
    Ok(sample_continuous_pair(model, beta, rng)?.max_value)
}

fn require_piecewise_linear(model: &LevyModel) -> Result<()> {
    if model.is_piecewise_linear() {
        Ok(())
    } else {
        Err(Error::InvalidModel("check needs a piecewise-linear model for an exact argmax".into()))
    }
}

/// Deterministic identities on `n` random integer-valued sequences: Lindley
/// recursion vs its closed form, the `z` recursion vs Lindley, and the 2D
/// recursion vs the last maximum of the reversed input. Integer inputs make
/// every partial sum exact, so agreement is checked with `==`.
pub fn verify_pathwise(scn: &Scenario) -> Result<ScenarioReport> {
    let max_len = scn.extra_count("max_length", 40)?.max(1);
    let counts = scn.stream().try_par_map(scn.sample_size, |r| -> Result<[u64; 3]> {
        let len = r.gen_range(1..=max_len);
        let x: Vec<f64> = (0..len).map(|_| r.gen_range(-5i32..=5) as f64).collect();
        let xp: Vec<f64> = (0..len).map(|_| r.gen_range(0i32..=4) as f64).collect();
        let u: Vec<f64> = (0..len).map(|_| r.gen_range(0i32..=6) as f64).collect();
        let v: Vec<f64> = (0..len).map(|_| r.gen_range(0i32..=6) as f64).collect();
        let mut bad = [0u64; 3];

        let w = lindley::lindley_run(&x);
        for n in 1..=len {
            if w[n - 1] != lindley::lindley_closed_form(&x, n)? {
                bad[0] += 1;
            }
        }

        let z = lindley::z_recursion_run(&u, &v)?;
        let diffs: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let lw = lindley::lindley_run(&diffs);
        for n in 1..len {
            if z[n] - u[n] != lw[n - 1] {
                bad[1] += 1;
            }
        }

        let states = lindley::two_dim_run(&x, &xp)?;
        for n in 1..=len {
            let rx: Vec<f64> = x[..n].iter().rev().copied().collect();
            let rxp: Vec<f64> = xp[..n].iter().rev().copied().collect();
            let lm = lindley::two_dim_closed_form(&rx, &rxp, n)?;
            if states[n - 1].w != lm.m || states[n - 1].w_prime != lm.m_prime {
                bad[2] += 1;
            }
        }
        Ok(bad)
    })?;
    let mut totals = [0u64; 3];
    for c in &counts {
        for i in 0..3 {
            totals[i] += c[i];
        }
    }
    let names = ["lindley_closed_form_mismatches", "z_recursion_mismatches", "two_dim_reversal_mismatches"];
    let mut report = ScenarioReport::new(scn);
    for (name, &t) in names.iter().zip(&totals) {
        report = report.tolerance(ToleranceCheck::within(name, t as f64, 0.0, 0.0, 0.0));
    }
    Ok(report.finish())
}

const TRANSFORM_GRID: [f64; 5] = [0.0, 0.3, 1.0, 2.5, 7.0];

fn factorization_error(model: &LevyModel, side: Side, beta: f64, omega: f64, inspected_omega: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &a in &TRANSFORM_GRID {
        for &g in &TRANSFORM_GRID {
            let lhs = transforms::joint_lst_continuous(model, side, beta, a, g)?;
            let rhs = transforms::joint_lst_continuous(model, side, beta + omega, a, g)?
                * transforms::joint_lst_inspected(model, side, beta, inspected_omega, a, g)?;
            worst = worst.max((lhs - rhs).abs() / lhs.abs());
        }
    }
    Ok(worst)
}

/// `E[e^{-a max - g G}]` at `beta` equals the product of the same transform at
/// `beta + omega` and the inspected transform, on a 5 x 5 grid.
pub fn verify_transform_identity(scn: &Scenario) -> Result<ScenarioReport> {
    let side = scn.model.natural_side();
    let (b, w) = (scn.params.beta, scn.params.omega);
    let tol = scn.extra("tolerance", 1e-10);
    let err = factorization_error(&scn.model, side, b, w, w)?;
    let wrong = factorization_error(&scn.model, side, b, w, 2.0 * w)?;
    Ok(ScenarioReport::new(scn)
        .tolerance(ToleranceCheck::within("factorization_max_rel_error", err, 0.0, 0.0, tol))
        .control(ControlReport::tolerance(ToleranceCheck::within(
            "factorization_with_doubled_omega",
            wrong,
            0.0,
            0.0,
            tol,
        )))
        .finish())
}

pub const FRULLANI_CASES: [(f64, f64); 3] = [(1.0, 1.0), (0.1, 10.0), (2.0, 0.5)];

pub fn verify_frullani(scn: &Scenario) -> Result<ScenarioReport> {
    let tol = scn.extra("tolerance", 1e-8);
    let mut report = ScenarioReport::new(scn);
    for (b, w) in FRULLANI_CASES {
        let (quad, closed) = transforms::frullani_check(b, w)?;
        report = report.tolerance(ToleranceCheck::within(
            &format!("frullani_beta{b}_omega{w}"),
            quad,
            closed,
            closed - tol,
            closed + tol,
        ));
    }
    let (quad, _) = transforms::frullani_check(1.0, 1.0)?;
    let wrong = 1.0_f64.ln_1p() / 2.0;
    Ok(report
        .control(ControlReport::tolerance(ToleranceCheck::within(
            "frullani_vs_halved_log",
            quad,
            wrong,
            wrong - tol,
            wrong + tol,
        )))
        .finish())
}

fn se_of(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Empirical moments of `(max S, G_N)` with standard errors, in the order
/// mean_max, mean_argmax, cross_moment, covariance, var_max, var_argmax.
pub fn empirical_moments(walks: &[InspectedWalk]) -> [(f64, f64); 6] {
    let m: Vec<f64> = walks.iter().map(|w| w.max_value).collect();
    let g: Vec<f64> = walks.iter().map(|w| w.argmax_epoch).collect();
    let (mm, mse) = se_of(&m);
    let (gm, gse) = se_of(&g);
    let cross: Vec<f64> = m.iter().zip(&g).map(|(a, b)| a * b).collect();
    let cov: Vec<f64> = m.iter().zip(&g).map(|(a, b)| (a - mm) * (b - gm)).collect();
    let vm: Vec<f64> = m.iter().map(|a| (a - mm) * (a - mm)).collect();
    let vg: Vec<f64> = g.iter().map(|b| (b - gm) * (b - gm)).collect();
    [(mm, mse), (gm, gse), se_of(&cross), se_of(&cov), se_of(&vm), se_of(&vg)]
}

/// All six moments of `(max S, G_N)` from simulated inspected walks against
/// the closed forms, each within `k_se` (default 4) standard errors.
pub fn verify_moments(scn: &Scenario) -> Result<ScenarioReport> {
    let side = scn.model.natural_side();
    let (b, w) = (scn.params.beta, scn.params.omega);
    let k = scn.extra("k_se", 4.0);
    let theory = transforms::moments_inspected(&scn.model, side, b, w)?;
    let walks = scn
        .stream()
        .try_par_map(scn.sample_size, |r| sample_inspected_walk(&scn.model, &scn.params, r))?;
    let emp = empirical_moments(&walks);
    let expected = [
        ("mean_max", theory.mean_max),
        ("mean_argmax", theory.mean_argmax),
        ("cross_moment", theory.cross_moment),
        ("covariance", theory.covariance),
        ("var_max", theory.var_max),
        ("var_argmax", theory.var_argmax),
    ];
    let mut report = ScenarioReport::new(scn);
    for ((name, th), (obs, se)) in expected.iter().zip(emp.iter()) {
        report = report.tolerance(ToleranceCheck::standard_errors(name, *obs, *th, *se, k));
    }
    let continuous = transforms::mean_max_continuous(&scn.model, side, b)?;
    report = report.control(ControlReport::tolerance(ToleranceCheck::standard_errors(
        "mean_max_vs_continuous_observation",
        emp[0].0,
        continuous,
        emp[0].1,
        k,
    )));
    if side == Side::Sp {
        report = report.control(ControlReport::tolerance(ToleranceCheck::standard_errors(
            "cross_moment_vs_printed_display",
            emp[2].0,
            theory.cross_moment_as_printed,
            emp[2].1,
            k,
        )));
    }
    Ok(report.finish())
}

/// The inspected maximum of an SN model: an atom at zero of mass
/// `Psi(beta) / Psi(beta + omega)` and an exp(`Psi(beta)`) positive part.
pub fn verify_sn_marginal(scn: &Scenario) -> Result<ScenarioReport> {
    if !scn.model.supports(Side::Sn) {
        return Err(Error::UnsupportedSidedness(Side::Sn));
    }
    let (b, w) = (scn.params.beta, scn.params.omega);
    let atom = transforms::atom_at_zero_sn(&scn.model, b, w)?;
    let rate = scn.model.right_inverse(Side::Sn, b)?;
    let wrong_rate = scn.model.right_inverse(Side::Sn, b + w)?;
    let maxima = scn.stream().try_par_map(scn.sample_size, |r| {
        sample_inspected_walk(&scn.model, &scn.params, r).map(|w| w.max_value)
    })?;
    let n = maxima.len() as f64;
    let zeros = maxima.iter().filter(|&&m| m == 0.0).count() as f64;
    let se = (atom * (1.0 - atom) / n).sqrt();
    let positive: Vec<f64> = maxima.into_iter().filter(|&m| m > 0.0).collect();
    let positive = sample(positive)?;
    let test = stats::ks_one_sample(&positive, |x| -(-rate * x).exp_m1())?
        .named("positive_part_vs_exponential")
        .with_seed(scn.seed);
    let control = stats::ks_one_sample(&positive, |x| -(-wrong_rate * x).exp_m1())?
        .named("positive_part_vs_wrong_rate")
        .with_seed(scn.seed);
    Ok(ScenarioReport::new(scn)
        .tolerance(ToleranceCheck::standard_errors("atom_frequency", zeros / n, atom, se, 3.0))
        .test(test)
        .control(ControlReport::test(control))
        .finish())
}

/// `max Y(T_beta) ~ max Y(T_{beta + omega}) + max S` with independent addends.
pub fn verify_theorem1(scn: &Scenario) -> Result<ScenarioReport> {
    let (m, p) = (&scn.model, &scn.params);
    let (b, w) = (p.beta, p.omega);
    let st = scn.stream();
    let n = scn.sample_size;
    let lhs = st.labelled("lhs").try_par_map(n, |r| continuous_max(m, b, r))?;
    let fast = st.labelled("rhs_continuous").try_par_map(n, |r| continuous_max(m, b + w, r))?;
    let inspected = st
        .labelled("rhs_inspected")
        .try_par_map(n, |r| sample_inspected_walk(m, p, r).map(|w| w.max_value))?;
    let slow = st.labelled("control").try_par_map(n, |r| continuous_max(m, b, r))?;
    let rhs: Vec<f64> = fast.iter().zip(&inspected).map(|(a, c)| a + c).collect();
    let wrong: Vec<f64> = slow.iter().zip(&inspected).map(|(a, c)| a + c).collect();
    Ok(ScenarioReport::new(scn)
        .test(ks("theorem1_ks", lhs.clone(), rhs, scn.seed)?)
        .control(ControlReport::test(ks("theorem1_slow_first_addend", lhs, wrong, scn.seed)?))
        .finish())
}

/// `(max Y(T_beta), G(T_beta)) ~ (max Y(T_{beta+omega}), G(T_{beta+omega})) + (max S, G_N)`
/// with independent pairs, by an energy permutation test.
pub fn verify_theorem2(scn: &Scenario) -> Result<ScenarioReport> {
    require_piecewise_linear(&scn.model)?;
    let (m, p) = (&scn.model, &scn.params);
    let (b, w) = (p.beta, p.omega);
    let st = scn.stream();
    let n = scn.sample_size;
    let perms = scn.extra_count("permutations", 200)?;
    let pair = |e: crate::path::PathExtrema| [e.max_value, e.argmax_time];
    let lhs = st.labelled("lhs").try_par_map(n, |r| sample_continuous_pair(m, b, r).map(pair))?;
    let fast = st
        .labelled("rhs_continuous")
        .try_par_map(n, |r| sample_continuous_pair(m, b + w, r).map(pair))?;
    let inspected = st
        .labelled("rhs_inspected")
        .try_par_map(n, |r| sample_inspected_walk(m, p, r).map(|w| [w.max_value, w.argmax_epoch]))?;
    let rhs: Vec<[f64; 2]> = fast
        .iter()
        .zip(&inspected)
        .map(|(a, c)| [a[0] + c[0], a[1] + c[1]])
        .collect();
    // G of the next pair: same marginals, broken dependence
    let swapped: Vec<[f64; 2]> = (0..n).map(|i| [rhs[i][0], rhs[(i + 1) % n][1]]).collect();
    let lhs = PairedSample::new(lhs)?;
    let test = stats::energy_permutation_2d(&lhs, &PairedSample::new(rhs)?, perms, st.labelled("perm"))?
        .named("theorem2_energy");
    let control = stats::energy_permutation_2d(&lhs, &PairedSample::new(swapped)?, perms, st.labelled("perm_control"))?
        .named("theorem2_swapped_argmax");
    Ok(ScenarioReport::new(scn).test(test).control(ControlReport::test(control)).finish())
}

/// The killed chain `W_n = I_n (W_{n-1} + X_n)^+` after burn-in against the
/// geometric maximum, and `Z ~ U + I (Z - V)^+` for `Z = U + W`,
/// `X = U - V`.
///
/// The kill probability is `q = beta / (beta + omega)` and `X ~ Y(T_{beta+omega})`,
/// so the stationary law is that of the inspected maximum. Extras: `u_rate`
/// (default 1), `v_rate` (default 1.5).
pub fn verify_fixed_point(scn: &Scenario) -> Result<ScenarioReport> {
    let p = scn.params.q();
    let total = scn.params.beta + scn.params.omega;
    let model = &scn.model;
    let n = scn.sample_size;
    let st = scn.stream();
    let steps = lindley::burn_in_steps(p);
    let increment = |r: &mut StreamRng| sample_increment(model, exp_draw(total, r), r);
    let chain = st
        .labelled("chain")
        .try_par_map(n, |r| lindley::killed_chain_endpoint(p, steps, increment, r))?;
    let direct = st
        .labelled("direct")
        .try_par_map(n, |r| lindley::fixed_point_sample(p, increment, r))?;
    let slow = st
        .labelled("control")
        .try_par_map(n, |r| lindley::fixed_point_sample(p / 2.0, increment, r))?;

    let (ur, vr) = (scn.extra("u_rate", 1.0), scn.extra("v_rate", 1.5));
    if !(ur > 0.0 && vr > 0.0) {
        return Err(Error::InvalidRate(ur.min(vr)));
    }
    let z = st.labelled("z").try_par_map(n, |r| {
        let w = lindley::fixed_point_sample(p, |r: &mut StreamRng| exp_draw(ur, r) - exp_draw(vr, r), r)?;
        Ok::<_, Error>(exp_draw(ur, r) + w)
    })?;
    let half = n / 2;
    let (za, zb) = z.split_at(half);
    let mut rng = st.labelled("z_rhs").generator();
    let mut built = Vec::with_capacity(half);
    let mut unkilled = Vec::with_capacity(half);
    for &zv in za {
        let u = exp_draw(ur, &mut rng);
        let v = exp_draw(vr, &mut rng);
        let keep = rng.gen::<f64>() < 1.0 - p;
        let reflected = (zv - v).max(0.0);
        built.push(u + if keep { reflected } else { 0.0 });
        unkilled.push(u + reflected);
    }
    let zb = zb[..half].to_vec();
    Ok(ScenarioReport::new(scn)
        .test(ks("killed_chain_vs_geometric_max", chain.clone(), direct, scn.seed)?)
        .test(ks("z_equation_resampled", built, zb.clone(), scn.seed)?)
        .control(ControlReport::test(ks("killed_chain_vs_halved_kill", chain, slow, scn.seed)?))
        .control(ControlReport::test(ks("z_equation_without_kill", unkilled, zb, scn.seed)?))
        .finish())
}

fn cascade_draw(model: &LevyModel, beta: f64, factor: f64, terms: usize, rng: &mut StreamRng) -> f64 {
    let geo = Geometric::new(1.0 / factor).expect("factor > 1");
    let mut total = 0.0;
    let mut rate = beta;
    for _ in 0..terms {
        rate *= factor;
        let k = geo.sample(rng);
        let (mut s, mut best) = (0.0_f64, 0.0_f64);
        for _ in 0..k {
            s += sample_increment(model, exp_draw(rate, rng), rng);
            best = best.max(s);
        }
        total += best;
    }
    total
}

/// Mean of the last retained cascade term relative to `E max Y(T_beta)`.
pub fn cascade_truncation_ratio(model: &LevyModel, beta: f64, factor: f64, terms: usize) -> Result<f64> {
    if !(factor > 1.0) {
        return Err(Error::InvalidParameter(format!("cascade factor must exceed 1, got {factor}")));
    }
    if terms == 0 {
        return Err(Error::InvalidParameter("cascade needs at least one term".into()));
    }
    let side = model.natural_side();
    let total = transforms::mean_max_continuous(model, side, beta)?;
    let before = transforms::mean_max_continuous(model, side, beta * factor.powi(terms as i32 - 1))?;
    let after = transforms::mean_max_continuous(model, side, beta * factor.powi(terms as i32))?;
    Ok((before - after) / total)
}

/// Samples the truncated cascade `sum_{n <= M} R_n` with kill rates
/// `beta c^n`, after checking the truncation guard.
pub fn sample_cascade(
    model: &LevyModel,
    beta: f64,
    factor: f64,
    terms: usize,
    n: usize,
    stream: RngStream,
) -> Result<Vec<f64>> {
    let ratio = cascade_truncation_ratio(model, beta, factor, terms)?;
    if ratio > 1e-3 {
        return Err(Error::TruncationTooCoarse { ratio });
    }
    Ok(stream.par_map(n, |r| cascade_draw(model, beta, factor, terms, r)))
}

/// Truncated cascade against direct `max Y(T_beta)` draws, and against the
/// cascade with a different factor. Extras: `factor` (2), `truncation` (20),
/// `alt_factor` (4).
pub fn verify_cascade(scn: &Scenario) -> Result<ScenarioReport> {
    let (m, b) = (&scn.model, scn.params.beta);
    let c = scn.extra("factor", 2.0);
    let alt = scn.extra("alt_factor", 4.0);
    let terms = scn.extra_count("truncation", 20)?;
    let n = scn.sample_size;
    let st = scn.stream();
    let cascade = sample_cascade(m, b, c, terms, n, st.labelled("cascade"))?;
    let alt_terms = (terms as f64 * c.ln() / alt.ln()).ceil() as usize;
    let other = sample_cascade(m, b, alt, alt_terms, n, st.labelled("alt_cascade"))?;
    let direct = st.labelled("direct").try_par_map(n, |r| continuous_max(m, b, r))?;
    let short = st.labelled("control").par_map(n, |r| cascade_draw(m, b, c, 2, r));
    Ok(ScenarioReport::new(scn)
        .test(ks("cascade_vs_direct", cascade.clone(), direct.clone(), scn.seed)?)
        .test(ks("cascade_factor_invariance", cascade, other, scn.seed)?)
        .control(ControlReport::test(ks("two_term_cascade_vs_direct", short, direct, scn.seed)?))
        .finish())
}

/// Inspection counts (Poisson epochs before an exponential kill) against the
/// geometric pmf with `q = beta / (beta + omega)`.
pub fn verify_geometric_pmf(scn: &Scenario) -> Result<ScenarioReport> {
    let p = scn.params;
    let counts = scn.stream().par_map(scn.sample_size, |r| {
        let horizon = exp_draw(p.beta, r);
        let mut t = exp_draw(p.omega, r);
        let mut k = 0u64;
        while t < horizon {
            k += 1;
            t += exp_draw(p.omega, r);
        }
        k
    });
    let table = stats::tabulate(&counts);
    let test = stats::chi_square_pmf(&table, &lindley::geometric_pmf(p.q())?, 5)?
        .named("inspection_count_pmf")
        .with_seed(scn.seed);
    let control = stats::chi_square_pmf(&table, &lindley::geometric_pmf(p.q() / 2.0)?, 5)?
        .named("inspection_count_vs_halved_q")
        .with_seed(scn.seed);
    Ok(ScenarioReport::new(scn).test(test).control(ControlReport::test(control)).finish())
}

/// Draws `sum_{i <= N+1} tau_i` with `tau ~ G(p)` and `N + 1 ~ G(p')`, both on `{1, 2, ...}`.
pub fn geometric_sum_draw<R: Rng + ?Sized>(p: f64, p_prime: f64, rng: &mut R) -> u64 {
    let tau = Geometric::new(p).expect("p in (0, 1]");
    let terms = Geometric::new(p_prime).expect("p' in (0, 1]").sample(rng) + 1;
    (0..terms).map(|_| tau.sample(rng) + 1).sum()
}

/// `sum_{i <= N+1} tau_i ~ G(p p')`. Extras: `p` (0.5), `p_prime` (0.5).
pub fn verify_geometric_sum(scn: &Scenario) -> Result<ScenarioReport> {
    let (p, pp) = (scn.extra("p", 0.5), scn.extra("p_prime", 0.5));
    for v in [p, pp] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidProbability(v));
        }
    }
    let draws = scn.stream().par_map(scn.sample_size, |r| geometric_sum_draw(p, pp, r) - 1);
    let report = ScenarioReport::new(scn);
    if p * pp == 1.0 {
        let ones = draws.iter().filter(|&&d| d == 0).count() as f64;
        return Ok(report
            .tolerance(ToleranceCheck::within("degenerate_sum_is_one", ones, draws.len() as f64, draws.len() as f64, draws.len() as f64))
            .finish());
    }
    let table = stats::tabulate(&draws);
    let test = stats::chi_square_pmf(&table, &lindley::geometric_pmf(p * pp)?, 5)?
        .named("geometric_sum_pmf")
        .with_seed(scn.seed);
    let mut report = report.test(test);
    if p < 1.0 {
        let control = stats::chi_square_pmf(&table, &lindley::geometric_pmf(p)?, 5)?
            .named("geometric_sum_vs_single_term_law")
            .with_seed(scn.seed);
        report = report.control(ControlReport::test(control));
    }
    Ok(report.finish())
}

/// Outcome of one risk-process path for the Parisian comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParisianDraw {
    /// Parisian ruin time, if before the horizon.
    pub parisian: Option<f64>,
    /// Classical ruin time (first entrance of `Y` into `(0, inf)`), if before the horizon.
    pub classical: Option<f64>,
}

fn check_risk_model(model: &LevyModel) -> Result<()> {
    if model.kind != ModelKind::CompoundPoissonDriftUp || !model.is_piecewise_linear() {
        return Err(Error::InvalidModel("Parisian check needs an upward-jump compound Poisson model".into()));
    }
    Ok(())
}

/// Parisian ruin of the surplus `-Y` from zero capital: each excursion of `Y`
/// above 0 gets a fresh exp(`omega`) clock, and ruin happens when an
/// excursion outlasts its clock. Paths stop at the exp(`horizon_rate`)
/// horizon or once `Y < -escape`.
pub fn sample_parisian<R: Rng + ?Sized>(
    model: &LevyModel,
    omega: f64,
    horizon_rate: f64,
    escape: f64,
    rng: &mut R,
) -> ParisianDraw {
    let horizon = exp_draw(horizon_rate, rng);
    let slope = -model.drift;
    let mut out = ParisianDraw { parisian: None, classical: None };
    let (mut t, mut y) = (0.0_f64, 0.0_f64);
    while t <= horizon && y >= -escape {
        let dt = exp_draw(model.jump_rate, rng);
        t += dt;
        y += model.drift * dt + jump_size(model, rng);
        if y <= 0.0 || t > horizon {
            continue;
        }
        let start = t;
        if out.classical.is_none() {
            out.classical = Some(start);
        }
        let clock = exp_draw(omega, rng);
        // run the excursion to its end
        loop {
            let dt = exp_draw(model.jump_rate, rng);
            if y / slope <= dt {
                t += y / slope;
                y = 0.0;
                break;
            }
            t += dt;
            y += model.drift * dt + jump_size(model, rng);
        }
        if t - start > clock {
            let ruin = start + clock;
            if ruin <= horizon {
                out.parisian = Some(ruin);
            }
            return out;
        }
    }
    out
}

/// First Poisson(`omega`) inspection epoch at which `Y > 0`, on the same
/// horizon and escape rules as [`sample_parisian`].
pub fn sample_bankruptcy<R: Rng + ?Sized>(
    model: &LevyModel,
    omega: f64,
    horizon_rate: f64,
    escape: f64,
    rng: &mut R,
) -> Option<f64> {
    let horizon = exp_draw(horizon_rate, rng);
    let (mut t, mut y) = (0.0_f64, 0.0_f64);
    let mut next_jump = exp_draw(model.jump_rate, rng);
    let mut next_look = exp_draw(omega, rng);
    loop {
        if next_look < next_jump {
            if next_look > horizon {
                return None;
            }
            let value = y + model.drift * (next_look - t);
            if value > 0.0 {
                return Some(next_look);
            }
            next_look += exp_draw(omega, rng);
        } else {
            if next_jump > horizon {
                return None;
            }
            y += model.drift * (next_jump - t) + jump_size(model, rng);
            t = next_jump;
            if y < -escape {
                return None;
            }
            next_jump += exp_draw(model.jump_rate, rng);
        }
    }
}

/// Parisian ruin with exp(`omega`) delays against Poisson(`omega`)
/// bankruptcy, from zero capital. Extras: `horizon_rate` (1e-3) and
/// `escape_level` (60); the model's `params.omega` is the clock rate.
pub fn verify_parisian(scn: &Scenario) -> Result<ScenarioReport> {
    check_risk_model(&scn.model)?;
    let omega = scn.params.omega;
    let horizon_rate = scn.extra("horizon_rate", 1e-3);
    let escape = scn.extra("escape_level", 60.0);
    if !(horizon_rate > 0.0) {
        return Err(Error::InvalidRate(horizon_rate));
    }
    let st = scn.stream();
    let n = scn.sample_size;
    let a = st
        .labelled("parisian")
        .par_map(n, |r| sample_parisian(&scn.model, omega, horizon_rate, escape, r));
    let b = st
        .labelled("bankruptcy")
        .par_map(n, |r| sample_bankruptcy(&scn.model, omega, horizon_rate, escape, r));
    let ta: Vec<f64> = a.iter().filter_map(|d| d.parisian).collect();
    let tc: Vec<f64> = a.iter().filter_map(|d| d.classical).collect();
    let tb: Vec<f64> = b.iter().flatten().copied().collect();
    let (fa, fb) = (ta.len() as f64 / n as f64, tb.len() as f64 / n as f64);
    let se = ((fa * (1.0 - fa) + fb * (1.0 - fb)) / n as f64).sqrt();
    let report = ScenarioReport::new(scn).tolerance(ToleranceCheck::standard_errors(
        "occurrence_frequency_difference",
        fa - fb,
        0.0,
        se,
        3.0,
    ));
    if ta.is_empty() && tb.is_empty() {
        // nothing happens before the horizon on either side
        return Ok(report.finish());
    }
    Ok(report
        .test(ks("parisian_vs_bankruptcy_times", ta.clone(), tb, scn.seed)?)
        .control(ControlReport::test(ks("parisian_vs_classical_ruin_times", ta, tc, scn.seed)?))
        .finish())
}

/// Competing-risks and direct constructions of the inspected walk agree.
pub fn verify_construction(scn: &Scenario) -> Result<ScenarioReport> {
    let st = scn.stream();
    let n = scn.sample_size;
    let test = inspection::alternative_construction_check(&scn.model, &scn.params, n, st)?;
    let faster = InspectionParams::new(scn.params.beta, 2.0 * scn.params.omega)?;
    let a = st.labelled("competing").try_par_map(n, |r| sample_inspected_walk(&scn.model, &scn.params, r))?;
    let b = st.labelled("control").try_par_map(n, |r| sample_inspected_walk(&scn.model, &faster, r))?;
    let control = inspection::construction_report(&a, &b, scn.seed)?.named("construction_vs_doubled_omega");
    Ok(ScenarioReport::new(scn).test(test).control(ControlReport::test(control)).finish())
}

/// `(max S, G_N)` is independent of `(S_N - max S, U_N - G_N)`, and
/// `S_N - max S` has the law of the minimum of an independent walk.
/// Extras: `permutations` (200).
pub fn verify_duality(scn: &Scenario) -> Result<ScenarioReport> {
    let st = scn.stream();
    let n = scn.sample_size;
    let perms = scn.extra_count("permutations", 200)?;
    let walks = st.labelled("walks").try_par_map(n, |r| sample_inspected_walk(&scn.model, &scn.params, r))?;
    let others = st.labelled("minima").try_par_map(n, |r| sample_inspected_walk(&scn.model, &scn.params, r))?;
    let pre: Vec<Vec<f64>> = walks.iter().map(|w| vec![w.max_value, w.argmax_epoch]).collect();
    let post: Vec<Vec<f64>> = walks
        .iter()
        .map(|w| {
            let (d, e) = inspection::duality_pair(w);
            vec![d, e]
        })
        .collect();
    let ends: Vec<Vec<f64>> = walks.iter().map(|w| vec![w.terminal(), w.last_epoch()]).collect();
    let indep = stats::distance_covariance_independence(&pre, &post, perms, st.labelled("perm"))?
        .named("pre_post_maximum_independence");
    let control = stats::distance_covariance_independence(&pre, &ends, perms, st.labelled("perm_control"))?
        .named("maximum_vs_endpoint_independence");
    let drops: Vec<f64> = post.iter().map(|v| v[0]).collect();
    let minima: Vec<f64> = others.iter().map(|w| w.min_value()).collect();
    Ok(ScenarioReport::new(scn)
        .test(indep)
        .test(ks("post_maximum_drop_vs_minimum", drops, minima, scn.seed)?)
        .control(ControlReport::test(control))
        .finish())
}

const CALIBRATION_LEVEL: f64 = 0.05;

fn null_p_values(name: &str, reps: usize, stream: RngStream) -> Result<Vec<f64>> {
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let sub = stream.labelled(name).substream(i as u64);
            let mut r = sub.generator();
            let exp = |r: &mut StreamRng| exp_draw(1.0, r);
            let rep = match name {
                "ks_two_sample" => {
                    let a: Vec<f64> = (0..500).map(|_| exp(&mut r)).collect();
                    let b: Vec<f64> = (0..500).map(|_| exp(&mut r)).collect();
                    stats::ks_two_sample(&sample(a)?, &sample(b)?)?
                }
                "ks_one_sample" => {
                    let a: Vec<f64> = (0..500).map(|_| exp(&mut r)).collect();
                    stats::ks_one_sample(&sample(a)?, |x| -(-x).exp_m1())?
                }
                "chi_square_pmf" => {
                    let geo = Geometric::new(0.3).expect("valid p");
                    let d: Vec<u64> = (0..1000).map(|_| geo.sample(&mut r)).collect();
                    stats::chi_square_pmf(&stats::tabulate(&d), &lindley::geometric_pmf(0.3)?, 5)?
                }
                "chi_square_homogeneity" => {
                    let geo = Geometric::new(0.3).expect("valid p");
                    let a: Vec<u64> = (0..1000).map(|_| geo.sample(&mut r)).collect();
                    let b: Vec<u64> = (0..1000).map(|_| geo.sample(&mut r)).collect();
                    stats::chi_square_homogeneity(&a, &b, 5)?
                }
                "energy_permutation_2d" => {
                    // atom at the origin plus a dependent continuous part
                    let cloud = |r: &mut StreamRng| -> Result<PairedSample> {
                        PairedSample::new(
                            (0..200)
                                .map(|_| {
                                    let x = (exp(r) - 0.5).max(0.0);
                                    [x, x * r.gen::<f64>()]
                                })
                                .collect(),
                        )
                    };
                    let (a, b) = (cloud(&mut r)?, cloud(&mut r)?);
                    stats::energy_permutation_2d(&a, &b, 100, sub.labelled("perm"))?
                }
                "distance_covariance" => {
                    let x: Vec<Vec<f64>> = (0..100).map(|_| vec![exp(&mut r), r.gen::<f64>()]).collect();
                    let y: Vec<Vec<f64>> = (0..100).map(|_| vec![exp(&mut r)]).collect();
                    stats::distance_covariance_independence(&x, &y, 100, sub.labelled("perm"))?
                }
                other => return Err(Error::InvalidParameter(format!("unknown calibration test {other}"))),
            };
            Ok(rep.p_value)
        })
        .collect()
}

pub const CALIBRATED_TESTS: [&str; 6] = [
    "ks_two_sample",
    "ks_one_sample",
    "chi_square_pmf",
    "chi_square_homogeneity",
    "energy_permutation_2d",
    "distance_covariance",
];

/// Null rejection rate at level 0.05 of every test over `replications`
/// (default 200) independent runs must lie in `[0.01, 0.12]`.
pub fn verify_calibration(scn: &Scenario) -> Result<ScenarioReport> {
    let reps = scn.extra_count("replications", 200)?;
    if reps == 0 {
        return Err(Error::InvalidParameter("replications must be positive".into()));
    }
    let mut report = ScenarioReport::new(scn);
    for name in CALIBRATED_TESTS {
        let ps = null_p_values(name, reps, scn.stream())?;
        let rate = ps.iter().filter(|&&p| p <= CALIBRATION_LEVEL).count() as f64 / reps as f64;
        report = report.tolerance(ToleranceCheck::within(
            &format!("{name}_null_rejection_rate"),
            rate,
            CALIBRATION_LEVEL,
            0.01,
            0.12,
        ));
    }
    Ok(report.finish())
}

pub fn run_scenario(scn: &Scenario) -> Result<ScenarioReport> {
    scn.validate()?;
    match scn.check {
        CheckKind::Pathwise => verify_pathwise(scn),
        CheckKind::TransformIdentity => verify_transform_identity(scn),
        CheckKind::Frullani => verify_frullani(scn),
        CheckKind::Moments => verify_moments(scn),
        CheckKind::SnMarginal => verify_sn_marginal(scn),
        CheckKind::Theorem1 => verify_theorem1(scn),
        CheckKind::Theorem2 => verify_theorem2(scn),
        CheckKind::FixedPoint => verify_fixed_point(scn),
        CheckKind::Cascade => verify_cascade(scn),
        CheckKind::GeometricPmf => verify_geometric_pmf(scn),
        CheckKind::GeometricSum => verify_geometric_sum(scn),
        CheckKind::Parisian => verify_parisian(scn),
        CheckKind::Construction => verify_construction(scn),
        CheckKind::Duality => verify_duality(scn),
        CheckKind::Calibration => verify_calibration(scn),
    }
}

/// Runs scenarios in parallel; the reports come back sorted by name.
pub fn run_suite(scenarios: &[Scenario]) -> Result<Vec<ScenarioReport>> {
    let mut names = BTreeSet::new();
    for s in scenarios {
        s.validate()?;
        if !names.insert(s.name.as_str()) {
            return Err(Error::Config(format!("duplicate scenario name {}", s.name)));
        }
    }
    let mut reports = scenarios.par_iter().map(run_scenario).collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(reports)
}

/// The acceptance scenarios, all seeded with `seed`.
pub fn acceptance_suite(seed: u64) -> Vec<Scenario> {
    let cl = LevyModel::compound_poisson_up(2.0, 1.0, 1.0);
    let bm = LevyModel::brownian(-1.0, 1.0);
    let unit = InspectionParams { beta: 1.0, omega: 1.0 };
    let half = InspectionParams { beta: 0.5, omega: 1.0 };
    let s = |name: &str, check, model: &LevyModel, params, n| Scenario::new(name, check, *model, params, n, seed);
    vec![
        s("01_pathwise_identities", CheckKind::Pathwise, &cl, unit, 10_000),
        s("02_transform_identity_sp", CheckKind::TransformIdentity, &cl, unit, 0),
        s("02_transform_identity_sn", CheckKind::TransformIdentity, &bm, unit, 0),
        s("03_frullani", CheckKind::Frullani, &cl, unit, 0),
        s("04_moments_sp", CheckKind::Moments, &cl, unit, 1_000_000),
        s("04_moments_sn", CheckKind::Moments, &bm, unit, 1_000_000),
        s("05_sn_atom_and_tail", CheckKind::SnMarginal, &bm, unit, 1_000_000),
        s("06_theorem1", CheckKind::Theorem1, &cl, half, 100_000),
        s("07_theorem2", CheckKind::Theorem2, &cl, half, 20_000).with_extra("permutations", 200.0),
        s("08_fixed_point", CheckKind::FixedPoint, &cl, unit, 100_000),
        s("09_cascade", CheckKind::Cascade, &cl, half, 100_000)
            .with_extra("factor", 2.0)
            .with_extra("truncation", 20.0)
            .with_extra("alt_factor", 4.0),
        s("10_geometric_pmf", CheckKind::GeometricPmf, &cl, unit, 1_000_000),
        s("10_geometric_sum", CheckKind::GeometricSum, &cl, unit, 1_000_000)
            .with_extra("p", 0.5)
            .with_extra("p_prime", 0.5),
        s("11_parisian", CheckKind::Parisian, &cl, unit, 100_000)
            .with_extra("horizon_rate", 1e-3)
            .with_extra("escape_level", 60.0),
        s("12_calibration", CheckKind::Calibration, &cl, unit, 1000).with_extra("replications", 200.0),
        s("construction_agreement", CheckKind::Construction, &cl, half, 20_000),
        s("duality_independence", CheckKind::Duality, &cl, half, 2_000).with_extra("permutations", 200.0),
    ]
}

/// Fixed-width table of scenario outcomes.
pub fn summary_table(reports: &[ScenarioReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<32} {:<20} {:>6} {:>12}  result", "scenario", "check", "items", "min p");
    for r in reports {
        let min_p = r.tests.iter().map(|t| t.p_value).fold(f64::INFINITY, f64::min);
        let min_p = if min_p.is_finite() { format!("{min_p:.4}") } else { "-".into() };
        let items = r.tests.len() + r.tolerances.len() + r.controls.len();
        let _ = writeln!(
            out,
            "{:<32} {:<20} {:>6} {:>12}  {}",
            r.name,
            r.check.as_str(),
            items,
            min_p,
            if r.pass { "PASS" } else { "FAIL" }
        );
        for t in r.tests.iter().filter(|t| !t.pass) {
            let _ = writeln!(out, "    test {} p={:.3e}", t.test_name, t.p_value);
        }
        for t in r.tolerances.iter().filter(|t| !t.pass) {
            let _ = writeln!(out, "    tolerance {} observed={} bounds=[{}, {}]", t.name, t.observed, t.lower, t.upper);
        }
        for c in r.controls.iter().filter(|c| !c.rejected) {
            let _ = writeln!(out, "    control {} not rejected", c.name);
        }
    }
    out
}
