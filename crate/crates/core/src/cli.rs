//! Command-line front end.
//!
//! Every run resolves its configuration (config file first, flags on top),
//! computes all outputs in memory, and only then writes `report.json`,
//! `run_meta.json` and any `samples_*.csv` to the output directory. A
//! configuration error therefore leaves no files behind.
//!
//! Exit codes: 0 when every scenario passes, 1 when one fails or a run
//! errors, 2 on a configuration error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::inspection::{sample_inspected_walk, InspectionParams};
use crate::levy::LevyModel;
use crate::lindley;
use crate::path::{exp_draw, sample_continuous_pair, sample_increment};
use crate::rng::{RngStream, StreamRng};
use crate::transforms;
use crate::verify::{self, CheckKind, Scenario, ScenarioReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const DEFAULT_SEED: u64 = 42;
const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Verify,
    Moments,
    Lindley,
    Transforms,
    Calibrate,
}

/// A preset name (`sp_cl`, `sn_bm`) or a full model object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Preset(String),
    Model(LevyModel),
}

impl ModelSpec {
    pub fn resolve(&self) -> Result<LevyModel> {
        let model = match self {
            ModelSpec::Preset(name) => preset(name)?,
            ModelSpec::Model(m) => *m,
        };
        model.validate()?;
        Ok(model)
    }
}

/// `sp_cl`: upward-jump compound Poisson with premium 2, rate 1, unit-mean
/// jumps. `sn_bm`: Brownian motion with drift -1 and unit volatility.
pub fn preset(name: &str) -> Result<LevyModel> {
    match name {
        "sp_cl" => Ok(LevyModel::compound_poisson_up(2.0, 1.0, 1.0)),
        "sn_bm" => Ok(LevyModel::brownian(-1.0, 1.0)),
        other => Err(Error::Config(format!("unknown model preset {other:?} (expected sp_cl or sn_bm)"))),
    }
}

fn parse_model(text: &str) -> std::result::Result<ModelSpec, String> {
    if text.trim_start().starts_with('{') {
        LevyModel::from_json(text).map(ModelSpec::Model).map_err(|e| e.to_string())
    } else {
        Ok(ModelSpec::Preset(text.to_string()))
    }
}

/// The configuration document. Every field is optional; command-line flags
/// override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub model: Option<ModelSpec>,
    pub beta: Option<f64>,
    pub omega: Option<f64>,
    pub sample_size: Option<usize>,
    pub suite: Option<String>,
    /// Scenario objects; a missing `seed` takes the run seed.
    pub scenarios: Option<Vec<Value>>,
    pub alpha: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub p: Option<f64>,
    pub sequence: Option<Vec<f64>>,
    pub replications: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))
    }
}

#[derive(Debug, Parser)]
#[command(name = "inspected-levy", version, about = "Simulate and verify maxima of Poisson-inspected Levy processes")]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<CliCommand>,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// Preset (sp_cl, sn_bm) or an inline JSON model.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelSpec>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Sample continuous and inspected maxima and dump them as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(short = 'n', long = "sample-size")]
        sample_size: Option<usize>,
    },
    /// Run a scenario suite (`acceptance`) or the scenarios of the config.
    Verify {
        #[arg(long)]
        suite: Option<String>,
    },
    /// Closed-form moments of the inspected maximum and its epoch.
    Moments {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Lindley recursions: a given sequence, or the pathwise and fixed-point checks.
    Lindley {
        /// Kill probability of the fixed-point chain.
        #[arg(long)]
        p: Option<f64>,
        #[arg(short = 'n', long = "sample-size")]
        sample_size: Option<usize>,
        /// Comma-separated increments to run through the recursion.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        sequence: Option<Vec<f64>>,
    },
    /// Joint transforms on an (alpha, gamma) grid and the Frullani check.
    Transforms {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
    },
    /// Null rejection rates of the statistical tests.
    Calibrate {
        #[arg(long)]
        replications: Option<usize>,
    },
}

/// Fully resolved run parameters. `threads` and `output_dir` are excluded
/// from the config hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub command: Command,
    pub seed: u64,
    #[serde(skip)]
    pub threads: usize,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub model: LevyModel,
    pub params: InspectionParams,
    pub sample_size: usize,
    pub scenarios: Vec<Scenario>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub p: f64,
    pub sequence: Option<Vec<f64>>,
    pub replications: usize,
}

impl Resolved {
    pub fn config_hash(&self) -> String {
        let text = serde_json::to_string(self).expect("serializable");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

fn merge_model(cfg: &mut RunConfig, m: ModelArgs) {
    if m.model.is_some() {
        cfg.model = m.model;
    }
    if m.beta.is_some() {
        cfg.beta = m.beta;
    }
    if m.omega.is_some() {
        cfg.omega = m.omega;
    }
}

/// Applies the flags of `cli` on top of `cfg`.
pub fn merge(mut cfg: RunConfig, cli: Cli) -> RunConfig {
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cli.out.is_some() {
        cfg.output_dir = cli.out;
    }
    let Some(command) = cli.command else {
        return cfg;
    };
    match command {
        CliCommand::Simulate { model, sample_size } => {
            cfg.command = Some(Command::Simulate);
            merge_model(&mut cfg, model);
            cfg.sample_size = sample_size.or(cfg.sample_size);
        }
        CliCommand::Verify { suite } => {
            cfg.command = Some(Command::Verify);
            cfg.suite = suite.or(cfg.suite);
        }
        CliCommand::Moments { model } => {
            cfg.command = Some(Command::Moments);
            merge_model(&mut cfg, model);
        }
        CliCommand::Lindley { p, sample_size, sequence } => {
            cfg.command = Some(Command::Lindley);
            cfg.p = p.or(cfg.p);
            cfg.sample_size = sample_size.or(cfg.sample_size);
            cfg.sequence = sequence.or(cfg.sequence);
        }
        CliCommand::Transforms { model, alpha, gamma } => {
            cfg.command = Some(Command::Transforms);
            merge_model(&mut cfg, model);
            cfg.alpha = alpha.or(cfg.alpha);
            cfg.gamma = gamma.or(cfg.gamma);
        }
        CliCommand::Calibrate { replications } => {
            cfg.command = Some(Command::Calibrate);
            cfg.replications = replications.or(cfg.replications);
        }
    }
    cfg
}

fn resolve_scenarios(cfg: &RunConfig, seed: u64) -> Result<Vec<Scenario>> {
    if let Some(list) = &cfg.scenarios {
        if cfg.suite.is_some() {
            return Err(Error::Config("give either suite or scenarios, not both".into()));
        }
        return list
            .iter()
            .map(|v| {
                let mut v = v.clone();
                if let Value::Object(map) = &mut v {
                    map.entry("seed").or_insert(json!(seed));
                    if let Some(Value::String(name)) = map.get("model") {
                        let model = preset(name).map_err(|e| Error::Config(e.to_string()))?;
                        map.insert("model".into(), json!(model));
                    }
                }
                serde_json::from_value::<Scenario>(v).map_err(|e| Error::Config(format!("bad scenario: {e}")))
            })
            .collect();
    }
    match cfg.suite.as_deref().unwrap_or("acceptance") {
        "acceptance" => Ok(verify::acceptance_suite(seed)),
        other => Err(Error::Config(format!("unknown suite {other:?}"))),
    }
}

/// Validates `cfg` and fills in defaults. All configuration errors surface here.
pub fn resolve(cfg: &RunConfig) -> Result<Resolved> {
    let command = cfg
        .command
        .ok_or_else(|| Error::Config("no command given (simulate, verify, moments, lindley, transforms, calibrate)".into()))?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let model = cfg
        .model
        .clone()
        .unwrap_or_else(|| ModelSpec::Preset("sp_cl".into()))
        .resolve()
        .map_err(|e| Error::Config(e.to_string()))?;
    let params = InspectionParams::new(cfg.beta.unwrap_or(1.0), cfg.omega.unwrap_or(1.0))
        .map_err(|e| Error::Config(e.to_string()))?;
    let sample_size = cfg.sample_size.unwrap_or(DEFAULT_SAMPLES);
    let p = cfg.p.unwrap_or(0.5);
    let replications = cfg.replications.unwrap_or(200);
    let scenarios = match command {
        Command::Verify => resolve_scenarios(cfg, seed)?,
        Command::Lindley if cfg.sequence.is_none() => lindley_scenarios(&model, p, sample_size, seed)?,
        Command::Calibrate => vec![Scenario::new("calibration", CheckKind::Calibration, model, params, 1000, seed)
            .with_extra("replications", replications as f64)],
        _ => Vec::new(),
    };
    for s in &scenarios {
        s.validate().map_err(|e| Error::Config(e.to_string()))?;
    }
    if matches!(command, Command::Simulate | Command::Lindley) && sample_size == 0 {
        return Err(Error::Config("sample_size must be positive".into()));
    }
    if command == Command::Calibrate && replications == 0 {
        return Err(Error::Config("replications must be positive".into()));
    }
    let grid = [0.0, 0.5, 1.0, 2.0, 5.0];
    let alpha = cfg.alpha.clone().unwrap_or_else(|| grid.to_vec());
    let gamma = cfg.gamma.clone().unwrap_or_else(|| grid.to_vec());
    if alpha.iter().chain(&gamma).any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Config("alpha and gamma must be finite and >= 0".into()));
    }
    if command == Command::Moments && !model.supports(model.natural_side()) {
        return Err(Error::Config("model is not spectrally one-sided".into()));
    }
    Ok(Resolved {
        command,
        seed,
        threads: cfg.threads.unwrap_or(0),
        output_dir: cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
        model,
        params,
        sample_size,
        scenarios,
        alpha,
        gamma,
        p,
        sequence: cfg.sequence.clone(),
        replications,
    })
}

fn lindley_scenarios(model: &LevyModel, p: f64, n: usize, seed: u64) -> Result<Vec<Scenario>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("p must lie in (0, 1), got {p}")));
    }
    // q = beta / (beta + omega) = p with beta + omega = 1
    let params = InspectionParams::new(p, 1.0 - p).map_err(|e| Error::Config(e.to_string()))?;
    Ok(vec![
        Scenario::new("lindley_pathwise", CheckKind::Pathwise, *model, params, 10_000, seed),
        Scenario::new("lindley_fixed_point", CheckKind::FixedPoint, *model, params, n, seed),
    ])
}

/// Everything a run produces, before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `(file name, contents)`, written in order.
    pub files: Vec<(String, String)>,
    pub stdout: String,
    pub pass: bool,
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn scenario_outcome(reports: Vec<ScenarioReport>) -> Outcome {
    let pass = reports.iter().all(|r| r.pass);
    Outcome {
        stdout: verify::summary_table(&reports),
        files: vec![("report.json".into(), to_json(&reports))],
        pass,
    }
}

fn simulate(r: &Resolved) -> Result<Outcome> {
    let st = RngStream::new(r.seed, 0);
    let n = r.sample_size;
    let cont = st
        .labelled("continuous")
        .try_par_map(n, |g| sample_continuous_pair(&r.model, r.params.beta, g))?;
    let walks = st
        .labelled("inspected")
        .try_par_map(n, |g| sample_inspected_walk(&r.model, &r.params, g))?;
    let cont_rows: Vec<Vec<f64>> = cont
        .iter()
        .map(|e| vec![e.max_value, e.argmax_time, e.terminal_value, e.horizon])
        .collect();
    let walk_rows: Vec<Vec<f64>> = walks
        .iter()
        .map(|w| vec![w.max_value, w.argmax_epoch, w.terminal(), w.count as f64, w.horizon])
        .collect();
    let mean = |v: &mut dyn Iterator<Item = f64>| v.sum::<f64>() / n as f64;
    let summary = json!({
        "command": "simulate",
        "seed": r.seed,
        "model": r.model,
        "params": r.params,
        "sample_size": n,
        "continuous": {
            "mean_max": mean(&mut cont.iter().map(|e| e.max_value)),
            "mean_argmax": mean(&mut cont.iter().map(|e| e.argmax_time)),
        },
        "inspected": {
            "mean_max": mean(&mut walks.iter().map(|w| w.max_value)),
            "mean_argmax": mean(&mut walks.iter().map(|w| w.argmax_epoch)),
            "mean_count": mean(&mut walks.iter().map(|w| w.count as f64)),
            "atom_at_zero": mean(&mut walks.iter().map(|w| f64::from(u8::from(w.max_value == 0.0)))),
        },
    });
    Ok(Outcome {
        stdout: to_json(&summary),
        files: vec![
            ("report.json".into(), to_json(&summary)),
            (
                "samples_continuous.csv".into(),
                csv(&["max", "argmax", "terminal", "horizon"], &cont_rows),
            ),
            (
                "samples_inspected.csv".into(),
                csv(&["max", "argmax", "terminal", "count", "horizon"], &walk_rows),
            ),
        ],
        pass: true,
    })
}

fn moments(r: &Resolved) -> Result<Outcome> {
    let side = r.model.natural_side();
    let m = transforms::moments_inspected(&r.model, side, r.params.beta, r.params.omega)?;
    let report = json!({
        "command": "moments",
        "model": r.model,
        "side": side,
        "beta": r.params.beta,
        "omega": r.params.omega,
        "moments": m,
    });
    Ok(Outcome {
        stdout: to_json(&m),
        files: vec![("report.json".into(), to_json(&report))],
        pass: true,
    })
}

fn transforms_op(r: &Resolved) -> Result<Outcome> {
    let side = r.model.natural_side();
    let (b, w) = (r.params.beta, r.params.omega);
    let mut rows = Vec::new();
    let mut grid = Vec::new();
    let mut worst = 0.0_f64;
    for &a in &r.alpha {
        for &g in &r.gamma {
            let slow = transforms::joint_lst_continuous(&r.model, side, b, a, g)?;
            let fast = transforms::joint_lst_continuous(&r.model, side, b + w, a, g)?;
            let insp = transforms::joint_lst_inspected(&r.model, side, b, w, a, g)?;
            let err = (slow - fast * insp).abs() / slow.abs();
            worst = worst.max(err);
            rows.push(vec![a, g, slow, fast, insp, err]);
            grid.push(json!({"alpha": a, "gamma": g, "continuous": slow, "continuous_fast": fast, "inspected": insp, "rel_error": err}));
        }
    }
    let (quad, closed) = transforms::frullani_check(b, w)?;
    let pass = worst <= 1e-10 && (quad - closed).abs() <= 1e-8;
    let report = json!({
        "command": "transforms",
        "model": r.model,
        "side": side,
        "beta": b,
        "omega": w,
        "grid": grid,
        "max_rel_error": worst,
        "frullani": {"quadrature": quad, "closed_form": closed},
        "pass": pass,
    });
    Ok(Outcome {
        stdout: format!("max relative factorization error {worst:.3e}; frullani {quad} vs {closed}\n"),
        files: vec![
            ("report.json".into(), to_json(&report)),
            (
                "samples_transforms.csv".into(),
                csv(&["alpha", "gamma", "continuous", "continuous_fast", "inspected", "rel_error"], &rows),
            ),
        ],
        pass,
    })
}

fn lindley_op(r: &Resolved) -> Result<Outcome> {
    if let Some(x) = &r.sequence {
        let w = lindley::lindley_run(x);
        let mut rows = Vec::with_capacity(x.len());
        let mut mismatches = 0;
        for n in 1..=x.len() {
            let closed = lindley::lindley_closed_form(x, n)?;
            if closed != w[n - 1] {
                mismatches += 1;
            }
            rows.push(vec![n as f64, x[n - 1], w[n - 1], closed]);
        }
        let report = json!({"command": "lindley", "sequence": x, "lindley": w, "mismatches": mismatches});
        return Ok(Outcome {
            stdout: to_json(&report),
            files: vec![
                ("report.json".into(), to_json(&report)),
                ("samples_lindley.csv".into(), csv(&["n", "x", "recursion", "closed_form"], &rows)),
            ],
            pass: mismatches == 0,
        });
    }
    let reports = verify::run_suite(&r.scenarios)?;
    let mut out = scenario_outcome(reports);
    // fixed-point draws for plotting
    let st = RngStream::new(r.seed, 0).labelled("lindley_samples");
    let p = r.p;
    let steps = lindley::burn_in_steps(p);
    let model = &r.model;
    let increment = |g: &mut StreamRng| sample_increment(model, exp_draw(1.0, g), g);
    let rows = st.try_par_map(r.sample_size, |g| -> Result<Vec<f64>> {
        Ok(vec![
            lindley::killed_chain_endpoint(p, steps, increment, g)?,
            lindley::fixed_point_sample(p, increment, g)?,
        ])
    })?;
    out.files
        .push(("samples_fixed_point.csv".into(), csv(&["killed_chain", "geometric_max"], &rows)));
    Ok(out)
}

/// Runs a resolved configuration on a pool of `r.threads` workers.
pub fn execute(r: &Resolved) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(r.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match r.command {
        Command::Simulate => simulate(r),
        Command::Verify | Command::Calibrate => Ok(scenario_outcome(verify::run_suite(&r.scenarios)?)),
        Command::Moments => moments(r),
        Command::Lindley => lindley_op(r),
        Command::Transforms => transforms_op(r),
    })
}

pub fn run_meta(r: &Resolved) -> String {
    to_json(&json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": r.command,
        "seed": r.seed,
        "threads": r.threads,
        "config_hash": r.config_hash(),
    }))
}

/// Writes the outcome and `run_meta.json` into `dir`.
pub fn write_outputs(dir: &Path, r: &Resolved, outcome: &Outcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, contents) in &outcome.files {
        fs::write(dir.join(name), contents)?;
    }
    fs::write(dir.join("run_meta.json"), run_meta(r))?;
    Ok(())
}

fn load(cli: Cli) -> Result<Resolved> {
    let base = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    resolve(&merge(base, cli))
}

/// Entry point: parses `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let resolved = match load(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = match execute(&resolved) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAIL;
        }
    };
    if let Err(e) = write_outputs(&resolved.output_dir, &resolved, &outcome) {
        eprintln!("error: {e}");
        return EXIT_FAIL;
    }
    print!("{}", outcome.stdout);
    if outcome.pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
