//! `fibrot` experiment runner.
//!
//! Each run reads one config file (TOML, or JSON when the path ends in
//! `.json`) with the sections `lift` / `system` / `map`, `estimator`,
//! `conjugacy` and `output`. Flags override the config. Output is JSON for
//! single results and CSV for tables.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approx::{convergents, riemann_convergence, Termination};
use crate::circle::{rho_bracket, CircleMapLift, RotationEstimate};
use crate::error::Error;
use crate::holo::{
    conjugate_linear_part, indifference_defect, rho_t, winding_degree, Coefficient, FibredPolyMap, TrigPoly,
};
use crate::numeric::circular_distance;
use crate::orbit::{arg_advance_traced, trace_csv, OrbitConfig};
use crate::skewfibre::{conjugate_system, rho_ff, FiniteFibreSystem};

#[derive(Debug, Parser)]
#[command(name = "fibrot", version, about = "Rotation numbers of circle lifts, finite-fibre systems and fibred maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run configuration (TOML, or JSON for *.json).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true)]
    pub grid: Option<usize>,

    #[arg(long, global = true)]
    pub iterations: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Rotation bracket of a single lift.
    RhoCircle,
    /// Finite-fibre rotation number of a system.
    RhoFf,
    /// Fibred rotation number with degree and indifference diagnostics.
    RhoFibred,
    /// Riemann-sum convergence table over continued-fraction convergents.
    Approx,
    /// Seeded random conjugacies and the resulting rotation-number drift.
    ConjugacyTest,
    /// Argument advance along one orbit.
    Orbit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lift: Option<CircleMapLift>,
    pub system: Option<FiniteFibreSystem>,
    pub map: Option<FibredPolyMap>,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub conjugacy: ConjugacyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub iterations: Option<u64>,
    pub grid: usize,
    /// Base point for circle lifts.
    pub x: f64,
    /// Anchor `θ̃` of the approximant orbits.
    pub anchor: f64,
    /// Number of convergents tabulated by `approx`.
    pub convergents: usize,
    pub theta0: f64,
    pub z0: [f64; 2],
    pub r_min: f64,
    pub r_max: f64,
    pub margin: f64,
    pub seed: Option<u64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        let orbit = OrbitConfig::default();
        EstimatorConfig {
            iterations: None,
            grid: 4096,
            x: 0.0,
            anchor: 0.0,
            convergents: 12,
            theta0: 0.0,
            z0: [0.1, 0.0],
            r_min: orbit.r_min,
            r_max: orbit.r_max,
            margin: orbit.margin,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjugacyFamily {
    Identity,
    RigidShift,
    #[default]
    Random,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjugacyConfig {
    pub family: ConjugacyFamily,
    pub trials: usize,
    /// Interior breakpoints of random piecewise-linear conjugacies.
    pub nodes: usize,
    /// Highest frequency in random fibre-linear conjugacies `exp(P(θ))`.
    pub harmonics: i32,
    pub amplitude: f64,
}

impl Default for ConjugacyConfig {
    fn default() -> Self {
        ConjugacyConfig {
            family: ConjugacyFamily::Random,
            trials: 10,
            nodes: 4,
            harmonics: 2,
            amplitude: 0.3,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Option<Format>,
}

/// Failure of a run, carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { code: if e.is_numerical() { 2 } else { 1 }, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Reads a config, choosing JSON or TOML by extension.
pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, path.extension().is_some_and(|x| x == "json"))
}

pub fn parse_config(text: &str, json: bool) -> CliResult<RunConfig> {
    if json {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("bad config: {e}")))
    } else {
        toml::from_str(text).map_err(|e| CliError::validation(format!("bad config: {e}")))
    }
}

/// Output of a successful run plus any notes destined for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub stdout: String,
    pub notes: Vec<String>,
}

struct Settings {
    format: Format,
    seed: Option<u64>,
    grid: usize,
    iterations: Option<u64>,
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn csv_rows<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("flat record");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn required<T: Clone>(item: &Option<T>, section: &str) -> CliResult<T> {
    item.clone()
        .ok_or_else(|| CliError::validation(format!("config is missing the [{section}] section")))
}

/// Runs one subcommand against a parsed config.
pub fn execute(command: Command, cfg: &RunConfig, overrides: &Cli) -> CliResult<Output> {
    let default_format = if command == Command::Approx { Format::Csv } else { Format::Json };
    let settings = Settings {
        format: overrides.format.or(cfg.output.format).unwrap_or(default_format),
        seed: overrides.seed.or(cfg.estimator.seed),
        grid: overrides.grid.unwrap_or(cfg.estimator.grid),
        iterations: overrides.iterations.or(cfg.estimator.iterations),
    };
    match command {
        Command::RhoCircle => cmd_rho_circle(cfg, &settings),
        Command::RhoFf => cmd_rho_ff(cfg, &settings),
        Command::RhoFibred => cmd_rho_fibred(cfg, &settings),
        Command::Approx => cmd_approx(cfg, &settings),
        Command::ConjugacyTest => cmd_conjugacy_test(cfg, &settings),
        Command::Orbit => cmd_orbit(cfg, &settings),
    }
}

fn single<T: Serialize>(report: &T, format: Format) -> Output {
    let stdout = match format {
        Format::Json => json(report),
        Format::Csv => csv_rows(std::slice::from_ref(report)),
    };
    Output { stdout, notes: vec![] }
}

fn cmd_rho_circle(cfg: &RunConfig, s: &Settings) -> CliResult<Output> {
    let lift = required(&cfg.lift, "lift")?;
    let est = rho_bracket(&lift, cfg.estimator.x, s.iterations.unwrap_or(1_000_000))?;
    Ok(single(&est, s.format))
}

#[derive(Serialize)]
struct RhoFfReport {
    n: usize,
    #[serde(flatten)]
    estimate: RotationEstimate,
}

fn cmd_rho_ff(cfg: &RunConfig, s: &Settings) -> CliResult<Output> {
    let sys = required(&cfg.system, "system")?;
    let estimate = rho_ff(&sys, s.iterations.unwrap_or(100_000))?;
    Ok(single(&RhoFfReport { n: sys.n(), estimate }, s.format))
}

#[derive(Serialize)]
struct FibredReport {
    alpha: f64,
    degree: i64,
    indifference_defect: f64,
    rho_t: f64,
}

fn cmd_rho_fibred(cfg: &RunConfig, s: &Settings) -> CliResult<Output> {
    let map = required(&cfg.map, "map")?;
    let degree = winding_degree(&map, s.grid)?;
    let report = FibredReport {
        alpha: map.alpha(),
        degree,
        indifference_defect: indifference_defect(&map, s.grid)?,
        rho_t: rho_t(&map, s.grid)?,
    };
    Ok(single(&report, s.format))
}

fn cmd_approx(cfg: &RunConfig, s: &Settings) -> CliResult<Output> {
    let map = required(&cfg.map, "map")?;
    let expansion = convergents(map.alpha(), cfg.estimator.convergents)?;
    let table = riemann_convergence(&map, &expansion.convergents, cfg.estimator.anchor, s.grid)?;
    let mut notes = vec![];
    match expansion.terminated {
        Some(Termination::Exact) => notes.push(format!(
            "continued fraction of alpha = {} terminates after {} convergents",
            map.alpha(),
            expansion.convergents.len()
        )),
        Some(Termination::DenominatorLimit) => notes.push(format!(
            "convergents stopped at the denominator limit after {} terms",
            expansion.convergents.len()
        )),
        None => {}
    }
    let stdout = match s.format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            #[derive(Serialize)]
            struct ApproxReport<'a> {
                terminated: Option<Termination>,
                #[serde(flatten)]
                table: &'a crate::approx::ConvergenceTable,
            }
            json(&ApproxReport { terminated: expansion.terminated, table: &table })
        }
    };
    Ok(Output { stdout, notes })
}

#[derive(Debug, Clone, Serialize)]
struct TrialRow {
    trial: usize,
    rho: f64,
    distance: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Debug, Clone, Serialize)]
struct ConjugacyReport {
    mode: &'static str,
    family: ConjugacyFamily,
    seed: u64,
    reference: f64,
    max_distance: f64,
    all_passed: bool,
    trials: Vec<TrialRow>,
}

/// Tolerance for the fibre-linear (differentiable) conjugacy comparison.
pub const FIBRED_CONJUGACY_TOL: f64 = 1e-8;

/// Random `exp(P(θ))` with `P` a complex trig polynomial, frequencies
/// `1..=harmonics`, coefficients in `[-amplitude, amplitude]`.
pub fn random_linear_conjugacy<R: Rng + ?Sized>(rng: &mut R, harmonics: i32, amplitude: f64) -> Coefficient {
    let mut terms = vec![];
    for k in 1..=harmonics.max(1) {
        for sign in [k, -k] {
            let re = rng.gen_range(-amplitude..=amplitude);
            let im = rng.gen_range(-amplitude..=amplitude);
            terms.push((sign, Complex64::new(re, im)));
        }
    }
    let c0 = Complex64::new(rng.gen_range(-amplitude..=amplitude), rng.gen_range(-0.5..0.5));
    terms.push((0, c0));
    Coefficient::exp(TrigPoly::from_terms(terms))
}

fn cmd_conjugacy_test(cfg: &RunConfig, s: &Settings) -> CliResult<Output> {
    let seed = s
        .seed
        .ok_or_else(|| CliError::validation("conjugacy-test needs a seed (--seed or estimator.seed)"))?;
    let conj = &cfg.conjugacy;
    let trials = match conj.family {
        ConjugacyFamily::Identity => conj.trials.max(1),
        _ => conj.trials,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = match (&cfg.system, &cfg.map) {
        (Some(sys), None) => {
            let cycles = s.iterations.unwrap_or(100_000);
            let base = rho_ff(sys, cycles)?;
            let mut rows = Vec::with_capacity(trials);
            for trial in 0..trials {
                let hs: Vec<CircleMapLift> = (0..sys.n())
                    .map(|_| match conj.family {
                        ConjugacyFamily::Identity => CircleMapLift::identity(),
                        ConjugacyFamily::RigidShift => CircleMapLift::rigid(rng.gen_range(0.0..1.0)),
                        ConjugacyFamily::Random => CircleMapLift::random_pl(&mut rng, conj.nodes),
                    })
                    .collect();
                let est = rho_ff(&conjugate_system(sys, &hs)?, cycles)?;
                let distance = circular_distance(est.value, base.value);
                let tolerance = est.half_width() + base.half_width();
                rows.push(TrialRow { trial, rho: est.value, distance, tolerance, passed: distance <= tolerance });
            }
            finish("finite_fibre", conj.family, seed, base.value, rows)
        }
        (None, Some(map)) => {
            let reference = rho_t(map, s.grid)?;
            let mut rows = Vec::with_capacity(trials);
            for trial in 0..trials {
                let c = match conj.family {
                    ConjugacyFamily::Identity => Coefficient::constant(Complex64::new(1.0, 0.0)),
                    ConjugacyFamily::RigidShift => Coefficient::unit_phase(rng.gen_range(0.0..1.0), &TrigPoly::zero()),
                    ConjugacyFamily::Random => random_linear_conjugacy(&mut rng, conj.harmonics, conj.amplitude),
                };
                let g = conjugate_linear_part(map, &c, s.grid)?;
                let rho = rho_t(&g, s.grid)?;
                let distance = circular_distance(rho, reference);
                rows.push(TrialRow {
                    trial,
                    rho,
                    distance,
                    tolerance: FIBRED_CONJUGACY_TOL,
                    passed: distance <= FIBRED_CONJUGACY_TOL,
                });
            }
            finish("fibred", conj.family, seed, reference, rows)
        }
        _ => {
            return Err(CliError::validation(
                "conjugacy-test needs exactly one of the [system] or [map] sections",
            ))
        }
    };
    let stdout = match s.format {
        Format::Json => json(&report),
        Format::Csv => csv_rows(&report.trials),
    };
    Ok(Output { stdout, notes: vec![] })
}

fn finish(mode: &'static str, family: ConjugacyFamily, seed: u64, reference: f64, trials: Vec<TrialRow>) -> ConjugacyReport {
    ConjugacyReport {
        mode,
        family,
        seed,
        reference,
        max_distance: trials.iter().map(|t| t.distance).fold(0.0, f64::max),
        all_passed: trials.iter().all(|t| t.passed),
        trials,
    }
}

fn cmd_orbit(cfg: &RunConfig, s: &Settings) -> CliResult<Output> {
    let map = required(&cfg.map, "map")?;
    let e = &cfg.estimator;
    let orbit_cfg = OrbitConfig { r_min: e.r_min, r_max: e.r_max, margin: e.margin };
    let m = s.iterations.unwrap_or(100_000) as usize;
    let z0 = Complex64::new(e.z0[0], e.z0[1]);
    let (est, trace) = arg_advance_traced(&map, e.theta0, z0, m, &orbit_cfg)?;
    let stdout = match s.format {
        Format::Json => json(&est),
        Format::Csv => trace_csv(&trace),
    };
    Ok(Output { stdout, notes: vec![] })
}

/// Parses arguments, runs, prints; returns the process exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            for note in &out.notes {
                eprintln!("note: {note}");
            }
            print!("{}", out.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<Output> {
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    execute(cli.command, &cfg, cli)
}
