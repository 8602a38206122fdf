//! Command-line front end: `simulate`, `identify`, `transport`, `conjugate`
//! and `check`, each driven by one TOML config file.
//!
//! Exit codes: 0 ok, 1 usage or config error, 2 verification failure,
//! 3 quality-grid boundary abort, 4 twist refusal.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conjugate::{is_zeta_convex, zeta_conjugate, zeta_conjugate_of_taste, PaddedGrid, DEFAULT_GRID_PAD, DEFAULT_GRID_PER_AXIS};
use crate::equilibrium::{
    atomlessness_diagnostic, simulate_market, verify_equilibrium, EquilibriumOutcome, GridSpec, MarketSpec, OutcomeRecord,
};
use crate::error::{Error, Result};
use crate::identify::{
    brenier_identify, general_identify, reference_measure, relative_rmse, rmse, scalar_identify,
    simultaneous_equations_identify, IdentifyOptions,
};
use crate::io;
use crate::measures::{partition_by_x, DistributionSpec, PartitionScheme};
use crate::ot::{
    check_cyclical_monotonicity, optimality_report, solve_entropic, solve_exact, surplus_matrix, EntropicOptions,
    TransportPlan, MARGINAL_TOL, SLACKNESS_TOL,
};
use crate::surplus::{check_twist, ScalarFunction, SurplusFamily, TWIST_SV_THRESHOLD};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_GRID: i32 = 3;
pub const EXIT_TWIST: i32 = 4;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::GridBoundary { .. } => EXIT_GRID,
        Error::TwistViolation { .. } | Error::NotSingleCrossing(_) => EXIT_TWIST,
        _ => EXIT_USAGE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "hedonic", version, about = "Hedonic market simulation and preference identification")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate an equilibrium and write its dataset.
    Simulate,
    /// Identify potentials from a dataset.
    Identify,
    /// Solve a transport problem between two measure files.
    Transport,
    /// Conjugate a tabulated function.
    Conjugate,
    /// Re-verify artifacts.
    Check,
}

fn default_tol() -> f64 {
    1e-7
}

fn default_n_ref() -> usize {
    400
}

fn default_per_axis() -> usize {
    DEFAULT_GRID_PER_AXIS
}

fn default_trials() -> usize {
    1000
}

fn default_threshold() -> f64 {
    TWIST_SV_THRESHOLD
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub market: MarketSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Scalar,
    Brenier,
    General,
    Simeq,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifyConfig {
    pub dataset: PathBuf,
    pub pipeline: Pipeline,
    pub eps: DistributionSpec,
    #[serde(default = "default_n_ref")]
    pub n_ref: usize,
    #[serde(default)]
    pub family: SurplusFamily,
    #[serde(default)]
    pub partition: PartitionScheme,
    #[serde(default)]
    pub k_neighbors: Option<usize>,
    /// Known base utility; when given, the report carries the relative RMSE
    /// of the recovered gradients.
    #[serde(default)]
    pub truth_u_bar: Option<ScalarFunction>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverConfig {
    #[default]
    Exact,
    Entropic(EntropicOptions),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub source: PathBuf,
    pub target: PathBuf,
    #[serde(default)]
    pub family: SurplusFamily,
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateConfig {
    /// Grid function over qualities.
    pub function: PathBuf,
    #[serde(default)]
    pub family: SurplusFamily,
    #[serde(default)]
    pub x: Vec<f64>,
    /// Taste grid; when absent it is a padded lattice around `eps_samples`.
    #[serde(default)]
    pub eps_grid: Option<GridSpec>,
    #[serde(default)]
    pub eps_samples: Option<PathBuf>,
    #[serde(default = "default_per_axis")]
    pub per_axis: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanCheck {
    pub plan: PathBuf,
    pub source: PathBuf,
    pub target: PathBuf,
    #[serde(default)]
    pub family: SurplusFamily,
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistCheck {
    pub family: SurplusFamily,
    #[serde(default)]
    pub x: Vec<f64>,
    pub eps_grid: GridSpec,
    pub z_grid: GridSpec,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexityCheck {
    pub function: PathBuf,
    #[serde(default)]
    pub family: SurplusFamily,
    #[serde(default)]
    pub x: Vec<f64>,
    pub eps_grid: GridSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    /// Outcome written by `simulate`.
    #[serde(default)]
    pub outcome: Option<PathBuf>,
    /// Dataset whose price column replaces the outcome's prices.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub plan: Option<PlanCheck>,
    #[serde(default)]
    pub twist: Option<TwistCheck>,
    #[serde(default)]
    pub convexity: Option<ConvexityCheck>,
}

/// Whole run configuration; each command reads its own section.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub identify: Option<IdentifyConfig>,
    #[serde(default)]
    pub transport: Option<TransportConfig>,
    #[serde(default)]
    pub conjugate: Option<ConjugateConfig>,
    #[serde(default)]
    pub check: Option<CheckConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Everything a command needs: the parsed config plus where to read and
/// write files.
pub struct Run {
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Run {
    fn output(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T> {
        s.as_ref().ok_or_else(|| Error::InvalidArgument(format!("config has no [{name}] section")))
    }

    fn report(&self, name: &str, mut body: Value) -> Result<()> {
        // Output location and thread count do not affect results.
        let mut echoed = self.config.clone();
        echoed.out = None;
        echoed.threads = None;
        body["config"] = serde_json::to_value(&echoed)?;
        io::save_json(&self.output(name), &body)
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match prepare(&args).and_then(|run| dispatch(args.command, &run)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn prepare(args: &Args) -> Result<Run> {
    let path = args.config.as_ref().ok_or_else(|| Error::InvalidArgument("--config PATH is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut config = RunConfig::from_toml(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(t) = args.threads {
        config.threads = Some(t);
    }
    let out = args.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    if let Some(t) = config.threads {
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    fs::create_dir_all(&out)?;
    Ok(Run { config, out })
}

pub fn dispatch(command: Command, run: &Run) -> Result<i32> {
    match command {
        Command::Simulate => cmd_simulate(run),
        Command::Identify => cmd_identify(run),
        Command::Transport => cmd_transport(run),
        Command::Conjugate => cmd_conjugate(run),
        Command::Check => cmd_check(run),
    }
}

fn code(pass: bool) -> i32 {
    if pass {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}

pub fn cmd_simulate(run: &Run) -> Result<i32> {
    let cfg = run.section(&run.config.simulate, "simulate")?;
    let out = simulate_market(&cfg.market, run.config.seed)?;
    let verification = verify_equilibrium(&out, cfg.tol);
    let atoms = atomlessness_diagnostic(&out);
    io::save_dataset(&run.output("dataset.csv"), &out.dataset)?;
    io::save_json(&run.output("outcome.json"), &out.to_record())?;
    run.report(
        "equilibrium_report.json",
        json!({
            "rows": out.dataset.len(),
            "boundary_fraction": out.boundary_fraction,
            "verification": verification,
            "atomlessness": atoms,
        }),
    )?;
    println!("simulate: {} rows, verification {}", out.dataset.len(), if verification.pass { "pass" } else { "FAIL" });
    Ok(code(verification.pass))
}

fn x_vec(v: &[f64]) -> Array1<f64> {
    Array1::from(v.to_vec())
}

pub fn cmd_identify(run: &Run) -> Result<i32> {
    let cfg = run.section(&run.config.identify, "identify")?;
    let data = io::load_dataset(&cfg.dataset)?;
    if cfg.eps.dim() != data.dz() {
        return Err(Error::Dimension { context: "taste distribution", expected: data.dz(), got: cfg.eps.dim() });
    }
    let eps_ref = reference_measure(&cfg.eps, cfg.n_ref, run.config.seed)?;
    let opts = IdentifyOptions { k_neighbors: cfg.k_neighbors, ..Default::default() };

    if cfg.pipeline == Pipeline::Simeq {
        let maps = simultaneous_equations_identify(&data, &eps_ref, &cfg.partition)?;
        let mut cells = Vec::new();
        for (c, m) in maps.iter().enumerate() {
            io::save_forward_map(&run.output(&format!("forward_{c:03}.csv")), m)?;
            cells.push(json!({ "cell": c, "x_value": m.x_value.to_vec(), "reference_points": m.eps_points.nrows() }));
        }
        run.report("identify_report.json", json!({ "pipeline": cfg.pipeline, "cells": cells, "pass": true }))?;
        println!("identify: {} cells", maps.len());
        return Ok(EXIT_OK);
    }
    if cfg.pipeline == Pipeline::Scalar && data.dz() != 1 {
        return Err(Error::InvalidArgument(format!("scalar pipeline needs d_z = 1, dataset has d_z = {}", data.dz())));
    }

    let mut cells = Vec::new();
    let mut pass = true;
    for (c, slice) in partition_by_x(&data, &cfg.partition)?.iter().enumerate() {
        let pot = match cfg.pipeline {
            Pipeline::Scalar => scalar_identify(slice, &eps_ref, &cfg.family, &opts)?,
            Pipeline::Brenier => brenier_identify(slice, &eps_ref, &opts)?,
            Pipeline::General => general_identify(slice, &eps_ref, &cfg.family, &opts)?,
            Pipeline::Simeq => unreachable!(),
        };
        io::save_potential(&run.output(&format!("potential_{c:03}.csv")), &pot)?;
        let cell_pass = pot.diagnostics.optimality.as_ref().is_none_or(|o| {
            o.duality_gap <= cfg.tol * (1.0 + o.primal.abs())
                && o.max_dual_violation <= cfg.tol
                && o.max_slackness_gap <= SLACKNESS_TOL.max(cfg.tol)
                && o.marginal_error <= MARGINAL_TOL
        });
        pass &= cell_pass;
        let errors = cfg.truth_u_bar.as_ref().map(|u| {
            let x = pot.x_value.to_vec();
            let truth = Array2::from_shape_fn(pot.z_points.dim(), |(j, k)| u.grad_z(&x, &pot.z_points.row(j).to_vec())[k]);
            (rmse(&pot.u_bar_grad, &truth), relative_rmse(&pot.u_bar_grad, &truth))
        });
        if let Some((a, r)) = errors {
            println!("identify: cell {c} grad Ubar RMSE {a:.6}, relative {r:.6}");
        }
        cells.push(json!({
            "cell": c,
            "x_value": pot.x_value.to_vec(),
            "points": pot.z_points.nrows(),
            "pass": cell_pass,
            "u_bar_grad_rmse": errors.map(|e| e.0),
            "u_bar_grad_relative_rmse": errors.map(|e| e.1),
            "diagnostics": pot.diagnostics,
        }));
    }
    run.report("identify_report.json", json!({ "pipeline": cfg.pipeline, "cells": cells, "pass": pass }))?;
    Ok(code(pass))
}

pub fn cmd_transport(run: &Run) -> Result<i32> {
    let cfg = run.section(&run.config.transport, "transport")?;
    let mu = io::load_measure(&cfg.source)?;
    let nu = io::load_measure(&cfg.target)?;
    let s = surplus_matrix(&mu, &nu, &cfg.family, x_vec(&cfg.x).view())?;
    let (plan, duals, extra, ok) = match &cfg.solver {
        SolverConfig::Exact => {
            let (plan, duals) = solve_exact(&mu, &nu, &s)?;
            (plan, duals, json!({}), true)
        }
        SolverConfig::Entropic(o) => {
            let sol = solve_entropic(&mu, &nu, &s, *o)?;
            let extra = json!({
                "iterations": sol.iterations,
                "total_iterations": sol.total_iterations,
                "converged": sol.converged,
                "marginal_error": sol.marginal_error,
            });
            (sol.plan, sol.duals, extra, sol.converged)
        }
    };
    let rep = optimality_report(&plan, &duals, mu.weights(), nu.weights(), &s);
    let pass = match cfg.solver {
        SolverConfig::Exact => {
            rep.duality_gap <= 1e-7 * (1.0 + rep.primal.abs())
                && rep.max_dual_violation <= 1e-7
                && rep.max_slackness_gap <= SLACKNESS_TOL
                && rep.marginal_error <= MARGINAL_TOL
        }
        SolverConfig::Entropic(_) => ok,
    };
    io::save_plan(&run.output("plan.csv"), &plan)?;
    io::save_duals(&run.out, "duals", &duals)?;
    run.report("transport_report.json", json!({ "optimality": rep, "solver": extra, "pass": pass }))?;
    println!("duality gap: {:e}", rep.duality_gap);
    Ok(code(pass))
}

pub fn cmd_conjugate(run: &Run) -> Result<i32> {
    let cfg = run.section(&run.config.conjugate, "conjugate")?;
    let v = io::load_grid_function(&cfg.function)?;
    let (eps_grid, grid_desc) = match (&cfg.eps_grid, &cfg.eps_samples) {
        (Some(g), _) => {
            g.validate()?;
            (g.points(), json!({ "lo": g.lo, "hi": g.hi, "per_axis": g.per_axis, "pad": 0.0 }))
        }
        (None, Some(path)) => {
            let m = io::load_measure(path)?;
            let g = PaddedGrid::around(m.points(), DEFAULT_GRID_PAD, cfg.per_axis)?;
            (g.points(), serde_json::to_value(&g)?)
        }
        (None, None) => return Err(Error::InvalidArgument("conjugate needs eps_grid or eps_samples".into())),
    };
    let x = x_vec(&cfg.x);
    let first = zeta_conjugate(&v, &cfg.family, x.view(), &eps_grid)?;
    let double = zeta_conjugate_of_taste(&first.function, &cfg.family, x.view(), &v.points)?;
    let convexity = is_zeta_convex(&v, &cfg.family, x.view(), &eps_grid, cfg.tol, None)?;
    io::save_grid_function(&run.output("conjugate.csv"), &first.function)?;
    io::save_grid_function(&run.output("double_conjugate.csv"), &double.function)?;
    run.report(
        "conjugate_report.json",
        json!({
            "eps_grid": grid_desc,
            "boundary_hits": first.boundary_hits.len(),
            "double_boundary_hits": double.boundary_hits.len(),
            "convexity": convexity,
        }),
    )?;
    println!("conjugate: {} taste points, zeta-convex {}", eps_grid.nrows(), convexity.is_convex);
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct CheckLine {
    name: &'static str,
    pass: bool,
    hard: bool,
    detail: Value,
}

pub fn cmd_check(run: &Run) -> Result<i32> {
    let cfg = run.section(&run.config.check, "check")?;
    let mut lines = Vec::new();

    if let Some(p) = &cfg.outcome {
        let text = fs::read_to_string(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
        let record: OutcomeRecord = serde_json::from_str(&text)?;
        let mut out = EquilibriumOutcome::from_record(record)?;
        if let Some(d) = &cfg.dataset {
            let data = io::load_dataset(d)?;
            if data.z() != out.dataset.z() {
                return Err(Error::InvalidArgument("dataset qualities do not match the outcome".into()));
            }
            out = out.with_prices(data.prices().clone())?;
        }
        let rep = verify_equilibrium(&out, cfg.tol);
        let named = |n: &'static str, r: &crate::equilibrium::CheckResult| CheckLine {
            name: n,
            pass: r.pass,
            hard: true,
            detail: serde_json::to_value(r).unwrap_or(Value::Null),
        };
        lines.push(named("stability", &rep.stability));
        lines.push(named("matched_equality", &rep.matched_equality));
        lines.push(named("price_consistency", &rep.price_consistency));
        lines.push(named("market_clearing", &rep.market_clearing));
        lines.push(named("consumer_deviation", &rep.consumer_deviation));
        lines.push(named("producer_deviation", &rep.producer_deviation));
        lines.push(CheckLine {
            name: "atomlessness",
            pass: true,
            hard: false,
            detail: serde_json::to_value(atomlessness_diagnostic(&out))?,
        });
    }

    if let Some(pc) = &cfg.plan {
        let mu = io::load_measure(&pc.source)?;
        let nu = io::load_measure(&pc.target)?;
        let s = surplus_matrix(&mu, &nu, &pc.family, x_vec(&pc.x).view())?;
        let plan = TransportPlan::from_entries(mu.len(), nu.len(), io::load_plan(&pc.plan)?, &s)?;
        let err = plan.marginal_error(mu.weights(), nu.weights());
        lines.push(CheckLine {
            name: "plan_feasibility",
            pass: err <= MARGINAL_TOL,
            hard: true,
            detail: json!({ "marginal_error": err }),
        });
        let cyc = check_cyclical_monotonicity(&plan, &s, 2, pc.trials, run.config.seed)?;
        lines.push(CheckLine {
            name: "cyclical_monotonicity",
            pass: cyc.violations == 0,
            hard: true,
            detail: serde_json::to_value(&cyc)?,
        });
    }

    if let Some(tc) = &cfg.twist {
        tc.eps_grid.validate()?;
        tc.z_grid.validate()?;
        tc.family.validate()?;
        tc.family.check_dims(tc.x.len(), tc.eps_grid.dim(), tc.z_grid.dim())?;
        let rep = check_twist(&tc.family, x_vec(&tc.x).view(), &tc.eps_grid.points(), &tc.z_grid.points(), tc.threshold);
        lines.push(CheckLine { name: "twist", pass: rep.pass, hard: true, detail: serde_json::to_value(&rep)? });
    }

    if let Some(cc) = &cfg.convexity {
        cc.eps_grid.validate()?;
        let v = io::load_grid_function(&cc.function)?;
        let rep = is_zeta_convex(&v, &cc.family, x_vec(&cc.x).view(), &cc.eps_grid.points(), cc.tol, None)?;
        lines.push(CheckLine { name: "zeta_convexity", pass: rep.is_convex, hard: true, detail: serde_json::to_value(&rep)? });
    }

    if lines.is_empty() {
        return Err(Error::InvalidArgument("[check] names no artifacts to check".into()));
    }
    let pass = lines.iter().all(|l| l.pass || !l.hard);
    for l in &lines {
        println!("check {}: {}", l.name, if l.pass { "pass" } else { "FAIL" });
    }
    run.report("check_report.json", json!({ "checks": lines, "pass": pass }))?;
    Ok(code(pass))
}
