//! Command-line interface.
//!
//! Exit codes: 0 success, 1 domain error, 2 configuration error,
//! 3 verification failure. Every artifact starts with the tool version and
//! the echoed resolved configuration, so any output can be reproduced from
//! its own header.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{self, ConfigError, ScenarioConfig, WeightsConfig};
use crate::domain::Tokens;
use crate::engine::{run_monte_carlo, Scenario};
use crate::ledger::{read_dump, verify_dump, write_dump, DumpHeader};
use crate::metrics::{self, compare_solvers, compliance_curve, indices, participation_factors, weight_sweep, RunResult};

pub const TOOL: &str = "evcharge";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "evcharge", version, about = "Simulate EV-to-charging-station assignment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print progress to standard error.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo runs of one scenario; prints i_ct, i_ep and i_d.
    Run(RunArgs),
    /// The indices at every convex weight triple.
    Sweep(SweepArgs),
    /// Centralized versus decentralized assignment on the same seeds.
    Compare(RunArgs),
    /// Mean charging time against fixed compliance levels.
    ComplianceCurve(CurveArgs),
    /// Validate a scenario and print the resolved configuration.
    ValidateConfig(ConfigArgs),
    /// Verify a ledger dump offline.
    ReplayLedger {
        /// Ledger dump (line-delimited JSON).
        dump: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Scenario file (TOML).
    pub config: PathBuf,
    /// Override a field by dotted path, e.g. `--set sim.horizon_s=3600`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory; defaults to `output.dir` from the scenario.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shorthand for `--set monte_carlo.runs=N`.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Shorthand for `--set monte_carlo.base_seed=S`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Grid divisions per unit; 10 gives the 66-point grid.
    #[arg(long)]
    pub divisions: Option<u32>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Runs per compliance level.
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compliance levels.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    pub q: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Config(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(cli: &Cli, stdout: &mut impl Write) -> Result<(), Failure> {
    let verbose = cli.verbose > 0;
    match &cli.command {
        Command::Run(args) => cmd_run(args, verbose, stdout),
        Command::Sweep(args) => cmd_sweep(args, verbose, stdout),
        Command::Compare(args) => cmd_compare(args, verbose, stdout),
        Command::ComplianceCurve(args) => cmd_compliance_curve(args, verbose, stdout),
        Command::ValidateConfig(args) => {
            let cfg = config::load(&args.config, &args.overrides)?;
            write!(stdout, "{}", cfg.echo()).map_err(domain)
        }
        Command::ReplayLedger { dump } => cmd_replay_ledger(dump, stdout),
    }
}

fn load(args: &ConfigArgs, runs: Option<usize>, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let mut overrides = args.overrides.clone();
    if let Some(n) = runs {
        overrides.push(format!("monte_carlo.runs={n}"));
    }
    if let Some(s) = seed {
        overrides.push(format!("monte_carlo.base_seed={s}"));
    }
    Ok(config::load(&args.config, &overrides)?)
}

fn out_dir(cfg: &ScenarioConfig, out: &Option<PathBuf>) -> Result<PathBuf, Failure> {
    let dir = match out {
        Some(d) => d.clone(),
        None => cfg.output.dir.clone(),
    };
    fs::create_dir_all(&dir).map_err(|e| domain(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

/// `# evcharge <version>` followed by the echoed configuration, each line
/// commented out.
fn artifact_header(cfg: &ScenarioConfig) -> String {
    let mut s = format!("# {TOOL} {VERSION}\n");
    for line in cfg.echo().lines() {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct RunColumn {
    run: u64,
}

/// Writes a commented header then `rows` as CSV with a column header.
fn write_csv<T: Serialize>(path: &Path, cfg: &ScenarioConfig, rows: impl IntoIterator<Item = T>) -> Result<(), Failure> {
    let io = |e: std::io::Error| domain(format!("cannot write {}: {e}", path.display()));
    let mut file = BufWriter::new(File::create(path).map_err(io)?);
    file.write_all(artifact_header(cfg).as_bytes()).map_err(io)?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row).map_err(|e| domain(format!("cannot write {}: {e}", path.display())))?;
    }
    w.flush().map_err(io)
}

fn progress(verbose: bool, msg: &str) {
    if verbose {
        eprintln!("{msg}");
    }
}

#[derive(Serialize)]
struct SummaryRow {
    run: u64,
    seed: u64,
    vehicles: usize,
    completed: usize,
    i_ct_min: Option<f64>,
    i_ep_eur_per_kwh: Option<f64>,
    i_d: Option<f64>,
    mean_wait_steps: f64,
    defections: usize,
    delivered_kwh: f64,
}

#[derive(Serialize)]
struct ParticipationRow {
    station: u32,
    x: f64,
    y: f64,
    node: Option<u32>,
    kind: crate::domain::RenewableKind,
    participation: f64,
    renewable_generated_kwh: f64,
}

fn write_run_artifacts(cfg: &ScenarioConfig, dir: &Path, results: &[RunResult]) -> Result<(), Failure> {
    let out = &cfg.output;
    if out.wants("summary") {
        let rows = results.iter().map(|r| SummaryRow {
            run: r.run,
            seed: r.seed,
            vehicles: r.vehicles.len(),
            completed: r.completed().count(),
            i_ct_min: r.mean_charging_time_min(),
            i_ep_eur_per_kwh: r.energy_price(),
            i_d: r.mean_assigned_distance(),
            mean_wait_steps: metrics::mean_wait_steps(std::slice::from_ref(r)).0,
            defections: r.vehicles.iter().filter(|v| v.defected).count(),
            delivered_kwh: r.delivered_kwh,
        });
        write_csv(&dir.join("summary.csv"), cfg, rows)?;
    }
    if out.wants("vehicles") {
        let rows = results.iter().flat_map(|r| r.vehicles.iter().map(|v| (RunColumn { run: r.run }, v)));
        write_csv(&dir.join("vehicles.csv"), cfg, rows)?;
    }
    if out.wants("stations") {
        let rows = results.iter().flat_map(|r| r.samples.iter().map(|s| (RunColumn { run: r.run }, s)));
        write_csv(&dir.join("stations.csv"), cfg, rows)?;
    }
    if out.wants("participation") {
        let factors = participation_factors(results);
        let generation = metrics::renewable_generation(results);
        let rows = results[0].stations.iter().map(|s| ParticipationRow {
            station: s.id,
            x: s.x,
            y: s.y,
            node: s.node,
            kind: s.kind,
            participation: factors[&s.id],
            renewable_generated_kwh: generation[&s.id],
        });
        write_csv(&dir.join("participation.csv"), cfg, rows)?;
    }
    if out.wants("controller") && results.iter().any(|r| !r.controller.is_empty()) {
        let rows = results.iter().flat_map(|r| r.controller.iter().map(|c| (RunColumn { run: r.run }, c)));
        write_csv(&dir.join("controller.csv"), cfg, rows)?;
    }
    if out.wants("ledger") {
        let ldir = dir.join("ledger");
        fs::create_dir_all(&ldir).map_err(domain)?;
        for r in results {
            let Some(ledger) = &r.ledger else { continue };
            let header = DumpHeader {
                tool: TOOL.into(),
                version: VERSION.into(),
                run: r.run,
                treasury_supply: Tokens::from_tokens(cfg.ledger.treasury_supply_tokens),
                pow_delay: cfg.ledger.pow_delay_steps,
                config: cfg.echo(),
            };
            let path = ldir.join(format!("run-{:03}.jsonl", r.run));
            let mut f = BufWriter::new(File::create(&path).map_err(domain)?);
            write_dump(&mut f, &header, ledger.tangle().transactions()).map_err(domain)?;
            f.flush().map_err(domain)?;
        }
    }
    if out.wants("events") {
        let edir = dir.join("events");
        fs::create_dir_all(&edir).map_err(domain)?;
        for r in results {
            let path = edir.join(format!("run-{:03}.jsonl", r.run));
            let mut f = BufWriter::new(File::create(&path).map_err(domain)?);
            let header = serde_json::json!({"header": {"tool": TOOL, "version": VERSION, "run": r.run, "config": cfg.echo()}});
            writeln!(f, "{header}").map_err(domain)?;
            for e in &r.events {
                serde_json::to_writer(&mut f, e).map_err(domain)?;
                writeln!(f).map_err(domain)?;
            }
            f.flush().map_err(domain)?;
        }
    }
    Ok(())
}

fn cmd_run(args: &RunArgs, verbose: bool, stdout: &mut impl Write) -> Result<(), Failure> {
    let cfg = load(&args.config, args.runs, args.seed)?;
    let dir = out_dir(&cfg, &args.out)?;
    let scenario = Scenario::prepare(&cfg).map_err(domain)?;
    progress(verbose, &format!("running {} runs from seed {}", cfg.monte_carlo.runs, cfg.monte_carlo.base_seed));
    let results = run_monte_carlo(&scenario, cfg.monte_carlo.runs, cfg.monte_carlo.base_seed).map_err(domain)?;
    let ix = indices(&results).map_err(domain)?;
    write_run_artifacts(&cfg, &dir, &results)?;
    let io = |e| domain(e);
    writeln!(stdout, "i_ct = {:.4} min", ix.i_ct_min).map_err(io)?;
    writeln!(stdout, "i_ep = {:.4} EUR/kWh", ix.i_ep_eur_per_kwh).map_err(io)?;
    writeln!(stdout, "i_d = {:.4}", ix.i_d).map_err(io)?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, verbose: bool, stdout: &mut impl Write) -> Result<(), Failure> {
    let cfg = load(&args.run.config, args.run.runs, args.run.seed)?;
    let divisions = args.divisions.unwrap_or(match cfg.weights {
        WeightsConfig::Sweep { divisions } => divisions,
        _ => 10,
    });
    let dir = out_dir(&cfg, &args.run.out)?;
    progress(verbose, &format!("sweeping {divisions} divisions x {} runs", cfg.monte_carlo.runs));
    let rows = weight_sweep(&cfg, divisions, cfg.monte_carlo.runs, cfg.monte_carlo.base_seed).map_err(domain)?;
    writeln!(stdout, "{} weight triples written to {}", rows.len(), dir.join("sweep.csv").display()).map_err(domain)?;
    write_csv(&dir.join("sweep.csv"), &cfg, rows)
}

#[derive(Serialize)]
struct SeriesRow {
    time: u64,
    centralized_min: f64,
    decentralized_min: f64,
}

fn cmd_compare(args: &RunArgs, verbose: bool, stdout: &mut impl Write) -> Result<(), Failure> {
    let cfg = load(&args.config, args.runs, args.seed)?;
    let dir = out_dir(&cfg, &args.out)?;
    progress(verbose, &format!("comparing solvers over {} runs", cfg.monte_carlo.runs));
    let c = compare_solvers(&cfg, cfg.monte_carlo.runs, cfg.monte_carlo.base_seed).map_err(domain)?;
    let series = c.series.iter().map(|&(time, a, b)| SeriesRow { time, centralized_min: a, decentralized_min: b });
    write_csv(&dir.join("compare_series.csv"), &cfg, series)?;
    #[derive(Serialize)]
    struct Row {
        runs: usize,
        centralized_i_ct_min: f64,
        decentralized_i_ct_min: f64,
        ratio: f64,
        rmse_min: f64,
        mean_wait_steps: f64,
        assignments: usize,
    }
    let row = Row {
        runs: c.runs,
        centralized_i_ct_min: c.centralized.i_ct_min,
        decentralized_i_ct_min: c.decentralized.i_ct_min,
        ratio: c.ratio,
        rmse_min: c.rmse_min,
        mean_wait_steps: c.mean_wait_steps,
        assignments: c.assignments,
    };
    write_csv(&dir.join("compare.csv"), &cfg, [row])?;
    let io = |e| domain(e);
    writeln!(stdout, "centralized i_ct = {:.4} min", c.centralized.i_ct_min).map_err(io)?;
    writeln!(stdout, "decentralized i_ct = {:.4} min", c.decentralized.i_ct_min).map_err(io)?;
    writeln!(stdout, "ratio = {:.4}", c.ratio).map_err(io)?;
    writeln!(stdout, "rmse = {:.4} min", c.rmse_min).map_err(io)?;
    writeln!(stdout, "mean wait = {:.4} steps over {} assignments", c.mean_wait_steps, c.assignments).map_err(io)?;
    Ok(())
}

fn cmd_compliance_curve(args: &CurveArgs, verbose: bool, stdout: &mut impl Write) -> Result<(), Failure> {
    let cfg = load(&args.config, Some(args.runs), args.seed)?;
    if let Some(bad) = args.q.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(ConfigError { diagnostics: vec![config::FieldError { path: "--q".into(), message: format!("{bad} is outside [0, 1]") }] }.into());
    }
    let dir = out_dir(&cfg, &args.out)?;
    progress(verbose, &format!("{} compliance levels x {} runs", args.q.len(), args.runs));
    let curve = compliance_curve(&cfg, &args.q, args.runs, cfg.monte_carlo.base_seed).map_err(domain)?;
    for p in &curve {
        writeln!(stdout, "q = {:.2}: i_ct = {:.4} +/- {:.4} min", p.q, p.i_ct_min, p.i_ct_stderr).map_err(domain)?;
    }
    write_csv(&dir.join("compliance_curve.csv"), &cfg, curve)
}

fn cmd_replay_ledger(path: &Path, stdout: &mut impl Write) -> Result<(), Failure> {
    let file = File::open(path).map_err(|e| domain(format!("cannot open {}: {e}", path.display())))?;
    let (header, txs) = read_dump(BufReader::new(file)).map_err(Failure::Verification)?;
    let report = verify_dump(&header, &txs);
    let io = |e| domain(e);
    writeln!(stdout, "transactions = {}", report.transactions).map_err(io)?;
    writeln!(stdout, "escrows returned = {}, forfeited = {}, open = {}", report.returned, report.forfeited, report.open).map_err(io)?;
    if report.is_ok() {
        writeln!(stdout, "ledger OK").map_err(io)?;
        Ok(())
    } else {
        for v in &report.violations {
            writeln!(stdout, "violation: {v}").map_err(io)?;
        }
        Err(Failure::Verification(format!("{} violation(s)", report.violations.len())))
    }
}
