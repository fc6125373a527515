//! Command implementations behind the `palwabp` binary.
//!
//! Every command writes its report to the given output stream and returns
//! a [`CliError`] carrying the process exit code on failure: 1 for a failed
//! solve or verification, 2 for usage errors, 3 for method guards (oracle
//! size limit, catalog overflow).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use palwabp::brkga::{self, BrkgaParams};
use palwabp::exact::{self, milp, EnumError, OracleError};
use palwabp::io::{self, GeneratorConfig};
use palwabp::preprocess::{worker_sets, TaskSetCatalog, DEFAULT_ENTRY_LIMIT};
use palwabp::solution_io::{parse_solution, write_solution};
use palwabp::tabu::{self, TabuParams};
use palwabp::{validate_solution, Instance, ParallelSolution};

pub mod benchmark;

/// Tolerance, in seconds, for the combined cycle time claimed by a solution file.
pub const OBJECTIVE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Failure(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Guard(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Guard(_) => 3,
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "palwabp",
    version,
    about = "Parallel assembly line worker assignment and balancing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a worker instance from a SALBP base file.
    Generate(GenerateArgs),
    /// Solve an instance and write a solution file.
    Solve(SolveArgs),
    /// Check a solution file against its instance.
    Verify(VerifyArgs),
    /// Run repeated seeded solves over a directory of instances.
    Benchmark(benchmark::BenchmarkArgs),
    /// Write the linearised model as an LP file.
    ExportMilp(ExportArgs),
    /// Check a `name value` variable map against the model.
    VerifyMilp(VerifyMilpArgs),
    /// Print task windows and covering worker teams.
    Catalog(CatalogArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Tabu,
    Brkga,
    Enum,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Tabu => "tabu",
            Method::Brkga => "brkga",
            Method::Enum => "enum",
            Method::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// SALBP base file (.alb or .IN2).
    #[arg(long)]
    pub base: PathBuf,
    /// Feasible times are drawn uniformly from [t, factor·t].
    #[arg(long, default_value_t = 2)]
    pub factor: u64,
    /// Probability of a worker-task incompatibility, in [0, 1).
    #[arg(long, default_value_t = 0.1)]
    pub rate: f64,
    #[arg(long)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "tabu")]
    pub method: Method,
    #[arg(long = "kmax", default_value_t = 2)]
    pub k_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock budget in seconds (tabu, brkga).
    #[arg(long = "time-limit")]
    pub time_limit: Option<f64>,
    /// Solution file; printed to standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Search log CSV (tabu, brkga).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// BRKGA generation budget.
    #[arg(long, default_value_t = 1000)]
    pub generations: usize,
    /// Tabu iterations without improvement before a restart.
    #[arg(long = "max-idle", default_value_t = 1000)]
    pub max_idle: usize,
    /// Tabu restarts.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub instance: PathBuf,
    pub solution: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub instance: PathBuf,
    #[arg(long = "kmax", default_value_t = 2)]
    pub k_max: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyMilpArgs {
    pub instance: PathBuf,
    pub assignment: PathBuf,
    #[arg(long = "kmax", default_value_t = 2)]
    pub k_max: usize,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    pub instance: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ENTRY_LIMIT)]
    pub limit: usize,
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Verify(a) => cmd_verify(&a.instance, &a.solution, out),
        Command::Benchmark(a) => benchmark::cmd_benchmark(&a, out),
        Command::ExportMilp(a) => cmd_export_milp(&a, out),
        Command::VerifyMilp(a) => cmd_verify_milp(&a, out),
        Command::Catalog(a) => cmd_catalog(&a, out),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| failure(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| failure(format!("{}: {e}", path.display())))
}

pub fn load_instance(path: &Path) -> CliResult<Instance> {
    io::parse_instance(&read(path)?).map_err(|e| failure(format!("{}: {e}", path.display())))
}

pub fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> CliResult {
    let cfg = GeneratorConfig {
        time_factor: a.factor,
        infeasibility_rate: a.rate,
        worker_count: a.workers,
        seed: a.seed,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let base = io::parse_salbp(&read(&a.base)?).map_err(|e| failure(format!("{}: {e}", a.base.display())))?;
    let generated = io::generate_times(&base.times, &cfg).map_err(failure)?;
    let infeasible = generated.times.iter().flatten().filter(|c| c.is_none()).count();
    let repaired = generated.repaired.len();
    let instance = io::generate_instance(&base, &cfg).map_err(failure)?;
    write_file(&a.out, &io::write_instance(&instance))?;
    let _ = writeln!(
        out,
        "tasks {} workers {} infeasible {} repaired {}",
        instance.task_count(),
        instance.worker_count(),
        infeasible,
        repaired
    );
    Ok(())
}

/// What a solve produced besides the solution itself.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: ParallelSolution,
    pub log_csv: Option<String>,
    /// Tabu restarts or BRKGA generations.
    pub effort: usize,
    /// Whether any team covering all tasks exists (tabu, enum), i.e. a
    /// parallel layout is possible at all.
    pub parallel_feasible: Option<bool>,
}

pub fn solve(instance: &Instance, a: &SolveArgs) -> CliResult<SolveReport> {
    if a.k_max == 0 {
        return Err(CliError::Usage("--kmax must be at least 1".into()));
    }
    let time_limit = match a.time_limit {
        Some(t) if !(t > 0.0 && t.is_finite()) => return Err(CliError::Usage("--time-limit must be positive".into())),
        t => t.map(Duration::from_secs_f64),
    };
    match a.method {
        Method::Tabu => {
            let params = TabuParams {
                k_max: a.k_max,
                seed: a.seed,
                time_limit,
                max_idle_iterations: a.max_idle,
                max_restarts: a.restarts,
                ..TabuParams::default()
            };
            let o = tabu::tabu_search(instance, &params).map_err(failure)?;
            Ok(SolveReport {
                log_csv: Some(tabu::log_csv(&o.log)),
                effort: o.restarts,
                parallel_feasible: Some(!o.catalog_empty),
                solution: o.solution,
            })
        }
        Method::Brkga => {
            let params = BrkgaParams {
                k_max: a.k_max,
                seed: a.seed,
                max_generations: a.generations,
                time_limit: time_limit.or(BrkgaParams::default().time_limit),
                ..BrkgaParams::default()
            };
            let o = brkga::brkga_solve(instance, &params).map_err(failure)?;
            Ok(SolveReport {
                log_csv: Some(brkga::log_csv(&o.log)),
                effort: o.generations,
                parallel_feasible: None,
                solution: o.solution,
            })
        }
        Method::Enum => {
            let tasks = TaskSetCatalog::build(instance);
            let catalog = worker_sets(instance, &tasks, DEFAULT_ENTRY_LIMIT);
            let solution = exact::enumerate_default(instance, a.k_max, &catalog).map_err(|e| match e {
                EnumError::Overflow => CliError::Guard(e.to_string()),
                other => failure(other),
            })?;
            Ok(SolveReport {
                solution,
                log_csv: None,
                effort: catalog.teams().len(),
                parallel_feasible: Some(!catalog.is_empty()),
            })
        }
        Method::Oracle => {
            let solution = exact::exhaustive_oracle(instance, a.k_max).map_err(|e| match e {
                OracleError::TooLarge { .. } => CliError::Guard(e.to_string()),
                other => failure(other),
            })?;
            Ok(SolveReport {
                solution,
                log_csv: None,
                effort: 0,
                parallel_feasible: None,
            })
        }
    }
}

pub fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> CliResult {
    let instance = load_instance(&a.instance)?;
    let report = solve(&instance, a)?;
    let validation = validate_solution(&instance, &report.solution);
    if !validation.is_ok() {
        return Err(failure(format!("solver produced an invalid solution: {validation}")));
    }
    let text = write_solution(&instance, &report.solution);
    match &a.out {
        Some(path) => {
            write_file(path, &text)?;
            let _ = writeln!(
                out,
                "method {} lines {} combined {:.6} throughput {:.6}",
                a.method.name(),
                report.solution.active_lines(),
                report.solution.combined_cycle_time(),
                report.solution.combined_throughput()
            );
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    if let (Some(path), Some(csv)) = (&a.log, &report.log_csv) {
        write_file(path, csv)?;
    }
    Ok(())
}

pub fn cmd_verify(instance_path: &Path, solution_path: &Path, out: &mut dyn Write) -> CliResult {
    let instance = load_instance(instance_path)?;
    let doc = parse_solution(&instance, &read(solution_path)?)
        .map_err(|e| failure(format!("{}: {e}", solution_path.display())))?;
    let report = validate_solution(&instance, &doc.solution);
    let mut problems: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    let actual = doc.solution.combined_cycle_time();
    if !(actual.is_finite() && (actual - doc.claimed_combined).abs() <= OBJECTIVE_TOLERANCE) {
        problems.push(format!(
            "objective mismatch: claimed {} but lines give {actual:.6}",
            doc.claimed_combined
        ));
    }
    if problems.is_empty() {
        let _ = writeln!(out, "ok combined {actual:.6}");
        Ok(())
    } else {
        Err(failure(problems.join("\n")))
    }
}

pub fn cmd_export_milp(a: &ExportArgs, out: &mut dyn Write) -> CliResult {
    let instance = load_instance(&a.instance)?;
    let model = milp::MilpModel::build(&instance, a.k_max).map_err(|e| CliError::Usage(e.to_string()))?;
    let lp = model.to_lp();
    match &a.out {
        Some(path) => {
            write_file(path, &lp)?;
            let _ = writeln!(out, "variables {} rows {}", model.variables.len(), model.rows.len());
        }
        None => {
            let _ = out.write_all(lp.as_bytes());
        }
    }
    Ok(())
}

pub fn cmd_verify_milp(a: &VerifyMilpArgs, out: &mut dyn Write) -> CliResult {
    let instance = load_instance(&a.instance)?;
    let map = milp::parse_assignment(&read(&a.assignment)?).map_err(failure)?;
    let report = milp::verify_milp_solution(&instance, a.k_max, &map).map_err(failure)?;
    if !report.feasible {
        let rows: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(failure(format!("infeasible:\n{}", rows.join("\n"))));
    }
    let _ = writeln!(
        out,
        "feasible objective {:.9} consistent {}",
        report.objective, report.objective_consistent
    );
    Ok(())
}

pub fn cmd_catalog(a: &CatalogArgs, out: &mut dyn Write) -> CliResult {
    let instance = load_instance(&a.instance)?;
    let tasks = TaskSetCatalog::build(&instance);
    for w in 0..instance.worker_count() {
        let labels: Vec<String> = tasks.for_worker(w).iter().map(|t| t.label()).collect();
        let _ = writeln!(out, "{}: {}", instance.workers()[w], labels.join(" "));
    }
    let catalog = worker_sets(&instance, &tasks, a.limit);
    let _ = write!(out, "{}", catalog.dump(&instance, &tasks));
    let _ = writeln!(
        out,
        "entries {} teams {} status {:?}",
        catalog.entries().len(),
        catalog.teams().len(),
        catalog.status()
    );
    Ok(())
}

/// Applies `PALWABP_THREADS` to the global pool; ignored when unset or invalid.
pub fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("PALWABP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Elapsed seconds since `start`.
pub(crate) fn seconds(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}
