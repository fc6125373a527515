//! Repeated seeded runs over a directory of instances, reported as one CSV.
//!
//! Row types:
//! - `baseline`: one `k_max = 1` run of the same method per instance, the
//!   serial reference for `C_pct`;
//! - `detail`: one row per repetition;
//! - `aggregate`: per instance and method, mean `C_pct`, mean `T_s`,
//!   `P_pct`, `Best_pct` and the sample standard deviation `SD` of `C_pct`;
//! - `summary`: per method, the mean of the aggregate columns, with `P_pct`
//!   counted over all runs and `P_feasible_pct` over runs on instances where
//!   some team covers all tasks.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;

use palwabp::preprocess::{worker_sets, TaskSetCatalog, DEFAULT_ENTRY_LIMIT};
use palwabp::Instance;

use crate::{failure, load_instance, seconds, solve, CliError, CliResult, Method, SolveArgs};

pub const HEADER_COMMENT: &str =
    "# serial_ct is a same-method run with k_max = 1 and the base seed; C_pct = 100*(best_ct - serial_ct)/serial_ct";

pub const COLUMNS: [&str; 17] = [
    "row_type",
    "instance",
    "method",
    "seed",
    "k_max",
    "best_ct",
    "serial_ct",
    "C_pct",
    "T_s",
    "P_pct",
    "P_feasible_pct",
    "Best_pct",
    "SD",
    "parallel_found",
    "parallel_feasible",
    "effort",
    "n",
];

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Directory of instance files.
    pub dir: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["tabu", "brkga"])]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long = "kmax", default_value_t = 2)]
    pub k_max: usize,
    /// Repetition `r` uses seed `seed + r`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "time-limit")]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub generations: usize,
    #[arg(long = "max-idle", default_value_t = 1000)]
    pub max_idle: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// One solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub method: Method,
    pub seed: u64,
    pub k_max: usize,
    pub best_ct: f64,
    pub time_s: f64,
    pub parallel_found: bool,
    pub effort: usize,
}

/// Percentage change of `ct` against `serial`; `None` unless both are finite.
pub fn c_pct(ct: f64, serial: f64) -> Option<f64> {
    (ct.is_finite() && serial.is_finite() && serial > 0.0).then(|| 100.0 * (ct - serial) / serial)
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation (n − 1); 0 for a single value.
pub fn sample_sd(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub instance: String,
    pub method: Method,
    pub serial_ct: f64,
    pub c_pct: Option<f64>,
    pub time_s: f64,
    pub p_pct: f64,
    pub best_pct: Option<f64>,
    pub sd: Option<f64>,
    pub parallel_feasible: bool,
    pub n: usize,
}

pub fn aggregate(runs: &[RunRecord], serial_ct: f64, parallel_feasible: bool) -> Aggregate {
    let cs: Vec<f64> = runs.iter().filter_map(|r| c_pct(r.best_ct, serial_ct)).collect();
    let best = runs.iter().map(|r| r.best_ct).fold(f64::INFINITY, f64::min);
    let times: Vec<f64> = runs.iter().map(|r| r.time_s).collect();
    let found = runs.iter().filter(|r| r.parallel_found).count();
    Aggregate {
        instance: runs[0].instance.clone(),
        method: runs[0].method,
        serial_ct,
        c_pct: mean(&cs),
        time_s: mean(&times).unwrap_or(0.0),
        p_pct: 100.0 * found as f64 / runs.len() as f64,
        best_pct: c_pct(best, serial_ct),
        sd: sample_sd(&cs),
        parallel_feasible,
        n: runs.len(),
    }
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn instance_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

struct Job {
    instance: usize,
    method: Method,
    seed: u64,
    k_max: usize,
}

pub fn cmd_benchmark(a: &BenchmarkArgs, out: &mut dyn Write) -> CliResult {
    if a.reps == 0 || a.k_max == 0 || a.methods.is_empty() {
        return Err(CliError::Usage("--reps, --kmax and --methods must be non-empty".into()));
    }
    let files = instance_files(&a.dir)?;
    if files.is_empty() {
        return Err(CliError::Usage(format!("{}: no instance files", a.dir.display())));
    }
    let mut instances: Vec<(String, Instance, bool)> = Vec::new();
    for path in &files {
        match load_instance(path) {
            Ok(inst) => {
                let tasks = TaskSetCatalog::build(&inst);
                let feasible = !worker_sets(&inst, &tasks, DEFAULT_ENTRY_LIMIT).is_empty();
                let id = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                instances.push((id, inst, feasible));
            }
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", path.display());
            }
        }
    }
    if instances.is_empty() {
        return Err(CliError::Usage(format!("{}: no readable instances", a.dir.display())));
    }

    let mut jobs = Vec::new();
    for idx in 0..instances.len() {
        for &method in &a.methods {
            jobs.push(Job {
                instance: idx,
                method,
                seed: a.seed,
                k_max: 1,
            });
            for r in 0..a.reps as u64 {
                jobs.push(Job {
                    instance: idx,
                    method,
                    seed: a.seed + r,
                    k_max: a.k_max,
                });
            }
        }
    }
    let run = |job: &Job| -> CliResult<RunRecord> {
        let (id, inst, _) = &instances[job.instance];
        let args = SolveArgs {
            instance: PathBuf::new(),
            method: job.method,
            k_max: job.k_max,
            seed: job.seed,
            time_limit: a.time_limit,
            out: None,
            log: None,
            generations: a.generations,
            max_idle: a.max_idle,
            restarts: a.restarts,
        };
        let start = Instant::now();
        let report = solve(inst, &args)?;
        Ok(RunRecord {
            instance: id.clone(),
            method: job.method,
            seed: job.seed,
            k_max: job.k_max,
            best_ct: report.solution.combined_cycle_time(),
            time_s: seconds(start),
            parallel_found: report.solution.active_lines() >= 2,
            effort: report.effort,
        })
    };
    let results: Vec<CliResult<RunRecord>> = run_all(&jobs, run);

    let mut body = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut body);
        w.write_record(COLUMNS).map_err(failure)?;
        let mut summaries: Vec<(Method, Vec<Aggregate>)> = a.methods.iter().map(|&m| (m, Vec::new())).collect();
        let mut results = results.into_iter();
        for (id, _, feasible) in &instances {
            for &method in &a.methods {
                let baseline = results.next().expect("job order");
                let reps: Vec<CliResult<RunRecord>> = results.by_ref().take(a.reps).collect();
                let baseline = match baseline {
                    Ok(b) => b,
                    Err(e) => {
                        eprintln!("warning: {id} {}: baseline failed: {e}", method.name());
                        continue;
                    }
                };
                let runs: Vec<RunRecord> = reps
                    .into_iter()
                    .filter_map(|r| r.map_err(|e| eprintln!("warning: {id} {}: {e}", method.name())).ok())
                    .collect();
                let serial = baseline.best_ct;
                w.write_record([
                    "baseline",
                    id,
                    method.name(),
                    &baseline.seed.to_string(),
                    "1",
                    &fmt(Some(serial)),
                    &fmt(Some(serial)),
                    "",
                    &fmt(Some(baseline.time_s)),
                    "",
                    "",
                    "",
                    "",
                    &u8::from(baseline.parallel_found).to_string(),
                    &u8::from(*feasible).to_string(),
                    &baseline.effort.to_string(),
                    "1",
                ])
                .map_err(failure)?;
                for r in &runs {
                    w.write_record([
                        "detail",
                        id,
                        method.name(),
                        &r.seed.to_string(),
                        &r.k_max.to_string(),
                        &fmt(Some(r.best_ct)),
                        &fmt(Some(serial)),
                        &fmt(c_pct(r.best_ct, serial)),
                        &fmt(Some(r.time_s)),
                        "",
                        "",
                        "",
                        "",
                        &u8::from(r.parallel_found).to_string(),
                        &u8::from(*feasible).to_string(),
                        &r.effort.to_string(),
                        "1",
                    ])
                    .map_err(failure)?;
                }
                if runs.is_empty() {
                    continue;
                }
                let agg = aggregate(&runs, serial, *feasible);
                w.write_record([
                    "aggregate",
                    id,
                    method.name(),
                    "",
                    &a.k_max.to_string(),
                    "",
                    &fmt(Some(serial)),
                    &fmt(agg.c_pct),
                    &fmt(Some(agg.time_s)),
                    &fmt(Some(agg.p_pct)),
                    "",
                    &fmt(agg.best_pct),
                    &fmt(agg.sd),
                    "",
                    &u8::from(*feasible).to_string(),
                    "",
                    &agg.n.to_string(),
                ])
                .map_err(failure)?;
                if let Some((_, list)) = summaries.iter_mut().find(|(m, _)| *m == method) {
                    list.push(agg);
                }
            }
        }
        for (method, aggs) in &summaries {
            if aggs.is_empty() {
                continue;
            }
            let s = summarize(aggs);
            w.write_record([
                "summary",
                "",
                method.name(),
                "",
                &a.k_max.to_string(),
                "",
                "",
                &fmt(s.c_pct),
                &fmt(Some(s.time_s)),
                &fmt(Some(s.p_pct)),
                &fmt(s.p_feasible_pct),
                &fmt(s.best_pct),
                &fmt(s.sd),
                "",
                "",
                "",
                &aggs.len().to_string(),
            ])
            .map_err(failure)?;
        }
        w.flush().map_err(failure)?;
    }
    let mut text = format!("{HEADER_COMMENT}\n");
    text.push_str(&String::from_utf8(body).map_err(failure)?);
    fs::write(&a.out, text).map_err(|e| failure(format!("{}: {e}", a.out.display())))?;
    let _ = writeln!(
        out,
        "instances {} methods {} runs {}",
        instances.len(),
        a.methods.len(),
        jobs.len()
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub c_pct: Option<f64>,
    pub time_s: f64,
    pub p_pct: f64,
    pub p_feasible_pct: Option<f64>,
    pub best_pct: Option<f64>,
    pub sd: Option<f64>,
}

pub fn summarize(aggs: &[Aggregate]) -> Summary {
    let pick = |f: &dyn Fn(&Aggregate) -> Option<f64>| -> Vec<f64> { aggs.iter().filter_map(f).collect() };
    let runs: usize = aggs.iter().map(|g| g.n).sum();
    let found: f64 = aggs.iter().map(|g| g.p_pct * g.n as f64 / 100.0).sum();
    let feasible: Vec<&Aggregate> = aggs.iter().filter(|g| g.parallel_feasible).collect();
    let feasible_runs: usize = feasible.iter().map(|g| g.n).sum();
    let feasible_found: f64 = feasible.iter().map(|g| g.p_pct * g.n as f64 / 100.0).sum();
    Summary {
        c_pct: mean(&pick(&|g| g.c_pct)),
        time_s: mean(&pick(&|g| Some(g.time_s))).unwrap_or(0.0),
        p_pct: 100.0 * found / runs as f64,
        p_feasible_pct: (feasible_runs > 0).then(|| 100.0 * feasible_found / feasible_runs as f64),
        best_pct: mean(&pick(&|g| g.best_pct)),
        sd: mean(&pick(&|g| g.sd)),
    }
}

fn run_all<F>(jobs: &[Job], run: F) -> Vec<CliResult<RunRecord>>
where
    F: Fn(&Job) -> CliResult<RunRecord> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(run).collect()
    }
}
