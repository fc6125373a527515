//! Domain model, feasibility validation and the combined objective.

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::team::{Team, MAX_WORKERS};

/// Integer duration in seconds.
pub type Time = u64;

/// Seconds per hour, used to express throughput in products per hour.
pub const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("instance has no tasks")]
    NoTasks,
    #[error("instance has no workers")]
    NoWorkers,
    #[error("too many workers: {0} (at most {MAX_WORKERS})")]
    TooManyWorkers(usize),
    #[error("duplicate worker name {0:?}")]
    DuplicateWorker(String),
    #[error("time matrix shape mismatch for worker {worker}: expected {expected} entries, got {got}")]
    Shape { worker: usize, expected: usize, got: usize },
    #[error("precedence refers to unknown task {}", .0 + 1)]
    UnknownTask(usize),
    #[error("precedence cycle through task {}", .0 + 1)]
    PrecedenceCycle(usize),
    #[error("time for worker {} on task {} must be positive", .worker + 1, .task + 1)]
    NonPositiveTime { worker: usize, task: usize },
    #[error("uncoverable task {}: no worker can execute it", .0 + 1)]
    UncoverableTask(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("no active lines")]
    NoActiveLines,
    #[error("invalid cycle time {0}")]
    InvalidCycleTime(f64),
    #[error("empty worker subset")]
    EmptyTeam,
    #[error("worker {} cannot execute task {}", .worker + 1, .task + 1)]
    Incapable { worker: usize, task: usize },
    #[error("unknown worker index {0}")]
    UnknownWorker(usize),
    #[error("unknown task index {0}")]
    UnknownTask(usize),
}

/// Tasks, precedence DAG, workers and the worker × task time matrix.
///
/// Tasks and workers are addressed by 0-based index; the text formats use
/// 1-based task ids. Precedence is kept transitively reduced, with the full
/// partial order available through [`Instance::precedes`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    task_count: usize,
    edges: Vec<(usize, usize)>,
    workers: Vec<String>,
    times: Vec<Vec<Option<Time>>>,
    successors: Vec<Vec<usize>>,
    predecessors: Vec<Vec<usize>>,
    descendants: Vec<FixedBitSet>,
    ancestors: Vec<FixedBitSet>,
    topo_order: Vec<usize>,
    min_feasible_time: Time,
}

impl Instance {
    /// Builds and validates an instance. `edges` may contain redundant
    /// (transitive) pairs and duplicates; they are reduced here.
    pub fn new(
        task_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        workers: Vec<String>,
        times: Vec<Vec<Option<Time>>>,
    ) -> Result<Self, InstanceError> {
        if task_count == 0 {
            return Err(InstanceError::NoTasks);
        }
        if workers.is_empty() {
            return Err(InstanceError::NoWorkers);
        }
        if workers.len() > MAX_WORKERS {
            return Err(InstanceError::TooManyWorkers(workers.len()));
        }
        let mut seen = HashMap::new();
        for (w, name) in workers.iter().enumerate() {
            if seen.insert(name.clone(), w).is_some() {
                return Err(InstanceError::DuplicateWorker(name.clone()));
            }
        }
        if times.len() != workers.len() {
            return Err(InstanceError::Shape {
                worker: times.len().min(workers.len()),
                expected: task_count,
                got: 0,
            });
        }
        for (w, row) in times.iter().enumerate() {
            if row.len() != task_count {
                return Err(InstanceError::Shape {
                    worker: w,
                    expected: task_count,
                    got: row.len(),
                });
            }
            for (i, t) in row.iter().enumerate() {
                if *t == Some(0) {
                    return Err(InstanceError::NonPositiveTime { worker: w, task: i });
                }
            }
        }
        for i in 0..task_count {
            if times.iter().all(|row| row[i].is_none()) {
                return Err(InstanceError::UncoverableTask(i));
            }
        }

        let mut direct = vec![Vec::new(); task_count];
        for (a, b) in edges {
            if a >= task_count {
                return Err(InstanceError::UnknownTask(a));
            }
            if b >= task_count {
                return Err(InstanceError::UnknownTask(b));
            }
            if a == b {
                return Err(InstanceError::PrecedenceCycle(a));
            }
            direct[a].push(b);
        }
        for list in &mut direct {
            list.sort_unstable();
            list.dedup();
        }
        let topo_order = topological_order(&direct)?;

        let mut descendants = vec![FixedBitSet::with_capacity(task_count); task_count];
        for &i in topo_order.iter().rev() {
            let mut acc = FixedBitSet::with_capacity(task_count);
            for &j in &direct[i] {
                acc.insert(j);
                acc.union_with(&descendants[j]);
            }
            descendants[i] = acc;
        }
        let mut ancestors = vec![FixedBitSet::with_capacity(task_count); task_count];
        for (i, desc) in descendants.iter().enumerate() {
            for j in desc.ones() {
                ancestors[j].insert(i);
            }
        }

        // j is a redundant successor of i if it is reachable via another direct successor.
        let mut successors = vec![Vec::new(); task_count];
        let mut predecessors = vec![Vec::new(); task_count];
        let mut reduced = Vec::new();
        for i in 0..task_count {
            for &j in &direct[i] {
                let redundant = direct[i].iter().any(|&k| k != j && descendants[k].contains(j));
                if !redundant {
                    successors[i].push(j);
                    predecessors[j].push(i);
                    reduced.push((i, j));
                }
            }
        }
        reduced.sort_unstable();

        let min_feasible_time = times
            .iter()
            .flat_map(|row| row.iter().flatten())
            .copied()
            .min()
            .expect("every task has a feasible entry");

        Ok(Instance {
            task_count,
            edges: reduced,
            workers,
            times,
            successors,
            predecessors,
            descendants,
            ancestors,
            topo_order,
            min_feasible_time,
        })
    }

    pub fn task_count(&self) -> usize {
        self.task_count
    }

    pub fn worker_count(&self) -> usize {
        self.workers.len()
    }

    pub fn workers(&self) -> &[String] {
        &self.workers
    }

    pub fn worker_index(&self, name: &str) -> Option<usize> {
        self.workers.iter().position(|w| w == name)
    }

    pub fn all_workers(&self) -> Team {
        Team::full(self.workers.len())
    }

    /// Transitively reduced precedence pairs, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn times(&self) -> &[Vec<Option<Time>>] {
        &self.times
    }

    pub fn time(&self, worker: usize, task: usize) -> Option<Time> {
        self.times[worker][task]
    }

    pub fn can_do(&self, worker: usize, task: usize) -> bool {
        self.times[worker][task].is_some()
    }

    /// Immediate successors (reduced graph).
    pub fn successors(&self, task: usize) -> &[usize] {
        &self.successors[task]
    }

    /// Immediate predecessors (reduced graph).
    pub fn predecessors(&self, task: usize) -> &[usize] {
        &self.predecessors[task]
    }

    /// All tasks that must come after `task`.
    pub fn descendants(&self, task: usize) -> &FixedBitSet {
        &self.descendants[task]
    }

    /// All tasks that must come before `task`.
    pub fn ancestors(&self, task: usize) -> &FixedBitSet {
        &self.ancestors[task]
    }

    /// `a` must be executed before `b` (strict partial order).
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.descendants[a].contains(b)
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// Smallest feasible entry of the time matrix.
    pub fn min_feasible_time(&self) -> Time {
        self.min_feasible_time
    }

    /// Tasks worker `w` cannot execute (`I_w`).
    pub fn incapable_tasks(&self, worker: usize) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.task_count);
        for (i, t) in self.times[worker].iter().enumerate() {
            if t.is_none() {
                set.insert(i);
            }
        }
        set
    }

    /// `Σ_i max_w p_wi` over feasible entries; no line ever needs more.
    pub fn max_total_time(&self) -> Time {
        (0..self.task_count)
            .map(|i| self.times.iter().filter_map(|row| row[i]).max().unwrap_or(0))
            .sum()
    }
}

fn topological_order(direct: &[Vec<usize>]) -> Result<Vec<usize>, InstanceError> {
    let n = direct.len();
    let mut indegree = vec![0usize; n];
    for list in direct {
        for &j in list {
            indegree[j] += 1;
        }
    }
    // Smallest ready index first keeps the order canonical.
    let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
        (0..n).filter(|&i| indegree[i] == 0).map(std::cmp::Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(std::cmp::Reverse(i)) = ready.pop() {
        order.push(i);
        for &j in &direct[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(std::cmp::Reverse(j));
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(InstanceError::PrecedenceCycle(stuck));
    }
    Ok(order)
}

/// One station: exactly one worker and an ordered (possibly empty) task list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Station {
    pub worker: usize,
    pub tasks: Vec<usize>,
}

/// One complete serial line.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LineSolution {
    pub stations: Vec<Station>,
    pub cycle_time: Time,
}

impl LineSolution {
    /// Builds a line and sets its cycle time from the station loads.
    pub fn from_stations(instance: &Instance, stations: Vec<Station>) -> Result<Self, CoreError> {
        let mut line = LineSolution {
            stations,
            cycle_time: 0,
        };
        line.cycle_time = evaluate_line(instance, &line)?.cycle_time;
        Ok(line)
    }

    pub fn team(&self) -> Team {
        self.stations.iter().map(|s| s.worker).collect()
    }
}

/// Workers split over `1..=k_max` independent lines.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParallelSolution {
    pub lines: Vec<LineSolution>,
    pub k_max: usize,
}

impl ParallelSolution {
    /// Products per second, `Σ 1/C_k`.
    pub fn throughput_rate(&self) -> f64 {
        self.lines
            .iter()
            .filter(|l| l.cycle_time > 0)
            .map(|l| 1.0 / l.cycle_time as f64)
            .sum()
    }

    /// `1 / Σ 1/C_k`, infinite when there is no active line.
    pub fn combined_cycle_time(&self) -> f64 {
        let rate = self.throughput_rate();
        if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        }
    }

    /// Products per hour.
    pub fn combined_throughput(&self) -> f64 {
        self.throughput_rate() * SECONDS_PER_HOUR
    }

    /// Lines with at least one station.
    pub fn active_lines(&self) -> usize {
        self.lines.iter().filter(|l| !l.stations.is_empty()).count()
    }

    pub fn teams(&self) -> Vec<Team> {
        self.lines.iter().map(LineSolution::team).collect()
    }
}

/// `1 / Σ (1 / ct)`.
pub fn combined_cycle_time(line_cycle_times: &[f64]) -> Result<f64, CoreError> {
    if line_cycle_times.is_empty() {
        return Err(CoreError::NoActiveLines);
    }
    let mut rate = 0.0;
    for &ct in line_cycle_times {
        if !(ct.is_finite() && ct > 0.0) {
            return Err(CoreError::InvalidCycleTime(ct));
        }
        rate += 1.0 / ct;
    }
    Ok(1.0 / rate)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineEvaluation {
    pub loads: Vec<Time>,
    pub cycle_time: Time,
}

/// Station loads and cycle time of a line.
pub fn evaluate_line(instance: &Instance, line: &LineSolution) -> Result<LineEvaluation, CoreError> {
    let mut loads = Vec::with_capacity(line.stations.len());
    for station in &line.stations {
        if station.worker >= instance.worker_count() {
            return Err(CoreError::UnknownWorker(station.worker));
        }
        let mut load = 0;
        for &task in &station.tasks {
            if task >= instance.task_count() {
                return Err(CoreError::UnknownTask(task));
            }
            load += instance.time(station.worker, task).ok_or(CoreError::Incapable {
                worker: station.worker,
                task,
            })?;
        }
        loads.push(load);
    }
    let cycle_time = loads.iter().copied().max().unwrap_or(0);
    Ok(LineEvaluation { loads, cycle_time })
}

/// Capacity bound and per-task best-time bound for a team, `None` when some
/// task has no capable worker in the team.
pub fn lower_bound(instance: &Instance, team: Team) -> Result<Option<Time>, CoreError> {
    if team.is_empty() {
        return Err(CoreError::EmptyTeam);
    }
    if let Some(w) = team.iter().find(|&w| w >= instance.worker_count()) {
        return Err(CoreError::UnknownWorker(w));
    }
    let mut total = 0;
    let mut longest = 0;
    for i in 0..instance.task_count() {
        let Some(best) = team.iter().filter_map(|w| instance.time(w, i)).min() else {
            return Ok(None);
        };
        total += best;
        longest = longest.max(best);
    }
    let members = team.len() as Time;
    Ok(Some(total.div_ceil(members).max(longest)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoLines,
    TooManyLines { lines: usize, k_max: usize },
    EmptyLine { line: usize },
    UnknownWorker { line: usize, worker: usize },
    UnknownTask { line: usize, task: usize },
    WorkerDuplicated { worker: usize },
    WorkerMissing { worker: usize },
    TaskMissing { line: usize, task: usize },
    TaskDuplicated { line: usize, task: usize },
    Incompatible { line: usize, worker: usize, task: usize },
    Precedence { line: usize, before: usize, after: usize },
    CycleTimeMismatch { line: usize, stored: Time, actual: Time },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoLines => write!(f, "no lines"),
            Violation::TooManyLines { lines, k_max } => {
                write!(f, "too many lines: {lines} > k_max {k_max}")
            }
            Violation::EmptyLine { line } => write!(f, "line {line} has no stations"),
            Violation::UnknownWorker { line, worker } => {
                write!(f, "line {line}: unknown worker {worker}")
            }
            Violation::UnknownTask { line, task } => write!(f, "line {line}: unknown task {task}"),
            Violation::WorkerDuplicated { worker } => write!(f, "worker duplicated: {worker}"),
            Violation::WorkerMissing { worker } => write!(f, "worker missing: {worker}"),
            Violation::TaskMissing { line, task } => {
                write!(f, "line {line}: task {} not assigned", task + 1)
            }
            Violation::TaskDuplicated { line, task } => {
                write!(f, "line {line}: task {} assigned twice", task + 1)
            }
            Violation::Incompatible { line, worker, task } => write!(
                f,
                "line {line}: incompatibility, worker {worker} cannot do task {}",
                task + 1
            ),
            Violation::Precedence { line, before, after } => {
                write!(f, "line {line}: precedence {} -> {} violated", before + 1, after + 1)
            }
            Violation::CycleTimeMismatch { line, stored, actual } => {
                write!(f, "line {line}: stored cycle time {stored} but loads give {actual}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every feasibility constraint and reports all violations found.
pub fn validate_solution(instance: &Instance, solution: &ParallelSolution) -> ValidationReport {
    let mut violations = Vec::new();
    if solution.lines.is_empty() {
        violations.push(Violation::NoLines);
    }
    if solution.lines.len() > solution.k_max {
        violations.push(Violation::TooManyLines {
            lines: solution.lines.len(),
            k_max: solution.k_max,
        });
    }
    let mut worker_seen = vec![0usize; instance.worker_count()];
    for (k, line) in solution.lines.iter().enumerate() {
        validate_line_into(instance, k, line, &mut worker_seen, &mut violations);
    }
    for (w, &count) in worker_seen.iter().enumerate() {
        if count > 1 {
            violations.push(Violation::WorkerDuplicated { worker: w });
        } else if count == 0 {
            violations.push(Violation::WorkerMissing { worker: w });
        }
    }
    ValidationReport { violations }
}

/// Validates a single line on its own (worker coverage is not required).
pub fn validate_line(instance: &Instance, line: &LineSolution) -> ValidationReport {
    let mut violations = Vec::new();
    let mut worker_seen = vec![0usize; instance.worker_count()];
    validate_line_into(instance, 0, line, &mut worker_seen, &mut violations);
    for (w, &count) in worker_seen.iter().enumerate() {
        if count > 1 {
            violations.push(Violation::WorkerDuplicated { worker: w });
        }
    }
    ValidationReport { violations }
}

fn validate_line_into(
    instance: &Instance,
    k: usize,
    line: &LineSolution,
    worker_seen: &mut [usize],
    violations: &mut Vec<Violation>,
) {
    if line.stations.is_empty() {
        violations.push(Violation::EmptyLine { line: k });
        return;
    }
    let n = instance.task_count();
    // (station, position within station) for each task.
    let mut slot: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut loads = Vec::with_capacity(line.stations.len());
    for (s, station) in line.stations.iter().enumerate() {
        let w = station.worker;
        if w >= instance.worker_count() {
            violations.push(Violation::UnknownWorker { line: k, worker: w });
            loads.push(0);
            continue;
        }
        worker_seen[w] += 1;
        let mut load = 0;
        for (pos, &task) in station.tasks.iter().enumerate() {
            if task >= n {
                violations.push(Violation::UnknownTask { line: k, task });
                continue;
            }
            if slot[task].is_some() {
                violations.push(Violation::TaskDuplicated { line: k, task });
            } else {
                slot[task] = Some((s, pos));
            }
            match instance.time(w, task) {
                Some(t) => load += t,
                None => violations.push(Violation::Incompatible {
                    line: k,
                    worker: w,
                    task,
                }),
            }
        }
        loads.push(load);
    }
    for (task, at) in slot.iter().enumerate() {
        if at.is_none() {
            violations.push(Violation::TaskMissing { line: k, task });
        }
    }
    for &(a, b) in instance.edges() {
        if let (Some(sa), Some(sb)) = (slot[a], slot[b]) {
            if sa > sb {
                violations.push(Violation::Precedence {
                    line: k,
                    before: a,
                    after: b,
                });
            }
        }
    }
    let actual = loads.iter().copied().max().unwrap_or(0);
    if actual != line.cycle_time {
        violations.push(Violation::CycleTimeMismatch {
            line: k,
            stored: line.cycle_time,
            actual,
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineThroughput {
    pub cycle_time: Time,
    /// Products per hour.
    pub throughput: f64,
    /// Index of the first station whose load equals the cycle time.
    pub bottleneck_station: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub lines: Vec<LineThroughput>,
    pub combined_cycle_time: f64,
    pub combined_throughput: f64,
}

impl ThroughputReport {
    pub fn new(instance: &Instance, solution: &ParallelSolution) -> Result<Self, CoreError> {
        let mut lines = Vec::new();
        for line in solution.lines.iter().filter(|l| !l.stations.is_empty()) {
            let eval = evaluate_line(instance, line)?;
            if eval.cycle_time == 0 {
                return Err(CoreError::InvalidCycleTime(0.0));
            }
            let bottleneck_station = eval.loads.iter().position(|&l| l == eval.cycle_time).unwrap_or(0);
            lines.push(LineThroughput {
                cycle_time: eval.cycle_time,
                throughput: SECONDS_PER_HOUR / eval.cycle_time as f64,
                bottleneck_station,
            });
        }
        let cts: Vec<f64> = lines.iter().map(|l| l.cycle_time as f64).collect();
        let combined = combined_cycle_time(&cts)?;
        Ok(ThroughputReport {
            lines,
            combined_cycle_time: combined,
            combined_throughput: SECONDS_PER_HOUR / combined,
        })
    }
}
