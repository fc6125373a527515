//! Station-oriented greedy for a single line (serial ALWABP-2).
//!
//! Stations are opened left to right. Each station receives the best-ranked
//! unassigned worker that can take at least one available task without
//! stranding a remaining task, and is then filled with available tasks in
//! priority order while the load stays within the trial cycle time.
//! [`solve_serial`] raises the trial cycle time from the team's lower bound
//! until the greedy succeeds.

use crate::model::{lower_bound, Instance, LineSolution, Station, Time};
use crate::team::Team;

#[derive(Debug, Clone, PartialEq)]
pub enum WorkerRule {
    /// Workers able to execute fewer tasks go first.
    FewestCapableTasks,
    /// Smallest sum of feasible task times goes first.
    MinTotalTime,
    /// One weight per instance worker; larger weight goes first.
    External(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskRule {
    /// Larger number of (transitive) successors goes first.
    MostSuccessors,
    /// Larger positional weight (own best time plus best times of all successors) goes first.
    MaxPositionalWeight,
    /// One weight per task; larger weight goes first.
    External(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorityRules {
    pub worker: WorkerRule,
    pub task: TaskRule,
}

impl Default for PriorityRules {
    fn default() -> Self {
        PriorityRules {
            worker: WorkerRule::MinTotalTime,
            task: TaskRule::MostSuccessors,
        }
    }
}

impl PriorityRules {
    pub fn external(worker_weights: Vec<f64>, task_weights: Vec<f64>) -> Self {
        PriorityRules {
            worker: WorkerRule::External(worker_weights),
            task: TaskRule::External(task_weights),
        }
    }
}

/// How the trial cycle time grows after a failed greedy pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Increment {
    /// Add one second.
    Unit,
    /// Add the smallest feasible task time of the instance.
    #[default]
    MinTaskTime,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SerialConfig {
    pub rules: PriorityRules,
    pub increment: Increment,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("worker priority vector has {got} entries, expected {expected}")]
    WorkerVector { expected: usize, got: usize },
    #[error("task priority vector has {got} entries, expected {expected}")]
    TaskVector { expected: usize, got: usize },
}

/// Priority orders resolved against one instance.
#[derive(Debug, Clone)]
pub struct ResolvedRules {
    /// All instance workers, best first.
    worker_order: Vec<usize>,
    /// `task_rank[i]` = position of task `i` in the priority order (0 = first).
    task_rank: Vec<usize>,
}

impl ResolvedRules {
    pub fn new(instance: &Instance, rules: &PriorityRules) -> Result<Self, RuleError> {
        let m = instance.worker_count();
        let n = instance.task_count();
        let worker_key: Vec<f64> = match &rules.worker {
            WorkerRule::FewestCapableTasks => (0..m)
                .map(|w| (0..n).filter(|&i| instance.can_do(w, i)).count() as f64)
                .collect(),
            WorkerRule::MinTotalTime => (0..m)
                .map(|w| instance.times()[w].iter().flatten().sum::<Time>() as f64)
                .collect(),
            WorkerRule::External(v) => {
                if v.len() != m {
                    return Err(RuleError::WorkerVector {
                        expected: m,
                        got: v.len(),
                    });
                }
                v.iter().map(|x| -x).collect()
            }
        };
        let task_key: Vec<f64> = match &rules.task {
            TaskRule::MostSuccessors => (0..n)
                .map(|i| -(instance.descendants(i).count_ones(..) as f64))
                .collect(),
            TaskRule::MaxPositionalWeight => {
                let best: Vec<Time> = (0..n)
                    .map(|i| (0..m).filter_map(|w| instance.time(w, i)).min().unwrap_or(0))
                    .collect();
                (0..n)
                    .map(|i| {
                        let tail: Time = instance.descendants(i).ones().map(|j| best[j]).sum();
                        -((best[i] + tail) as f64)
                    })
                    .collect()
            }
            TaskRule::External(v) => {
                if v.len() != n {
                    return Err(RuleError::TaskVector {
                        expected: n,
                        got: v.len(),
                    });
                }
                v.iter().map(|x| -x).collect()
            }
        };
        Ok(ResolvedRules {
            worker_order: order_by_key(&worker_key),
            task_rank: rank_by_key(&task_key),
        })
    }
}

/// Indices sorted by ascending key, lowest index first on ties.
fn order_by_key(key: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..key.len()).collect();
    idx.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));
    idx
}

fn rank_by_key(key: &[f64]) -> Vec<usize> {
    let order = order_by_key(key);
    let mut rank = vec![0; key.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// One greedy pass at a fixed trial cycle time. Returns `None` when the
/// tasks cannot all be placed with `|team|` stations.
pub fn construct_line(
    instance: &Instance,
    team: Team,
    rules: &PriorityRules,
    trial_ct: Time,
) -> Result<Option<LineSolution>, RuleError> {
    let resolved = ResolvedRules::new(instance, rules)?;
    Ok(construct_with(instance, team, &resolved, trial_ct))
}

pub(crate) fn construct_with(
    instance: &Instance,
    team: Team,
    rules: &ResolvedRules,
    trial_ct: Time,
) -> Option<LineSolution> {
    let n = instance.task_count();
    let mut assigned = vec![false; n];
    let mut assigned_count = 0;
    let mut missing_preds: Vec<usize> = (0..n).map(|i| instance.predecessors(i).len()).collect();
    let capable: Vec<Team> = (0..n)
        .map(|i| team.iter().filter(|&w| instance.can_do(w, i)).collect())
        .collect();
    let mut remaining = team;
    let mut stations = Vec::with_capacity(team.len());
    let mut cycle_time = 0;

    while !remaining.is_empty() {
        if assigned_count == n {
            for &w in rules.worker_order.iter().filter(|&&w| remaining.contains(w)) {
                stations.push(Station {
                    worker: w,
                    tasks: Vec::new(),
                });
            }
            break;
        }
        let mut placed = false;
        for &w in rules.worker_order.iter().filter(|&&w| remaining.contains(w)) {
            let (tasks, load) = fill_station(instance, rules, w, trial_ct, &assigned, &missing_preds);
            if tasks.is_empty() {
                continue;
            }
            let others = remaining.without(w);
            let strands = (0..n).any(|i| !assigned[i] && !tasks.contains(&i) && capable[i].is_disjoint(others));
            if strands {
                continue;
            }
            for &i in &tasks {
                assigned[i] = true;
                for &j in instance.successors(i) {
                    missing_preds[j] -= 1;
                }
            }
            assigned_count += tasks.len();
            cycle_time = cycle_time.max(load);
            remaining = others;
            stations.push(Station { worker: w, tasks });
            placed = true;
            break;
        }
        if !placed {
            return None;
        }
    }
    (assigned_count == n).then_some(LineSolution { stations, cycle_time })
}

/// Greedily fills one station for worker `w` without mutating the caller's state.
fn fill_station(
    instance: &Instance,
    rules: &ResolvedRules,
    w: usize,
    trial_ct: Time,
    assigned: &[bool],
    missing_preds: &[usize],
) -> (Vec<usize>, Time) {
    let n = instance.task_count();
    let mut missing = missing_preds.to_vec();
    let mut taken = vec![false; n];
    let mut tasks = Vec::new();
    let mut load = 0;
    loop {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if assigned[i] || taken[i] || missing[i] > 0 {
                continue;
            }
            let Some(t) = instance.time(w, i) else {
                continue;
            };
            if load + t > trial_ct {
                continue;
            }
            if best.is_none_or(|b| rules.task_rank[i] < rules.task_rank[b]) {
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        taken[i] = true;
        load += instance.time(w, i).unwrap_or(0);
        tasks.push(i);
        for &j in instance.successors(i) {
            missing[j] -= 1;
        }
    }
    (tasks, load)
}

/// Solves one line by raising the trial cycle time from the team's lower
/// bound. Returns `None` when the team cannot cover every task.
pub fn solve_serial(instance: &Instance, team: Team, rules: &PriorityRules) -> Result<Option<LineSolution>, RuleError> {
    solve_serial_with(
        instance,
        team,
        &SerialConfig {
            rules: rules.clone(),
            increment: Increment::MinTaskTime,
        },
    )
}

pub fn solve_serial_with(
    instance: &Instance,
    team: Team,
    config: &SerialConfig,
) -> Result<Option<LineSolution>, RuleError> {
    let resolved = ResolvedRules::new(instance, &config.rules)?;
    Ok(solve_resolved(instance, team, &resolved, config.increment))
}

pub(crate) fn solve_resolved(
    instance: &Instance,
    team: Team,
    rules: &ResolvedRules,
    increment: Increment,
) -> Option<LineSolution> {
    if team.is_empty() {
        return None;
    }
    let start = lower_bound(instance, team).ok()??;
    let step = match increment {
        Increment::Unit => 1,
        Increment::MinTaskTime => instance.min_feasible_time().max(1),
    };
    let cap = instance.max_total_time();
    let mut trial = start;
    loop {
        if let Some(line) = construct_with(instance, team, rules, trial) {
            return Some(line);
        }
        if trial >= cap {
            return None;
        }
        trial = (trial + step).min(cap);
    }
}
