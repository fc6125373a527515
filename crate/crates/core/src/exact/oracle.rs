use thiserror::Error;

use crate::model::{Instance, LineSolution, ParallelSolution, Station, Time};
use crate::team::Team;

pub const MAX_ORACLE_TASKS: usize = 10;
pub const MAX_ORACLE_WORKERS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance too large for the exhaustive oracle: {tasks} tasks, {workers} workers (limits {MAX_ORACLE_TASKS} and {MAX_ORACLE_WORKERS})")]
    TooLarge { tasks: usize, workers: usize },
    #[error("k_max must be at least 1")]
    KMax,
    #[error("no feasible solution exists")]
    NoSolution,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    value: Time,
    /// (previous ideal index, previous worker set, worker of the last station)
    parent: Option<(usize, u32, usize)>,
}

/// Exact serial optimum of every worker subset, by dynamic programming over
/// (tasks done, workers used): each step opens one station with an unused
/// worker and any precedence-closed block of tasks that worker can execute.
#[derive(Debug, Clone)]
pub struct SerialOracle {
    ideals: Vec<u32>,
    /// `cells[ideal * 2^m + used]`
    cells: Vec<Cell>,
    worker_count: usize,
    full: usize,
    order_pos: Vec<usize>,
}

impl SerialOracle {
    pub fn new(instance: &Instance) -> Result<Self, OracleError> {
        let n = instance.task_count();
        let m = instance.worker_count();
        if n > MAX_ORACLE_TASKS || m > MAX_ORACLE_WORKERS {
            return Err(OracleError::TooLarge { tasks: n, workers: m });
        }
        let preds: Vec<u32> = (0..n)
            .map(|i| instance.predecessors(i).iter().fold(0, |acc, &p| acc | 1 << p))
            .collect();
        let ideals: Vec<u32> = (0..1u32 << n)
            .filter(|&mask| (0..n).all(|i| mask & 1 << i == 0 || preds[i] & !mask == 0))
            .collect();
        let index_of = |mask: u32| ideals.binary_search(&mask).expect("ideal");
        let capable: Vec<u32> = (0..m)
            .map(|w| (0..n).filter(|&i| instance.can_do(w, i)).fold(0, |acc, i| acc | 1 << i))
            .collect();
        let load = |w: usize, block: u32| -> Time {
            (0..n)
                .filter(|&i| block & 1 << i != 0)
                .map(|i| instance.time(w, i).unwrap_or(0))
                .sum()
        };
        let supersets: Vec<Vec<usize>> = ideals
            .iter()
            .map(|&a| (0..ideals.len()).filter(|&b| ideals[b] & a == a).collect())
            .collect();

        let width = 1usize << m;
        let mut cells = vec![
            Cell {
                value: Time::MAX,
                parent: None,
            };
            ideals.len() * width
        ];
        cells[0].value = 0;
        for used in 0..width as u32 {
            for a in 0..ideals.len() {
                let here = cells[a * width + used as usize];
                if here.value == Time::MAX {
                    continue;
                }
                for w in (0..m).filter(|&w| used & 1 << w == 0) {
                    let next_used = used | 1 << w;
                    for &b in &supersets[a] {
                        let block = ideals[b] & !ideals[a];
                        if block & !capable[w] != 0 {
                            continue;
                        }
                        let value = here.value.max(load(w, block));
                        let cell = &mut cells[b * width + next_used as usize];
                        if value < cell.value {
                            *cell = Cell {
                                value,
                                parent: Some((a, used, w)),
                            };
                        }
                    }
                }
            }
        }
        let mut order_pos = vec![0; n];
        for (pos, &t) in instance.topological_order().iter().enumerate() {
            order_pos[t] = pos;
        }
        let full = index_of(((1u64 << n) - 1) as u32);
        Ok(SerialOracle {
            ideals,
            cells,
            worker_count: m,
            full,
            order_pos,
        })
    }

    /// Optimal cycle time of a line staffed by exactly `team`.
    pub fn optimum(&self, team: Team) -> Option<Time> {
        if team.is_empty() {
            return None;
        }
        let v = self.cells[self.full * (1 << self.worker_count) + team.bits() as usize].value;
        (v != Time::MAX).then_some(v)
    }

    /// An optimal line for `team`.
    pub fn line(&self, team: Team) -> Option<LineSolution> {
        let cycle_time = self.optimum(team)?;
        let width = 1usize << self.worker_count;
        let mut stations = Vec::new();
        let (mut a, mut used) = (self.full, team.bits() as u32);
        while let Some((prev, prev_used, worker)) = self.cells[a * width + used as usize].parent {
            let block = self.ideals[a] & !self.ideals[prev];
            let mut tasks: Vec<usize> = (0..32).filter(|&i| block & 1 << i != 0).collect();
            tasks.sort_by_key(|&t| self.order_pos[t]);
            stations.push(Station { worker, tasks });
            a = prev;
            used = prev_used;
        }
        stations.reverse();
        Some(LineSolution { stations, cycle_time })
    }
}

/// Calls `visit` with every partition of `workers` into at most `k` blocks,
/// blocks in order of their lowest member.
pub fn for_each_partition(workers: Team, k: usize, mut visit: impl FnMut(&[Team])) {
    fn go(rest: &[usize], k: usize, blocks: &mut Vec<Team>, visit: &mut dyn FnMut(&[Team])) {
        let Some((&w, tail)) = rest.split_first() else {
            visit(blocks);
            return;
        };
        for b in 0..blocks.len() {
            blocks[b] = blocks[b].with(w);
            go(tail, k, blocks, visit);
            blocks[b] = blocks[b].without(w);
        }
        if blocks.len() < k {
            blocks.push(Team::single(w));
            go(tail, k, blocks, visit);
            blocks.pop();
        }
    }
    let members: Vec<usize> = workers.iter().collect();
    if members.is_empty() || k == 0 {
        return;
    }
    go(&members, k, &mut Vec::new(), &mut visit);
}

/// The optimal partition of all workers into at most `k_max` lines. Ties go
/// to the first partition in enumeration order.
pub fn exhaustive_oracle(instance: &Instance, k_max: usize) -> Result<ParallelSolution, OracleError> {
    if k_max == 0 {
        return Err(OracleError::KMax);
    }
    let oracle = SerialOracle::new(instance)?;
    let mut best: Option<(f64, Vec<Team>)> = None;
    for_each_partition(instance.all_workers(), k_max, |blocks| {
        let rate: Option<f64> = blocks.iter().map(|&t| oracle.optimum(t).map(|c| 1.0 / c as f64)).sum();
        if let Some(rate) = rate {
            if best.as_ref().is_none_or(|(r, _)| rate > r + 1e-12) {
                best = Some((rate, blocks.to_vec()));
            }
        }
    });
    let (_, teams) = best.ok_or(OracleError::NoSolution)?;
    Ok(ParallelSolution {
        lines: teams
            .into_iter()
            .map(|t| oracle.line(t).expect("optimum exists"))
            .collect(),
        k_max,
    })
}
