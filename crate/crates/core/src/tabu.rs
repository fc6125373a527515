//! Tabu search over worker partitions.
//!
//! A solution is a partition of the workers into teams, one team per line.
//! Lines are evaluated with the serial constructive heuristic. Moves come
//! from comparing each team with the covering teams of the catalog: workers
//! the catalog says are superfluous can be transferred to another line, and
//! workers a catalog team lacks can be exchanged with another line when the
//! other line stays covering.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::constructive::{solve_resolved, Increment, PriorityRules, ResolvedRules, RuleError};
use crate::model::{Instance, LineSolution, ParallelSolution};
use crate::par;
use crate::preprocess::{
    worker_sets, CatalogStatus, CoverageChecker, TaskSetCatalog, WorkerSetCatalog, DEFAULT_ENTRY_LIMIT,
};
use crate::team::Team;

const EPS: f64 = 1e-12;

/// Cap on nodes visited while backtracking for disjoint seed teams.
const SEED_SEARCH_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Move {
    /// Move `workers` from line `from` to line `to`.
    Transfer { workers: Team, from: usize, to: usize },
    /// Move `lack` into line `first` and `excess` into line `second`.
    Exchange {
        lack: Team,
        excess: Team,
        first: usize,
        second: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Transfer,
    Exchange,
}

impl MoveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Transfer => "transfer",
            MoveKind::Exchange => "exchange",
        }
    }
}

/// Identifies a move and its inverse alike: the workers that change line and
/// the union of the two lines involved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    moved: Team,
    lines: Team,
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::Transfer { .. } => MoveKind::Transfer,
            Move::Exchange { .. } => MoveKind::Exchange,
        }
    }

    fn lines(&self) -> (usize, usize) {
        match *self {
            Move::Transfer { from, to, .. } => (from, to),
            Move::Exchange { first, second, .. } => (first, second),
        }
    }

    fn moved(&self) -> Team {
        match *self {
            Move::Transfer { workers, .. } => workers,
            Move::Exchange { lack, excess, .. } => lack.union(excess),
        }
    }

    pub fn fingerprint(&self, partition: &[Team]) -> Fingerprint {
        let (a, b) = self.lines();
        Fingerprint {
            moved: self.moved(),
            lines: partition[a].union(partition[b]),
        }
    }

    pub fn inverse(&self) -> Move {
        match *self {
            Move::Transfer { workers, from, to } => Move::Transfer {
                workers,
                from: to,
                to: from,
            },
            Move::Exchange {
                lack,
                excess,
                first,
                second,
            } => Move::Exchange {
                lack: excess,
                excess: lack,
                first,
                second,
            },
        }
    }

    /// The two affected lines after the move, as `(index, new team)` pairs.
    fn affected(&self, partition: &[Team]) -> [(usize, Team); 2] {
        match *self {
            Move::Transfer { workers, from, to } => [
                (from, partition[from].difference(workers)),
                (to, partition[to].union(workers)),
            ],
            Move::Exchange {
                lack,
                excess,
                first,
                second,
            } => [
                (first, partition[first].difference(excess).union(lack)),
                (second, partition[second].difference(lack).union(excess)),
            ],
        }
    }

    /// Applies the move; a line left without workers is removed.
    pub fn apply(&self, partition: &[Team]) -> Vec<Team> {
        let mut next = partition.to_vec();
        for (k, team) in self.affected(partition) {
            next[k] = team;
        }
        next.retain(|t| !t.is_empty());
        next
    }
}

/// Decides whether a team can cover all tasks, from the catalog or, when it
/// overflowed, from the task windows directly.
pub struct Feasibility<'a> {
    catalog: &'a WorkerSetCatalog,
    fallback: Option<CoverageChecker>,
}

impl<'a> Feasibility<'a> {
    pub fn new(instance: &Instance, tasks: &TaskSetCatalog, catalog: &'a WorkerSetCatalog) -> Self {
        let fallback = (catalog.status() == CatalogStatus::Overflow).then(|| CoverageChecker::new(instance, tasks));
        Feasibility { catalog, fallback }
    }

    pub fn covers(&mut self, team: Team) -> bool {
        if self.catalog.contains_team(team) {
            return true;
        }
        match &mut self.fallback {
            Some(checker) => checker.covers(team),
            None => false,
        }
    }
}

/// Candidate moves for a partition, in generation order without duplicates.
pub fn neighborhood(partition: &[Team], teams: &[Team], feasibility: &mut Feasibility<'_>) -> Vec<Move> {
    let mut moves = Vec::new();
    let mut seen = HashSet::new();
    let mut push = |mv: Move, moves: &mut Vec<Move>| {
        if seen.insert(mv.clone()) {
            moves.push(mv);
        }
    };
    for (i1, &current) in partition.iter().enumerate() {
        for &candidate in teams {
            if current.is_disjoint(candidate) {
                continue;
            }
            let excess = current.difference(candidate);
            let lack = candidate.difference(current);
            if excess.is_empty() {
                continue;
            }
            if lack.is_empty() {
                for worker in excess.iter() {
                    for to in (0..partition.len()).filter(|&k| k != i1) {
                        push(
                            Move::Transfer {
                                workers: Team::single(worker),
                                from: i1,
                                to,
                            },
                            &mut moves,
                        );
                    }
                }
            } else {
                for (i2, &other) in partition.iter().enumerate() {
                    if i2 == i1 || !lack.is_subset(other) {
                        continue;
                    }
                    let rebuilt = other.difference(lack).union(excess);
                    if feasibility.covers(rebuilt) {
                        push(
                            Move::Exchange {
                                lack,
                                excess,
                                first: i1,
                                second: i2,
                            },
                            &mut moves,
                        );
                    }
                }
            }
        }
    }
    moves
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TabuError {
    #[error("no solution exists")]
    NoSolution,
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error("k_max must be at least 1")]
    KMax,
}

/// Seeds up to `target` pairwise-disjoint teams, starting with the pinned
/// catalog team, by first-fit with backtracking over the catalog order.
/// Leftover workers join uniformly random seeded teams.
pub fn initial_partition(
    teams: &[Team],
    pinned: usize,
    target: usize,
    all_workers: Team,
    rng: &mut impl Rng,
) -> Result<Vec<Team>, TabuError> {
    if teams.is_empty() || pinned >= teams.len() || target == 0 {
        return Err(TabuError::NoSolution);
    }
    let mut best = vec![teams[pinned]];
    if target > 1 {
        let mut list = vec![teams[pinned]];
        let mut budget = SEED_SEARCH_BUDGET;
        seed_search(teams, 0, target, &mut list, &mut best, &mut budget);
    }
    let used = best.iter().fold(Team::EMPTY, |acc, t| acc.union(*t));
    for worker in all_workers.difference(used).iter() {
        let k = rng.gen_range(0..best.len());
        best[k] = best[k].with(worker);
    }
    Ok(best)
}

fn seed_search(
    teams: &[Team],
    start: usize,
    target: usize,
    list: &mut Vec<Team>,
    best: &mut Vec<Team>,
    budget: &mut usize,
) -> bool {
    for idx in start..teams.len() {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let team = teams[idx];
        if !list.iter().all(|t| t.is_disjoint(team)) {
            continue;
        }
        list.push(team);
        if list.len() > best.len() {
            *best = list.clone();
        }
        if list.len() == target || seed_search(teams, idx + 1, target, list, best, budget) {
            return true;
        }
        list.pop();
    }
    false
}

/// Picks a random pinned team and seeds a partition with up to `k_max` lines.
pub fn initial_solution(
    catalog: &WorkerSetCatalog,
    k_max: usize,
    all_workers: Team,
    rng: &mut impl Rng,
) -> Result<Vec<Team>, TabuError> {
    let teams = catalog.teams();
    if teams.is_empty() {
        return Err(TabuError::NoSolution);
    }
    let pinned = rng.gen_range(0..teams.len());
    initial_partition(teams, pinned, k_max, all_workers, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabuParams {
    pub tenure: usize,
    pub max_idle_iterations: usize,
    pub max_restarts: usize,
    pub k_max: usize,
    pub seed: u64,
    pub time_limit: Option<Duration>,
    pub rules: PriorityRules,
    pub increment: Increment,
    pub entry_limit: usize,
    /// Evaluate uncached neighbour teams on the rayon pool.
    pub parallel: bool,
}

impl Default for TabuParams {
    fn default() -> Self {
        TabuParams {
            tenure: 10,
            max_idle_iterations: 1000,
            max_restarts: 10,
            k_max: 2,
            seed: 0,
            time_limit: None,
            rules: PriorityRules::default(),
            increment: Increment::MinTaskTime,
            entry_limit: DEFAULT_ENTRY_LIMIT,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub iteration: usize,
    /// `None` for the rows marking a (re)start.
    pub kind: Option<MoveKind>,
    pub combined_ct: f64,
    pub incumbent_ct: f64,
}

#[derive(Debug, Clone)]
pub struct TabuOutcome {
    pub solution: ParallelSolution,
    pub log: Vec<LogRow>,
    pub iterations: usize,
    /// Restarts performed after the first run.
    pub restarts: usize,
    pub catalog_status: CatalogStatus,
    /// Whether any covering team exists (a parallel decomposition may exist).
    pub catalog_empty: bool,
}

/// `iteration,move,combined_ct,incumbent_ct` rows.
pub fn log_csv(log: &[LogRow]) -> String {
    let mut out = String::from("iteration,move,combined_ct,incumbent_ct\n");
    for row in log {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6}",
            row.iteration,
            row.kind.map_or("start", MoveKind::as_str),
            row.combined_ct,
            row.incumbent_ct
        );
    }
    out
}

struct Evaluator<'a> {
    instance: &'a Instance,
    rules: ResolvedRules,
    increment: Increment,
    cache: HashMap<Team, Option<LineSolution>>,
    parallel: bool,
}

impl Evaluator<'_> {
    fn prefetch(&mut self, teams: impl IntoIterator<Item = Team>) {
        let mut missing: Vec<Team> = Vec::new();
        for t in teams {
            if !self.cache.contains_key(&t) && !missing.contains(&t) {
                missing.push(t);
            }
        }
        let (instance, rules, increment) = (self.instance, &self.rules, self.increment);
        let solved = par::map(self.parallel, &missing, |&t| {
            solve_resolved(instance, t, rules, increment)
        });
        self.cache.extend(missing.into_iter().zip(solved));
    }

    fn line(&mut self, team: Team) -> Option<&LineSolution> {
        self.prefetch([team]);
        self.cache[&team].as_ref()
    }

    fn rate(&mut self, team: Team) -> Option<f64> {
        self.line(team).map(|l| 1.0 / l.cycle_time as f64)
    }

    fn partition_rate(&mut self, partition: &[Team]) -> Option<f64> {
        partition.iter().map(|&t| self.rate(t)).sum()
    }

    fn solution(&mut self, partition: &[Team], k_max: usize) -> ParallelSolution {
        ParallelSolution {
            lines: partition
                .iter()
                .map(|&t| self.line(t).cloned().expect("evaluated team is feasible"))
                .collect(),
            k_max,
        }
    }
}

/// Merges lines the constructive heuristic cannot solve into their neighbours
/// until every line is solvable.
fn repair(partition: &mut Vec<Team>, eval: &mut Evaluator<'_>) {
    while partition.len() > 1 {
        let Some(bad) = partition.iter().position(|&t| eval.rate(t).is_none()) else {
            return;
        };
        let team = partition.remove(bad);
        let into = bad.min(partition.len() - 1);
        partition[into] = partition[into].union(team);
    }
}

fn rate_to_ct(rate: f64) -> f64 {
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

/// Runs the tabu search and returns the best partition found. The full team
/// on a single line is always evaluated and serves as the fallback.
pub fn tabu_search(instance: &Instance, params: &TabuParams) -> Result<TabuOutcome, TabuError> {
    search(instance, params, None)
}

/// Like [`tabu_search`], additionally handing every current solution (each
/// restart's start and each accepted move) to `observe`.
pub fn tabu_search_observed(
    instance: &Instance,
    params: &TabuParams,
    observe: &mut dyn FnMut(&ParallelSolution),
) -> Result<TabuOutcome, TabuError> {
    search(instance, params, Some(observe))
}

fn search(
    instance: &Instance,
    params: &TabuParams,
    mut observe: Option<&mut dyn FnMut(&ParallelSolution)>,
) -> Result<TabuOutcome, TabuError> {
    if params.k_max == 0 {
        return Err(TabuError::KMax);
    }
    let started = Instant::now();
    let out_of_time = || params.time_limit.is_some_and(|limit| started.elapsed() >= limit);
    let mut eval = Evaluator {
        instance,
        rules: ResolvedRules::new(instance, &params.rules)?,
        increment: params.increment,
        cache: HashMap::new(),
        parallel: params.parallel,
    };
    let all = instance.all_workers();
    let mut best_partition = vec![all];
    let mut best_rate = eval.rate(all).ok_or(TabuError::NoSolution)?;
    let mut log = vec![LogRow {
        iteration: 0,
        kind: None,
        combined_ct: rate_to_ct(best_rate),
        incumbent_ct: rate_to_ct(best_rate),
    }];

    let tasks = TaskSetCatalog::build(instance);
    let catalog = worker_sets(instance, &tasks, params.entry_limit);
    let finish = |eval: &mut Evaluator<'_>, best: &[Team], log, iterations, restarts| TabuOutcome {
        solution: eval.solution(best, params.k_max),
        log,
        iterations,
        restarts,
        catalog_status: catalog.status(),
        catalog_empty: catalog.is_empty(),
    };
    if params.k_max == 1 || catalog.is_empty() {
        return Ok(finish(&mut eval, &best_partition, log, 0, 0));
    }

    let mut feasibility = Feasibility::new(instance, &tasks, &catalog);
    let teams = catalog.teams();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut iteration = 0;
    let mut restarts = 0;

    'runs: for run in 0..=params.max_restarts {
        if out_of_time() {
            break;
        }
        restarts = run;
        // Alternate the seeded line count over 2..=k_max so smaller layouts stay reachable.
        let target = params.k_max - run % (params.k_max - 1);
        let pinned = rng.gen_range(0..teams.len());
        let mut current = initial_partition(teams, pinned, target, all, &mut rng)?;
        current.shuffle(&mut rng);
        repair(&mut current, &mut eval);
        let Some(mut current_rate) = eval.partition_rate(&current) else {
            continue;
        };
        if let Some(f) = observe.as_mut() {
            f(&eval.solution(&current, params.k_max));
        }
        if current_rate > best_rate + EPS {
            best_rate = current_rate;
            best_partition = current.clone();
        }
        log.push(LogRow {
            iteration,
            kind: None,
            combined_ct: rate_to_ct(current_rate),
            incumbent_ct: rate_to_ct(best_rate),
        });

        let mut tabu: Vec<(Fingerprint, usize)> = Vec::new();
        let mut idle = 0;
        while idle < params.max_idle_iterations {
            if out_of_time() {
                break 'runs;
            }
            iteration += 1;
            tabu.retain(|&(_, expiry)| expiry > iteration);
            let moves = neighborhood(&current, teams, &mut feasibility);
            eval.prefetch(moves.iter().flat_map(|mv| mv.affected(&current).map(|(_, t)| t)));

            let mut chosen: Option<(usize, f64)> = None;
            for (idx, mv) in moves.iter().enumerate() {
                let mut rate = current_rate;
                let mut feasible = true;
                for (k, team) in mv.affected(&current) {
                    match eval.rate(team) {
                        Some(r) => rate += r - eval.rate(current[k]).unwrap_or(0.0),
                        None if team.is_empty() => rate -= eval.rate(current[k]).unwrap_or(0.0),
                        None => feasible = false,
                    }
                }
                if !feasible {
                    continue;
                }
                let fp = mv.fingerprint(&current);
                let is_tabu = tabu.iter().any(|&(f, _)| f == fp);
                if is_tabu && rate <= best_rate + EPS {
                    continue;
                }
                if chosen.is_none_or(|(_, r)| rate > r + EPS) {
                    chosen = Some((idx, rate));
                }
            }
            let Some((idx, _)) = chosen else {
                break;
            };
            let mv = &moves[idx];
            tabu.push((mv.fingerprint(&current), iteration + params.tenure));
            current = mv.apply(&current);
            // Recompute from scratch so rounding never drifts.
            current_rate = eval.partition_rate(&current).expect("move keeps lines feasible");
            if let Some(f) = observe.as_mut() {
                f(&eval.solution(&current, params.k_max));
            }
            if current_rate > best_rate + EPS {
                best_rate = current_rate;
                best_partition = current.clone();
                idle = 0;
            } else {
                idle += 1;
            }
            log.push(LogRow {
                iteration,
                kind: Some(mv.kind()),
                combined_ct: rate_to_ct(current_rate),
                incumbent_ct: rate_to_ct(best_rate),
            });
        }
    }
    Ok(finish(&mut eval, &best_partition, log, iteration, restarts))
}
