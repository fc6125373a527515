//! Task windows per worker and the catalog of covering worker teams.
//!
//! A task window is a set of tasks a worker could execute in one station,
//! ignoring cycle times, assuming some of its incapable tasks were already
//! done upstream. A window flagged `starts` was generated with nothing done
//! upstream, i.e. the worker may open the line. A team covers the tasks when
//! it can pick one window per member so that the windows jointly contain
//! every task and at least one window can start the line.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;

use crate::model::Instance;
use crate::team::Team;

/// Default cap on catalog entries.
pub const DEFAULT_ENTRY_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaskWindow {
    /// Carries the artificial start task.
    pub starts: bool,
    pub tasks: FixedBitSet,
}

impl TaskWindow {
    /// Renders as `{∅,1,3,5}` with 1-based task ids.
    pub fn label(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        if self.starts {
            parts.push("∅".into());
        }
        parts.extend(self.tasks.ones().map(|i| (i + 1).to_string()));
        format!("{{{}}}", parts.join(","))
    }
}

/// Windows of one worker.
///
/// Iterates: `s = {i ∉ I_w | i precedes nothing in I, i follows nothing in
/// I_w \ I}`, then `I = {i ∈ I_w | i has an immediate predecessor in s}`,
/// starting from `I = ∅` and stopping when `I` is empty (or repeats).
pub fn task_sets(instance: &Instance, worker: usize) -> Vec<TaskWindow> {
    let n = instance.task_count();
    let incapable = instance.incapable_tasks(worker);
    let mut windows: Vec<TaskWindow> = Vec::new();
    let mut done_upstream = FixedBitSet::with_capacity(n);
    let mut seen_upstream: HashSet<FixedBitSet> = HashSet::new();
    let mut first = true;
    for _ in 0..=n {
        seen_upstream.insert(done_upstream.clone());
        let mut pending = incapable.clone();
        pending.difference_with(&done_upstream);
        let mut window = FixedBitSet::with_capacity(n);
        for i in 0..n {
            if incapable.contains(i) {
                continue;
            }
            if !instance.descendants(i).is_disjoint(&done_upstream) {
                continue;
            }
            if !instance.ancestors(i).is_disjoint(&pending) {
                continue;
            }
            window.insert(i);
        }
        let mut next_upstream = FixedBitSet::with_capacity(n);
        for j in incapable.ones() {
            if instance.predecessors(j).iter().any(|&p| window.contains(p)) {
                next_upstream.insert(j);
            }
        }
        if window.count_ones(..) > 0 {
            let candidate = TaskWindow {
                starts: first,
                tasks: window,
            };
            if !windows.contains(&candidate) {
                windows.push(candidate);
            }
        }
        first = false;
        if next_upstream.count_ones(..) == 0 || seen_upstream.contains(&next_upstream) {
            break;
        }
        done_upstream = next_upstream;
    }
    windows
}

/// Task windows of every worker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSetCatalog {
    pub windows: Vec<Vec<TaskWindow>>,
}

impl TaskSetCatalog {
    pub fn build(instance: &Instance) -> Self {
        TaskSetCatalog {
            windows: (0..instance.worker_count()).map(|w| task_sets(instance, w)).collect(),
        }
    }

    pub fn for_worker(&self, worker: usize) -> &[TaskWindow] {
        &self.windows[worker]
    }
}

/// A covering team with the window chosen for each member.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CatalogEntry {
    pub team: Team,
    /// `(worker, window index)` in ascending worker order.
    pub choices: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogStatus {
    Complete,
    /// The entry limit was reached; entries are a prefix of the full family.
    Overflow,
}

#[derive(Debug, Clone)]
pub struct WorkerSetCatalog {
    entries: Vec<CatalogEntry>,
    status: CatalogStatus,
    teams: Vec<Team>,
    team_set: HashSet<Team>,
}

impl WorkerSetCatalog {
    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn status(&self) -> CatalogStatus {
        self.status
    }

    pub fn is_complete(&self) -> bool {
        self.status == CatalogStatus::Complete
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct teams in first-seen order.
    pub fn teams(&self) -> &[Team] {
        &self.teams
    }

    pub fn contains_team(&self, team: Team) -> bool {
        self.team_set.contains(&team)
    }

    /// One line per entry: `workers: W1,W2 | sets: {…};{…}`.
    pub fn dump(&self, instance: &Instance, tasks: &TaskSetCatalog) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let names: Vec<&str> = e.choices.iter().map(|&(w, _)| instance.workers()[w].as_str()).collect();
            let sets: Vec<String> = e.choices.iter().map(|&(w, k)| tasks.windows[w][k].label()).collect();
            let _ = writeln!(out, "workers: {} | sets: {}", names.join(","), sets.join(";"));
        }
        out
    }
}

/// Enumerates every selection of at most one window per worker whose union
/// contains the start marker and all tasks, up to `limit` entries.
pub fn worker_sets(instance: &Instance, catalog: &TaskSetCatalog, limit: usize) -> WorkerSetCatalog {
    let n = instance.task_count();
    let m = instance.worker_count();
    // suffix[w] = union of every window of workers w.., with a start flag.
    let mut suffix = vec![(FixedBitSet::with_capacity(n), false); m + 1];
    for w in (0..m).rev() {
        let (mut acc, mut starts) = suffix[w + 1].clone();
        for win in &catalog.windows[w] {
            acc.union_with(&win.tasks);
            starts |= win.starts;
        }
        suffix[w] = (acc, starts);
    }

    struct Search<'a> {
        catalog: &'a TaskSetCatalog,
        suffix: &'a [(FixedBitSet, bool)],
        n: usize,
        limit: usize,
        entries: Vec<CatalogEntry>,
        overflow: bool,
        choices: Vec<(usize, usize)>,
    }

    impl Search<'_> {
        fn run(&mut self, w: usize, covered: &FixedBitSet, starts: bool) {
            if self.overflow {
                return;
            }
            let (rest, rest_starts) = &self.suffix[w];
            if !(starts || *rest_starts) || covered.union_count(rest) < self.n {
                return;
            }
            if w == self.suffix.len() - 1 {
                if self.entries.len() == self.limit {
                    self.overflow = true;
                    return;
                }
                self.entries.push(CatalogEntry {
                    team: self.choices.iter().map(|&(w, _)| w).collect(),
                    choices: self.choices.clone(),
                });
                return;
            }
            self.run(w + 1, covered, starts);
            for (k, win) in self.catalog.windows[w].iter().enumerate() {
                let mut next = covered.clone();
                next.union_with(&win.tasks);
                self.choices.push((w, k));
                self.run(w + 1, &next, starts || win.starts);
                self.choices.pop();
            }
        }
    }

    let mut search = Search {
        catalog,
        suffix: &suffix,
        n,
        limit,
        entries: Vec::new(),
        overflow: false,
        choices: Vec::new(),
    };
    search.run(0, &FixedBitSet::with_capacity(n), false);

    let mut teams = Vec::new();
    let mut team_set = HashSet::new();
    for e in &search.entries {
        if team_set.insert(e.team) {
            teams.push(e.team);
        }
    }
    WorkerSetCatalog {
        entries: search.entries,
        status: if search.overflow {
            CatalogStatus::Overflow
        } else {
            CatalogStatus::Complete
        },
        teams,
        team_set,
    }
}

/// Answers "does this team cover the tasks" directly from the windows, for
/// use when the catalog overflowed. Memoised per team.
#[derive(Debug, Clone)]
pub struct CoverageChecker {
    windows: Vec<Vec<TaskWindow>>,
    n: usize,
    memo: HashMap<Team, bool>,
}

impl CoverageChecker {
    pub fn new(instance: &Instance, catalog: &TaskSetCatalog) -> Self {
        CoverageChecker {
            windows: catalog.windows.clone(),
            n: instance.task_count(),
            memo: HashMap::new(),
        }
    }

    pub fn covers(&mut self, team: Team) -> bool {
        if let Some(&known) = self.memo.get(&team) {
            return known;
        }
        let members: Vec<usize> = team.iter().collect();
        let ok = !members.is_empty()
            && members.iter().all(|&w| !self.windows[w].is_empty())
            && self.search(&members, 0, &FixedBitSet::with_capacity(self.n), false);
        self.memo.insert(team, ok);
        ok
    }

    fn search(&self, members: &[usize], used: u64, covered: &FixedBitSet, starts: bool) -> bool {
        // Pick the first uncovered element (the start marker counts first).
        let target = if !starts {
            None
        } else {
            match (0..self.n).find(|&i| !covered.contains(i)) {
                Some(i) => Some(i),
                None => return true,
            }
        };
        for (slot, &w) in members.iter().enumerate() {
            if used & (1 << slot) != 0 {
                continue;
            }
            for win in &self.windows[w] {
                let hit = match target {
                    None => win.starts,
                    Some(i) => win.tasks.contains(i),
                };
                if !hit {
                    continue;
                }
                let mut next = covered.clone();
                next.union_with(&win.tasks);
                if self.search(members, used | (1 << slot), &next, starts || win.starts) {
                    return true;
                }
            }
        }
        false
    }
}
