use std::collections::HashMap;

use thiserror::Error;

use crate::constructive::{solve_resolved, ResolvedRules, RuleError, SerialConfig};
use crate::model::{Instance, LineSolution, ParallelSolution};
use crate::par;
use crate::preprocess::{CatalogStatus, WorkerSetCatalog};
use crate::team::Team;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error("enumeration infeasible: worker-set catalog overflowed")]
    Overflow,
    #[error("k_max must be at least 1")]
    KMax,
    #[error("no solution exists")]
    NoSolution,
    #[error(transparent)]
    Rules(#[from] RuleError),
}

struct Lines<'a> {
    instance: &'a Instance,
    rules: ResolvedRules,
    config: &'a SerialConfig,
    cache: HashMap<Team, Option<LineSolution>>,
}

impl Lines<'_> {
    fn rate(&mut self, team: Team) -> Option<f64> {
        let (instance, rules, increment) = (self.instance, &self.rules, self.config.increment);
        self.cache
            .entry(team)
            .or_insert_with(|| solve_resolved(instance, team, rules, increment))
            .as_ref()
            .map(|l| 1.0 / l.cycle_time as f64)
    }
}

/// Tries every choice of at most `k_max` pairwise-disjoint catalog teams.
/// Workers outside the chosen teams are added one at a time, lowest index
/// first, to the team where they help the combined rate most. Every line is
/// solved with the serial constructive heuristic.
pub fn enumerate_solve(
    instance: &Instance,
    k_max: usize,
    catalog: &WorkerSetCatalog,
    config: &SerialConfig,
    parallel: bool,
) -> Result<ParallelSolution, EnumError> {
    if k_max == 0 {
        return Err(EnumError::KMax);
    }
    if catalog.status() == CatalogStatus::Overflow {
        return Err(EnumError::Overflow);
    }
    let mut lines = Lines {
        instance,
        rules: ResolvedRules::new(instance, &config.rules)?,
        config,
        cache: HashMap::new(),
    };
    let teams = catalog.teams();
    {
        let (rules, increment) = (&lines.rules, config.increment);
        let solved = par::map(parallel, teams, |&t| solve_resolved(instance, t, rules, increment));
        lines.cache.extend(teams.iter().copied().zip(solved));
    }
    let all = instance.all_workers();
    let mut best: Option<(f64, Vec<Team>)> = None;
    let mut consider = |chosen: &[Team], lines: &mut Lines<'_>| {
        if let Some((rate, partition)) = complete(chosen, all, lines) {
            if best.as_ref().is_none_or(|(r, _)| rate > r + 1e-12) {
                best = Some((rate, partition));
            }
        }
    };
    // The whole team on one line is always a candidate.
    consider(&[all], &mut lines);

    let mut chosen = Vec::new();
    // Depth-first over increasing team indices.
    fn walk(
        teams: &[Team],
        start: usize,
        used: Team,
        k_max: usize,
        chosen: &mut Vec<Team>,
        lines: &mut Lines<'_>,
        consider: &mut dyn FnMut(&[Team], &mut Lines<'_>),
    ) {
        for idx in start..teams.len() {
            let t = teams[idx];
            if !t.is_disjoint(used) || lines.rate(t).is_none() {
                continue;
            }
            chosen.push(t);
            consider(chosen, lines);
            if chosen.len() < k_max {
                walk(teams, idx + 1, used.union(t), k_max, chosen, lines, consider);
            }
            chosen.pop();
        }
    }
    walk(teams, 0, Team::EMPTY, k_max, &mut chosen, &mut lines, &mut consider);

    let (_, partition) = best.ok_or(EnumError::NoSolution)?;
    Ok(ParallelSolution {
        lines: partition
            .iter()
            .map(|t| lines.cache[t].clone().expect("feasible team"))
            .collect(),
        k_max,
    })
}

fn complete(chosen: &[Team], all: Team, lines: &mut Lines<'_>) -> Option<(f64, Vec<Team>)> {
    let mut partition = chosen.to_vec();
    let used = partition.iter().fold(Team::EMPTY, |a, t| a.union(*t));
    for w in all.difference(used).iter() {
        let mut pick: Option<(usize, f64)> = None;
        for (k, &team) in partition.iter().enumerate() {
            let Some(grown) = lines.rate(team.with(w)) else {
                continue;
            };
            let gain = grown - lines.rate(team).unwrap_or(0.0);
            if pick.is_none_or(|(_, g)| gain > g + 1e-12) {
                pick = Some((k, gain));
            }
        }
        let (k, _) = pick?;
        partition[k] = partition[k].with(w);
    }
    let rate = partition.iter().map(|&t| lines.rate(t)).sum::<Option<f64>>()?;
    Some((rate, partition))
}

/// Convenience wrapper with default rules.
pub fn enumerate_default(
    instance: &Instance,
    k_max: usize,
    catalog: &WorkerSetCatalog,
) -> Result<ParallelSolution, EnumError> {
    enumerate_solve(instance, k_max, catalog, &SerialConfig::default(), true)
}
