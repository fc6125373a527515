//! Biased random-key genetic algorithm.
//!
//! A chromosome has `2|W| + |N|·k_max` keys in `[0, 1)`: one line key per
//! worker (`line = ⌊key·k_max⌋`), one priority per worker, and one priority
//! per task for each line, stored line by line. Each non-empty line is solved
//! by the serial constructive heuristic using the encoded priorities (larger
//! key first). Fitness is the summed rate `Σ 1/C_k` of the lines that could be
//! solved; a line that cannot be solved contributes nothing.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::constructive::{solve_resolved, Increment, PriorityRules, ResolvedRules};
use crate::model::{Instance, LineSolution, ParallelSolution};
use crate::par;
use crate::team::Team;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrkgaError {
    #[error("population {population} must exceed elite {elite} plus mutants {mutants}")]
    Population {
        population: usize,
        elite: usize,
        mutants: usize,
    },
    #[error("elite count must be positive")]
    NoElite,
    #[error("inheritance probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("k_max must be at least 1")]
    KMax,
    #[error("chromosome has {got} genes, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("no solution exists")]
    NoSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrkgaParams {
    pub population: usize,
    pub elite: usize,
    pub mutants: usize,
    pub elite_inherit_prob: f64,
    pub k_max: usize,
    pub seed: u64,
    pub max_generations: usize,
    pub time_limit: Option<Duration>,
    pub increment: Increment,
    /// Decode each generation on the rayon pool.
    pub parallel: bool,
}

impl Default for BrkgaParams {
    fn default() -> Self {
        BrkgaParams {
            population: 100,
            elite: 20,
            mutants: 10,
            elite_inherit_prob: 0.7,
            k_max: 2,
            seed: 0,
            max_generations: 1000,
            time_limit: Some(Duration::from_secs(300)),
            increment: Increment::MinTaskTime,
            parallel: true,
        }
    }
}

impl BrkgaParams {
    pub fn validate(&self) -> Result<(), BrkgaError> {
        if self.elite == 0 {
            return Err(BrkgaError::NoElite);
        }
        if self.population <= self.elite + self.mutants {
            return Err(BrkgaError::Population {
                population: self.population,
                elite: self.elite,
                mutants: self.mutants,
            });
        }
        if !(0.0..=1.0).contains(&self.elite_inherit_prob) {
            return Err(BrkgaError::Probability(self.elite_inherit_prob));
        }
        if self.k_max == 0 {
            return Err(BrkgaError::KMax);
        }
        Ok(())
    }
}

pub fn chromosome_len(instance: &Instance, k_max: usize) -> usize {
    2 * instance.worker_count() + instance.task_count() * k_max
}

/// Line index of every worker from segment 1.
pub fn worker_lines(keys: &[f64], k_max: usize) -> Vec<usize> {
    keys.iter()
        .map(|&c| ((c * k_max as f64).floor() as usize).min(k_max - 1))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedLine {
    pub index: usize,
    pub team: Team,
    /// `None` when the heuristic found no layout for this team.
    pub line: Option<LineSolution>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    /// Non-empty lines in line-index order.
    pub lines: Vec<DecodedLine>,
    pub fitness: f64,
}

impl Decoded {
    pub fn infeasible_lines(&self) -> usize {
        self.lines.iter().filter(|l| l.line.is_none()).count()
    }
}

fn line_rules(instance: &Instance, genes: &[f64], k: usize) -> PriorityRules {
    let (m, n) = (instance.worker_count(), instance.task_count());
    let tasks = &genes[2 * m + k * n..2 * m + (k + 1) * n];
    PriorityRules::external(genes[m..2 * m].to_vec(), tasks.to_vec())
}

fn solve_team(instance: &Instance, genes: &[f64], k: usize, team: Team, increment: Increment) -> Option<LineSolution> {
    let rules = ResolvedRules::new(instance, &line_rules(instance, genes, k)).expect("lengths checked");
    solve_resolved(instance, team, &rules, increment)
}

/// Decodes a chromosome. Pure: equal inputs give equal outputs.
pub fn decode(instance: &Instance, genes: &[f64], k_max: usize, increment: Increment) -> Result<Decoded, BrkgaError> {
    if k_max == 0 {
        return Err(BrkgaError::KMax);
    }
    let expected = chromosome_len(instance, k_max);
    if genes.len() != expected {
        return Err(BrkgaError::Length {
            expected,
            got: genes.len(),
        });
    }
    let m = instance.worker_count();
    let mut teams = vec![Team::EMPTY; k_max];
    for (w, k) in worker_lines(&genes[..m], k_max).into_iter().enumerate() {
        teams[k] = teams[k].with(w);
    }
    let lines: Vec<DecodedLine> = teams
        .into_iter()
        .enumerate()
        .filter(|(_, t)| !t.is_empty())
        .map(|(index, team)| DecodedLine {
            index,
            team,
            line: solve_team(instance, genes, index, team, increment),
        })
        .collect();
    let fitness = lines
        .iter()
        .filter_map(|l| l.line.as_ref())
        .map(|l| 1.0 / l.cycle_time as f64)
        .sum();
    Ok(Decoded { lines, fitness })
}

pub fn random_chromosome(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..len).map(|_| rng.gen::<f64>()).collect()
}

/// Biased uniform crossover: each gene comes from `elite` with probability `prob`.
pub fn crossover(elite: &[f64], other: &[f64], prob: f64, rng: &mut impl Rng) -> Vec<f64> {
    elite
        .iter()
        .zip(other)
        .map(|(&e, &o)| if rng.gen::<f64>() < prob { e } else { o })
        .collect()
}

/// Next generation from a population sorted best first: the elite copied,
/// then fresh mutants, then offspring of one random elite and one random
/// non-elite parent.
pub fn evolve(population: &[Vec<f64>], params: &BrkgaParams, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>, BrkgaError> {
    params.validate()?;
    if population.len() != params.population {
        return Err(BrkgaError::Population {
            population: population.len(),
            elite: params.elite,
            mutants: params.mutants,
        });
    }
    let len = population[0].len();
    let mut next: Vec<Vec<f64>> = population[..params.elite].to_vec();
    for _ in 0..params.mutants {
        next.push(random_chromosome(len, rng));
    }
    while next.len() < params.population {
        let e = rng.gen_range(0..params.elite);
        let o = rng.gen_range(params.elite..params.population);
        next.push(crossover(
            &population[e],
            &population[o],
            params.elite_inherit_prob,
            rng,
        ));
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRow {
    pub generation: usize,
    pub best_fitness: f64,
    pub best_ct: f64,
    pub mean_fitness: f64,
}

/// `generation,best_fitness,best_ct,mean_fitness` rows.
pub fn log_csv(log: &[GenerationRow]) -> String {
    let mut out = String::from("generation,best_fitness,best_ct,mean_fitness\n");
    for r in log {
        let _ = writeln!(
            out,
            "{},{:.9},{:.6},{:.9}",
            r.generation, r.best_fitness, r.best_ct, r.mean_fitness
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct BrkgaOutcome {
    pub solution: ParallelSolution,
    pub best_genes: Vec<f64>,
    /// Fitness of the best chromosome before repair.
    pub best_fitness: f64,
    pub generations: usize,
    pub log: Vec<GenerationRow>,
}

fn fitness_to_ct(f: f64) -> f64 {
    if f > 0.0 {
        1.0 / f
    } else {
        f64::INFINITY
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs the genetic algorithm and repairs the best decode into a valid
/// solution: workers of unsolved lines join the fastest solved line, which
/// is solved again with its own priorities.
pub fn brkga_solve(instance: &Instance, params: &BrkgaParams) -> Result<BrkgaOutcome, BrkgaError> {
    params.validate()?;
    let started = Instant::now();
    let len = chromosome_len(instance, params.k_max);
    let decode_all = |genes: &[Vec<f64>]| -> Vec<Decoded> {
        par::map(params.parallel, genes, |g| {
            decode(instance, g, params.k_max, params.increment).expect("length fixed")
        })
    };

    let mut rng = rng_for(params.seed, 0);
    let mut genes: Vec<Vec<f64>> = (0..params.population)
        .map(|_| random_chromosome(len, &mut rng))
        .collect();
    let mut decoded = decode_all(&genes);
    let mut log = Vec::new();
    let mut generation = 0;
    loop {
        let mut order: Vec<usize> = (0..genes.len()).collect();
        order.sort_by(|&a, &b| decoded[b].fitness.total_cmp(&decoded[a].fitness).then(a.cmp(&b)));
        genes = order.iter().map(|&i| std::mem::take(&mut genes[i])).collect();
        let mut slots: Vec<Option<Decoded>> = decoded.into_iter().map(Some).collect();
        decoded = order.iter().map(|&i| slots[i].take().expect("permutation")).collect();

        let best = decoded[0].fitness;
        log.push(GenerationRow {
            generation,
            best_fitness: best,
            best_ct: fitness_to_ct(best),
            mean_fitness: decoded.iter().map(|d| d.fitness).sum::<f64>() / decoded.len() as f64,
        });
        let out_of_time = params.time_limit.is_some_and(|t| started.elapsed() >= t);
        if generation >= params.max_generations || out_of_time {
            break;
        }
        generation += 1;
        let mut rng = rng_for(params.seed, generation as u64);
        let next = evolve(&genes, params, &mut rng)?;
        // Elite decodes are reused.
        let fresh = decode_all(&next[params.elite..]);
        decoded.truncate(params.elite);
        decoded.extend(fresh);
        genes = next;
    }

    let best_fitness = decoded[0].fitness;
    let solution = repair(instance, &genes[0], &decoded[0], params)?;
    Ok(BrkgaOutcome {
        solution,
        best_genes: genes[0].clone(),
        best_fitness,
        generations: generation,
        log,
    })
}

fn repair(
    instance: &Instance,
    genes: &[f64],
    decoded: &Decoded,
    params: &BrkgaParams,
) -> Result<ParallelSolution, BrkgaError> {
    let stranded = decoded
        .lines
        .iter()
        .filter(|l| l.line.is_none())
        .fold(Team::EMPTY, |acc, l| acc.union(l.team));
    let mut lines: Vec<(usize, LineSolution)> = decoded
        .lines
        .iter()
        .filter_map(|l| l.line.clone().map(|s| (l.index, s)))
        .collect();
    if !stranded.is_empty() {
        let merged = lines
            .iter()
            .enumerate()
            .min_by_key(|(_, (_, l))| l.cycle_time)
            .map(|(pos, (index, l))| (pos, *index, l.team()))
            .and_then(|(pos, index, team)| {
                solve_team(instance, genes, index, team.union(stranded), params.increment).map(|l| (pos, l))
            });
        match merged {
            Some((pos, line)) => lines[pos].1 = line,
            None => {
                let all = instance.all_workers();
                let rules = ResolvedRules::new(instance, &PriorityRules::default()).expect("default rules");
                let line = solve_resolved(instance, all, &rules, params.increment).ok_or(BrkgaError::NoSolution)?;
                lines = vec![(0, line)];
            }
        }
    }
    Ok(ParallelSolution {
        lines: lines.into_iter().map(|(_, l)| l).collect(),
        k_max: params.k_max,
    })
}
