//! Cross-checks on small random instances against a brute-force enumerator
//! written independently of the library's dynamic program.

use palwabp::brkga::{brkga_solve, BrkgaParams};
use palwabp::constructive::{solve_serial, PriorityRules};
use palwabp::exact::{enumerate_default, exhaustive_oracle, SerialOracle};
use palwabp::io::{random_instance, RandomInstanceConfig};
use palwabp::preprocess::{worker_sets, TaskSetCatalog, DEFAULT_ENTRY_LIMIT};
use palwabp::tabu::{tabu_search, TabuParams};
use palwabp::{lower_bound, validate_solution, Instance, Team, Time};
use proptest::prelude::*;

fn tiny(seed: u64, tasks: usize, workers: usize) -> Instance {
    random_instance(&RandomInstanceConfig {
        tasks,
        workers,
        edge_prob: 0.3,
        max_time: 9,
        infeasibility_rate: 0.25,
        seed,
    })
    .unwrap()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Tries every station order and every task-to-station map.
fn brute_force(inst: &Instance, team: Team) -> Option<Time> {
    let members: Vec<usize> = team.iter().collect();
    let n = inst.task_count();
    let s = members.len();
    let mut best: Option<Time> = None;
    for order in permutations(&members) {
        let total = s.pow(n as u32);
        'assign: for code in 0..total {
            let mut station = vec![0; n];
            let mut c = code;
            for slot in station.iter_mut() {
                *slot = c % s;
                c /= s;
            }
            for &(a, b) in inst.edges() {
                if station[a] > station[b] {
                    continue 'assign;
                }
            }
            let mut loads = vec![0; s];
            for i in 0..n {
                match inst.time(order[station[i]], i) {
                    Some(t) => loads[station[i]] += t,
                    None => continue 'assign,
                }
            }
            let ct = *loads.iter().max().unwrap();
            best = Some(best.map_or(ct, |b: Time| b.min(ct)));
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dynamic_program_matches_brute_force(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=3) {
        let inst = tiny(seed, n, m);
        let oracle = SerialOracle::new(&inst).unwrap();
        for bits in 1..(1u64 << m) {
            let team = Team::from_bits(bits);
            let exact = brute_force(&inst, team);
            prop_assert_eq!(oracle.optimum(team), exact);
            if let Some(opt) = exact {
                let line = oracle.line(team).unwrap();
                prop_assert_eq!(line.cycle_time, opt);
                prop_assert_eq!(line.team(), team);
                prop_assert!(lower_bound(&inst, team).unwrap().unwrap() <= opt);
                if let Some(h) = solve_serial(&inst, team, &PriorityRules::default()).unwrap() {
                    prop_assert!(h.cycle_time >= opt);
                }
            }
        }
    }
}

#[test]
fn heuristics_never_beat_the_oracle() {
    for seed in 0..40u64 {
        let inst = tiny(seed, 4 + (seed % 5) as usize, 2 + (seed % 3) as usize);
        let Ok(best) = exhaustive_oracle(&inst, 2) else {
            continue;
        };
        let target = best.combined_cycle_time();
        let tasks = TaskSetCatalog::build(&inst);
        let catalog = worker_sets(&inst, &tasks, DEFAULT_ENTRY_LIMIT);
        let mut found = Vec::new();
        if let Ok(s) = enumerate_default(&inst, 2, &catalog) {
            found.push(("enum", s));
        }
        if let Ok(o) = tabu_search(
            &inst,
            &TabuParams {
                seed,
                max_idle_iterations: 100,
                max_restarts: 3,
                ..TabuParams::default()
            },
        ) {
            found.push(("tabu", o.solution));
        }
        let o = brkga_solve(
            &inst,
            &BrkgaParams {
                seed,
                max_generations: 30,
                ..BrkgaParams::default()
            },
        );
        if let Ok(o) = o {
            found.push(("brkga", o.solution));
        }
        for (name, sol) in found {
            let report = validate_solution(&inst, &sol);
            assert!(report.is_ok(), "{name} seed {seed}: {report}");
            assert!(sol.combined_cycle_time() >= target - 1e-9, "{name} seed {seed}");
        }
    }
}

#[test]
fn fitness_and_cycle_time_order_alike() {
    let inst = tiny(5, 7, 4);
    let oracle = SerialOracle::new(&inst).unwrap();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for bits in 1..16u64 {
        let a = Team::from_bits(bits);
        let b = Team::full(4).difference(a);
        if let (Some(x), Some(y)) = (oracle.optimum(a), oracle.optimum(b)) {
            let rate = 1.0 / x as f64 + 1.0 / y as f64;
            pairs.push((rate, 1.0 / rate));
        }
    }
    for p in &pairs {
        for q in &pairs {
            assert_eq!(p.0 > q.0, p.1 < q.1);
        }
    }
}
