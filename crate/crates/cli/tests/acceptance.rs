//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use palwabp::brkga::{self, BrkgaParams};
use palwabp::constructive::{solve_serial, Increment, PriorityRules};
use palwabp::exact::milp::{solution_to_assignment, verify_milp_solution};
use palwabp::exact::{enumerate_default, exhaustive_oracle, SerialOracle};
use palwabp::io::{generate_times, parse_instance, random_instance, GeneratorConfig, RandomInstanceConfig};
use palwabp::preprocess::{task_sets, worker_sets, TaskSetCatalog, DEFAULT_ENTRY_LIMIT};
use palwabp::tabu::{tabu_search, TabuParams};
use palwabp::{
    combined_cycle_time, validate_solution, Instance, LineSolution, ParallelSolution, Station, ThroughputReport,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn heskia() -> Instance {
    parse_instance(&std::fs::read_to_string(fixture("heskia_7w.txt")).unwrap()).unwrap()
}

fn toy() -> Instance {
    let mut times = vec![vec![Some(1); 5]; 3];
    times[0][1] = None;
    times[1][2] = None;
    Instance::new(
        5,
        [(0, 1), (1, 3), (0, 2), (2, 4)],
        vec!["w1".into(), "w2".into(), "w3".into()],
        times,
    )
    .unwrap()
}

/// The seeded tiny suite: `|N| ∈ 4..=8`, `|W| ∈ 2..=4`; even seeds use unit times.
fn suite() -> Vec<(u64, bool, Instance)> {
    (0..120u64)
        .map(|seed| {
            let unit = seed % 2 == 0;
            let inst = random_instance(&RandomInstanceConfig {
                tasks: 4 + (seed / 2 % 5) as usize,
                workers: 2 + (seed / 10 % 3) as usize,
                edge_prob: 0.3,
                max_time: if unit { 1 } else { 9 },
                infeasibility_rate: 0.25,
                seed,
            })
            .unwrap();
            (seed, unit, inst)
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let ct = combined_cycle_time(&[135.0, 354.0]).map_err(|e| e.to_string())?;
    check((ct - 97.73).abs() <= 0.05, format!("combined {ct}"))?;
    let inst = Instance::new(
        1,
        [],
        vec!["a".into(), "b".into()],
        vec![vec![Some(135)], vec![Some(354)]],
    )
    .unwrap();
    let sol = ParallelSolution {
        lines: vec![
            LineSolution {
                stations: vec![Station {
                    worker: 0,
                    tasks: vec![0],
                }],
                cycle_time: 135,
            },
            LineSolution {
                stations: vec![Station {
                    worker: 1,
                    tasks: vec![0],
                }],
                cycle_time: 354,
            },
        ],
        k_max: 2,
    };
    let report = ThroughputReport::new(&inst, &sol).map_err(|e| e.to_string())?;
    let (a, b) = (report.lines[0].throughput, report.lines[1].throughput);
    check(
        (a - 26.67).abs() <= 0.01 && (b - 10.17).abs() <= 0.01,
        format!("throughputs {a} {b}"),
    )?;
    Ok(format!("CT {ct:.2} s, throughputs {a:.2} / {b:.2} per hour"))
}

fn criterion_2() -> Outcome {
    let inst = toy();
    let expected = [
        vec!["{∅,1,3,5}", "{3,4,5}"],
        vec!["{∅,1,2,4}", "{2,4,5}"],
        vec!["{∅,1,2,3,4,5}"],
    ];
    for (w, want) in expected.iter().enumerate() {
        let got: Vec<String> = task_sets(&inst, w).iter().map(|t| t.label()).collect();
        check(&got == want, format!("w{}: {got:?}", w + 1))?;
    }
    Ok("windows match for w1, w2, w3".into())
}

fn criterion_3() -> Outcome {
    let inst = toy();
    let tasks = TaskSetCatalog::build(&inst);
    let cat = worker_sets(&inst, &tasks, DEFAULT_ENTRY_LIMIT);
    let (a1, a2, b1, b2, c1) = ("{∅,1,3,5}", "{3,4,5}", "{∅,1,2,4}", "{2,4,5}", "{∅,1,2,3,4,5}");
    let table: Vec<Vec<(usize, &str)>> = vec![
        vec![(0, a1), (1, b1)],
        vec![(0, a1), (1, b2)],
        vec![(0, a2), (1, b1)],
        vec![(0, a1), (2, c1)],
        vec![(0, a2), (2, c1)],
        vec![(1, b1), (2, c1)],
        vec![(1, b2), (2, c1)],
        vec![(0, a1), (1, b1), (2, c1)],
        vec![(0, a1), (1, b2), (2, c1)],
        vec![(0, a2), (1, b1), (2, c1)],
        vec![(0, a2), (1, b2), (2, c1)],
        vec![(2, c1)],
    ];
    let want: BTreeSet<Vec<(usize, String)>> = table
        .into_iter()
        .map(|e| e.into_iter().map(|(w, l)| (w, l.to_string())).collect())
        .collect();
    let got: BTreeSet<Vec<(usize, String)>> = cat
        .entries()
        .iter()
        .map(|e| {
            e.choices
                .iter()
                .map(|&(w, k)| (w, tasks.for_worker(w)[k].label()))
                .collect()
        })
        .collect();
    check(cat.entries().len() == 12, format!("{} entries", cat.entries().len()))?;
    check(got == want, format!("catalog differs: {got:?}"))?;
    Ok("12 combinations, identical as a set".into())
}

fn criterion_4() -> Outcome {
    let inst = heskia();
    let start = Instant::now();
    let out = tabu_search(&inst, &TabuParams::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let report = validate_solution(&inst, &out.solution);
    check(report.is_ok(), report.to_string())?;
    let ct = out.solution.combined_cycle_time();
    check(secs <= 120.0, format!("runtime {secs:.1} s"))?;
    check(ct < 126.0, format!("CT {ct:.3} not below 126"))?;
    check(ct <= 113.0, format!("CT {ct:.3} above 113.0"))?;
    let lines: Vec<String> = out.solution.lines.iter().map(|l| l.cycle_time.to_string()).collect();
    Ok(format!(
        "CT {ct:.3} s (lines {}), {secs:.1} s; soft target 97.7, gap {:+.1}%",
        lines.join(" / "),
        100.0 * (ct - 97.7) / 97.7
    ))
}

struct SuiteResult {
    enum_ct: f64,
    enum_lines: usize,
    serial_ct: f64,
}

fn criterion_5_and_6() -> (Outcome, Outcome) {
    let mut failures = Vec::new();
    let mut instances = 0;
    let mut tabu_hits = 0;
    let mut provable = 0;
    let mut suite_results = Vec::new();
    for (seed, unit, inst) in suite() {
        let Ok(best) = exhaustive_oracle(&inst, 2) else {
            continue;
        };
        instances += 1;
        let target = best.combined_cycle_time();
        let tasks = TaskSetCatalog::build(&inst);
        let catalog = worker_sets(&inst, &tasks, DEFAULT_ENTRY_LIMIT);
        let mut outputs: Vec<(&str, ParallelSolution)> = Vec::new();
        match enumerate_default(&inst, 2, &catalog) {
            Ok(s) => outputs.push(("enum", s)),
            Err(e) => failures.push(format!("seed {seed}: enum {e}")),
        }
        match tabu_search(
            &inst,
            &TabuParams {
                seed,
                ..TabuParams::default()
            },
        ) {
            Ok(o) => outputs.push(("tabu", o.solution)),
            Err(e) => failures.push(format!("seed {seed}: tabu {e}")),
        }
        match brkga::brkga_solve(
            &inst,
            &BrkgaParams {
                seed,
                max_generations: 200,
                ..BrkgaParams::default()
            },
        ) {
            Ok(o) => outputs.push(("brkga", o.solution)),
            Err(e) => failures.push(format!("seed {seed}: brkga {e}")),
        }
        for (name, sol) in &outputs {
            let report = validate_solution(&inst, sol);
            if !report.is_ok() {
                failures.push(format!("seed {seed}: {name} invalid: {report}"));
            }
            if sol.combined_cycle_time() < target - 1e-9 {
                failures.push(format!("seed {seed}: {name} beats the oracle"));
            }
        }
        if let Some((_, t)) = outputs.iter().find(|(n, _)| *n == "tabu") {
            if (t.combined_cycle_time() - target).abs() <= 1e-9 {
                tabu_hits += 1;
            }
        }
        let enum_sol = outputs.iter().find(|(n, _)| *n == "enum").map(|(_, s)| s.clone());
        if unit {
            // Provable case: every optimal team is a catalog team on which the
            // serial heuristic is optimal, so enumeration meets that partition.
            let oracle = SerialOracle::new(&inst).unwrap();
            let holds = best.lines.iter().all(|l| {
                let t = l.team();
                catalog.contains_team(t)
                    && solve_serial(&inst, t, &PriorityRules::default())
                        .ok()
                        .flatten()
                        .map(|s| s.cycle_time)
                        == oracle.optimum(t)
            });
            if holds {
                provable += 1;
                if let Some(s) = &enum_sol {
                    if (s.combined_cycle_time() - target).abs() > 1e-9 {
                        failures.push(format!(
                            "seed {seed}: enum {} != oracle {target}",
                            s.combined_cycle_time()
                        ));
                    }
                }
            }
        }
        if let Some(s) = enum_sol {
            let serial = solve_serial(&inst, inst.all_workers(), &PriorityRules::default())
                .unwrap()
                .map_or(f64::INFINITY, |l| l.cycle_time as f64);
            suite_results.push((
                seed,
                inst,
                SuiteResult {
                    enum_ct: s.combined_cycle_time(),
                    enum_lines: s.active_lines(),
                    serial_ct: serial,
                },
            ));
        }
    }
    // (d) is a tracked target: reported, not gated.
    let share = tabu_hits as f64 / instances.max(1) as f64;
    if instances < 100 {
        failures.push(format!("only {instances} oracle-solvable instances"));
    }
    let c5 = if failures.is_empty() {
        Ok(format!(
            "{instances} instances; all outputs valid and never better than the oracle; enum = oracle on {provable} provable unit-time cases; tracked target (d) {}: tabu optimal on {:.1}% (target 70%)",
            if share >= 0.70 { "met" } else { "MISSED" },
            100.0 * share
        ))
    } else {
        Err(failures.join("; "))
    };

    let mut eligible = 0;
    let mut runs = 0;
    let mut better = 0;
    for (seed, inst, r) in &suite_results {
        if !(r.enum_lines >= 2 && r.enum_ct < r.serial_ct - 1e-9) {
            continue;
        }
        eligible += 1;
        for rep in 0..5u64 {
            let params = TabuParams {
                seed: seed * 10 + rep,
                ..TabuParams::default()
            };
            let serial = tabu_search(
                inst,
                &TabuParams {
                    k_max: 1,
                    ..params.clone()
                },
            )
            .map(|o| o.solution.combined_cycle_time());
            let par = tabu_search(inst, &params).map(|o| o.solution.combined_cycle_time());
            runs += 1;
            if let (Ok(s), Ok(p)) = (serial, par) {
                if p < s - 1e-9 {
                    better += 1;
                }
            }
        }
    }
    let share6 = if runs == 0 { 1.0 } else { better as f64 / runs as f64 };
    let msg = format!(
        "{eligible} instances where enum beats serial with 2 lines; tabu beats serial in {better}/{runs} runs ({:.1}%)",
        100.0 * share6
    );
    let c6 = if eligible > 0 && share6 >= 0.90 {
        Ok(msg)
    } else {
        Err(msg)
    };
    (c5, c6)
}

fn criterion_7() -> Outcome {
    let inst = random_instance(&RandomInstanceConfig {
        tasks: 10,
        workers: 4,
        edge_prob: 0.25,
        max_time: 9,
        infeasibility_rate: 0.2,
        seed: 77,
    })
    .unwrap();
    for seed in 0..10u64 {
        let out = brkga::brkga_solve(
            &inst,
            &BrkgaParams {
                seed,
                max_generations: 1000,
                time_limit: None,
                ..BrkgaParams::default()
            },
        )
        .map_err(|e| e.to_string())?;
        check(
            out.log.len() == 1001,
            format!("seed {seed}: {} log rows", out.log.len()),
        )?;
        check(
            out.log.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness),
            format!("seed {seed}: best fitness decreased"),
        )?;
        let report = validate_solution(&inst, &out.solution);
        check(report.is_ok(), format!("seed {seed}: {report}"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let elite = vec![0.25; 1000];
    let other = vec![0.75; 1000];
    let mut from_elite = 0usize;
    let mut total = 0usize;
    for _ in 0..100 {
        let child = brkga::crossover(&elite, &other, 0.7, &mut rng);
        from_elite += child.iter().filter(|&&g| g == 0.25).count();
        total += child.len();
    }
    let freq = from_elite as f64 / total as f64;
    check((freq - 0.70).abs() <= 0.01, format!("inheritance frequency {freq}"))?;

    let len = brkga::chromosome_len(&inst, 2);
    for _ in 0..100 {
        let genes = brkga::random_chromosome(len, &mut rng);
        let a = brkga::decode(&inst, &genes, 2, Increment::MinTaskTime).unwrap();
        let b = brkga::decode(&inst, &genes, 2, Increment::MinTaskTime).unwrap();
        check(
            a == b && a.fitness.to_bits() == b.fitness.to_bits(),
            "decode not deterministic",
        )?;
    }
    Ok(format!("10 seeds x 1000 generations monotone and valid; inheritance {freq:.4} over {total} genes; 100 decodes repeatable"))
}

fn criterion_8() -> Outcome {
    let (t, factor, rate) = (10u64, 2u64, 0.1);
    let cfg = GeneratorConfig {
        time_factor: factor,
        infeasibility_rate: rate,
        worker_count: 100,
        seed: 2024,
    };
    let g = generate_times(&vec![t; 100], &cfg).map_err(|e| e.to_string())?;
    let cells: Vec<Option<u64>> = g.times.iter().flatten().copied().collect();
    check(cells.len() == 10_000, "cell count")?;
    let infeasible = cells.iter().filter(|c| c.is_none()).count() as f64 / cells.len() as f64;
    check((infeasible - rate).abs() <= 0.01, format!("infeasibility {infeasible}"))?;
    let bins = (factor * t - t + 1) as usize;
    let mut counts = vec![0f64; bins];
    for v in cells.iter().flatten() {
        check((t..=factor * t).contains(v), format!("value {v} out of range"))?;
        counts[(v - t) as usize] += 1.0;
    }
    let n: f64 = counts.iter().sum();
    let expected = n / bins as f64;
    let stat: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
    check(p > 0.01, format!("chi-square p = {p}"))?;
    let uncoverable = (0..100).filter(|&i| g.times.iter().all(|row| row[i].is_none())).count();
    check(uncoverable == 0, format!("{uncoverable} uncoverable tasks"))?;
    Ok(format!(
        "chi-square p = {p:.3}, infeasibility {:.2}%, 0 uncoverable",
        100.0 * infeasible
    ))
}

fn criterion_9() -> Outcome {
    let mut checked = 0;
    let mut corruptions = 0;
    for (seed, _, inst) in suite() {
        let Ok(best) = exhaustive_oracle(&inst, 2) else {
            continue;
        };
        let map = solution_to_assignment(&inst, &best);
        let report = verify_milp_solution(&inst, 2, &map).map_err(|e| e.to_string())?;
        check(report.feasible, format!("seed {seed}: {:?}", report.violations))?;
        check(
            (report.objective - best.throughput_rate()).abs() <= 1e-6 && report.objective_consistent,
            format!(
                "seed {seed}: objective {} vs {}",
                report.objective,
                best.throughput_rate()
            ),
        )?;
        checked += 1;

        let expect = |map: &std::collections::BTreeMap<String, f64>, tag: u8, what: &str| -> Result<(), String> {
            let r = verify_milp_solution(&inst, 2, map).map_err(|e| e.to_string())?;
            check(
                !r.feasible && r.violated_tags().contains(&tag),
                format!("seed {seed}: {what} gave tags {:?}", r.violated_tags()),
            )
        };
        let mut m = map.clone();
        let key = m.keys().find(|k| k.starts_with("x_")).unwrap().clone();
        m.remove(&key);
        expect(&m, 2, "dropped task")?;
        corruptions += 1;

        let mut m = map.clone();
        let slots = inst.worker_count();
        m.insert(format!("y_{slots}_1_2"), 1.0);
        if best.lines.len() < 2 || best.lines[1].stations.len() < slots {
            expect(&m, 3, "duplicated worker")?;
            corruptions += 1;
        }

        let mut m = map.clone();
        m.insert("F_1".into(), 2.0);
        expect(&m, 13, "rate above bound")?;
        corruptions += 1;

        let line = &best.lines[0];
        let station_of = |task: usize| line.stations.iter().position(|s| s.tasks.contains(&task));
        if let Some(&(a, b)) = inst
            .edges()
            .iter()
            .find(|&&(a, _)| station_of(a).is_some_and(|s| s > 0))
        {
            let sb = station_of(b).unwrap();
            let wb = line.stations[sb].worker;
            let w0 = line.stations[0].worker;
            let mut m = map.clone();
            m.remove(&format!("x_{}_{}_{}_1", sb + 1, wb + 1, b + 1));
            m.remove(&format!("v_{}_{}_{}_1", sb + 1, wb + 1, b + 1));
            m.insert(format!("x_1_{}_{}_1", w0 + 1, b + 1), 1.0);
            expect(&m, 5, &format!("task {} moved before {}", b + 1, a + 1))?;
            corruptions += 1;
        }
    }
    check(checked >= 100, format!("only {checked} instances"))?;
    Ok(format!(
        "{checked} oracle optima verified; {corruptions} corrupted maps rejected with the expected tag"
    ))
}

fn solve_bytes(instance: &Path, method: &str, extra: &[&str], dir: &Path, tag: &str) -> Result<Vec<u8>, String> {
    let out = dir.join(format!("{method}-{tag}.txt"));
    let mut args = vec![
        "palwabp".to_string(),
        "solve".into(),
        instance.display().to_string(),
        "--method".into(),
        method.into(),
        "--kmax".into(),
        "2".into(),
        "--seed".into(),
        "11".into(),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = palwabp_cli::run(args, &mut o, &mut e);
    check(
        code == 0,
        format!("{method}: exit {code}: {}", String::from_utf8_lossy(&e)),
    )?;
    std::fs::read(&out).map_err(|e| e.to_string())
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let heskia = fixture("heskia_7w.txt");
    for (method, extra) in [
        ("tabu", vec![]),
        ("brkga", vec!["--generations", "60"]),
        ("enum", vec![]),
    ] {
        let a = solve_bytes(&heskia, method, &extra, dir.path(), "a")?;
        let b = solve_bytes(&heskia, method, &extra, dir.path(), "b")?;
        check(a == b, format!("{method}: files differ"))?;
    }
    Ok("tabu, brkga and enum solution files byte-identical across two runs".into())
}

fn main() {
    let start = Instant::now();
    let (c5, c6) = criterion_5_and_6();
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "combined cycle time arithmetic", criterion_1()),
        (2, "task window generation", criterion_2()),
        (3, "worker set catalog", criterion_3()),
        (4, "HESKIA tabu search", criterion_4()),
        (5, "oracle equivalence", c5),
        (6, "parallel-benefit direction", c6),
        (7, "BRKGA mechanics", criterion_7()),
        (8, "generator statistics", criterion_8()),
        (9, "MILP round trip", criterion_9()),
        (10, "pipeline determinism", criterion_10()),
    ];
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
