//! Instance text format, SALBP base files and the instance generator.
//!
//! Instance format (UTF-8, `#` starts a comment, sections in fixed order):
//!
//! ```text
//! tasks 5
//! workers 3
//! precedence
//! 1 2
//! 2 4
//! end
//! times
//! w1: 1 - 1 1 1
//! w2: 1 1 - 1 1
//! w3: 1 1 1 1 1
//! ```
//!
//! Task ids are 1-based and `-` marks a task the worker cannot execute.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Instance, InstanceError, Time};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate time entry for worker {worker}")]
    DuplicateTimes { line: usize, worker: String },
    #[error("unexpected end of input: {0}")]
    UnexpectedEof(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((k + 1, body))
    })
}

fn keyword_count(line: usize, body: &str, keyword: &str) -> Result<usize, ParseError> {
    let mut parts = body.split_whitespace();
    if parts.next() != Some(keyword) {
        return Err(syntax(line, format!("expected `{keyword} <count>`")));
    }
    let value = parts
        .next()
        .ok_or_else(|| syntax(line, format!("missing count after `{keyword}`")))?;
    if parts.next().is_some() {
        return Err(syntax(line, "trailing tokens"));
    }
    value
        .parse()
        .map_err(|_| syntax(line, format!("invalid count {value:?}")))
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut lines = content_lines(text);
    let mut next = |what: &str| lines.next().ok_or_else(|| ParseError::UnexpectedEof(what.to_string()));

    let (ln, body) = next("tasks header")?;
    let n = keyword_count(ln, body, "tasks")?;
    let (ln, body) = next("workers header")?;
    let m = keyword_count(ln, body, "workers")?;

    let (ln, body) = next("precedence section")?;
    if body != "precedence" {
        return Err(syntax(ln, "expected `precedence`"));
    }
    let mut edges = Vec::new();
    loop {
        let (ln, body) = next("`end` of precedence section")?;
        if body == "end" {
            break;
        }
        let ids: Vec<&str> = body.split_whitespace().collect();
        if ids.len() != 2 {
            return Err(syntax(ln, "expected a pair `i j`"));
        }
        let parse_id = |s: &str| -> Result<usize, ParseError> {
            let id: usize = s.parse().map_err(|_| syntax(ln, format!("invalid task id {s:?}")))?;
            if id == 0 || id > n {
                return Err(syntax(ln, format!("task id {id} out of range 1..={n}")));
            }
            Ok(id - 1)
        };
        edges.push((parse_id(ids[0])?, parse_id(ids[1])?));
    }

    let (ln, body) = next("times section")?;
    if body != "times" {
        return Err(syntax(ln, "expected `times`"));
    }
    let mut workers: Vec<String> = Vec::with_capacity(m);
    let mut times = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, body) = next("worker time row")?;
        let (name, values) = body
            .split_once(':')
            .ok_or_else(|| syntax(ln, "expected `worker: v1 v2 ...`"))?;
        let name = name.trim();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(syntax(ln, format!("invalid worker name {name:?}")));
        }
        if workers.iter().any(|w| w == name) {
            return Err(ParseError::DuplicateTimes {
                line: ln,
                worker: name.to_string(),
            });
        }
        let mut row = Vec::with_capacity(n);
        for token in values.split_whitespace() {
            if token == "-" {
                row.push(None);
            } else {
                let t: Time = token
                    .parse()
                    .map_err(|_| syntax(ln, format!("invalid time {token:?}")))?;
                if t == 0 {
                    return Err(syntax(ln, "times must be positive"));
                }
                row.push(Some(t));
            }
        }
        if row.len() != n {
            return Err(syntax(ln, format!("expected {n} times, found {}", row.len())));
        }
        workers.push(name.to_string());
        times.push(row);
    }
    if let Some((ln, body)) = lines.next() {
        if body.contains(':') {
            return Err(ParseError::DuplicateTimes {
                line: ln,
                worker: body.split(':').next().unwrap_or("").trim().to_string(),
            });
        }
        return Err(syntax(ln, "unexpected content after times section"));
    }
    Ok(Instance::new(n, edges, workers, times)?)
}

/// Serialises with tasks ascending and workers in declared order.
pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::new();
    out.push_str(&format!("tasks {}\n", instance.task_count()));
    out.push_str(&format!("workers {}\n", instance.worker_count()));
    out.push_str("precedence\n");
    for &(a, b) in instance.edges() {
        out.push_str(&format!("{} {}\n", a + 1, b + 1));
    }
    out.push_str("end\ntimes\n");
    for (name, row) in instance.workers().iter().zip(instance.times()) {
        let cells: Vec<String> = row
            .iter()
            .map(|t| t.map_or_else(|| "-".to_string(), |v| v.to_string()))
            .collect();
        out.push_str(&format!("{name}: {}\n", cells.join(" ")));
    }
    out
}

/// A SALBP instance: task times and precedence (0-based task ids).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SalbpBase {
    pub times: Vec<Time>,
    pub edges: Vec<(usize, usize)>,
}

/// Reads either the `.IN2` layout (task count, one time per line, `i,j`
/// pairs, `-1,-1`) or the `.alb` layout with `<number of tasks>`,
/// `<task times>` and `<precedence relations>` sections.
pub fn parse_salbp(text: &str) -> Result<SalbpBase, ParseError> {
    let base = if text.contains("<number of tasks>") {
        parse_alb(text)?
    } else {
        parse_in2(text)?
    };
    // Validate acyclicity and ids through the instance constructor.
    let probe = Instance::new(
        base.times.len(),
        base.edges.iter().copied(),
        vec!["base".into()],
        vec![base.times.iter().map(|&t| Some(t)).collect()],
    )?;
    drop(probe);
    Ok(base)
}

fn parse_pair(line: usize, body: &str) -> Result<(i64, i64), ParseError> {
    let (a, b) = body.split_once(',').ok_or_else(|| syntax(line, "expected `i,j`"))?;
    let a = a.trim().parse().map_err(|_| syntax(line, "invalid task id"))?;
    let b = b.trim().parse().map_err(|_| syntax(line, "invalid task id"))?;
    Ok((a, b))
}

fn task_index(line: usize, id: i64, n: usize) -> Result<usize, ParseError> {
    if id < 1 || id as usize > n {
        return Err(syntax(line, format!("task id {id} out of range 1..={n}")));
    }
    Ok(id as usize - 1)
}

fn parse_positive_time(line: usize, s: &str) -> Result<Time, ParseError> {
    match s.parse::<Time>() {
        Ok(t) if t > 0 => Ok(t),
        _ => Err(syntax(line, format!("invalid task time {s:?}"))),
    }
}

fn parse_in2(text: &str) -> Result<SalbpBase, ParseError> {
    let mut lines = content_lines(text);
    let (ln, body) = lines
        .next()
        .ok_or_else(|| ParseError::UnexpectedEof("task count".into()))?;
    let n: usize = body.parse().map_err(|_| syntax(ln, "expected task count"))?;
    let mut times = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, body) = lines
            .next()
            .ok_or_else(|| ParseError::UnexpectedEof("task time".into()))?;
        times.push(parse_positive_time(ln, body)?);
    }
    let mut edges = Vec::new();
    for (ln, body) in lines {
        let (a, b) = parse_pair(ln, body)?;
        if a == -1 && b == -1 {
            break;
        }
        edges.push((task_index(ln, a, n)?, task_index(ln, b, n)?));
    }
    Ok(SalbpBase { times, edges })
}

fn parse_alb(text: &str) -> Result<SalbpBase, ParseError> {
    let mut section = String::new();
    let mut n: Option<usize> = None;
    let mut times: Vec<Option<Time>> = Vec::new();
    let mut edges = Vec::new();
    for (ln, body) in content_lines(text) {
        if body.starts_with('<') {
            section = body.to_string();
            if section == "<end>" {
                break;
            }
            continue;
        }
        match section.as_str() {
            "<number of tasks>" => {
                let count: usize = body.parse().map_err(|_| syntax(ln, "invalid task count"))?;
                n = Some(count);
                times = vec![None; count];
            }
            "<task times>" => {
                let count = n.ok_or_else(|| syntax(ln, "task times before task count"))?;
                let mut parts = body.split_whitespace();
                let id: i64 = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| syntax(ln, "invalid task id"))?;
                let t = parse_positive_time(ln, parts.next().unwrap_or(""))?;
                times[task_index(ln, id, count)?] = Some(t);
            }
            "<precedence relations>" => {
                let count = n.ok_or_else(|| syntax(ln, "precedence before task count"))?;
                let (a, b) = parse_pair(ln, body)?;
                edges.push((task_index(ln, a, count)?, task_index(ln, b, count)?));
            }
            _ => {}
        }
    }
    if n.is_none() {
        return Err(ParseError::UnexpectedEof("<number of tasks>".into()));
    }
    let times = times
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| ParseError::UnexpectedEof(format!("time of task {}", i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SalbpBase { times, edges })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// Feasible times are drawn from `[t, time_factor * t]`.
    pub time_factor: u64,
    /// Probability that a worker cannot execute a task.
    pub infeasibility_rate: f64,
    pub worker_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("time factor must be at least 1")]
    TimeFactor,
    #[error("infeasibility rate must be in [0, 1), got {0}")]
    Rate(f64),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        if self.worker_count < 1 {
            return Err(GenerateError::NoWorkers);
        }
        if self.time_factor < 1 {
            return Err(GenerateError::TimeFactor);
        }
        if !(0.0..1.0).contains(&self.infeasibility_rate) {
            return Err(GenerateError::Rate(self.infeasibility_rate));
        }
        Ok(())
    }
}

/// A sampled time matrix plus the cells that were forced feasible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedTimes {
    /// `times[w][i]`.
    pub times: Vec<Vec<Option<Time>>>,
    /// `(worker, task)` cells re-drawn as feasible so every task has a capable worker.
    pub repaired: Vec<(usize, usize)>,
}

/// Random stream for one matrix cell; substreams make every cell
/// independent of the matrix shape traversal order.
fn cell_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples the worker × task matrix. Cell `(w, i)` uses ChaCha8 stream
/// `w * n + i`; the repair draw for task `i` uses stream `m * n + i`.
pub fn generate_times(base_times: &[Time], cfg: &GeneratorConfig) -> Result<GeneratedTimes, GenerateError> {
    cfg.validate()?;
    let n = base_times.len();
    let m = cfg.worker_count;
    let mut times = vec![vec![None; n]; m];
    for (w, row) in times.iter_mut().enumerate() {
        for (i, cell) in row.iter_mut().enumerate() {
            let mut rng = cell_rng(cfg.seed, (w * n + i) as u64);
            let t = base_times[i];
            let infeasible = rng.gen::<f64>() < cfg.infeasibility_rate;
            *cell = (!infeasible).then(|| rng.gen_range(t..=cfg.time_factor * t));
        }
    }
    let mut repaired = Vec::new();
    for (i, &t) in base_times.iter().enumerate() {
        if times.iter().all(|row| row[i].is_none()) {
            let mut rng = cell_rng(cfg.seed, (m * n + i) as u64);
            let w = rng.gen_range(0..m);
            times[w][i] = Some(rng.gen_range(t..=cfg.time_factor * t));
            repaired.push((w, i));
        }
    }
    Ok(GeneratedTimes { times, repaired })
}

/// Builds an ALWABP instance from a SALBP base; workers are named `W1..Wm`.
pub fn generate_instance(base: &SalbpBase, cfg: &GeneratorConfig) -> Result<Instance, GenerateError> {
    let generated = generate_times(&base.times, cfg)?;
    let workers = (1..=cfg.worker_count).map(|w| format!("W{w}")).collect();
    Ok(Instance::new(
        base.times.len(),
        base.edges.iter().copied(),
        workers,
        generated.times,
    )?)
}

/// Shape of a random instance built from scratch (no SALBP base), used for
/// seeded test and benchmark suites.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomInstanceConfig {
    pub tasks: usize,
    pub workers: usize,
    /// Probability of an edge `i -> j` for each pair `i < j`.
    pub edge_prob: f64,
    /// Feasible times are drawn from `1..=max_time`.
    pub max_time: Time,
    pub infeasibility_rate: f64,
    pub seed: u64,
}

/// A random DAG and time matrix; tasks no worker can execute get one
/// random capable worker.
pub fn random_instance(cfg: &RandomInstanceConfig) -> Result<Instance, GenerateError> {
    if cfg.workers == 0 {
        return Err(GenerateError::NoWorkers);
    }
    if cfg.max_time < 1 {
        return Err(GenerateError::TimeFactor);
    }
    if !(0.0..1.0).contains(&cfg.infeasibility_rate) {
        return Err(GenerateError::Rate(cfg.infeasibility_rate));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, m) = (cfg.tasks, cfg.workers);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < cfg.edge_prob {
                edges.push((i, j));
            }
        }
    }
    let mut times = vec![vec![None; n]; m];
    for row in times.iter_mut() {
        for cell in row.iter_mut() {
            let infeasible = rng.gen::<f64>() < cfg.infeasibility_rate;
            let t = rng.gen_range(1..=cfg.max_time);
            *cell = (!infeasible).then_some(t);
        }
    }
    for i in 0..n {
        if times.iter().all(|row| row[i].is_none()) {
            let w = rng.gen_range(0..m);
            times[w][i] = Some(rng.gen_range(1..=cfg.max_time));
        }
    }
    let workers = (1..=m).map(|w| format!("W{w}")).collect();
    Ok(Instance::new(n, edges, workers, times)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "# toy\ntasks 5\nworkers 3\nprecedence\n1 2\n2 4\n1 3\n3 5\nend\ntimes\nw1: 1 - 1 1 1\nw2: 1 1 - 1 1\nw3: 1 1 1 1 1\n";

    #[test]
    fn parses_toy_and_round_trips() {
        let inst = parse_instance(TOY).unwrap();
        assert_eq!(inst.task_count(), 5);
        assert_eq!(inst.worker_count(), 3);
        assert_eq!(inst.time(0, 1), None);
        assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn one_task_one_worker_document() {
        let inst = Instance::new(1, [], vec!["a".into()], vec![vec![Some(7)]]).unwrap();
        let text = write_instance(&inst);
        assert_eq!(text, "tasks 1\nworkers 1\nprecedence\nend\ntimes\na: 7\n");
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn rejects_cycles_uncoverable_and_duplicates() {
        let cyc = "tasks 2\nworkers 1\nprecedence\n2 1\n1 2\nend\ntimes\na: 1 1\n";
        assert!(parse_instance(cyc)
            .unwrap_err()
            .to_string()
            .contains("precedence cycle"));
        let unc = "tasks 4\nworkers 2\nprecedence\nend\ntimes\na: 1 1 1 -\nb: 1 1 1 -\n";
        assert!(parse_instance(unc)
            .unwrap_err()
            .to_string()
            .contains("uncoverable task 4"));
        let dup = "tasks 1\nworkers 2\nprecedence\nend\ntimes\na: 1\na: 2\n";
        assert!(matches!(
            parse_instance(dup),
            Err(ParseError::DuplicateTimes { line: 7, .. })
        ));
        let extra = "tasks 1\nworkers 1\nprecedence\nend\ntimes\na: 1\na: 2\n";
        assert!(matches!(parse_instance(extra), Err(ParseError::DuplicateTimes { .. })));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let bad = "tasks 2\nworkers 1\nprecedence\n1 x\nend\ntimes\na: 1 1\n";
        assert_eq!(
            parse_instance(bad).unwrap_err(),
            ParseError::Syntax {
                line: 4,
                message: "invalid task id \"x\"".into()
            }
        );
        let short = "tasks 3\nworkers 1\nprecedence\nend\ntimes\na: 1 1\n";
        assert!(matches!(parse_instance(short), Err(ParseError::Syntax { line: 6, .. })));
    }

    #[test]
    fn salbp_formats() {
        let in2 = "3\n10\n20\n30\n1,2\n2,3\n-1,-1\n";
        let base = parse_salbp(in2).unwrap();
        assert_eq!(base.times, vec![10, 20, 30]);
        assert_eq!(base.edges, vec![(0, 1), (1, 2)]);
        let alb = "<number of tasks>\n3\n\n<cycle time>\n1000\n\n<task times>\n1 10\n2 20\n3 30\n\n<precedence relations>\n1,3\n\n<end>\n";
        let base = parse_salbp(alb).unwrap();
        assert_eq!(base.times, vec![10, 20, 30]);
        assert_eq!(base.edges, vec![(0, 2)]);
    }

    #[test]
    fn generator_degenerate_and_ranges() {
        let base = SalbpBase {
            times: vec![40, 3, 17],
            edges: vec![(0, 1)],
        };
        let flat = GeneratorConfig {
            time_factor: 1,
            infeasibility_rate: 0.0,
            worker_count: 4,
            seed: 9,
        };
        let inst = generate_instance(&base, &flat).unwrap();
        for w in 0..4 {
            for i in 0..3 {
                assert_eq!(inst.time(w, i), Some(base.times[i]));
            }
        }
        let cfg = GeneratorConfig {
            time_factor: 2,
            infeasibility_rate: 0.2,
            worker_count: 5,
            seed: 42,
        };
        let a = generate_instance(&base, &cfg).unwrap();
        assert_eq!(a, generate_instance(&base, &cfg).unwrap());
        for w in 0..5 {
            if let Some(t) = a.time(w, 0) {
                assert!((40..=80).contains(&t));
            }
        }
        let bad = GeneratorConfig {
            worker_count: 0,
            ..cfg.clone()
        };
        assert_eq!(generate_instance(&base, &bad), Err(GenerateError::NoWorkers));
        let bad = GeneratorConfig {
            infeasibility_rate: 1.0,
            ..cfg
        };
        assert!(matches!(generate_instance(&base, &bad), Err(GenerateError::Rate(_))));
    }
}
