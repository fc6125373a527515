//! Solution document.
//!
//! ```text
//! kmax 2
//! line 1
//! station 1 worker w1: 1 3 5   # load 3
//! station 2 worker w2: 2 4     # load 2
//! cycle 3
//! line 2
//! station 1 worker w3: 1 2 3 4 5   # load 5
//! cycle 5
//! combined 1.875000
//! throughput 1920.000000
//! ```
//!
//! Task ids are 1-based; `#` starts a comment. `combined` is the combined
//! cycle time in seconds and `throughput` the products per hour.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Instance, LineSolution, ParallelSolution, Station, Time};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolutionParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `{0}`")]
    Missing(&'static str),
}

/// A parsed document with the values it claims.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionDocument {
    /// Stations as written; each line's `cycle_time` is the claimed cycle.
    pub solution: ParallelSolution,
    pub claimed_combined: f64,
}

pub fn write_solution(instance: &Instance, solution: &ParallelSolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "kmax {}", solution.k_max);
    for (k, line) in solution.lines.iter().enumerate() {
        let _ = writeln!(out, "line {}", k + 1);
        for (s, station) in line.stations.iter().enumerate() {
            let load: Time = station
                .tasks
                .iter()
                .map(|&i| instance.time(station.worker, i).unwrap_or(0))
                .sum();
            let tasks: Vec<String> = station.tasks.iter().map(|i| (i + 1).to_string()).collect();
            let _ = writeln!(
                out,
                "station {} worker {}: {}   # load {}",
                s + 1,
                instance.workers()[station.worker],
                tasks.join(" "),
                load
            );
        }
        let _ = writeln!(out, "cycle {}", line.cycle_time);
    }
    let _ = writeln!(out, "combined {:.6}", solution.combined_cycle_time());
    let _ = writeln!(out, "throughput {:.6}", solution.combined_throughput());
    out
}

pub fn parse_solution(instance: &Instance, text: &str) -> Result<SolutionDocument, SolutionParseError> {
    let err = |line: usize, message: String| SolutionParseError::Syntax { line, message };
    let mut k_max = None;
    let mut lines: Vec<LineSolution> = Vec::new();
    let mut open: Option<Vec<Station>> = None;
    let mut combined = None;
    for (n, raw) in text.lines().enumerate() {
        let ln = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (head, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        match head {
            "kmax" => {
                k_max = Some(rest.parse::<usize>().map_err(|_| err(ln, "bad kmax".into()))?);
            }
            "line" => {
                if open.is_some() {
                    return Err(err(ln, "previous line has no `cycle`".into()));
                }
                let k: usize = rest.parse().map_err(|_| err(ln, "bad line number".into()))?;
                if k != lines.len() + 1 {
                    return Err(err(ln, format!("expected line {}", lines.len() + 1)));
                }
                open = Some(Vec::new());
            }
            "station" => {
                let stations = open.as_mut().ok_or_else(|| err(ln, "station outside a line".into()))?;
                let (spec, tasks) = rest
                    .split_once(':')
                    .ok_or_else(|| err(ln, "expected `station s worker w: tasks`".into()))?;
                let mut parts = spec.split_whitespace();
                let s: usize = parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| err(ln, "bad station number".into()))?;
                if s != stations.len() + 1 {
                    return Err(err(ln, format!("expected station {}", stations.len() + 1)));
                }
                let (Some("worker"), Some(name), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err(ln, "expected `worker <name>`".into()));
                };
                let worker = instance
                    .worker_index(name)
                    .ok_or_else(|| err(ln, format!("unknown worker `{name}`")))?;
                let tasks = tasks
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<usize>()
                            .ok()
                            .filter(|&i| i >= 1)
                            .map(|i| i - 1)
                            .ok_or_else(|| err(ln, format!("bad task id `{t}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                stations.push(Station { worker, tasks });
            }
            "cycle" => {
                let stations = open.take().ok_or_else(|| err(ln, "cycle outside a line".into()))?;
                let cycle_time: Time = rest.parse().map_err(|_| err(ln, "bad cycle time".into()))?;
                lines.push(LineSolution { stations, cycle_time });
            }
            "combined" => {
                combined = Some(rest.parse::<f64>().map_err(|_| err(ln, "bad combined value".into()))?);
            }
            "throughput" => {
                rest.parse::<f64>()
                    .map_err(|_| err(ln, "bad throughput value".into()))?;
            }
            other => return Err(err(ln, format!("unexpected `{other}`"))),
        }
    }
    if open.is_some() {
        return Err(SolutionParseError::Missing("cycle"));
    }
    Ok(SolutionDocument {
        solution: ParallelSolution {
            k_max: k_max.ok_or(SolutionParseError::Missing("kmax"))?,
            lines,
        },
        claimed_combined: combined.ok_or(SolutionParseError::Missing("combined"))?,
    })
}
