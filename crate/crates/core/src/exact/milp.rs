//! Linearised mixed-integer model, LP-file export and verification of
//! externally produced variable maps.
//!
//! Indices in variable names are 1-based: `x_s_w_i_k`, `y_s_w_k`, `z_k`,
//! `C_k`, `F_k`, `f_s_w_k`, `v_s_w_i_k`. Each line has one station slot per
//! worker of the instance. Rates are in products per second, so every rate
//! is at most 1 and the big-M constant is 1.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{validate_solution, Instance, LineSolution, ParallelSolution, Station};

pub const TOLERANCE: f64 = 1e-6;
pub const BIG_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X { s: usize, w: usize, i: usize, k: usize },
    Y { s: usize, w: usize, k: usize },
    Z { k: usize },
    C { k: usize },
    F { k: usize },
    Rate { s: usize, w: usize, k: usize },
    V { s: usize, w: usize, i: usize, k: usize },
}

impl Var {
    pub fn is_binary(self) -> bool {
        matches!(self, Var::X { .. } | Var::Y { .. } | Var::Z { .. })
    }

    /// Tag of the family's domain constraint.
    fn domain_tag(self) -> u8 {
        match self {
            Var::X { .. } => 9,
            Var::Y { .. } => 10,
            Var::Z { .. } => 11,
            Var::C { .. } => 7,
            Var::F { .. } => 19,
            Var::Rate { .. } => 20,
            Var::V { .. } => 21,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::X { s, w, i, k } => write!(f, "x_{}_{}_{}_{}", s + 1, w + 1, i + 1, k + 1),
            Var::Y { s, w, k } => write!(f, "y_{}_{}_{}", s + 1, w + 1, k + 1),
            Var::Z { k } => write!(f, "z_{}", k + 1),
            Var::C { k } => write!(f, "C_{}", k + 1),
            Var::F { k } => write!(f, "F_{}", k + 1),
            Var::Rate { s, w, k } => write!(f, "f_{}_{}_{}", s + 1, w + 1, k + 1),
            Var::V { s, w, i, k } => write!(f, "v_{}_{}_{}_{}", s + 1, w + 1, i + 1, k + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MilpError {
    #[error("malformed variable name `{0}`")]
    MalformedName(String),
    #[error("variable `{0}` is outside the model dimensions")]
    OutOfRange(String),
    #[error("line {line}: expected `name value`")]
    Syntax { line: usize },
    #[error("k_max must be at least 1")]
    KMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    /// Constraint family number; see [`family_description`].
    pub tag: u8,
    pub terms: Vec<(Var, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// One-line description of a constraint family, used in the LP comments.
pub fn family_description(tag: u8) -> &'static str {
    match tag {
        2 => "each task once per active line",
        3 => "each worker in exactly one station",
        4 => "at most one worker per station, none on inactive lines",
        5 => "precedence as suffix-sum dominance",
        6 => "tasks only at the worker's own station",
        7 => "station load at most the line cycle time",
        8 => "incompatible worker-task pairs",
        9..=11 => "binary domains",
        13 => "inactive lines have zero rate",
        14 => "line rate bounded by each occupied station",
        15 => "station rate times load at most one",
        16 => "unoccupied stations have zero rate",
        17 => "v at least f when the task is assigned",
        18 => "v zero when the task is not assigned",
        19..=21 => "non-negative rates",
        _ => "",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub tasks: usize,
    pub workers: usize,
    pub stations: usize,
    pub k_max: usize,
    pub big_m: f64,
    pub variables: Vec<Var>,
    pub rows: Vec<Row>,
}

impl MilpModel {
    pub fn build(instance: &Instance, k_max: usize) -> Result<Self, MilpError> {
        if k_max == 0 {
            return Err(MilpError::KMax);
        }
        let n = instance.task_count();
        let m = instance.worker_count();
        let st = m;
        let big_m = BIG_M;
        let mut variables = Vec::new();
        for k in 0..k_max {
            for s in 0..st {
                for w in 0..m {
                    for i in 0..n {
                        variables.push(Var::X { s, w, i, k });
                    }
                }
            }
        }
        for k in 0..k_max {
            for s in 0..st {
                for w in 0..m {
                    variables.push(Var::Y { s, w, k });
                }
            }
        }
        variables.extend((0..k_max).map(|k| Var::Z { k }));
        variables.extend((0..k_max).map(|k| Var::C { k }));
        variables.extend((0..k_max).map(|k| Var::F { k }));
        for k in 0..k_max {
            for s in 0..st {
                for w in 0..m {
                    variables.push(Var::Rate { s, w, k });
                }
            }
        }
        for k in 0..k_max {
            for s in 0..st {
                for w in 0..m {
                    for i in 0..n {
                        variables.push(Var::V { s, w, i, k });
                    }
                }
            }
        }

        let mut rows = Vec::new();
        let mut row = |tag: u8, name: String, terms: Vec<(Var, f64)>, sense, rhs| {
            rows.push(Row {
                name: format!("e{tag}_{name}"),
                tag,
                terms,
                sense,
                rhs,
            });
        };
        let p = |w: usize, i: usize| instance.time(w, i).map(|t| t as f64);

        for k in 0..k_max {
            for i in 0..n {
                let mut terms: Vec<(Var, f64)> = (0..st)
                    .flat_map(|s| (0..m).map(move |w| (Var::X { s, w, i, k }, 1.0)))
                    .collect();
                terms.push((Var::Z { k }, -1.0));
                row(2, format!("i{}_k{}", i + 1, k + 1), terms, Sense::Eq, 0.0);
            }
        }
        for w in 0..m {
            let terms = (0..k_max)
                .flat_map(|k| (0..st).map(move |s| (Var::Y { s, w, k }, 1.0)))
                .collect();
            row(3, format!("w{}", w + 1), terms, Sense::Eq, 1.0);
        }
        for k in 0..k_max {
            for s in 0..st {
                let mut terms: Vec<(Var, f64)> = (0..m).map(|w| (Var::Y { s, w, k }, 1.0)).collect();
                terms.push((Var::Z { k }, -1.0));
                row(4, format!("s{}_k{}", s + 1, k + 1), terms, Sense::Le, 0.0);
            }
        }
        for &(a, b) in instance.edges() {
            for k in 0..k_max {
                for t in 0..st {
                    let mut terms = Vec::new();
                    for s in t..st {
                        for w in 0..m {
                            terms.push((Var::X { s, w, i: a, k }, 1.0));
                            terms.push((Var::X { s, w, i: b, k }, -1.0));
                        }
                    }
                    row(
                        5,
                        format!("i{}_j{}_t{}_k{}", a + 1, b + 1, t + 1, k + 1),
                        terms,
                        Sense::Le,
                        0.0,
                    );
                }
            }
        }
        for k in 0..k_max {
            for s in 0..st {
                for w in 0..m {
                    let mut terms: Vec<(Var, f64)> = (0..n).map(|i| (Var::X { s, w, i, k }, 1.0)).collect();
                    terms.push((Var::Y { s, w, k }, -(n as f64)));
                    row(6, format!("s{}_w{}_k{}", s + 1, w + 1, k + 1), terms, Sense::Le, 0.0);
                }
            }
        }
        for k in 0..k_max {
            for s in 0..st {
                for w in 0..m {
                    let mut terms: Vec<(Var, f64)> = (0..n)
                        .filter_map(|i| p(w, i).map(|t| (Var::X { s, w, i, k }, t)))
                        .collect();
                    terms.push((Var::C { k }, -1.0));
                    row(7, format!("s{}_w{}_k{}", s + 1, w + 1, k + 1), terms, Sense::Le, 0.0);
                }
            }
        }
        for k in 0..k_max {
            for s in 0..st {
                for w in 0..m {
                    for i in (0..n).filter(|&i| !instance.can_do(w, i)) {
                        row(
                            8,
                            format!("s{}_w{}_i{}_k{}", s + 1, w + 1, i + 1, k + 1),
                            vec![(Var::X { s, w, i, k }, 1.0)],
                            Sense::Eq,
                            0.0,
                        );
                    }
                }
            }
        }
        for k in 0..k_max {
            row(
                13,
                format!("k{}", k + 1),
                vec![(Var::F { k }, 1.0), (Var::Z { k }, -big_m)],
                Sense::Le,
                0.0,
            );
        }
        for k in 0..k_max {
            for s in 0..st {
                let mut terms: Vec<(Var, f64)> = (0..m).map(|w| (Var::Rate { s, w, k }, 1.0)).collect();
                terms.push((Var::F { k }, -1.0));
                terms.extend((0..m).map(|w| (Var::Y { s, w, k }, -big_m)));
                row(14, format!("s{}_k{}", s + 1, k + 1), terms, Sense::Ge, -big_m);
            }
        }
        for k in 0..k_max {
            for s in 0..st {
                for w in 0..m {
                    let mut terms: Vec<(Var, f64)> = (0..n)
                        .filter_map(|i| p(w, i).map(|t| (Var::V { s, w, i, k }, t)))
                        .collect();
                    terms.push((Var::Y { s, w, k }, -1.0));
                    // Inequality: a worker may hold an empty station.
                    row(15, format!("s{}_w{}_k{}", s + 1, w + 1, k + 1), terms, Sense::Le, 0.0);
                }
            }
        }
        for k in 0..k_max {
            for s in 0..st {
                for w in 0..m {
                    row(
                        16,
                        format!("s{}_w{}_k{}", s + 1, w + 1, k + 1),
                        vec![(Var::Rate { s, w, k }, 1.0), (Var::Y { s, w, k }, -big_m)],
                        Sense::Le,
                        0.0,
                    );
                }
            }
        }
        for k in 0..k_max {
            for s in 0..st {
                for w in 0..m {
                    for i in 0..n {
                        row(
                            17,
                            format!("s{}_w{}_i{}_k{}", s + 1, w + 1, i + 1, k + 1),
                            vec![
                                (Var::V { s, w, i, k }, 1.0),
                                (Var::Rate { s, w, k }, -1.0),
                                (Var::X { s, w, i, k }, -big_m),
                            ],
                            Sense::Ge,
                            -big_m,
                        );
                    }
                }
            }
        }
        for k in 0..k_max {
            for s in 0..st {
                for w in 0..m {
                    for i in 0..n {
                        row(
                            18,
                            format!("s{}_w{}_i{}_k{}", s + 1, w + 1, i + 1, k + 1),
                            vec![(Var::V { s, w, i, k }, 1.0), (Var::X { s, w, i, k }, -big_m)],
                            Sense::Le,
                            0.0,
                        );
                    }
                }
            }
        }
        Ok(MilpModel {
            tasks: n,
            workers: m,
            stations: st,
            k_max,
            big_m,
            variables,
            rows,
        })
    }

    pub fn count(&self, pred: impl Fn(&Var) -> bool) -> usize {
        self.variables.iter().filter(|v| pred(v)).count()
    }

    /// Parses a 1-based variable name and checks it against the dimensions.
    pub fn parse_var(&self, name: &str) -> Result<Var, MilpError> {
        let malformed = || MilpError::MalformedName(name.to_string());
        let mut parts = name.split('_');
        let head = parts.next().ok_or_else(malformed)?;
        let idx: Vec<usize> = parts
            .map(|p| p.parse::<usize>().ok().filter(|&v| v >= 1).map(|v| v - 1))
            .collect::<Option<_>>()
            .ok_or_else(malformed)?;
        let var = match (head, idx.as_slice()) {
            ("x", &[s, w, i, k]) => Var::X { s, w, i, k },
            ("y", &[s, w, k]) => Var::Y { s, w, k },
            ("z", &[k]) => Var::Z { k },
            ("C", &[k]) => Var::C { k },
            ("F", &[k]) => Var::F { k },
            ("f", &[s, w, k]) => Var::Rate { s, w, k },
            ("v", &[s, w, i, k]) => Var::V { s, w, i, k },
            _ => return Err(malformed()),
        };
        let in_range = match var {
            Var::X { s, w, i, k } | Var::V { s, w, i, k } => {
                s < self.stations && w < self.workers && i < self.tasks && k < self.k_max
            }
            Var::Y { s, w, k } | Var::Rate { s, w, k } => s < self.stations && w < self.workers && k < self.k_max,
            Var::Z { k } | Var::C { k } | Var::F { k } => k < self.k_max,
        };
        if in_range {
            Ok(var)
        } else {
            Err(MilpError::OutOfRange(name.to_string()))
        }
    }

    /// The model in LP-file text form.
    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "\\ {} tasks, {} workers, {} stations per line, {} lines, M = {}",
            self.tasks, self.workers, self.stations, self.k_max, self.big_m
        );
        out.push_str("Maximize\n obj:");
        for k in 0..self.k_max {
            let _ = write!(out, " + {}", Var::F { k });
        }
        out.push_str("\nSubject To\n");
        let mut last_tag = 0;
        for row in &self.rows {
            if row.tag != last_tag {
                let _ = writeln!(out, "\\ ({}) {}", row.tag, family_description(row.tag));
                last_tag = row.tag;
            }
            let _ = write!(out, " {}:", row.name);
            for (n, (var, coef)) in row.terms.iter().enumerate() {
                if n > 0 && n % 8 == 0 {
                    out.push_str("\n   ");
                }
                let sign = if *coef < 0.0 { '-' } else { '+' };
                let abs = coef.abs();
                if abs == 1.0 {
                    let _ = write!(out, " {sign} {var}");
                } else {
                    let _ = write!(out, " {sign} {abs} {var}");
                }
            }
            let _ = writeln!(out, " {} {}", row.sense.symbol(), row.rhs);
        }
        out.push_str("Bounds\n");
        out.push_str("\\ (19) (20) (21) and C_k: default lower bound 0\n");
        for k in 0..self.k_max {
            let _ = writeln!(out, " F_{} <= {}", k + 1, self.big_m);
        }
        out.push_str("Binaries\n");
        out.push_str("\\ (9) (10) (11)\n");
        let binaries: Vec<String> = self
            .variables
            .iter()
            .filter(|v| v.is_binary())
            .map(Var::to_string)
            .collect();
        for chunk in binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

/// Variable map for a feasible solution: `x`, `y`, `z` from the layout,
/// `C_k` the line cycle time, `F_k = 1/C_k`, station rate `1/load` (1 on an
/// empty station) and `v = f·x`. Zero entries are omitted.
pub fn solution_to_assignment(instance: &Instance, solution: &ParallelSolution) -> BTreeMap<String, f64> {
    let mut map = BTreeMap::new();
    for (k, line) in solution.lines.iter().enumerate() {
        if line.stations.is_empty() {
            continue;
        }
        map.insert(Var::Z { k }.to_string(), 1.0);
        map.insert(Var::C { k }.to_string(), line.cycle_time as f64);
        map.insert(Var::F { k }.to_string(), 1.0 / line.cycle_time as f64);
        for (s, station) in line.stations.iter().enumerate() {
            let w = station.worker;
            let load: u64 = station.tasks.iter().map(|&i| instance.time(w, i).unwrap_or(0)).sum();
            let rate = if load == 0 { 1.0 } else { 1.0 / load as f64 };
            map.insert(Var::Y { s, w, k }.to_string(), 1.0);
            map.insert(Var::Rate { s, w, k }.to_string(), rate);
            for &i in &station.tasks {
                map.insert(Var::X { s, w, i, k }.to_string(), 1.0);
                map.insert(Var::V { s, w, i, k }.to_string(), rate);
            }
        }
    }
    map
}

/// Renders a map as `name value` lines.
pub fn write_assignment(map: &BTreeMap<String, f64>) -> String {
    let mut out = String::new();
    for (name, value) in map {
        let _ = writeln!(out, "{name} {value}");
    }
    out
}

/// Reads `name value` lines; blank lines and `#` comments are skipped.
pub fn parse_assignment(text: &str) -> Result<BTreeMap<String, f64>, MilpError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut parts = body.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(MilpError::Syntax { line: n + 1 });
        };
        let value: f64 = value.parse().map_err(|_| MilpError::Syntax { line: n + 1 })?;
        map.insert(name.to_string(), value);
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowViolation {
    pub tag: u8,
    pub row: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for RowViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {}: lhs {} vs rhs {}", self.tag, self.row, self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpReport {
    pub feasible: bool,
    /// `Σ F_k`, products per second.
    pub objective: f64,
    pub violations: Vec<RowViolation>,
    /// The layout read from `x`, `y`, `z`, when it forms a valid solution.
    pub solution: Option<ParallelSolution>,
    /// Whether `1/Σ F_k` matches the combined cycle time of `solution`.
    pub objective_consistent: bool,
}

impl MilpReport {
    pub fn violated_tags(&self) -> Vec<u8> {
        let mut tags: Vec<u8> = self.violations.iter().map(|v| v.tag).collect();
        tags.sort_unstable();
        tags.dedup();
        tags
    }
}

/// Evaluates every row and domain within [`TOLERANCE`]; missing variables
/// are zero.
pub fn verify_milp_solution(
    instance: &Instance,
    k_max: usize,
    assignment: &BTreeMap<String, f64>,
) -> Result<MilpReport, MilpError> {
    let model = MilpModel::build(instance, k_max)?;
    let mut values: HashMap<Var, f64> = HashMap::new();
    for (name, &value) in assignment {
        values.insert(model.parse_var(name)?, value);
    }
    let value = |v: Var| values.get(&v).copied().unwrap_or(0.0);

    let mut violations = Vec::new();
    let mut domain: Vec<(&Var, &f64)> = values.iter().collect();
    domain.sort_by_key(|(v, _)| **v);
    for (&var, &x) in domain {
        let bad = if var.is_binary() {
            x.abs() > TOLERANCE && (x - 1.0).abs() > TOLERANCE
        } else {
            x < -TOLERANCE
        };
        if bad || !x.is_finite() {
            violations.push(RowViolation {
                tag: var.domain_tag(),
                row: var.to_string(),
                lhs: x,
                rhs: 0.0,
            });
        }
    }
    for row in &model.rows {
        let lhs: f64 = row.terms.iter().map(|&(v, c)| c * value(v)).sum();
        let ok = match row.sense {
            Sense::Le => lhs <= row.rhs + TOLERANCE,
            Sense::Ge => lhs >= row.rhs - TOLERANCE,
            Sense::Eq => (lhs - row.rhs).abs() <= TOLERANCE,
        };
        if !ok {
            violations.push(RowViolation {
                tag: row.tag,
                row: row.name.clone(),
                lhs,
                rhs: row.rhs,
            });
        }
    }
    let objective: f64 = (0..k_max).map(|k| value(Var::F { k })).sum();
    let feasible = violations.is_empty();
    let solution = feasible.then(|| reconstruct(instance, &model, &value)).flatten();
    let objective_consistent = solution.as_ref().is_some_and(|sol| {
        let ct = sol.combined_cycle_time();
        objective > 0.0 && (ct - 1.0 / objective).abs() <= TOLERANCE * ct.max(1.0)
    });
    Ok(MilpReport {
        feasible,
        objective,
        violations,
        solution,
        objective_consistent,
    })
}

fn reconstruct(instance: &Instance, model: &MilpModel, value: &impl Fn(Var) -> f64) -> Option<ParallelSolution> {
    let on = |v: Var| value(v) > 0.5;
    let mut pos = vec![0; model.tasks];
    for (p, &t) in instance.topological_order().iter().enumerate() {
        pos[t] = p;
    }
    let mut lines = Vec::new();
    for k in (0..model.k_max).filter(|&k| on(Var::Z { k })) {
        let mut stations = Vec::new();
        for s in 0..model.stations {
            let Some(w) = (0..model.workers).find(|&w| on(Var::Y { s, w, k })) else {
                continue;
            };
            let mut tasks: Vec<usize> = (0..model.tasks).filter(|&i| on(Var::X { s, w, i, k })).collect();
            tasks.sort_by_key(|&t| pos[t]);
            stations.push(Station { worker: w, tasks });
        }
        lines.push(LineSolution::from_stations(instance, stations).ok()?);
    }
    let solution = ParallelSolution {
        lines,
        k_max: model.k_max,
    };
    validate_solution(instance, &solution).is_ok().then_some(solution)
}
