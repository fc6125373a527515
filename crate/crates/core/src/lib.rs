//! Parallel assembly line worker assignment and balancing (PALWABP-2).
//!
//! Heterogeneous workers are split into at most `k_max` teams. Every team runs
//! a complete assembly line that executes all tasks, and the goal is the
//! largest combined throughput `Σ 1/C_k` (equivalently the smallest combined
//! cycle time `1 / Σ 1/C_k`).
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: instances, line and parallel solutions, validation and the
//!   combined objective.
//! - [`io`]: the text instance format, SALBP base files and the instance
//!   generator.
//! - [`constructive`]: the station-oriented greedy used to solve one line.
//! - [`preprocess`]: task windows per worker and the catalog of covering teams.
//! - [`tabu`]: tabu search over worker partitions.
//! - [`brkga`]: biased random-key genetic algorithm.
//! - [`exact`]: catalog enumeration, the exhaustive oracle for tiny instances
//!   and the linearised MILP export/verification.
//! - [`solution_io`]: the solution document read and written by the CLI.

pub mod brkga;
pub mod constructive;
pub mod exact;
pub mod io;
pub mod model;
pub mod par;
pub mod preprocess;
pub mod solution_io;
pub mod tabu;
pub mod team;

pub use model::{
    combined_cycle_time, evaluate_line, lower_bound, validate_solution, CoreError, Instance, LineSolution,
    ParallelSolution, Station, ThroughputReport, Time, ValidationReport, Violation,
};
pub use team::Team;
