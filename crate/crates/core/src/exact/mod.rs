//! Ground truth and baselines: the enumerative method over catalog teams,
//! an exhaustive oracle for tiny instances, and the linearised model.

pub mod enumerate;
pub mod milp;
pub mod oracle;

pub use enumerate::{enumerate_default, enumerate_solve, EnumError};
pub use milp::{
    parse_assignment, solution_to_assignment, verify_milp_solution, write_assignment, MilpError, MilpModel, MilpReport,
};
pub use oracle::{exhaustive_oracle, for_each_partition, OracleError, SerialOracle};
