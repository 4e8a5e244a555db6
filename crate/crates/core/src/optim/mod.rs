//! LP solving and branch-and-bound MILP solving.

mod lp;
mod milp;

pub use lp::{
    solve_lp, Constraint, LinearProgram, MilpSolution, Relation, SolveStatus, Variable, FEAS_TOL, GAP_TOL, INT_TOL,
};
pub use milp::{solve_milp, MilpOptions, MilpProblem};
