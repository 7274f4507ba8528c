//! Standard-form conic solver over products of PSD, nonnegative and free blocks.

pub mod io;
mod ipm;
mod presolve;
mod problem;

pub use ipm::{solve, solve_with, SolveOutcome, SolveStatus, SolverSettings, WarmStart};
pub use presolve::{assemble_check, Diagnostics, PIVOT_TOL};
pub use problem::{
    mat_to_svec, svec_index, svec_position, svec_to_mat, Cone, ConicProblem, HermitianBlock,
    LinExpr, ProblemBuilder, PsdBlock, ScalarBlock, SparseRow,
};
