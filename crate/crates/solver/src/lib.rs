//! Sparse linear and mixed-integer programming.
//!
//! [`solve_lp`] runs a bounded-variable revised simplex over a sparse LU
//! factorization of the basis; [`solve_milp`] wraps it in best-bound
//! branch-and-bound. [`presolve`] strips fixed columns, empty rows and
//! singleton rows, and [`to_lp_string`] renders any problem in LP-text form.

mod lp_format;
mod lu;
mod milp;
mod presolve;
mod problem;
mod simplex;
mod solution;

pub use lp_format::{to_lp_string, write_lp};
pub use milp::{solve_milp, MilpOptions};
pub use presolve::{presolve, solve_lp_presolved, Presolved};
pub use problem::{
    LinearProgram, MilpProblem, ModelError, Row, RowId, RowSense, Sense, VarId, VarKind,
};
pub use simplex::{solve_lp, SimplexOptions};
pub use solution::{dual_bound, Solution, Status};
