//! Numerical toolkit for optimal control of weakly singular Volterra
//! integral equations.

pub mod adjoint;
pub mod error;
pub mod expr;
pub mod optimality;
pub mod oracle;
pub mod problem;
pub mod quad;
pub mod report;
pub mod resolvent;
pub mod state;

pub use adjoint::{solve_adjoint, AdjointTrajectory};
pub use error::{Error, Result};
pub use expr::{parse_expression, ScalarExpr};
pub use optimality::{
    detect_singular, hamiltonian_fields, second_order_test, HamiltonianFields, MKernel,
    SecondOrderReport, SingularityCheck, Verdict,
};
pub use oracle::{ConvergenceTable, ExpansionReport, VariationalReport};
pub use problem::{builtin_problem, load_problem_file, ProblemSpec, BUILTIN_PROBLEMS};
pub use quad::{make_grid, Grid};
pub use resolvent::RegularizedKernel;
pub use state::{
    evaluate_cost, solve_state, CostBreakdown, Placement, ReferencePair, ScalarControl, Scheme,
    Trajectory,
};
