//! Fixtures shared by the benchmarks under `benches/`.

use svoc_core::problem::builtin;
use svoc_core::{make_grid, Grid, Placement, ProblemSpec, ReferencePair, Result, Trajectory};

/// A builtin problem with a constant control on `n` cells.
pub struct Fixture {
    pub problem: ProblemSpec,
    pub grid: Grid,
    pub control: Trajectory,
}

impl Fixture {
    pub fn new(name: &str, params: &[(&str, f64)], u: f64, n: usize) -> Result<Self> {
        let problem = builtin(name, params)?;
        let grid = make_grid(problem.horizon(), n)?;
        let control = Trajectory::constant(grid, Placement::Nodes, u);
        Ok(Self { problem, grid, control })
    }

    pub fn pair(&self) -> Result<ReferencePair> {
        ReferencePair::solve(&self.problem, self.control.clone(), &self.grid)
    }
}
