//! Forward state solves, cost evaluation and the variational equations.

use serde::Serialize;

use crate::expr::{Point, ScalarExpr};
use crate::problem::ProblemSpec;
use crate::quad::{Grid, ProductTrapezoidWeights, SingularWeights};
use crate::{Error, Result};

/// Largest state magnitude accepted before a solve is declared blown up.
pub const BLOW_UP_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Nodes,
    Midpoints,
}

/// Values of a scalar function on the nodes or midpoints of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    grid: Grid,
    placement: Placement,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(grid: Grid, placement: Placement, values: Vec<f64>) -> Result<Self> {
        let expected = match placement {
            Placement::Nodes => grid.cells() + 1,
            Placement::Midpoints => grid.cells(),
        };
        if values.len() != expected {
            return Err(Error::GridMismatch(format!(
                "{placement:?} trajectory needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "trajectory".into(),
                location: format!("index {i}"),
            });
        }
        Ok(Self {
            grid,
            placement,
            values,
        })
    }

    pub fn from_fn(grid: Grid, placement: Placement, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = Self::times_of(&grid, placement).into_iter().map(f).collect();
        Self::new(grid, placement, values)
    }

    pub fn constant(grid: Grid, placement: Placement, value: f64) -> Self {
        Self::from_fn(grid, placement, |_| value).expect("finite constant")
    }

    pub fn zeros(grid: Grid, placement: Placement) -> Self {
        Self::constant(grid, placement, 0.0)
    }

    /// Samples an expression in `t`.
    pub fn sample(expr: &ScalarExpr, grid: Grid, placement: Placement) -> Result<Self> {
        Self::from_fn(grid, placement, |t| expr.eval(&Point::new(t, 0.0, 0.0, 0.0)))
    }

    fn times_of(grid: &Grid, placement: Placement) -> Vec<f64> {
        match placement {
            Placement::Nodes => grid.nodes(),
            Placement::Midpoints => grid.midpoints(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        Self::times_of(&self.grid, self.placement)
    }

    /// Linear interpolation; constant extrapolation outside the sample range.
    pub fn at(&self, t: f64) -> f64 {
        let h = self.grid.step();
        let x = match self.placement {
            Placement::Nodes => t / h,
            Placement::Midpoints => t / h - 0.5,
        };
        let last = self.values.len() - 1;
        if x <= 0.0 {
            return self.values[0];
        }
        if x >= last as f64 {
            return self.values[last];
        }
        let i = x.floor() as usize;
        let frac = x - i as f64;
        if frac == 0.0 {
            self.values[i]
        } else {
            self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
        }
    }

    /// Node values averaged onto midpoints.
    pub fn to_midpoints(&self) -> Trajectory {
        match self.placement {
            Placement::Midpoints => self.clone(),
            Placement::Nodes => Trajectory {
                grid: self.grid,
                placement: Placement::Midpoints,
                values: self
                    .values
                    .windows(2)
                    .map(|w| 0.5 * (w[0] + w[1]))
                    .collect(),
            },
        }
    }

    /// Cell values as seen by the left-endpoint recursion: cell `j` carries
    /// node value `j`. For midpoint trajectories this is the identity.
    pub fn cell_values(&self) -> Vec<f64> {
        match self.placement {
            Placement::Midpoints => self.values.clone(),
            Placement::Nodes => self.values[..self.grid.cells()].to_vec(),
        }
    }

    /// Turns cell values into a node control for the forward recursion:
    /// node `j < N` takes cell `j`, node `N` repeats the last cell.
    pub fn cells_to_control(&self) -> Trajectory {
        match self.placement {
            Placement::Nodes => self.clone(),
            Placement::Midpoints => {
                let mut values = self.values.clone();
                values.push(*self.values.last().expect("non-empty"));
                Trajectory {
                    grid: self.grid,
                    placement: Placement::Nodes,
                    values,
                }
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Trajectory {
        self.map(|v| a * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Trajectory {
        Trajectory {
            grid: self.grid,
            placement: self.placement,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + delta * other`, same grid and placement required.
    pub fn axpy(&self, delta: f64, other: &Trajectory) -> Result<Trajectory> {
        self.check_same(other)?;
        Ok(Trajectory {
            grid: self.grid,
            placement: self.placement,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + delta * b)
                .collect(),
        })
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    fn check_same(&self, other: &Trajectory) -> Result<()> {
        if self.grid != other.grid || self.placement != other.placement {
            return Err(Error::GridMismatch(
                "trajectories live on different grids".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn expect_on(&self, grid: &Grid, placement: Placement, what: &str) -> Result<()> {
        if self.grid != *grid || self.placement != placement {
            return Err(Error::GridMismatch(format!(
                "{what} must be sampled on the {placement:?} of the solve grid"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    /// Explicit product rectangle with left-endpoint sampling.
    #[default]
    LeftRectangle,
    /// Product trapezoid; the diagonal term is solved by scalar Newton.
    ProductTrapezoid,
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

fn guard(index: usize, value: f64) -> Result<f64> {
    if !value.is_finite() || value.abs() > BLOW_UP_LIMIT {
        Err(Error::BlowUp { index, value })
    } else {
        Ok(value)
    }
}

/// Solves the state equation for a node control with the default scheme.
pub fn solve_state(problem: &ProblemSpec, control: &Trajectory, grid: &Grid) -> Result<Trajectory> {
    solve_state_with(problem, control, grid, Scheme::LeftRectangle)
}

pub fn solve_state_with(
    problem: &ProblemSpec,
    control: &Trajectory,
    grid: &Grid,
    scheme: Scheme,
) -> Result<Trajectory> {
    control.expect_on(grid, Placement::Nodes, "control")?;
    let n = grid.cells();
    let u = control.values();
    let f = problem.f();
    let mut y = vec![0.0; n + 1];
    y[0] = guard(0, problem.eta().eval(&Point::new(0.0, 0.0, 0.0, 0.0)))?;

    match scheme {
        Scheme::LeftRectangle => {
            let w = SingularWeights::new(problem.alpha(), *grid)?;
            for k in 1..=n {
                let tk = grid.node(k);
                let mut acc = problem.eta().eval(&Point::new(tk, 0.0, 0.0, 0.0));
                for j in 0..k {
                    acc += w.weight(k, j) * f.eval4(tk, grid.node(j), y[j], u[j]);
                }
                y[k] = guard(k, acc)?;
            }
        }
        Scheme::ProductTrapezoid => {
            let pt = ProductTrapezoidWeights::new(problem.alpha(), *grid)?;
            let f_y = &problem.derivatives().f.d_y;
            for k in 1..=n {
                let tk = grid.node(k);
                let mut known = problem.eta().eval(&Point::new(tk, 0.0, 0.0, 0.0));
                for j in 0..k {
                    let (l, r) = pt.cell(k, j);
                    known += l * f.eval4(tk, grid.node(j), y[j], u[j]);
                    if j + 1 < k {
                        known += r * f.eval4(tk, grid.node(j + 1), y[j + 1], u[j + 1]);
                    }
                }
                let (_, diag) = pt.cell(k, k - 1);
                let mut yk = y[k - 1];
                let mut converged = false;
                for _ in 0..NEWTON_MAX_ITER {
                    let residual = yk - known - diag * f.eval4(tk, tk, yk, u[k]);
                    let slope = 1.0 - diag * f_y.eval4(tk, tk, yk, u[k]);
                    if slope == 0.0 || !slope.is_finite() {
                        return Err(Error::SingularStep {
                            what: "product-trapezoid Newton step".into(),
                            index: k,
                        });
                    }
                    let step = residual / slope;
                    yk -= step;
                    if step.abs() <= NEWTON_TOL * (1.0 + yk.abs()) {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(Error::NoConvergence {
                        what: format!("product-trapezoid Newton iteration at node {k}"),
                        iterations: NEWTON_MAX_ITER,
                    });
                }
                y[k] = guard(k, yk)?;
            }
        }
    }
    Trajectory::new(*grid, Placement::Nodes, y)
}

/// Running and instant parts of the cost.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub running: f64,
    pub instants: Vec<f64>,
    pub total: f64,
}

/// Trapezoid rule on the nodes for the running cost; instant states by
/// linear interpolation.
pub fn evaluate_cost(
    problem: &ProblemSpec,
    y: &Trajectory,
    u: &Trajectory,
    grid: &Grid,
) -> Result<CostBreakdown> {
    y.expect_on(grid, Placement::Nodes, "state")?;
    u.expect_on(grid, Placement::Nodes, "control")?;
    let h = grid.step();
    let g = problem.g();
    let gv: Vec<f64> = (0..=grid.cells())
        .map(|k| g.eval4(grid.node(k), 0.0, y.values()[k], u.values()[k]))
        .collect();
    let running = h * (0.5 * gv[0] + gv[1..gv.len() - 1].iter().sum::<f64>() + 0.5 * gv[gv.len() - 1]);
    let mut instants = Vec::with_capacity(problem.instant_costs().len());
    for ic in problem.instant_costs() {
        if !(0.0..=grid.horizon()).contains(&ic.time) {
            return Err(Error::InstantOutOfRange(ic.time));
        }
        instants.push(ic.cost.eval(&Point::new(ic.time, 0.0, y.at(ic.time), 0.0)));
    }
    let total = running + instants.iter().sum::<f64>();
    if !total.is_finite() {
        return Err(Error::NonFinite {
            what: "cost".into(),
            location: "total".into(),
        });
    }
    Ok(CostBreakdown {
        running,
        instants,
        total,
    })
}

/// A solved reference pair `(y*, u*)` on the nodes of a grid.
#[derive(Clone, Debug)]
pub struct ReferencePair {
    pub y: Trajectory,
    pub u: Trajectory,
}

impl ReferencePair {
    pub fn solve(problem: &ProblemSpec, control: Trajectory, grid: &Grid) -> Result<Self> {
        let y = solve_state(problem, &control, grid)?;
        Ok(Self { y, u: control })
    }

    pub fn grid(&self) -> &Grid {
        self.y.grid()
    }

    pub(crate) fn check(&self, grid: &Grid) -> Result<()> {
        self.y.expect_on(grid, Placement::Nodes, "reference state")?;
        self.u.expect_on(grid, Placement::Nodes, "reference control")
    }
}

/// Evaluates an `(t, s, y, u)` expression along the pair at node pairs
/// `(t_k, t_j)`.
#[inline]
fn along(e: &ScalarExpr, grid: &Grid, pair: &ReferencePair, k: usize, j: usize) -> f64 {
    e.eval4(grid.node(k), grid.node(j), pair.y.values()[j], pair.u.values()[j])
}

/// First-order variation `Y1`, marched with the same weights as the state.
pub fn solve_y1(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    v: &Trajectory,
    grid: &Grid,
) -> Result<Trajectory> {
    pair.check(grid)?;
    v.expect_on(grid, Placement::Nodes, "variation")?;
    let d = &problem.derivatives().f;
    let w = SingularWeights::new(problem.alpha(), *grid)?;
    let n = grid.cells();
    let vv = v.values();
    let mut y1 = vec![0.0; n + 1];
    for k in 1..=n {
        let mut acc = 0.0;
        for j in 0..k {
            let src = along(&d.d_y, grid, pair, k, j) * y1[j] + along(&d.d_u, grid, pair, k, j) * vv[j];
            acc += w.weight(k, j) * src;
        }
        y1[k] = guard(k, acc)?;
    }
    Trajectory::new(*grid, Placement::Nodes, y1)
}

/// Second-order variation `Y2` for the same `v` as `y1`.
pub fn solve_y2(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    v: &Trajectory,
    y1: &Trajectory,
    grid: &Grid,
) -> Result<Trajectory> {
    pair.check(grid)?;
    v.expect_on(grid, Placement::Nodes, "variation")?;
    y1.expect_on(grid, Placement::Nodes, "Y1")?;
    let d = &problem.derivatives().f;
    let w = SingularWeights::new(problem.alpha(), *grid)?;
    let n = grid.cells();
    let (vv, z) = (v.values(), y1.values());
    let mut y2 = vec![0.0; n + 1];
    for k in 1..=n {
        let mut acc = 0.0;
        for j in 0..k {
            let src = along(&d.d_y, grid, pair, k, j) * y2[j]
                + along(&d.d_yy, grid, pair, k, j) * z[j] * z[j]
                + 2.0 * along(&d.d_yu, grid, pair, k, j) * z[j] * vv[j]
                + along(&d.d_uu, grid, pair, k, j) * vv[j] * vv[j];
            acc += w.weight(k, j) * src;
        }
        y2[k] = guard(k, acc)?;
    }
    Trajectory::new(*grid, Placement::Nodes, y2)
}

/// A control given as an expression in `t`.
#[derive(Clone, Debug)]
pub struct ScalarControl(pub ScalarExpr);

impl ScalarControl {
    pub fn parse(text: &str) -> Result<Self> {
        let e = crate::expr::parse_expression(text)?;
        e.check_variables(&[crate::expr::Var::T])?;
        Ok(Self(e))
    }

    pub fn sample(&self, grid: &Grid) -> Result<Trajectory> {
        Trajectory::sample(&self.0, *grid, Placement::Nodes)
    }

    pub fn sample_midpoints(&self, grid: &Grid) -> Result<Trajectory> {
        Trajectory::sample(&self.0, *grid, Placement::Midpoints)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;
    use crate::quad::make_grid;

    #[test]
    fn paper_example_zero_control() {
        let p = builtin("paper_example", &[]).unwrap();
        let g = make_grid(1.0, 64).unwrap();
        let u = Trajectory::zeros(g, Placement::Nodes);
        let y = solve_state(&p, &u, &g).unwrap();
        for (t, v) in g.nodes().iter().zip(y.values()) {
            assert!((v - (1.0 + t.powf(1.5))).abs() <= 1e-12);
        }
        let cost = evaluate_cost(&p, &y, &u, &g).unwrap();
        assert_eq!(cost.running, 0.0);
        assert!((cost.total - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn paper_example_half_control_is_exactly_one() {
        let p = builtin("paper_example", &[]).unwrap();
        let g = make_grid(1.0, 100).unwrap();
        let u = Trajectory::constant(g, Placement::Nodes, -0.5);
        let y = solve_state(&p, &u, &g).unwrap();
        assert!(y.values().iter().all(|v| (v - 1.0).abs() <= 1e-12));
        let cost = evaluate_cost(&p, &y, &u, &g).unwrap();
        assert!((cost.running + 0.5).abs() <= 1e-12);
        assert!((cost.total - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn zero_cost_problem() {
        let p = builtin("abel_linear", &[("lambda", 0.7)]).unwrap();
        let g = make_grid(1.0, 8).unwrap();
        let u = Trajectory::zeros(g, Placement::Nodes);
        let y = solve_state(&p, &u, &g).unwrap();
        let c = evaluate_cost(&p, &y, &u, &g).unwrap();
        assert_eq!(c.total, 0.0);
        assert!(c.instants.is_empty());
    }

    #[test]
    fn zero_lambda_returns_free_term() {
        let p = builtin("abel_linear", &[("lambda", 0.0)]).unwrap();
        let g = make_grid(1.0, 8).unwrap();
        let y = solve_state(&p, &Trajectory::zeros(g, Placement::Nodes), &g).unwrap();
        assert!(y.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn instant_cost_interpolates_between_nodes() {
        let text = r#"{"alpha": 0.5, "T": 1, "eta": "t", "f": "0", "g": "0",
                       "instant_costs": [{"t": 0.3, "h": "y"}]}"#;
        let p = crate::problem::parse_problem_json(text).unwrap();
        let g = make_grid(1.0, 4).unwrap();
        let u = Trajectory::zeros(g, Placement::Nodes);
        let y = solve_state(&p, &u, &g).unwrap();
        let c = evaluate_cost(&p, &y, &u, &g).unwrap();
        assert!((c.instants[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn blow_up_is_reported_with_index() {
        let p = builtin("abel_linear", &[("lambda", 1e9)]).unwrap();
        let g = make_grid(1.0, 16).unwrap();
        match solve_state(&p, &Trajectory::zeros(g, Placement::Nodes), &g) {
            Err(Error::BlowUp { index, .. }) => assert!(index >= 1),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn control_grid_must_match() {
        let p = builtin("paper_example", &[]).unwrap();
        let g = make_grid(1.0, 8).unwrap();
        let other = make_grid(1.0, 9).unwrap();
        let u = Trajectory::zeros(other, Placement::Nodes);
        assert!(matches!(solve_state(&p, &u, &g), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn product_trapezoid_handles_implicit_diagonal() {
        // f = lambda * y: the two schemes approximate the same solution
        let p = builtin("abel_linear", &[("lambda", 1.0)]).unwrap();
        let g = make_grid(1.0, 256).unwrap();
        let u = Trajectory::zeros(g, Placement::Nodes);
        let rect = solve_state(&p, &u, &g).unwrap();
        let trap = solve_state_with(&p, &u, &g, Scheme::ProductTrapezoid).unwrap();
        let diff = rect.sup_distance(&trap).unwrap() / trap.sup_norm();
        assert!(diff < 0.1, "{diff}");
        // paper example at u = -1/2: y = 1 is a fixed point of both schemes
        let p = builtin("paper_example", &[]).unwrap();
        let u = Trajectory::constant(g, Placement::Nodes, -0.5);
        let y = solve_state_with(&p, &u, &g, Scheme::ProductTrapezoid).unwrap();
        assert!(y.values().iter().all(|v| (v - 1.0).abs() < 1e-11));
    }

    #[test]
    fn y1_vanishes_when_f_u_does() {
        let p = builtin("sing_quad", &[("c", 1.0)]).unwrap();
        let g = make_grid(1.0, 32).unwrap();
        let pair = ReferencePair::solve(&p, Trajectory::zeros(g, Placement::Nodes), &g).unwrap();
        let v = Trajectory::from_fn(g, Placement::Nodes, |t| (3.0 * t).sin() + 1.0).unwrap();
        let y1 = solve_y1(&p, &pair, &v, &g).unwrap();
        assert_eq!(y1.sup_norm(), 0.0);
    }

    #[test]
    fn y1_paper_example_matches_closed_form() {
        // f_y = t u* = 0, f_u = t y*(s): Y1(t) = t ∫ (1 + s^1.5)(t-s)^(-1/2) ds
        //     = 2 t^1.5 + B(5/2, 1/2) t^3 with B(5/2, 1/2) = 3 pi / 8
        let p = builtin("paper_example", &[]).unwrap();
        let g = make_grid(1.0, 2048).unwrap();
        let pair = ReferencePair::solve(&p, Trajectory::zeros(g, Placement::Nodes), &g).unwrap();
        let v = Trajectory::constant(g, Placement::Nodes, 1.0);
        let y1 = solve_y1(&p, &pair, &v, &g).unwrap();
        let exact = |t: f64| 2.0 * t.powf(1.5) + 3.0 * std::f64::consts::PI / 8.0 * t.powi(3);
        let err = g
            .nodes()
            .iter()
            .zip(y1.values())
            .fold(0.0f64, |m, (t, v)| m.max((v - exact(*t)).abs()));
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn y1_is_linear_in_v() {
        let p = builtin("paper_example", &[]).unwrap();
        let g = make_grid(1.0, 64).unwrap();
        let pair = ReferencePair::solve(&p, Trajectory::constant(g, Placement::Nodes, 0.3), &g).unwrap();
        let v = Trajectory::from_fn(g, Placement::Nodes, |t| t.cos()).unwrap();
        let a = solve_y1(&p, &pair, &v, &g).unwrap();
        let b = solve_y1(&p, &pair, &v.scaled(-2.5), &g).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((y + 2.5 * x).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn y2_closed_forms() {
        let g = make_grid(1.0, 64).unwrap();
        // sing_quad: Y2(t) = 2c t^alpha / alpha
        let c = 0.75;
        let p = builtin("sing_quad", &[("c", c)]).unwrap();
        let pair = ReferencePair::solve(&p, Trajectory::zeros(g, Placement::Nodes), &g).unwrap();
        let v = Trajectory::constant(g, Placement::Nodes, 1.0);
        let y1 = solve_y1(&p, &pair, &v, &g).unwrap();
        let y2 = solve_y2(&p, &pair, &v, &y1, &g).unwrap();
        for (t, val) in g.nodes().iter().zip(y2.values()) {
            assert!((val - 2.0 * c * t.sqrt() / 0.5).abs() < 1e-12);
        }
        // lq: all second partials vanish
        let p = builtin("lq", &[("a", 0.5), ("b", 1.0), ("r", 1.0)]).unwrap();
        let pair = ReferencePair::solve(&p, Trajectory::constant(g, Placement::Nodes, 0.2), &g).unwrap();
        let y1 = solve_y1(&p, &pair, &v, &g).unwrap();
        assert!(y1.sup_norm() > 0.0);
        assert_eq!(solve_y2(&p, &pair, &v, &y1, &g).unwrap().sup_norm(), 0.0);
        // v = 0
        let zero = Trajectory::zeros(g, Placement::Nodes);
        let p = builtin("paper_example", &[]).unwrap();
        let pair = ReferencePair::solve(&p, Trajectory::constant(g, Placement::Nodes, -0.5), &g).unwrap();
        let y1 = solve_y1(&p, &pair, &zero, &g).unwrap();
        assert_eq!(solve_y2(&p, &pair, &zero, &y1, &g).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn interpolation() {
        let g = make_grid(1.0, 4).unwrap();
        let y = Trajectory::from_fn(g, Placement::Nodes, |t| 2.0 * t).unwrap();
        assert!((y.at(0.3) - 0.6).abs() < 1e-15);
        let m = y.to_midpoints();
        assert_eq!(m.values(), &[0.25, 0.75, 1.25, 1.75]);
        assert!((m.at(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(m.at(0.0), 0.25);
    }
}
