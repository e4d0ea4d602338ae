//! Brute-force checks: finite differences of the cost and the state,
//! Mittag-Leffler reference solutions and convergence studies.
//!
//! Costs are always recomputed from scratch with [`solve_state`] and
//! [`evaluate_cost`]; nothing here reuses the Hamiltonian to shortcut `J`.

use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::adjoint::solve_adjoint;
use crate::optimality::{hamiltonian_fields, SecondVariation};
use crate::problem::{builtin, ProblemSpec};
use crate::quad::{make_grid, Grid};
use crate::resolvent::build_q_kernel;
use crate::state::{
    evaluate_cost, solve_state, solve_y1, solve_y2, Placement, ReferencePair, ScalarControl, Trajectory,
};
use crate::{Error, Result};

pub const DEFAULT_DELTAS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
pub const DEFAULT_EXPANSION_CELLS: usize = 2048;

const ML_MAX_TERMS: usize = 10_000;
const ML_MAX_ARG: f64 = 50.0;

/// `E_alpha(z) = Σ z^n / Γ(n alpha + 1)`.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    mittag_leffler_general(alpha, 1.0, z)
}

/// `E_{alpha,beta}(z) = Σ z^n / Γ(n alpha + beta)` by compensated summation.
pub fn mittag_leffler_general(alpha: f64, beta: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Mittag-Leffler parameters must be positive, got ({alpha}, {beta})"
        )));
    }
    if z.is_nan() || z.abs() > ML_MAX_ARG {
        return Err(Error::InvalidArgument(format!(
            "Mittag-Leffler series needs |z| <= {ML_MAX_ARG}, got {z}"
        )));
    }
    let mut sum = if beta == 1.0 { 1.0 } else { 1.0 / gamma(beta) };
    if z == 0.0 {
        return Ok(sum);
    }
    let mut comp = 0.0;
    let ln_z = z.abs().ln();
    for n in 1..ML_MAX_TERMS {
        let nf = n as f64;
        let mag = (nf * ln_z - ln_gamma(nf * alpha + beta)).exp();
        let term = if z < 0.0 && n % 2 == 1 { -mag } else { mag };
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        // terms eventually decrease monotonically once n alpha exceeds |z|^(1/alpha)
        if mag < 1e-16 * sum.abs() && nf * alpha > z.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence {
        what: "Mittag-Leffler series".into(),
        iterations: ML_MAX_TERMS,
    })
}

/// `y(t) = E_alpha(lambda Γ(alpha) t^alpha)`, the solution of
/// `y = 1 + lambda ∫ (t-s)^(alpha-1) y(s) ds`.
pub fn abel_solution(lambda: f64, alpha: f64, t: f64) -> Result<f64> {
    mittag_leffler(alpha, lambda * gamma(alpha) * t.powf(alpha))
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidArgument("deltas must be positive".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("deltas must be strictly decreasing".into()));
    }
    Ok(())
}

/// Successive ratios `x[i+1] / x[i]`.
fn successive(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] / w[0]).collect()
}

/// Midpoint (cell) values of a direction given on either placement.
fn as_cells(v: &Trajectory) -> Result<Trajectory> {
    Trajectory::new(*v.grid(), Placement::Midpoints, v.cell_values())
}

fn cost(problem: &ProblemSpec, u: &Trajectory, grid: &Grid) -> Result<f64> {
    let y = solve_state(problem, u, grid)?;
    Ok(evaluate_cost(problem, &y, u, grid)?.total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionRow {
    pub delta: f64,
    pub delta_j: f64,
    pub first_order: f64,
    pub second_order: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub j_star: f64,
    /// `∫ H_u v`
    pub h_u_integral: f64,
    pub quadratic_form: f64,
    pub rows: Vec<ExpansionRow>,
    /// `r(delta_{i+1}) / r(delta_i)`
    pub ratios: Vec<f64>,
}

/// Compares `J(u* + delta v) - J(u*)` against
/// `-delta ∫H_u v - (delta^2 / 2) QF[v]` for each `delta`.
pub fn fd_expansion_check(
    problem: &ProblemSpec,
    u_star: &Trajectory,
    v: &Trajectory,
    deltas: &[f64],
    grid: &Grid,
) -> Result<ExpansionReport> {
    check_deltas(deltas)?;
    let cells = as_cells(v)?;
    let v_nodes = cells.cells_to_control();
    let pair = ReferencePair::solve(problem, u_star.clone(), grid)?;
    let adjoint = solve_adjoint(problem, &pair, grid)?;
    let fields = hamiltonian_fields(problem, &pair, &adjoint, grid)?;
    let h = grid.step();
    let h_u_integral: f64 = fields
        .h_u
        .values()
        .iter()
        .zip(cells.values())
        .map(|(a, b)| h * a * b)
        .sum();
    let q = build_q_kernel(problem, &pair, grid)?;
    let quadratic_form = SecondVariation::new(problem, &pair, &fields, q, grid)?.functional(&cells)?;

    let j_star = evaluate_cost(problem, &pair.y, &pair.u, grid)?.total;
    let rows = deltas
        .iter()
        .map(|&delta| {
            let delta_j = cost(problem, &u_star.axpy(delta, &v_nodes)?, grid)? - j_star;
            let first_order = -delta * h_u_integral;
            let second_order = first_order - 0.5 * delta * delta * quadratic_form;
            Ok(ExpansionRow {
                delta,
                delta_j,
                first_order,
                second_order,
                residual: delta_j - second_order,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let residuals: Vec<f64> = rows.iter().map(|r| r.residual.abs()).collect();
    Ok(ExpansionReport {
        j_star,
        h_u_integral,
        quadratic_form,
        ratios: successive(&residuals),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationalRow {
    pub delta: f64,
    /// `sup |(y^delta - y*) / delta - Y1|`
    pub e1: f64,
    /// `sup |(y^delta - y*) / delta - Y1 - (delta / 2) Y2|`
    pub e2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationalReport {
    pub rows: Vec<VariationalRow>,
    /// Halving ratios `e(delta_i) / e(delta_{i+1})`.
    pub e1_ratios: Vec<f64>,
    pub e2_ratios: Vec<f64>,
}

/// Finite-difference check of the first and second variational equations.
pub fn variational_fd_check(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    v: &Trajectory,
    deltas: &[f64],
    grid: &Grid,
) -> Result<VariationalReport> {
    check_deltas(deltas)?;
    let v = v.cells_to_control();
    let y1 = solve_y1(problem, pair, &v, grid)?;
    let y2 = solve_y2(problem, pair, &v, &y1, grid)?;
    let rows = deltas
        .iter()
        .map(|&delta| {
            let yd = solve_state(problem, &pair.u.axpy(delta, &v)?, grid)?;
            let (mut e1, mut e2) = (0.0f64, 0.0f64);
            for k in 0..=grid.cells() {
                let quotient = (yd.values()[k] - pair.y.values()[k]) / delta - y1.values()[k];
                e1 = e1.max(quotient.abs());
                e2 = e2.max((quotient - 0.5 * delta * y2.values()[k]).abs());
            }
            Ok(VariationalRow { delta, e1, e2 })
        })
        .collect::<Result<Vec<_>>>()?;
    let inverse = |xs: Vec<f64>| successive(&xs).into_iter().map(|r| 1.0 / r).collect();
    Ok(VariationalReport {
        e1_ratios: inverse(rows.iter().map(|r| r.e1).collect()),
        e2_ratios: inverse(rows.iter().map(|r| r.e2).collect()),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DescentCheck {
    pub delta: f64,
    pub j_star: f64,
    pub j_perturbed: f64,
    /// `J(u* + delta v) - 2 J(u*) + J(u* - delta v)`
    pub second_difference: f64,
    /// Whether clipping to the control bounds changed the perturbed control.
    pub clipped: bool,
    pub decreased: bool,
}

/// Evaluates `J` at `u* ± delta v`, clipped into the control bounds.
pub fn confirm_descent(
    problem: &ProblemSpec,
    u_star: &Trajectory,
    direction: &Trajectory,
    delta: f64,
    grid: &Grid,
) -> Result<DescentCheck> {
    let v = as_cells(direction)?.cells_to_control();
    let mut clipped = false;
    let mut perturbed = |sign: f64| -> Result<Trajectory> {
        let raw = u_star.axpy(sign * delta, &v)?;
        let clip = raw.map(|u| problem.clip_control(u));
        clipped |= clip != raw;
        Ok(clip)
    };
    let plus = perturbed(1.0)?;
    let minus = perturbed(-1.0)?;
    let j_star = cost(problem, u_star, grid)?;
    let j_perturbed = cost(problem, &plus, grid)?;
    let j_minus = cost(problem, &minus, grid)?;
    Ok(DescentCheck {
        delta,
        j_star,
        j_perturbed,
        second_difference: j_perturbed - 2.0 * j_star + j_minus,
        clipped,
        decreased: j_perturbed < j_star,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub abs_error: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub lambda: f64,
    pub alpha: f64,
    pub rows: Vec<ConvergenceRow>,
    /// `log2(e(N_i) / e(N_{i+1}))`
    pub orders: Vec<f64>,
}

/// Sup errors of `abel_linear(lambda)` on `[0, 1]` against the
/// Mittag-Leffler solution.
pub fn convergence_study(lambda: f64, alpha: f64, ns: &[usize]) -> Result<ConvergenceTable> {
    let problem = builtin("abel_linear", &[("lambda", lambda), ("alpha", alpha)])?;
    let rows = ns
        .iter()
        .map(|&n| {
            let grid = make_grid(problem.horizon(), n)?;
            let y = solve_state(&problem, &Trajectory::zeros(grid, Placement::Nodes), &grid)?;
            let (mut abs_error, mut scale) = (0.0f64, 0.0f64);
            for (t, v) in grid.nodes().into_iter().zip(y.values()) {
                let exact = abel_solution(lambda, alpha, t)?;
                abs_error = abs_error.max((v - exact).abs());
                scale = scale.max(exact.abs());
            }
            Ok(ConvergenceRow {
                n,
                abs_error,
                rel_error: abs_error / scale,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let orders = rows
        .windows(2)
        .map(|w| (w[0].abs_error / w[1].abs_error).log2())
        .collect();
    Ok(ConvergenceTable {
        lambda,
        alpha,
        rows,
        orders,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRow {
    pub n: usize,
    /// `sup |y_eps - y| / eps`
    pub constant: f64,
}

/// Shifts `eta` by `eps` and records the amplification of the solved state
/// for each grid size.
pub fn stability_study(
    problem: &ProblemSpec,
    control: &ScalarControl,
    eps: f64,
    ns: &[usize],
) -> Result<Vec<StabilityRow>> {
    let mut file = problem.to_file();
    file.eta = format!("({}) + {eps:?}", file.eta);
    let shifted = file.into_problem()?;
    ns.iter()
        .map(|&n| {
            let grid = make_grid(problem.horizon(), n)?;
            let u = control.sample(&grid)?;
            let y = solve_state(problem, &u, &grid)?;
            let ye = solve_state(&shifted, &u, &grid)?;
            Ok(StabilityRow {
                n,
                constant: ye.sup_distance(&y)? / eps,
            })
        })
        .collect()
}
