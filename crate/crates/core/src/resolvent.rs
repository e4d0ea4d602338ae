//! Resolvent kernels of linear weakly singular Volterra equations.
//!
//! For `y(t) = eta(t) + ∫_0^t A(t,s) y(s) (t-s)^(alpha-1) ds` the resolvent
//! `Phi` satisfies
//!
//! ```text
//! Phi(t,s) = A(t,s) (t-s)^(alpha-1) + ∫_s^t A(t,tau) (t-tau)^(alpha-1) Phi(tau,s) dtau
//! ```
//!
//! and `y = eta + ∫ Phi eta`. Both `Phi` and the response kernel `Q` of the
//! first variational equation are stored as `c(t,s) (t-s)^(alpha-1) + R(t,s)`
//! with `c` and `R` sampled on node pairs.

use crate::expr::ScalarExpr;
use crate::problem::ProblemSpec;
use crate::quad::{Grid, HalfCellTable, SingularWeights};
use crate::state::{Placement, ReferencePair, Trajectory};
use crate::{Error, Result};

#[inline]
fn tri_incl(k: usize, j: usize) -> usize {
    k * (k + 1) / 2 + j
}

#[inline]
fn tri_strict(k: usize, j: usize) -> usize {
    k * (k - 1) / 2 + j
}

/// Quarter points: centre of half cell `q` is `(q + 1/2) h / 2`.
#[inline]
fn quarter(grid: &Grid, q: usize) -> f64 {
    (q as f64 + 0.5) * 0.5 * grid.step()
}

/// Kernel `c(t,s) (t-s)^(alpha-1) + R(t,s)` sampled on node pairs.
#[derive(Clone, Debug)]
pub struct RegularizedKernel {
    alpha: f64,
    grid: Grid,
    /// `c(t_k, t_j)` for `j <= k`
    coeff: Vec<f64>,
    /// `R(t_k, t_j)` for `j < k`
    regular: Vec<f64>,
}

impl RegularizedKernel {
    pub fn zero(alpha: f64, grid: Grid) -> Self {
        let n = grid.cells();
        Self {
            alpha,
            grid,
            coeff: vec![0.0; tri_incl(n, n) + 1],
            regular: vec![0.0; tri_strict(n + 1, 0)],
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Singular coefficient at nodes `(t_k, t_j)`, `j <= k`.
    #[inline]
    pub fn coeff(&self, k: usize, j: usize) -> f64 {
        debug_assert!(j <= k);
        self.coeff[tri_incl(k, j)]
    }

    /// Regular part at nodes `(t_k, t_j)`, `j < k`.
    #[inline]
    pub fn regular(&self, k: usize, j: usize) -> f64 {
        debug_assert!(j < k);
        self.regular[tri_strict(k, j)]
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.iter().all(|&c| c == 0.0) && self.regular.iter().all(|&r| r == 0.0)
    }

    /// Full kernel value at nodes `(t_k, t_j)`, `j < k`.
    pub fn value(&self, k: usize, j: usize) -> f64 {
        let d = self.grid.node(k) - self.grid.node(j);
        self.coeff(k, j) * d.powf(self.alpha - 1.0) + self.regular(k, j)
    }

    /// Position of `t` as (cell index, fraction), clamped to the grid.
    fn locate(&self, t: f64) -> (usize, f64) {
        let x = (t / self.grid.step()).clamp(0.0, self.grid.cells() as f64);
        let i = (x.floor() as usize).min(self.grid.cells() - 1);
        (i, x - i as f64)
    }

    /// `c` along row `k` at `s`, column index clamped to the diagonal.
    fn coeff_row(&self, k: usize, s: f64) -> f64 {
        let (j, fr) = self.locate(s);
        let j = j.min(k);
        let lo = self.coeff(k, j);
        if j + 1 > k || fr == 0.0 {
            lo
        } else {
            lo + fr * (self.coeff(k, j + 1) - lo)
        }
    }

    fn regular_row(&self, k: usize, s: f64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let (j, fr) = self.locate(s);
        let j = j.min(k - 1);
        let lo = self.regular(k, j);
        if j + 1 >= k || fr == 0.0 {
            lo
        } else {
            lo + fr * (self.regular(k, j + 1) - lo)
        }
    }

    fn interp_rows(&self, t: f64, row: impl Fn(usize) -> f64) -> f64 {
        let (k, fr) = self.locate(t);
        if fr == 0.0 {
            row(k)
        } else if fr == 1.0 {
            row(k + 1)
        } else {
            (1.0 - fr) * row(k) + fr * row(k + 1)
        }
    }

    /// Singular coefficient interpolated at an arbitrary `(t, s)`, `s <= t`.
    pub fn coeff_at(&self, t: f64, s: f64) -> f64 {
        self.interp_rows(t, |k| self.coeff_row(k, s))
    }

    /// Regular part interpolated at an arbitrary `(t, s)`, `s < t`.
    pub fn regular_at(&self, t: f64, s: f64) -> f64 {
        self.interp_rows(t, |k| self.regular_row(k, s))
    }

    /// `∫ K(t, s) ds` over the part of cell `a` lying below `t`. The power
    /// singularity is integrated exactly; `c` and `R` are sampled at the
    /// centre of the covered part.
    pub fn cell_response(&self, t: f64, a: usize) -> f64 {
        let lo = self.grid.node(a);
        if t <= lo {
            return 0.0;
        }
        let hi = self.grid.node(a + 1).min(t);
        let mid = 0.5 * (lo + hi);
        let alpha = self.alpha;
        let power = ((t - lo).powf(alpha) - (t - hi).powf(alpha)) / alpha;
        self.coeff_at(t, mid) * power + self.regular_at(t, mid) * (hi - lo)
    }

    /// `∫_0^t K(t, s) v(s) ds` for piecewise-constant `v` given by cell values.
    pub fn apply_cells(&self, t: f64, cells: &[f64]) -> f64 {
        let last = ((t / self.grid.step()).ceil() as usize).min(self.grid.cells());
        (0..last).map(|a| self.cell_response(t, a) * cells[a]).sum()
    }

    /// Applies the kernel to a trajectory, returning values on the nodes.
    /// Node trajectories act through their left-endpoint cell values.
    pub fn apply(&self, v: &Trajectory) -> Result<Trajectory> {
        if *v.grid() != self.grid {
            return Err(Error::GridMismatch("kernel and trajectory grids differ".into()));
        }
        let cells = v.cell_values();
        let values = (0..=self.grid.cells())
            .map(|k| self.apply_cells(self.grid.node(k), &cells))
            .collect();
        Trajectory::new(self.grid, Placement::Nodes, values)
    }
}

/// Kernel evaluations needed by the half-cell march, cached as triangular
/// tables.
struct HalfCellSamples {
    /// `A(t_k, t_j)`, `j <= k`
    nodes: Vec<f64>,
    /// `A(t_k, quarter q)`, `q < 2k`; row `k` starts at `k (k - 1)`
    outer: Vec<f64>,
    /// `A(quarter q, t_j)`, `2j <= q`; indexed per column `j`
    inner: Vec<f64>,
    inner_start: Vec<usize>,
}

impl HalfCellSamples {
    fn new(grid: &Grid, kernel: &dyn Fn(f64, f64) -> f64) -> Self {
        let n = grid.cells();
        let mut nodes = Vec::with_capacity(tri_incl(n, n) + 1);
        for k in 0..=n {
            for j in 0..=k {
                nodes.push(kernel(grid.node(k), grid.node(j)));
            }
        }
        let mut outer = Vec::with_capacity(n * (n + 1));
        for k in 0..=n {
            for q in 0..2 * k {
                outer.push(kernel(grid.node(k), quarter(grid, q)));
            }
        }
        let mut inner = Vec::new();
        let mut inner_start = Vec::with_capacity(n + 1);
        for j in 0..=n {
            inner_start.push(inner.len());
            for q in 2 * j..2 * n {
                inner.push(kernel(quarter(grid, q), grid.node(j)));
            }
        }
        Self {
            nodes,
            outer,
            inner,
            inner_start,
        }
    }

    #[inline]
    fn outer(&self, k: usize, q: usize) -> f64 {
        self.outer[k * (k - 1) + q]
    }

    #[inline]
    fn inner(&self, q: usize, j: usize) -> f64 {
        self.inner[self.inner_start[j] + q - 2 * j]
    }

    fn all_zero(&self) -> bool {
        self.nodes.iter().chain(&self.outer).chain(&self.inner).all(|&v| v == 0.0)
    }
}

/// Builds the resolvent of `kernel(t, s)` on the grid.
///
/// For each fixed column `s = t_j` the regular part is marched in `t`. Every
/// cell of `[t_j, t_k]` is split at its midpoint; on each half the factor
/// of `(t_k - tau)^(alpha-1) (tau - t_j)^(alpha-1)` with the nearer
/// singularity is integrated exactly and the other sampled at the half's
/// centre. The regular part under the integral is linearly interpolated
/// between nodes (held constant on the first cell, where `R(t_j, t_j)` is
/// not sampled); its value at the unknown node enters linearly and is
/// solved for directly.
pub fn build_resolvent(
    kernel: &dyn Fn(f64, f64) -> f64,
    alpha: f64,
    grid: &Grid,
) -> Result<RegularizedKernel> {
    let samples = HalfCellSamples::new(grid, kernel);
    resolvent_from_samples(&samples, alpha, grid)
}

fn resolvent_from_samples(
    samples: &HalfCellSamples,
    alpha: f64,
    grid: &Grid,
) -> Result<RegularizedKernel> {
    let mut out = RegularizedKernel::zero(alpha, *grid);
    let table = HalfCellTable::new(alpha, *grid)?;
    out.coeff.copy_from_slice(&samples.nodes);
    if samples.all_zero() {
        return Ok(out);
    }
    let n = grid.cells();
    let mut column = vec![0.0; n + 1];
    for j in 0..n {
        for k in j + 1..=n {
            let mut acc = 0.0;
            let mut diag = 0.0;
            for m in j..k {
                for half in 0..2 {
                    let q = 2 * m + half;
                    let a_out = samples.outer(k, q);
                    if a_out == 0.0 {
                        continue;
                    }
                    let to_t = 2 * k - q - 1;
                    acc += a_out * samples.inner(q, j) * table.doubly_singular(q - 2 * j, to_t);
                    let w = a_out * table.exact(to_t);
                    if m == j {
                        if k == j + 1 {
                            diag += w;
                        } else {
                            acc += w * column[j + 1];
                        }
                    } else {
                        let frac = if half == 0 { 0.25 } else { 0.75 };
                        acc += w * (1.0 - frac) * column[m];
                        if m + 1 == k {
                            diag += w * frac;
                        } else {
                            acc += w * frac * column[m + 1];
                        }
                    }
                }
            }
            let denom = 1.0 - diag;
            if denom == 0.0 {
                return Err(Error::SingularStep {
                    what: format!("resolvent column {j}"),
                    index: k,
                });
            }
            let r = acc / denom;
            if !r.is_finite() {
                return Err(Error::NonFinite {
                    what: "resolvent regular part".into(),
                    location: format!("(k, j) = ({k}, {j})"),
                });
            }
            column[k] = r;
            out.regular[tri_strict(k, j)] = r;
        }
    }
    Ok(out)
}

/// Maximum over sampled node pairs of
/// `|Phi - A (t-s)^(alpha-1) - ∫ A Phi| / (1 + |Phi|)`, with the integral
/// evaluated by the same half-cell quadrature the builder uses.
pub fn resolvent_residual(
    phi: &RegularizedKernel,
    kernel: &dyn Fn(f64, f64) -> f64,
) -> Result<f64> {
    let grid = *phi.grid();
    let alpha = phi.alpha();
    let table = HalfCellTable::new(alpha, grid)?;
    let n = grid.cells();
    let mut worst = 0.0f64;
    for j in 0..n {
        let s = grid.node(j);
        for k in j + 1..=n {
            let t = grid.node(k);
            let mut integral = 0.0;
            for q in 2 * j..2 * k {
                let tau = quarter(&grid, q);
                let to_t = 2 * k - q - 1;
                let a_out = kernel(t, tau);
                let inner_coeff = kernel(tau, s);
                integral += a_out * inner_coeff * table.doubly_singular(q - 2 * j, to_t);
                let r = if q < 2 * (j + 1) {
                    phi.regular(j + 1, j)
                } else {
                    phi.regular_at(tau, s)
                };
                integral += a_out * table.exact(to_t) * r;
            }
            let lhs = phi.value(k, j);
            let rhs = kernel(t, s) * (t - s).powf(alpha - 1.0) + integral;
            worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
        }
    }
    Ok(worst)
}

/// `y(t) = eta(t) + ∫_0^t Phi(t,s) eta(s) ds`: product integration for the
/// singular part, trapezoid rule for the regular part.
pub fn represent_solution(
    phi: &RegularizedKernel,
    eta: &Trajectory,
    grid: &Grid,
) -> Result<Trajectory> {
    if phi.grid() != grid {
        return Err(Error::GridMismatch("resolvent built on a different grid".into()));
    }
    eta.expect_on(grid, Placement::Nodes, "free term")?;
    let w = SingularWeights::new(phi.alpha(), *grid)?;
    let h = grid.step();
    let e = eta.values();
    let values = (0..=grid.cells())
        .map(|k| {
            if k == 0 {
                return e[0];
            }
            let mut singular = 0.0;
            for a in 0..k {
                let c = 0.5 * (phi.coeff(k, a) + phi.coeff(k, a + 1));
                singular += w.weight(k, a) * c * 0.5 * (e[a] + e[a + 1]);
            }
            // R(t_k, t_k) is not sampled; the last column stands in for it.
            let mut regular = 0.5 * phi.regular(k, 0) * e[0] + 0.5 * phi.regular(k, k - 1) * e[k];
            for (j, &ej) in e.iter().enumerate().take(k).skip(1) {
                regular += phi.regular(k, j) * ej;
            }
            e[k] + singular + h * regular
        })
        .collect();
    Trajectory::new(*grid, Placement::Nodes, values)
}

/// Kernel `Q` with `Y1(t) = ∫_0^t Q(t,s) v(s) ds` along the reference pair:
///
/// ```text
/// Q(t,s) = f_u(t,s) (t-s)^(alpha-1) + ∫_s^t Phi(t,tau) f_u(tau,s) (tau-s)^(alpha-1) dtau
/// ```
///
/// where `Phi` is the resolvent of `f_y(t, s, y*(s), u*(s))`.
pub fn build_q_kernel(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    grid: &Grid,
) -> Result<RegularizedKernel> {
    let (phi, f_y_samples) = build_state_resolvent(problem, pair, grid)?;
    let d = &problem.derivatives().f;
    let f_u = pair_kernel(&d.d_u, pair);
    let b = HalfCellSamples::new(grid, &f_u);
    let mut q = RegularizedKernel::zero(problem.alpha(), *grid);
    q.coeff.copy_from_slice(&b.nodes);
    if b.all_zero() {
        return Ok(q);
    }
    let table = HalfCellTable::new(problem.alpha(), *grid)?;
    let n = grid.cells();
    let phi_zero = phi.is_zero();
    for k in 1..=n {
        for j in 0..k {
            let mut acc = 0.0;
            for m in j..k {
                for half in 0..2 {
                    let q_idx = 2 * m + half;
                    let b_in = b.inner(q_idx, j);
                    if b_in == 0.0 {
                        continue;
                    }
                    let to_t = 2 * k - q_idx - 1;
                    let from_s = q_idx - 2 * j;
                    acc += f_y_samples.outer(k, q_idx) * b_in * table.doubly_singular(from_s, to_t);
                    if !phi_zero {
                        let r_phi = if m + 1 == k {
                            phi.regular(k, m)
                        } else {
                            let frac = if half == 0 { 0.25 } else { 0.75 };
                            (1.0 - frac) * phi.regular(k, m) + frac * phi.regular(k, m + 1)
                        };
                        acc += r_phi * b_in * table.exact(from_s);
                    }
                }
            }
            if !acc.is_finite() {
                return Err(Error::NonFinite {
                    what: "Q kernel regular part".into(),
                    location: format!("(k, j) = ({k}, {j})"),
                });
            }
            q.regular[tri_strict(k, j)] = acc;
        }
    }
    Ok(q)
}

/// Resolvent of `A(t,s) = f_y(t, s, y*(s), u*(s))`.
pub fn build_pair_resolvent(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    grid: &Grid,
) -> Result<RegularizedKernel> {
    Ok(build_state_resolvent(problem, pair, grid)?.0)
}

fn build_state_resolvent(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    grid: &Grid,
) -> Result<(RegularizedKernel, HalfCellSamples)> {
    pair.check(grid)?;
    let f_y = pair_kernel(&problem.derivatives().f.d_y, pair);
    let samples = HalfCellSamples::new(grid, &f_y);
    let phi = resolvent_from_samples(&samples, problem.alpha(), grid)?;
    Ok((phi, samples))
}

/// `(t, s) -> e(t, s, y*(s), u*(s))` with the pair interpolated linearly.
fn pair_kernel<'a>(e: &'a ScalarExpr, pair: &'a ReferencePair) -> impl Fn(f64, f64) -> f64 + 'a {
    move |t, s| e.eval4(t, s, pair.y.at(s), pair.u.at(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;
    use crate::quad::make_grid;
    use crate::state::{solve_state, solve_y1};
    use statrs::function::gamma::gamma;

    /// Regular part of the resolvent of a constant kernel, summed from the
    /// Neumann series (terms n >= 2).
    fn neumann_regular(lambda: f64, alpha: f64, t: f64, terms: usize) -> f64 {
        (2..=terms)
            .map(|n| {
                let n = n as f64;
                (lambda * gamma(alpha)).powf(n) * t.powf(n * alpha - 1.0) / gamma(n * alpha)
            })
            .sum()
    }

    #[test]
    fn zero_kernel_gives_zero_resolvent() {
        let g = make_grid(1.0, 16).unwrap();
        let phi = build_resolvent(&|_, _| 0.0, 0.5, &g).unwrap();
        assert!(phi.is_zero());
        let eta = Trajectory::from_fn(g, Placement::Nodes, |t| 1.0 + t).unwrap();
        assert_eq!(represent_solution(&phi, &eta, &g).unwrap(), eta);
    }

    #[test]
    fn constant_kernel_matches_neumann_series() {
        let (lambda, alpha) = (0.5, 0.5);
        let g = make_grid(1.0, 256).unwrap();
        let phi = build_resolvent(&|_, _| lambda, alpha, &g).unwrap();
        assert_eq!(phi.coeff(256, 0), lambda);
        let expect = neumann_regular(lambda, alpha, 1.0, 30);
        let got = phi.regular(256, 0);
        assert!(((got - expect) / expect).abs() < 2e-3, "{got} vs {expect}");
        // translation invariance of a constant kernel
        let inner = phi.regular(200, 72);
        let expect = neumann_regular(lambda, alpha, g.node(128), 30);
        assert!(((inner - expect) / expect).abs() < 5e-3, "{inner} vs {expect}");
    }

    #[test]
    fn other_exponents() {
        for alpha in [0.3, 0.75] {
            let lambda = 0.3;
            let g = make_grid(1.0, 128).unwrap();
            let phi = build_resolvent(&|_, _| lambda, alpha, &g).unwrap();
            let expect = neumann_regular(lambda, alpha, 1.0, 150);
            let got = phi.regular(128, 0);
            assert!(((got - expect) / expect).abs() < 2e-2, "alpha={alpha}: {got} vs {expect}");
        }
    }

    #[test]
    fn zero_free_term() {
        let g = make_grid(1.0, 16).unwrap();
        let phi = build_resolvent(&|_, _| 0.7, 0.5, &g).unwrap();
        let eta = Trajectory::zeros(g, Placement::Nodes);
        assert_eq!(represent_solution(&phi, &eta, &g).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn representation_matches_marching_at_moderate_n() {
        let p = builtin("abel_linear", &[("lambda", 0.5)]).unwrap();
        let g = make_grid(1.0, 128).unwrap();
        let u = Trajectory::zeros(g, Placement::Nodes);
        let marched = solve_state(&p, &u, &g).unwrap();
        let phi = build_resolvent(&|_, _| 0.5, 0.5, &g).unwrap();
        let eta = Trajectory::constant(g, Placement::Nodes, 1.0);
        let rep = represent_solution(&phi, &eta, &g).unwrap();
        let rel = rep.sup_distance(&marched).unwrap() / marched.sup_norm();
        assert!(rel < 3e-2, "{rel}");
    }

    #[test]
    fn residual_is_small() {
        let g = make_grid(1.0, 64).unwrap();
        let kernel = |t: f64, s: f64| 0.5 + 0.2 * t - 0.1 * s;
        let phi = build_resolvent(&kernel, 0.5, &g).unwrap();
        assert!(resolvent_residual(&phi, &kernel).unwrap() < 1e-10);
    }

    #[test]
    fn q_kernel_without_state_feedback() {
        // paper example at u* = 0: f_y = t u* = 0 so Q = t y*(s) (t-s)^(-1/2)
        let p = builtin("paper_example", &[]).unwrap();
        let g = make_grid(1.0, 32).unwrap();
        let pair = ReferencePair::solve(&p, Trajectory::zeros(g, Placement::Nodes), &g).unwrap();
        let q = build_q_kernel(&p, &pair, &g).unwrap();
        for k in 1..=32 {
            for j in 0..k {
                let (t, s) = (g.node(k), g.node(j));
                assert_eq!(q.regular(k, j), 0.0);
                let expect = t * pair.y.values()[j] * (t - s).powf(-0.5);
                assert!((q.value(k, j) - expect).abs() <= 1e-12 * expect);
            }
        }
    }

    #[test]
    fn q_kernel_vanishes_for_sing_quad() {
        let p = builtin("sing_quad", &[("c", 1.0)]).unwrap();
        let g = make_grid(1.0, 32).unwrap();
        let pair = ReferencePair::solve(&p, Trajectory::zeros(g, Placement::Nodes), &g).unwrap();
        assert!(build_q_kernel(&p, &pair, &g).unwrap().is_zero());
    }

    #[test]
    fn q_route_agrees_with_marched_y1() {
        let p = builtin("lq", &[("a", 0.5), ("b", 1.0), ("r", 1.0)]).unwrap();
        let g = make_grid(1.0, 128).unwrap();
        let pair = ReferencePair::solve(&p, Trajectory::zeros(g, Placement::Nodes), &g).unwrap();
        let q = build_q_kernel(&p, &pair, &g).unwrap();
        let v = Trajectory::from_fn(g, Placement::Nodes, |t| 1.0 + t).unwrap();
        let marched = solve_y1(&p, &pair, &v, &g).unwrap();
        let routed = q.apply(&v).unwrap();
        let rel = routed.sup_distance(&marched).unwrap() / marched.sup_norm();
        assert!(rel < 5e-2, "{rel}");
    }
}
