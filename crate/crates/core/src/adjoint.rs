//! Backward adjoint equation on the midpoint grid.
//!
//! The adjoint kernel is evaluated with the outer (later) time first,
//! `f_y(s, t, y*(t), u*(t))` for `s > t`, so every evaluation stays in the
//! domain `s <= t` of the generator and `psi = H_y` holds term by term for
//! the Hamiltonian of [`crate::optimality`].

use serde::Serialize;

use crate::expr::ScalarExpr;
use crate::problem::ProblemSpec;
use crate::quad::{Grid, MidpointMirroredWeights};
use crate::state::{Placement, ReferencePair, Trajectory};
use crate::{Error, Result};

/// Where an instant time landed after snapping to the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnappedInstant {
    pub requested: f64,
    pub node_index: usize,
    pub node_time: f64,
    pub distance: f64,
}

pub fn snap_instants(problem: &ProblemSpec, grid: &Grid) -> Vec<SnappedInstant> {
    problem
        .instant_costs()
        .iter()
        .map(|ic| {
            let (k, distance) = grid.nearest_node(ic.time);
            SnappedInstant {
                requested: ic.time,
                node_index: k,
                node_time: grid.node(k),
                distance,
            }
        })
        .collect()
}

/// Adjoint state `psi` on the midpoints.
#[derive(Clone, Debug)]
pub struct AdjointTrajectory {
    pub psi: Trajectory,
    /// Per instant, the magnitude of its singular source term at each
    /// midpoint.
    pub instant_terms: Vec<Vec<f64>>,
    pub snapped: Vec<SnappedInstant>,
}

/// The reference pair sampled on midpoints together with the instant data
/// shared by the adjoint and the Hamiltonian.
pub(crate) struct MidpointData<'a> {
    pub problem: &'a ProblemSpec,
    pub grid: Grid,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub weights: MidpointMirroredWeights,
    pub snapped: Vec<SnappedInstant>,
    /// `h_y^i(y*(t_i))` at the snapped node
    pub h_y: Vec<f64>,
}

impl<'a> MidpointData<'a> {
    pub fn new(problem: &'a ProblemSpec, pair: &ReferencePair, grid: &Grid) -> Result<Self> {
        pair.check(grid)?;
        let snapped = snap_instants(problem, grid);
        let h_y = snapped
            .iter()
            .zip(&problem.derivatives().h)
            .map(|(s, h)| h.d_y.eval4(s.node_time, 0.0, pair.y.values()[s.node_index], 0.0))
            .collect();
        Ok(Self {
            problem,
            grid: *grid,
            y: pair.y.to_midpoints().into_values(),
            u: pair.u.to_midpoints().into_values(),
            weights: MidpointMirroredWeights::new(problem.alpha(), *grid)?,
            snapped,
            h_y,
        })
    }

    /// `f(outer, tau_k, y*(tau_k), u*(tau_k))`
    #[inline]
    pub fn kernel(&self, f: &ScalarExpr, outer: f64, k: usize) -> f64 {
        f.eval4(outer, self.grid.midpoint(k), self.y[k], self.u[k])
    }

    #[inline]
    pub fn running(&self, g: &ScalarExpr, k: usize) -> f64 {
        g.eval4(self.grid.midpoint(k), 0.0, self.y[k], self.u[k])
    }

    /// `Σ_i 1[tau_k < t_i] f(t_i, tau_k, ...) (t_i - tau_k)^(alpha-1) h_y^i`,
    /// also returning each instant's term.
    pub fn instant_sum(&self, f: &ScalarExpr, k: usize) -> (f64, Vec<f64>) {
        let tau = self.grid.midpoint(k);
        let alpha = self.problem.alpha();
        let mut total = 0.0;
        let terms = self
            .snapped
            .iter()
            .zip(&self.h_y)
            .map(|(s, hy)| {
                if tau < s.node_time {
                    let term = self.kernel(f, s.node_time, k)
                        * (s.node_time - tau).powf(alpha - 1.0)
                        * hy;
                    total += term;
                    term
                } else {
                    0.0
                }
            })
            .collect();
        (total, terms)
    }

    /// `Σ_{j >= k} v[k][j] psi_j f(tau_j, tau_k, ...)`
    pub fn right_integral(&self, f: &ScalarExpr, psi: &[f64], k: usize) -> f64 {
        (k..self.grid.cells())
            .map(|j| self.weights.weight(k, j) * psi[j] * self.kernel(f, self.grid.midpoint(j), k))
            .sum()
    }
}

/// Solves
///
/// ```text
/// psi(t) = ∫_t^T f_y(s,t,y*,u*) (s-t)^(alpha-1) psi(s) ds - g_y(t,y*,u*)
///          - Σ_i 1[t < t_i] f_y(t_i,t,y*,u*) (t_i-t)^(alpha-1) h^i_y(y*(t_i))
/// ```
///
/// backward from the last midpoint. The half cell at `tau_k` makes each step
/// implicit but linear in `psi_k`.
pub fn solve_adjoint(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    grid: &Grid,
) -> Result<AdjointTrajectory> {
    let data = MidpointData::new(problem, pair, grid)?;
    let d = problem.derivatives();
    let n = grid.cells();
    let mut psi = vec![0.0; n];
    let mut instant_terms = vec![vec![0.0; n]; data.snapped.len()];
    for k in (0..n).rev() {
        let tau = grid.midpoint(k);
        let mut rhs = -data.running(&d.g.d_y, k);
        let (instants, terms) = data.instant_sum(&d.f.d_y, k);
        rhs -= instants;
        for (i, term) in terms.into_iter().enumerate() {
            instant_terms[i][k] = term.abs();
        }
        for (j, &p) in psi.iter().enumerate().take(n).skip(k + 1) {
            rhs += data.weights.weight(k, j) * p * data.kernel(&d.f.d_y, grid.midpoint(j), k);
        }
        let diag = 1.0 - data.weights.weight(k, k) * data.kernel(&d.f.d_y, tau, k);
        if diag == 0.0 {
            return Err(Error::SingularStep {
                what: "adjoint".into(),
                index: k,
            });
        }
        psi[k] = rhs / diag;
        if !psi[k].is_finite() {
            return Err(Error::NonFinite {
                what: "adjoint".into(),
                location: format!("midpoint {k}"),
            });
        }
    }
    Ok(AdjointTrajectory {
        psi: Trajectory::new(*grid, Placement::Midpoints, psi)?,
        instant_terms,
        snapped: data.snapped,
    })
}

/// Largest absolute difference between `psi` and the right side of the
/// adjoint equation evaluated with `psi`.
pub fn adjoint_residual(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    adjoint: &AdjointTrajectory,
    grid: &Grid,
) -> Result<f64> {
    let data = MidpointData::new(problem, pair, grid)?;
    let d = problem.derivatives();
    let psi = adjoint.psi.values();
    Ok((0..grid.cells())
        .map(|k| {
            let rhs = data.right_integral(&d.f.d_y, psi, k)
                - data.running(&d.g.d_y, k)
                - data.instant_sum(&d.f.d_y, k).0;
            (psi[k] - rhs).abs()
        })
        .fold(0.0, f64::max))
}
