//! Hamiltonian, singular-control detection and the second-order test.

pub mod eigen;
mod kernel;

pub use eigen::{jacobi_eigen, largest_eigenpair};
pub use kernel::{assemble_m_kernel, quadratic_form, MKernel, SecondVariation};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::adjoint::{solve_adjoint, AdjointTrajectory, MidpointData};
use crate::expr::ScalarExpr;
use crate::problem::ProblemSpec;
use crate::quad::Grid;
use crate::resolvent::build_q_kernel;
use crate::state::{Placement, ReferencePair, Trajectory};
use crate::Result;

/// Ordering used for the mixed term of the quadratic form.
pub const CROSS_TERM_CONVENTION: &str = "int_0^T int_0^t v(t) H_yu(t) Q(t,s) v(s) ds dt";

/// `H` and its partials on the midpoints.
#[derive(Clone, Debug)]
pub struct HamiltonianFields {
    pub h: Trajectory,
    pub h_y: Trajectory,
    pub h_u: Trajectory,
    pub h_uu: Trajectory,
    pub h_yy: Trajectory,
    pub h_yu: Trajectory,
}

impl HamiltonianFields {
    pub fn grid(&self) -> &Grid {
        self.h.grid()
    }

    /// Default tolerance `1e-6 (1 + max|H_uu| T)`.
    pub fn default_tol(&self) -> f64 {
        1e-6 * (1.0 + self.h_uu.sup_norm() * self.grid().horizon())
    }
}

/// Evaluates
///
/// ```text
/// H(t) = ∫_t^T psi(s) f(s,t,y*,u*) (s-t)^(alpha-1) ds - g(t,y*,u*)
///        - Σ_i 1[t < t_i] f(t_i,t,y*,u*) (t_i-t)^(alpha-1) h^i_y(y*(t_i))
/// ```
///
/// and the same expression with `f`, `g` replaced by their partials.
pub fn hamiltonian_fields(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    adjoint: &AdjointTrajectory,
    grid: &Grid,
) -> Result<HamiltonianFields> {
    adjoint.psi.expect_on(grid, Placement::Midpoints, "adjoint")?;
    let data = MidpointData::new(problem, pair, grid)?;
    let psi = adjoint.psi.values();
    let field = |f: &ScalarExpr, g: &ScalarExpr| -> Result<Trajectory> {
        let values = (0..grid.cells())
            .map(|k| {
                data.right_integral(f, psi, k) - data.running(g, k) - data.instant_sum(f, k).0
            })
            .collect();
        Trajectory::new(*grid, Placement::Midpoints, values)
    };
    let d = problem.derivatives();
    Ok(HamiltonianFields {
        h: field(&d.f.value, &d.g.value)?,
        h_y: field(&d.f.d_y, &d.g.d_y)?,
        h_u: field(&d.f.d_u, &d.g.d_u)?,
        h_uu: field(&d.f.d_uu, &d.g.d_uu)?,
        h_yy: field(&d.f.d_yy, &d.g.d_yy)?,
        h_yu: field(&d.f.d_yu, &d.g.d_yu)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularityCheck {
    pub singular: bool,
    pub sup_abs_h_u: f64,
    /// Midpoint where the supremum is attained.
    pub location: f64,
    pub index: usize,
    pub tol: f64,
}

/// Singular iff `max |H_u| <= tol` over the midpoints.
pub fn detect_singular(fields: &HamiltonianFields, tol: f64) -> SingularityCheck {
    let (index, sup) = fields
        .h_u
        .values()
        .iter()
        .enumerate()
        .fold((0, 0.0), |(i, m), (j, v)| if v.abs() > m { (j, v.abs()) } else { (i, m) });
    SingularityCheck {
        singular: sup <= tol,
        sup_abs_h_u: sup,
        location: fields.grid().midpoint(index),
        index,
        tol,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    /// The control is not singular, so the test does not apply.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondOrderReport {
    #[serde(skip)]
    pub k: DMatrix<f64>,
    pub lambda_max: f64,
    pub verdict: Verdict,
    #[serde(skip)]
    pub violating_direction: Option<Trajectory>,
    /// `vᵀKv` for the returned direction.
    pub direction_value: Option<f64>,
    pub tol: f64,
    pub k_norm: f64,
    pub singularity: SingularityCheck,
    pub cross_term_convention: &'static str,
}

/// Everything the second-order test computes along the way.
pub struct SecondOrderAnalysis {
    pub adjoint: AdjointTrajectory,
    pub fields: HamiltonianFields,
    pub variation: SecondVariation,
    pub report: SecondOrderReport,
}

/// Runs the full pipeline: adjoint, Hamiltonian, response kernel, `K` and
/// its largest eigenvalue. `tol = None` uses the default tolerance for both
/// the singularity check and the eigenvalue test.
pub fn second_order_test(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    grid: &Grid,
    tol: Option<f64>,
) -> Result<SecondOrderReport> {
    Ok(second_order_analysis(problem, pair, grid, tol)?.report)
}

pub fn second_order_analysis(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    grid: &Grid,
    tol: Option<f64>,
) -> Result<SecondOrderAnalysis> {
    let adjoint = solve_adjoint(problem, pair, grid)?;
    let fields = hamiltonian_fields(problem, pair, &adjoint, grid)?;
    let tol = tol.unwrap_or_else(|| fields.default_tol());
    let singularity = detect_singular(&fields, tol);
    let q = build_q_kernel(problem, pair, grid)?;
    let variation = SecondVariation::new(problem, pair, &fields, q, grid)?;
    let k = variation.k_matrix()?;
    let report = verdict_from_matrix(k, tol, singularity, grid)?;
    Ok(SecondOrderAnalysis {
        adjoint,
        fields,
        variation,
        report,
    })
}

fn verdict_from_matrix(
    k: DMatrix<f64>,
    tol: f64,
    singularity: SingularityCheck,
    grid: &Grid,
) -> Result<SecondOrderReport> {
    let k_norm = k.norm();
    let (lambda_max, vector) = largest_eigenpair(&k)?;
    let verdict = if !singularity.singular {
        Verdict::Inconclusive
    } else if lambda_max <= tol {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    let (violating_direction, direction_value) = if verdict == Verdict::Violated {
        let v = Trajectory::new(*grid, Placement::Midpoints, vector.iter().copied().collect())?;
        let value = vector.dot(&(&k * &vector));
        (Some(v), Some(value))
    } else {
        (None, None)
    };
    Ok(SecondOrderReport {
        k,
        lambda_max,
        verdict,
        violating_direction,
        direction_value,
        tol,
        k_norm,
        singularity,
        cross_term_convention: CROSS_TERM_CONVENTION,
    })
}
