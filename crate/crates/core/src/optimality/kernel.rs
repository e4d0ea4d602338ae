//! Second variation of the cost: the kernel `M`, the matrix `K` and the
//! quadratic form `QF`.
//!
//! Everything is built from the cell responses
//! `G(t, a) = ∫_{cell a, s < t} Q(t, s) ds`, so that `Y1(t) = Σ_a G(t, a) v_a`
//! for a piecewise-constant direction. The `t` integrals use four Gauss
//! points per cell with `H_yy` and `H_yu` frozen at the midpoint.

use nalgebra::DMatrix;

use super::HamiltonianFields;
use crate::adjoint::snap_instants;
use crate::problem::ProblemSpec;
use crate::quad::{Grid, GAUSS4_NODES, GAUSS4_WEIGHTS};
use crate::resolvent::RegularizedKernel;
use crate::state::{Placement, ReferencePair, Trajectory};
use crate::{Error, Result};

/// Cell-averaged `M` on midpoint pairs: `M[a][b] h^2 = ∫∫_{cells a, b} M`.
///
/// Cell averages stay finite on the diagonal, where `M(tau, tau)` itself
/// diverges for `alpha <= 1/2`.
#[derive(Clone, Debug)]
pub struct MKernel {
    pub values: DMatrix<f64>,
    /// Largest `|M[a][b] - M[b][a]|` before symmetrization, relative to
    /// `1 + max|M|`.
    pub asymmetry: f64,
}

impl MKernel {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[(a, b)]
    }
}

/// Data shared by the matrix and functional forms of the second variation.
#[derive(Clone, Debug)]
pub struct SecondVariation {
    grid: Grid,
    h_uu: Vec<f64>,
    h_yy: Vec<f64>,
    h_yu: Vec<f64>,
    q: RegularizedKernel,
    /// Snapped instant times and `h^i_yy(y*(t_i))`.
    instants: Vec<(usize, f64)>,
    /// Rows `4k + g` for the Gauss points of cell `k`, then one row per
    /// instant. `None` when `Q ≡ 0`.
    response: Option<DMatrix<f64>>,
}

fn gauss_point(grid: &Grid, k: usize, g: usize) -> (f64, f64) {
    let h = grid.step();
    (grid.node(k) + h * GAUSS4_NODES[g], h * GAUSS4_WEIGHTS[g])
}

impl SecondVariation {
    pub fn new(
        problem: &ProblemSpec,
        pair: &ReferencePair,
        fields: &HamiltonianFields,
        q: RegularizedKernel,
        grid: &Grid,
    ) -> Result<Self> {
        fields.h_uu.expect_on(grid, Placement::Midpoints, "H_uu")?;
        if q.grid() != grid {
            return Err(Error::GridMismatch("response kernel built on another grid".into()));
        }
        pair.check(grid)?;
        let instants: Vec<(usize, f64)> = snap_instants(problem, grid)
            .iter()
            .zip(&problem.derivatives().h)
            .map(|(s, h)| {
                let y = pair.y.values()[s.node_index];
                (s.node_index, h.d_yy.eval4(s.node_time, 0.0, y, 0.0))
            })
            .collect();
        let n = grid.cells();
        let response = if q.is_zero() {
            None
        } else {
            let mut m = DMatrix::zeros(4 * n + instants.len(), n);
            for k in 0..n {
                for g in 0..4 {
                    let (t, _) = gauss_point(grid, k, g);
                    for a in 0..=k {
                        m[(4 * k + g, a)] = q.cell_response(t, a);
                    }
                }
            }
            for (i, &(node, _)) in instants.iter().enumerate() {
                let t = grid.node(node);
                for a in 0..node {
                    m[(4 * n + i, a)] = q.cell_response(t, a);
                }
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "cell responses".into(),
                    location: "response matrix".into(),
                });
            }
            Some(m)
        };
        Ok(Self {
            grid: *grid,
            h_uu: fields.h_uu.values().to_vec(),
            h_yy: fields.h_yy.values().to_vec(),
            h_yu: fields.h_yu.values().to_vec(),
            q,
            instants,
            response,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &RegularizedKernel {
        &self.q
    }

    /// Per-row weights of `G^T D G`.
    fn row_weights(&self) -> Vec<f64> {
        let n = self.grid.cells();
        let mut d = Vec::with_capacity(4 * n + self.instants.len());
        for k in 0..n {
            for g in 0..4 {
                d.push(gauss_point(&self.grid, k, g).1 * self.h_yy[k]);
            }
        }
        d.extend(self.instants.iter().map(|&(_, hyy)| -hyy));
        d
    }

    /// `h^2 M`, symmetrized.
    fn m_scaled(&self) -> (DMatrix<f64>, f64) {
        let n = self.grid.cells();
        let d = self.row_weights();
        match &self.response {
            Some(g) if d.iter().any(|&w| w != 0.0) => {
                let mut dg = g.clone();
                for (mut row, w) in dg.row_iter_mut().zip(&d) {
                    row *= *w;
                }
                let mut m = g.tr_mul(&dg);
                let scale = 1.0 + m.amax();
                let asymmetry = (&m - m.transpose()).amax() / scale;
                assert!(asymmetry <= 1e-12, "M asymmetry {asymmetry:e}");
                let sym = (&m + m.transpose()) * 0.5;
                m.copy_from(&sym);
                (m, asymmetry)
            }
            _ => (DMatrix::zeros(n, n), 0.0),
        }
    }

    pub fn m_kernel(&self) -> MKernel {
        let (m, asymmetry) = self.m_scaled();
        let h = self.grid.step();
        MKernel {
            values: m / (h * h),
            asymmetry,
        }
    }

    /// `C[k][a] = H_yu(tau_k) ∫_{cell k} G(t, a) dt`
    fn cross(&self) -> Option<DMatrix<f64>> {
        let g = self.response.as_ref()?;
        if self.h_yu.iter().all(|&v| v == 0.0) {
            return None;
        }
        let n = self.grid.cells();
        let mut c = DMatrix::zeros(n, n);
        for k in 0..n {
            if self.h_yu[k] == 0.0 {
                continue;
            }
            for gi in 0..4 {
                let w = gauss_point(&self.grid, k, gi).1 * self.h_yu[k];
                for a in 0..=k {
                    c[(k, a)] += w * g[(4 * k + gi, a)];
                }
            }
        }
        Some(c)
    }

    /// Symmetric `K` with `vᵀKv = QF[v]` for midpoint directions.
    pub fn k_matrix(&self) -> Result<DMatrix<f64>> {
        let h = self.grid.step();
        let (mut k, _) = self.m_scaled();
        for (i, huu) in self.h_uu.iter().enumerate() {
            k[(i, i)] += h * huu;
        }
        if let Some(c) = self.cross() {
            k += &c;
            k += c.transpose();
        }
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "second-variation matrix".into(),
                location: "K".into(),
            });
        }
        Ok(k)
    }

    /// `QF[v]` evaluated directly from `Y1 = ∫ Q v` at the quadrature points,
    /// without forming `M` or `K`.
    pub fn functional(&self, v: &Trajectory) -> Result<f64> {
        v.expect_on(&self.grid, Placement::Midpoints, "direction")?;
        let h = self.grid.step();
        let vv = v.values();
        let mut total: f64 = self.h_uu.iter().zip(vv).map(|(a, b)| h * a * b * b).sum();
        if self.q.is_zero() {
            return Ok(total);
        }
        for k in 0..self.grid.cells() {
            for g in 0..4 {
                let (t, w) = gauss_point(&self.grid, k, g);
                let y1 = self.q.apply_cells(t, vv);
                total += w * (self.h_yy[k] * y1 * y1 + 2.0 * vv[k] * self.h_yu[k] * y1);
            }
        }
        for &(node, hyy) in &self.instants {
            let y1 = self.q.apply_cells(self.grid.node(node), vv);
            total -= hyy * y1 * y1;
        }
        Ok(total)
    }
}

/// Builds the cell-averaged kernel
/// `M(tau, s) = ∫_{max(tau,s)}^T Q(t,s) H_yy(t) Q(t,tau) dt - Σ_i Q(t_i,s) h^i_yy Q(t_i,tau)`.
pub fn assemble_m_kernel(
    problem: &ProblemSpec,
    pair: &ReferencePair,
    fields: &HamiltonianFields,
    q: &RegularizedKernel,
    grid: &Grid,
) -> Result<MKernel> {
    Ok(SecondVariation::new(problem, pair, fields, q.clone(), grid)?.m_kernel())
}

/// `QF[v] = h Σ H_uu v² + h² vᵀMv + 2 ∫ v(t) H_yu(t) ∫_0^t Q(t,s) v(s) ds dt`.
pub fn quadratic_form(
    fields: &HamiltonianFields,
    m: &MKernel,
    q: &RegularizedKernel,
    v: &Trajectory,
    grid: &Grid,
) -> Result<f64> {
    v.expect_on(grid, Placement::Midpoints, "direction")?;
    fields.h_uu.expect_on(grid, Placement::Midpoints, "H_uu")?;
    let n = grid.cells();
    if m.values.nrows() != n || q.grid() != grid {
        return Err(Error::GridMismatch("kernel sizes do not match the grid".into()));
    }
    let h = grid.step();
    let vv = v.values();
    let mut total: f64 = fields
        .h_uu
        .values()
        .iter()
        .zip(vv)
        .map(|(a, b)| h * a * b * b)
        .sum();
    let vec = nalgebra::DVector::from_column_slice(vv);
    total += h * h * vec.dot(&(&m.values * &vec));
    if !q.is_zero() {
        let hyu = fields.h_yu.values();
        for k in 0..n {
            if hyu[k] == 0.0 || vv[k] == 0.0 {
                continue;
            }
            for g in 0..4 {
                let (t, w) = gauss_point(grid, k, g);
                total += 2.0 * w * vv[k] * hyu[k] * q.apply_cells(t, vv);
            }
        }
    }
    Ok(total)
}
