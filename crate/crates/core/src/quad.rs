//! Uniform grids and product-integration weights for the kernel
//! `(t - s)^(alpha - 1)`.
//!
//! On a uniform grid every weight depends only on the distance between the
//! evaluation point and the cell, so the tables below are stored as vectors
//! indexed by that distance.

use crate::{Error, Result};

/// Uniform grid on `[0, T]` with `N` cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    horizon: f64,
    cells: usize,
}

impl Grid {
    pub fn new(horizon: f64, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::GridTooSmall(cells));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidHorizon(horizon));
        }
        Ok(Self { horizon, cells })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of cells `N`; there are `N + 1` nodes.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.cells as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.cells {
            self.horizon
        } else {
            k as f64 * self.step()
        }
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells).map(|k| self.node(k)).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.cells).map(|k| self.midpoint(k)).collect()
    }

    /// Index of the node closest to `t` and the distance to it.
    pub fn nearest_node(&self, t: f64) -> (usize, f64) {
        let k = (t / self.step()).round().clamp(0.0, self.cells as f64) as usize;
        (k, (t - self.node(k)).abs())
    }
}

pub fn make_grid(horizon: f64, cells: usize) -> Result<Grid> {
    Grid::new(horizon, cells)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// `((d + 1)^alpha - d^alpha) / alpha`, scaled by `scale^alpha`.
fn power_increments(alpha: f64, scale: f64, len: usize, offset: f64) -> Vec<f64> {
    let sa = scale.powf(alpha);
    let mut prev = offset.powf(alpha);
    (0..len)
        .map(|d| {
            let next = (d as f64 + 1.0 + offset).powf(alpha);
            let w = sa * (next - prev) / alpha;
            prev = next;
            w
        })
        .collect()
}

/// Product-rectangle weights
/// `w[k][j] = ((t_k - t_j)^alpha - (t_k - t_{j+1})^alpha) / alpha`, `j < k`.
#[derive(Clone, Debug)]
pub struct SingularWeights {
    alpha: f64,
    grid: Grid,
    by_distance: Vec<f64>,
}

impl SingularWeights {
    pub fn new(alpha: f64, grid: Grid) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            grid,
            by_distance: power_increments(alpha, grid.step(), grid.cells(), 0.0),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Weight of cell `j` seen from node `k`; zero unless `j < k`.
    #[inline]
    pub fn weight(&self, k: usize, j: usize) -> f64 {
        if j < k {
            self.by_distance[k - j - 1]
        } else {
            0.0
        }
    }

    /// Right-sided weight: `∫_{t_j}^{t_{j+1}} (s - t_k)^(alpha-1) ds` for `j >= k`.
    #[inline]
    pub fn mirrored(&self, k: usize, j: usize) -> f64 {
        if j >= k && j < self.grid.cells() {
            self.by_distance[j - k]
        } else {
            0.0
        }
    }

    /// Weight by cell distance `d = k - j - 1`.
    #[inline]
    pub fn by_distance(&self, d: usize) -> f64 {
        self.by_distance[d]
    }

    pub fn row_sum(&self, k: usize) -> f64 {
        self.by_distance[..k].iter().sum()
    }

    /// `Σ_{j<k} w[k][j] values[j]`, the left-endpoint product rule for
    /// `∫_0^{t_k} values(s) (t_k - s)^(alpha-1) ds`.
    pub fn singular_integral(&self, values: &[f64], k: usize) -> Result<f64> {
        if k > self.grid.cells() {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.grid.cells(),
            });
        }
        if values.len() < k {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: values.len(),
            });
        }
        Ok((0..k).map(|j| self.weight(k, j) * values[j]).sum())
    }
}

pub fn singular_weights(alpha: f64, grid: Grid) -> Result<SingularWeights> {
    SingularWeights::new(alpha, grid)
}

/// Right-sided weights seen from the midpoint `tau_k`:
/// `v[k][k] = ∫_{tau_k}^{t_{k+1}}` and `v[k][j] = ∫_{t_j}^{t_{j+1}}` of
/// `(s - tau_k)^(alpha-1)` for `j > k`.
#[derive(Clone, Debug)]
pub struct MidpointMirroredWeights {
    grid: Grid,
    diagonal: f64,
    // entry d is the weight of cell k + 1 + d
    by_distance: Vec<f64>,
}

impl MidpointMirroredWeights {
    pub fn new(alpha: f64, grid: Grid) -> Result<Self> {
        check_alpha(alpha)?;
        let h = grid.step();
        Ok(Self {
            grid,
            diagonal: (0.5 * h).powf(alpha) / alpha,
            by_distance: power_increments(alpha, h, grid.cells().saturating_sub(1), 0.5),
        })
    }

    #[inline]
    pub fn weight(&self, k: usize, j: usize) -> f64 {
        if j == k {
            self.diagonal
        } else if j > k && j < self.grid.cells() {
            self.by_distance[j - k - 1]
        } else {
            0.0
        }
    }

    pub fn row_sum(&self, k: usize) -> f64 {
        (k..self.grid.cells()).map(|j| self.weight(k, j)).sum()
    }
}

/// Product-trapezoid weights: the kernel integrated exactly against the
/// linear interpolant of the data on each cell.
#[derive(Clone, Debug)]
pub struct ProductTrapezoidWeights {
    /// weight of the cell's left node, by cell distance `m = k - j` (index m-1)
    left: Vec<f64>,
    right: Vec<f64>,
}

impl ProductTrapezoidWeights {
    pub fn new(alpha: f64, grid: Grid) -> Result<Self> {
        check_alpha(alpha)?;
        let h = grid.step();
        let n = grid.cells();
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        for m in 1..=n {
            let (m1, m0) = (m as f64, m as f64 - 1.0);
            // x = t_k - s ranges over [(m-1)h, mh] on the cell
            let i0 = h.powf(alpha) * (m1.powf(alpha) - m0.powf(alpha)) / alpha;
            let i1 = h.powf(alpha + 1.0) * (m1.powf(alpha + 1.0) - m0.powf(alpha + 1.0))
                / (alpha + 1.0);
            // the right node's hat function is (s - t_j)/h = (m h - x)/h
            let r = (m1 * h * i0 - i1) / h;
            left.push(i0 - r);
            right.push(r);
        }
        Ok(Self { left, right })
    }

    /// Weights `(left, right)` for cell `j` seen from node `k`, `j < k`.
    #[inline]
    pub fn cell(&self, k: usize, j: usize) -> (f64, f64) {
        let m = k - j;
        (self.left[m - 1], self.right[m - 1])
    }
}

/// Tables for integrating products of power singularities on half cells of
/// width `h/2`, indexed by the distance `d` (in half cells) between the
/// singular point and the near edge of the half cell.
#[derive(Clone, Debug)]
pub struct HalfCellTable {
    /// `∫` of `x^(alpha-1)` over `[d, d+1] * h/2`
    exact: Vec<f64>,
    /// `x^(alpha-1)` at `x = (d + 1/2) h/2`
    sample: Vec<f64>,
}

impl HalfCellTable {
    pub fn new(alpha: f64, grid: Grid) -> Result<Self> {
        check_alpha(alpha)?;
        let hh = 0.5 * grid.step();
        let len = 2 * grid.cells() + 2;
        Ok(Self {
            exact: power_increments(alpha, hh, len, 0.0),
            sample: (0..len)
                .map(|d| ((d as f64 + 0.5) * hh).powf(alpha - 1.0))
                .collect(),
        })
    }

    #[inline]
    pub fn exact(&self, d: usize) -> f64 {
        self.exact[d]
    }

    #[inline]
    pub fn sample(&self, d: usize) -> f64 {
        self.sample[d]
    }

    /// Approximates `∫ (b - x)^(alpha-1) (x - a)^(alpha-1) dx` over one half
    /// cell, where the half cell starts `from_a` half cells after `a` and ends
    /// `to_b` half cells before `b`. The factor with the nearer singularity
    /// is integrated exactly and the other is sampled at the half midpoint.
    #[inline]
    pub fn doubly_singular(&self, from_a: usize, to_b: usize) -> f64 {
        if from_a <= to_b {
            self.exact[from_a] * self.sample[to_b]
        } else {
            self.exact[to_b] * self.sample[from_a]
        }
    }
}

/// Four-point Gauss–Legendre rule on `[0, 1]`.
pub const GAUSS4_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_9,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
pub const GAUSS4_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];
