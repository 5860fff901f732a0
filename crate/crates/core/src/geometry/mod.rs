//! Radial graphs over S^2 on an equiangular latitude-longitude grid.
//!
//! Colatitudes sit at cell centres `theta_i = (i + 1/2) pi / n_theta`, so no
//! node lies on a pole. Stencils that reach past a pole read the row on the
//! other side of it, shifted by half a turn in longitude.

mod curvature;
mod snapshot;

pub use curvature::{
    area_and_integrals, compute_curvature, differentiate, node_geometry, node_shape,
    CurvatureField, NodeDerivatives, NodeGeometry, NodeShape, SurfaceIntegrals, UMBILIC_TOL,
};
pub(crate) use curvature::{row_flow, RowScratch};
pub(crate) use snapshot::write_grid;
pub use snapshot::{read_snapshot, write_snapshot};

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{FlowError, Result};

/// Latitude-longitude discretization of the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalGrid {
    n_theta: usize,
    n_phi: usize,
    dtheta: f64,
    dphi: f64,
    theta: Vec<f64>,
    sin_theta: Vec<f64>,
    cos_theta: Vec<f64>,
    phi: Vec<f64>,
    row_weight: Vec<f64>,
}

impl SphericalGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 4 || !n_phi.is_multiple_of(2) {
            return Err(FlowError::InvalidParameter(format!(
                "grid needs n_theta >= 2 and an even n_phi >= 4 (got {n_theta} x {n_phi})"
            )));
        }
        let dtheta = PI / n_theta as f64;
        let dphi = 2.0 * PI / n_phi as f64;
        let theta: Vec<f64> = (0..n_theta).map(|i| (i as f64 + 0.5) * dtheta).collect();
        let sin_theta: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        let cos_theta = theta.iter().map(|t| t.cos()).collect();
        let phi = (0..n_phi).map(|j| j as f64 * dphi).collect();
        // exact area of each cell, so the weights integrate constants exactly
        let half = (0.5 * dtheta).sin();
        let row_weight = sin_theta.iter().map(|s| 2.0 * s * half * dphi).collect();
        Ok(SphericalGrid {
            n_theta,
            n_phi,
            dtheta,
            dphi,
            theta,
            sin_theta,
            cos_theta,
            phi,
            row_weight,
        })
    }

    pub fn shared(n_theta: usize, n_phi: usize) -> Result<Arc<Self>> {
        Self::new(n_theta, n_phi).map(Arc::new)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn dphi(&self) -> f64 {
        self.dphi
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn sin_theta(&self, i: usize) -> f64 {
        self.sin_theta[i]
    }

    pub fn cos_theta(&self, i: usize) -> f64 {
        self.cos_theta[i]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    /// Quadrature weight of a node in row `i` (area of its cell on S^2).
    #[inline]
    pub fn row_weight(&self, i: usize) -> f64 {
        self.row_weight[i]
    }

    /// Per-node quadrature weights in storage order.
    pub fn weights(&self) -> Vec<f64> {
        self.row_weight
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w, self.n_phi))
            .collect()
    }

    /// Samples `f(theta, phi)` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &t in &self.theta {
            for &p in &self.phi {
                out.push(f(t, p));
            }
        }
        out
    }

    /// 3x3 neighbourhood of node `(i, j)`, indexed `[di + 1][dj + 1]`, with
    /// ghost rows taken across the poles.
    #[inline]
    pub(crate) fn stencil(&self, values: &[f64], i: usize, j: usize) -> [[f64; 3]; 3] {
        let n = self.n_phi;
        let jm = if j == 0 { n - 1 } else { j - 1 };
        let jp = if j + 1 == n { 0 } else { j + 1 };
        let wrap = |k: usize| if k >= n { k - n } else { k };
        let row = |r: usize, shift: usize| -> [f64; 3] {
            let base = r * n;
            [
                values[base + wrap(jm + shift)],
                values[base + wrap(j + shift)],
                values[base + wrap(jp + shift)],
            ]
        };
        let half = n / 2;
        let below = if i == 0 { row(0, half) } else { row(i - 1, 0) };
        let above = if i + 1 == self.n_theta {
            row(i, half)
        } else {
            row(i + 1, 0)
        };
        [below, row(i, 0), above]
    }
}

/// A star-shaped surface `{(u(theta), theta)}` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceState {
    grid: Arc<SphericalGrid>,
    u: Vec<f64>,
    /// Flow time.
    pub t: f64,
}

impl SurfaceState {
    pub fn new(grid: Arc<SphericalGrid>, u: Vec<f64>, t: f64) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(FlowError::InvalidParameter(format!(
                "expected {} radial values, got {}",
                grid.len(),
                u.len()
            )));
        }
        if let Some(bad) = u.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(FlowError::InvalidParameter(format!(
                "radial values must be positive and finite (found {bad})"
            )));
        }
        Ok(SurfaceState { grid, u, t })
    }

    /// The geodesic sphere `u == radius`.
    pub fn sphere(grid: Arc<SphericalGrid>, radius: f64) -> Result<Self> {
        let u = vec![radius; grid.len()];
        Self::new(grid, u, 0.0)
    }

    pub fn from_fn(grid: Arc<SphericalGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let u = grid.sample(f);
        Self::new(grid, u, 0.0)
    }

    pub fn grid(&self) -> &SphericalGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<SphericalGrid> {
        Arc::clone(&self.grid)
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub(crate) fn u_mut(&mut self) -> &mut [f64] {
        &mut self.u
    }

    pub fn min_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Pairwise summation in index order; the result does not depend on how a
/// caller might split the work.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_to_four_pi() {
        for (nt, np) in [(4, 8), (16, 32), (64, 128), (33, 66)] {
            let g = SphericalGrid::new(nt, np).unwrap();
            let total = pairwise_sum(&g.weights());
            assert!(
                (total - 4.0 * PI).abs() / (4.0 * PI) < 1e-12,
                "{nt}x{np}: {total}"
            );
        }
    }

    #[test]
    fn grid_rejects_odd_longitudes() {
        assert!(SphericalGrid::new(8, 15).is_err());
        assert!(SphericalGrid::new(1, 16).is_err());
    }

    #[test]
    fn stencil_wraps_across_poles() {
        let g = SphericalGrid::new(4, 8).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|k| k as f64).collect();
        let s = g.stencil(&vals, 0, 1);
        // ghost row below row 0 is row 0 rotated by pi
        assert_eq!(s[0], [4.0, 5.0, 6.0]);
        assert_eq!(s[1], [0.0, 1.0, 2.0]);
        assert_eq!(s[2], [8.0, 9.0, 10.0]);
        let s = g.stencil(&vals, 3, 7);
        assert_eq!(s[2], [26.0, 27.0, 28.0]);
        assert_eq!(s[1], [30.0, 31.0, 24.0]);
    }

    #[test]
    fn state_validation() {
        let g = SphericalGrid::shared(4, 8).unwrap();
        assert!(SurfaceState::new(g.clone(), vec![1.0; 31], 0.0).is_err());
        let mut u = vec![1.0; 32];
        u[3] = -1.0;
        assert!(SurfaceState::new(g.clone(), u, 0.0).is_err());
        let s = SurfaceState::from_fn(g, |t, _| 2.0 + t.cos()).unwrap();
        assert!(s.min_u() > 1.0 && s.max_u() < 3.0);
    }
}
