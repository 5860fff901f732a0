//! Extrinsic geometry of a radial graph.
//!
//! All tensors are expressed in the frame `e1 = d_theta`,
//! `e2 = d_phi / sin(theta)`, which is orthonormal for the round metric, so
//! raising indices with `sigma` is the identity. With `phi(u)` the
//! antiderivative of `1/s(u)`,
//!
//! ```text
//! phi_i   = u_i / s
//! phi_ij  = u_ij / s - s' u_i u_j / s^2          (round-metric Hessian)
//! h^i_j   = (s' delta^i_j - (delta^ik - v^-2 phi^i phi^k) phi_kj) / (v s)
//! ```
//!
//! The matrix `M = I - v^-2 p p^T` (with `p = D phi`) has eigenvalues `1`
//! and `v^-2`, so `M^(1/2) = I - p p^T / (v (v + 1))` and the principal
//! curvatures come from the symmetric matrix `M^(1/2) Phi M^(1/2)`.

use super::{pairwise_sum, SphericalGrid, SurfaceState};
use crate::error::{FlowError, Result};
use crate::spaceform::SpaceForm;
use crate::speed::{CurvatureSpeed, FlowExponent, SpeedFunction};

/// Principal-curvature gaps below this are treated as exactly umbilic.
pub const UMBILIC_TOL: f64 = 1e-12;

/// Gradient and round-metric Hessian of `u` in the orthonormal frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NodeDerivatives {
    /// `(du/dtheta, du/dphi / sin theta)`.
    pub grad: [f64; 2],
    /// `(D^2u(e1,e1), D^2u(e1,e2), D^2u(e2,e2))`.
    pub hessian: [f64; 3],
}

impl NodeDerivatives {
    #[inline]
    fn at(grid: &SphericalGrid, u: &[f64], i: usize, j: usize) -> Self {
        RowConstants::new(grid, i).derivatives(grid.stencil(u, i, j))
    }
}

/// Difference weights shared by every node of a latitude row.
struct RowConstants {
    sin: f64,
    inv_sin: f64,
    cot: f64,
    half_inv_dt: f64,
    half_inv_dp: f64,
    inv_dt2: f64,
    inv_dp2: f64,
    quarter_inv_dtdp: f64,
}

impl RowConstants {
    #[inline]
    fn new(grid: &SphericalGrid, i: usize) -> Self {
        let dt = grid.dtheta();
        let dp = grid.dphi();
        let sin = grid.sin_theta(i);
        RowConstants {
            sin,
            inv_sin: 1.0 / sin,
            cot: grid.cos_theta(i) / sin,
            half_inv_dt: 0.5 / dt,
            half_inv_dp: 0.5 / dp,
            inv_dt2: 1.0 / (dt * dt),
            inv_dp2: 1.0 / (dp * dp),
            quarter_inv_dtdp: 0.25 / (dt * dp),
        }
    }

    #[inline(always)]
    fn derivatives(&self, s: [[f64; 3]; 3]) -> NodeDerivatives {
        let u_t = (s[2][1] - s[0][1]) * self.half_inv_dt;
        let u_p = (s[1][2] - s[1][0]) * self.half_inv_dp;
        let u_tt = (s[2][1] - 2.0 * s[1][1] + s[0][1]) * self.inv_dt2;
        let u_pp = (s[1][2] - 2.0 * s[1][1] + s[1][0]) * self.inv_dp2;
        let u_tp = (s[2][2] - s[2][0] - s[0][2] + s[0][0]) * self.quarter_inv_dtdp;
        let inv_sin = self.inv_sin;
        NodeDerivatives {
            grad: [u_t, u_p * inv_sin],
            hessian: [
                u_tt,
                (u_tp - self.cot * u_p) * inv_sin,
                u_pp * inv_sin * inv_sin + self.cot * u_t,
            ],
        }
    }
}

/// Centred second-order differences of `u` at every node.
pub fn differentiate(grid: &SphericalGrid, u: &[f64]) -> Vec<NodeDerivatives> {
    assert_eq!(u.len(), grid.len(), "field does not match the grid");
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.n_theta() {
        for j in 0..grid.n_phi() {
            out.push(NodeDerivatives::at(grid, u, i, j));
        }
    }
    out
}

/// Geometry of the surface at a single node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NodeGeometry {
    pub u: f64,
    /// `s_k(u)`.
    pub warp: f64,
    /// `s_k'(u)`.
    pub warp_prime: f64,
    /// Induced metric in `(theta, phi)` coordinates: `(g_tt, g_tp, g_pp)`.
    pub metric: [f64; 3],
    /// `sqrt(1 + s^-2 |Du|^2)`.
    pub v: f64,
    /// Weingarten map `h^i_j` in `(theta, phi)` coordinates, `[i][j]`.
    pub weingarten: [[f64; 2]; 2],
    pub lambda1: f64,
    pub lambda2: f64,
    /// `(lambda2 - lambda1) / 2`, computed without cancellation against the
    /// umbilic part.
    pub half_gap: f64,
    pub speed: f64,
    pub speed_grad: (f64, f64),
    /// Support function `s_k(u) / v`.
    pub chi: f64,
    /// `sqrt(det g) / sqrt(det sigma) = s^2 v`.
    pub area_density: f64,
    /// Gradient of `u` in the orthonormal frame.
    pub grad_u: [f64; 2],
}

impl NodeGeometry {
    pub fn mean_curvature(&self) -> f64 {
        self.lambda1 + self.lambda2
    }

    /// `|A°|^2 = (lambda1 - lambda2)^2 / 2`.
    pub fn traceless_norm_sq(&self) -> f64 {
        2.0 * self.half_gap * self.half_gap
    }

    /// `(lambda1 - lambda2)^2 / (lambda1 + lambda2)^2`.
    pub fn pinching(&self) -> f64 {
        let h = self.lambda1 + self.lambda2;
        4.0 * self.half_gap * self.half_gap / (h * h)
    }
}

struct Principal {
    r: f64,
    s: f64,
    ds: f64,
    d: NodeDerivatives,
    p: [f64; 2],
    phi: [f64; 3],
    v: f64,
    lambda1: f64,
    lambda2: f64,
    half_gap: f64,
}

#[inline(always)]
fn principal(sf: SpaceForm, r: f64, d: NodeDerivatives) -> Result<Principal> {
    if !sf.contains(r) {
        return Err(FlowError::RadialDomain {
            r,
            kappa: sf.kappa(),
        });
    }
    let (s, ds) = sf.warp_pair(r);
    Ok(principal_at(r, s, ds, d))
}

#[inline(always)]
fn principal_at(r: f64, s: f64, ds: f64, d: NodeDerivatives) -> Principal {
    let [a1, a2] = d.grad;
    let [h11, h12, h22] = d.hessian;

    let inv_s = 1.0 / s;
    let p1 = a1 * inv_s;
    let p2 = a2 * inv_s;
    let p_sq = p1 * p1 + p2 * p2;
    let v = (1.0 + p_sq).sqrt();

    // Phi = Hess(u)/s - s' Du Du^T / s^2
    let k = ds * inv_s * inv_s;
    let f11 = h11 * inv_s - k * a1 * a1;
    let f12 = h12 * inv_s - k * a1 * a2;
    let f22 = h22 * inv_s - k * a2 * a2;

    // S = R Phi R with R = I - c p p^T
    let c = 1.0 / (v * (v + 1.0));
    let r11 = 1.0 - c * p1 * p1;
    let r12 = -c * p1 * p2;
    let r22 = 1.0 - c * p2 * p2;
    let t11 = f11 * r11 + f12 * r12;
    let t12 = f11 * r12 + f12 * r22;
    let t21 = f12 * r11 + f22 * r12;
    let t22 = f12 * r12 + f22 * r22;
    let s11 = r11 * t11 + r12 * t21;
    let s12 = r11 * t12 + r12 * t22;
    let s22 = r12 * t12 + r22 * t22;

    let scale = 1.0 / (v * s);
    let mean = 0.5 * (s11 + s22);
    let diff = 0.5 * (s11 - s22);
    let gap = (diff * diff + s12 * s12).sqrt() * scale;
    let half_gap = if 2.0 * gap < UMBILIC_TOL { 0.0 } else { gap };
    let centre = (ds - mean) * scale;
    Principal {
        r,
        s,
        ds,
        d,
        p: [p1, p2],
        phi: [f11, f12, f22],
        v,
        lambda1: centre - half_gap,
        lambda2: centre + half_gap,
        half_gap,
    }
}

/// Speed-independent shape data at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeShape {
    pub v: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub half_gap: f64,
}

/// Principal curvatures at node `(i, j)` without any cone requirement.
pub fn node_shape(
    sf: SpaceForm,
    grid: &SphericalGrid,
    u: &[f64],
    i: usize,
    j: usize,
) -> Result<NodeShape> {
    let p = principal(sf, u[grid.index(i, j)], NodeDerivatives::at(grid, u, i, j))?;
    Ok(NodeShape {
        v: p.v,
        lambda1: p.lambda1,
        lambda2: p.lambda2,
        half_gap: p.half_gap,
    })
}

/// Computes the geometry at node `(i, j)` of `u`.
#[inline]
pub fn node_geometry(
    sf: SpaceForm,
    speed: &SpeedFunction,
    grid: &SphericalGrid,
    u: &[f64],
    i: usize,
    j: usize,
) -> Result<NodeGeometry> {
    let Principal {
        r,
        s,
        ds,
        d,
        p: [p1, p2],
        phi: [f11, f12, f22],
        v,
        lambda1,
        lambda2,
        half_gap,
    } = principal(sf, u[grid.index(i, j)], NodeDerivatives::at(grid, u, i, j))?;
    let [a1, a2] = d.grad;

    let speed_value = speed.eval(lambda1, lambda2)?;
    let speed_grad = speed.gradient(lambda1, lambda2);

    // M Phi = Phi - p (p^T Phi) / v^2
    let q1 = p1 * f11 + p2 * f12;
    let q2 = p1 * f12 + p2 * f22;
    let inv_v2 = 1.0 / (v * v);
    let mp = [
        [f11 - p1 * q1 * inv_v2, f12 - p1 * q2 * inv_v2],
        [f12 - p2 * q1 * inv_v2, f22 - p2 * q2 * inv_v2],
    ];
    let scale = 1.0 / (v * s);
    let sin = grid.sin_theta(i);
    let h_on = [
        [(ds - mp[0][0]) * scale, -mp[0][1] * scale],
        [-mp[1][0] * scale, (ds - mp[1][1]) * scale],
    ];
    let weingarten = [
        [h_on[0][0], h_on[0][1] * sin],
        [h_on[1][0] / sin, h_on[1][1]],
    ];
    let u_p = a2 * sin;
    let metric = [a1 * a1 + s * s, a1 * u_p, u_p * u_p + s * s * sin * sin];

    Ok(NodeGeometry {
        u: r,
        warp: s,
        warp_prime: ds,
        metric,
        v,
        weingarten,
        lambda1,
        lambda2,
        half_gap,
        speed: speed_value,
        speed_grad,
        chi: s / v,
        area_density: s * s * v,
        grad_u: d.grad,
    })
}

/// Evaluates `v F^{-alpha}` along row `i` into `rates` and returns the
/// smallest `(s dl / v)^2 / (alpha F^{-alpha-1} (dF/dl1 + dF/dl2))` on the
/// row, where `dl = min(dtheta, sin(theta) dphi)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn row_flow(
    sf: SpaceForm,
    speed: &SpeedFunction,
    alpha: FlowExponent,
    grid: &SphericalGrid,
    u: &[f64],
    i: usize,
    rates: &mut [f64],
    scratch: &mut RowScratch,
) -> Result<f64> {
    let ok = match alpha.get() {
        1.0 => row_flow_speed(sf, speed, |f| 1.0 / f, grid, u, i, rates, scratch),
        0.5 => row_flow_speed(sf, speed, |f| 1.0 / f.sqrt(), grid, u, i, rates, scratch),
        a => row_flow_speed(sf, speed, |f| f.powf(-a), grid, u, i, rates, scratch),
    };
    match ok {
        Some(worst) => Ok(worst / alpha.get()),
        None => {
            // report the first offending node
            for j in 0..grid.n_phi() {
                node_geometry(sf, speed, grid, u, i, j)?;
            }
            Err(FlowError::NumericalBlowup(format!(
                "non-finite geometry on latitude row {i}"
            )))
        }
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn row_flow_speed(
    sf: SpaceForm,
    speed: &SpeedFunction,
    power: impl Fn(f64) -> f64 + Copy,
    grid: &SphericalGrid,
    u: &[f64],
    i: usize,
    rates: &mut [f64],
    scratch: &mut RowScratch,
) -> Option<f64> {
    let args = (grid, u, i, rates, scratch);
    match *speed {
        SpeedFunction::MeanCurvature => row_flow_sf(
            sf,
            |l1, l2| (l1 + l2, 2.0),
            |l1, l2| l1 + l2 > 0.0,
            power,
            args,
        ),
        SpeedFunction::PowerMean(-1) => row_flow_sf(
            sf,
            |l1, l2| {
                let h = l1 + l2;
                let g = 4.0 / (h * h);
                (4.0 * l1 * l2 / h, g * (l1 * l1 + l2 * l2))
            },
            |l1, l2| l1 > 0.0 && l2 > 0.0,
            power,
            args,
        ),
        SpeedFunction::PowerMean(2) => row_flow_sf(
            sf,
            |l1, l2| {
                let f = (2.0 * (l1 * l1 + l2 * l2)).sqrt();
                (f, 2.0 * (l1 + l2) / f)
            },
            |l1, l2| l1 > 0.0 && l2 > 0.0,
            power,
            args,
        ),
        SpeedFunction::GeometricMean => row_flow_sf(
            sf,
            |l1, l2| {
                let f = 2.0 * (l1 * l2).sqrt();
                (f, 0.5 * f * (1.0 / l1 + 1.0 / l2))
            },
            |l1, l2| l1 > 0.0 && l2 > 0.0,
            power,
            args,
        ),
        other => row_flow_sf(
            sf,
            |l1, l2| {
                let (g1, g2) = other.gradient(l1, l2);
                (other.value(l1, l2), g1 + g2)
            },
            |l1, l2| other.in_cone(l1, l2),
            power,
            args,
        ),
    }
}

type RowArgs<'a> = (
    &'a SphericalGrid,
    &'a [f64],
    usize,
    &'a mut [f64],
    &'a mut RowScratch,
);

/// Reusable buffers for [`row_flow`]: the three stencil rows padded by one
/// wrapped value on each side, and per-node outputs.
#[derive(Clone, Debug, Default)]
pub(crate) struct RowScratch {
    below: Vec<f64>,
    here: Vec<f64>,
    above: Vec<f64>,
    limits: Vec<f64>,
    flags: Vec<u8>,
}

impl RowScratch {
    fn load(&mut self, grid: &SphericalGrid, u: &[f64], i: usize) {
        let n = grid.n_phi();
        let fill = |dst: &mut Vec<f64>, r: usize, shift: usize| {
            let src = &u[r * n..(r + 1) * n];
            dst.clear();
            dst.push(src[(n - 1 + shift) % n]);
            dst.extend_from_slice(&src[shift..]);
            dst.extend_from_slice(&src[..shift]);
            dst.push(src[shift]);
        };
        let half = n / 2;
        if i == 0 {
            fill(&mut self.below, 0, half);
        } else {
            fill(&mut self.below, i - 1, 0);
        }
        fill(&mut self.here, i, 0);
        if i + 1 == grid.n_theta() {
            fill(&mut self.above, i, half);
        } else {
            fill(&mut self.above, i + 1, 0);
        }
        self.limits.resize(n, 0.0);
        self.flags.resize(n, 0);
    }
}

#[inline(always)]
fn row_flow_sf(
    sf: SpaceForm,
    speed: impl Fn(f64, f64) -> (f64, f64) + Copy,
    in_cone: impl Fn(f64, f64) -> bool + Copy,
    power: impl Fn(f64) -> f64 + Copy,
    args: RowArgs<'_>,
) -> Option<f64> {
    match sf {
        SpaceForm::Euclidean => row_kernel(|r| (r, 1.0), |r| r > 0.0, speed, in_cone, power, args),
        SpaceForm::Spherical => row_kernel(
            |r: f64| r.sin_cos(),
            |r| r > 0.0 && r < std::f64::consts::PI,
            speed,
            in_cone,
            power,
            args,
        ),
        SpaceForm::Hyperbolic => row_kernel(
            |r| SpaceForm::Hyperbolic.warp_pair(r),
            |r| r > 0.0 && r < f64::INFINITY,
            speed,
            in_cone,
            power,
            args,
        ),
    }
}

/// The branch-free inner loop; `None` flags a node outside the radial
/// domain or the cone, or a non-finite value.
#[inline(always)]
fn row_kernel(
    warp: impl Fn(f64) -> (f64, f64),
    in_domain: impl Fn(f64) -> bool,
    speed: impl Fn(f64, f64) -> (f64, f64),
    in_cone: impl Fn(f64, f64) -> bool,
    power: impl Fn(f64) -> f64,
    (grid, u, i, rates, scratch): RowArgs<'_>,
) -> Option<f64> {
    let n = grid.n_phi();
    scratch.load(grid, u, i);
    let RowScratch {
        below,
        here,
        above,
        limits,
        flags,
    } = scratch;
    let (b0, b1, b2) = (&below[..n], &below[1..n + 1], &below[2..n + 2]);
    let (h0, h1, h2) = (&here[..n], &here[1..n + 1], &here[2..n + 2]);
    let (a0, a1, a2) = (&above[..n], &above[1..n + 1], &above[2..n + 2]);
    let c = RowConstants::new(grid, i);
    let dl = grid.dtheta().min(c.sin * grid.dphi());
    let rates = &mut rates[..n];
    let limits = &mut limits[..n];
    let flags = &mut flags[..n];
    for j in 0..n {
        let d = c.derivatives([
            [b0[j], b1[j], b2[j]],
            [h0[j], h1[j], h2[j]],
            [a0[j], a1[j], a2[j]],
        ]);
        let r = h1[j];
        let (s, ds) = warp(r);
        let p = principal_at(r, s, ds, d);
        let (f, grad_sum) = speed(p.lambda1, p.lambda2);
        let fpow = power(f);
        let rate = p.v * fpow;
        rates[j] = rate;
        let len = s * dl / p.v;
        limits[j] = len * len * f / (fpow * grad_sum);
        flags[j] = (in_domain(r) & in_cone(p.lambda1, p.lambda2)) as u8;
    }
    let ok = flags.iter().all(|&f| f == 1)
        && rates.iter().all(|r| r.is_finite())
        && limits.iter().all(|l| l.is_finite());
    ok.then(|| limits.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Per-node geometry of a whole surface.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureField {
    pub nodes: Vec<NodeGeometry>,
}

impl CurvatureField {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodeGeometry> {
        self.nodes.iter()
    }

    pub fn map(&self, f: impl Fn(&NodeGeometry) -> f64) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }

    pub fn max_of(&self, f: impl Fn(&NodeGeometry) -> f64) -> f64 {
        self.nodes.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_of(&self, f: impl Fn(&NodeGeometry) -> f64) -> f64 {
        self.nodes.iter().map(f).fold(f64::INFINITY, f64::min)
    }
}

/// Geometry at every node of `state`.
pub fn compute_curvature(
    sf: SpaceForm,
    speed: &SpeedFunction,
    state: &SurfaceState,
) -> Result<CurvatureField> {
    let grid = state.grid();
    let u = state.u();
    let mut nodes = Vec::with_capacity(grid.len());
    for i in 0..grid.n_theta() {
        for j in 0..grid.n_phi() {
            nodes.push(node_geometry(sf, speed, grid, u, i, j)?);
        }
    }
    Ok(CurvatureField { nodes })
}

/// Area, `int |A°|^2 dmu` and `int F^(1-alpha) dmu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceIntegrals {
    pub area: f64,
    pub traceless_sq: f64,
    pub speed_power: f64,
}

pub fn area_and_integrals(
    state: &SurfaceState,
    field: &CurvatureField,
    alpha: FlowExponent,
) -> SurfaceIntegrals {
    let grid = state.grid();
    let n_phi = grid.n_phi();
    let one_minus = 1.0 - alpha.get();
    let mut dmu = Vec::with_capacity(field.len());
    let mut asq = Vec::with_capacity(field.len());
    let mut fp = Vec::with_capacity(field.len());
    for (k, node) in field.iter().enumerate() {
        let w = node.area_density * grid.row_weight(k / n_phi);
        dmu.push(w);
        asq.push(node.traceless_norm_sq() * w);
        fp.push(if one_minus == 0.0 {
            w
        } else {
            node.speed.powf(one_minus) * w
        });
    }
    SurfaceIntegrals {
        area: pairwise_sum(&dmu),
        traceless_sq: pairwise_sum(&asq),
        speed_power: pairwise_sum(&fp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SphericalGrid;
    use std::f64::consts::PI;

    const H: SpeedFunction = SpeedFunction::MeanCurvature;

    fn field(sf: SpaceForm, nt: usize, np: usize, f: impl Fn(f64, f64) -> f64) -> CurvatureField {
        let g = SphericalGrid::shared(nt, np).unwrap();
        let s = SurfaceState::from_fn(g, f).unwrap();
        compute_curvature(sf, &H, &s).unwrap()
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let g = SphericalGrid::new(8, 16).unwrap();
        for d in differentiate(&g, &vec![2.5; g.len()]) {
            assert_eq!(d.grad, [0.0, 0.0]);
            assert_eq!(d.hessian, [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn derivative_of_cos_theta() {
        let g = SphericalGrid::new(64, 128).unwrap();
        let u = g.sample(|t, _| t.cos());
        let d = differentiate(&g, &u);
        for i in 0..64 {
            let exact = -g.theta()[i].sin();
            for j in 0..128 {
                assert!((d[g.index(i, j)].grad[0] - exact).abs() < 1e-3);
            }
        }
    }

    fn hessian_error(n: usize) -> f64 {
        // u = cos^2 theta: Hess = (-2 cos 2t, 0, -2 cos^2 t)
        let g = SphericalGrid::new(n, 2 * n).unwrap();
        let u = g.sample(|t, _| t.cos().powi(2));
        let d = differentiate(&g, &u);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let t = g.theta()[i];
            let exact = [-2.0 * (2.0 * t).cos(), 0.0, -2.0 * t.cos().powi(2)];
            for j in 0..2 * n {
                let h = d[g.index(i, j)].hessian;
                for k in 0..3 {
                    err = err.max((h[k] - exact[k]).abs());
                }
            }
        }
        err
    }

    #[test]
    fn hessian_is_second_order() {
        let coarse = hessian_error(32);
        let fine = hessian_error(64);
        assert!(coarse / fine >= 3.6, "ratio {}", coarse / fine);
    }

    #[test]
    fn round_spheres() {
        let f = field(SpaceForm::Euclidean, 8, 16, |_, _| 2.0);
        for n in f.iter() {
            assert_eq!(n.lambda1, 0.5);
            assert_eq!(n.lambda2, 0.5);
            assert_eq!(n.v, 1.0);
            assert_eq!(n.chi, 2.0);
            assert_eq!(n.speed, 1.0);
        }
        let f = field(SpaceForm::Hyperbolic, 8, 16, |_, _| 1.0);
        let k = SpaceForm::Hyperbolic
            .geodesic_sphere_curvature(1.0)
            .unwrap();
        for n in f.iter() {
            assert!((n.lambda1 - 1.3130353).abs() < 1e-7);
            assert_eq!(n.lambda1, k);
            assert_eq!(n.lambda2, k);
            assert_eq!(n.weingarten, [[k, 0.0], [0.0, k]]);
        }
    }

    #[test]
    fn refinement_of_perturbed_sphere() {
        let u = |t: f64, _: f64| 1.0 + 0.05 * t.cos().powi(2);
        let coarse = field(SpaceForm::Euclidean, 64, 128, u);
        let fine = field(SpaceForm::Euclidean, 128, 256, u);
        // row i of the coarse grid lies between fine rows 2i and 2i+1
        for i in 0..64 {
            let c = &coarse.nodes[i * 128];
            let f0 = &fine.nodes[2 * i * 256];
            let f1 = &fine.nodes[(2 * i + 1) * 256];
            let l1 = 0.5 * (f0.lambda1 + f1.lambda1);
            let l2 = 0.5 * (f0.lambda2 + f1.lambda2);
            // interpolation error is itself O(h^2); compare loosely
            assert!((c.lambda1 - l1).abs() / l1 < 1e-3, "row {i}");
            assert!((c.lambda2 - l2).abs() / l2 < 1e-3, "row {i}");
        }
    }

    #[test]
    fn axisymmetric_outputs_are_longitude_independent() {
        let f = field(SpaceForm::Hyperbolic, 16, 32, |t, _| {
            2.0 + 0.2 * t.cos().powi(3)
        });
        for i in 0..16 {
            let first = f.nodes[i * 32];
            for j in 1..32 {
                let n = f.nodes[i * 32 + j];
                for (a, b) in [
                    (n.lambda1, first.lambda1),
                    (n.lambda2, first.lambda2),
                    (n.v, first.v),
                    (n.chi, first.chi),
                    (n.speed, first.speed),
                ] {
                    assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn longitude_rotation_permutes_outputs() {
        let g = SphericalGrid::shared(12, 24).unwrap();
        let f = |t: f64, p: f64| 1.5 + 0.1 * t.sin().powi(2) * (2.0 * p).cos() + 0.05 * t.cos();
        let shift = 5;
        let a = SurfaceState::from_fn(g.clone(), f).unwrap();
        let b = SurfaceState::from_fn(g.clone(), |t, p| f(t, p - shift as f64 * g.dphi())).unwrap();
        let fa = compute_curvature(SpaceForm::Euclidean, &H, &a).unwrap();
        let fb = compute_curvature(SpaceForm::Euclidean, &H, &b).unwrap();
        for i in 0..12 {
            for j in 0..24 {
                let na = fa.nodes[g.index(i, j)];
                let nb = fb.nodes[g.index(i, (j + shift) % 24)];
                assert!((na.lambda1 - nb.lambda1).abs() < 1e-12);
                assert!((na.lambda2 - nb.lambda2).abs() < 1e-12);
                assert!((na.chi - nb.chi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetrized_eigenvalues_match_weingarten_matrix() {
        let f = field(SpaceForm::Spherical, 16, 32, |t, p| {
            0.8 + 0.1 * t.sin() * p.cos() + 0.05 * t.cos().powi(2)
        });
        for n in f.iter() {
            let w = n.weingarten;
            let tr = w[0][0] + w[1][1];
            let det = w[0][0] * w[1][1] - w[0][1] * w[1][0];
            assert!((n.lambda1 + n.lambda2 - tr).abs() < 1e-10);
            assert!((n.lambda1 * n.lambda2 - det).abs() < 1e-10);
            assert!(n.lambda1 <= n.lambda2);
            assert!(n.v >= 1.0);
            assert!(n.chi > 0.0);
        }
    }

    #[test]
    fn pinching_bounds_hold_nodewise() {
        let g = SphericalGrid::shared(16, 32).unwrap();
        let s = SurfaceState::from_fn(g, |t, p| {
            1.0 + 0.1 * t.cos().powi(2) + 0.03 * t.sin().powi(2) * (2.0 * p).cos()
        })
        .unwrap();
        for speed in SpeedFunction::REGISTRY {
            let f = compute_curvature(SpaceForm::Euclidean, &speed, &s).unwrap();
            for n in f.iter() {
                let beta = n.lambda2 / n.lambda1;
                let half = n.speed / 2.0;
                let tol = 1e-9;
                assert!(n.speed / (2.0 * beta) <= n.lambda1 + tol);
                assert!(n.lambda1 <= half + tol);
                assert!(half <= n.lambda2 + tol);
                assert!(n.lambda2 <= beta * half + tol);
                let g = n.pinching();
                assert!((0.0..1.0).contains(&g));
            }
        }
    }

    #[test]
    fn cone_violation_propagates() {
        let g = SphericalGrid::shared(16, 32).unwrap();
        // strongly dented surface is not convex
        let s = SurfaceState::from_fn(g, |t, _| 1.0 + 0.6 * (4.0 * t).cos().powi(2)).unwrap();
        let err = compute_curvature(SpaceForm::Euclidean, &SpeedFunction::PowerMean(2), &s);
        assert!(matches!(err, Err(FlowError::ConeViolation { .. })));
        let s = SurfaceState::sphere(SphericalGrid::shared(4, 8).unwrap(), 3.5).unwrap();
        assert!(matches!(
            compute_curvature(SpaceForm::Spherical, &H, &s),
            Err(FlowError::RadialDomain { .. })
        ));
    }

    fn integrals(sf: SpaceForm, n: usize, f: impl Fn(f64, f64) -> f64) -> SurfaceIntegrals {
        let g = SphericalGrid::shared(n, 2 * n).unwrap();
        let s = SurfaceState::from_fn(g, f).unwrap();
        let field = compute_curvature(sf, &H, &s).unwrap();
        area_and_integrals(&s, &field, FlowExponent::new(1.0).unwrap())
    }

    #[test]
    fn sphere_areas() {
        let r = integrals(SpaceForm::Euclidean, 16, |_, _| 1.0);
        assert!((r.area - 4.0 * PI).abs() < 1e-6);
        assert_eq!(r.traceless_sq, 0.0);
        let r = integrals(SpaceForm::Hyperbolic, 16, |_, _| 1.0);
        assert!((r.area - 4.0 * PI * 1f64.sinh().powi(2)).abs() < 1e-6);
        assert!((r.area - 17.355387).abs() < 1e-5);
    }

    #[test]
    fn perturbed_area_converges() {
        let u = |t: f64, _: f64| 1.0 + 0.1 * t.cos().powi(2);
        let a = integrals(SpaceForm::Euclidean, 64, u).area;
        let b = integrals(SpaceForm::Euclidean, 128, u).area;
        assert!((a - b).abs() / b < 1e-4);
    }
}
