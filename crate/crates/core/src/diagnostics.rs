//! Scalar summaries of a flow: the pinching quantity `G`, pinching ratio,
//! speed and support-function bounds, the roundness functional `Q`,
//! Euclidean rescalings, decay-rate fits and evolution-identity residuals.

use std::io::{self, Write};

use crate::error::{FlowError, Result};
use crate::geometry::{
    area_and_integrals, compute_curvature, pairwise_sum, CurvatureField, SphericalGrid,
    SurfaceState,
};
use crate::reference::euclid_radius;
use crate::spaceform::SpaceForm;
use crate::speed::{FlowExponent, SpeedFunction};

/// `G = (l1 - l2)^2 / (l1 + l2)^2`.
pub fn pinching_quantity(lambda1: f64, lambda2: f64) -> f64 {
    let d = lambda1 - lambda2;
    let s = lambda1 + lambda2;
    d * d / (s * s)
}

/// Largest ratio `l2/l1` compatible with `sup G = g`: `(1 + sqrt g)/(1 - sqrt g)`.
pub fn pinching_ratio_from_g(g: f64) -> f64 {
    let r = g.sqrt();
    (1.0 + r) / (1.0 - r)
}

/// Fixed inputs shared by every diagnostics snapshot of one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsContext {
    pub space_form: SpaceForm,
    pub speed: SpeedFunction,
    pub alpha: FlowExponent,
    /// Radius of the comparison sphere used to rescale Euclidean runs.
    pub rescale_radius: Option<f64>,
}

impl DiagnosticsContext {
    /// Euclidean runs are rescaled by the sphere through
    /// `sqrt(min u0 * max u0)`.
    pub fn new(
        space_form: SpaceForm,
        speed: SpeedFunction,
        alpha: FlowExponent,
        initial: &SurfaceState,
    ) -> Self {
        let rescale_radius = (space_form == SpaceForm::Euclidean)
            .then(|| (initial.min_u() * initial.max_u()).sqrt());
        DiagnosticsContext {
            space_form,
            speed,
            alpha,
            rescale_radius,
        }
    }

    /// Rescaled time with `dtau/dt = rho(t, rbar)^(alpha - 1)`, in closed form.
    pub fn tau(&self, t: f64) -> Option<f64> {
        let rbar = self.rescale_radius?;
        let a = self.alpha.get();
        if a == 1.0 {
            return Some(t);
        }
        // rho^(1-a) = A t + B
        let slope = (1.0 - a) * 2f64.powf(-a);
        let b = rbar.powf(1.0 - a);
        Some(((slope * t + b) / b).ln() / slope)
    }

    pub fn rescale_factor(&self, t: f64) -> Option<f64> {
        self.rescale_radius.map(|r| euclid_radius(self.alpha, r, t))
    }
}

/// Ranges `(min, max)` of rescaled Euclidean quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaledRanges {
    pub u: (f64, f64),
    pub lambda: (f64, f64),
    pub speed: (f64, f64),
}

/// One time slice of scalar diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub tau: Option<f64>,
    pub max_g: f64,
    /// `sup l2/l1`; infinite once `l1 <= 0` somewhere.
    pub beta: f64,
    pub min_f: f64,
    pub max_f: f64,
    pub min_chi: f64,
    pub min_h: f64,
    pub max_h: f64,
    pub area: f64,
    pub int_asq: f64,
    /// `-|M| int |A°|^2`.
    pub q: f64,
    pub max_u: f64,
    pub min_u: f64,
    /// H^3 only: `max |l_i - 1|`.
    pub max_lam_dev: Option<f64>,
    /// H^3 only: `max (coth u - 1)`.
    pub max_coth_dev: Option<f64>,
    /// H^3 only: `max |H - 2|`.
    pub max_h_dev: Option<f64>,
    /// R^3 only.
    pub rescaled: Option<RescaledRanges>,
}

pub const CSV_HEADER: &str =
    "t,tau,max_G,beta,min_F,max_F,min_chi,area,int_Asq,Q,max_u,min_u,max_lam_dev,max_coth_dev,max_H_dev";

fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        [
            fmt12(self.t),
            fmt_opt(self.tau),
            fmt12(self.max_g),
            fmt12(self.beta),
            fmt12(self.min_f),
            fmt12(self.max_f),
            fmt12(self.min_chi),
            fmt12(self.area),
            fmt12(self.int_asq),
            fmt12(self.q),
            fmt12(self.max_u),
            fmt12(self.min_u),
            fmt_opt(self.max_lam_dev),
            fmt_opt(self.max_coth_dev),
            fmt_opt(self.max_h_dev),
        ]
        .join(",")
    }
}

pub fn write_csv<W: Write>(mut w: W, records: &[DiagnosticsRecord]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Diagnostics of a single surface.
pub fn snapshot_diagnostics(
    ctx: &DiagnosticsContext,
    state: &SurfaceState,
) -> Result<DiagnosticsRecord> {
    let field = compute_curvature(ctx.space_form, &ctx.speed, state)?;
    Ok(diagnostics_from_field(ctx, state, &field))
}

/// As [`snapshot_diagnostics`], reusing an already computed field.
pub fn diagnostics_from_field(
    ctx: &DiagnosticsContext,
    state: &SurfaceState,
    field: &CurvatureField,
) -> DiagnosticsRecord {
    let ints = area_and_integrals(state, field, ctx.alpha);
    let max_g = field.max_of(|n| n.pinching());
    let beta = field.max_of(|n| {
        if n.lambda1 > 0.0 {
            n.lambda2 / n.lambda1
        } else {
            f64::INFINITY
        }
    });
    let hyperbolic = ctx.space_form == SpaceForm::Hyperbolic;
    let rescaled = ctx.rescale_factor(state.t).map(|rho| RescaledRanges {
        u: (state.min_u() / rho, state.max_u() / rho),
        lambda: (
            rho * field.min_of(|n| n.lambda1),
            rho * field.max_of(|n| n.lambda2),
        ),
        speed: (
            rho * field.min_of(|n| n.speed),
            rho * field.max_of(|n| n.speed),
        ),
    });
    DiagnosticsRecord {
        t: state.t,
        tau: ctx.tau(state.t),
        max_g,
        beta,
        min_f: field.min_of(|n| n.speed),
        max_f: field.max_of(|n| n.speed),
        min_chi: field.min_of(|n| n.chi),
        min_h: field.min_of(|n| n.mean_curvature()),
        max_h: field.max_of(|n| n.mean_curvature()),
        area: ints.area,
        int_asq: ints.traceless_sq,
        q: -ints.area * ints.traceless_sq,
        max_u: state.max_u(),
        min_u: state.min_u(),
        max_lam_dev: hyperbolic
            .then(|| field.max_of(|n| (n.lambda1 - 1.0).abs().max((n.lambda2 - 1.0).abs()))),
        max_coth_dev: hyperbolic.then(|| field.max_of(|n| n.warp_prime / n.warp - 1.0)),
        max_h_dev: hyperbolic.then(|| field.max_of(|n| (n.mean_curvature() - 2.0).abs())),
        rescaled,
    }
}

/// Least-squares exponential rate of a positive series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Slope of `ln(value)` against `t`.
    pub rate: f64,
    pub intercept: f64,
    /// Coefficient of determination of the log-linear fit.
    pub goodness: f64,
    pub samples: usize,
}

/// Values below this are treated as having hit the numerical floor.
pub const FIT_FLOOR: f64 = 1e-13;
pub const FIT_MIN_SAMPLES: usize = 8;

/// Fits `ln(value) ~ rate * t + c` over the trailing `window` fraction of
/// the time span.
pub fn fit_decay_rate(series: &[(f64, f64)], window: f64) -> Result<DecayFit> {
    let Some(&(t_last, _)) = series.last() else {
        return Err(FlowError::InsufficientData {
            found: 0,
            needed: FIT_MIN_SAMPLES,
        });
    };
    let t_first = series[0].0;
    let start = t_last - window.clamp(0.0, 1.0) * (t_last - t_first);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, y)| *t >= start && y.is_finite() && *y >= FIT_FLOOR)
        .map(|&(t, y)| (t, y.ln()))
        .collect();
    if pts.len() < FIT_MIN_SAMPLES {
        return Err(FlowError::InsufficientData {
            found: pts.len(),
            needed: FIT_MIN_SAMPLES,
        });
    }
    let (rate, intercept, goodness) = linear_fit(&pts);
    Ok(DecayFit {
        rate,
        intercept,
        goodness,
        samples: pts.len(),
    })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, r^2)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (a, b, r2)
}

/// Finite-difference checks of the area and `Q` evolution identities
/// between two nearby snapshots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityResiduals {
    pub dt: f64,
    /// `(ln |M_next| - ln |M_prev|) / dt`.
    pub area_rate: f64,
    /// `int F^-alpha H dmu / |M|` on the earlier snapshot.
    pub area_rate_predicted: f64,
    pub area_residual: f64,
    /// Mean-curvature flows only: the `Q` identity.
    pub q: Option<QIdentity>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QIdentity {
    /// `(Q_next - Q_prev) / dt`.
    pub rate: f64,
    /// `|M| int H^(1-a)|A°|^2 - int H^(1-a) int |A°|^2`.
    pub rhs_without_gradient: f64,
    /// `a |M| int H^(-1-a) |grad H|^2`, the term left out above.
    pub gradient_budget: f64,
    /// `rate - rhs_without_gradient`; should be close to the budget.
    pub residual: f64,
    /// `rate - rhs_without_gradient - gradient_budget`.
    pub residual_full: f64,
}

/// `|grad w|^2` in the induced metric at every node, for a node field `w`.
pub fn induced_gradient_norm_sq(
    grid: &SphericalGrid,
    field: &CurvatureField,
    values: &[f64],
) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.n_theta() {
        let sin = grid.sin_theta(i);
        for j in 0..grid.n_phi() {
            let st = grid.stencil(values, i, j);
            let b1 = (st[2][1] - st[0][1]) / (2.0 * grid.dtheta());
            let b2 = (st[1][2] - st[1][0]) / (2.0 * grid.dphi() * sin);
            let n = &field.nodes[grid.index(i, j)];
            let [a1, a2] = n.grad_u;
            let s2 = n.warp * n.warp;
            let ab = a1 * b1 + a2 * b2;
            out.push((b1 * b1 + b2 * b2 - ab * ab / (s2 * n.v * n.v)) / s2);
        }
    }
    out
}

pub fn identity_residuals(
    ctx: &DiagnosticsContext,
    prev: &SurfaceState,
    next: &SurfaceState,
) -> Result<IdentityResiduals> {
    let dt = next.t - prev.t;
    if !(dt > 0.0) {
        return Err(FlowError::InvalidParameter(
            "snapshots must be in increasing time order".into(),
        ));
    }
    let grid = prev.grid();
    let n_phi = grid.n_phi();
    let a = ctx.alpha.get();
    let fp = compute_curvature(ctx.space_form, &ctx.speed, prev)?;
    let fn_ = compute_curvature(ctx.space_form, &ctx.speed, next)?;
    let ip = area_and_integrals(prev, &fp, ctx.alpha);
    let inx = area_and_integrals(next, &fn_, ctx.alpha);

    let weights: Vec<f64> = fp
        .iter()
        .enumerate()
        .map(|(k, n)| n.area_density * grid.row_weight(k / n_phi))
        .collect();
    let integrate = |f: &dyn Fn(usize) -> f64| -> f64 {
        let terms: Vec<f64> = (0..weights.len()).map(|k| f(k) * weights[k]).collect();
        pairwise_sum(&terms)
    };

    let growth = integrate(&|k| {
        let n = &fp.nodes[k];
        ctx.alpha.inverse_power(n.speed) * n.mean_curvature()
    });
    let area_rate = (inx.area.ln() - ip.area.ln()) / dt;
    let area_rate_predicted = growth / ip.area;

    let q = (ctx.speed == SpeedFunction::MeanCurvature).then(|| {
        let q_prev = -ip.area * ip.traceless_sq;
        let q_next = -inx.area * inx.traceless_sq;
        let rate = (q_next - q_prev) / dt;
        let h_pow_asq = integrate(&|k| {
            let n = &fp.nodes[k];
            n.mean_curvature().powf(1.0 - a) * n.traceless_norm_sq()
        });
        let rhs = ip.area * h_pow_asq - ip.speed_power * ip.traceless_sq;
        let h: Vec<f64> = fp.map(|n| n.mean_curvature());
        let grad_sq = induced_gradient_norm_sq(grid, &fp, &h);
        let budget = a * ip.area * integrate(&|k| h[k].powf(-1.0 - a) * grad_sq[k]);
        QIdentity {
            rate,
            rhs_without_gradient: rhs,
            gradient_budget: budget,
            residual: rate - rhs,
            residual_full: rate - rhs - budget,
        }
    });

    Ok(IdentityResiduals {
        dt,
        area_rate,
        area_rate_predicted,
        area_residual: (area_rate - area_rate_predicted).abs(),
        q,
    })
}

/// One sample of a rescaled Euclidean run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaledSample {
    pub t: f64,
    pub tau: f64,
    pub ranges: RescaledRanges,
    pub max_g: f64,
}

/// Rescales a Euclidean trajectory by `rho(t, rbar)`, with `tau` from the
/// closed-form integral of `dtau/dt = rho^(alpha-1)`.
pub fn rescaled_euclid(
    states: &[SurfaceState],
    speed: SpeedFunction,
    alpha: FlowExponent,
    rbar: f64,
) -> Result<Vec<RescaledSample>> {
    let ctx = DiagnosticsContext {
        space_form: SpaceForm::Euclidean,
        speed,
        alpha,
        rescale_radius: Some(rbar),
    };
    let t0 = states.first().map(|s| s.t).unwrap_or(0.0);
    let mut out = Vec::with_capacity(states.len());
    for s in states {
        let tau = ctx
            .tau(s.t - t0)
            .expect("Euclidean context always rescales");
        let rec = snapshot_diagnostics(&ctx, s)?;
        let ranges = rec.rescaled.expect("Euclidean context always rescales");
        out.push(RescaledSample {
            t: s.t,
            tau,
            ranges,
            max_g: rec.max_g,
        });
    }
    Ok(out)
}
