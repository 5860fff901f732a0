//! A flow in hyperbolic space whose rescaled limit is not round.
//!
//! Start from the radial graph `u = s + fbar(theta, phi)` and evolve it by
//! `dX/dt = H^{-alpha} nu` with `alpha < 1`. The roundness functional
//! `Q(M) = -|M| int |A°|^2 dmu` stays below `-c0/4` for large `s`, where
//!
//! ```text
//! c0 = int_{S^2} e^{2 fbar} * int_{S^2} |D°^2 e^{-fbar}|^2
//! ```
//!
//! and `D°^2` is the traceless round Hessian. `c0 = 0` exactly when
//! `e^{-fbar}` is a combination of the constant and first spherical
//! harmonics, in which case the limit is round.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use crate::diagnostics::{fit_decay_rate, linear_fit, DecayFit};
use crate::error::{FlowError, Result};
use crate::geometry::{node_shape, pairwise_sum, SphericalGrid, SurfaceState};
use crate::spaceform::SpaceForm;
use crate::speed::{FlowExponent, SpeedFunction};
use crate::stepper::{self, FlowConfig, FlowOutcome};

/// `c0` below this is treated as zero.
pub const C0_DEGENERATE: f64 = 1e-10;
/// A trailing window with `max |Q|` below this is round.
pub const ROUND_TOL: f64 = 1e-8;
/// Fraction of the run (by time) used for the trailing-window statistics.
pub const TRAILING_WINDOW: f64 = 0.5;
/// Largest relative drift `|dQ/dt| * window / |mean Q|` counted as stable.
pub const STABILITY_TOL: f64 = 0.01;

/// The registered base functions `fbar` on the sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaseFunction {
    Zero,
    /// `a (cos^2 theta - 1/3)`.
    P2Axisym {
        a: f64,
    },
    /// `a (cos^2 theta - 1/3) + b sin^2 theta cos 2 phi`.
    P2NonAxisym {
        a: f64,
        b: f64,
    },
    /// `-ln(1 + a cos theta)`, `|a| < 1`: constant plus first harmonic
    /// after exponentiating.
    FirstEigen {
        a: f64,
    },
}

/// `(f, f_theta, f_phi, f_theta_theta, f_theta_phi, f_phi_phi)`.
pub type Jet = [f64; 6];

impl BaseFunction {
    pub const NAMES: [&'static str; 4] = ["zero", "p2_axisym", "p2_nonaxisym", "first_eigen"];

    /// Builds a registered function; `amplitude` defaults to 0.3 for the
    /// quadrupoles (with `b = a / 2`) and 0.2 for `first_eigen`.
    pub fn from_name(name: &str, amplitude: Option<f64>) -> Result<Self> {
        let f = match name {
            "zero" => BaseFunction::Zero,
            "p2_axisym" => BaseFunction::P2Axisym {
                a: amplitude.unwrap_or(0.3),
            },
            "p2_nonaxisym" => {
                let a = amplitude.unwrap_or(0.3);
                BaseFunction::P2NonAxisym { a, b: 0.5 * a }
            }
            "first_eigen" => {
                let a = amplitude.unwrap_or(0.2);
                if a.abs() >= 1.0 {
                    return Err(FlowError::InvalidParameter(format!(
                        "first_eigen needs |a| < 1 (got {a})"
                    )));
                }
                BaseFunction::FirstEigen { a }
            }
            other => {
                return Err(FlowError::Unknown {
                    kind: "base function",
                    name: other.to_string(),
                })
            }
        };
        Ok(f)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseFunction::Zero => "zero",
            BaseFunction::P2Axisym { .. } => "p2_axisym",
            BaseFunction::P2NonAxisym { .. } => "p2_nonaxisym",
            BaseFunction::FirstEigen { .. } => "first_eigen",
        }
    }

    pub fn value(&self, theta: f64, phi: f64) -> f64 {
        self.jet(theta, phi)[0]
    }

    /// Value and coordinate derivatives up to second order.
    pub fn jet(&self, theta: f64, phi: f64) -> Jet {
        let (s, c) = theta.sin_cos();
        match *self {
            BaseFunction::Zero => [0.0; 6],
            BaseFunction::P2Axisym { a } => quadrupole(a, s, c),
            BaseFunction::P2NonAxisym { a, b } => {
                let mut j = quadrupole(a, s, c);
                let (s2p, c2p) = (2.0 * phi).sin_cos();
                let cos2t = c * c - s * s;
                j[0] += b * s * s * c2p;
                j[1] += 2.0 * b * s * c * c2p;
                j[2] += -2.0 * b * s * s * s2p;
                j[3] += 2.0 * b * cos2t * c2p;
                j[4] += -4.0 * b * s * c * s2p;
                j[5] += -4.0 * b * s * s * c2p;
                j
            }
            BaseFunction::FirstEigen { a } => {
                let d = 1.0 + a * c;
                [-d.ln(), a * s / d, 0.0, (a * c + a * a) / (d * d), 0.0, 0.0]
            }
        }
    }
}

fn quadrupole(a: f64, s: f64, c: f64) -> Jet {
    [
        a * (c * c - 1.0 / 3.0),
        -2.0 * a * s * c,
        0.0,
        -2.0 * a * (c * c - s * s),
        0.0,
        0.0,
    ]
}

impl fmt::Display for BaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BaseFunction::Zero => write!(f, "zero"),
            BaseFunction::P2Axisym { a } => write!(f, "p2_axisym(a={a})"),
            BaseFunction::P2NonAxisym { a, b } => write!(f, "p2_nonaxisym(a={a}, b={b})"),
            BaseFunction::FirstEigen { a } => write!(f, "first_eigen(a={a})"),
        }
    }
}

/// `|D°^2 w|^2` for `w = e^{-f}` from the jet of `f`.
fn traceless_hessian_sq(jet: &Jet, theta: f64) -> f64 {
    let [f, ft, fp, ftt, ftp, fpp] = *jet;
    let w = (-f).exp();
    let (s, c) = theta.sin_cos();
    let cot = c / s;
    let w_t = -ft * w;
    let w_p = -fp * w;
    let w_tt = (ft * ft - ftt) * w;
    let w_tp = (ft * fp - ftp) * w;
    let w_pp = (fp * fp - fpp) * w;
    let h11 = w_tt;
    let h12 = (w_tp - cot * w_p) / s;
    let h22 = w_pp / (s * s) + cot * w_t;
    0.5 * (h11 - h22).powi(2) + 2.0 * h12 * h12
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        let mut z = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for m in 2..=n {
                let m = m as f64;
                let p2 = ((2.0 * m - 1.0) * z * p1 - (m - 1.0) * p0) / m;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[k] = z;
        x[n - 1 - k] = -z;
        w[k] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - k] = w[k];
    }
    (x, w)
}

/// The two factors `(int e^{2f}, int |D°^2 e^{-f}|^2)`, by Gauss-Legendre
/// in `cos theta` with `n_theta` nodes and the trapezoid rule with `n_phi`
/// nodes in `phi`.
pub fn c0_factors(fbar: &BaseFunction, n_theta: usize, n_phi: usize) -> (f64, f64) {
    let (x, w) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut first = Vec::with_capacity(n_theta * n_phi);
    let mut second = Vec::with_capacity(n_theta * n_phi);
    for (xi, wi) in x.iter().zip(&w) {
        let theta = xi.acos();
        for j in 0..n_phi {
            let jet = fbar.jet(theta, j as f64 * dphi);
            let weight = wi * dphi;
            first.push((2.0 * jet[0]).exp() * weight);
            second.push(traceless_hessian_sq(&jet, theta) * weight);
        }
    }
    (pairwise_sum(&first), pairwise_sum(&second))
}

/// `c0` by quadrature at the grid's resolution.
pub fn compute_c0(fbar: &BaseFunction, grid: &SphericalGrid) -> Result<f64> {
    let (a, b) = c0_factors(fbar, grid.n_theta(), grid.n_phi());
    let c0 = a * b;
    if c0 < C0_DEGENERATE {
        return Err(FlowError::DegenerateChoice(c0));
    }
    Ok(c0)
}

/// `c0` at the grid's resolution and at twice that resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C0Estimate {
    pub coarse: f64,
    pub fine: f64,
}

impl C0Estimate {
    pub fn relative_change(&self) -> f64 {
        (self.fine - self.coarse).abs() / self.fine.abs()
    }
}

pub fn c0_refinement(fbar: &BaseFunction, grid: &SphericalGrid) -> C0Estimate {
    let product = |n, m| {
        let (a, b) = c0_factors(fbar, n, m);
        a * b
    };
    C0Estimate {
        coarse: product(grid.n_theta(), grid.n_phi()),
        fine: product(2 * grid.n_theta(), 2 * grid.n_phi()),
    }
}

/// The shifted graph `u = s + fbar` in hyperbolic space.
pub fn build_initial(
    sf: SpaceForm,
    fbar: &BaseFunction,
    s: f64,
    grid: std::sync::Arc<SphericalGrid>,
) -> Result<SurfaceState> {
    if sf != SpaceForm::Hyperbolic {
        return Err(FlowError::InvalidParameter(format!(
            "the shifted-graph construction lives in H3, not {sf}"
        )));
    }
    SurfaceState::from_fn(grid, |theta, phi| s + fbar.value(theta, phi))
}

/// Worst margins of `3 >= H >= eps0`, `1/v >= eps0`, `|A°|^2 < H^2/4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub epsilon0: f64,
    pub min_h: f64,
    pub max_h: f64,
    /// `min g(d_r, nu) = min 1/v`.
    pub min_radial_normal: f64,
    /// `max |A°|^2 / H^2`; must stay below 1/4.
    pub max_traceless_ratio: f64,
}

impl AdmissibilityReport {
    pub fn mean_curvature_ok(&self) -> bool {
        self.min_h >= self.epsilon0 && self.max_h <= 3.0
    }

    pub fn radial_ok(&self) -> bool {
        self.min_radial_normal >= self.epsilon0
    }

    pub fn traceless_ok(&self) -> bool {
        self.max_traceless_ratio < 0.25
    }

    pub fn passed(&self) -> bool {
        self.mean_curvature_ok() && self.radial_ok() && self.traceless_ok()
    }
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
        writeln!(
            f,
            "H in [{:.6}, {:.6}] vs [{}, 3]: {}",
            self.min_h,
            self.max_h,
            self.epsilon0,
            mark(self.mean_curvature_ok())
        )?;
        writeln!(
            f,
            "min 1/v = {:.6} vs {}: {}",
            self.min_radial_normal,
            self.epsilon0,
            mark(self.radial_ok())
        )?;
        write!(
            f,
            "max |A°|^2/H^2 = {:.3e} vs 0.25: {}",
            self.max_traceless_ratio,
            mark(self.traceless_ok())
        )
    }
}

/// Checks the admissibility conditions at every node.
pub fn check_admissibility(
    sf: SpaceForm,
    state: &SurfaceState,
    epsilon0: f64,
) -> Result<AdmissibilityReport> {
    let grid = state.grid();
    let mut report = AdmissibilityReport {
        epsilon0,
        min_h: f64::INFINITY,
        max_h: f64::NEG_INFINITY,
        min_radial_normal: f64::INFINITY,
        max_traceless_ratio: 0.0,
    };
    for i in 0..grid.n_theta() {
        for j in 0..grid.n_phi() {
            let n = node_shape(sf, grid, state.u(), i, j)?;
            let h = n.lambda1 + n.lambda2;
            report.min_h = report.min_h.min(h);
            report.max_h = report.max_h.max(h);
            report.min_radial_normal = report.min_radial_normal.min(1.0 / n.v);
            let ratio = if h > 0.0 {
                2.0 * n.half_gap * n.half_gap / (h * h)
            } else {
                f64::INFINITY
            };
            report.max_traceless_ratio = report.max_traceless_ratio.max(ratio);
        }
    }
    Ok(report)
}

/// Outcome class of a counterexample run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Round,
    NonRound,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Round => "ROUND",
            Verdict::NonRound => "NON_ROUND",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct CounterexampleConfig {
    pub alpha: FlowExponent,
    pub fbar: BaseFunction,
    pub s: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    pub t_end: f64,
    pub epsilon0: f64,
    pub record_every: f64,
    pub cfl_safety: f64,
    pub workers: usize,
}

impl CounterexampleConfig {
    pub fn new(
        alpha: FlowExponent,
        fbar: BaseFunction,
        s: f64,
        n_theta: usize,
        n_phi: usize,
        t_end: f64,
    ) -> Self {
        CounterexampleConfig {
            alpha,
            fbar,
            s,
            n_theta,
            n_phi,
            t_end,
            epsilon0: 0.1,
            record_every: t_end / 120.0,
            cfl_safety: stepper::DEFAULT_CFL_SAFETY,
            workers: 1,
        }
    }
}

/// Trailing-window summary of the `Q` series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QWindow {
    pub mean: f64,
    /// Least-squares `dQ/dt` over the window.
    pub slope: f64,
    /// `|slope| * window length / |mean|`.
    pub drift: f64,
    pub max_abs: f64,
}

impl QWindow {
    pub fn from_series(series: &[(f64, f64)], window: f64) -> Result<Self> {
        let (Some(first), Some(last)) = (series.first(), series.last()) else {
            return Err(FlowError::InsufficientData {
                found: 0,
                needed: 2,
            });
        };
        let start = last.0 - window * (last.0 - first.0);
        let pts: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.0 >= start).collect();
        if pts.len() < 2 {
            return Err(FlowError::InsufficientData {
                found: pts.len(),
                needed: 2,
            });
        }
        let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let max_abs = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        let (slope, _, _) = linear_fit(&pts);
        let span = pts[pts.len() - 1].0 - pts[0].0;
        let drift = if mean == 0.0 {
            if slope == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (slope * span / mean).abs()
        };
        Ok(QWindow {
            mean,
            slope,
            drift,
            max_abs,
        })
    }

    pub fn stable(&self) -> bool {
        self.drift <= STABILITY_TOL
    }
}

/// Classifies a run from its trailing window and `c0`.
pub fn classify(window: &QWindow, c0: f64) -> Verdict {
    if window.max_abs < ROUND_TOL {
        Verdict::Round
    } else if c0 > 0.0 && window.mean <= -c0 / 8.0 && window.stable() {
        Verdict::NonRound
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Clone, Debug)]
pub struct CounterexampleOutcome {
    pub c0: C0Estimate,
    pub admissibility: AdmissibilityReport,
    pub flow: FlowOutcome,
    /// `|M~_s|`, the area of the initial surface.
    pub initial_area: f64,
    /// `(t, Q(M_t))` at every record.
    pub q_series: Vec<(f64, f64)>,
    pub q_window: Option<QWindow>,
    pub q_threshold: f64,
    /// Decay of `|M~_s| max |H - 2|` over the trailing window.
    pub fit_hdev: Option<DecayFit>,
    /// `e^{-2^(1-alpha) t} sinh^2 u` on the final surface.
    pub conformal: Vec<f64>,
    /// `ln` of the conformal factor minus its area-weighted mean.
    pub conformal_log: Vec<f64>,
    pub verdict: Verdict,
}

impl CounterexampleOutcome {
    pub fn q_final(&self) -> f64 {
        self.q_series.last().map_or(f64::NAN, |q| q.1)
    }

    /// Oscillation of the normalized log conformal factor; zero for a round
    /// limit.
    pub fn conformal_oscillation(&self) -> f64 {
        let max = self
            .conformal_log
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let min = self
            .conformal_log
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        max - min
    }

    /// `verdict,c0,Q_final,Q_threshold,fit_rate_Hdev`.
    pub fn verdict_line(&self) -> String {
        let rate = self
            .fit_hdev
            .map(|f| format!("{:.11e}", f.rate))
            .unwrap_or_default();
        format!(
            "{},{:.11e},{:.11e},{:.11e},{}",
            self.verdict,
            self.c0.fine,
            self.q_final(),
            self.q_threshold,
            rate
        )
    }

    pub fn write_conformal<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let state = &self.flow.final_state;
        crate::geometry::write_grid(w, -1, state.grid(), state.t, &self.conformal)
    }
}

/// Builds `s + fbar`, checks admissibility and evolves it by `F = H`.
pub fn run_counterexample(cfg: &CounterexampleConfig) -> Result<CounterexampleOutcome> {
    let a = cfg.alpha.get();
    if a >= 1.0 {
        return Err(FlowError::InvalidParameter(format!(
            "the counterexample needs alpha < 1 (got {a})"
        )));
    }
    let sf = SpaceForm::Hyperbolic;
    let grid = SphericalGrid::shared(cfg.n_theta, cfg.n_phi)?;
    let c0 = c0_refinement(&cfg.fbar, &grid);
    let initial = build_initial(sf, &cfg.fbar, cfg.s, grid.clone())?;
    let admissibility = check_admissibility(sf, &initial, cfg.epsilon0)?;
    if !admissibility.passed() {
        return Err(FlowError::InvalidParameter(format!(
            "initial surface is not admissible:\n{admissibility}"
        )));
    }

    let mut flow_cfg = FlowConfig::new(
        sf,
        SpeedFunction::MeanCurvature,
        cfg.alpha,
        initial,
        cfg.t_end,
    );
    flow_cfg.record_every = cfg.record_every;
    flow_cfg.cfl_safety = cfg.cfl_safety;
    flow_cfg.workers = cfg.workers;
    let flow = stepper::run(&flow_cfg)?;

    let initial_area = flow.records[0].area;
    let q_series: Vec<(f64, f64)> = flow.records.iter().map(|r| (r.t, r.q)).collect();
    let hdev: Vec<(f64, f64)> = flow
        .records
        .iter()
        .filter_map(|r| r.max_h_dev.map(|d| (r.t, initial_area * d)))
        .collect();
    let fit_hdev = fit_decay_rate(&hdev, TRAILING_WINDOW).ok();
    let q_window = QWindow::from_series(&q_series, TRAILING_WINDOW).ok();
    let q_threshold = -c0.fine / 8.0;
    let verdict = match (&q_window, flow.termination.is_normal()) {
        (Some(w), true) => classify(w, c0.fine),
        _ => Verdict::Inconclusive,
    };

    let state = &flow.final_state;
    let rate = 2f64.powf(1.0 - a);
    let log_c: Vec<f64> = state
        .u()
        .iter()
        .map(|&u| 2.0 * u.sinh().ln() - rate * state.t)
        .collect();
    let weights = grid.weights();
    let weighted: Vec<f64> = log_c.iter().zip(&weights).map(|(l, w)| l * w).collect();
    let mean = pairwise_sum(&weighted) / pairwise_sum(&weights);
    let conformal = log_c.iter().map(|l| l.exp()).collect();
    let conformal_log = log_c.iter().map(|l| l - mean).collect();

    Ok(CounterexampleOutcome {
        c0,
        admissibility,
        flow,
        initial_area,
        q_series,
        q_window,
        q_threshold,
        fit_hdev,
        conformal,
        conformal_log,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(5);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        let m8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert_relative_eq!(m8, 2.0 / 9.0, epsilon = 1e-14);
        let (x, _) = gauss_legendre(4);
        assert_relative_eq!(
            x[0],
            (3.0 / 7.0 + 2.0 / 7.0 * 1.2f64.sqrt()).sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn jets_match_finite_differences() {
        let fs = [
            BaseFunction::P2Axisym { a: 0.3 },
            BaseFunction::P2NonAxisym { a: 0.3, b: 0.2 },
            BaseFunction::FirstEigen { a: 0.4 },
        ];
        let h = 1e-5;
        for f in fs {
            for &(t, p) in &[(0.4, 1.1), (1.9, 4.0), (2.8, 0.3)] {
                let j = f.jet(t, p);
                let d = |dt: f64, dp: f64| f.value(t + dt, p + dp);
                assert_relative_eq!(j[1], (d(h, 0.0) - d(-h, 0.0)) / (2.0 * h), epsilon = 1e-8);
                assert_relative_eq!(j[2], (d(0.0, h) - d(0.0, -h)) / (2.0 * h), epsilon = 1e-8);
                let g = |dt: f64, dp: f64| f.jet(t + dt, p + dp);
                assert_relative_eq!(
                    j[3],
                    (g(h, 0.0)[1] - g(-h, 0.0)[1]) / (2.0 * h),
                    epsilon = 1e-7
                );
                assert_relative_eq!(
                    j[4],
                    (g(0.0, h)[1] - g(0.0, -h)[1]) / (2.0 * h),
                    epsilon = 1e-7
                );
                assert_relative_eq!(
                    j[5],
                    (g(0.0, h)[2] - g(0.0, -h)[2]) / (2.0 * h),
                    epsilon = 1e-7
                );
            }
        }
    }

    #[test]
    fn degenerate_base_functions() {
        let g = SphericalGrid::new(32, 64).unwrap();
        assert!(matches!(
            compute_c0(&BaseFunction::Zero, &g),
            Err(FlowError::DegenerateChoice(_))
        ));
        let e = compute_c0(&BaseFunction::FirstEigen { a: 0.2 }, &g).unwrap_err();
        let FlowError::DegenerateChoice(c0) = e else {
            panic!("{e}")
        };
        assert!(c0.abs() < 1e-20, "{c0}");
    }

    #[test]
    fn quadrupole_c0() {
        let g = SphericalGrid::new(32, 64).unwrap();
        let f = BaseFunction::P2Axisym { a: 0.3 };
        let est = c0_refinement(&f, &g);
        assert!(est.relative_change() < 1e-6);
        assert_relative_eq!(est.fine, 14.945895797103733, max_relative = 1e-10);
        let (i1, i2) = c0_factors(&f, 64, 128);
        assert_relative_eq!(i1, 12.7763006, max_relative = 1e-7);
        assert_relative_eq!(i2, 1.16981403, max_relative = 1e-7);
        // symmetric under phi rotation: any phi resolution works
        assert_relative_eq!(c0_factors(&f, 48, 4).1, i2, max_relative = 1e-10);
    }

    #[test]
    fn initial_surface() {
        let g = SphericalGrid::shared(16, 32).unwrap();
        let round =
            build_initial(SpaceForm::Hyperbolic, &BaseFunction::Zero, 3.0, g.clone()).unwrap();
        assert!(round.u().iter().all(|&u| u == 3.0));
        let f = BaseFunction::P2Axisym { a: 0.3 };
        let s = build_initial(SpaceForm::Hyperbolic, &f, 6.0, g.clone()).unwrap();
        // grid extremes approach the exact range 0.3 from below
        let range = s.max_u() - s.min_u();
        assert!(range < 0.3 && range > 0.3 * (1.0 - 0.02), "{range}");
        assert!(build_initial(SpaceForm::Euclidean, &f, 6.0, g).is_err());
    }

    #[test]
    fn admissibility_reports() {
        let g = SphericalGrid::shared(16, 32).unwrap();
        let sphere = SurfaceState::sphere(g.clone(), 3.0).unwrap();
        let r = check_admissibility(SpaceForm::Hyperbolic, &sphere, 0.1).unwrap();
        assert!(r.passed(), "{r}");
        assert_relative_eq!(r.min_h, 2.0 / 3f64.tanh(), max_relative = 1e-12);
        assert_eq!(r.min_radial_normal, 1.0);
        assert_eq!(r.max_traceless_ratio, 0.0);

        let steep = SurfaceState::from_fn(g.clone(), |t, _| 1.0 + 5.0 * t.cos().powi(2)).unwrap();
        let r = check_admissibility(SpaceForm::Hyperbolic, &steep, 0.1).unwrap();
        assert!(!r.passed());
        assert!(!r.radial_ok() || !r.mean_curvature_ok());

        let f = BaseFunction::P2Axisym { a: 0.3 };
        let s = build_initial(SpaceForm::Hyperbolic, &f, 6.0, g).unwrap();
        let r = check_admissibility(SpaceForm::Hyperbolic, &s, 0.1).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.max_traceless_ratio < 0.25);
    }

    #[test]
    fn verdict_classes() {
        let flat: Vec<(f64, f64)> = (0..20).map(|k| (k as f64, -3.0)).collect();
        let w = QWindow::from_series(&flat, 0.5).unwrap();
        assert_eq!(w.drift, 0.0);
        assert_eq!(classify(&w, 16.0), Verdict::NonRound);
        assert_eq!(classify(&w, 40.0), Verdict::Inconclusive);
        let zero: Vec<(f64, f64)> = (0..20).map(|k| (k as f64, 0.0)).collect();
        assert_eq!(
            classify(&QWindow::from_series(&zero, 0.5).unwrap(), 0.0),
            Verdict::Round
        );
        let falling: Vec<(f64, f64)> = (0..20).map(|k| (k as f64, -3.0 - 0.1 * k as f64)).collect();
        let w = QWindow::from_series(&falling, 0.5).unwrap();
        assert!(!w.stable());
        assert_eq!(classify(&w, 16.0), Verdict::Inconclusive);
    }

    #[test]
    fn rejects_alpha_one() {
        let cfg = CounterexampleConfig::new(
            FlowExponent::new(1.0).unwrap(),
            BaseFunction::Zero,
            3.0,
            8,
            16,
            1.0,
        );
        assert!(run_counterexample(&cfg).is_err());
    }

    #[test]
    fn names_round_trip() {
        for name in BaseFunction::NAMES {
            assert_eq!(BaseFunction::from_name(name, None).unwrap().name(), name);
        }
        assert!(BaseFunction::from_name("p3", None).is_err());
        assert!(BaseFunction::from_name("first_eigen", Some(1.5)).is_err());
    }
}
