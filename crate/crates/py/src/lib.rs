//! Python bindings.
//!
//! Space forms are passed as the curvature `kappa` (0, 1 or -1) and speed
//! functions by registry name. Solver errors raise `icflow.FlowError`.

use icflow::counterexample::{self, BaseFunction, CounterexampleConfig};
use icflow::diagnostics::{self, DiagnosticsContext, DiagnosticsRecord};
use icflow::reference::SphereSolution;
use icflow::speed::{halton_samples, validate_assumption};
use icflow::stepper::{self, FlowConfig, FlowOutcome};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(icflow, FlowError, PyException);

fn err(e: icflow::FlowError) -> PyErr {
    FlowError::new_err(e.to_string())
}

fn space_form(kappa: i32) -> PyResult<icflow::SpaceForm> {
    icflow::SpaceForm::from_kappa(kappa).map_err(err)
}

fn speed(name: &str) -> PyResult<icflow::SpeedFunction> {
    icflow::SpeedFunction::from_name(name).map_err(err)
}

fn exponent(alpha: f64) -> PyResult<icflow::FlowExponent> {
    icflow::FlowExponent::new(alpha).map_err(err)
}

/// A radial graph `r = u(theta, phi)` sampled on the lat-long grid.
#[pyclass(frozen, skip_from_py_object, module = "icflow")]
#[derive(Clone)]
pub struct Surface {
    inner: icflow::SurfaceState,
}

#[pymethods]
impl Surface {
    /// Builds a surface from row-major node values (`n_theta` rows of `n_phi`).
    #[new]
    #[pyo3(signature = (n_theta, n_phi, u, t = 0.0))]
    fn new(n_theta: usize, n_phi: usize, u: Vec<f64>, t: f64) -> PyResult<Self> {
        let grid = icflow::SphericalGrid::shared(n_theta, n_phi).map_err(err)?;
        let inner = icflow::SurfaceState::new(grid, u, t).map_err(err)?;
        Ok(Surface { inner })
    }

    #[staticmethod]
    fn sphere(n_theta: usize, n_phi: usize, radius: f64) -> PyResult<Self> {
        let grid = icflow::SphericalGrid::shared(n_theta, n_phi).map_err(err)?;
        let inner = icflow::SurfaceState::sphere(grid, radius).map_err(err)?;
        Ok(Surface { inner })
    }

    /// `rho0 + amplitude * cos(theta)^harmonic`.
    #[staticmethod]
    fn perturbed_sphere(
        n_theta: usize,
        n_phi: usize,
        rho0: f64,
        amplitude: f64,
        harmonic: i32,
    ) -> PyResult<Self> {
        let grid = icflow::SphericalGrid::shared(n_theta, n_phi).map_err(err)?;
        let inner = icflow::SurfaceState::from_fn(grid, |theta, _| {
            rho0 + amplitude * theta.cos().powi(harmonic)
        })
        .map_err(err)?;
        Ok(Surface { inner })
    }

    #[getter]
    fn n_theta(&self) -> usize {
        self.inner.grid().n_theta()
    }

    #[getter]
    fn n_phi(&self) -> usize {
        self.inner.grid().n_phi()
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.u().to_vec()
    }

    /// Node colatitudes, one per row.
    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.grid().theta().to_vec()
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.inner.grid().phi().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Surface(n_theta={}, n_phi={}, t={}, u in [{}, {}])",
            self.n_theta(),
            self.n_phi(),
            self.inner.t,
            self.inner.min_u(),
            self.inner.max_u()
        )
    }
}

fn record_dict<'py>(py: Python<'py>, r: &DiagnosticsRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t", r.t)?;
    d.set_item("tau", r.tau)?;
    d.set_item("max_g", r.max_g)?;
    d.set_item("beta", r.beta)?;
    d.set_item("min_f", r.min_f)?;
    d.set_item("max_f", r.max_f)?;
    d.set_item("min_chi", r.min_chi)?;
    d.set_item("min_h", r.min_h)?;
    d.set_item("max_h", r.max_h)?;
    d.set_item("area", r.area)?;
    d.set_item("int_asq", r.int_asq)?;
    d.set_item("q", r.q)?;
    d.set_item("min_u", r.min_u)?;
    d.set_item("max_u", r.max_u)?;
    d.set_item("max_lam_dev", r.max_lam_dev)?;
    d.set_item("max_coth_dev", r.max_coth_dev)?;
    d.set_item("max_h_dev", r.max_h_dev)?;
    if let Some(x) = r.rescaled {
        d.set_item("rescaled_u", x.u)?;
        d.set_item("rescaled_lambda", x.lambda)?;
        d.set_item("rescaled_speed", x.speed)?;
    }
    Ok(d)
}

/// Result of [`run_flow`].
#[pyclass(frozen, module = "icflow")]
pub struct FlowResult {
    outcome: FlowOutcome,
}

#[pymethods]
impl FlowResult {
    /// One of `t_end`, `max_steps`, `blowup`, `cone_violation`, `equator_proximity`.
    #[getter]
    fn termination(&self) -> &'static str {
        self.outcome.termination.as_str()
    }

    #[getter]
    fn steps(&self) -> usize {
        self.outcome.steps
    }

    #[getter]
    fn error(&self) -> Option<String> {
        self.outcome.error.as_ref().map(|e| e.to_string())
    }

    #[getter]
    fn final_surface(&self) -> Surface {
        Surface {
            inner: self.outcome.final_state.clone(),
        }
    }

    #[getter]
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.outcome
            .records
            .iter()
            .map(|r| record_dict(py, r))
            .collect()
    }

    /// The diagnostics table in CSV form.
    fn csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        diagnostics::write_csv(&mut buf, &self.outcome.records)
            .map_err(|e| FlowError::new_err(e.to_string()))?;
        Ok(String::from_utf8_lossy(&buf).into_owned())
    }
}

#[pyfunction]
fn speed_names() -> Vec<&'static str> {
    icflow::SpeedFunction::names()
}

#[pyfunction]
fn speed_value(name: &str, lambda1: f64, lambda2: f64) -> PyResult<f64> {
    speed(name)?.eval(lambda1, lambda2).map_err(err)
}

/// Checks a registered speed against the axioms; returns `(passed, report)`.
#[pyfunction]
#[pyo3(signature = (name, samples = 512))]
fn validate_speed(name: &str, samples: usize) -> PyResult<(bool, String)> {
    let f = speed(name)?;
    let report = validate_assumption(&f, &halton_samples(samples, 0.05, 20.0));
    Ok((report.passed(), report.to_string()))
}

/// Radius at time `t` of the flow starting from the geodesic sphere of radius `rho0`.
#[pyfunction]
fn sphere_radius(kappa: i32, alpha: f64, rho0: f64, t: f64) -> PyResult<f64> {
    SphereSolution::new(space_form(kappa)?, exponent(alpha)?, rho0)
        .and_then(|s| s.radius(t))
        .map_err(err)
}

/// Principal curvatures at every node, as `(lambda1, lambda2)` lists.
#[pyfunction]
#[pyo3(signature = (kappa, surface, speed_name = "mean_curvature"))]
fn principal_curvatures(
    kappa: i32,
    surface: &Surface,
    speed_name: &str,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let field = icflow::geometry::compute_curvature(
        space_form(kappa)?,
        &speed(speed_name)?,
        &surface.inner,
    )
    .map_err(err)?;
    Ok((field.map(|n| n.lambda1), field.map(|n| n.lambda2)))
}

/// Scalar diagnostics of a single surface.
#[pyfunction]
#[pyo3(signature = (kappa, surface, speed_name = "mean_curvature", alpha = 1.0))]
fn surface_diagnostics<'py>(
    py: Python<'py>,
    kappa: i32,
    surface: &Surface,
    speed_name: &str,
    alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let ctx = DiagnosticsContext::new(
        space_form(kappa)?,
        speed(speed_name)?,
        exponent(alpha)?,
        &surface.inner,
    );
    let rec = diagnostics::snapshot_diagnostics(&ctx, &surface.inner).map_err(err)?;
    record_dict(py, &rec)
}

/// Evolves `surface` by `F^-alpha` up to `t_end`.
#[pyfunction]
#[pyo3(signature = (
    kappa, speed_name, alpha, surface, t_end,
    record_every = None, cfl_safety = None, max_steps = None, workers = 1
))]
#[allow(clippy::too_many_arguments)]
fn run_flow(
    py: Python<'_>,
    kappa: i32,
    speed_name: &str,
    alpha: f64,
    surface: &Surface,
    t_end: f64,
    record_every: Option<f64>,
    cfl_safety: Option<f64>,
    max_steps: Option<usize>,
    workers: usize,
) -> PyResult<FlowResult> {
    let mut cfg = FlowConfig::new(
        space_form(kappa)?,
        speed(speed_name)?,
        exponent(alpha)?,
        surface.inner.clone(),
        t_end,
    );
    if let Some(r) = record_every {
        cfg.record_every = r;
    }
    if let Some(c) = cfl_safety {
        cfg.cfl_safety = c;
    }
    if let Some(m) = max_steps {
        cfg.max_steps = m;
    }
    cfg.workers = workers;
    let outcome = py.detach(|| stepper::run(&cfg)).map_err(err)?;
    Ok(FlowResult { outcome })
}

/// The roundness constant `c0` of a base function, at two resolutions.
#[pyfunction]
#[pyo3(signature = (fbar, amplitude = None, n_theta = 64, n_phi = 128))]
fn c0(fbar: &str, amplitude: Option<f64>, n_theta: usize, n_phi: usize) -> PyResult<(f64, f64)> {
    let f = BaseFunction::from_name(fbar, amplitude).map_err(err)?;
    let grid = icflow::SphericalGrid::new(n_theta, n_phi).map_err(err)?;
    let est = counterexample::c0_refinement(&f, &grid);
    Ok((est.coarse, est.fine))
}

/// Runs the hyperbolic non-roundness experiment and returns its summary.
#[pyfunction]
#[pyo3(signature = (
    alpha = 0.5, fbar = "p2_axisym", s = 6.0, n_theta = 64, n_phi = 128, t_end = 6.0,
    amplitude = None
))]
#[allow(clippy::too_many_arguments)]
fn run_counterexample<'py>(
    py: Python<'py>,
    alpha: f64,
    fbar: &str,
    s: f64,
    n_theta: usize,
    n_phi: usize,
    t_end: f64,
    amplitude: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let f = BaseFunction::from_name(fbar, amplitude).map_err(err)?;
    let cfg = CounterexampleConfig::new(exponent(alpha)?, f, s, n_theta, n_phi, t_end);
    let out = py
        .detach(|| counterexample::run_counterexample(&cfg))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("verdict", out.verdict.as_str())?;
    d.set_item("verdict_line", out.verdict_line())?;
    d.set_item("c0", out.c0.fine)?;
    d.set_item("q_final", out.q_final())?;
    d.set_item("q_threshold", out.q_threshold)?;
    d.set_item("q_series", out.q_series.clone())?;
    d.set_item("hdev_rate", out.fit_hdev.map(|f| f.rate))?;
    d.set_item("conformal_oscillation", out.conformal_oscillation())?;
    d.set_item("termination", out.flow.termination.as_str())?;
    d.set_item(
        "final_surface",
        Surface {
            inner: out.flow.final_state.clone(),
        },
    )?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "icflow")]
pub fn icflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FlowError", m.py().get_type::<FlowError>())?;
    m.add_class::<Surface>()?;
    m.add_class::<FlowResult>()?;
    m.add_function(wrap_pyfunction!(speed_names, m)?)?;
    m.add_function(wrap_pyfunction!(speed_value, m)?)?;
    m.add_function(wrap_pyfunction!(validate_speed, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_radius, m)?)?;
    m.add_function(wrap_pyfunction!(principal_curvatures, m)?)?;
    m.add_function(wrap_pyfunction!(surface_diagnostics, m)?)?;
    m.add_function(wrap_pyfunction!(run_flow, m)?)?;
    m.add_function(wrap_pyfunction!(c0, m)?)?;
    m.add_function(wrap_pyfunction!(run_counterexample, m)?)?;
    Ok(())
}
