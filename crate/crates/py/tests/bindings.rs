use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(icflow_py::icflow_py)(py);
        let locals = PyDict::new(py);
        locals.set_item("icflow", module).unwrap();
        py.run(code, None, Some(&locals))
            .map_err(|e| e.display(py))
            .unwrap();
    });
}

#[test]
fn oracle_and_speeds() {
    run(c"
import math
assert abs(icflow.sphere_radius(0, 1.0, 1.0, 2.0) - math.e) < 1e-12
assert 'power_mean_2' in icflow.speed_names()
ok, report = icflow.validate_speed('geometric_mean')
assert ok, report
");
}

#[test]
fn flow_through_the_bindings() {
    run(c"
s = icflow.Surface.sphere(8, 16, 1.0)
r = icflow.run_flow(0, 'mean_curvature', 1.0, s, 0.25, record_every=0.05)
assert r.termination == 't_end'
assert r.steps > 0
u = r.final_surface.u
assert max(u) - min(u) < 1e-12
assert len(r.records) == 6 and r.records[0]['max_g'] == 0.0
");
}

#[test]
fn errors_become_flow_error() {
    run(c"
try:
    icflow.Surface(4, 8, [1.0] * 3)
except icflow.FlowError as e:
    pass
else:
    raise AssertionError('wrong node count accepted')
try:
    icflow.run_flow(1, 'mean_curvature', 0.5, icflow.Surface.sphere(4, 8, 0.5), 1.0)
except icflow.FlowError:
    pass
else:
    raise AssertionError('alpha 0.5 on S3 accepted')
");
}
