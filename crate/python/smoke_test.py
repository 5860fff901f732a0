"""Smoke test for the icflow Python extension.

Build and install the module first, e.g.

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/icflow-*.whl

then run ``python python/smoke_test.py``.
"""

import math

import icflow


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    names = icflow.speed_names()
    assert "mean_curvature" in names, names
    for name in names:
        passed, report = icflow.validate_speed(name)
        assert passed, report
    assert icflow.speed_value("mean_curvature", 1.0, 3.0) == 4.0

    r = icflow.sphere_radius(0, 1.0, 1.0, 2.0)
    assert close(r, math.e, 1e-12), r

    sphere = icflow.Surface.sphere(8, 16, 1.5)
    l1, l2 = icflow.principal_curvatures(-1, sphere)
    k = 1.0 / math.tanh(1.5)
    assert all(close(x, k, 1e-12) for x in l1 + l2)

    start = icflow.Surface.perturbed_sphere(8, 16, 1.0, 0.05, 2)
    diag = icflow.surface_diagnostics(0, start)
    assert diag["q"] <= 0.0 and diag["min_chi"] > 0.0

    result = icflow.run_flow(-1, "mean_curvature", 1.0, start, 0.5, record_every=0.1)
    assert result.termination == "t_end", result.error
    assert len(result.records) == 6
    g = [rec["max_g"] for rec in result.records]
    assert all(b <= a + 1e-6 for a, b in zip(g, g[1:])), g
    assert result.csv().startswith("t,")
    assert result.final_surface.t == 0.5

    coarse, fine = icflow.c0("p2_axisym")
    assert fine > 0.0 and abs(fine - coarse) <= 1e-6 * fine

    ce = icflow.run_counterexample(n_theta=16, n_phi=32, t_end=2.0)
    assert ce["verdict"] in ("ROUND", "NON_ROUND", "INCONCLUSIVE")
    assert ce["q_final"] < 0.0

    try:
        icflow.sphere_radius(2, 1.0, 1.0, 1.0)
    except icflow.FlowError:
        pass
    else:
        raise AssertionError("kappa = 2 accepted")

    print("icflow smoke test passed")


if __name__ == "__main__":
    main()
