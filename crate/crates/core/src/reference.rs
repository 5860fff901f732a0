//! Radii of the geodesic spheres that solve the flow exactly.
//!
//! A geodesic sphere of radius `rho` has both principal curvatures equal to
//! `s'(rho)/s(rho)`, so the flow reduces to `rho' = (2 s'/s)^{-alpha}`:
//!
//! * R^3: `rho' = 2^-alpha rho^alpha`, solved in closed form;
//! * H^3: `rho' = 2^-alpha tanh^alpha rho`, integrated numerically;
//! * S^3 (`alpha = 1`): `rho' = tan(rho) / 2`, giving
//!   `sin rho(t) = sin rho0 e^{t/2}` up to the equator time
//!   `T = -2 ln sin rho0`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{FlowError, Result};
use crate::spaceform::SpaceForm;
use crate::speed::FlowExponent;

/// Relative tolerance of the hyperbolic sphere integration.
pub const HYPERBOLIC_RTOL: f64 = 1e-10;

/// `rho(t, rho0)` in R^3.
pub fn euclid_radius(alpha: FlowExponent, rho0: f64, t: f64) -> f64 {
    let a = alpha.get();
    if a == 1.0 {
        rho0 * (0.5 * t).exp()
    } else {
        ((1.0 - a) * 2f64.powf(-a) * t + rho0.powf(1.0 - a)).powf(1.0 / (1.0 - a))
    }
}

/// `rho(t, rho0)` in H^3.
pub fn hyperbolic_radius(alpha: FlowExponent, rho0: f64, t: f64) -> f64 {
    let a = alpha.get();
    let c = 2f64.powf(-a);
    dopri5(|_, r| c * r.tanh().powf(a), 0.0, rho0, t, HYPERBOLIC_RTOL)
}

/// Time at which the S^3 sphere starting at `rho0 < pi/2` reaches the equator.
pub fn equator_time(rho0: f64) -> f64 {
    -2.0 * rho0.sin().ln()
}

/// `rho(t, rho0)` in S^3 for `alpha = 1`.
pub fn spherical_radius(rho0: f64, t: f64) -> Result<f64> {
    if !(rho0 > 0.0 && rho0 < FRAC_PI_2) {
        return Err(FlowError::InvalidParameter(format!(
            "initial radius {rho0} must lie in (0, pi/2)"
        )));
    }
    let t_max = equator_time(rho0);
    if t >= t_max {
        return Err(FlowError::PastEquator { t, t_max });
    }
    Ok((rho0.sin() * (0.5 * t).exp()).asin())
}

/// A sphere solution `t -> rho(t)` in a given space form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereSolution {
    pub space_form: SpaceForm,
    pub alpha: FlowExponent,
    pub rho0: f64,
}

impl SphereSolution {
    pub fn new(space_form: SpaceForm, alpha: FlowExponent, rho0: f64) -> Result<Self> {
        if !space_form.contains(rho0) {
            return Err(FlowError::RadialDomain {
                r: rho0,
                kappa: space_form.kappa(),
            });
        }
        if space_form == SpaceForm::Spherical && alpha.get() != 1.0 {
            return Err(FlowError::InvalidParameter(
                "the S^3 flow is only defined here for alpha = 1".into(),
            ));
        }
        Ok(SphereSolution {
            space_form,
            alpha,
            rho0,
        })
    }

    pub fn radius(&self, t: f64) -> Result<f64> {
        match self.space_form {
            SpaceForm::Euclidean => Ok(euclid_radius(self.alpha, self.rho0, t)),
            SpaceForm::Hyperbolic => Ok(hyperbolic_radius(self.alpha, self.rho0, t)),
            SpaceForm::Spherical => spherical_radius(self.rho0, t),
        }
    }
}

/// Adaptive Dormand-Prince 5(4) for a scalar ODE, integrating from `t0` to
/// `t1` with mixed relative/absolute error control.
pub fn dopri5(f: impl Fn(f64, f64) -> f64, t0: f64, y0: f64, t1: f64, rtol: f64) -> f64 {
    const C2: f64 = 1.0 / 5.0;
    const C3: f64 = 3.0 / 10.0;
    const C4: f64 = 4.0 / 5.0;
    const C5: f64 = 8.0 / 9.0;
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // error coefficients: 5th-order minus embedded 4th-order weights
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let span = t1 - t0;
    if span <= 0.0 {
        return y0;
    }
    let atol = rtol * 1e-3;
    let mut t = t0;
    let mut y = y0;
    let mut h = (span * 1e-3).min(1e-2);
    let mut k1 = f(t, y);
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, y + h * A21 * k1);
        let k3 = f(t + C3 * h, y + h * (A31 * k1 + A32 * k2));
        let k4 = f(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(
            t + C5 * h,
            y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
        );
        let k6 = f(
            t + h,
            y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
        );
        let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = f(t + h, y_new);
        let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let sc = atol + rtol * y.abs().max(y_new.abs());
        let ratio = (err / sc).abs();
        if ratio <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    y
}
