//! Curvature speed functions `F(lambda1, lambda2)` and the flow exponent.
//!
//! Every registered function is symmetric, homogeneous of degree one,
//! normalized by `F(1, 1) = 2` and strictly increasing in each argument on
//! the positive quadrant. Gradients are analytic; finite differences only
//! appear in [`validate_assumption`].

use std::fmt;

use crate::error::{FlowError, Result};

/// Evaluation interface shared by the registry and ad-hoc test fixtures.
pub trait CurvatureSpeed {
    fn name(&self) -> &str;

    /// Raw value, no cone check.
    fn value(&self, lambda1: f64, lambda2: f64) -> f64;

    /// Raw gradient `(dF/dlambda1, dF/dlambda2)`, no cone check.
    fn gradient(&self, lambda1: f64, lambda2: f64) -> (f64, f64);

    /// Whether `(lambda1, lambda2)` lies in the cone where the function is
    /// admissible.
    fn in_cone(&self, lambda1: f64, lambda2: f64) -> bool {
        lambda1 > 0.0 && lambda2 > 0.0
    }
}

/// The registered speed functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpeedFunction {
    /// `H = lambda1 + lambda2`; admissible on the mean-convex half plane.
    MeanCurvature,
    /// `2 ((lambda1^p + lambda2^p) / 2)^(1/p)`, `p != 0`.
    PowerMean(i32),
    /// `2 sqrt(lambda1 lambda2)`.
    GeometricMean,
}

impl SpeedFunction {
    pub const REGISTRY: [SpeedFunction; 5] = [
        SpeedFunction::MeanCurvature,
        SpeedFunction::PowerMean(-1),
        SpeedFunction::PowerMean(2),
        SpeedFunction::PowerMean(3),
        SpeedFunction::GeometricMean,
    ];

    pub fn from_name(name: &str) -> Result<Self> {
        Self::REGISTRY
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| FlowError::Unknown {
                kind: "speed function",
                name: name.to_string(),
            })
    }

    pub fn names() -> Vec<&'static str> {
        Self::REGISTRY.iter().map(|f| f.static_name()).collect()
    }

    fn static_name(&self) -> &'static str {
        match self {
            SpeedFunction::MeanCurvature => "mean_curvature",
            SpeedFunction::PowerMean(-1) => "harmonic_mean",
            SpeedFunction::PowerMean(2) => "power_mean_2",
            SpeedFunction::PowerMean(3) => "power_mean_3",
            SpeedFunction::PowerMean(_) => "power_mean",
            SpeedFunction::GeometricMean => "geometric_mean",
        }
    }

    /// Only mean curvature is run from merely mean-convex data.
    pub fn requires_full_convexity(&self) -> bool {
        !matches!(self, SpeedFunction::MeanCurvature)
    }

    /// `F(lambda1, lambda2)`, rejecting points outside the admissible cone.
    pub fn eval(&self, lambda1: f64, lambda2: f64) -> Result<f64> {
        self.check_cone(lambda1, lambda2)?;
        Ok(self.value(lambda1, lambda2))
    }

    pub fn grad(&self, lambda1: f64, lambda2: f64) -> Result<(f64, f64)> {
        self.check_cone(lambda1, lambda2)?;
        Ok(self.gradient(lambda1, lambda2))
    }

    fn check_cone(&self, lambda1: f64, lambda2: f64) -> Result<()> {
        if self.in_cone(lambda1, lambda2) {
            Ok(())
        } else {
            Err(FlowError::ConeViolation {
                speed: self.static_name().to_string(),
                lambda1,
                lambda2,
            })
        }
    }
}

impl CurvatureSpeed for SpeedFunction {
    fn name(&self) -> &str {
        self.static_name()
    }

    #[inline]
    fn value(&self, l1: f64, l2: f64) -> f64 {
        match *self {
            SpeedFunction::MeanCurvature => l1 + l2,
            SpeedFunction::PowerMean(-1) => 4.0 * l1 * l2 / (l1 + l2),
            SpeedFunction::PowerMean(2) => (2.0 * (l1 * l1 + l2 * l2)).sqrt(),
            SpeedFunction::PowerMean(p) => {
                let p = p as f64;
                2.0 * (0.5 * (l1.powf(p) + l2.powf(p))).powf(1.0 / p)
            }
            SpeedFunction::GeometricMean => 2.0 * (l1 * l2).sqrt(),
        }
    }

    #[inline]
    fn gradient(&self, l1: f64, l2: f64) -> (f64, f64) {
        match *self {
            SpeedFunction::MeanCurvature => (1.0, 1.0),
            SpeedFunction::PowerMean(-1) => {
                let s = l1 + l2;
                let k = 4.0 / (s * s);
                (k * l2 * l2, k * l1 * l1)
            }
            SpeedFunction::PowerMean(2) => {
                let f = self.value(l1, l2);
                (2.0 * l1 / f, 2.0 * l2 / f)
            }
            SpeedFunction::PowerMean(p) => {
                // dF/dl_i = (F/2)^(1-p) l_i^(p-1)
                let half = 0.5 * self.value(l1, l2);
                let p = p as f64;
                let c = half.powf(1.0 - p);
                (c * l1.powf(p - 1.0), c * l2.powf(p - 1.0))
            }
            SpeedFunction::GeometricMean => {
                let r = (l2 / l1).sqrt();
                (r, 1.0 / r)
            }
        }
    }

    fn in_cone(&self, l1: f64, l2: f64) -> bool {
        match self {
            SpeedFunction::MeanCurvature => l1 + l2 > 0.0,
            _ => l1 > 0.0 && l2 > 0.0,
        }
    }
}

impl fmt::Display for SpeedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.static_name())
    }
}

/// The power `alpha` in the speed `F^{-alpha}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowExponent(f64);

impl FlowExponent {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(FlowExponent(alpha))
        } else {
            Err(FlowError::InvalidParameter(format!(
                "alpha must lie in (0, 1] (got {alpha})"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `F^{-alpha}` with the common exponents special-cased.
    #[inline]
    pub fn inverse_power(self, f: f64) -> f64 {
        if self.0 == 1.0 {
            1.0 / f
        } else if self.0 == 0.5 {
            1.0 / f.sqrt()
        } else {
            f.powf(-self.0)
        }
    }
}

/// Which axiom a sample violated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Violation {
    Symmetry,
    Homogeneity,
    Normalization,
    Positivity,
    Monotonicity,
    Gradient,
}

/// Worst-case deviations found by [`validate_assumption`].
#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub speed: String,
    pub samples: usize,
    /// Largest `|F(a,b) - F(b,a)| / |F(a,b)|`.
    pub symmetry: f64,
    /// Largest `|F(ka,kb) - k F(a,b)| / (k |F(a,b)|)` over `k in {0.5, 2, 10}`.
    pub homogeneity: f64,
    /// `|F(1,1) - 2|`.
    pub normalization: f64,
    /// Smallest value of `F`.
    pub min_value: f64,
    /// Smallest gradient component.
    pub min_gradient: f64,
    /// Largest relative gap between the analytic gradient and a central
    /// difference.
    pub gradient_error: f64,
    /// Largest relative residual of the Euler relation `lambda . grad F = F`.
    pub euler: f64,
}

impl AssumptionReport {
    pub const ALGEBRAIC_TOL: f64 = 1e-10;
    pub const GRADIENT_TOL: f64 = 1e-6;

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.symmetry <= Self::ALGEBRAIC_TOL) {
            out.push(Violation::Symmetry);
        }
        if !(self.homogeneity <= Self::ALGEBRAIC_TOL) {
            out.push(Violation::Homogeneity);
        }
        if !(self.normalization <= Self::ALGEBRAIC_TOL) {
            out.push(Violation::Normalization);
        }
        if !(self.min_value > 0.0) {
            out.push(Violation::Positivity);
        }
        if !(self.min_gradient > 0.0) {
            out.push(Violation::Monotonicity);
        }
        if !(self.gradient_error <= Self::GRADIENT_TOL && self.euler <= Self::ALGEBRAIC_TOL) {
            out.push(Violation::Gradient);
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.violations().is_empty()
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "speed          {}", self.speed)?;
        writeln!(f, "samples        {}", self.samples)?;
        writeln!(f, "symmetry       {:.3e}", self.symmetry)?;
        writeln!(f, "homogeneity    {:.3e}", self.homogeneity)?;
        writeln!(f, "normalization  {:.3e}", self.normalization)?;
        writeln!(f, "min F          {:.6e}", self.min_value)?;
        writeln!(f, "min dF         {:.6e}", self.min_gradient)?;
        writeln!(f, "gradient error {:.3e}", self.gradient_error)?;
        writeln!(f, "euler residual {:.3e}", self.euler)?;
        let v = self.violations();
        if v.is_empty() {
            write!(f, "result         pass")
        } else {
            write!(f, "result         fail {v:?}")
        }
    }
}

/// Checks the speed-function axioms on a set of cone points.
pub fn validate_assumption<F: CurvatureSpeed + ?Sized>(
    speed: &F,
    samples: &[(f64, f64)],
) -> AssumptionReport {
    let mut report = AssumptionReport {
        speed: speed.name().to_string(),
        samples: samples.len(),
        symmetry: 0.0,
        homogeneity: 0.0,
        normalization: (speed.value(1.0, 1.0) - 2.0).abs(),
        min_value: f64::INFINITY,
        min_gradient: f64::INFINITY,
        gradient_error: 0.0,
        euler: 0.0,
    };
    let worse = |acc: &mut f64, x: f64| {
        if x.is_nan() || x > *acc {
            *acc = if x.is_nan() { f64::INFINITY } else { x };
        }
    };
    for &(a, b) in samples {
        let f = speed.value(a, b);
        report.min_value = report.min_value.min(f);
        worse(
            &mut report.symmetry,
            (f - speed.value(b, a)).abs() / f.abs(),
        );
        for k in [0.5, 2.0, 10.0] {
            worse(
                &mut report.homogeneity,
                (speed.value(k * a, k * b) - k * f).abs() / (k * f.abs()),
            );
        }
        let (g1, g2) = speed.gradient(a, b);
        report.min_gradient = report.min_gradient.min(g1).min(g2);
        let h1 = 1e-6 * a;
        let h2 = 1e-6 * b;
        let fd1 = (speed.value(a + h1, b) - speed.value(a - h1, b)) / (2.0 * h1);
        let fd2 = (speed.value(a, b + h2) - speed.value(a, b - h2)) / (2.0 * h2);
        let scale = g1.abs().max(g2.abs());
        worse(
            &mut report.gradient_error,
            (fd1 - g1).abs().max((fd2 - g2).abs()) / scale,
        );
        worse(&mut report.euler, (a * g1 + b * g2 - f).abs() / f.abs());
    }
    report
}

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// `n` Halton points (bases 2 and 3) scaled into `[lo, hi]^2`.
pub fn halton_samples(n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (1..=n as u64)
        .map(|i| (lo + (hi - lo) * halton(i, 2), lo + (hi - lo) * halton(i, 3)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn values() {
        let h = SpeedFunction::MeanCurvature;
        assert_eq!(h.eval(1.0, 1.0).unwrap(), 2.0);
        assert_eq!(h.eval(1.0, 3.0).unwrap(), 4.0);
        assert_relative_eq!(
            SpeedFunction::PowerMean(2).eval(3.0, 4.0).unwrap(),
            50f64.sqrt(),
            epsilon = 1e-14
        );
        for f in SpeedFunction::REGISTRY {
            assert_relative_eq!(f.eval(1.0, 1.0).unwrap(), 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn gradients() {
        assert_eq!(
            SpeedFunction::MeanCurvature.grad(0.3, 7.0).unwrap(),
            (1.0, 1.0)
        );
        let (a, b) = SpeedFunction::PowerMean(2).grad(1.0, 1.0).unwrap();
        assert_relative_eq!(a, 1.0, epsilon = 1e-14);
        assert_relative_eq!(b, 1.0, epsilon = 1e-14);

        let g = SpeedFunction::GeometricMean;
        let (g1, g2) = g.grad(1.0, 4.0).unwrap();
        assert_relative_eq!(g1, 2.0, epsilon = 1e-14);
        assert_relative_eq!(g2, 0.5, epsilon = 1e-14);
        let h = 1e-6;
        let fd1 = (g.value(1.0 + h, 4.0) - g.value(1.0 - h, 4.0)) / (2.0 * h);
        let fd2 = (g.value(1.0, 4.0 + h) - g.value(1.0, 4.0 - h)) / (2.0 * h);
        assert!((fd1 - 2.0).abs() < 1e-8);
        assert!((fd2 - 0.5).abs() < 1e-8);
    }

    #[test]
    fn cone() {
        let p2 = SpeedFunction::PowerMean(2);
        assert!(matches!(
            p2.eval(-0.1, 1.0),
            Err(FlowError::ConeViolation { .. })
        ));
        // mean curvature only needs mean convexity
        assert_eq!(SpeedFunction::MeanCurvature.eval(-0.5, 1.0).unwrap(), 0.5);
        assert!(SpeedFunction::MeanCurvature.eval(-1.0, 0.5).is_err());
    }

    #[test]
    fn registry_lookup() {
        for name in SpeedFunction::names() {
            assert_eq!(SpeedFunction::from_name(name).unwrap().name(), name);
        }
        assert!(SpeedFunction::from_name("gauss_curvature").is_err());
    }

    #[test]
    fn exponent_bounds() {
        assert!(FlowExponent::new(0.0).is_err());
        assert!(FlowExponent::new(1.2).is_err());
        let a = FlowExponent::new(0.3).unwrap();
        assert_relative_eq!(a.inverse_power(2.0), 2f64.powf(-0.3), epsilon = 1e-15);
        assert_eq!(FlowExponent::new(0.5).unwrap().inverse_power(4.0), 0.5);
    }

    #[test]
    fn halton_prefix() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(3, 2), 0.75);
        assert_relative_eq!(halton(4, 3), 4.0 / 9.0, epsilon = 1e-15);
    }
}
