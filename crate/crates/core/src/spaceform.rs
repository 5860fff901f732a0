//! Warped-product ambient geometry `dr^2 + s_k(r)^2 g_{S^2}` of the three
//! simply connected space forms.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use crate::error::{FlowError, Result};

/// Ambient space form, tagged by the sign of its sectional curvature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceForm {
    /// `kappa = 0`, R^3.
    Euclidean,
    /// `kappa = +1`, S^3.
    Spherical,
    /// `kappa = -1`, H^3.
    Hyperbolic,
}

impl SpaceForm {
    pub fn from_kappa(kappa: i32) -> Result<Self> {
        match kappa {
            0 => Ok(SpaceForm::Euclidean),
            1 => Ok(SpaceForm::Spherical),
            -1 => Ok(SpaceForm::Hyperbolic),
            k => Err(FlowError::InvalidParameter(format!(
                "kappa must be one of 0, 1, -1 (got {k})"
            ))),
        }
    }

    pub fn kappa(self) -> i32 {
        match self {
            SpaceForm::Euclidean => 0,
            SpaceForm::Spherical => 1,
            SpaceForm::Hyperbolic => -1,
        }
    }

    /// Upper end of the radial interval: pi for S^3, infinity otherwise.
    pub fn radial_upper_bound(self) -> f64 {
        match self {
            SpaceForm::Spherical => PI,
            _ => f64::INFINITY,
        }
    }

    /// Strict membership in the open radial interval.
    pub fn contains(self, r: f64) -> bool {
        r > 0.0 && r < self.radial_upper_bound()
    }

    fn check(self, r: f64) -> Result<()> {
        if self.contains(r) {
            Ok(())
        } else {
            Err(FlowError::RadialDomain {
                r,
                kappa: self.kappa(),
            })
        }
    }

    /// The warp function `s_k(r)`: `r`, `sin r` or `sinh r`.
    pub fn warp(self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(self.warp_pair(r).0)
    }

    /// `s_k'(r)`: `1`, `cos r` or `cosh r`.
    pub fn warp_prime(self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(self.warp_pair(r).1)
    }

    /// `(s_k(r), s_k'(r))` without the domain check; callers on hot paths
    /// validate `r` themselves.
    #[inline]
    pub(crate) fn warp_pair(self, r: f64) -> (f64, f64) {
        match self {
            SpaceForm::Euclidean => (r, 1.0),
            SpaceForm::Spherical => r.sin_cos(),
            SpaceForm::Hyperbolic => {
                let e = r.exp();
                let ei = 1.0 / e;
                // sinh loses relative accuracy through the exp difference for
                // small r
                let sh = if r < 0.5 { r.sinh() } else { 0.5 * (e - ei) };
                (sh, 0.5 * (e + ei))
            }
        }
    }

    /// Principal curvature `s_k'(rho)/s_k(rho)` of the geodesic sphere of
    /// radius `rho`. On S^3 this is only positive below the equator, so
    /// `rho < pi/2` is required there.
    pub fn geodesic_sphere_curvature(self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        if self == SpaceForm::Spherical && rho >= FRAC_PI_2 {
            return Err(FlowError::RadialDomain {
                r: rho,
                kappa: self.kappa(),
            });
        }
        let (s, ds) = self.warp_pair(rho);
        Ok(ds / s)
    }
}

impl fmt::Display for SpaceForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SpaceForm::Euclidean => "R3",
            SpaceForm::Spherical => "S3",
            SpaceForm::Hyperbolic => "H3",
        };
        f.write_str(name)
    }
}
