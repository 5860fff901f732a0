//! Inverse curvature flows `dX/dt = F^{-alpha} nu` of star-shaped surfaces in
//! R^3, S^3 and H^3, written as radial graphs over S^2, together with the
//! diagnostics used to check pinching, speed bounds and decay rates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod counterexample;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod reference;
pub mod spaceform;
pub mod speed;
pub mod stepper;

pub use error::{FlowError, Result};
pub use geometry::{CurvatureField, SphericalGrid, SurfaceState};
pub use spaceform::SpaceForm;
pub use speed::{FlowExponent, SpeedFunction};
