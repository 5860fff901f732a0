use thiserror::Error;

/// Failures raised by the geometry, flow and diagnostics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("radial coordinate {r} outside the domain of the space form with kappa = {kappa}")]
    RadialDomain { r: f64, kappa: i32 },

    #[error("principal curvatures ({lambda1}, {lambda2}) left the admissible cone of `{speed}`")]
    ConeViolation {
        speed: String,
        lambda1: f64,
        lambda2: f64,
    },

    #[error("numerical blow-up: {0}")]
    NumericalBlowup(String),

    #[error("t = {t} is not before the equator time {t_max}")]
    PastEquator { t: f64, t_max: f64 },

    #[error("insufficient data for a fit: {found} usable samples, need {needed}")]
    InsufficientData { found: usize, needed: usize },

    #[error("degenerate choice: c0 = {0:e} is effectively zero")]
    DegenerateChoice(f64),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, FlowError>;
