use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated a type invariant (e.g. a non-positive thickness).
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("incidence angle {theta} rad outside the open interval (-pi/2, pi/2)")]
    AngleOutOfDomain { theta: f64 },

    /// `n^2 - (n_air sin theta)^2` is not positive: no transmitted ray.
    #[error("no refracted ray at theta = {theta} rad (radicand {radicand})")]
    NoRefraction { theta: f64, radicand: f64 },

    /// Post-selection probability below the floor, so the conditional
    /// moments are a 0/0 form.
    #[error("post-selection probability {probability:e} below floor {floor:e}")]
    DegeneratePostSelection { probability: f64, floor: f64 },

    /// The weak value is singular at epsilon = 0.
    #[error("weak value is singular at epsilon = 0")]
    SingularSelection,

    #[error("grid spacing {spacing:e} m too coarse (limit {limit:e} m)")]
    GridTooCoarse { spacing: f64, limit: f64 },

    #[error("grid half-width {halfwidth:e} m does not cover the pointer (need {required:e} m)")]
    GridTooNarrow { halfwidth: f64, required: f64 },

    #[error("invalid range [{min}, {max}]")]
    InvalidRange { min: f64, max: f64 },

    #[error("point {index} not found ({available} points below pi/2)")]
    PointNotFound { index: usize, available: usize },

    #[error("classical slope is zero; amplification undefined")]
    ZeroClassicalSlope,

    #[error("{free} free parameters but the data only support {supported}")]
    RankDeficient { free: usize, supported: usize },
}
