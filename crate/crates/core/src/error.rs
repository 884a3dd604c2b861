//! Error type shared by all core modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample {value} at node {node:?}")]
    NonFiniteSample { node: Vec<f64>, value: f64 },

    #[error("ball (center {center:?}, radius {radius}) does not intersect the grid box")]
    EmptyBallIntersection { center: Vec<f64>, radius: f64 },

    #[error("ball radius {radius} is below the grid resolution {spacing}")]
    RadiusBelowResolution { radius: f64, spacing: f64 },

    #[error("scale {scale} below resolution: need at least half the grid spacing {spacing}")]
    ScaleBelowResolution { scale: f64, spacing: f64 },

    #[error("kernel dictionary construction failed: {0}")]
    DictionaryConstruction(String),

    #[error("weight evaluation overflowed; exponent {gamma} is outside the usable range for p = {p} (keep -n < gamma and gamma*(1-p') > -n)")]
    WeightOverflow { gamma: f64, p: f64 },

    #[error("phi function vanishes (value {value}) at x = {x:?}, r = {r}")]
    PhiVanishes { x: Vec<f64>, r: f64, value: f64 },

    #[error("tail integral did not converge under horizon doubling (last value {last})")]
    DivergentTail { last: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
