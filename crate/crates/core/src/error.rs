use thiserror::Error;

use crate::manifold::{ChartKind, ManifoldPoint};

#[derive(Debug, Error)]
pub enum Error {
    #[error("chart mismatch: expected {expected:?}, found {found:?}")]
    ChartMismatch { expected: ChartKind, found: ChartKind },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration produced a non-finite state at t = {time}")]
    Integration { time: f64 },

    #[error("requested horizon {requested} exceeds cached horizon {available}")]
    HorizonExceeded { requested: f64, available: f64 },

    #[error("singular base {point}: speed {speed:e} at t = {time}")]
    SingularBase {
        point: ManifoldPoint,
        speed: f64,
        time: f64,
    },

    #[error("target point #{index} {point} is not covered by any candidate")]
    InfeasibleCover { index: usize, point: ManifoldPoint },

    #[error("cannot cover mass above {required} with the available candidates (best {reached})")]
    InfeasibleMeasureCover { required: f64, reached: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("constructor invariant violated: {0}")]
    ConstructorInvariant(String),

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
