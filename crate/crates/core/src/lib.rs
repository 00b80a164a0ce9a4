//! Numerical estimation of classical and speed-rescaled topological entropy
//! for vector fields on a few model closed manifolds.

pub mod error;
pub mod estimators;
pub mod flows;
pub mod lemmas;
pub mod manifold;
pub mod measure;
pub mod metrics;
pub mod orbits;
pub mod profiles;

pub use error::{Error, Result};
pub use estimators::{
    CountTable, CoverReport, EntropyEstimate, EstimateMode, EstimatorConfig, IntegrationConfig,
    PackReport, SampleSpec,
};
pub use flows::{FieldValue, FlowSpec, FlowSummary, Trajectory};
pub use manifold::{CatMatrix, ChartKind, ChartSpec, ManifoldPoint};
pub use metrics::{MetricQuery, TrajectoryCache};
