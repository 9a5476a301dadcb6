use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate immersion: {0}")]
    Degeneracy(String),
    #[error("traceless form is singular (det = {det:e})")]
    Singular { det: f64 },
    #[error("invalid parameters: {0}")]
    Validation(String),
    #[error("hypothesis not satisfied: {0}")]
    Unsupported(String),
    #[error("rank deficient sample: {0}")]
    Rank(String),
    #[error("no closed-form reference for this surface")]
    NoReference,
    #[error("chart {chart} node {node:?}: {source}")]
    AtNode {
        chart: usize,
        node: [f64; 4],
        #[source]
        source: Box<GeomError>,
    },
}

pub type Result<T> = std::result::Result<T, GeomError>;
