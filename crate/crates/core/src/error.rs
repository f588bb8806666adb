use thiserror::Error;

use crate::catalog::ParseError;
use crate::jet::JetError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("singular metric at {point:?}: det = {det:e}")]
    SingularMetric { point: Vec<f64>, det: f64 },
    #[error("{context}: expected dimension {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("not a Killing reduction: d/dx4 of g[{row},{col}] = {residual:e} at {point:?}")]
    NotKilling {
        row: usize,
        col: usize,
        residual: f64,
        point: Vec<f64>,
    },
    #[error("signature error: {0}")]
    Signature(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown geometry `{0}`")]
    UnknownGeometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("field evaluation failed: {0}")]
    Field(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
