use thiserror::Error;

use crate::interval::Interval;
use crate::setinv::Subpaving;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An atom was applied outside its natural domain. `node` is the DAG
    /// index when the violation happened during expression evaluation.
    #[error("{op} is undefined on {arg}{}", node.map(|n| format!(" (node {n})")).unwrap_or_default())]
    DomainViolation {
        op: &'static str,
        arg: Interval,
        node: Option<usize>,
    },

    #[error("operation on an empty interval")]
    EmptyOperand,

    #[error("invalid interval bounds [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("range {range} is not contained in enclosure {enclosure}")]
    NotNested { range: Interval, enclosure: Interval },

    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown identifier `{name}` at {line}:{column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },

    #[error("`{name}` takes {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("malformed expression graph: {0}")]
    InvalidExpr(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {coord} of the grid domain has zero width")]
    DegenerateGrid { coord: usize },

    #[error("grid resolution must be at least 1")]
    ZeroResolution,

    #[error("models are defined on different grids")]
    GridMismatch,

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("point lies outside the model domain")]
    PointOutsideDomain,

    #[error("cannot bisect a box of zero width")]
    DegenerateBox,

    #[error("iteration budget exhausted after {iterations} iterations")]
    BudgetExceeded {
        iterations: u64,
        partial: Box<Subpaving>,
    },

    #[error("enumeration of {cells} cells exceeds the cap of {cap}")]
    CapExceeded { cells: u128, cap: u128 },

    #[error("invalid problem field `{field}`: {message}")]
    InvalidProblem { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, arg: Interval) -> Self {
        Error::DomainViolation {
            op,
            arg,
            node: None,
        }
    }

    pub(crate) fn at_node(self, index: usize) -> Self {
        match self {
            Error::DomainViolation { op, arg, node: None } => Error::DomainViolation {
                op,
                arg,
                node: Some(index),
            },
            other => other,
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidProblem {
            field: field.into(),
            message: message.into(),
        }
    }
}
