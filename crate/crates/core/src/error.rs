use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a converged dual state could not be turned into a primal solution.
#[derive(Debug, Clone, PartialEq)]
pub enum DegenerateReason {
    /// A node has more than `b` strictly negative adjusted lengths.
    ExcessNegative { node: usize, count: usize },
    /// A connected component of near-zero edges is too large to search.
    ComponentTooLarge { edges: usize, limit: usize },
    /// No {0, 1/2, 1} assignment of a near-zero component meets the residual degrees.
    NoFeasibleAssignment { node: usize },
}

impl fmt::Display for DegenerateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegenerateReason::ExcessNegative { node, count } => {
                write!(f, "node {node} has {count} negative adjusted edges")
            }
            DegenerateReason::ComponentTooLarge { edges, limit } => {
                write!(f, "zero component with {edges} edges exceeds limit {limit}")
            }
            DegenerateReason::NoFeasibleAssignment { node } => {
                write!(f, "no feasible assignment for the zero component containing node {node}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, msg: String },

    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("node {node} has degree {degree}, at least 3 required")]
    MinDegree { node: usize, degree: usize },

    #[error("malformed graph: {0}")]
    Structure(String),

    #[error("node {node} has degree {degree}, the update needs more than {b}")]
    Degree { node: usize, degree: usize, b: usize },

    #[error("degenerate extraction: {0}")]
    DegenerateExtraction(DegenerateReason),

    #[error("graph has {edges} edges, enumeration limit is {limit}")]
    TooLarge { edges: usize, limit: usize },

    #[error("no assignment satisfies every degree constraint")]
    Infeasible,

    #[error("solve failed after {restarts} restarts: {last}")]
    SolveFailed { restarts: usize, last: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
