use num_rational::Rational64;
use thiserror::Error;

/// Structural invariant violations, independent of any source text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("{0}")]
    BadLabel(String),
    #[error("segment endpoints coincide at {0}")]
    CoincidentEndpoints(String),
    #[error("shape needs at least one edge")]
    EmptyShape,
    #[error("shape edge cycle is open: edge ends at {end} but the next edge starts at {start}")]
    OpenCycle { end: String, start: String },
    #[error("collinear sequence needs at least 3 points, got {0}")]
    ShortCollinear(usize),
    #[error("repeated label {0} in point sequence")]
    RepeatedLabel(String),
    #[error("cocircular group needs at least 1 on-circle point")]
    EmptyCocircular,
    #[error("circle center {0} appears among its on-circle points")]
    CenterOnCircle(String),
    #[error("arc center {0} coincides with an arc endpoint")]
    ArcCenterOnArc(String),
    #[error("angle points must be pairwise distinct")]
    DegenerateAngle,
    #[error("length literal must be non-negative, got {0}")]
    NegativeLength(Rational64),
    #[error("angle literal must lie strictly between 0 and 180, got {0}")]
    AngleOutOfRange(Rational64),
    #[error("Equal needs at least one measure term")]
    LiteralOnlyEqual,
    #[error("Equal cannot relate a length to an angle")]
    MixedDimensions,
}

/// Errors from parsing CDL text, with source positions (1-based line/column).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CdlError {
    #[error("syntax error at {line}:{col}: found {found}, expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        found: String,
        expected: String,
    },
    #[error("arity error at {line}:{col}: {statement} expects {expected}, got {found}")]
    Arity {
        line: usize,
        col: usize,
        statement: String,
        expected: String,
        found: usize,
    },
    #[error("invalid literal at {line}:{col}: {reason}")]
    InvalidLiteral {
        line: usize,
        col: usize,
        reason: String,
    },
    #[error("invalid statement at {line}:{col}: {reason}")]
    InvalidStatement {
        line: usize,
        col: usize,
        reason: String,
    },
    #[error("dangling label {label}: {statement} refers to a point no construction statement mentions")]
    DanglingLabel { label: String, statement: String },
}

impl CdlError {
    /// Wrap a structural violation with the position of the statement that
    /// produced it. Arity-flavored violations map to [`CdlError::Arity`].
    pub(crate) fn from_validation(err: ValidationError, line: usize, col: usize, name: &str) -> Self {
        match err {
            ValidationError::EmptyShape => CdlError::Arity {
                line,
                col,
                statement: name.to_string(),
                expected: "at least one edge".into(),
                found: 0,
            },
            ValidationError::ShortCollinear(n) => CdlError::Arity {
                line,
                col,
                statement: name.to_string(),
                expected: "at least 3 points".into(),
                found: n,
            },
            ValidationError::EmptyCocircular => CdlError::Arity {
                line,
                col,
                statement: name.to_string(),
                expected: "a center and at least 1 on-circle point".into(),
                found: 1,
            },
            ValidationError::NegativeLength(_) | ValidationError::AngleOutOfRange(_) => {
                CdlError::InvalidLiteral {
                    line,
                    col,
                    reason: err.to_string(),
                }
            }
            other => CdlError::InvalidStatement {
                line,
                col,
                reason: other.to_string(),
            },
        }
    }
}
