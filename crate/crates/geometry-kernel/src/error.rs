use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("unbound label {label}: {statement} references a point the document never constructs")]
    UnboundLabel { label: String, statement: String },

    #[error(
        "solver did not converge: best max-residual {best_residual:.3e} after {restarts} restarts"
    )]
    NonConvergence { best_residual: f64, restarts: usize },

    #[error("degenerate figure: {a} and {b} are {dist:.4} apart (min separation {min_sep})")]
    DegenerateFigure {
        a: String,
        b: String,
        dist: f64,
        min_sep: f64,
    },

    #[error("statement does not hold in the figure: {statement} (error {error:.3e})")]
    VerifyFailed { statement: String, error: f64 },

    #[error("figure text is malformed at line {line}: {reason}")]
    FigureParse { line: usize, reason: String },
}
