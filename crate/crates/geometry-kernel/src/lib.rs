//! Numeric realization of CDL documents: compile statements into residual
//! constraints, solve for coordinates by damped least squares, and extract
//! statements back out of coordinates.
//!
//! The round trip is the point. `extract_cdl(solve(doc))` recovering the
//! constructive statements of `doc` is the self-consistency oracle the
//! dataset pipeline audits against, and `verify` is the soundness gate that
//! makes "the solver converged" mean "the declared geometry actually
//! holds".

mod compile;
mod constraint;
mod error;
mod extract;
mod figure;
mod solve;

pub use compile::{compile, compile_with, CompileOptions, CompileWarning, ConstraintSystem, Gauge};
pub use constraint::{
    residual, residual_with_gradient, AngleTarget, Constraint, ConstraintKind, LengthTarget,
    ResidualGrad, BETWEEN_MARGIN, DEGENERATE_PENALTY,
};
pub use error::GeometryError;
pub use extract::{declared_segments, extract_cdl, extract_cdl_with, verify, ExtractMode};
pub use figure::{rotate, Figure};
pub use solve::{solve, solve_with, SolveOptions};

/// Minimum pairwise point separation, in gauge units. Figures tighter than
/// this are treated as degenerate: labels would overlap when rendered and
/// angular relations lose meaning.
pub const MIN_SEPARATION: f64 = 0.05;

/// Solver convergence threshold on the largest absolute raw residual.
pub const EPSILON_SOLVE: f64 = 1e-8;

/// Extraction and verification tolerance — two orders of magnitude looser
/// than [`EPSILON_SOLVE`], so a converged figure never flaps at the
/// verification boundary.
pub const EXTRACT_TOL: f64 = 1e-6;

/// Default number of solver restarts before giving up.
pub const DEFAULT_RESTARTS: usize = 8;
