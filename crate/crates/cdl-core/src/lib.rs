//! Core types and text format for the geometric formal language.
//!
//! A diagram is described by a [`CdlDocument`]: a set of construction
//! statements (shapes, collinear runs, cocircular groups) plus a set of image
//! statements (length/angle equalities, parallel and perpendicular relations).
//! Statements are canonicalized on construction, so two documents describing
//! the same diagram compare equal and print to identical text.
//!
//! The text format is one statement per line (`;` also separates statements),
//! UTF-8 with LF line endings:
//!
//! ```text
//! Shape(AB,BC,CA)
//! Collinear(ADC)
//! Cocircular(O,ABC)
//! Equal(LengthOfLine(AB),5)
//! Equal(MeasureOfAngle(ABC),90)
//! ParallelBetweenLine(AB,CD)
//! PerpendicularBetweenLine(AB,CD)
//! ```
//!
//! Numeric literals are exact rationals (`5`, `9/2`); decimals in the input
//! (`4.5`) are converted on parse, so printed text is byte-stable.

mod document;
mod error;
mod label;
mod parser;
mod statement;

pub use document::{statement_set_diff, CdlDocument, DocumentDiff, SectionDiff};
pub use error::{CdlError, ValidationError};
pub use label::PointLabel;
pub use parser::{parse, parse_statement, ParsedStatement};
pub use statement::{
    canonical_angle, ConsStatement, Edge, EqualOperand, ImgStatement, LineSeg, MeasureTerm,
};

pub use num_rational::Rational64;

/// Statement kinds the parser recognizes. Anything else is a syntax error,
/// never silently ignored; extending the language means extending this
/// registry and the dispatch in [`parser`].
pub const STATEMENT_REGISTRY: &[&str] = &[
    "Shape",
    "Collinear",
    "Cocircular",
    "Equal",
    "ParallelBetweenLine",
    "PerpendicularBetweenLine",
];

/// Measure terms allowed inside `Equal(...)`.
pub const MEASURE_REGISTRY: &[&str] = &["LengthOfLine", "MeasureOfAngle"];

/// Render a document to canonical text. Construction statements come first,
/// then image statements, each section in its canonical order.
pub fn print(doc: &CdlDocument) -> String {
    doc.to_text()
}
