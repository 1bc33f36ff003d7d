//! Error surface for template loading, validation, and instantiation.

use thiserror::Error;

/// Everything that can go wrong between reading a library file and holding
/// a finished instantiation.
#[derive(Debug, Error)]
pub enum TemplateError {
    /// The library file could not be read at all.
    #[error("cannot read template library {path}: {reason}")]
    Io { path: String, reason: String },

    /// The library file is not valid TOML or declares a schema version this
    /// build does not understand.
    #[error("template library parse error: {reason}")]
    Parse { reason: String },

    /// Two templates in one library share an id.
    #[error("duplicate template id {0:?}")]
    DuplicateTemplateId(String),

    /// A relation's operands or selectors do not fit the template
    /// structurally: an index out of range, a missing or superfluous second
    /// operand, selectors that do not exist on the operand.
    #[error("template {template:?}: relation {index} is malformed: {reason}")]
    InvalidRelationArity {
        template: String,
        index: usize,
        reason: String,
    },

    /// A relation is structurally well-formed but its kind cannot apply to
    /// its operand primitives (inscribing a trapezoid, sharing an edge with
    /// a circle, posing one primitive twice, ...).
    #[error("template {template:?}: relation {index} is incompatible: {reason}")]
    IncompatibleRelation {
        template: String,
        index: usize,
        reason: String,
    },

    /// A primitive's parameter ranges or the caption pattern violate the
    /// template contract.
    #[error("template {template:?}: {reason}")]
    InvalidTemplate { template: String, reason: String },

    /// Instantiation needs more point labels than the single-letter alphabet
    /// provides.
    #[error("template {template:?} needs {needed} point labels; the alphabet has 26")]
    LabelExhaustion { template: String, needed: usize },
}
