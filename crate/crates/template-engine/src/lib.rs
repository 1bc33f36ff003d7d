//! Shape templates that expand into labeled diagram documents.
//!
//! A template says *what kind* of figure to draw — "an isosceles triangle
//! sharing its base with a rectangle", "a circle crossed by a secant line" —
//! without committing to any particular measurements. Instantiating a
//! template with a seed draws every free parameter from a small rational
//! grid and produces the concrete artifacts downstream stages consume: a
//! canonical document describing the figure, a prose caption naming its
//! shapes and labels, and a prototype coordinate assignment that already
//! satisfies the document (a ready warm start for numeric solving).
//!
//! Templates come from three places: the bundled starter set
//! ([`starter_library`]), human-edited TOML files ([`load_library`]), and
//! programmatic composition of two primitives ([`compose`]). All three
//! paths go through the same validation, so a template that loads at all
//! can be instantiated with any seed.

mod compose;
mod error;
mod instantiate;
mod library;
mod types;
mod validate;

pub use compose::compose;
pub use error::TemplateError;
pub use instantiate::instantiate;
pub use library::{load_library, parse_library, starter_library, Library};
pub use types::{
    AngleRange, AttachmentRelation, CountRange, Instantiation, LengthRange, QuadVariant,
    RelationKind, ShapePrimitive, Template, TriangleVariant,
};
