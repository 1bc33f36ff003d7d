//! Turns a solved figure into a labeled diagram.
//!
//! The vector path is the source of truth: [`render_vector`] draws every
//! declared segment, circle, and point, places each point's label with an
//! eight-direction compass heuristic, and prints with a fixed number format
//! so the same inputs always produce the same bytes. [`rasterize`] converts
//! that SVG text to a PNG when the crate is built with the `raster` feature,
//! and reports [`RenderError::RasterBackendUnavailable`] otherwise so
//! callers can fall back to vector-only output.

mod error;
mod raster;
mod style;
mod vector;

pub use error::RenderError;
pub use raster::rasterize;
pub use style::RenderStyle;
pub use vector::{render_vector, render_vector_with_stats, RenderStats};
