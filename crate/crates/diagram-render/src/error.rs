use thiserror::Error;

/// Everything that can go wrong while rendering.
#[derive(Debug, Error)]
pub enum RenderError {
    /// The style carries a non-positive dimension or an oversized margin.
    #[error("invalid style: {reason}")]
    InvalidStyle { reason: String },

    /// The figure has no drawable extent (no points, or all points and
    /// circles coincide), so normalization cannot produce a scale.
    #[error("figure has no drawable extent")]
    DegenerateFigure,

    /// `rasterize` was called but the crate was built without the `raster`
    /// feature. Callers are expected to fall back to vector-only output.
    #[error("raster backend not built; enable the `raster` feature")]
    RasterBackendUnavailable,

    /// The vector text handed to `rasterize` is not the dialect this crate
    /// emits.
    #[error("vector input not understood: {reason}")]
    InvalidVector { reason: String },

    /// PNG encoding failed (effectively unreachable for in-memory buffers,
    /// but the encoder's error type must go somewhere honest).
    #[error("png encoding failed: {reason}")]
    PngEncode { reason: String },
}
