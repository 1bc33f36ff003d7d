use crate::error::RenderError;

/// Visual knobs for a render. The canvas is square; all lengths are in
/// pixels of the output coordinate system.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    /// Side of the square canvas.
    pub canvas: u32,
    /// Blank border kept free of geometry (labels may intrude).
    pub margin: u32,
    /// Width of segment and circle strokes.
    pub stroke_width: f64,
    /// Radius of the filled dot drawn at each point.
    pub point_radius: f64,
    /// Label text size.
    pub font_size: f64,
    /// Gap between a point's dot and its label box.
    pub label_offset: f64,
    /// Background fill, as a CSS color like `#ffffff`.
    pub background: String,
    /// Draw every stroke and fill in near-black instead of the palette.
    pub monochrome: bool,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            canvas: 512,
            margin: 48,
            stroke_width: 2.0,
            point_radius: 3.5,
            font_size: 16.0,
            label_offset: 6.0,
            background: "#ffffff".to_string(),
            monochrome: false,
        }
    }
}

impl RenderStyle {
    pub(crate) fn validate(&self) -> Result<(), RenderError> {
        let bad = |reason: &str| {
            Err(RenderError::InvalidStyle {
                reason: reason.to_string(),
            })
        };
        if self.canvas == 0 {
            return bad("canvas must be positive");
        }
        if self.margin == 0 {
            return bad("margin must be positive");
        }
        if self.margin * 2 >= self.canvas {
            return bad("margin must be less than half the canvas");
        }
        for (value, name) in [
            (self.stroke_width, "stroke width"),
            (self.point_radius, "point radius"),
            (self.font_size, "font size"),
            (self.label_offset, "label offset"),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return bad(&format!("{name} must be positive and finite"));
            }
        }
        Ok(())
    }
}
