//! Optional PNG backend: parse the SVG dialect emitted by this crate and
//! rasterize it with a small supersampling renderer. Everything here is
//! deterministic — fixed sampling grid, fixed rounding, fixed encoder
//! settings — so identical vector text yields identical PNG bytes.

use crate::error::RenderError;
use crate::style::RenderStyle;

/// Built without the `raster` feature: report the backend as missing so the
/// pipeline can fall back to vector-only output.
#[cfg(not(feature = "raster"))]
pub fn rasterize(_vector: &str, style: &RenderStyle) -> Result<Vec<u8>, RenderError> {
    style.validate()?;
    Err(RenderError::RasterBackendUnavailable)
}

/// Rasterize SVG text produced by [`crate::render_vector`] into PNG bytes
/// at the style's canvas size.
#[cfg(feature = "raster")]
pub fn rasterize(vector: &str, style: &RenderStyle) -> Result<Vec<u8>, RenderError> {
    style.validate()?;
    let ops = backend::parse_ops(vector)?;
    let pixels = backend::paint(&ops, style.canvas);
    backend::encode_png(&pixels, style.canvas)
}

#[cfg(feature = "raster")]
mod backend {
    use crate::error::RenderError;

    type Color = [u8; 3];

    /// Painter's-order drawing commands, in SVG pixel coordinates.
    pub(super) enum Op {
        Fill(Color),
        Line {
            a: (f64, f64),
            b: (f64, f64),
            width: f64,
            color: Color,
        },
        Ring {
            center: (f64, f64),
            radius: f64,
            width: f64,
            color: Color,
        },
        Disk {
            center: (f64, f64),
            radius: f64,
            color: Color,
        },
        Glyphs {
            x: f64,
            baseline: f64,
            size: f64,
            color: Color,
            text: String,
        },
    }

    fn invalid(reason: impl Into<String>) -> RenderError {
        RenderError::InvalidVector {
            reason: reason.into(),
        }
    }

    fn parse_color(value: &str) -> Result<Option<Color>, RenderError> {
        if value == "none" {
            return Ok(None);
        }
        let hex = value
            .strip_prefix('#')
            .ok_or_else(|| invalid(format!("unsupported color {value:?}; use #rrggbb")))?;
        if hex.len() != 6 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(invalid(format!("malformed hex color {value:?}")));
        }
        let channel = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).expect("checked hex");
        Ok(Some([channel(0), channel(2), channel(4)]))
    }

    fn parse_f64(value: &str, what: &str) -> Result<f64, RenderError> {
        value
            .parse::<f64>()
            .map_err(|_| invalid(format!("bad number {value:?} for {what}")))
    }

    /// Attributes inherited from enclosing `<g>` elements.
    #[derive(Clone)]
    struct Inherited {
        stroke: Option<Color>,
        fill: Option<Color>,
        stroke_width: f64,
        font_size: f64,
    }

    impl Default for Inherited {
        fn default() -> Self {
            Inherited {
                stroke: None,
                fill: Some([0, 0, 0]),
                stroke_width: 1.0,
                font_size: 16.0,
            }
        }
    }

    struct Tag<'a> {
        name: &'a str,
        closing: bool,
        attrs: Vec<(&'a str, &'a str)>,
        /// Text content, only captured for `<text>` elements.
        content: Option<&'a str>,
    }

    /// Minimal scanner for the rigid XML this crate emits: every attribute
    /// double-quoted, no escapes, text content only inside `<text>`.
    fn next_tag<'a>(svg: &'a str, pos: &mut usize) -> Result<Option<Tag<'a>>, RenderError> {
        let Some(open) = svg[*pos..].find('<') else {
            *pos = svg.len();
            return Ok(None);
        };
        let start = *pos + open;
        let close = svg[start..]
            .find('>')
            .ok_or_else(|| invalid("unterminated tag"))?;
        let inner = &svg[start + 1..start + close];
        *pos = start + close + 1;

        if let Some(name) = inner.strip_prefix('/') {
            return Ok(Some(Tag {
                name: name.trim(),
                closing: true,
                attrs: Vec::new(),
                content: None,
            }));
        }
        let inner = inner.strip_suffix('/').unwrap_or(inner);
        let name_end = inner.find(char::is_whitespace).unwrap_or(inner.len());
        let name = &inner[..name_end];
        let mut attrs = Vec::new();
        let mut rest = inner[name_end..].trim_start();
        while !rest.is_empty() {
            let eq = rest
                .find('=')
                .ok_or_else(|| invalid(format!("attribute without value in <{name}>")))?;
            let attr_name = rest[..eq].trim();
            let after = &rest[eq + 1..];
            let after = after
                .strip_prefix('"')
                .ok_or_else(|| invalid("attribute value must be double-quoted"))?;
            let end = after
                .find('"')
                .ok_or_else(|| invalid("unterminated attribute value"))?;
            attrs.push((attr_name, &after[..end]));
            rest = after[end + 1..].trim_start();
        }

        let content = if name == "text" {
            let text_end = svg[*pos..]
                .find("</text>")
                .ok_or_else(|| invalid("unterminated <text>"))?;
            let content = &svg[*pos..*pos + text_end];
            *pos += text_end; // the closing tag is consumed on the next call
            Some(content)
        } else {
            None
        };
        Ok(Some(Tag {
            name,
            closing: false,
            attrs,
            content,
        }))
    }

    pub(super) fn parse_ops(svg: &str) -> Result<Vec<Op>, RenderError> {
        let mut ops = Vec::new();
        let mut stack = vec![Inherited::default()];
        let mut pos = 0usize;
        while let Some(tag) = next_tag(svg, &mut pos)? {
            let attr = |name: &str| tag.attrs.iter().find(|(n, _)| *n == name).map(|(_, v)| *v);
            if tag.closing {
                if tag.name == "g" && stack.len() > 1 {
                    stack.pop();
                }
                continue;
            }
            let ctx = stack.last().expect("root context always present").clone();
            match tag.name {
                "svg" => {}
                "g" => {
                    let mut child = ctx.clone();
                    if let Some(v) = attr("stroke") {
                        child.stroke = parse_color(v)?;
                    }
                    if let Some(v) = attr("fill") {
                        child.fill = parse_color(v)?;
                    }
                    if let Some(v) = attr("stroke-width") {
                        child.stroke_width = parse_f64(v, "stroke-width")?;
                    }
                    if let Some(v) = attr("font-size") {
                        child.font_size = parse_f64(v, "font-size")?;
                    }
                    stack.push(child);
                }
                "rect" => {
                    if let Some(color) = parse_color(attr("fill").unwrap_or("none"))? {
                        ops.push(Op::Fill(color));
                    }
                }
                "line" => {
                    let get = |name: &str| -> Result<f64, RenderError> {
                        parse_f64(
                            attr(name).ok_or_else(|| invalid(format!("line missing {name}")))?,
                            name,
                        )
                    };
                    if let Some(color) = ctx.stroke {
                        ops.push(Op::Line {
                            a: (get("x1")?, get("y1")?),
                            b: (get("x2")?, get("y2")?),
                            width: ctx.stroke_width,
                            color,
                        });
                    }
                }
                "circle" => {
                    let get = |name: &str| -> Result<f64, RenderError> {
                        parse_f64(
                            attr(name).ok_or_else(|| invalid(format!("circle missing {name}")))?,
                            name,
                        )
                    };
                    let center = (get("cx")?, get("cy")?);
                    let radius = get("r")?;
                    if let Some(color) = ctx.fill {
                        ops.push(Op::Disk {
                            center,
                            radius,
                            color,
                        });
                    }
                    if let Some(color) = ctx.stroke {
                        ops.push(Op::Ring {
                            center,
                            radius,
                            width: ctx.stroke_width,
                            color,
                        });
                    }
                }
                "path" => {
                    let d = attr("d").ok_or_else(|| invalid("path missing d"))?;
                    let mut nums = Vec::new();
                    for token in d.split_whitespace() {
                        if token != "M" && token != "L" {
                            nums.push(parse_f64(token, "path coordinate")?);
                        }
                    }
                    if nums.len() % 2 != 0 {
                        return Err(invalid("path has an odd coordinate count"));
                    }
                    if let Some(color) = ctx.stroke {
                        for pair in nums.chunks(2).collect::<Vec<_>>().windows(2) {
                            ops.push(Op::Line {
                                a: (pair[0][0], pair[0][1]),
                                b: (pair[1][0], pair[1][1]),
                                width: ctx.stroke_width,
                                color,
                            });
                        }
                    }
                }
                "text" => {
                    let get = |name: &str| -> Result<f64, RenderError> {
                        parse_f64(
                            attr(name).ok_or_else(|| invalid(format!("text missing {name}")))?,
                            name,
                        )
                    };
                    if let Some(color) = ctx.fill {
                        ops.push(Op::Glyphs {
                            x: get("x")?,
                            baseline: get("y")?,
                            size: ctx.font_size,
                            color,
                            text: tag.content.unwrap_or("").to_string(),
                        });
                    }
                }
                other => {
                    return Err(invalid(format!("unexpected element <{other}>")));
                }
            }
        }
        Ok(ops)
    }

    /// Supersampling factor. Two samples per axis smooths edges enough for
    /// training imagery while keeping the cost at 4x.
    const SS: u32 = 2;

    /// Test `hit` at every supersample center inside the box and stamp the
    /// color where it reports coverage.
    fn splat(
        buf: &mut [u8],
        side: usize,
        bounds: (f64, f64, f64, f64),
        color: Color,
        hit: &dyn Fn(f64, f64) -> bool,
    ) {
        let (x0, y0, x1, y1) = bounds;
        let to_index = |v: f64| (v * SS as f64).floor() as i64;
        let lo_x = to_index(x0).max(0);
        let hi_x = to_index(x1).min(side as i64 - 1);
        let lo_y = to_index(y0).max(0);
        let hi_y = to_index(y1).min(side as i64 - 1);
        for py in lo_y..=hi_y {
            for px in lo_x..=hi_x {
                let sx = (px as f64 + 0.5) / SS as f64;
                let sy = (py as f64 + 0.5) / SS as f64;
                if hit(sx, sy) {
                    let at = (py as usize * side + px as usize) * 3;
                    buf[at..at + 3].copy_from_slice(&color);
                }
            }
        }
    }

    pub(super) fn paint(ops: &[Op], canvas: u32) -> Vec<u8> {
        let side = (canvas * SS) as usize;
        let mut buf = vec![255u8; side * side * 3];

        for op in ops {
            match op {
                Op::Fill(color) => {
                    for px in buf.chunks_exact_mut(3) {
                        px.copy_from_slice(color);
                    }
                }
                Op::Line {
                    a,
                    b,
                    width,
                    color,
                } => {
                    let half = width / 2.0;
                    let (ax, ay) = *a;
                    let (bx, by) = *b;
                    let bounds = (
                        ax.min(bx) - half,
                        ay.min(by) - half,
                        ax.max(bx) + half,
                        ay.max(by) + half,
                    );
                    splat(&mut buf, side, bounds, *color, &|sx, sy| {
                        dist_to_segment(sx, sy, ax, ay, bx, by) <= half
                    });
                }
                Op::Ring {
                    center,
                    radius,
                    width,
                    color,
                } => {
                    let half = width / 2.0;
                    let (cx, cy) = *center;
                    let r = *radius;
                    let bounds = (cx - r - half, cy - r - half, cx + r + half, cy + r + half);
                    splat(&mut buf, side, bounds, *color, &|sx, sy| {
                        let d = ((sx - cx).powi(2) + (sy - cy).powi(2)).sqrt();
                        (d - r).abs() <= half
                    });
                }
                Op::Disk {
                    center,
                    radius,
                    color,
                } => {
                    let (cx, cy) = *center;
                    let r = *radius;
                    let bounds = (cx - r, cy - r, cx + r, cy + r);
                    splat(&mut buf, side, bounds, *color, &|sx, sy| {
                        (sx - cx).powi(2) + (sy - cy).powi(2) <= r * r
                    });
                }
                Op::Glyphs {
                    x,
                    baseline,
                    size,
                    color,
                    text,
                } => {
                    let chars: Vec<char> = text.chars().collect();
                    if chars.is_empty() {
                        continue;
                    }
                    // Glyphs are 5x7 on a 6-unit advance; the cap height
                    // spans the full 7 rows, scaled to the font size.
                    let k = size / 7.0;
                    let total = (6.0 * chars.len() as f64 - 1.0) * k;
                    let x0 = x - total / 2.0;
                    let top = baseline - 7.0 * k;
                    let bounds = (x0, top, x0 + total, *baseline);
                    splat(&mut buf, side, bounds, *color, &|sx, sy| {
                        let u = (sx - x0) / k;
                        let v = (sy - top) / k;
                        if u < 0.0 || v < 0.0 || v >= 7.0 {
                            return false;
                        }
                        let slot = (u / 6.0).floor() as usize;
                        if slot >= chars.len() {
                            return false;
                        }
                        let col = u - 6.0 * slot as f64;
                        if col >= 5.0 {
                            return false;
                        }
                        let rows = glyph(chars[slot]);
                        let bit = 4 - col.floor() as u32;
                        (rows[v.floor() as usize] >> bit) & 1 == 1
                    });
                }
            }
        }

        // Box-filter the supersampled buffer down to the canvas.
        let out_side = canvas as usize;
        let mut out = vec![0u8; out_side * out_side * 3];
        for y in 0..out_side {
            for x in 0..out_side {
                for c in 0..3 {
                    let mut sum = 0u32;
                    for dy in 0..SS as usize {
                        for dx in 0..SS as usize {
                            let sy = y * SS as usize + dy;
                            let sx = x * SS as usize + dx;
                            sum += u32::from(buf[(sy * side + sx) * 3 + c]);
                        }
                    }
                    let n = SS * SS;
                    out[(y * out_side + x) * 3 + c] = ((sum + n / 2) / n) as u8;
                }
            }
        }
        out
    }

    fn dist_to_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = dx * dx + dy * dy;
        let t = if len2 <= 0.0 {
            0.0
        } else {
            (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
        };
        let (qx, qy) = (ax + t * dx, ay + t * dy);
        ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
    }

    pub(super) fn encode_png(pixels: &[u8], canvas: u32) -> Result<Vec<u8>, RenderError> {
        let mut out = Vec::new();
        let mut encoder = png::Encoder::new(&mut out, canvas, canvas);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().map_err(|e| RenderError::PngEncode {
            reason: e.to_string(),
        })?;
        writer
            .write_image_data(pixels)
            .map_err(|e| RenderError::PngEncode {
                reason: e.to_string(),
            })?;
        writer.finish().map_err(|e| RenderError::PngEncode {
            reason: e.to_string(),
        })?;
        Ok(out)
    }

    /// 5x7 bitmap font covering point-label text: A-Z and digit suffixes.
    /// Bit 4 is the leftmost column. Unknown characters draw a hollow box.
    fn glyph(c: char) -> &'static [u8; 7] {
        match c {
            'A' => &[0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
            'B' => &[0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E],
            'C' => &[0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E],
            'D' => &[0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E],
            'E' => &[0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F],
            'F' => &[0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10],
            'G' => &[0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F],
            'H' => &[0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
            'I' => &[0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
            'J' => &[0x01, 0x01, 0x01, 0x01, 0x11, 0x11, 0x0E],
            'K' => &[0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
            'L' => &[0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F],
            'M' => &[0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11],
            'N' => &[0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11],
            'O' => &[0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
            'P' => &[0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
            'Q' => &[0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D],
            'R' => &[0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11],
            'S' => &[0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E],
            'T' => &[0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
            'U' => &[0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
            'V' => &[0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04],
            'W' => &[0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11],
            'X' => &[0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11],
            'Y' => &[0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04],
            'Z' => &[0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F],
            '0' => &[0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
            '1' => &[0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
            '2' => &[0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
            '3' => &[0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
            '4' => &[0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
            '5' => &[0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
            '6' => &[0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
            '7' => &[0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
            '8' => &[0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
            '9' => &[0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
            _ => &[0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F],
        }
    }

}
