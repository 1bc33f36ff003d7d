//! SVG emission: normalize the figure into the canvas, draw declared
//! structure, place labels, and print with a fixed number format so the
//! output is byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use cdl_core::{
    CdlDocument, EqualOperand, ImgStatement, MeasureTerm, PointLabel, Rational64,
};
use geometry_kernel::{declared_segments, Figure};

use crate::error::RenderError;
use crate::style::RenderStyle;

/// Palette used when `monochrome` is off.
const COLOR_SEGMENT: &str = "#1a1a1a";
const COLOR_CIRCLE: &str = "#2563eb";
const COLOR_POINT: &str = "#b91c1c";
const COLOR_LABEL: &str = "#111111";
const COLOR_MONO: &str = "#111111";

/// Everything the emitter measures about its own output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderStats {
    /// Pairs of label bounding boxes that ended up intersecting. Zero means
    /// the compass heuristic found clean spots for every label.
    pub label_overlaps: usize,
}

/// Render to SVG text. Identical `(figure, doc, style)` inputs produce
/// identical bytes.
pub fn render_vector(
    figure: &Figure,
    doc: &CdlDocument,
    style: &RenderStyle,
) -> Result<String, RenderError> {
    render_vector_with_stats(figure, doc, style).map(|(svg, _)| svg)
}

/// Like [`render_vector`], also reporting layout statistics.
pub fn render_vector_with_stats(
    figure: &Figure,
    doc: &CdlDocument,
    style: &RenderStyle,
) -> Result<(String, RenderStats), RenderError> {
    style.validate()?;
    let map = Normalization::fit(figure, style)?;

    let points = figure.points();
    let canvas = style.canvas;
    let sw = style.stroke_width;

    let (seg_color, circ_color, point_color, label_color) = if style.monochrome {
        (COLOR_MONO, COLOR_MONO, COLOR_MONO, COLOR_MONO)
    } else {
        (COLOR_SEGMENT, COLOR_CIRCLE, COLOR_POINT, COLOR_LABEL)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{canvas}\" height=\"{canvas}\" viewBox=\"0 0 {canvas} {canvas}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{canvas}\" height=\"{canvas}\" fill=\"{}\"/>",
        style.background
    );

    // Declared segments, in canonical set order.
    let _ = writeln!(
        svg,
        "<g fill=\"none\" stroke=\"{seg_color}\" stroke-width=\"{}\" stroke-linecap=\"round\">",
        fmt(sw)
    );
    for seg in declared_segments(doc) {
        let (Some(&p), Some(&q)) = (points.get(&seg.a()), points.get(&seg.b())) else {
            continue;
        };
        let (x1, y1) = map.apply(p);
        let (x2, y2) = map.apply(q);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
            fmt(x1),
            fmt(y1),
            fmt(x2),
            fmt(y2)
        );
    }
    let _ = writeln!(svg, "</g>");

    // Declared circles, keyed by center label.
    let _ = writeln!(
        svg,
        "<g fill=\"none\" stroke=\"{circ_color}\" stroke-width=\"{}\">",
        fmt(sw)
    );
    for (center, radius) in figure.circles() {
        let Some(&c) = points.get(center) else {
            continue;
        };
        let (cx, cy) = map.apply(c);
        let _ = writeln!(
            svg,
            "<circle class=\"circ\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
            fmt(cx),
            fmt(cy),
            fmt(radius * map.scale)
        );
    }
    let _ = writeln!(svg, "</g>");

    // Right-angle markers, deduplicated across statements.
    let marker_arm = 3.0 * sw + 6.0;
    let _ = writeln!(
        svg,
        "<g fill=\"none\" stroke=\"{seg_color}\" stroke-width=\"{}\">",
        fmt((sw * 0.6).max(1.0))
    );
    for (p, q, r) in right_angle_corners(doc) {
        let (Some(&pp), Some(&qq), Some(&rr)) = (points.get(&p), points.get(&q), points.get(&r))
        else {
            continue;
        };
        let v = map.apply(qq);
        let a = map.apply(pp);
        let b = map.apply(rr);
        let Some(u1) = unit((a.0 - v.0, a.1 - v.1)) else {
            continue;
        };
        let Some(u2) = unit((b.0 - v.0, b.1 - v.1)) else {
            continue;
        };
        let m1 = (v.0 + u1.0 * marker_arm, v.1 + u1.1 * marker_arm);
        let m3 = (v.0 + u2.0 * marker_arm, v.1 + u2.1 * marker_arm);
        let m2 = (m1.0 + u2.0 * marker_arm, m1.1 + u2.1 * marker_arm);
        let _ = writeln!(
            svg,
            "<path class=\"ra\" d=\"M {} {} L {} {} L {} {}\"/>",
            fmt(m1.0),
            fmt(m1.1),
            fmt(m2.0),
            fmt(m2.1),
            fmt(m3.0),
            fmt(m3.1)
        );
    }
    let _ = writeln!(svg, "</g>");

    // Point dots.
    let _ = writeln!(svg, "<g fill=\"{point_color}\">");
    for &p in points.values() {
        let (cx, cy) = map.apply(p);
        let _ = writeln!(
            svg,
            "<circle class=\"pt\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
            fmt(cx),
            fmt(cy),
            fmt(style.point_radius)
        );
    }
    let _ = writeln!(svg, "</g>");

    // Labels last, on top of everything.
    let (placed, overlaps) = place_labels(points, &map, style);
    let _ = writeln!(
        svg,
        "<g font-family=\"Helvetica, Arial, sans-serif\" font-size=\"{}\" fill=\"{label_color}\" text-anchor=\"middle\">",
        fmt(style.font_size)
    );
    for (label, rect) in &placed {
        let (cx, cy) = rect.center();
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\">{label}</text>",
            fmt(cx),
            fmt(cy + style.font_size * 0.35)
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");

    Ok((
        svg,
        RenderStats {
            label_overlaps: overlaps,
        },
    ))
}

/// Fixed-point formatting: every coordinate prints with exactly two
/// decimals, so output bytes depend only on the rounded values.
fn fmt(v: f64) -> String {
    let s = format!("{v:.2}");
    // Tiny negatives round to "-0.00", which is the same value as "0.00"
    // but a different byte string; collapse them.
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn unit(v: (f64, f64)) -> Option<(f64, f64)> {
    let n = (v.0 * v.0 + v.1 * v.1).sqrt();
    if n < 1e-12 {
        None
    } else {
        Some((v.0 / n, v.1 / n))
    }
}

/// Affine map from figure coordinates into the canvas, y flipped so
/// counter-clockwise stays visually counter-clockwise.
struct Normalization {
    scale: f64,
    x_off: f64,
    y_off: f64,
}

impl Normalization {
    fn fit(figure: &Figure, style: &RenderStyle) -> Result<Self, RenderError> {
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        let mut include = |x: f64, y: f64| {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        };
        for &(x, y) in figure.points().values() {
            include(x, y);
        }
        for (center, r) in figure.circles() {
            if let Some(&(x, y)) = figure.points().get(center) {
                include(x - r, y - r);
                include(x + r, y + r);
            }
        }
        let width = max_x - min_x;
        let height = max_y - min_y;
        let span = width.max(height);
        if !span.is_finite() || span < 1e-9 {
            return Err(RenderError::DegenerateFigure);
        }
        let avail = f64::from(style.canvas - 2 * style.margin);
        let scale = avail / span;
        let margin = f64::from(style.margin);
        // Center the smaller extent inside the square working area.
        let x_off = margin + (avail - width * scale) / 2.0 - min_x * scale;
        let y_top = margin + (avail - height * scale) / 2.0;
        let y_off = y_top + max_y * scale;
        Ok(Normalization {
            scale,
            x_off,
            y_off,
        })
    }

    fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        (p.0 * self.scale + self.x_off, self.y_off - p.1 * self.scale)
    }
}

/// Corners that should carry a right-angle marker: angle literals of 90 and
/// perpendicular segment pairs that share an endpoint. Returned as
/// `(arm, vertex, arm)` triples, deduplicated.
fn right_angle_corners(doc: &CdlDocument) -> BTreeSet<(PointLabel, PointLabel, PointLabel)> {
    let ninety = Rational64::from_integer(90);
    let mut corners = BTreeSet::new();
    for stmt in doc.img() {
        match stmt {
            ImgStatement::Equal(
                EqualOperand::Term(MeasureTerm::MeasureOfAngle(p, q, r)),
                EqualOperand::Literal(v),
            ) if *v == ninety => {
                corners.insert((*p, *q, *r));
            }
            ImgStatement::PerpendicularBetweenLine(s1, s2) => {
                let ends1 = [s1.a(), s1.b()];
                let ends2 = [s2.a(), s2.b()];
                let shared: Vec<PointLabel> = ends1
                    .iter()
                    .copied()
                    .filter(|e| ends2.contains(e))
                    .collect();
                if let [q] = shared[..] {
                    let p = if s1.a() == q { s1.b() } else { s1.a() };
                    let r = if s2.a() == q { s2.b() } else { s2.a() };
                    let (p, r) = if p <= r { (p, r) } else { (r, p) };
                    corners.insert((p, q, r));
                }
            }
            _ => {}
        }
    }
    corners
}

/// Axis-aligned box in canvas coordinates.
#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Rect {
    fn centered(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Rect {
            x0: cx - w / 2.0,
            y0: cy - h / 2.0,
            x1: cx + w / 2.0,
            y1: cy + h / 2.0,
        }
    }

    fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    fn overlap_area(&self, other: &Rect) -> f64 {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }
}

/// Compass directions in the order they are tried. Northeast first (the
/// textbook default), horizontals before the verticals that are most likely
/// to collide with strokes.
const COMPASS: [(f64, f64); 8] = [
    (1.0, -1.0),
    (-1.0, -1.0),
    (1.0, 1.0),
    (-1.0, 1.0),
    (1.0, 0.0),
    (-1.0, 0.0),
    (0.0, -1.0),
    (0.0, 1.0),
];

/// Place one label per point: the first collision-free compass slot wins,
/// otherwise the slot with the least total overlap. Returns the chosen
/// boxes in point order plus the number of intersecting label pairs.
fn place_labels(
    points: &BTreeMap<PointLabel, (f64, f64)>,
    map: &Normalization,
    style: &RenderStyle,
) -> (Vec<(String, Rect)>, usize) {
    let dot_boxes: Vec<Rect> = points
        .values()
        .map(|&p| {
            let (cx, cy) = map.apply(p);
            Rect::centered(cx, cy, style.point_radius * 2.0, style.point_radius * 2.0)
        })
        .collect();

    let mut placed: Vec<(String, Rect)> = Vec::with_capacity(points.len());
    for &p in points.keys() {
        let text = p.to_string();
        let w = style.font_size * 0.62 * text.chars().count() as f64;
        let h = style.font_size;
        let (cx, cy) = map.apply(points[&p]);
        let reach_x = style.point_radius + style.label_offset + w / 2.0;
        let reach_y = style.point_radius + style.label_offset + h / 2.0;

        let mut best: Option<(f64, Rect)> = None;
        for (dx, dy) in COMPASS {
            let candidate = Rect::centered(cx + dx * reach_x, cy + dy * reach_y, w, h);
            let mut cost = 0.0;
            for (_, other) in &placed {
                cost += candidate.overlap_area(other);
            }
            for dot in &dot_boxes {
                cost += candidate.overlap_area(dot);
            }
            if cost == 0.0 {
                best = Some((0.0, candidate));
                break;
            }
            match best {
                Some((c, _)) if c <= cost => {}
                _ => best = Some((cost, candidate)),
            }
        }
        let (_, rect) = best.expect("compass list is non-empty");
        placed.push((text, rect));
    }

    let mut overlaps = 0;
    for i in 0..placed.len() {
        for j in i + 1..placed.len() {
            if placed[i].1.overlap_area(&placed[j].1) > 0.0 {
                overlaps += 1;
            }
        }
    }
    (placed, overlaps)
}
