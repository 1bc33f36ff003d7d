//! The geometric realization of a document: coordinates for every point and
//! a radius for every declared circle.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use cdl_core::{CdlDocument, PointLabel};

use crate::error::GeometryError;

/// Point coordinates plus circle radii, with the source document attached so
/// extraction and rendering know the declared structure (which segments,
/// shapes, and circles exist — coordinates alone cannot say).
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    points: BTreeMap<PointLabel, (f64, f64)>,
    circles: BTreeMap<PointLabel, f64>,
    document: CdlDocument,
}

impl Figure {
    pub fn new(
        points: BTreeMap<PointLabel, (f64, f64)>,
        circles: BTreeMap<PointLabel, f64>,
        document: CdlDocument,
    ) -> Self {
        Figure {
            points,
            circles,
            document,
        }
    }

    pub fn points(&self) -> &BTreeMap<PointLabel, (f64, f64)> {
        &self.points
    }

    pub fn circles(&self) -> &BTreeMap<PointLabel, f64> {
        &self.circles
    }

    pub fn document(&self) -> &CdlDocument {
        &self.document
    }

    pub fn xy(&self, label: PointLabel) -> Option<(f64, f64)> {
        self.points.get(&label).copied()
    }

    /// Replace the attached document (used when a figure is reloaded from
    /// its flat-text form, which carries coordinates only).
    pub fn set_document(&mut self, document: CdlDocument) {
        self.document = document;
    }

    /// The closest pair of distinct points, or `None` for figures with
    /// fewer than two points.
    pub fn min_separation(&self) -> Option<(PointLabel, PointLabel, f64)> {
        let pts: Vec<_> = self.points.iter().collect();
        let mut best: Option<(PointLabel, PointLabel, f64)> = None;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let (ax, ay) = *pts[i].1;
                let (bx, by) = *pts[j].1;
                let dist = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
                if best.map_or(true, |(_, _, d)| dist < d) {
                    best = Some((*pts[i].0, *pts[j].0, dist));
                }
            }
        }
        best
    }

    /// Translate every point by `(dx, dy)`.
    pub fn translate(&self, dx: f64, dy: f64) -> Figure {
        let mut out = self.clone();
        for (_, (x, y)) in out.points.iter_mut() {
            *x += dx;
            *y += dy;
        }
        out
    }

    /// Scale uniformly about the origin; radii scale along.
    pub fn scale(&self, factor: f64) -> Figure {
        let mut out = self.clone();
        for (_, (x, y)) in out.points.iter_mut() {
            *x *= factor;
            *y *= factor;
        }
        for (_, r) in out.circles.iter_mut() {
            *r *= factor;
        }
        out
    }

    /// Mean of all point coordinates; (0, 0) for an empty figure.
    pub fn centroid(&self) -> (f64, f64) {
        if self.points.is_empty() {
            return (0.0, 0.0);
        }
        let n = self.points.len() as f64;
        let (sx, sy) = self
            .points
            .values()
            .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
        (sx / n, sy / n)
    }

    /// Tight bounding box over points and full circle extents, or `None`
    /// for an empty figure.
    pub fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (label, &(x, y)) in &self.points {
            let r = self.circles.get(label).copied().unwrap_or(0.0);
            min_x = min_x.min(x - r);
            min_y = min_y.min(y - r);
            max_x = max_x.max(x + r);
            max_y = max_y.max(y + r);
        }
        Some((min_x, min_y, max_x, max_y))
    }

    /// Flat text form: one `point <label> <x> <y>` line per point in label
    /// order, then one `circle <label> <radius>` line per circle in label
    /// order. Numbers use the shortest representation that reloads to the
    /// identical float.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (label, (x, y)) in &self.points {
            writeln!(out, "point {label} {x} {y}").expect("string write");
        }
        for (label, r) in &self.circles {
            writeln!(out, "circle {label} {r}").expect("string write");
        }
        out
    }

    /// Reload a figure from its flat text form. The attached document is
    /// empty; callers that need declared structure attach it with
    /// [`Figure::set_document`].
    pub fn from_text(text: &str) -> Result<Figure, GeometryError> {
        let mut points = BTreeMap::new();
        let mut circles = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| GeometryError::FigureParse {
                line: line_no,
                reason,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["point", label, x, y] => {
                    let label: PointLabel =
                        label.parse().map_err(|e| bad(format!("bad label: {e}")))?;
                    let x: f64 = x.parse().map_err(|_| bad(format!("bad number '{x}'")))?;
                    let y: f64 = y.parse().map_err(|_| bad(format!("bad number '{y}'")))?;
                    if !x.is_finite() || !y.is_finite() {
                        return Err(bad("coordinates must be finite".into()));
                    }
                    points.insert(label, (x, y));
                }
                ["circle", label, r] => {
                    let label: PointLabel =
                        label.parse().map_err(|e| bad(format!("bad label: {e}")))?;
                    let r: f64 = r.parse().map_err(|_| bad(format!("bad number '{r}'")))?;
                    if !r.is_finite() || r <= 0.0 {
                        return Err(bad("radius must be finite and positive".into()));
                    }
                    circles.insert(label, r);
                }
                _ => return Err(bad(format!("expected 'point L x y' or 'circle L r', got '{line}'"))),
            }
        }
        Ok(Figure::new(points, circles, CdlDocument::new()))
    }
}

/// Rotate every point rigidly about the figure centroid; radii are
/// unchanged. The angle is in degrees, counterclockwise.
pub fn rotate(figure: &Figure, angle_degrees: f64) -> Figure {
    let (cx, cy) = figure.centroid();
    let theta = angle_degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let mut out = figure.clone();
    for (_, (x, y)) in out.points.iter_mut() {
        let (dx, dy) = (*x - cx, *y - cy);
        *x = cx + dx * cos - dy * sin;
        *y = cy + dx * sin + dy * cos;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_figure() -> Figure {
        let mut points = BTreeMap::new();
        points.insert("A".parse().unwrap(), (0.0, 0.0));
        points.insert("B".parse().unwrap(), (2.0, 0.0));
        points.insert("C".parse().unwrap(), (1.0, 1.5));
        let mut circles = BTreeMap::new();
        circles.insert("C".parse().unwrap(), 0.75);
        Figure::new(points, circles, CdlDocument::new())
    }

    #[test]
    fn rotation_by_zero_is_identity() {
        let fig = sample_figure();
        assert_eq!(rotate(&fig, 0.0), fig);
    }

    #[test]
    fn rotation_by_full_turn_returns_within_epsilon() {
        let fig = sample_figure();
        let turned = rotate(&fig, 360.0);
        for (label, &(x, y)) in fig.points() {
            let (tx, ty) = turned.xy(*label).unwrap();
            assert!(
                (tx - x).abs() < 1e-12 && (ty - y).abs() < 1e-12,
                "{label} moved from ({x}, {y}) to ({tx}, {ty})"
            );
        }
    }

    #[test]
    fn rotation_preserves_pairwise_distances_and_radii() {
        let fig = sample_figure();
        let turned = rotate(&fig, 37.5);
        let before = fig.min_separation().unwrap().2;
        let after = turned.min_separation().unwrap().2;
        assert!((before - after).abs() < 1e-12);
        assert_eq!(fig.circles(), turned.circles());
    }

    #[test]
    fn text_form_round_trips_exactly() {
        let fig = sample_figure();
        let reloaded = Figure::from_text(&fig.to_text()).unwrap();
        assert_eq!(reloaded.points(), fig.points());
        assert_eq!(reloaded.circles(), fig.circles());
    }

    #[test]
    fn text_form_rejects_malformed_lines() {
        let err = Figure::from_text("point A 0").unwrap_err();
        assert!(matches!(err, GeometryError::FigureParse { line: 1, .. }));
        let err = Figure::from_text("point A 0 nan").unwrap_err();
        assert!(matches!(err, GeometryError::FigureParse { .. }));
        let err = Figure::from_text("circle O -1").unwrap_err();
        assert!(matches!(err, GeometryError::FigureParse { .. }));
    }
}
