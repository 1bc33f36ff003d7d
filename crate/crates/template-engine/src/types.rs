//! Template vocabulary: primitive shapes, attachment relations, and the
//! records that bundle them with a caption pattern.
//!
//! A template is deliberately declarative — it says *what* exists (a sized
//! right triangle, a circle through three points) and *how* parts attach
//! (shared edge, inscribed, tangent). Everything metric is expressed as a
//! sampling range so one template yields a family of documents.

use std::collections::BTreeMap;

use cdl_core::{CdlDocument, PointLabel};
use geometry_kernel::Figure;
use num_rational::Rational64;

use crate::error::TemplateError;
use crate::validate::validate_template;

/// Inclusive side-length interval. Lengths are sampled on a half-unit grid
/// (multiples of 1/2) so that emitted literals stay exact rationals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthRange {
    pub min: f64,
    pub max: f64,
}

/// Inclusive angle interval in whole degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleRange {
    pub min: i64,
    pub max: i64,
}

/// Inclusive count interval for marked points on a line or circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

/// The four triangle flavors a template can ask for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleVariant {
    Scalene,
    Isosceles,
    Equilateral,
    Right,
}

/// The five quadrilateral flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadVariant {
    Square,
    Rectangle,
    Parallelogram,
    Trapezoid,
    Generic,
}

/// One primitive shape together with its sampling ranges.
///
/// Vertices are numbered from 0 in cycle order; edge `e` runs from vertex
/// `e` to vertex `(e + 1) % n`. A circle's slot 0 is its center, slots
/// `1..=k` its marked points. Absolute side lengths (`side`) are optional:
/// when absent the shape is free-scale and emits no length literals.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapePrimitive {
    /// A run of collinear marked points.
    PointLine { points: CountRange },
    /// A triangle. The meaning of `alpha`/`beta` depends on the variant:
    /// scalene — corner angles at vertices 0 and 1 (both emitted);
    /// isosceles — apex angle at vertex 0 (`beta` unused); right — the
    /// acute corner at vertex 0, emitted only when `side` is absent
    /// (sized right triangles emit their two legs instead); equilateral —
    /// both unused.
    Triangle {
        variant: TriangleVariant,
        side: Option<LengthRange>,
        alpha: AngleRange,
        beta: AngleRange,
    },
    /// A quadrilateral. `alpha`/`beta` are corner angles where the variant
    /// has free corners: parallelogram — at vertex 0; trapezoid — at
    /// vertices 0 and 1 (the two base corners); generic — at vertex 0;
    /// square and rectangle use neither.
    Quadrilateral {
        variant: QuadVariant,
        side: Option<LengthRange>,
        alpha: AngleRange,
        beta: AngleRange,
    },
    /// A regular n-gon, `sides` in 5..=8.
    RegularPolygon {
        sides: usize,
        side: Option<LengthRange>,
    },
    /// A circle with `points` marked points on it. Zero marked points is
    /// allowed when the circle participates in a circle relation (the
    /// relation's statements then cover its center label).
    Circle { points: CountRange },
}

impl ShapePrimitive {
    /// The noun a caption must mention for this primitive.
    pub fn noun(&self) -> &'static str {
        match self {
            ShapePrimitive::PointLine { .. } => "line",
            ShapePrimitive::Triangle { .. } => "triangle",
            ShapePrimitive::Quadrilateral { variant, .. } => match variant {
                QuadVariant::Square => "square",
                QuadVariant::Rectangle => "rectangle",
                QuadVariant::Parallelogram => "parallelogram",
                QuadVariant::Trapezoid => "trapezoid",
                QuadVariant::Generic => "quadrilateral",
            },
            ShapePrimitive::RegularPolygon { sides, .. } => match sides {
                5 => "pentagon",
                6 => "hexagon",
                7 => "heptagon",
                _ => "octagon",
            },
            ShapePrimitive::Circle { .. } => "circle",
        }
    }

    /// True for closed polygons — the primitives with vertices and edges.
    pub fn is_polygon(&self) -> bool {
        matches!(
            self,
            ShapePrimitive::Triangle { .. }
                | ShapePrimitive::Quadrilateral { .. }
                | ShapePrimitive::RegularPolygon { .. }
        )
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, ShapePrimitive::Circle { .. })
    }

    pub fn is_line(&self) -> bool {
        matches!(self, ShapePrimitive::PointLine { .. })
    }

    /// Whether the primitive declares absolute side lengths.
    pub fn is_sized(&self) -> bool {
        match self {
            ShapePrimitive::Triangle { side, .. }
            | ShapePrimitive::Quadrilateral { side, .. }
            | ShapePrimitive::RegularPolygon { side, .. } => side.is_some(),
            _ => false,
        }
    }

    /// Range of point slots the primitive can occupy once sampled. For
    /// polygons this is fixed by the kind; a circle adds one slot for its
    /// center on top of its marked points.
    pub(crate) fn slot_range(&self) -> CountRange {
        match self {
            ShapePrimitive::PointLine { points } => *points,
            ShapePrimitive::Triangle { .. } => CountRange { min: 3, max: 3 },
            ShapePrimitive::Quadrilateral { .. } => CountRange { min: 4, max: 4 },
            ShapePrimitive::RegularPolygon { sides, .. } => CountRange {
                min: *sides,
                max: *sides,
            },
            ShapePrimitive::Circle { points } => CountRange {
                min: points.min + 1,
                max: points.max + 1,
            },
        }
    }

    /// Vertex count for polygons; used by edge/vertex selector validation.
    pub(crate) fn vertex_count(&self) -> Option<usize> {
        match self {
            ShapePrimitive::Triangle { .. } => Some(3),
            ShapePrimitive::Quadrilateral { .. } => Some(4),
            ShapePrimitive::RegularPolygon { sides, .. } => Some(*sides),
            _ => None,
        }
    }
}

/// How two primitives (or one primitive and a fresh point) attach.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationKind {
    /// One vertex of each operand is the same point.
    SharedVertex { vertex_a: usize, vertex_b: usize },
    /// One edge of each polygon is the same segment; the second operand
    /// sits on the opposite side and inherits the edge's length, so it must
    /// be free-scale.
    SharedEdge { edge_a: usize, edge_b: usize },
    /// Every vertex of polygon `a` lies on circle `b`.
    InscribedInCircle,
    /// Every edge of polygon `a` is tangent to circle `b`; one fresh
    /// tangent point per edge is introduced.
    Circumscribed,
    /// Two marked points of line `b` lie on circle `a`.
    CircleLineIntersection { points: [usize; 2] },
    /// The corner of `b` (a scalene triangle) at `vertex_b` is congruent to
    /// the corner of `a` at `vertex_a`; `b`'s own literal for that corner
    /// is withheld and the equality is emitted instead.
    AngleCongruence { vertex_a: usize, vertex_b: usize },
    /// A fresh point marks the midpoint of edge `edge` of polygon `a`.
    MidpointOnEdge { edge: usize },
    /// A fresh point sits strictly inside edge `edge` of polygon `a`, at a
    /// sampled split ratio.
    PointOnSegment { edge: usize },
}

impl RelationKind {
    /// The kebab-case name used by the library format and error messages.
    pub fn name(&self) -> &'static str {
        match self {
            RelationKind::SharedVertex { .. } => "shared-vertex",
            RelationKind::SharedEdge { .. } => "shared-edge",
            RelationKind::InscribedInCircle => "inscribed-in-circle",
            RelationKind::Circumscribed => "circumscribed",
            RelationKind::CircleLineIntersection { .. } => "circle-line-intersection",
            RelationKind::AngleCongruence { .. } => "angle-congruence",
            RelationKind::MidpointOnEdge { .. } => "midpoint-on-edge",
            RelationKind::PointOnSegment { .. } => "point-on-segment",
        }
    }
}

/// A relation instance: a kind plus the primitives it applies to. `b` is
/// absent exactly for the single-operand kinds (midpoint-on-edge,
/// point-on-segment).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttachmentRelation {
    pub a: usize,
    pub b: Option<usize>,
    pub kind: RelationKind,
}

impl AttachmentRelation {
    /// True when the relation fixes `b`'s placement relative to `a`.
    pub(crate) fn poses_b(&self) -> bool {
        matches!(
            self.kind,
            RelationKind::SharedVertex { .. }
                | RelationKind::SharedEdge { .. }
                | RelationKind::InscribedInCircle
                | RelationKind::Circumscribed
                | RelationKind::CircleLineIntersection { .. }
        )
    }

    /// Fresh points the relation introduces, given `a`'s vertex count.
    pub(crate) fn fresh_points(&self, a_vertices: usize) -> usize {
        match self.kind {
            RelationKind::Circumscribed => a_vertices,
            RelationKind::MidpointOnEdge { .. } | RelationKind::PointOnSegment { .. } => 1,
            _ => 0,
        }
    }
}

/// A diagram recipe: one to three primitives, the relations wiring them
/// together, and a caption pattern whose `{i}` slots expand to the labels
/// of primitive `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub id: String,
    pub primitives: Vec<ShapePrimitive>,
    pub relations: Vec<AttachmentRelation>,
    pub caption_pattern: String,
}

impl Template {
    /// Build and validate a template in one step.
    pub fn new(
        id: impl Into<String>,
        primitives: Vec<ShapePrimitive>,
        relations: Vec<AttachmentRelation>,
        caption_pattern: impl Into<String>,
    ) -> Result<Template, TemplateError> {
        let template = Template {
            id: id.into(),
            primitives,
            relations,
            caption_pattern: caption_pattern.into(),
        };
        validate_template(&template)?;
        Ok(template)
    }
}

/// The result of instantiating a template with one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Instantiation {
    /// Canonical document for the sampled diagram.
    pub doc: CdlDocument,
    /// Caption with every label slot filled in.
    pub caption: String,
    /// Every assigned label, in allocation order.
    pub labels: Vec<PointLabel>,
    /// Sampled parameters, keyed `p{i}.{name}` for primitives and
    /// `r{j}.{name}` for relations. All draws land on rational grids.
    pub params: BTreeMap<String, Rational64>,
    /// The seed that produced this instantiation.
    pub seed: u64,
    /// Coordinates that satisfy `doc` exactly (up to floating-point
    /// roundoff); meant as a warm start for the solver.
    pub prototype: Figure,
}
