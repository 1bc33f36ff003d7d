//! Loading template libraries from their on-disk TOML form.
//!
//! A library file starts with a `schema = 1` header and holds any number of
//! `[[template]]` tables, each with an `id`, a `caption`, one to three
//! `[[template.primitive]]` tables and optional `[[template.relation]]`
//! tables. Ranges are inline tables (`side = { min = 2.0, max = 6.0 }`);
//! omitted ranges fall back to per-shape defaults chosen so that unadorned
//! templates stay comfortably non-degenerate.
//!
//! Parsing is strict: unknown fields, unknown kind strings, and selector
//! fields that do not belong to a relation kind are all rejected rather
//! than ignored, so a typo in a hand-edited file surfaces as an error
//! instead of a silently different drawing.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use crate::error::TemplateError;
use crate::types::{
    AngleRange, AttachmentRelation, CountRange, LengthRange, QuadVariant, RelationKind,
    ShapePrimitive, Template, TriangleVariant,
};

/// The one library format revision this build understands.
const SUPPORTED_SCHEMA: i64 = 1;

/// An immutable collection of validated templates.
#[derive(Debug, Clone)]
pub struct Library {
    templates: Vec<Template>,
    warnings: Vec<String>,
}

impl Library {
    /// All templates, in file order.
    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    /// Look a template up by id.
    pub fn get(&self, id: &str) -> Option<&Template> {
        self.templates.iter().find(|t| t.id == id)
    }

    /// Non-fatal observations made while loading (e.g. an empty file).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

/// Read and parse a library file.
pub fn load_library(path: impl AsRef<Path>) -> Result<Library, TemplateError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| TemplateError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_library(&text)
}

/// Parse library text.
pub fn parse_library(text: &str) -> Result<Library, TemplateError> {
    let raw: RawLibrary = toml::from_str(text).map_err(|e| TemplateError::Parse {
        reason: e.to_string(),
    })?;
    if raw.schema != SUPPORTED_SCHEMA {
        return Err(TemplateError::Parse {
            reason: format!(
                "unsupported library schema {}; this build reads schema {SUPPORTED_SCHEMA}",
                raw.schema
            ),
        });
    }

    let mut templates = Vec::with_capacity(raw.templates.len());
    let mut seen = BTreeSet::new();
    for raw_template in raw.templates {
        if !seen.insert(raw_template.id.clone()) {
            return Err(TemplateError::DuplicateTemplateId(raw_template.id));
        }
        templates.push(convert_template(raw_template)?);
    }

    let mut warnings = Vec::new();
    if templates.is_empty() {
        warnings.push("library contains no templates".to_string());
    }
    Ok(Library {
        templates,
        warnings,
    })
}

/// The library every build carries; parsing it is covered by tests, so the
/// expect cannot fire outside a broken source tree.
pub fn starter_library() -> Library {
    parse_library(include_str!("../library/starter.toml"))
        .expect("bundled starter library must parse")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLibrary {
    schema: i64,
    #[serde(default, rename = "template")]
    templates: Vec<RawTemplate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplate {
    id: String,
    caption: String,
    #[serde(default, rename = "primitive")]
    primitives: Vec<RawPrimitive>,
    #[serde(default, rename = "relation")]
    relations: Vec<RawRelation>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrimitive {
    kind: String,
    variant: Option<String>,
    sides: Option<usize>,
    side: Option<RawRange>,
    alpha: Option<RawIntRange>,
    beta: Option<RawIntRange>,
    points: Option<RawCountRange>,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct RawRange {
    min: f64,
    max: f64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct RawIntRange {
    min: i64,
    max: i64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct RawCountRange {
    min: usize,
    max: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelation {
    kind: String,
    a: usize,
    b: Option<usize>,
    vertex_a: Option<usize>,
    vertex_b: Option<usize>,
    edge_a: Option<usize>,
    edge_b: Option<usize>,
    edge: Option<usize>,
    points: Option<[usize; 2]>,
}

fn convert_template(raw: RawTemplate) -> Result<Template, TemplateError> {
    let id = raw.id;
    let mut primitives = Vec::with_capacity(raw.primitives.len());
    for (i, prim) in raw.primitives.into_iter().enumerate() {
        primitives.push(convert_primitive(&id, i, prim)?);
    }
    let mut relations = Vec::with_capacity(raw.relations.len());
    for (index, rel) in raw.relations.into_iter().enumerate() {
        relations.push(convert_relation(&id, index, rel)?);
    }
    Template::new(id, primitives, relations, raw.caption)
}

fn convert_primitive(
    id: &str,
    index: usize,
    raw: RawPrimitive,
) -> Result<ShapePrimitive, TemplateError> {
    let err = |reason: String| TemplateError::InvalidTemplate {
        template: id.to_string(),
        reason: format!("primitive {index}: {reason}"),
    };
    let angle = |r: Option<RawIntRange>, default: (i64, i64)| match r {
        Some(r) => AngleRange { min: r.min, max: r.max },
        None => AngleRange {
            min: default.0,
            max: default.1,
        },
    };
    let side = raw.side.map(|r| LengthRange { min: r.min, max: r.max });

    // Reject fields that the declared kind does not read, so a stray line
    // in a hand-edited file cannot silently do nothing.
    let forbid = |cond: bool, field: &str| {
        if cond {
            Err(err(format!("field '{field}' does not apply to kind '{}'", raw.kind)))
        } else {
            Ok(())
        }
    };

    let prim = match raw.kind.as_str() {
        "point-line" => {
            forbid(raw.variant.is_some(), "variant")?;
            forbid(raw.sides.is_some(), "sides")?;
            forbid(raw.side.is_some(), "side")?;
            forbid(raw.alpha.is_some(), "alpha")?;
            forbid(raw.beta.is_some(), "beta")?;
            let points = raw
                .points
                .map(|r| CountRange { min: r.min, max: r.max })
                .unwrap_or(CountRange { min: 3, max: 4 });
            ShapePrimitive::PointLine { points }
        }
        "triangle" => {
            forbid(raw.sides.is_some(), "sides")?;
            forbid(raw.points.is_some(), "points")?;
            let variant = match raw.variant.as_deref().unwrap_or("scalene") {
                "scalene" => TriangleVariant::Scalene,
                "isosceles" => TriangleVariant::Isosceles,
                "equilateral" => TriangleVariant::Equilateral,
                "right" => TriangleVariant::Right,
                other => return Err(err(format!("unknown triangle variant '{other}'"))),
            };
            let (alpha, beta) = match variant {
                TriangleVariant::Scalene => (angle(raw.alpha, (40, 70)), angle(raw.beta, (45, 80))),
                TriangleVariant::Isosceles => {
                    forbid(raw.beta.is_some(), "beta")?;
                    (angle(raw.alpha, (30, 110)), AngleRange { min: 0, max: 0 })
                }
                TriangleVariant::Right => {
                    forbid(raw.beta.is_some(), "beta")?;
                    (angle(raw.alpha, (30, 60)), AngleRange { min: 0, max: 0 })
                }
                TriangleVariant::Equilateral => {
                    forbid(raw.alpha.is_some(), "alpha")?;
                    forbid(raw.beta.is_some(), "beta")?;
                    (AngleRange { min: 0, max: 0 }, AngleRange { min: 0, max: 0 })
                }
            };
            ShapePrimitive::Triangle {
                variant,
                side,
                alpha,
                beta,
            }
        }
        "quadrilateral" => {
            forbid(raw.sides.is_some(), "sides")?;
            forbid(raw.points.is_some(), "points")?;
            let variant = match raw.variant.as_deref().unwrap_or("generic") {
                "square" => QuadVariant::Square,
                "rectangle" => QuadVariant::Rectangle,
                "parallelogram" => QuadVariant::Parallelogram,
                "trapezoid" => QuadVariant::Trapezoid,
                "generic" => QuadVariant::Generic,
                other => return Err(err(format!("unknown quadrilateral variant '{other}'"))),
            };
            let (alpha, beta) = match variant {
                QuadVariant::Square | QuadVariant::Rectangle => {
                    forbid(raw.alpha.is_some(), "alpha")?;
                    forbid(raw.beta.is_some(), "beta")?;
                    (AngleRange { min: 0, max: 0 }, AngleRange { min: 0, max: 0 })
                }
                QuadVariant::Parallelogram => {
                    forbid(raw.beta.is_some(), "beta")?;
                    (angle(raw.alpha, (55, 125)), AngleRange { min: 0, max: 0 })
                }
                QuadVariant::Trapezoid => {
                    (angle(raw.alpha, (50, 115)), angle(raw.beta, (50, 115)))
                }
                QuadVariant::Generic => {
                    forbid(raw.beta.is_some(), "beta")?;
                    (angle(raw.alpha, (60, 120)), AngleRange { min: 0, max: 0 })
                }
            };
            ShapePrimitive::Quadrilateral {
                variant,
                side,
                alpha,
                beta,
            }
        }
        "regular-polygon" => {
            forbid(raw.variant.is_some(), "variant")?;
            forbid(raw.alpha.is_some(), "alpha")?;
            forbid(raw.beta.is_some(), "beta")?;
            forbid(raw.points.is_some(), "points")?;
            let Some(sides) = raw.sides else {
                return Err(err("regular-polygon needs a 'sides' count".into()));
            };
            ShapePrimitive::RegularPolygon { sides, side }
        }
        "circle" => {
            forbid(raw.variant.is_some(), "variant")?;
            forbid(raw.sides.is_some(), "sides")?;
            forbid(raw.side.is_some(), "side")?;
            forbid(raw.alpha.is_some(), "alpha")?;
            forbid(raw.beta.is_some(), "beta")?;
            let points = raw
                .points
                .map(|r| CountRange { min: r.min, max: r.max })
                .unwrap_or(CountRange { min: 2, max: 4 });
            ShapePrimitive::Circle { points }
        }
        other => return Err(err(format!("unknown primitive kind '{other}'"))),
    };
    Ok(prim)
}

fn convert_relation(
    id: &str,
    index: usize,
    raw: RawRelation,
) -> Result<AttachmentRelation, TemplateError> {
    let arity = |reason: String| TemplateError::InvalidRelationArity {
        template: id.to_string(),
        index,
        reason,
    };
    let need = |field: Option<usize>, name: &str| {
        field.ok_or_else(|| arity(format!("{} needs '{name}'", raw.kind)))
    };
    let forbid = |cond: bool, field: &str| {
        if cond {
            Err(arity(format!("field '{field}' does not apply to {}", raw.kind)))
        } else {
            Ok(())
        }
    };

    let kind = match raw.kind.as_str() {
        "shared-vertex" => {
            forbid(raw.edge_a.is_some(), "edge_a")?;
            forbid(raw.edge_b.is_some(), "edge_b")?;
            forbid(raw.edge.is_some(), "edge")?;
            forbid(raw.points.is_some(), "points")?;
            RelationKind::SharedVertex {
                vertex_a: need(raw.vertex_a, "vertex_a")?,
                vertex_b: need(raw.vertex_b, "vertex_b")?,
            }
        }
        "shared-edge" => {
            forbid(raw.vertex_a.is_some(), "vertex_a")?;
            forbid(raw.vertex_b.is_some(), "vertex_b")?;
            forbid(raw.edge.is_some(), "edge")?;
            forbid(raw.points.is_some(), "points")?;
            RelationKind::SharedEdge {
                edge_a: need(raw.edge_a, "edge_a")?,
                edge_b: need(raw.edge_b, "edge_b")?,
            }
        }
        "inscribed-in-circle" | "circumscribed" => {
            forbid(raw.vertex_a.is_some(), "vertex_a")?;
            forbid(raw.vertex_b.is_some(), "vertex_b")?;
            forbid(raw.edge_a.is_some(), "edge_a")?;
            forbid(raw.edge_b.is_some(), "edge_b")?;
            forbid(raw.edge.is_some(), "edge")?;
            forbid(raw.points.is_some(), "points")?;
            if raw.kind == "inscribed-in-circle" {
                RelationKind::InscribedInCircle
            } else {
                RelationKind::Circumscribed
            }
        }
        "circle-line-intersection" => {
            forbid(raw.vertex_a.is_some(), "vertex_a")?;
            forbid(raw.vertex_b.is_some(), "vertex_b")?;
            forbid(raw.edge_a.is_some(), "edge_a")?;
            forbid(raw.edge_b.is_some(), "edge_b")?;
            forbid(raw.edge.is_some(), "edge")?;
            let points = raw
                .points
                .ok_or_else(|| arity("circle-line-intersection needs 'points'".into()))?;
            RelationKind::CircleLineIntersection { points }
        }
        "angle-congruence" => {
            forbid(raw.edge_a.is_some(), "edge_a")?;
            forbid(raw.edge_b.is_some(), "edge_b")?;
            forbid(raw.edge.is_some(), "edge")?;
            forbid(raw.points.is_some(), "points")?;
            RelationKind::AngleCongruence {
                vertex_a: need(raw.vertex_a, "vertex_a")?,
                vertex_b: need(raw.vertex_b, "vertex_b")?,
            }
        }
        "midpoint-on-edge" | "point-on-segment" => {
            forbid(raw.vertex_a.is_some(), "vertex_a")?;
            forbid(raw.vertex_b.is_some(), "vertex_b")?;
            forbid(raw.edge_a.is_some(), "edge_a")?;
            forbid(raw.edge_b.is_some(), "edge_b")?;
            forbid(raw.points.is_some(), "points")?;
            let edge = need(raw.edge, "edge")?;
            if raw.kind == "midpoint-on-edge" {
                RelationKind::MidpointOnEdge { edge }
            } else {
                RelationKind::PointOnSegment { edge }
            }
        }
        other => {
            return Err(TemplateError::Parse {
                reason: format!("template '{id}' relation {index}: unknown kind '{other}'"),
            });
        }
    };
    Ok(AttachmentRelation {
        a: raw.a,
        b: raw.b,
        kind,
    })
}
