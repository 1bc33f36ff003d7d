//! Building two-primitive templates programmatically.

use crate::error::TemplateError;
use crate::types::{AttachmentRelation, RelationKind, ShapePrimitive, Template};

/// Join two primitives with one attachment relation, producing a validated
/// template whose id and caption are derived from the operands.
///
/// The relation's operand indices are fixed here — `a` becomes primitive 0
/// and `b` primitive 1 (single-operand kinds keep `b` as an unattached
/// neighbor). Everything else about the relation is taken as given, so an
/// impossible pairing fails with the same errors a hand-written library
/// file would produce.
pub fn compose(
    a: ShapePrimitive,
    b: ShapePrimitive,
    rel: AttachmentRelation,
) -> Result<Template, TemplateError> {
    let single_operand = matches!(
        rel.kind,
        RelationKind::MidpointOnEdge { .. } | RelationKind::PointOnSegment { .. }
    );
    let rel = AttachmentRelation {
        a: 0,
        b: if single_operand { None } else { Some(1) },
        kind: rel.kind,
    };
    let id = format!("composed-{}-{}-{}", a.noun(), b.noun(), rel.kind.name());
    let caption = caption_for(&a, &b, &rel.kind);
    Template::new(id, vec![a, b], vec![rel], caption)
}

fn article(noun: &str) -> &'static str {
    match noun.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn caption_for(a: &ShapePrimitive, b: &ShapePrimitive, kind: &RelationKind) -> String {
    let (na, nb) = (a.noun(), b.noun());
    let (arta, artb) = (article(na), article(nb));
    match kind {
        RelationKind::SharedVertex { .. } => {
            format!("{arta} {na} {{0}} and {artb} {nb} {{1}} meeting at a shared vertex")
        }
        RelationKind::SharedEdge { .. } => {
            format!("{arta} {na} {{0}} and {artb} {nb} {{1}} sharing an edge")
        }
        RelationKind::InscribedInCircle => {
            format!("{arta} {na} {{0}} inscribed in {artb} {nb} {{1}}")
        }
        RelationKind::Circumscribed => {
            format!("{arta} {na} {{0}} circumscribed about {artb} {nb} {{1}}")
        }
        RelationKind::CircleLineIntersection { .. } => {
            format!("{arta} {na} {{0}} crossed by {artb} {nb} {{1}}")
        }
        RelationKind::AngleCongruence { .. } => {
            format!("{arta} {na} {{0}} and {artb} {nb} {{1}} with a pair of equal angles")
        }
        RelationKind::MidpointOnEdge { .. } => {
            format!("{arta} {na} {{0}} with an edge midpoint marked, alongside {artb} {nb} {{1}}")
        }
        RelationKind::PointOnSegment { .. } => {
            format!(
                "{arta} {na} {{0}} with a point marked on one edge, alongside {artb} {nb} {{1}}"
            )
        }
    }
}
