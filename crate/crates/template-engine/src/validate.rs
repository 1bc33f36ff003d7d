//! Static template validation.
//!
//! Everything here runs before any sampling: parameter ranges must be
//! non-empty and inside the bounds the prototype constructions can handle,
//! relations must be structurally sound (arity, selector bounds) and
//! semantically applicable (kind compatibility, placement order), and the
//! caption must name every primitive and only reference slots that exist.
//!
//! The distinction between the two relation errors: `InvalidRelationArity`
//! is structural (an index or selector that does not exist), while
//! `IncompatibleRelation` means the shapes cannot play the requested roles.

use crate::error::TemplateError;
use crate::types::{
    AngleRange, AttachmentRelation, CountRange, LengthRange, QuadVariant, RelationKind,
    ShapePrimitive, Template, TriangleVariant,
};

/// Angle-congruence feasibility bound: the source corner's worst case plus
/// the target's other sampled corner must leave a real triangle with some
/// slack.
const CONGRUENCE_SUM_LIMIT: f64 = 165.0;

pub(crate) fn validate_template(template: &Template) -> Result<(), TemplateError> {
    let id = &template.id;
    let invalid = |reason: String| TemplateError::InvalidTemplate {
        template: id.clone(),
        reason,
    };

    if id.is_empty() {
        return Err(TemplateError::InvalidTemplate {
            template: String::new(),
            reason: "template id must not be empty".into(),
        });
    }
    if template.primitives.is_empty() || template.primitives.len() > 3 {
        return Err(invalid(format!(
            "a template holds 1 to 3 primitives, not {}",
            template.primitives.len()
        )));
    }

    for (i, prim) in template.primitives.iter().enumerate() {
        validate_primitive(prim, i).map_err(&invalid)?;
    }
    for (index, rel) in template.relations.iter().enumerate() {
        validate_relation(template, index, rel)?;
    }
    validate_placement_order(template)?;
    validate_congruences(template)?;
    validate_slot_merges(template)?;
    validate_circle_participation(template).map_err(&invalid)?;
    validate_caption(template).map_err(&invalid)?;
    Ok(())
}

fn range_ok(r: AngleRange, lo: i64, hi: i64, what: &str, i: usize) -> Result<(), String> {
    if r.min > r.max {
        return Err(format!("primitive {i}: empty {what} range {}..{}", r.min, r.max));
    }
    if r.min < lo || r.max > hi {
        return Err(format!(
            "primitive {i}: {what} range {}..{} leaves the supported bounds {lo}..{hi}",
            r.min, r.max
        ));
    }
    Ok(())
}

fn side_ok(side: &Option<LengthRange>, i: usize) -> Result<(), String> {
    let Some(r) = side else { return Ok(()) };
    if !r.min.is_finite() || !r.max.is_finite() || r.min <= 0.0 {
        return Err(format!("primitive {i}: side lengths must be finite and positive"));
    }
    if r.min < 0.5 || r.max > 20.0 {
        return Err(format!(
            "primitive {i}: side range {}..{} leaves the supported bounds 0.5..20",
            r.min, r.max
        ));
    }
    if (2.0 * r.min).ceil() > (2.0 * r.max).floor() {
        return Err(format!(
            "primitive {i}: side range {}..{} contains no half-unit grid point",
            r.min, r.max
        ));
    }
    Ok(())
}

fn count_ok(c: CountRange, lo: usize, hi: usize, what: &str, i: usize) -> Result<(), String> {
    if c.min > c.max {
        return Err(format!("primitive {i}: empty {what} range {}..{}", c.min, c.max));
    }
    if c.min < lo || c.max > hi {
        return Err(format!(
            "primitive {i}: {what} range {}..{} leaves the supported bounds {lo}..{hi}",
            c.min, c.max
        ));
    }
    Ok(())
}

fn validate_primitive(prim: &ShapePrimitive, i: usize) -> Result<(), String> {
    match prim {
        ShapePrimitive::PointLine { points } => count_ok(*points, 3, 6, "point count", i),
        ShapePrimitive::Triangle {
            variant,
            side,
            alpha,
            beta,
        } => {
            side_ok(side, i)?;
            match variant {
                TriangleVariant::Scalene => {
                    range_ok(*alpha, 25, 88, "alpha", i)?;
                    range_ok(*beta, 25, 88, "beta", i)?;
                    if alpha.max + beta.max > 150 {
                        return Err(format!(
                            "primitive {i}: scalene corners can sum to {} degrees; \
                             the limit is 150 so the third corner stays fat",
                            alpha.max + beta.max
                        ));
                    }
                    Ok(())
                }
                TriangleVariant::Isosceles => range_ok(*alpha, 20, 150, "apex angle", i),
                TriangleVariant::Right => range_ok(*alpha, 25, 65, "acute corner", i),
                TriangleVariant::Equilateral => Ok(()),
            }
        }
        ShapePrimitive::Quadrilateral {
            variant,
            side,
            alpha,
            beta,
        } => {
            side_ok(side, i)?;
            match variant {
                QuadVariant::Square | QuadVariant::Rectangle => Ok(()),
                QuadVariant::Parallelogram => range_ok(*alpha, 35, 145, "corner angle", i),
                QuadVariant::Trapezoid => {
                    range_ok(*alpha, 40, 140, "base corner alpha", i)?;
                    range_ok(*beta, 40, 140, "base corner beta", i)
                }
                QuadVariant::Generic => range_ok(*alpha, 45, 135, "corner angle", i),
            }
        }
        ShapePrimitive::RegularPolygon { sides, side } => {
            if !(5..=8).contains(sides) {
                return Err(format!(
                    "primitive {i}: regular polygons support 5 to 8 sides, not {sides}"
                ));
            }
            side_ok(side, i)
        }
        ShapePrimitive::Circle { points } => count_ok(*points, 0, 5, "marked point count", i),
    }
}

fn validate_relation(
    template: &Template,
    index: usize,
    rel: &AttachmentRelation,
) -> Result<(), TemplateError> {
    let id = &template.id;
    let arity = |reason: String| TemplateError::InvalidRelationArity {
        template: id.clone(),
        index,
        reason,
    };
    let incompatible = |reason: String| TemplateError::IncompatibleRelation {
        template: id.clone(),
        index,
        reason,
    };

    let n = template.primitives.len();
    if rel.a >= n {
        return Err(arity(format!(
            "operand a references primitive {}; the template has {n}",
            rel.a
        )));
    }
    let single_operand = matches!(
        rel.kind,
        RelationKind::MidpointOnEdge { .. } | RelationKind::PointOnSegment { .. }
    );
    if single_operand {
        if let Some(b) = rel.b {
            return Err(arity(format!(
                "{} takes a single operand, but b = {b} was given",
                rel.kind.name()
            )));
        }
    } else {
        let Some(b) = rel.b else {
            return Err(arity(format!("{} needs a second operand", rel.kind.name())));
        };
        if b >= n {
            return Err(arity(format!(
                "operand b references primitive {b}; the template has {n}"
            )));
        }
        if rel.a >= b {
            return Err(arity(format!(
                "operands must be declared in order (a = {} is not before b = {b})",
                rel.a
            )));
        }
    }

    let pa = &template.primitives[rel.a];
    let pb = rel.b.map(|b| &template.primitives[b]);

    // A vertex or marked-point selector must exist for every sampled count,
    // so it is checked against the smallest.
    let min_slots = |p: &ShapePrimitive| p.slot_range().min;

    match rel.kind {
        RelationKind::SharedVertex { vertex_a, vertex_b } => {
            let pb = pb.expect("two-operand kind");
            for (p, v, name) in [(pa, vertex_a, "a"), (pb, vertex_b, "b")] {
                if p.is_circle() {
                    return Err(incompatible(format!(
                        "shared-vertex cannot involve a circle (operand {name})"
                    )));
                }
                if v >= min_slots(p) {
                    return Err(arity(format!(
                        "vertex_{name} = {v} does not exist on a {} with at least {} points",
                        p.noun(),
                        min_slots(p)
                    )));
                }
            }
        }
        RelationKind::SharedEdge { edge_a, edge_b } => {
            let pb = pb.expect("two-operand kind");
            for (p, e, name) in [(pa, edge_a, "a"), (pb, edge_b, "b")] {
                let Some(nv) = p.vertex_count() else {
                    return Err(incompatible(format!(
                        "shared-edge needs polygons on both sides; operand {name} is a {}",
                        p.noun()
                    )));
                };
                if e >= nv {
                    return Err(arity(format!(
                        "edge_{name} = {e} does not exist on a {}-gon",
                        nv
                    )));
                }
            }
            if pb.is_sized() {
                return Err(incompatible(
                    "shared-edge rescales its second operand to fit the edge, so that \
                     operand must not declare absolute side lengths"
                        .into(),
                ));
            }
        }
        RelationKind::InscribedInCircle => {
            let pb = pb.expect("two-operand kind");
            if !pb.is_circle() {
                return Err(incompatible(format!(
                    "inscribed-in-circle needs a circle as operand b, got a {}",
                    pb.noun()
                )));
            }
            if !cyclic_capable(pa) {
                return Err(incompatible(format!(
                    "a {} has no circumcircle in general and cannot be inscribed",
                    pa.noun()
                )));
            }
        }
        RelationKind::Circumscribed => {
            let pb = pb.expect("two-operand kind");
            if !pb.is_circle() {
                return Err(incompatible(format!(
                    "circumscribed needs a circle as operand b, got a {}",
                    pb.noun()
                )));
            }
            if !incircle_capable(pa) {
                return Err(incompatible(format!(
                    "a {} has no incircle in general and cannot be circumscribed",
                    pa.noun()
                )));
            }
        }
        RelationKind::CircleLineIntersection { points } => {
            let pb = pb.expect("two-operand kind");
            if !pa.is_circle() || !pb.is_line() {
                return Err(incompatible(format!(
                    "circle-line-intersection pairs a circle (operand a) with a line \
                     (operand b), got a {} and a {}",
                    pa.noun(),
                    pb.noun()
                )));
            }
            let [i, j] = points;
            if i >= j {
                return Err(arity(format!(
                    "intersection points must be two ascending line indices, got [{i}, {j}]"
                )));
            }
            if j >= min_slots(pb) {
                return Err(arity(format!(
                    "intersection point {j} does not exist on a line with at least {} points",
                    min_slots(pb)
                )));
            }
        }
        RelationKind::AngleCongruence { vertex_a, vertex_b } => {
            let pb: &ShapePrimitive = pb.expect("two-operand kind");
            if !pa.is_polygon() {
                return Err(incompatible(format!(
                    "angle-congruence needs a polygon corner as its source, got a {}",
                    pa.noun()
                )));
            }
            let nv = pa.vertex_count().expect("polygon");
            if vertex_a >= nv {
                return Err(arity(format!("vertex_a = {vertex_a} does not exist on a {nv}-gon")));
            }
            if !corner_is_exact(pa, vertex_a) {
                return Err(incompatible(format!(
                    "corner {vertex_a} of a {} is derived from the construction rather \
                     than sampled, so its measure is not an exact rational and cannot \
                     be copied onto another shape",
                    pa.noun()
                )));
            }
            let target_beta = match pb {
                ShapePrimitive::Triangle {
                    variant: TriangleVariant::Scalene,
                    alpha,
                    beta,
                    ..
                } => {
                    if vertex_b > 1 {
                        return Err(arity(format!(
                            "vertex_b = {vertex_b}: only corners 0 and 1 of a scalene \
                             triangle are sampled, so only they can be overridden"
                        )));
                    }
                    // The corner left to free sampling.
                    if vertex_b == 0 { *beta } else { *alpha }
                }
                _ => {
                    return Err(incompatible(format!(
                        "angle-congruence targets a scalene triangle, got a {}",
                        pb.noun()
                    )));
                }
            };
            let bound = corner_upper_bound(pa, vertex_a);
            if bound + target_beta.max as f64 > CONGRUENCE_SUM_LIMIT {
                return Err(incompatible(format!(
                    "the source corner can reach {bound:.0} degrees and the target's other \
                     corner {} degrees; together they exceed {CONGRUENCE_SUM_LIMIT} and \
                     the triangle could degenerate — narrow the target's free range",
                    target_beta.max
                )));
            }
        }
        RelationKind::MidpointOnEdge { edge } | RelationKind::PointOnSegment { edge } => {
            let Some(nv) = pa.vertex_count() else {
                return Err(incompatible(format!(
                    "{} needs a polygon edge, but operand a is a {}",
                    rel.kind.name(),
                    pa.noun()
                )));
            };
            if edge >= nv {
                return Err(arity(format!("edge = {edge} does not exist on a {nv}-gon")));
            }
        }
    }
    Ok(())
}

/// Shapes whose circumcircle exists and is computable from any sampled
/// instance: triangles, squares, rectangles, regular polygons.
fn cyclic_capable(p: &ShapePrimitive) -> bool {
    matches!(
        p,
        ShapePrimitive::Triangle { .. }
            | ShapePrimitive::Quadrilateral {
                variant: QuadVariant::Square | QuadVariant::Rectangle,
                ..
            }
            | ShapePrimitive::RegularPolygon { .. }
    )
}

/// Shapes with an incircle tangent to every edge: triangles, squares,
/// regular polygons. (A non-square rectangle has none.)
fn incircle_capable(p: &ShapePrimitive) -> bool {
    matches!(
        p,
        ShapePrimitive::Triangle { .. }
            | ShapePrimitive::Quadrilateral {
                variant: QuadVariant::Square,
                ..
            }
            | ShapePrimitive::RegularPolygon { .. }
    )
}

/// Whether the corner's degree measure is an exact rational function of the
/// sampled parameters. A sized right triangle's acute corners come out of an
/// arctangent of the leg ratio, and a generic quadrilateral only pins its
/// sampled corner; neither can serve as an angle-congruence source.
fn corner_is_exact(prim: &ShapePrimitive, vertex: usize) -> bool {
    match prim {
        ShapePrimitive::Triangle {
            variant: TriangleVariant::Right,
            side,
            ..
        } => side.is_none() || vertex == 1,
        ShapePrimitive::Quadrilateral {
            variant: QuadVariant::Generic,
            ..
        } => vertex == 0,
        _ => true,
    }
}

/// Worst-case degree measure of the corner of `prim` at `vertex`, over all
/// parameter draws. Used to keep angle-congruence targets non-degenerate.
fn corner_upper_bound(prim: &ShapePrimitive, vertex: usize) -> f64 {
    match prim {
        ShapePrimitive::Triangle {
            variant,
            alpha,
            beta,
            ..
        } => match variant {
            TriangleVariant::Equilateral => 60.0,
            TriangleVariant::Scalene => match vertex {
                0 => alpha.max as f64,
                1 => beta.max as f64,
                _ => (180 - alpha.min - beta.min) as f64,
            },
            TriangleVariant::Isosceles => {
                if vertex == 0 {
                    alpha.max as f64
                } else {
                    (180 - alpha.min) as f64 / 2.0
                }
            }
            TriangleVariant::Right => 90.0,
        },
        ShapePrimitive::Quadrilateral {
            variant,
            alpha,
            beta,
            ..
        } => match variant {
            QuadVariant::Square | QuadVariant::Rectangle => 90.0,
            QuadVariant::Parallelogram => (alpha.max as f64).max((180 - alpha.min) as f64),
            QuadVariant::Trapezoid => [
                alpha.max as f64,
                beta.max as f64,
                (180 - alpha.min) as f64,
                (180 - beta.min) as f64,
            ]
            .into_iter()
            .fold(0.0, f64::max),
            // Only the sampled corner of a generic quadrilateral has a
            // useful bound; the derived corners are effectively free.
            QuadVariant::Generic => {
                if vertex == 0 {
                    alpha.max as f64
                } else {
                    170.0
                }
            }
        },
        ShapePrimitive::RegularPolygon { sides, .. } => ((*sides - 2) * 180) as f64 / *sides as f64,
        _ => 180.0,
    }
}

/// Simulate placement: primitive 0 anchors, a posing relation's `a` operand
/// may be placed on demand, and its `b` operand must still be unplaced.
fn validate_placement_order(template: &Template) -> Result<(), TemplateError> {
    let mut placed = vec![false; template.primitives.len()];
    placed[0] = true;
    for (index, rel) in template.relations.iter().enumerate() {
        if !rel.poses_b() {
            continue;
        }
        placed[rel.a] = true;
        let b = rel.b.expect("posing kinds have two operands");
        if placed[b] {
            return Err(TemplateError::IncompatibleRelation {
                template: template.id.clone(),
                index,
                reason: format!(
                    "primitive {b} is already positioned when {} tries to place it",
                    rel.kind.name()
                ),
            });
        }
        placed[b] = true;
    }
    Ok(())
}

/// Angle-congruence bookkeeping: one override per target triangle, and a
/// target must not have served as a source before its override lands.
fn validate_congruences(template: &Template) -> Result<(), TemplateError> {
    let mut built = vec![false; template.primitives.len()];
    let mut overridden = vec![false; template.primitives.len()];
    for (index, rel) in template.relations.iter().enumerate() {
        let RelationKind::AngleCongruence { .. } = rel.kind else {
            continue;
        };
        let b = rel.b.expect("two-operand kind");
        let err = |reason: String| TemplateError::IncompatibleRelation {
            template: template.id.clone(),
            index,
            reason,
        };
        if built[b] {
            return Err(err(format!(
                "primitive {b}'s shape was already read by an earlier congruence; \
                 overriding it now would change it retroactively"
            )));
        }
        if overridden[b] {
            return Err(err(format!(
                "primitive {b} is the target of two angle-congruences; one corner \
                 override per triangle is supported"
            )));
        }
        built[rel.a] = true;
        overridden[b] = true;
    }
    Ok(())
}

/// Label unification must never merge two slots of the same primitive —
/// that would collapse an edge to a point.
fn validate_slot_merges(template: &Template) -> Result<(), TemplateError> {
    let counts: Vec<usize> = template
        .primitives
        .iter()
        .map(|p| p.slot_range().min)
        .collect();
    let mut uf = slot_classes(template, &counts);
    let offsets = slot_offsets(&counts);
    for (i, &count) in counts.iter().enumerate() {
        for s in 0..count {
            for t in (s + 1)..count {
                if uf.find(offsets[i] + s) == uf.find(offsets[i] + t) {
                    return Err(TemplateError::IncompatibleRelation {
                        template: template.id.clone(),
                        index: template.relations.len().saturating_sub(1),
                        reason: format!(
                            "the shared-vertex/shared-edge relations collapse points \
                             {s} and {t} of primitive {i} into one"
                        ),
                    });
                }
            }
        }
    }
    Ok(())
}

/// A circle that can carry zero marked points must take part in a circle
/// relation, otherwise its center label would appear in no statement.
fn validate_circle_participation(template: &Template) -> Result<(), String> {
    for (i, prim) in template.primitives.iter().enumerate() {
        let ShapePrimitive::Circle { points } = prim else {
            continue;
        };
        if points.min > 0 {
            continue;
        }
        let used = template.relations.iter().any(|rel| match rel.kind {
            RelationKind::InscribedInCircle | RelationKind::Circumscribed => rel.b == Some(i),
            RelationKind::CircleLineIntersection { .. } => rel.a == i,
            _ => false,
        });
        if !used {
            return Err(format!(
                "primitive {i}: a circle allowed zero marked points must take part \
                 in a circle relation"
            ));
        }
    }
    Ok(())
}

fn validate_caption(template: &Template) -> Result<(), String> {
    let caption = &template.caption_pattern;
    let n = template.primitives.len();
    let mut chars = caption.char_indices().peekable();
    while let Some((pos, c)) = chars.next() {
        if c != '{' {
            continue;
        }
        let digit = chars.next().and_then(|(_, d)| d.to_digit(10));
        let closed = matches!(chars.next(), Some((_, '}')));
        let Some(slot) = digit.filter(|_| closed) else {
            return Err(format!(
                "caption has a malformed label slot at byte {pos}; slots look like {{0}}"
            ));
        };
        if slot as usize >= n {
            return Err(format!(
                "caption references slot {{{slot}}} but the template has {n} primitives"
            ));
        }
    }
    let lower = caption.to_lowercase();
    for (i, prim) in template.primitives.iter().enumerate() {
        if !lower.contains(prim.noun()) {
            return Err(format!(
                "caption never mentions the {} (primitive {i})",
                prim.noun()
            ));
        }
    }
    Ok(())
}

/// Union-find over global slot ids, merged per shared-vertex/shared-edge.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Merge with the smaller root winning, so class representatives are
    /// stable under processing order.
    pub(crate) fn union(&mut self, i: usize, j: usize) {
        let (ri, rj) = (self.find(i), self.find(j));
        if ri == rj {
            return;
        }
        let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
        self.parent[hi] = lo;
    }
}

/// Global slot id of `(primitive, slot)` given per-primitive slot counts.
pub(crate) fn slot_offsets(counts: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(counts.len());
    let mut acc = 0;
    for &c in counts {
        offsets.push(acc);
        acc += c;
    }
    offsets
}

/// The label classes a template's unifying relations demand. Selectors were
/// validated against minimum counts, so any sampled `counts` work here.
pub(crate) fn slot_classes(template: &Template, counts: &[usize]) -> UnionFind {
    let offsets = slot_offsets(counts);
    let total: usize = counts.iter().sum();
    let mut uf = UnionFind::new(total);
    for rel in &template.relations {
        match rel.kind {
            RelationKind::SharedVertex { vertex_a, vertex_b } => {
                let b = rel.b.expect("two-operand kind");
                uf.union(offsets[rel.a] + vertex_a, offsets[b] + vertex_b);
            }
            RelationKind::SharedEdge { edge_a, edge_b } => {
                let b = rel.b.expect("two-operand kind");
                let na = counts[rel.a];
                let nb = counts[b];
                // The posed polygon traverses the shared edge in the
                // opposite direction, like two rooms sharing a wall.
                uf.union(offsets[b] + edge_b, offsets[rel.a] + (edge_a + 1) % na);
                uf.union(offsets[b] + (edge_b + 1) % nb, offsets[rel.a] + edge_a);
            }
            _ => {}
        }
    }
    uf
}
