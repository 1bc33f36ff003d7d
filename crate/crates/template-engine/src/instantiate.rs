//! Turning a template and a seed into a concrete labeled diagram.
//!
//! Instantiation runs in fixed passes: draw parameters, apply angle
//! overrides, build each primitive's local coordinates, allocate labels,
//! place primitives in a shared frame, and emit the document plus caption.
//!
//! Two properties anchor the whole module. First, every numeric literal in
//! the emitted document is drawn from a rational grid (whole degrees,
//! half-unit lengths, small-denominator ratios), so the document states
//! exact values and the same seed always reproduces the same text. Second,
//! the returned prototype figure satisfies its own document to within
//! floating-point roundoff — the shapes are constructed from the sampled
//! values, not fitted to them — which gives downstream solvers a warm
//! start that already sits in the solution basin.

use std::collections::{BTreeMap, BTreeSet};

use cdl_core::{
    CdlDocument, ConsStatement, Edge, EqualOperand, ImgStatement, LineSeg, MeasureTerm,
    PointLabel,
};
use geometry_kernel::Figure;
use num_rational::Rational64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::TemplateError;
use crate::types::{
    Instantiation, QuadVariant, RelationKind, ShapePrimitive, Template, TriangleVariant,
};
use crate::validate::{slot_classes, slot_offsets};

/// Horizontal clearance between primitives that no relation ties together.
const DISJOINT_GAP: f64 = 0.9;

/// Marked points on a circle that stands alone sit on this angular grid,
/// in degrees; 24 slots around the circle.
const ARC_GRID_DEGREES: i64 = 15;
const ARC_GRID_SLOTS: i64 = 24;

fn rat(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn int(n: i64) -> Rational64 {
    Rational64::from_integer(n)
}

/// Everything drawn for one primitive. Which fields mean anything depends
/// on the primitive kind; unused fields stay at zero.
#[derive(Debug, Clone)]
struct PrimSample {
    /// Label slots the primitive owns (a circle's slot 0 is its center).
    slots: usize,
    /// Marked points for lines and circles.
    marked: usize,
    alpha: Rational64,
    beta: Rational64,
    /// Primary length literal (side, base, first leg) when sized.
    side: Rational64,
    /// Secondary length literal (second leg, height, second side).
    second: Rational64,
    /// Consecutive spacing draws for a point line.
    gaps: Vec<Rational64>,
    /// Shape ratio (rectangle height, parallelogram side, trapezoid rise).
    ratio: Rational64,
    /// Generic quadrilateral: how far the fourth vertex reaches.
    depth: Rational64,
    /// Generic quadrilateral: how far the third vertex bulges out.
    bulge: Rational64,
    radius: Rational64,
    /// Grid slots of a standalone circle's marked points, ascending.
    arcs: Vec<i64>,
    sized: bool,
}

impl PrimSample {
    fn blank() -> Self {
        PrimSample {
            slots: 0,
            marked: 0,
            alpha: int(0),
            beta: int(0),
            side: int(0),
            second: int(0),
            gaps: Vec::new(),
            ratio: int(0),
            depth: int(0),
            bulge: int(0),
            radius: int(0),
            arcs: Vec::new(),
            sized: false,
        }
    }
}

fn draw_angle(rng: &mut ChaCha20Rng, min: i64, max: i64) -> Rational64 {
    int(rng.gen_range(min..=max))
}

/// A length on the half-unit grid inside `[min, max]`. Validation
/// guarantees the grid window is non-empty.
fn draw_half(rng: &mut ChaCha20Rng, min: f64, max: f64) -> Rational64 {
    let lo = (2.0 * min).ceil() as i64;
    let hi = (2.0 * max).floor() as i64;
    Rational64::new(rng.gen_range(lo..=hi), 2)
}

fn draw_tenths(rng: &mut ChaCha20Rng, min: i64, max: i64) -> Rational64 {
    Rational64::new(rng.gen_range(min..=max), 10)
}

fn sample_primitive(
    prim: &ShapePrimitive,
    rng: &mut ChaCha20Rng,
    skip_alpha: bool,
    skip_beta: bool,
    draw_radius: bool,
    draw_arcs: bool,
) -> PrimSample {
    let mut s = PrimSample::blank();
    match prim {
        ShapePrimitive::PointLine { points } => {
            let n = rng.gen_range(points.min..=points.max);
            s.slots = n;
            s.marked = n;
            s.gaps = (1..n).map(|_| draw_tenths(rng, 5, 15)).collect();
        }
        ShapePrimitive::Triangle {
            variant,
            side,
            alpha,
            beta,
        } => {
            s.slots = 3;
            s.sized = side.is_some();
            match variant {
                TriangleVariant::Scalene => {
                    if !skip_alpha {
                        s.alpha = draw_angle(rng, alpha.min, alpha.max);
                    }
                    if !skip_beta {
                        s.beta = draw_angle(rng, beta.min, beta.max);
                    }
                    if let Some(r) = side {
                        s.side = draw_half(rng, r.min, r.max);
                    }
                }
                TriangleVariant::Isosceles => {
                    s.alpha = draw_angle(rng, alpha.min, alpha.max);
                    if let Some(r) = side {
                        s.side = draw_half(rng, r.min, r.max);
                    }
                }
                TriangleVariant::Right => {
                    if let Some(r) = side {
                        s.side = draw_half(rng, r.min, r.max);
                        s.second = draw_half(rng, r.min, r.max);
                    } else {
                        s.alpha = draw_angle(rng, alpha.min, alpha.max);
                    }
                }
                TriangleVariant::Equilateral => {
                    if let Some(r) = side {
                        s.side = draw_half(rng, r.min, r.max);
                    }
                }
            }
        }
        ShapePrimitive::Quadrilateral {
            variant,
            side,
            alpha,
            beta,
        } => {
            s.slots = 4;
            s.sized = side.is_some();
            match variant {
                QuadVariant::Square => {
                    if let Some(r) = side {
                        s.side = draw_half(rng, r.min, r.max);
                    }
                }
                QuadVariant::Rectangle => {
                    if let Some(r) = side {
                        s.side = draw_half(rng, r.min, r.max);
                    }
                    s.ratio = draw_tenths(rng, 4, 8);
                    s.second = s.side * s.ratio;
                }
                QuadVariant::Parallelogram => {
                    s.alpha = draw_angle(rng, alpha.min, alpha.max);
                    if let Some(r) = side {
                        s.side = draw_half(rng, r.min, r.max);
                    }
                    s.ratio = draw_tenths(rng, 4, 9);
                    s.second = s.side * s.ratio;
                }
                QuadVariant::Trapezoid => {
                    s.alpha = draw_angle(rng, alpha.min, alpha.max);
                    s.beta = draw_angle(rng, beta.min, beta.max);
                    if let Some(r) = side {
                        s.side = draw_half(rng, r.min, r.max);
                    }
                    s.ratio = draw_tenths(rng, 5, 9);
                }
                QuadVariant::Generic => {
                    s.alpha = draw_angle(rng, alpha.min, alpha.max);
                    if let Some(r) = side {
                        s.side = draw_half(rng, r.min, r.max);
                    }
                    s.depth = draw_tenths(rng, 5, 9);
                    s.bulge = Rational64::new(rng.gen_range(11..=19), 20);
                }
            }
        }
        ShapePrimitive::RegularPolygon { sides, side } => {
            s.slots = *sides;
            s.sized = side.is_some();
            if let Some(r) = side {
                s.side = draw_half(rng, r.min, r.max);
            }
        }
        ShapePrimitive::Circle { points } => {
            s.marked = rng.gen_range(points.min..=points.max);
            s.slots = s.marked + 1;
            if draw_radius {
                s.radius = Rational64::new(rng.gen_range(2..=6), 4);
            }
            if draw_arcs {
                let mut slots = BTreeSet::new();
                while slots.len() < s.marked {
                    slots.insert(rng.gen_range(0..ARC_GRID_SLOTS));
                }
                s.arcs = slots.into_iter().collect();
            }
        }
    }
    s
}

/// Exact degree measure of a polygon corner, as a rational in the sampled
/// parameters. Only called for corners validation admitted as exact.
fn corner_measure(prim: &ShapePrimitive, s: &PrimSample, vertex: usize) -> Rational64 {
    match prim {
        ShapePrimitive::Triangle { variant, .. } => match variant {
            TriangleVariant::Equilateral => int(60),
            TriangleVariant::Scalene => match vertex {
                0 => s.alpha,
                1 => s.beta,
                _ => int(180) - s.alpha - s.beta,
            },
            TriangleVariant::Isosceles => {
                if vertex == 0 {
                    s.alpha
                } else {
                    (int(180) - s.alpha) / int(2)
                }
            }
            TriangleVariant::Right => match vertex {
                1 => int(90),
                0 => s.alpha,
                _ => int(90) - s.alpha,
            },
        },
        ShapePrimitive::Quadrilateral { variant, .. } => match variant {
            QuadVariant::Square | QuadVariant::Rectangle => int(90),
            QuadVariant::Parallelogram => {
                if vertex % 2 == 0 {
                    s.alpha
                } else {
                    int(180) - s.alpha
                }
            }
            QuadVariant::Trapezoid => match vertex {
                0 => s.alpha,
                1 => s.beta,
                2 => int(180) - s.beta,
                _ => int(180) - s.alpha,
            },
            QuadVariant::Generic => s.alpha,
        },
        ShapePrimitive::RegularPolygon { sides, .. } => {
            Rational64::new(((*sides - 2) * 180) as i64, *sides as i64)
        }
        _ => unreachable!("corner measures exist only on polygons"),
    }
}

/// Local coordinates for one primitive, slot by slot, preferring
/// constructions that satisfy the sampled values identically: the emitted
/// statements then hold at roundoff precision without any fitting.
fn local_prototype(prim: &ShapePrimitive, s: &PrimSample) -> Vec<(f64, f64)> {
    let w = if s.sized { rat(s.side) } else { 1.0 };
    match prim {
        ShapePrimitive::PointLine { .. } => {
            let mut x = 0.0;
            let mut out = vec![(0.0, 0.0)];
            for g in &s.gaps {
                x += rat(*g);
                out.push((x, 0.0));
            }
            out
        }
        ShapePrimitive::Triangle { variant, .. } => match variant {
            TriangleVariant::Scalene => {
                let (alpha, beta) = (rat(s.alpha).to_radians(), rat(s.beta).to_radians());
                // Law of sines: the side from the alpha corner to the apex.
                let b = w * beta.sin() / (alpha + beta).sin();
                vec![(0.0, 0.0), (w, 0.0), (b * alpha.cos(), b * alpha.sin())]
            }
            TriangleVariant::Isosceles => {
                let half = rat(s.alpha).to_radians() / 2.0;
                vec![
                    (0.0, 0.0),
                    (w * half.cos(), -w * half.sin()),
                    (w * half.cos(), w * half.sin()),
                ]
            }
            TriangleVariant::Right => {
                let (p, q) = if s.sized {
                    (rat(s.side), rat(s.second))
                } else {
                    (1.0, rat(s.alpha).to_radians().tan())
                };
                vec![(0.0, p), (0.0, 0.0), (q, 0.0)]
            }
            TriangleVariant::Equilateral => {
                vec![(0.0, 0.0), (w, 0.0), (w / 2.0, w * 3f64.sqrt() / 2.0)]
            }
        },
        ShapePrimitive::Quadrilateral { variant, .. } => match variant {
            QuadVariant::Square => vec![(0.0, 0.0), (w, 0.0), (w, w), (0.0, w)],
            QuadVariant::Rectangle => {
                let h = w * rat(s.ratio);
                vec![(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)]
            }
            QuadVariant::Parallelogram => {
                let alpha = rat(s.alpha).to_radians();
                let b = w * rat(s.ratio);
                let v3 = (b * alpha.cos(), b * alpha.sin());
                vec![(0.0, 0.0), (w, 0.0), (w + v3.0, v3.1), v3]
            }
            QuadVariant::Trapezoid => {
                let alpha = rat(s.alpha).to_radians();
                let beta = rat(s.beta).to_radians();
                let (cot_a, cot_b) = (alpha.cos() / alpha.sin(), beta.cos() / beta.sin());
                let csum = cot_a + cot_b;
                // Keep the top edge at least a third of the base: cap the
                // rise both by the room the leaning legs leave and by the
                // base itself.
                let room = if csum > 1e-9 { 0.7 * w / csum } else { 0.6 * w };
                let h = (rat(s.ratio) * room).min(0.8 * w);
                vec![
                    (0.0, 0.0),
                    (w, 0.0),
                    (w - h * cot_b, h),
                    (h * cot_a, h),
                ]
            }
            QuadVariant::Generic => {
                let alpha = rat(s.alpha).to_radians();
                let d = rat(s.depth) * w;
                let v3 = (d * alpha.cos(), d * alpha.sin());
                let b = rat(s.bulge);
                vec![
                    (0.0, 0.0),
                    (w, 0.0),
                    (w + b * v3.0, b * v3.1),
                    v3,
                ]
            }
        },
        ShapePrimitive::RegularPolygon { sides, .. } => {
            let n = *sides;
            let circum = w / (2.0 * (std::f64::consts::PI / n as f64).sin());
            (0..n)
                .map(|k| {
                    // Half-step offset puts the first edge flat at the bottom.
                    let phi = -std::f64::consts::FRAC_PI_2
                        + (k as f64 + 0.5) * std::f64::consts::TAU / n as f64;
                    (circum * phi.cos(), circum * phi.sin())
                })
                .collect()
        }
        ShapePrimitive::Circle { .. } => {
            let r = rat(s.radius);
            let mut out = vec![(0.0, 0.0)];
            for k in &s.arcs {
                let phi = ((k * ARC_GRID_DEGREES) as f64).to_radians();
                out.push((r * phi.cos(), r * phi.sin()));
            }
            // Deferred marked points (filled after placement) hold the
            // center position until then.
            while out.len() < s.slots {
                out.push((0.0, 0.0));
            }
            out
        }
    }
}

// ---------------------------------------------------------------------------
// Small planar helpers.

fn sub(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 - b.0, a.1 - b.1)
}

fn add(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}

fn scale_v(a: (f64, f64), k: f64) -> (f64, f64) {
    (a.0 * k, a.1 * k)
}

fn dot(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

fn norm(a: (f64, f64)) -> f64 {
    dot(a, a).sqrt()
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    norm(sub(a, b))
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d = dot(b, b);
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

fn centroid(pts: &[(f64, f64)]) -> (f64, f64) {
    let mut c = (0.0, 0.0);
    for p in pts {
        c = add(c, *p);
    }
    scale_v(c, 1.0 / pts.len() as f64)
}

fn circumcenter(pts: &[(f64, f64)]) -> (f64, f64) {
    if pts.len() == 3 {
        let (a, b, c) = (pts[0], pts[1], pts[2]);
        let d = 2.0 * (a.0 * (b.1 - c.1) + b.0 * (c.1 - a.1) + c.0 * (a.1 - b.1));
        let (na, nb, nc) = (dot(a, a), dot(b, b), dot(c, c));
        (
            (na * (b.1 - c.1) + nb * (c.1 - a.1) + nc * (a.1 - b.1)) / d,
            (na * (c.0 - b.0) + nb * (a.0 - c.0) + nc * (b.0 - a.0)) / d,
        )
    } else {
        // Squares, rectangles, regular polygons: the vertex centroid is the
        // circumcenter by symmetry.
        centroid(pts)
    }
}

fn incenter(pts: &[(f64, f64)]) -> ((f64, f64), f64) {
    let n = pts.len();
    let center = if n == 3 {
        let (a, b, c) = (pts[0], pts[1], pts[2]);
        let (la, lb, lc) = (dist(b, c), dist(c, a), dist(a, b));
        let p = la + lb + lc;
        (
            (la * a.0 + lb * b.0 + lc * c.0) / p,
            (la * a.1 + lb * b.1 + lc * c.1) / p,
        )
    } else {
        centroid(pts)
    };
    // The inradius is the distance to any edge line; tangency feet are the
    // perpendicular feet there.
    let foot = foot_on_line(center, pts[0], pts[1]);
    (center, dist(center, foot))
}

fn foot_on_line(c: (f64, f64), a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let ab = sub(b, a);
    let t = dot(sub(c, a), ab) / dot(ab, ab);
    add(a, scale_v(ab, t))
}

// ---------------------------------------------------------------------------
// Placement.

#[derive(Clone, Copy)]
struct BBox {
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl BBox {
    fn of(pts: &[(f64, f64)], pad: f64) -> BBox {
        let mut b = BBox {
            min_x: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            min_y: f64::INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for p in pts {
            b.min_x = b.min_x.min(p.0 - pad);
            b.max_x = b.max_x.max(p.0 + pad);
            b.min_y = b.min_y.min(p.1 - pad);
            b.max_y = b.max_y.max(p.1 + pad);
        }
        b
    }

    fn merge(&mut self, other: BBox) {
        self.min_x = self.min_x.min(other.min_x);
        self.max_x = self.max_x.max(other.max_x);
        self.min_y = self.min_y.min(other.min_y);
        self.max_y = self.max_y.max(other.max_y);
    }
}

/// Rotate-and-translate `local` so slot `pivot` lands on `target` and the
/// body of the shape points along `want` (unit not required).
fn pose_at_vertex(
    local: &[(f64, f64)],
    pivot: usize,
    target: (f64, f64),
    want: (f64, f64),
) -> Vec<(f64, f64)> {
    let p = local[pivot];
    let body = sub(centroid(local), p);
    let have = if norm(body) < 1e-9 { (1.0, 0.0) } else { body };
    let want = if norm(want) < 1e-9 { (1.0, 0.0) } else { want };
    let theta = want.1.atan2(want.0) - have.1.atan2(have.0);
    let rot = (theta.cos(), theta.sin());
    let mut out: Vec<(f64, f64)> = local
        .iter()
        .map(|z| add(target, cmul(sub(*z, p), rot)))
        .collect();
    out[pivot] = target;
    out
}

/// Similarity-map `local` so its directed edge `eb` lands on the segment
/// `q_end -> p_end` — the reverse of the host edge, which puts the shape on
/// the host's far side.
fn pose_on_edge(
    local: &[(f64, f64)],
    eb: usize,
    p_end: (f64, f64),
    q_end: (f64, f64),
) -> Vec<(f64, f64)> {
    let n = local.len();
    let (p, q) = (local[eb], local[(eb + 1) % n]);
    let m = cdiv(sub(p_end, q_end), sub(q, p));
    let mut out: Vec<(f64, f64)> = local
        .iter()
        .map(|z| add(q_end, cmul(sub(*z, p), m)))
        .collect();
    out[eb] = q_end;
    out[(eb + 1) % n] = p_end;
    out
}

// ---------------------------------------------------------------------------
// The instantiation pipeline.

pub fn instantiate(template: &Template, seed: u64) -> Result<Instantiation, TemplateError> {
    let prims = &template.primitives;
    let n = prims.len();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    // Static roles, read off the template before any drawing: which corner
    // draws an override will replace, which circles are posed by a relation
    // (radius derived, not drawn), and which circles get their marked points
    // placed relative to relation geometry instead of the angular grid.
    let mut overridden: BTreeMap<usize, usize> = BTreeMap::new();
    let mut posed_circles: BTreeSet<usize> = BTreeSet::new();
    let mut deferred_circles: BTreeSet<usize> = BTreeSet::new();
    for rel in &template.relations {
        match rel.kind {
            RelationKind::AngleCongruence { vertex_b, .. } => {
                overridden.insert(rel.b.expect("two-operand kind"), vertex_b);
            }
            RelationKind::InscribedInCircle | RelationKind::Circumscribed => {
                let b = rel.b.expect("two-operand kind");
                posed_circles.insert(b);
                deferred_circles.insert(b);
            }
            RelationKind::CircleLineIntersection { .. } => {
                deferred_circles.insert(rel.a);
            }
            _ => {}
        }
    }

    // Pass 1: draw every primitive's parameters, then the relation draws,
    // in declaration order.
    let mut samples: Vec<PrimSample> = Vec::with_capacity(n);
    for (i, prim) in prims.iter().enumerate() {
        let skip_alpha = overridden.get(&i) == Some(&0);
        let skip_beta = overridden.get(&i) == Some(&1);
        samples.push(sample_primitive(
            prim,
            &mut rng,
            skip_alpha,
            skip_beta,
            !posed_circles.contains(&i),
            !deferred_circles.contains(&i),
        ));
    }
    let rel_draws: Vec<Rational64> = template
        .relations
        .iter()
        .map(|rel| match rel.kind {
            RelationKind::CircleLineIntersection { .. } => {
                Rational64::new(rng.gen_range(-6..=6), 10)
            }
            RelationKind::PointOnSegment { .. } => Rational64::new(rng.gen_range(5..=15), 20),
            _ => int(0),
        })
        .collect();

    // Pass 2: angle-congruence overrides, copying the source corner's exact
    // measure into the target's sampled slot.
    for rel in &template.relations {
        if let RelationKind::AngleCongruence { vertex_a, vertex_b } = rel.kind {
            let b = rel.b.expect("two-operand kind");
            let measure = corner_measure(&prims[rel.a], &samples[rel.a], vertex_a);
            if vertex_b == 0 {
                samples[b].alpha = measure;
            } else {
                samples[b].beta = measure;
            }
        }
    }

    // Pass 3: local coordinates.
    let locals: Vec<Vec<(f64, f64)>> = prims
        .iter()
        .zip(&samples)
        .map(|(p, s)| local_prototype(p, s))
        .collect();

    // Pass 4: labels. Union slots that relations identify, count classes
    // plus relation-owned fresh points, and allocate letters.
    let counts: Vec<usize> = samples.iter().map(|s| s.slots).collect();
    let offsets = slot_offsets(&counts);
    let total: usize = counts.iter().sum();
    let mut classes = slot_classes(template, &counts);
    let mut roots = BTreeSet::new();
    for gid in 0..total {
        roots.insert(classes.find(gid));
    }
    let fresh_per_rel: Vec<usize> = template
        .relations
        .iter()
        .map(|rel| rel.fresh_points(prims[rel.a].vertex_count().unwrap_or(0)))
        .collect();
    let needed = roots.len() + fresh_per_rel.iter().sum::<usize>();
    if needed > 26 {
        return Err(TemplateError::LabelExhaustion {
            template: template.id.clone(),
            needed,
        });
    }

    let mut used = [false; 26];
    let mut class_label: BTreeMap<usize, PointLabel> = BTreeMap::new();
    let mut labels: Vec<Vec<PointLabel>> = Vec::with_capacity(n);
    for (i, prim) in prims.iter().enumerate() {
        let mut mine = Vec::with_capacity(counts[i]);
        for slot in 0..counts[i] {
            let root = classes.find(offsets[i] + slot);
            let label = match class_label.get(&root) {
                Some(&l) => l,
                None => {
                    // Circle centers start scanning at O, the customary
                    // center letter; everything else starts at A.
                    let start = if prim.is_circle() && slot == 0 { 14 } else { 0 };
                    let l = alloc_label(&mut used, start);
                    class_label.insert(root, l);
                    l
                }
            };
            mine.push(label);
        }
        labels.push(mine);
    }
    let fresh_labels: Vec<Vec<PointLabel>> = fresh_per_rel
        .iter()
        .map(|&k| (0..k).map(|_| alloc_label(&mut used, 0)).collect())
        .collect();

    // Pass 5: placement. Primitive 0 anchors the frame; every posing
    // relation maps its second operand into place; whatever is left lands
    // disjointly to the right of everything placed so far.
    let mut coords: Vec<Option<Vec<(f64, f64)>>> = vec![None; n];
    let mut radii: Vec<f64> = samples.iter().map(|s| rat(s.radius)).collect();
    let mut bbox: Option<BBox> = None;
    // Points each circle picks up from relations: label and position.
    let mut members: Vec<Vec<(PointLabel, (f64, f64))>> = vec![Vec::new(); n];

    place_anchor(0, &locals, &radii, prims, &mut coords, &mut bbox);

    for (j, rel) in template.relations.iter().enumerate() {
        if !rel.poses_b() {
            continue;
        }
        if coords[rel.a].is_none() {
            place_anchor(rel.a, &locals, &radii, prims, &mut coords, &mut bbox);
        }
        let b = rel.b.expect("posing kinds have two operands");
        let pos_a = coords[rel.a].clone().expect("just placed");
        let placed: Vec<(f64, f64)> = match rel.kind {
            RelationKind::SharedVertex { vertex_a, vertex_b } => {
                let target = pos_a[vertex_a];
                let away = sub(target, centroid(&pos_a));
                pose_at_vertex(&locals[b], vertex_b, target, away)
            }
            RelationKind::SharedEdge { edge_a, edge_b } => {
                let na = pos_a.len();
                pose_on_edge(
                    &locals[b],
                    edge_b,
                    pos_a[edge_a],
                    pos_a[(edge_a + 1) % na],
                )
            }
            RelationKind::InscribedInCircle => {
                let center = circumcenter(&pos_a);
                radii[b] = dist(center, pos_a[0]);
                for (v, lab) in labels[rel.a].iter().enumerate() {
                    members[b].push((*lab, pos_a[v]));
                }
                let mut c = vec![center; counts[b]];
                c.truncate(counts[b]);
                c
            }
            RelationKind::Circumscribed => {
                let (center, r) = incenter(&pos_a);
                radii[b] = r;
                let na = pos_a.len();
                for (e, lab) in fresh_labels[j].iter().enumerate() {
                    let foot = foot_on_line(center, pos_a[e], pos_a[(e + 1) % na]);
                    members[b].push((*lab, foot));
                }
                vec![center; counts[b]]
            }
            RelationKind::CircleLineIntersection { points: [pi, pj] } => {
                // Here the circle is operand a and the line is being posed:
                // a horizontal chord at signed offset eta·r, with the two
                // selected line points pinned to its ends.
                let center = pos_a[0];
                let r = radii[rel.a];
                let eta = rat(rel_draws[j]);
                let half = r * (1.0 - eta * eta).sqrt();
                let y = center.1 + eta * r;
                let xs: Vec<f64> = locals[b].iter().map(|p| p.0).collect();
                let scale = 2.0 * half / (xs[pj] - xs[pi]);
                let line: Vec<(f64, f64)> = xs
                    .iter()
                    .map(|&x| (center.0 - half + (x - xs[pi]) * scale, y))
                    .collect();
                members[rel.a].push((labels[b][pi], line[pi]));
                members[rel.a].push((labels[b][pj], line[pj]));
                line
            }
            _ => unreachable!("poses_b covers exactly the kinds above"),
        };
        let pad = if prims[b].is_circle() { radii[b] } else { 0.0 };
        let bb = BBox::of(&placed, pad);
        match &mut bbox {
            Some(whole) => whole.merge(bb),
            None => bbox = Some(bb),
        }
        coords[b] = Some(placed);
    }
    for i in 0..n {
        if coords[i].is_none() {
            place_anchor(i, &locals, &radii, prims, &mut coords, &mut bbox);
        }
    }
    let mut coords: Vec<Vec<(f64, f64)>> = coords.into_iter().map(Option::unwrap).collect();

    // Fill marked points on circles tied into relations: spread them along
    // the widest free arc so they cannot crowd the points already there.
    for &i in &deferred_circles {
        let m = samples[i].marked;
        if m == 0 {
            continue;
        }
        let center = coords[i][0];
        let r = radii[i];
        let mut angles: Vec<f64> = members[i]
            .iter()
            .map(|(_, p)| (p.1 - center.1).atan2(p.0 - center.0))
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
        let (start, width) = widest_gap(&angles);
        for t in 0..m {
            let phi = start + width * (t + 1) as f64 / (m + 1) as f64;
            coords[i][t + 1] = add(center, (r * phi.cos(), r * phi.sin()));
        }
    }

    // Relation-owned points that do not move anything: midpoints and
    // interior points on edges.
    let mut fresh_coords: Vec<Vec<(f64, f64)>> = vec![Vec::new(); template.relations.len()];
    for (j, rel) in template.relations.iter().enumerate() {
        match rel.kind {
            RelationKind::MidpointOnEdge { edge } => {
                let pa = &coords[rel.a];
                let na = pa.len();
                fresh_coords[j].push(scale_v(add(pa[edge], pa[(edge + 1) % na]), 0.5));
            }
            RelationKind::PointOnSegment { edge } => {
                let pa = &coords[rel.a];
                let na = pa.len();
                let t = rat(rel_draws[j]);
                let (a, b2) = (pa[edge], pa[(edge + 1) % na]);
                fresh_coords[j].push(add(a, scale_v(sub(b2, a), t)));
            }
            RelationKind::Circumscribed => {
                let b = rel.b.expect("two-operand kind");
                fresh_coords[j] = members[b].iter().map(|(_, p)| *p).collect();
            }
            _ => {}
        }
    }

    // Pass 6: emission.
    let doc = emit_document(template, &samples, &labels, &fresh_labels, &coords, &members);
    let caption = render_caption(&template.caption_pattern, prims, &labels);
    let params = collect_params(template, &samples, &rel_draws);

    let mut points: BTreeMap<PointLabel, (f64, f64)> = BTreeMap::new();
    for i in 0..n {
        for (slot, lab) in labels[i].iter().enumerate() {
            points.entry(*lab).or_insert(coords[i][slot]);
        }
    }
    for (j, labs) in fresh_labels.iter().enumerate() {
        for (k, lab) in labs.iter().enumerate() {
            points.entry(*lab).or_insert(fresh_coords[j][k]);
        }
    }
    let mut circles: BTreeMap<PointLabel, f64> = BTreeMap::new();
    for (i, prim) in prims.iter().enumerate() {
        if prim.is_circle() {
            circles.insert(labels[i][0], radii[i]);
        }
    }

    let all_labels: Vec<PointLabel> = points.keys().copied().collect();
    let prototype = Figure::new(points, circles, doc.clone());
    Ok(Instantiation {
        doc,
        caption,
        labels: all_labels,
        params,
        seed,
        prototype,
    })
}

fn alloc_label(used: &mut [bool; 26], start: usize) -> PointLabel {
    for k in 0..26 {
        let idx = (start + k) % 26;
        if !used[idx] {
            used[idx] = true;
            return PointLabel::from_letter((b'A' + idx as u8) as char)
                .expect("A..Z are valid labels");
        }
    }
    unreachable!("label budget was checked before allocation")
}

fn place_anchor(
    i: usize,
    locals: &[Vec<(f64, f64)>],
    radii: &[f64],
    prims: &[ShapePrimitive],
    coords: &mut [Option<Vec<(f64, f64)>>],
    bbox: &mut Option<BBox>,
) {
    let pad = if prims[i].is_circle() { radii[i] } else { 0.0 };
    let local_bb = BBox::of(&locals[i], pad);
    let placed = match bbox {
        None => locals[i].clone(),
        Some(whole) => {
            let dx = whole.max_x + DISJOINT_GAP - local_bb.min_x;
            let dy = -(local_bb.min_y + local_bb.max_y) / 2.0;
            locals[i].iter().map(|p| (p.0 + dx, p.1 + dy)).collect()
        }
    };
    let bb = BBox::of(&placed, pad);
    match bbox {
        Some(whole) => whole.merge(bb),
        None => *bbox = Some(bb),
    }
    coords[i] = Some(placed);
}

/// Widest angular gap between consecutive members (wrapping), returned as
/// (start, width) in radians. A single member leaves the whole remaining
/// circle; ties break toward the earliest start for determinism.
fn widest_gap(sorted: &[f64]) -> (f64, f64) {
    if sorted.is_empty() {
        return (0.0, std::f64::consts::TAU);
    }
    let n = sorted.len();
    let mut best = (sorted[0], -1.0);
    for k in 0..n {
        let a = sorted[k];
        let b = if k + 1 < n {
            sorted[k + 1]
        } else {
            sorted[0] + std::f64::consts::TAU
        };
        if b - a > best.1 {
            best = (a, b - a);
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Document emission.

fn emit_document(
    template: &Template,
    samples: &[PrimSample],
    labels: &[Vec<PointLabel>],
    fresh_labels: &[Vec<PointLabel>],
    coords: &[Vec<(f64, f64)>],
    members: &[Vec<(PointLabel, (f64, f64))>],
) -> CdlDocument {
    let prims = &template.primitives;
    let mut doc = CdlDocument::new();

    // Construction statements: one Shape or Collinear per primitive.
    for (i, prim) in prims.iter().enumerate() {
        if let Some(nv) = prim.vertex_count() {
            let edges = (0..nv)
                .map(|v| {
                    Edge::seg(labels[i][v], labels[i][(v + 1) % nv]).expect("distinct endpoints")
                })
                .collect();
            add_cons(&mut doc, ConsStatement::shape(edges).expect("closed polygon cycle"));
        } else if prim.is_line() {
            add_cons(
                &mut doc,
                ConsStatement::collinear(labels[i].clone()).expect("3+ distinct points"),
            );
        }
    }
    // Relation-owned collinearities: tangency points sit on their edges,
    // midpoints and split points sit inside theirs.
    for (j, rel) in template.relations.iter().enumerate() {
        match rel.kind {
            RelationKind::Circumscribed => {
                let na = labels[rel.a].len();
                for e in 0..na {
                    add_cons(
                        &mut doc,
                        ConsStatement::collinear(vec![
                            labels[rel.a][e],
                            fresh_labels[j][e],
                            labels[rel.a][(e + 1) % na],
                        ])
                        .expect("tangency point lies inside its edge"),
                    );
                }
            }
            RelationKind::MidpointOnEdge { edge } | RelationKind::PointOnSegment { edge } => {
                let na = labels[rel.a].len();
                add_cons(
                    &mut doc,
                    ConsStatement::collinear(vec![
                        labels[rel.a][edge],
                        fresh_labels[j][0],
                        labels[rel.a][(edge + 1) % na],
                    ])
                    .expect("interior point lies inside its edge"),
                );
            }
            _ => {}
        }
    }
    // One Cocircular per circle, merging its own marked points with every
    // point a relation put on it, in angular order around the center.
    for (i, prim) in prims.iter().enumerate() {
        if !prim.is_circle() {
            continue;
        }
        let center = coords[i][0];
        let mut mems: Vec<(PointLabel, (f64, f64))> = Vec::new();
        for slot in 1..labels[i].len() {
            mems.push((labels[i][slot], coords[i][slot]));
        }
        mems.extend(members[i].iter().copied());
        if mems.is_empty() {
            continue;
        }
        mems.sort_by(|a, b| {
            let pa = (a.1 .1 - center.1).atan2(a.1 .0 - center.0);
            let pb = (b.1 .1 - center.1).atan2(b.1 .0 - center.0);
            pa.partial_cmp(&pb).expect("finite angles")
        });
        mems.dedup_by_key(|m| m.0);
        let on: Vec<PointLabel> = mems.into_iter().map(|m| m.0).collect();
        add_cons(
            &mut doc,
            ConsStatement::cocircular(labels[i][0], on).expect("center distinct from members"),
        );
    }

    // Image statements, shape by shape.
    for (i, prim) in prims.iter().enumerate() {
        let s = &samples[i];
        let labs = &labels[i];
        match prim {
            ShapePrimitive::Triangle { variant, .. } => match variant {
                TriangleVariant::Scalene => {
                    add_img(&mut doc, equal_lit(corner(labs, 0), s.alpha));
                    add_img(&mut doc, equal_lit(corner(labs, 1), s.beta));
                    if s.sized {
                        add_img(&mut doc, equal_lit(len(labs, 0, 1), s.side));
                    }
                }
                TriangleVariant::Isosceles => {
                    add_img(&mut doc, equal_terms(len(labs, 0, 1), len(labs, 0, 2)));
                    add_img(&mut doc, equal_lit(corner(labs, 0), s.alpha));
                    if s.sized {
                        add_img(&mut doc, equal_lit(len(labs, 0, 1), s.side));
                    }
                }
                TriangleVariant::Equilateral => {
                    side_chain(&mut doc, labs);
                    if s.sized {
                        add_img(&mut doc, equal_lit(len(labs, 0, 1), s.side));
                    }
                }
                TriangleVariant::Right => {
                    add_img(&mut doc, equal_lit(corner(labs, 1), int(90)));
                    if s.sized {
                        add_img(&mut doc, equal_lit(len(labs, 1, 0), s.side));
                        add_img(&mut doc, equal_lit(len(labs, 1, 2), s.second));
                    } else {
                        add_img(&mut doc, equal_lit(corner(labs, 0), s.alpha));
                    }
                }
            },
            ShapePrimitive::Quadrilateral { variant, .. } => match variant {
                QuadVariant::Square => {
                    side_chain(&mut doc, labs);
                    add_img(&mut doc, equal_lit(corner(labs, 0), int(90)));
                    if s.sized {
                        add_img(&mut doc, equal_lit(len(labs, 0, 1), s.side));
                    }
                }
                QuadVariant::Rectangle => {
                    add_img(&mut doc, equal_terms(len(labs, 0, 1), len(labs, 2, 3)));
                    add_img(&mut doc, equal_terms(len(labs, 1, 2), len(labs, 3, 0)));
                    add_img(&mut doc, equal_lit(corner(labs, 0), int(90)));
                    if s.sized {
                        add_img(&mut doc, equal_lit(len(labs, 0, 1), s.side));
                        add_img(&mut doc, equal_lit(len(labs, 1, 2), s.second));
                    }
                }
                QuadVariant::Parallelogram => {
                    add_img(&mut doc, equal_terms(len(labs, 0, 1), len(labs, 2, 3)));
                    add_img(&mut doc, equal_terms(len(labs, 1, 2), len(labs, 3, 0)));
                    add_img(&mut doc, equal_lit(corner(labs, 0), s.alpha));
                    if s.sized {
                        add_img(&mut doc, equal_lit(len(labs, 0, 1), s.side));
                        add_img(&mut doc, equal_lit(len(labs, 0, 3), s.second));
                    }
                }
                QuadVariant::Trapezoid => {
                    let base = LineSeg::new(labs[0], labs[1]).expect("distinct endpoints");
                    let top = LineSeg::new(labs[3], labs[2]).expect("distinct endpoints");
                    add_img(&mut doc, ImgStatement::parallel(base, top));
                    add_img(&mut doc, equal_lit(corner(labs, 0), s.alpha));
                    add_img(&mut doc, equal_lit(corner(labs, 1), s.beta));
                    if s.sized {
                        add_img(&mut doc, equal_lit(len(labs, 0, 1), s.side));
                    }
                }
                QuadVariant::Generic => {
                    add_img(&mut doc, equal_lit(corner(labs, 0), s.alpha));
                    if s.sized {
                        add_img(&mut doc, equal_lit(len(labs, 0, 1), s.side));
                    }
                }
            },
            ShapePrimitive::RegularPolygon { sides, .. } => {
                side_chain(&mut doc, labs);
                let interior = Rational64::new(((*sides - 2) * 180) as i64, *sides as i64);
                for v in 0..*sides {
                    add_img(&mut doc, equal_lit(corner(labs, v), interior));
                }
                if s.sized {
                    add_img(&mut doc, equal_lit(len(labs, 0, 1), s.side));
                }
            }
            ShapePrimitive::Circle { .. } => {
                // A standalone circle pins its scale through one spoke; a
                // posed circle's radius is whatever the host shape implies.
                if !s.arcs.is_empty() {
                    add_img(&mut doc, equal_lit(len(labs, 0, 1), s.radius));
                }
            }
            ShapePrimitive::PointLine { .. } => {}
        }
    }
    for (j, rel) in template.relations.iter().enumerate() {
        match rel.kind {
            RelationKind::AngleCongruence { vertex_a, vertex_b } => {
                let b = rel.b.expect("two-operand kind");
                add_img(
                    &mut doc,
                    equal_terms(corner(&labels[rel.a], vertex_a), corner(&labels[b], vertex_b)),
                );
            }
            RelationKind::MidpointOnEdge { edge } => {
                let na = labels[rel.a].len();
                let m = fresh_labels[j][0];
                let a = MeasureTerm::length(labels[rel.a][edge], m).expect("distinct");
                let b = MeasureTerm::length(m, labels[rel.a][(edge + 1) % na]).expect("distinct");
                add_img(&mut doc, equal_terms(a, b));
            }
            _ => {}
        }
    }

    doc.check_label_closure()
        .expect("every emitted label appears in a construction statement");
    doc
}

fn add_cons(doc: &mut CdlDocument, stmt: ConsStatement) {
    doc.insert_cons(stmt).expect("emitted statement is well-formed");
}

fn add_img(doc: &mut CdlDocument, stmt: ImgStatement) {
    doc.insert_img(stmt).expect("emitted statement is well-formed");
}

fn len(labs: &[PointLabel], u: usize, v: usize) -> MeasureTerm {
    MeasureTerm::length(labs[u], labs[v]).expect("distinct endpoints")
}

/// The interior angle term at vertex `v` of a polygon's label cycle.
fn corner(labs: &[PointLabel], v: usize) -> MeasureTerm {
    let nv = labs.len();
    MeasureTerm::angle(labs[(v + nv - 1) % nv], labs[v], labs[(v + 1) % nv])
        .expect("distinct angle points")
}

fn equal_lit(term: MeasureTerm, value: Rational64) -> ImgStatement {
    ImgStatement::equal_literal(term, value).expect("literal in range")
}

fn equal_terms(a: MeasureTerm, b: MeasureTerm) -> ImgStatement {
    ImgStatement::equal(EqualOperand::Term(a), EqualOperand::Term(b))
        .expect("same-dimension terms")
}

/// All sides equal, stated as a closed chain of neighbor equalities.
fn side_chain(doc: &mut CdlDocument, labs: &[PointLabel]) {
    let nv = labs.len();
    for v in 0..nv {
        let a = len(labs, v, (v + 1) % nv);
        let b = len(labs, (v + 1) % nv, (v + 2) % nv);
        add_img(doc, equal_terms(a, b));
    }
}

fn render_caption(
    pattern: &str,
    prims: &[ShapePrimitive],
    labels: &[Vec<PointLabel>],
) -> String {
    let mut out = String::with_capacity(pattern.len() + 16);
    let mut it = pattern.chars();
    while let Some(c) = it.next() {
        if c != '{' {
            out.push(c);
            continue;
        }
        let d = it.next().and_then(|d| d.to_digit(10)).expect("validated slot") as usize;
        it.next(); // the closing brace, validated at load
        if prims[d].is_circle() {
            out.push_str(&labels[d][0].to_string());
        } else {
            for lab in &labels[d] {
                out.push_str(&lab.to_string());
            }
        }
    }
    out
}

fn collect_params(
    template: &Template,
    samples: &[PrimSample],
    rel_draws: &[Rational64],
) -> BTreeMap<String, Rational64> {
    let mut params = BTreeMap::new();
    for (i, (prim, s)) in template.primitives.iter().zip(samples).enumerate() {
        let mut put = |k: &str, v: Rational64| {
            params.insert(format!("p{i}.{k}"), v);
        };
        match prim {
            ShapePrimitive::PointLine { .. } => {
                put("count", int(s.marked as i64));
                for (t, g) in s.gaps.iter().enumerate() {
                    put(&format!("gap{t}"), *g);
                }
            }
            ShapePrimitive::Triangle { variant, .. } => match variant {
                TriangleVariant::Scalene => {
                    put("alpha", s.alpha);
                    put("beta", s.beta);
                    if s.sized {
                        put("side", s.side);
                    }
                }
                TriangleVariant::Isosceles => {
                    put("alpha", s.alpha);
                    if s.sized {
                        put("side", s.side);
                    }
                }
                TriangleVariant::Right => {
                    if s.sized {
                        put("leg_a", s.side);
                        put("leg_b", s.second);
                    } else {
                        put("alpha", s.alpha);
                    }
                }
                TriangleVariant::Equilateral => {
                    if s.sized {
                        put("side", s.side);
                    }
                }
            },
            ShapePrimitive::Quadrilateral { variant, .. } => match variant {
                QuadVariant::Square => {
                    if s.sized {
                        put("side", s.side);
                    }
                }
                QuadVariant::Rectangle => {
                    if s.sized {
                        put("width", s.side);
                        put("height", s.second);
                    } else {
                        put("ratio", s.ratio);
                    }
                }
                QuadVariant::Parallelogram => {
                    put("alpha", s.alpha);
                    if s.sized {
                        put("side", s.side);
                        put("side2", s.second);
                    } else {
                        put("ratio", s.ratio);
                    }
                }
                QuadVariant::Trapezoid => {
                    put("alpha", s.alpha);
                    put("beta", s.beta);
                    put("rho", s.ratio);
                    if s.sized {
                        put("side", s.side);
                    }
                }
                QuadVariant::Generic => {
                    put("alpha", s.alpha);
                    put("depth", s.depth);
                    put("bulge", s.bulge);
                    if s.sized {
                        put("side", s.side);
                    }
                }
            },
            ShapePrimitive::RegularPolygon { .. } => {
                if s.sized {
                    put("side", s.side);
                }
            }
            ShapePrimitive::Circle { .. } => {
                put("count", int(s.marked as i64));
                if s.radius != int(0) {
                    put("radius", s.radius);
                }
                for (t, k) in s.arcs.iter().enumerate() {
                    put(&format!("arc{t}"), int(k * ARC_GRID_DEGREES));
                }
            }
        }
    }
    for (j, rel) in template.relations.iter().enumerate() {
        match rel.kind {
            RelationKind::CircleLineIntersection { .. } => {
                params.insert(format!("r{j}.offset"), rel_draws[j]);
            }
            RelationKind::PointOnSegment { .. } => {
                params.insert(format!("r{j}.split"), rel_draws[j]);
            }
            _ => {}
        }
    }
    params
}
