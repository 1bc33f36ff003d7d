//! Statement types for the two CDL sections.
//!
//! Construction statements (`ConsStatement`) declare what exists: closed
//! edge-cycles, collinear point runs, and points on a common circle. Image
//! statements (`ImgStatement`) declare measured relationships: equalities
//! over lengths and angles, parallelism, and perpendicularity.
//!
//! Every statement has a single canonical spelling so that documents compare
//! by meaning. The rules live in [`ConsStatement::canonicalize`] and
//! [`ImgStatement::canonicalize`]; the smart constructors apply them eagerly
//! and validate structure, so values built through them are always canonical.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Rational64;
use num_traits::Zero;

use crate::error::ValidationError;
use crate::label::{fmt_label_group, PointLabel};

/// An undirected segment between two distinct points, stored with its
/// endpoints in sorted order. Used wherever segment identity (not traversal
/// direction) matters: length terms, parallel and perpendicular relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineSeg {
    a: PointLabel,
    b: PointLabel,
}

impl LineSeg {
    /// Build a segment, normalizing endpoint order. The endpoints must be
    /// distinct.
    pub fn new(p: PointLabel, q: PointLabel) -> Result<Self, ValidationError> {
        if p == q {
            return Err(ValidationError::CoincidentEndpoints(p.to_string()));
        }
        let (a, b) = if p <= q { (p, q) } else { (q, p) };
        Ok(LineSeg { a, b })
    }

    /// The lexicographically smaller endpoint.
    pub fn a(&self) -> PointLabel {
        self.a
    }

    /// The lexicographically larger endpoint.
    pub fn b(&self) -> PointLabel {
        self.b
    }
}

impl fmt::Display for LineSeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_label_group(&[self.a, self.b], f)
    }
}

/// One directed edge of a shape cycle: a straight segment or a circular arc.
///
/// Direction is semantic — `Seg { from: A, to: B }` and `Seg { from: B, to: A }`
/// are different edges — so no endpoint normalization happens here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Edge {
    /// Straight segment from `from` to `to`. Printed as the two labels
    /// juxtaposed: `AB`.
    Seg { from: PointLabel, to: PointLabel },
    /// Arc of the circle centered at `center`, from `from` to `to`. Printed
    /// as three juxtaposed labels, center first: `OAB`.
    Arc {
        center: PointLabel,
        from: PointLabel,
        to: PointLabel,
    },
}

impl Edge {
    /// Build a segment edge; the endpoints must be distinct.
    pub fn seg(from: PointLabel, to: PointLabel) -> Result<Self, ValidationError> {
        if from == to {
            return Err(ValidationError::CoincidentEndpoints(from.to_string()));
        }
        Ok(Edge::Seg { from, to })
    }

    /// Build an arc edge; the endpoints must be distinct from each other and
    /// from the center.
    pub fn arc(
        center: PointLabel,
        from: PointLabel,
        to: PointLabel,
    ) -> Result<Self, ValidationError> {
        if from == to {
            return Err(ValidationError::CoincidentEndpoints(from.to_string()));
        }
        if center == from || center == to {
            return Err(ValidationError::ArcCenterOnArc(center.to_string()));
        }
        Ok(Edge::Arc { center, from, to })
    }

    /// The point this edge starts at.
    pub fn start(&self) -> PointLabel {
        match *self {
            Edge::Seg { from, .. } | Edge::Arc { from, .. } => from,
        }
    }

    /// The point this edge ends at.
    pub fn end(&self) -> PointLabel {
        match *self {
            Edge::Seg { to, .. } | Edge::Arc { to, .. } => to,
        }
    }

    fn validate(&self) -> Result<(), ValidationError> {
        match *self {
            Edge::Seg { from, to } => {
                Edge::seg(from, to)?;
            }
            Edge::Arc { center, from, to } => {
                Edge::arc(center, from, to)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Edge::Seg { from, to } => fmt_label_group(&[from, to], f),
            Edge::Arc { center, from, to } => fmt_label_group(&[center, from, to], f),
        }
    }
}

/// A measurable quantity: the length of a segment or the degree measure of
/// an angle. `MeasureOfAngle(P, Q, R)` has its vertex at `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeasureTerm {
    LengthOfLine(LineSeg),
    MeasureOfAngle(PointLabel, PointLabel, PointLabel),
}

impl MeasureTerm {
    /// Length of the segment `pq`; the points must be distinct.
    pub fn length(p: PointLabel, q: PointLabel) -> Result<Self, ValidationError> {
        Ok(MeasureTerm::LengthOfLine(LineSeg::new(p, q)?))
    }

    /// Measure of the angle with vertex `q`, canonicalized so the first ray
    /// label is ≤ the last. The three points must be pairwise distinct.
    pub fn angle(p: PointLabel, q: PointLabel, r: PointLabel) -> Result<Self, ValidationError> {
        if p == q || q == r || p == r {
            return Err(ValidationError::DegenerateAngle);
        }
        let (p, q, r) = canonical_angle(p, q, r);
        Ok(MeasureTerm::MeasureOfAngle(p, q, r))
    }

    fn canonicalize(self) -> Self {
        match self {
            MeasureTerm::LengthOfLine(_) => self,
            MeasureTerm::MeasureOfAngle(p, q, r) => {
                let (p, q, r) = canonical_angle(p, q, r);
                MeasureTerm::MeasureOfAngle(p, q, r)
            }
        }
    }

    fn validate(&self) -> Result<(), ValidationError> {
        if let MeasureTerm::MeasureOfAngle(p, q, r) = self {
            if p == q || q == r || p == r {
                return Err(ValidationError::DegenerateAngle);
            }
        }
        Ok(())
    }
}

impl fmt::Display for MeasureTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MeasureTerm::LengthOfLine(seg) => write!(f, "LengthOfLine({seg})"),
            MeasureTerm::MeasureOfAngle(p, q, r) => {
                write!(f, "MeasureOfAngle(")?;
                fmt_label_group(&[p, q, r], f)?;
                write!(f, ")")
            }
        }
    }
}

/// One side of an `Equal` statement: a measure term or an exact rational
/// literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EqualOperand {
    Term(MeasureTerm),
    Literal(Rational64),
}

impl fmt::Display for EqualOperand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EqualOperand::Term(t) => t.fmt(f),
            EqualOperand::Literal(r) => r.fmt(f),
        }
    }
}

/// Orient an angle's point triple so the first ray label is ≤ the last.
/// `(P, Q, R)` and `(R, Q, P)` name the same angle.
pub fn canonical_angle(
    p: PointLabel,
    q: PointLabel,
    r: PointLabel,
) -> (PointLabel, PointLabel, PointLabel) {
    if p <= r {
        (p, q, r)
    } else {
        (r, q, p)
    }
}

/// A construction statement: what the diagram is made of.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConsStatement {
    /// A closed cycle of directed edges (the end of each edge is the start
    /// of the next, cyclically).
    Shape(Vec<Edge>),
    /// Three or more distinct points on a common line, in order along it.
    Collinear(Vec<PointLabel>),
    /// Points on a common circle, named by its center.
    Cocircular {
        center: PointLabel,
        on: Vec<PointLabel>,
    },
}

impl ConsStatement {
    /// Build a shape from a closed edge cycle. Validates closure and edge
    /// structure, then canonicalizes the rotation.
    pub fn shape(edges: Vec<Edge>) -> Result<Self, ValidationError> {
        let stmt = ConsStatement::Shape(edges);
        stmt.validate()?;
        Ok(stmt.canonicalize())
    }

    /// Build a collinear run from at least three distinct points.
    pub fn collinear(points: Vec<PointLabel>) -> Result<Self, ValidationError> {
        let stmt = ConsStatement::Collinear(points);
        stmt.validate()?;
        Ok(stmt.canonicalize())
    }

    /// Build a cocircular group: a center and at least one distinct
    /// on-circle point.
    pub fn cocircular(center: PointLabel, on: Vec<PointLabel>) -> Result<Self, ValidationError> {
        let stmt = ConsStatement::Cocircular { center, on };
        stmt.validate()?;
        Ok(stmt.canonicalize())
    }

    /// Check the structural invariants without changing the statement.
    pub fn validate(&self) -> Result<(), ValidationError> {
        match self {
            ConsStatement::Shape(edges) => {
                if edges.is_empty() {
                    return Err(ValidationError::EmptyShape);
                }
                for edge in edges {
                    edge.validate()?;
                }
                for (i, edge) in edges.iter().enumerate() {
                    let next = &edges[(i + 1) % edges.len()];
                    if edge.end() != next.start() {
                        return Err(ValidationError::OpenCycle {
                            end: edge.end().to_string(),
                            start: next.start().to_string(),
                        });
                    }
                }
                Ok(())
            }
            ConsStatement::Collinear(points) => {
                if points.len() < 3 {
                    return Err(ValidationError::ShortCollinear(points.len()));
                }
                check_distinct(points)
            }
            ConsStatement::Cocircular { center, on } => {
                if on.is_empty() {
                    return Err(ValidationError::EmptyCocircular);
                }
                if on.contains(center) {
                    return Err(ValidationError::CenterOnCircle(center.to_string()));
                }
                check_distinct(on)
            }
        }
    }

    /// Rewrite the statement into its canonical spelling:
    ///
    /// * `Shape`: lexicographically minimal rotation of the edge cycle.
    ///   Rotation only — reversing the cycle would flip every edge's
    ///   direction, which is a different shape.
    /// * `Collinear`: the sequence or its reversal, whichever is smaller.
    /// * `Cocircular`: minimal rotation over the on-circle sequence and its
    ///   reversal (cyclic order has no distinguished start or direction).
    pub fn canonicalize(self) -> Self {
        match self {
            ConsStatement::Shape(edges) => ConsStatement::Shape(min_rotation(&edges)),
            ConsStatement::Collinear(points) => {
                let mut rev = points.clone();
                rev.reverse();
                ConsStatement::Collinear(points.min(rev))
            }
            ConsStatement::Cocircular { center, on } => {
                let mut rev = on.clone();
                rev.reverse();
                ConsStatement::Cocircular {
                    center,
                    on: min_rotation(&on).min(min_rotation(&rev)),
                }
            }
        }
    }

    /// Every point label the statement mentions (arc centers and circle
    /// centers included).
    pub fn labels(&self) -> BTreeSet<PointLabel> {
        let mut out = BTreeSet::new();
        match self {
            ConsStatement::Shape(edges) => {
                for edge in edges {
                    match *edge {
                        Edge::Seg { from, to } => {
                            out.insert(from);
                            out.insert(to);
                        }
                        Edge::Arc { center, from, to } => {
                            out.insert(center);
                            out.insert(from);
                            out.insert(to);
                        }
                    }
                }
            }
            ConsStatement::Collinear(points) => out.extend(points.iter().copied()),
            ConsStatement::Cocircular { center, on } => {
                out.insert(*center);
                out.extend(on.iter().copied());
            }
        }
        out
    }

    /// The statement's keyword, as it appears in CDL text.
    pub fn keyword(&self) -> &'static str {
        match self {
            ConsStatement::Shape(_) => "Shape",
            ConsStatement::Collinear(_) => "Collinear",
            ConsStatement::Cocircular { .. } => "Cocircular",
        }
    }
}

impl fmt::Display for ConsStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConsStatement::Shape(edges) => {
                write!(f, "Shape(")?;
                for (i, edge) in edges.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    edge.fmt(f)?;
                }
                write!(f, ")")
            }
            ConsStatement::Collinear(points) => {
                write!(f, "Collinear(")?;
                fmt_label_group(points, f)?;
                write!(f, ")")
            }
            ConsStatement::Cocircular { center, on } => {
                write!(f, "Cocircular({center},")?;
                fmt_label_group(on, f)?;
                write!(f, ")")
            }
        }
    }
}

/// An image statement: a measured relationship the diagram exhibits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ImgStatement {
    /// Equality between two measures, or between a measure and an exact
    /// rational literal. Canonical form puts a literal on the right and
    /// sorts a term pair.
    Equal(EqualOperand, EqualOperand),
    ParallelBetweenLine(LineSeg, LineSeg),
    PerpendicularBetweenLine(LineSeg, LineSeg),
}

impl ImgStatement {
    /// Build an equality. At least one operand must be a measure term; two
    /// terms must measure the same dimension; a literal paired with a length
    /// must be ≥ 0 and with an angle must lie in (0, 180).
    pub fn equal(lhs: EqualOperand, rhs: EqualOperand) -> Result<Self, ValidationError> {
        let stmt = ImgStatement::Equal(lhs, rhs);
        stmt.validate()?;
        Ok(stmt.canonicalize())
    }

    /// Convenience: equate a measure term with a rational literal.
    pub fn equal_literal(term: MeasureTerm, value: Rational64) -> Result<Self, ValidationError> {
        ImgStatement::equal(EqualOperand::Term(term), EqualOperand::Literal(value))
    }

    /// Parallelism between two segments, operands sorted.
    pub fn parallel(a: LineSeg, b: LineSeg) -> Self {
        ImgStatement::ParallelBetweenLine(a.min(b), a.max(b))
    }

    /// Perpendicularity between two segments, operands sorted.
    pub fn perpendicular(a: LineSeg, b: LineSeg) -> Self {
        ImgStatement::PerpendicularBetweenLine(a.min(b), a.max(b))
    }

    /// Check the structural invariants without changing the statement.
    pub fn validate(&self) -> Result<(), ValidationError> {
        match self {
            ImgStatement::Equal(lhs, rhs) => {
                if let EqualOperand::Term(t) = lhs {
                    t.validate()?;
                }
                if let EqualOperand::Term(t) = rhs {
                    t.validate()?;
                }
                match (lhs, rhs) {
                    (EqualOperand::Literal(_), EqualOperand::Literal(_)) => {
                        Err(ValidationError::LiteralOnlyEqual)
                    }
                    (EqualOperand::Term(a), EqualOperand::Term(b)) => {
                        let same_kind = matches!(
                            (a, b),
                            (MeasureTerm::LengthOfLine(_), MeasureTerm::LengthOfLine(_))
                                | (
                                    MeasureTerm::MeasureOfAngle(..),
                                    MeasureTerm::MeasureOfAngle(..)
                                )
                        );
                        if same_kind {
                            Ok(())
                        } else {
                            Err(ValidationError::MixedDimensions)
                        }
                    }
                    (EqualOperand::Term(t), EqualOperand::Literal(x))
                    | (EqualOperand::Literal(x), EqualOperand::Term(t)) => match t {
                        MeasureTerm::LengthOfLine(_) if *x < Rational64::zero() => {
                            Err(ValidationError::NegativeLength(*x))
                        }
                        MeasureTerm::MeasureOfAngle(..)
                            if *x <= Rational64::zero() || *x >= Rational64::from_integer(180) =>
                        {
                            Err(ValidationError::AngleOutOfRange(*x))
                        }
                        _ => Ok(()),
                    },
                }
            }
            ImgStatement::ParallelBetweenLine(..) | ImgStatement::PerpendicularBetweenLine(..) => {
                Ok(())
            }
        }
    }

    /// Rewrite the statement into its canonical spelling: angle triples
    /// oriented, literals moved to the right-hand side, symmetric operand
    /// pairs sorted.
    pub fn canonicalize(self) -> Self {
        match self {
            ImgStatement::Equal(lhs, rhs) => {
                let canon = |op: EqualOperand| match op {
                    EqualOperand::Term(t) => EqualOperand::Term(t.canonicalize()),
                    lit => lit,
                };
                let (lhs, rhs) = (canon(lhs), canon(rhs));
                match (lhs, rhs) {
                    (lit @ EqualOperand::Literal(_), term @ EqualOperand::Term(_)) => {
                        ImgStatement::Equal(term, lit)
                    }
                    (a, b) => ImgStatement::Equal(a.min(b), a.max(b)),
                }
            }
            ImgStatement::ParallelBetweenLine(a, b) => {
                ImgStatement::ParallelBetweenLine(a.min(b), a.max(b))
            }
            ImgStatement::PerpendicularBetweenLine(a, b) => {
                ImgStatement::PerpendicularBetweenLine(a.min(b), a.max(b))
            }
        }
    }

    /// Every point label the statement mentions.
    pub fn labels(&self) -> BTreeSet<PointLabel> {
        let mut out = BTreeSet::new();
        let mut add_term = |t: &MeasureTerm| match *t {
            MeasureTerm::LengthOfLine(seg) => {
                out.insert(seg.a());
                out.insert(seg.b());
            }
            MeasureTerm::MeasureOfAngle(p, q, r) => {
                out.insert(p);
                out.insert(q);
                out.insert(r);
            }
        };
        match self {
            ImgStatement::Equal(lhs, rhs) => {
                for op in [lhs, rhs] {
                    if let EqualOperand::Term(t) = op {
                        add_term(t);
                    }
                }
            }
            ImgStatement::ParallelBetweenLine(a, b)
            | ImgStatement::PerpendicularBetweenLine(a, b) => {
                for seg in [a, b] {
                    out.insert(seg.a());
                    out.insert(seg.b());
                }
            }
        }
        out
    }

    /// The statement's keyword, as it appears in CDL text.
    pub fn keyword(&self) -> &'static str {
        match self {
            ImgStatement::Equal(..) => "Equal",
            ImgStatement::ParallelBetweenLine(..) => "ParallelBetweenLine",
            ImgStatement::PerpendicularBetweenLine(..) => "PerpendicularBetweenLine",
        }
    }
}

impl fmt::Display for ImgStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImgStatement::Equal(lhs, rhs) => write!(f, "Equal({lhs},{rhs})"),
            ImgStatement::ParallelBetweenLine(a, b) => {
                write!(f, "ParallelBetweenLine({a},{b})")
            }
            ImgStatement::PerpendicularBetweenLine(a, b) => {
                write!(f, "PerpendicularBetweenLine({a},{b})")
            }
        }
    }
}

fn check_distinct(points: &[PointLabel]) -> Result<(), ValidationError> {
    let mut seen = BTreeSet::new();
    for p in points {
        if !seen.insert(*p) {
            return Err(ValidationError::RepeatedLabel(p.to_string()));
        }
    }
    Ok(())
}

/// The lexicographically smallest rotation of `xs`. Cycles here are short
/// (a handful of edges or points), so the quadratic scan is plenty.
fn min_rotation<T: Ord + Clone>(xs: &[T]) -> Vec<T> {
    let n = xs.len();
    let mut best: Option<Vec<T>> = None;
    for start in 0..n {
        let mut rot = Vec::with_capacity(n);
        rot.extend_from_slice(&xs[start..]);
        rot.extend_from_slice(&xs[..start]);
        if best.as_ref().map_or(true, |b| &rot < b) {
            best = Some(rot);
        }
    }
    best.unwrap_or_default()
}
