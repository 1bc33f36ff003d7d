//! Reading structure back out of coordinates: the inverse of solving.
//!
//! Extraction answers "what does this figure actually depict?" and is the
//! oracle the rest of the pipeline leans on: a solved figure must extract a
//! superset of the statements it was built from, and extraction must not
//! care how the figure happens to be posed.
//!
//! All comparisons are relative (normalized cross products, relative radius
//! and length gaps), so the output is invariant under rotation, translation,
//! and uniform scaling — up to the point where scaling pushes the figure
//! below the minimum separation.

use std::collections::BTreeSet;

use cdl_core::{
    CdlDocument, ConsStatement, Edge, ImgStatement, LineSeg, MeasureTerm, PointLabel, Rational64,
};

use crate::compile::equality_constraint;
use crate::constraint::{angle_between_deg, residual, Constraint, ConstraintKind};
use crate::error::GeometryError;
use crate::figure::Figure;
use crate::MIN_SEPARATION;

/// Which point pairs participate in relation mining.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractMode {
    /// Only segments the figure's document declares (shape edges, collinear
    /// chains). Production mode: accidental coincidences between unrelated
    /// points stay out of the output.
    Declared,
    /// Every point pair counts as a segment. Exhaustive and noisy; used by
    /// oracle tests that work from bare coordinates.
    AllPairs,
}

/// Extract a canonical document from a figure, mining declared segments and
/// circles only.
pub fn extract_cdl(figure: &Figure, tol: f64) -> Result<CdlDocument, GeometryError> {
    extract_cdl_with(figure, tol, ExtractMode::Declared)
}

/// Extraction with an explicit mining mode.
///
/// The output combines two sources:
/// * declared constructive statements whose geometry checks out are
///   re-emitted verbatim (a shape's arcs must sit on their circle, a
///   collinear chain must be straight and ordered, a cocircular group must
///   sit at its radius);
/// * detected relations: maximal collinear runs along candidate segments,
///   cocircular groups around declared circle centers, right angles and
///   equal-length classes among candidate segments.
///
/// Parallel and perpendicular statements are never produced — a right angle
/// surfaces as `Equal(MeasureOfAngle(...),90)` instead, and parallelism of
/// segments that never meet is exactly the kind of coincidence mining is
/// meant to avoid.
pub fn extract_cdl_with(
    figure: &Figure,
    tol: f64,
    mode: ExtractMode,
) -> Result<CdlDocument, GeometryError> {
    if let Some((a, b, dist)) = figure.min_separation() {
        if dist + tol < MIN_SEPARATION {
            return Err(GeometryError::DegenerateFigure {
                a: a.to_string(),
                b: b.to_string(),
                dist,
                min_sep: MIN_SEPARATION,
            });
        }
    }

    let mut out = CdlDocument::new();
    for stmt in figure.document().cons() {
        if declared_cons_holds(figure, stmt, tol) {
            out.insert_cons(stmt.clone())
                .expect("declared statement was valid in its source document");
        }
    }

    let segments = match mode {
        ExtractMode::Declared => declared_segments(figure.document()),
        ExtractMode::AllPairs => {
            let labels: Vec<PointLabel> = figure.points().keys().copied().collect();
            let mut all = BTreeSet::new();
            for (i, &a) in labels.iter().enumerate() {
                for &b in &labels[i + 1..] {
                    all.insert(LineSeg::new(a, b).expect("map keys are distinct"));
                }
            }
            all
        }
    };
    // Drop declared segments whose endpoints the figure does not place;
    // nothing can be measured along them.
    let segments: Vec<LineSeg> = segments
        .into_iter()
        .filter(|s| figure.xy(s.a()).is_some() && figure.xy(s.b()).is_some())
        .collect();

    for run in collinear_runs(figure, &segments, tol) {
        out.insert_cons(ConsStatement::collinear(run).expect("run points are distinct"))
            .expect("collinear run is structurally valid");
    }

    for (center, members) in circle_members(figure, tol) {
        out.insert_cons(
            ConsStatement::cocircular(center, members).expect("members exclude the center"),
        )
        .expect("cocircular group is structurally valid");
    }

    for stmt in right_angles(figure, &segments, tol) {
        out.insert_img(stmt).expect("angle statement is valid");
    }
    for stmt in equal_length_chains(figure, &segments, tol) {
        out.insert_img(stmt).expect("length statement is valid");
    }

    Ok(out)
}

/// Check every statement of `doc` against the figure's coordinates,
/// reporting the first one whose worst residual reaches `tol`. This is the
/// soundness gate behind solver success: a converged figure must verify its
/// own document at a tolerance far looser than the solve threshold.
pub fn verify(figure: &Figure, doc: &CdlDocument, tol: f64) -> Result<(), GeometryError> {
    let check = |kinds: Vec<ConstraintKind>, statement: &dyn std::fmt::Display| {
        let mut worst: f64 = 0.0;
        for kind in kinds {
            worst = worst.max(residual(figure, &Constraint::new(kind)).abs());
        }
        if worst >= tol {
            return Err(GeometryError::VerifyFailed {
                statement: statement.to_string(),
                error: worst,
            });
        }
        Ok(())
    };

    for stmt in doc.cons() {
        let mut kinds = Vec::new();
        match stmt {
            ConsStatement::Shape(edges) => {
                for edge in edges {
                    if let Edge::Arc { center, from, to } = *edge {
                        kinds.push(ConstraintKind::OnCircle {
                            center,
                            point: from,
                        });
                        kinds.push(ConstraintKind::OnCircle { center, point: to });
                    }
                }
            }
            ConsStatement::Collinear(points) => {
                for w in points.windows(3) {
                    kinds.push(ConstraintKind::Collinear3(w[0], w[1], w[2]));
                    kinds.push(ConstraintKind::BetweenOrder {
                        first: w[0],
                        mid: w[1],
                        last: w[2],
                    });
                }
            }
            ConsStatement::Cocircular { center, on } => {
                for point in on {
                    kinds.push(ConstraintKind::OnCircle {
                        center: *center,
                        point: *point,
                    });
                }
            }
        }
        check(kinds, stmt)?;
    }

    for stmt in doc.img() {
        let kinds = match stmt {
            ImgStatement::Equal(lhs, rhs) => vec![equality_constraint(lhs, rhs).kind],
            ImgStatement::ParallelBetweenLine(a, b) => {
                vec![ConstraintKind::Parallel(*a, *b)]
            }
            ImgStatement::PerpendicularBetweenLine(a, b) => {
                vec![ConstraintKind::Perpendicular(*a, *b)]
            }
        };
        check(kinds, stmt)?;
    }

    Ok(())
}

/// The segments a document commits to drawing: shape edges, consecutive
/// pairs of collinear chains, and each chain's full first-to-last span.
pub fn declared_segments(doc: &CdlDocument) -> BTreeSet<LineSeg> {
    let mut segments = BTreeSet::new();
    for stmt in doc.cons() {
        match stmt {
            ConsStatement::Shape(edges) => {
                for edge in edges {
                    if let Edge::Seg { from, to } = *edge {
                        segments.insert(LineSeg::new(from, to).expect("edge endpoints differ"));
                    }
                }
            }
            ConsStatement::Collinear(points) => {
                for pair in points.windows(2) {
                    segments
                        .insert(LineSeg::new(pair[0], pair[1]).expect("chain points distinct"));
                }
                segments.insert(
                    LineSeg::new(points[0], *points.last().expect("chain non-empty"))
                        .expect("chain endpoints distinct"),
                );
            }
            ConsStatement::Cocircular { .. } => {}
        }
    }
    segments
}

/// Does the figure realize this declared constructive statement?
fn declared_cons_holds(figure: &Figure, stmt: &ConsStatement, tol: f64) -> bool {
    match stmt {
        ConsStatement::Shape(edges) => edges.iter().all(|edge| match *edge {
            Edge::Seg { from, to } => {
                figure.xy(from).is_some() && figure.xy(to).is_some()
            }
            Edge::Arc { center, from, to } => {
                on_declared_circle(figure, center, from, tol)
                    && on_declared_circle(figure, center, to, tol)
            }
        }),
        ConsStatement::Collinear(points) => {
            let Some(coords) = points
                .iter()
                .map(|&p| figure.xy(p))
                .collect::<Option<Vec<_>>>()
            else {
                return false;
            };
            let first = coords[0];
            let last = coords[coords.len() - 1];
            for &p in &coords[1..coords.len() - 1] {
                if !within_line(first, last, p, tol) {
                    return false;
                }
            }
            // Projections must march one way along the chain; which way is
            // presentational (the canonical form already folded reversal).
            let (ux, uy) = (last.0 - first.0, last.1 - first.1);
            let ts: Vec<f64> = coords
                .iter()
                .map(|&(x, y)| (x - first.0) * ux + (y - first.1) * uy)
                .collect();
            ts.windows(2).all(|w| w[0] < w[1])
        }
        ConsStatement::Cocircular { center, on } => on
            .iter()
            .all(|&p| on_declared_circle(figure, *center, p, tol)),
    }
}

fn on_declared_circle(figure: &Figure, center: PointLabel, point: PointLabel, tol: f64) -> bool {
    let (Some(o), Some(p), Some(radius)) = (
        figure.xy(center),
        figure.xy(point),
        figure.circles().get(&center).copied(),
    ) else {
        return false;
    };
    let dist = ((p.0 - o.0).powi(2) + (p.1 - o.1).powi(2)).sqrt();
    (dist - radius).abs() < tol * radius.max(f64::MIN_POSITIVE)
}

/// Relative straightness test: perpendicular offset of `q` from the line
/// through `a` and `b`, normalized by the a–b span.
fn within_line(a: (f64, f64), b: (f64, f64), q: (f64, f64), tol: f64) -> bool {
    let (ux, uy) = (b.0 - a.0, b.1 - a.1);
    let span2 = ux * ux + uy * uy;
    if span2 <= 0.0 {
        return false;
    }
    let cross = ux * (q.1 - a.1) - uy * (q.0 - a.0);
    cross.abs() / span2 < tol
}

/// Maximal straight runs: for each candidate segment, every figure point
/// within `tol` of its support line, ordered by projection. Runs shorter
/// than three points carry no information and are dropped; runs found from
/// different segments of one line dedup through the returned set.
fn collinear_runs(figure: &Figure, segments: &[LineSeg], tol: f64) -> BTreeSet<Vec<PointLabel>> {
    let mut runs = BTreeSet::new();
    for seg in segments {
        let (Some(a), Some(b)) = (figure.xy(seg.a()), figure.xy(seg.b())) else {
            continue;
        };
        let mut members: Vec<(f64, PointLabel)> = Vec::new();
        for (&label, &q) in figure.points() {
            if label == seg.a() || label == seg.b() || within_line(a, b, q, tol) {
                let t = (q.0 - a.0) * (b.0 - a.0) + (q.1 - a.1) * (b.1 - a.1);
                members.push((t, label));
            }
        }
        if members.len() < 3 {
            continue;
        }
        members.sort_by(|x, y| x.0.total_cmp(&y.0));
        runs.insert(members.into_iter().map(|(_, l)| l).collect());
    }
    runs
}

/// Points sitting on each declared circle, in angular order around its
/// center. Order around the center is what a reader of the diagram sees, so
/// that is the order the statement records.
fn circle_members(figure: &Figure, tol: f64) -> Vec<(PointLabel, Vec<PointLabel>)> {
    let mut groups = Vec::new();
    for (&center, _) in figure.circles() {
        let Some(o) = figure.xy(center) else {
            continue;
        };
        let mut members: Vec<(f64, PointLabel)> = Vec::new();
        for (&label, &q) in figure.points() {
            if label == center || !on_declared_circle(figure, center, label, tol) {
                continue;
            }
            members.push(((q.1 - o.1).atan2(q.0 - o.0), label));
        }
        if members.is_empty() {
            continue;
        }
        members.sort_by(|x, y| x.0.total_cmp(&y.0));
        groups.push((center, members.into_iter().map(|(_, l)| l).collect()));
    }
    groups
}

/// Right angles between candidate segments that share an endpoint, reported
/// as `Equal(MeasureOfAngle(...),90)`. The angular tolerance is `tol`
/// radians expressed in degrees, matching the dimensionless tolerance of
/// the straightness and radius tests.
fn right_angles(figure: &Figure, segments: &[LineSeg], tol: f64) -> Vec<ImgStatement> {
    let tol_deg = tol.to_degrees();
    let mut out = Vec::new();
    for (i, s1) in segments.iter().enumerate() {
        for s2 in &segments[i + 1..] {
            let Some((vertex, p, q)) = shared_vertex(*s1, *s2) else {
                continue;
            };
            let (Some(v_), Some(p_), Some(q_)) =
                (figure.xy(vertex), figure.xy(p), figure.xy(q))
            else {
                continue;
            };
            let angle = angle_between_deg((p_.0 - v_.0, p_.1 - v_.1), (q_.0 - v_.0, q_.1 - v_.1));
            if (angle - 90.0).abs() < tol_deg {
                let term = MeasureTerm::angle(p, vertex, q).expect("three distinct labels");
                out.push(
                    ImgStatement::equal_literal(term, Rational64::from_integer(90))
                        .expect("right-angle literal is in range"),
                );
            }
        }
    }
    out
}

/// The endpoint two distinct segments share, with the two outer points.
fn shared_vertex(s1: LineSeg, s2: LineSeg) -> Option<(PointLabel, PointLabel, PointLabel)> {
    for v in [s1.a(), s1.b()] {
        for w in [s2.a(), s2.b()] {
            if v == w {
                let p = if s1.a() == v { s1.b() } else { s1.a() };
                let q = if s2.a() == v { s2.b() } else { s2.a() };
                return Some((v, p, q));
            }
        }
    }
    None
}

/// Equal-length classes among the candidate segments, emitted as cyclic
/// chains: a class of k ≥ 3 segments yields k statements linking them in a
/// ring, a pair yields the single statement, singletons nothing. Class
/// membership uses a relative gap test so uniform scaling cannot split or
/// merge classes.
fn equal_length_chains(figure: &Figure, segments: &[LineSeg], tol: f64) -> Vec<ImgStatement> {
    let mut measured: Vec<(f64, LineSeg)> = segments
        .iter()
        .filter_map(|&s| {
            let (a, b) = (figure.xy(s.a())?, figure.xy(s.b())?);
            let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
            Some((len, s))
        })
        .collect();
    measured.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));

    let mut out = Vec::new();
    let mut class_start = 0;
    for i in 1..=measured.len() {
        let boundary = i == measured.len() || {
            let (prev, next) = (measured[i - 1].0, measured[i].0);
            next - prev >= tol * next.max(prev).max(f64::MIN_POSITIVE)
        };
        if !boundary {
            continue;
        }
        let class = &measured[class_start..i];
        class_start = i;
        if class.len() < 2 {
            continue;
        }
        let mut members: Vec<LineSeg> = class.iter().map(|&(_, s)| s).collect();
        members.sort();
        for (j, &seg) in members.iter().enumerate() {
            let next = members[(j + 1) % members.len()];
            if seg == next {
                continue;
            }
            out.push(
                ImgStatement::equal(
                    cdl_core::EqualOperand::Term(MeasureTerm::LengthOfLine(seg)),
                    cdl_core::EqualOperand::Term(MeasureTerm::LengthOfLine(next)),
                )
                .expect("distinct length terms"),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn figure(doc_text: &str, points: &[(&str, f64, f64)], circles: &[(&str, f64)]) -> Figure {
        let doc = doc_text.parse::<CdlDocument>().unwrap();
        let points: BTreeMap<PointLabel, (f64, f64)> = points
            .iter()
            .map(|&(l, x, y)| (l.parse().unwrap(), (x, y)))
            .collect();
        let circles: BTreeMap<PointLabel, f64> = circles
            .iter()
            .map(|&(l, r)| (l.parse().unwrap(), r))
            .collect();
        Figure::new(points, circles, doc)
    }

    #[test]
    fn unit_square_yields_four_right_angles_and_a_length_ring() {
        let fig = figure(
            "Shape(AB,BC,CD,DA)",
            &[("A", 0.0, 0.0), ("B", 1.0, 0.0), ("C", 1.0, 1.0), ("D", 0.0, 1.0)],
            &[],
        );
        let doc = extract_cdl(&fig, 1e-6).unwrap();
        let text = doc.to_text();
        assert!(
            !text.contains("Collinear"),
            "square corners are not collinear:\n{text}"
        );
        let angles = doc
            .img()
            .iter()
            .filter(|s| s.to_string().contains("MeasureOfAngle"))
            .count();
        let lengths = doc
            .img()
            .iter()
            .filter(|s| s.to_string().contains("LengthOfLine"))
            .count();
        assert_eq!(angles, 4, "{text}");
        assert_eq!(lengths, 4, "{text}");
        assert!(text.contains("Shape(AB,BC,CD,DA)"));
    }

    #[test]
    fn straight_chain_is_recovered_from_coordinates_alone() {
        // The document declares two bare segments; extraction must discover
        // that the three points line up.
        let fig = figure(
            "Shape(AB,BA)\nShape(BC,CB)",
            &[("A", 0.0, 0.0), ("B", 0.5, 0.5), ("C", 1.0, 1.0)],
            &[],
        );
        let doc = extract_cdl(&fig, 1e-6).unwrap();
        assert!(
            doc.to_text().contains("Collinear(ABC)"),
            "{}",
            doc.to_text()
        );
    }

    #[test]
    fn near_coincident_points_are_rejected() {
        let fig = figure(
            "Shape(AB,BA)",
            &[("A", 0.0, 0.0), ("B", 0.001, 0.0)],
            &[],
        );
        let err = extract_cdl(&fig, 1e-6).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateFigure { .. }), "{err:?}");
    }

    #[test]
    fn declared_collinear_chain_out_of_order_is_not_reemitted() {
        // D is declared between A and C but sits outside the span; the
        // declared statement must not survive, while the detected run
        // (correctly ordered) appears.
        let fig = figure(
            "Collinear(ADC)",
            &[("A", 0.0, 0.0), ("D", 2.0, 0.0), ("C", 1.0, 0.0)],
            &[],
        );
        let doc = extract_cdl(&fig, 1e-6).unwrap();
        let text = doc.to_text();
        assert!(!text.contains("Collinear(ADC)"), "{text}");
        assert!(text.contains("Collinear(ACD)"), "{text}");
    }

    #[test]
    fn circle_membership_is_detected_in_angular_order() {
        let fig = figure(
            "Cocircular(O,AB)",
            &[
                ("O", 0.0, 0.0),
                ("A", 1.0, 0.0),
                ("B", 0.0, 1.0),
                ("C", -1.0, 0.0),
            ],
            &[("O", 1.0)],
        );
        let doc = extract_cdl(&fig, 1e-6).unwrap();
        let text = doc.to_text();
        // Declared pair re-emitted, full membership detected alongside.
        assert!(text.contains("Cocircular(O,AB)"), "{text}");
        assert!(text.contains("Cocircular(O,ABC)"), "{text}");
    }

    #[test]
    fn verify_accepts_a_true_right_triangle_and_rejects_a_false_claim() {
        let doc_text = "Shape(AB,BC,CA)\nEqual(MeasureOfAngle(ABC),90)";
        let fig = figure(
            doc_text,
            &[("A", 0.0, 0.0), ("B", 1.0, 0.0), ("C", 1.0, 1.0)],
            &[],
        );
        verify(&fig, fig.document(), 1e-6).unwrap();

        let wrong = "Shape(AB,BC,CA)\nEqual(MeasureOfAngle(BAC),90)";
        let fig = figure(
            wrong,
            &[("A", 0.0, 0.0), ("B", 1.0, 0.0), ("C", 1.0, 1.0)],
            &[],
        );
        let err = verify(&fig, fig.document(), 1e-6).unwrap_err();
        assert!(matches!(err, GeometryError::VerifyFailed { .. }), "{err:?}");
    }

    #[test]
    fn all_pairs_mode_mines_undeclared_structure() {
        // No document at all: declared mode finds nothing, all-pairs mode
        // finds the diagonal run.
        let fig = figure(
            "",
            &[("A", 0.0, 0.0), ("B", 0.5, 0.5), ("C", 1.0, 1.0)],
            &[],
        );
        let declared = extract_cdl(&fig, 1e-6).unwrap();
        assert!(declared.is_empty(), "{}", declared.to_text());
        let mined = extract_cdl_with(&fig, 1e-6, ExtractMode::AllPairs).unwrap();
        assert!(mined.to_text().contains("Collinear(ABC)"), "{}", mined.to_text());
    }
}
