//! Compilation from a CDL document to a numeric constraint system.

use std::collections::BTreeSet;

use cdl_core::{
    CdlDocument, ConsStatement, Edge, EqualOperand, ImgStatement, MeasureTerm, PointLabel,
};

use crate::constraint::{AngleTarget, Constraint, ConstraintKind, LengthTarget};
use crate::error::GeometryError;
use crate::MIN_SEPARATION;

/// How the similarity degrees of freedom are pinned. The first point (in
/// label order) sits at the origin; the second sits on the positive x-axis.
/// When the document contains no absolute length literal, the second point
/// is pinned at x = 1 to fix scale as well; otherwise the literals
/// themselves fix scale and the axis point keeps a free x-coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gauge {
    pub origin: Option<PointLabel>,
    pub axis: Option<PointLabel>,
    /// True when the axis point is pinned at unit distance.
    pub unit_scale: bool,
}

/// Non-fatal findings reported by [`compile`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileWarning {
    /// More equality constraints than the free parameters justify. Often
    /// benign (redundant but consistent constraints), so reported rather
    /// than refused.
    OverConstrained {
        equality_constraints: usize,
        free_parameters: usize,
    },
}

impl std::fmt::Display for CompileWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CompileWarning::OverConstrained {
                equality_constraints,
                free_parameters,
            } => write!(
                f,
                "over-constrained: {equality_constraints} equality constraints against {free_parameters} free parameters"
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    /// Minimum pairwise point separation, in gauge units.
    pub min_separation: f64,
    /// Warn when equality constraints exceed this multiple of the free
    /// parameter count.
    pub overconstrained_factor: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            min_separation: MIN_SEPARATION,
            overconstrained_factor: 4.0,
        }
    }
}

/// A compiled system: the labels it places, the constraints over them, the
/// gauge pinning, and the circle centers that carry radius parameters.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    labels: Vec<PointLabel>,
    circle_centers: Vec<PointLabel>,
    gauge: Gauge,
    constraints: Vec<Constraint>,
    warnings: Vec<CompileWarning>,
    min_separation: f64,
    document: CdlDocument,
}

impl ConstraintSystem {
    pub fn labels(&self) -> &[PointLabel] {
        &self.labels
    }

    pub fn circle_centers(&self) -> &[PointLabel] {
        &self.circle_centers
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn warnings(&self) -> &[CompileWarning] {
        &self.warnings
    }

    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    /// The document this system was compiled from (attached to solved
    /// figures so extraction knows the declared structure).
    pub fn document(&self) -> &CdlDocument {
        &self.document
    }

    /// Largest absolute length literal, used to size the solver's
    /// initialization box. 1 when lengths are unconstrained.
    pub(crate) fn size_hint(&self) -> f64 {
        let mut hint: f64 = 1.0;
        for c in &self.constraints {
            if let ConstraintKind::LengthEq {
                target: LengthTarget::Value(v),
                ..
            } = c.kind
            {
                hint = hint.max(v);
            }
        }
        hint
    }
}

/// Compile with default options.
pub fn compile(doc: &CdlDocument) -> Result<ConstraintSystem, GeometryError> {
    compile_with(doc, &CompileOptions::default())
}

/// Turn every statement into residual terms:
///
/// * `Collinear(P1..Pk)` → k−2 [`ConstraintKind::Collinear3`] over
///   consecutive triples, plus k−2 [`ConstraintKind::BetweenOrder`] keeping
///   the sequence ordered along the line;
/// * `Cocircular(O, P1..Pk)` → k [`ConstraintKind::OnCircle`];
/// * shape arc edges → [`ConstraintKind::OnCircle`] for both endpoints;
/// * `Equal` → [`ConstraintKind::LengthEq`] / [`ConstraintKind::AngleEq`];
/// * parallel/perpendicular statements → their constraint kinds;
/// * every label pair → [`ConstraintKind::MinSeparation`].
pub fn compile_with(
    doc: &CdlDocument,
    options: &CompileOptions,
) -> Result<ConstraintSystem, GeometryError> {
    let labels: Vec<PointLabel> = doc.labels().into_iter().collect();
    let known: BTreeSet<PointLabel> = labels.iter().copied().collect();
    for stmt in doc.img() {
        for label in stmt.labels() {
            if !known.contains(&label) {
                return Err(GeometryError::UnboundLabel {
                    label: label.to_string(),
                    statement: stmt.to_string(),
                });
            }
        }
    }

    let mut constraints = Vec::new();
    let mut on_circle_seen: BTreeSet<(PointLabel, PointLabel)> = BTreeSet::new();
    let mut circle_centers: BTreeSet<PointLabel> = BTreeSet::new();
    let mut push_on_circle =
        |center: PointLabel, point: PointLabel, constraints: &mut Vec<Constraint>| {
            circle_centers.insert(center);
            if on_circle_seen.insert((center, point)) {
                constraints.push(Constraint::new(ConstraintKind::OnCircle { center, point }));
            }
        };

    for stmt in doc.cons() {
        match stmt {
            ConsStatement::Shape(edges) => {
                for edge in edges {
                    if let Edge::Arc { center, from, to } = *edge {
                        push_on_circle(center, from, &mut constraints);
                        push_on_circle(center, to, &mut constraints);
                    }
                }
            }
            ConsStatement::Collinear(points) => {
                for window in points.windows(3) {
                    constraints.push(Constraint::new(ConstraintKind::Collinear3(
                        window[0], window[1], window[2],
                    )));
                    constraints.push(Constraint::new(ConstraintKind::BetweenOrder {
                        first: window[0],
                        mid: window[1],
                        last: window[2],
                    }));
                }
            }
            ConsStatement::Cocircular { center, on } => {
                for point in on {
                    push_on_circle(*center, *point, &mut constraints);
                }
            }
        }
    }

    for stmt in doc.img() {
        match stmt {
            ImgStatement::Equal(lhs, rhs) => {
                constraints.push(equality_constraint(lhs, rhs));
            }
            ImgStatement::ParallelBetweenLine(a, b) => {
                constraints.push(Constraint::new(ConstraintKind::Parallel(*a, *b)));
            }
            ImgStatement::PerpendicularBetweenLine(a, b) => {
                constraints.push(Constraint::new(ConstraintKind::Perpendicular(*a, *b)));
            }
        }
    }

    let equality_constraints = constraints.len();

    for (i, &a) in labels.iter().enumerate() {
        for &b in &labels[i + 1..] {
            constraints.push(Constraint::new(ConstraintKind::MinSeparation {
                a,
                b,
                min_dist: options.min_separation,
            }));
        }
    }

    let has_length_literal = constraints.iter().any(|c| {
        matches!(
            c.kind,
            ConstraintKind::LengthEq {
                target: LengthTarget::Value(_),
                ..
            }
        )
    });
    let gauge = Gauge {
        origin: labels.first().copied(),
        axis: labels.get(1).copied(),
        unit_scale: !has_length_literal,
    };

    let fixed_coords = match (gauge.origin, gauge.axis) {
        (Some(_), Some(_)) => {
            if gauge.unit_scale {
                4
            } else {
                3
            }
        }
        (Some(_), None) => 2,
        _ => 0,
    };
    let free_parameters = 2 * labels.len() - fixed_coords + circle_centers.len();
    let mut warnings = Vec::new();
    if equality_constraints as f64 > options.overconstrained_factor * free_parameters as f64 {
        warnings.push(CompileWarning::OverConstrained {
            equality_constraints,
            free_parameters,
        });
    }

    Ok(ConstraintSystem {
        labels,
        circle_centers: circle_centers.into_iter().collect(),
        gauge,
        constraints,
        warnings,
        min_separation: options.min_separation,
        document: doc.clone(),
    })
}

pub(crate) fn equality_constraint(lhs: &EqualOperand, rhs: &EqualOperand) -> Constraint {
    let kind = match (lhs, rhs) {
        (EqualOperand::Term(MeasureTerm::LengthOfLine(seg)), EqualOperand::Literal(v)) => {
            ConstraintKind::LengthEq {
                seg: *seg,
                target: LengthTarget::Value(rational_to_f64(*v)),
            }
        }
        (
            EqualOperand::Term(MeasureTerm::LengthOfLine(a)),
            EqualOperand::Term(MeasureTerm::LengthOfLine(b)),
        ) => ConstraintKind::LengthEq {
            seg: *a,
            target: LengthTarget::Seg(*b),
        },
        (EqualOperand::Term(MeasureTerm::MeasureOfAngle(p, q, r)), EqualOperand::Literal(v)) => {
            ConstraintKind::AngleEq {
                angle: (*p, *q, *r),
                target: AngleTarget::Degrees(rational_to_f64(*v)),
            }
        }
        (
            EqualOperand::Term(MeasureTerm::MeasureOfAngle(p, q, r)),
            EqualOperand::Term(MeasureTerm::MeasureOfAngle(p2, q2, r2)),
        ) => ConstraintKind::AngleEq {
            angle: (*p, *q, *r),
            target: AngleTarget::Angle(*p2, *q2, *r2),
        },
        // Canonical Equal statements keep literals on the right and never
        // mix dimensions, so the remaining combinations cannot reach a
        // validated document.
        other => unreachable!("non-canonical Equal operands: {other:?}"),
    };
    Constraint::new(kind)
}

fn rational_to_f64(v: cdl_core::Rational64) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdl_core::parse;

    fn kind_count(sys: &ConstraintSystem, pred: impl Fn(&ConstraintKind) -> bool) -> usize {
        sys.constraints().iter().filter(|c| pred(&c.kind)).count()
    }

    #[test]
    fn collinear_run_expands_to_triples_and_ordering() {
        let doc = parse("Collinear(ADC)").unwrap();
        let sys = compile(&doc).unwrap();
        assert_eq!(
            kind_count(&sys, |k| matches!(k, ConstraintKind::Collinear3(..))),
            1
        );
        assert_eq!(
            kind_count(&sys, |k| matches!(k, ConstraintKind::BetweenOrder { .. })),
            1
        );
        // Three labels → three separation pairs.
        assert_eq!(
            kind_count(&sys, |k| matches!(k, ConstraintKind::MinSeparation { .. })),
            3
        );
    }

    #[test]
    fn cocircular_expands_to_one_on_circle_per_point() {
        let doc = parse("Cocircular(O,ABC)").unwrap();
        let sys = compile(&doc).unwrap();
        assert_eq!(
            kind_count(&sys, |k| matches!(k, ConstraintKind::OnCircle { .. })),
            3
        );
        assert_eq!(sys.circle_centers(), ["O".parse().unwrap()]);
    }

    #[test]
    fn gauge_pins_scale_only_without_length_literals() {
        let unconstrained = parse("Shape(AB,BC,CA)").unwrap();
        let sys = compile(&unconstrained).unwrap();
        assert!(sys.gauge().unit_scale);
        assert_eq!(sys.gauge().origin, Some("A".parse().unwrap()));
        assert_eq!(sys.gauge().axis, Some("B".parse().unwrap()));

        let sized = parse("Shape(AB,BC,CA)\nEqual(LengthOfLine(AB),3)").unwrap();
        let sys = compile(&sized).unwrap();
        assert!(
            !sys.gauge().unit_scale,
            "a length literal must release the unit-distance pin"
        );
    }

    #[test]
    fn programmatic_document_with_dangling_img_label_is_unbound() {
        // Bypass the parser's closure check by building the document
        // directly.
        let mut doc = CdlDocument::new();
        doc.insert_cons(
            ConsStatement::collinear(vec![
                "A".parse().unwrap(),
                "B".parse().unwrap(),
                "C".parse().unwrap(),
            ])
            .unwrap(),
        )
        .unwrap();
        doc.insert_img(
            ImgStatement::equal(
                EqualOperand::Term(
                    MeasureTerm::length("A".parse().unwrap(), "Z".parse().unwrap()).unwrap(),
                ),
                EqualOperand::Literal(5.into()),
            )
            .unwrap(),
        )
        .unwrap();
        let err = compile(&doc).unwrap_err();
        assert!(matches!(err, GeometryError::UnboundLabel { .. }), "{err:?}");
    }

    #[test]
    fn duplicate_on_circle_terms_collapse() {
        // The arc edges and the cocircular statement describe the same
        // membership; compilation should not double-count it.
        let doc = parse("Shape(OAB,BA)\nCocircular(O,AB)").unwrap();
        let sys = compile(&doc).unwrap();
        assert_eq!(
            kind_count(&sys, |k| matches!(k, ConstraintKind::OnCircle { .. })),
            2
        );
    }
}
