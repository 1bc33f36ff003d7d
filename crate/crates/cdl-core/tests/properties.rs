//! Property tests for the language invariants: parse/print round-trips,
//! canonicalization idempotence and rotation closure, and the diff
//! partition laws checked against a brute-force oracle.

use std::collections::BTreeSet;

use proptest::prelude::*;

use cdl_core::{
    parse, statement_set_diff, CdlDocument, ConsStatement, Edge, EqualOperand, ImgStatement,
    LineSeg, MeasureTerm, PointLabel, Rational64,
};

fn label() -> impl Strategy<Value = PointLabel> {
    (0u8..26, prop_oneof![3 => Just(None), 1 => (0u32..30).prop_map(Some)])
        .prop_map(|(i, suffix)| PointLabel::new((b'A' + i) as char, suffix).unwrap())
}

fn distinct_labels(n: usize) -> impl Strategy<Value = Vec<PointLabel>> {
    proptest::collection::btree_set(label(), n)
        .prop_map(|set| set.into_iter().collect::<Vec<_>>())
        .prop_shuffle()
}

/// A simple polygon boundary: k distinct vertices joined in a cycle.
fn polygon() -> impl Strategy<Value = ConsStatement> {
    (3usize..=6)
        .prop_flat_map(distinct_labels)
        .prop_map(|pts| {
            let edges: Vec<Edge> = (0..pts.len())
                .map(|i| Edge::seg(pts[i], pts[(i + 1) % pts.len()]).unwrap())
                .collect();
            ConsStatement::shape(edges).unwrap()
        })
}

fn cons_stmt() -> impl Strategy<Value = ConsStatement> {
    prop_oneof![
        polygon(),
        (3usize..=6)
            .prop_flat_map(distinct_labels)
            .prop_map(|pts| ConsStatement::collinear(pts).unwrap()),
        (2usize..=6).prop_flat_map(distinct_labels).prop_map(|mut pts| {
            let center = pts.pop().unwrap();
            ConsStatement::cocircular(center, pts).unwrap()
        }),
    ]
}

fn index_pair(n: usize) -> impl Strategy<Value = (usize, usize)> {
    (0..n, 0..n).prop_filter("distinct indices", |(a, b)| a != b)
}

fn img_stmt(pool: Vec<PointLabel>) -> BoxedStrategy<ImgStatement> {
    let n = pool.len();
    assert!(n >= 3, "document strategy always includes a polygon");
    let p = pool.clone();
    let len_lit = (index_pair(n), 1i64..400, 1i64..5).prop_map(move |((a, b), num, den)| {
        let term = MeasureTerm::length(p[a], p[b]).unwrap();
        ImgStatement::equal_literal(term, Rational64::new(num, den)).unwrap()
    });
    let p = pool.clone();
    let ang_lit = (
        (0..n, 0..n, 0..n).prop_filter("distinct indices", |(a, b, c)| {
            a != b && b != c && a != c
        }),
        1i64..359,
    )
        .prop_map(move |((a, b, c), num)| {
            let term = MeasureTerm::angle(p[a], p[b], p[c]).unwrap();
            ImgStatement::equal_literal(term, Rational64::new(num, 2)).unwrap()
        });
    let p = pool.clone();
    let len_len = (index_pair(n), index_pair(n)).prop_map(move |((a, b), (c, d))| {
        ImgStatement::equal(
            EqualOperand::Term(MeasureTerm::length(p[a], p[b]).unwrap()),
            EqualOperand::Term(MeasureTerm::length(p[c], p[d]).unwrap()),
        )
        .unwrap()
    });
    let p = pool.clone();
    let parallel = (index_pair(n), index_pair(n)).prop_map(move |((a, b), (c, d))| {
        ImgStatement::parallel(
            LineSeg::new(p[a], p[b]).unwrap(),
            LineSeg::new(p[c], p[d]).unwrap(),
        )
    });
    let p = pool;
    let perpendicular = (index_pair(n), index_pair(n)).prop_map(move |((a, b), (c, d))| {
        ImgStatement::perpendicular(
            LineSeg::new(p[a], p[b]).unwrap(),
            LineSeg::new(p[c], p[d]).unwrap(),
        )
    });
    prop_oneof![len_lit, ang_lit, len_len, parallel, perpendicular].boxed()
}

/// A valid document: at least one polygon (so the label pool is usable),
/// some extra construction statements, and image statements drawn from the
/// declared labels.
fn document() -> impl Strategy<Value = CdlDocument> {
    (polygon(), proptest::collection::vec(cons_stmt(), 0..4)).prop_flat_map(|(poly, extra)| {
        let mut doc = CdlDocument::new();
        doc.insert_cons(poly).unwrap();
        for stmt in extra {
            doc.insert_cons(stmt).unwrap();
        }
        let pool: Vec<PointLabel> = doc.labels().into_iter().collect();
        (
            Just(doc),
            proptest::collection::vec(img_stmt(pool), 0..5),
        )
            .prop_map(|(mut doc, img)| {
                for stmt in img {
                    doc.insert_img(stmt).unwrap();
                }
                doc
            })
    })
}

// Raw (not necessarily valid) statements, built directly from the enum
// variants: canonicalization is pure reordering, so its laws hold even on
// structurally invalid values.

fn raw_edge() -> impl Strategy<Value = Edge> {
    prop_oneof![
        (label(), label()).prop_map(|(from, to)| Edge::Seg { from, to }),
        (label(), label(), label()).prop_map(|(center, from, to)| Edge::Arc {
            center,
            from,
            to
        }),
    ]
}

fn raw_cons() -> impl Strategy<Value = ConsStatement> {
    prop_oneof![
        proptest::collection::vec(raw_edge(), 1..6).prop_map(ConsStatement::Shape),
        proptest::collection::vec(label(), 1..6).prop_map(ConsStatement::Collinear),
        (label(), proptest::collection::vec(label(), 1..6))
            .prop_map(|(center, on)| ConsStatement::Cocircular { center, on }),
    ]
}

fn raw_seg() -> impl Strategy<Value = LineSeg> {
    (label(), label())
        .prop_filter("distinct", |(a, b)| a != b)
        .prop_map(|(a, b)| LineSeg::new(a, b).unwrap())
}

fn raw_operand() -> impl Strategy<Value = EqualOperand> {
    prop_oneof![
        raw_seg().prop_map(|s| EqualOperand::Term(MeasureTerm::LengthOfLine(s))),
        (label(), label(), label())
            .prop_map(|(p, q, r)| EqualOperand::Term(MeasureTerm::MeasureOfAngle(p, q, r))),
        (1i64..500, 1i64..6).prop_map(|(n, d)| EqualOperand::Literal(Rational64::new(n, d))),
    ]
}

fn raw_img() -> impl Strategy<Value = ImgStatement> {
    prop_oneof![
        (raw_operand(), raw_operand()).prop_map(|(a, b)| ImgStatement::Equal(a, b)),
        (raw_seg(), raw_seg()).prop_map(|(a, b)| ImgStatement::ParallelBetweenLine(a, b)),
        (raw_seg(), raw_seg()).prop_map(|(a, b)| ImgStatement::PerpendicularBetweenLine(a, b)),
    ]
}

/// Quadratic-scan reference for the set diff, over printed statements.
fn naive_diff(pred: &[String], gold: &[String]) -> (Vec<String>, Vec<String>, Vec<String>) {
    let mut hits = Vec::new();
    let mut misses = Vec::new();
    let mut spurious = Vec::new();
    for p in pred {
        if gold.contains(p) {
            hits.push(p.clone());
        } else {
            spurious.push(p.clone());
        }
    }
    for g in gold {
        if !pred.contains(g) {
            misses.push(g.clone());
        }
    }
    hits.sort();
    misses.sort();
    spurious.sort();
    (hits, misses, spurious)
}

/// Statements printed and sorted as text, the oracle's element order.
fn rendered(set: &BTreeSet<ConsStatement>) -> Vec<String> {
    let mut out: Vec<String> = set.iter().map(|s| s.to_string()).collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parse_print_round_trip(doc in document()) {
        let text = doc.to_text();
        let reparsed = parse(&text).unwrap();
        prop_assert_eq!(&reparsed, &doc, "round trip changed the document; text was:\n{}", text);
        // Printing is byte-stable across the round trip, too.
        prop_assert_eq!(reparsed.to_text(), text);
    }

    #[test]
    fn cons_canonicalize_is_idempotent(stmt in raw_cons()) {
        let once = stmt.canonicalize();
        prop_assert_eq!(once.clone().canonicalize(), once);
    }

    #[test]
    fn img_canonicalize_is_idempotent(stmt in raw_img()) {
        let once = stmt.canonicalize();
        prop_assert_eq!(once.clone().canonicalize(), once);
    }

    #[test]
    fn shape_canonical_form_is_rotation_invariant(
        edges in proptest::collection::vec(raw_edge(), 1..6),
        rotate_by in 0usize..6,
    ) {
        let rotate_by = rotate_by % edges.len();
        let mut rotated = edges[rotate_by..].to_vec();
        rotated.extend_from_slice(&edges[..rotate_by]);
        prop_assert_eq!(
            ConsStatement::Shape(edges).canonicalize(),
            ConsStatement::Shape(rotated).canonicalize()
        );
    }

    #[test]
    fn cocircular_canonical_form_ignores_rotation_and_direction(
        center in label(),
        on in proptest::collection::vec(label(), 1..6),
        rotate_by in 0usize..6,
        reverse in any::<bool>(),
    ) {
        let rotate_by = rotate_by % on.len();
        let mut other = on[rotate_by..].to_vec();
        other.extend_from_slice(&on[..rotate_by]);
        if reverse {
            other.reverse();
        }
        prop_assert_eq!(
            ConsStatement::Cocircular { center, on }.canonicalize(),
            ConsStatement::Cocircular { center, on: other }.canonicalize()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Diff laws on randomly overlapping subsets of a common base document,
    /// checked against the quadratic oracle.
    #[test]
    fn diff_partitions_and_matches_brute_force(
        base in document(),
        picks in proptest::collection::vec(any::<(bool, bool)>(), 16),
    ) {
        let mut pred = CdlDocument::new();
        let mut gold = CdlDocument::new();
        for (i, stmt) in base.cons().iter().enumerate() {
            let (in_pred, in_gold) = picks[i % picks.len()];
            if in_pred {
                pred.insert_cons(stmt.clone()).unwrap();
            }
            if in_gold {
                gold.insert_cons(stmt.clone()).unwrap();
            }
        }
        for (i, stmt) in base.img().iter().enumerate() {
            let (in_pred, in_gold) = picks[(i + 7) % picks.len()];
            if in_pred {
                pred.insert_img(stmt.clone()).unwrap();
            }
            if in_gold {
                gold.insert_img(stmt.clone()).unwrap();
            }
        }

        let diff = statement_set_diff(&pred, &gold);

        // Partition laws: hits ∪ spurious = pred, hits ∪ misses = gold,
        // pairwise disjoint per side.
        let union_pred: BTreeSet<_> = diff.cons.hits.union(&diff.cons.spurious).cloned().collect();
        prop_assert_eq!(&union_pred, pred.cons());
        let union_gold: BTreeSet<_> = diff.cons.hits.union(&diff.cons.misses).cloned().collect();
        prop_assert_eq!(&union_gold, gold.cons());
        prop_assert!(diff.cons.hits.is_disjoint(&diff.cons.spurious));
        prop_assert!(diff.cons.hits.is_disjoint(&diff.cons.misses));
        prop_assert!(diff.img.hits.is_disjoint(&diff.img.spurious));
        prop_assert!(diff.img.hits.is_disjoint(&diff.img.misses));

        // Brute-force agreement on the construction section.
        let (hits, misses, spurious) = naive_diff(
            &rendered(pred.cons()),
            &rendered(gold.cons()),
        );
        prop_assert_eq!(rendered(&diff.cons.hits), hits);
        prop_assert_eq!(rendered(&diff.cons.misses), misses);
        prop_assert_eq!(rendered(&diff.cons.spurious), spurious);
    }
}
