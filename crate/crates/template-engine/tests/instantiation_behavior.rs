//! What instantiations actually say: emitted statements, captions, label
//! sharing, determinism, and the warm-start contract with the solver.

use std::collections::BTreeSet;

use geometry_kernel::{compile, solve_with, verify, SolveOptions};
use template_engine::{
    compose, instantiate, starter_library, AttachmentRelation, RelationKind, ShapePrimitive,
    Template, TemplateError,
};

fn starter(id: &str) -> Template {
    let lib = starter_library();
    lib.get(id)
        .unwrap_or_else(|| panic!("starter library lost template {id}"))
        .clone()
}

#[test]
fn equilateral_triangle_emits_shape_and_equal_sides() {
    let inst = instantiate(&starter("equilateral-triangle"), 11).unwrap();
    let text = inst.doc.to_text();
    assert!(text.contains("Shape(AB,BC,CA)"), "document:\n{text}");
    assert!(
        text.contains("Equal(LengthOfLine(AB),LengthOfLine(AC))")
            || text.contains("Equal(LengthOfLine(AB),LengthOfLine(BC))"),
        "no side equality:\n{text}"
    );
    assert_eq!(inst.caption, "an equilateral triangle ABC");
}

#[test]
fn heptagon_corner_literal_survives_as_an_exact_fraction() {
    let inst = instantiate(&starter("heptagon"), 4).unwrap();
    let text = inst.doc.to_text();
    // Interior angle of a regular heptagon is 900/7 degrees; it must print
    // as a fraction, not a rounded decimal.
    assert!(text.contains(",900/7)"), "document:\n{text}");
}

#[test]
fn composed_inscribed_triangle_lists_its_vertices_on_the_circle() {
    let triangle = starter("triangle").primitives[0].clone();
    let circle = starter("triangle-in-circle").primitives[1].clone();
    let template = compose(
        triangle,
        circle,
        AttachmentRelation {
            a: 0,
            b: Some(1),
            kind: RelationKind::InscribedInCircle,
        },
    )
    .unwrap();
    assert_eq!(template.id, "composed-triangle-circle-inscribed-in-circle");
    let inst = instantiate(&template, 3).unwrap();
    let text = inst.doc.to_text();
    assert!(text.contains("Cocircular(O,ABC)"), "document:\n{text}");
}

#[test]
fn compose_rejects_impossible_pairings() {
    let circle = starter("triangle-in-circle").primitives[1].clone();
    let triangle = starter("triangle").primitives[0].clone();
    match compose(
        circle,
        triangle,
        AttachmentRelation {
            a: 0,
            b: Some(1),
            kind: RelationKind::SharedEdge {
                edge_a: 0,
                edge_b: 0,
            },
        },
    ) {
        Err(TemplateError::IncompatibleRelation { .. }) => {}
        other => panic!("expected incompatible pairing, got {other:?}"),
    }
}

#[test]
fn same_template_and_seed_reproduce_bitwise() {
    for id in ["triangle-sized", "circle-with-secant", "triangle-strip"] {
        let template = starter(id);
        let a = instantiate(&template, 123).unwrap();
        let b = instantiate(&template, 123).unwrap();
        assert_eq!(a, b, "{id} not deterministic");
    }
}

#[test]
fn different_seeds_explore_the_sample_space() {
    let template = starter("triangle-sized");
    let docs: BTreeSet<String> = (0..10)
        .map(|seed| instantiate(&template, seed).unwrap().doc.to_text())
        .collect();
    assert!(docs.len() > 1, "ten seeds all produced the same document");
}

#[test]
fn shared_edge_merges_the_glued_labels() {
    let inst = instantiate(&starter("triangles-shared-edge"), 9).unwrap();
    assert_eq!(inst.labels.len(), 4, "labels: {:?}", inst.labels);
    let names: Vec<String> = inst.labels.iter().map(|l| l.to_string()).collect();
    assert_eq!(names, ["A", "B", "C", "D"]);
}

#[test]
fn label_demand_past_z_is_reported() {
    // Three octagons plus three midpoints need 27 labels; the alphabet has 26.
    let octagon = ShapePrimitive::RegularPolygon {
        sides: 8,
        side: None,
    };
    let midpoint = |i| AttachmentRelation {
        a: i,
        b: None,
        kind: RelationKind::MidpointOnEdge { edge: 0 },
    };
    let template = Template::new(
        "too-many-octagons",
        vec![octagon.clone(), octagon.clone(), octagon],
        vec![midpoint(0), midpoint(1), midpoint(2)],
        "three octagons {0} {1} {2} with marked midpoints",
    )
    .unwrap();
    match instantiate(&template, 0) {
        Err(TemplateError::LabelExhaustion { needed, .. }) => assert_eq!(needed, 27),
        other => panic!("expected label exhaustion, got {other:?}"),
    }
}

#[test]
fn angle_congruence_emits_a_cross_shape_equality() {
    let inst = instantiate(&starter("triangles-with-equal-angles"), 21).unwrap();
    let text = inst.doc.to_text();
    let has_pair = text.lines().any(|line| {
        line.starts_with("Equal(MeasureOfAngle(") && line.matches("MeasureOfAngle(").count() == 2
    });
    assert!(has_pair, "no angle-to-angle equality:\n{text}");
}

#[test]
fn midpoint_emits_collinearity_and_split_equality() {
    let inst = instantiate(&starter("triangle-with-midpoint"), 2).unwrap();
    let text = inst.doc.to_text();
    assert!(text.contains("Collinear(ADB)"), "document:\n{text}");
    assert!(
        text.contains("Equal(LengthOfLine(AD),LengthOfLine(BD))"),
        "document:\n{text}"
    );
}

#[test]
fn point_on_segment_emits_collinearity_only() {
    let inst = instantiate(&starter("triangle-with-point-on-side"), 2).unwrap();
    let text = inst.doc.to_text();
    assert!(text.contains("Collinear(BDC)"), "document:\n{text}");
    assert!(
        !text.contains("Equal(LengthOfLine(BD),LengthOfLine(CD))"),
        "an interior point must not be constrained to the midpoint:\n{text}"
    );
}

/// A cross-section of templates must survive the full pipeline: compile the
/// emitted document, solve with the prototype as warm start, and verify the
/// solved figure against the document.
#[test]
fn warm_started_solves_converge_and_verify() {
    for id in [
        "triangle-in-circle",
        "square-with-equilateral-flag",
        "trapezoid-sized",
        "circle-with-chord-line",
        "right-triangle-hypotenuse-midpoint",
        "parallelogram-triangle-circumcircle",
    ] {
        let template = starter(id);
        for seed in [1u64, 2] {
            let inst = instantiate(&template, seed).unwrap();
            let system = compile(&inst.doc).unwrap_or_else(|e| panic!("{id}: compile: {e}"));
            let figure = solve_with(&system, seed, &SolveOptions::default(), Some(&inst.prototype))
                .unwrap_or_else(|e| panic!("{id} seed {seed}: solve: {e}"));
            verify(&figure, &inst.doc, 1e-6)
                .unwrap_or_else(|e| panic!("{id} seed {seed}: verify: {e}"));
        }
    }
}

#[test]
fn parameters_land_on_announced_grids() {
    let inst = instantiate(&starter("triangle-sized"), 33).unwrap();
    let alpha = inst.params.get("p0.alpha").expect("alpha recorded");
    let side = inst.params.get("p0.side").expect("side recorded");
    assert!(alpha.is_integer(), "alpha off the degree grid: {alpha}");
    assert_eq!(*side * 2, (*side * 2).trunc(), "side off the half grid: {side}");
}
