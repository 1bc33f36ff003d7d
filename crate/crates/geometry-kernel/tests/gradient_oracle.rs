//! Finite-difference oracle for the analytic gradients.
//!
//! Every residual kind is checked at 100 random configurations against
//! central differences with h = 1e-6, to 1e-5 relative error. Samples that
//! land on a non-smooth point (hinge boundaries, the 0°/180° angle kink,
//! collapsed segments) are resampled — the derivative is not defined there,
//! so a mismatch would test the oracle, not the gradient.

use std::collections::BTreeMap;

use cdl_core::{CdlDocument, LineSeg, PointLabel};
use geometry_kernel::{
    residual, residual_with_gradient, AngleTarget, Constraint, ConstraintKind, Figure,
    LengthTarget, BETWEEN_MARGIN,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const H: f64 = 1e-6;
const REL_TOL: f64 = 1e-5;
const SAMPLES: usize = 100;
/// Keep samples this far away from hinge boundaries and kinks, in units of
/// the quantity that crosses the boundary. Far larger than H so the central
/// difference never straddles the non-smooth point.
const KINK_GUARD: f64 = 1e-3;

fn lbl(s: &str) -> PointLabel {
    s.parse().unwrap()
}

fn seg(a: &str, b: &str) -> LineSeg {
    LineSeg::new(lbl(a), lbl(b)).unwrap()
}

struct Sample {
    labels: Vec<PointLabel>,
    coords: Vec<f64>,
    radius: Option<f64>,
}

impl Sample {
    fn figure(&self) -> Figure {
        let points: BTreeMap<PointLabel, (f64, f64)> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, (self.coords[2 * i], self.coords[2 * i + 1])))
            .collect();
        let mut circles = BTreeMap::new();
        if let Some(r) = self.radius {
            circles.insert(lbl("O"), r);
        }
        Figure::new(points, circles, CdlDocument::new())
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        let dx = self.coords[2 * i] - self.coords[2 * j];
        let dy = self.coords[2 * i + 1] - self.coords[2 * j + 1];
        (dx * dx + dy * dy).sqrt()
    }
}

/// Draw configurations until one is comfortably inside a smooth region, as
/// judged by `smooth_at`.
fn sample_smooth(
    rng: &mut ChaCha20Rng,
    labels: &[&str],
    spread: f64,
    with_radius: bool,
    smooth_at: impl Fn(&Sample) -> bool,
) -> Sample {
    for _ in 0..10_000 {
        let coords: Vec<f64> = (0..labels.len() * 2)
            .map(|_| rng.gen_range(-spread..spread))
            .collect();
        let radius = with_radius.then(|| rng.gen_range(0.3..1.5));
        let sample = Sample {
            labels: labels.iter().map(|s| lbl(s)).collect(),
            coords,
            radius,
        };
        if smooth_at(&sample) {
            return sample;
        }
    }
    panic!("could not find a smooth configuration in 10000 draws");
}

/// Compare analytic partials against central differences at one sample.
fn check_gradient(kind: ConstraintKind, sample: &Sample) {
    let constraint = Constraint::new(kind);
    let out = residual_with_gradient(&sample.figure(), &constraint);
    assert!(
        !out.degenerate,
        "smoothness filter let a degenerate sample through: {kind:?}"
    );

    // Sum repeated-label contributions the same way the solver does.
    let mut analytic: BTreeMap<PointLabel, (f64, f64)> = BTreeMap::new();
    for &(l, gx, gy) in &out.coord_grads {
        let e = analytic.entry(l).or_insert((0.0, 0.0));
        e.0 += gx;
        e.1 += gy;
    }

    for (i, &label) in sample.labels.iter().enumerate() {
        for axis in 0..2 {
            let mut plus = Sample {
                labels: sample.labels.clone(),
                coords: sample.coords.clone(),
                radius: sample.radius,
            };
            plus.coords[2 * i + axis] += H;
            let mut minus = Sample {
                labels: sample.labels.clone(),
                coords: sample.coords.clone(),
                radius: sample.radius,
            };
            minus.coords[2 * i + axis] -= H;
            let fd = (residual(&plus.figure(), &constraint)
                - residual(&minus.figure(), &constraint))
                / (2.0 * H);
            let an = analytic
                .get(&label)
                .map(|&(gx, gy)| if axis == 0 { gx } else { gy })
                .unwrap_or(0.0);
            assert!(
                (fd - an).abs() <= REL_TOL * an.abs().max(1.0),
                "{kind:?}: ∂/∂{label}.{} analytic {an} vs fd {fd}",
                if axis == 0 { "x" } else { "y" },
            );
        }
    }

    if let Some(r) = sample.radius {
        let an: f64 = out.radius_grads.iter().map(|&(_, g)| g).sum();
        let with = |radius: f64| {
            let s = Sample {
                labels: sample.labels.clone(),
                coords: sample.coords.clone(),
                radius: Some(radius),
            };
            residual(&s.figure(), &constraint)
        };
        let fd = (with(r + H) - with(r - H)) / (2.0 * H);
        assert!(
            (fd - an).abs() <= REL_TOL * an.abs().max(1.0),
            "{kind:?}: ∂/∂radius analytic {an} vs fd {fd}"
        );
    }
}

/// The angle at sample vertex `q` is clear of the 0°/180° kink (where the
/// |cross| term is not differentiable).
fn angle_clear(sample: &Sample, p: usize, q: usize, r: usize) -> bool {
    let at = |i: usize| (sample.coords[2 * i], sample.coords[2 * i + 1]);
    let (px, py) = at(p);
    let (qx, qy) = at(q);
    let (rx, ry) = at(r);
    let u = (px - qx, py - qy);
    let v = (rx - qx, ry - qy);
    let nu = (u.0 * u.0 + u.1 * u.1).sqrt();
    let nv = (v.0 * v.0 + v.1 * v.1).sqrt();
    nu > 0.1 && nv > 0.1 && (u.0 * v.1 - u.1 * v.0).abs() / (nu * nv) > KINK_GUARD
}

#[test]
fn collinear3_gradient_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    for _ in 0..SAMPLES {
        let s = sample_smooth(&mut rng, &["A", "B", "C"], 1.0, false, |s| {
            s.dist(0, 1) > 0.1 && s.dist(0, 2) > 0.1
        });
        check_gradient(
            ConstraintKind::Collinear3(lbl("A"), lbl("B"), lbl("C")),
            &s,
        );
    }
}

#[test]
fn on_circle_gradient_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(102);
    for _ in 0..SAMPLES {
        let s = sample_smooth(&mut rng, &["O", "P"], 1.0, true, |s| s.dist(0, 1) > 0.1);
        check_gradient(
            ConstraintKind::OnCircle {
                center: lbl("O"),
                point: lbl("P"),
            },
            &s,
        );
    }
}

#[test]
fn length_gradients_match_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(103);
    for i in 0..SAMPLES {
        let s = sample_smooth(&mut rng, &["A", "B", "C", "D"], 1.0, false, |s| {
            s.dist(0, 1) > 0.1 && s.dist(2, 3) > 0.1
        });
        let target = if i % 2 == 0 {
            LengthTarget::Value(0.2 + (i as f64) / 50.0)
        } else {
            LengthTarget::Seg(seg("C", "D"))
        };
        check_gradient(
            ConstraintKind::LengthEq {
                seg: seg("A", "B"),
                target,
            },
            &s,
        );
    }
}

#[test]
fn angle_gradients_match_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(104);
    for i in 0..SAMPLES {
        let s = sample_smooth(&mut rng, &["A", "B", "C", "D"], 1.0, false, |s| {
            angle_clear(s, 0, 1, 2) && angle_clear(s, 1, 2, 3)
        });
        let target = if i % 2 == 0 {
            AngleTarget::Degrees(10.0 + (i as f64))
        } else {
            // Shares B and C with the left-hand angle, so repeated-label
            // accumulation is exercised.
            AngleTarget::Angle(lbl("B"), lbl("C"), lbl("D"))
        };
        check_gradient(
            ConstraintKind::AngleEq {
                angle: (lbl("A"), lbl("B"), lbl("C")),
                target,
            },
            &s,
        );
    }
}

#[test]
fn parallel_and_perpendicular_gradients_match_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(105);
    for i in 0..SAMPLES {
        let s = sample_smooth(&mut rng, &["A", "B", "C", "D"], 1.0, false, |s| {
            s.dist(0, 1) > 0.1 && s.dist(2, 3) > 0.1
        });
        let kind = if i % 2 == 0 {
            ConstraintKind::Parallel(seg("A", "B"), seg("C", "D"))
        } else {
            ConstraintKind::Perpendicular(seg("A", "B"), seg("C", "D"))
        };
        check_gradient(kind, &s);
    }
}

#[test]
fn min_separation_gradient_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(106);
    let min_dist = 0.5;
    let mut active_seen = false;
    for _ in 0..SAMPLES {
        // A tight spread makes the hinge active roughly half the time; the
        // guard keeps samples off the boundary itself.
        let s = sample_smooth(&mut rng, &["A", "B"], 0.45, false, |s| {
            let d = s.dist(0, 1);
            d > 0.05 && (d - min_dist).abs() > KINK_GUARD
        });
        active_seen |= s.dist(0, 1) < min_dist;
        check_gradient(
            ConstraintKind::MinSeparation {
                a: lbl("A"),
                b: lbl("B"),
                min_dist,
            },
            &s,
        );
    }
    assert!(active_seen, "sampling never exercised the active hinge");
}

#[test]
fn between_order_gradient_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(107);
    let mut active_seen = false;
    for _ in 0..SAMPLES {
        let s = sample_smooth(&mut rng, &["A", "M", "B"], 1.0, false, |s| {
            let span2 = s.dist(0, 2).powi(2);
            if s.dist(0, 2) < 0.2 {
                return false;
            }
            let t = ((s.coords[2] - s.coords[0]) * (s.coords[4] - s.coords[0])
                + (s.coords[3] - s.coords[1]) * (s.coords[5] - s.coords[1]))
                / span2;
            (t - BETWEEN_MARGIN).abs() > KINK_GUARD
                && (t - (1.0 - BETWEEN_MARGIN)).abs() > KINK_GUARD
        });
        let span2 = s.dist(0, 2).powi(2);
        let t = ((s.coords[2] - s.coords[0]) * (s.coords[4] - s.coords[0])
            + (s.coords[3] - s.coords[1]) * (s.coords[5] - s.coords[1]))
            / span2;
        active_seen |= !(BETWEEN_MARGIN..=1.0 - BETWEEN_MARGIN).contains(&t);
        check_gradient(
            ConstraintKind::BetweenOrder {
                first: lbl("A"),
                mid: lbl("M"),
                last: lbl("B"),
            },
            &s,
        );
    }
    assert!(active_seen, "sampling never exercised the active hinge");
}
