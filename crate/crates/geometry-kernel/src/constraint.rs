//! Constraint kinds and their residual functions.
//!
//! Every residual is zero exactly when the constraint holds and is smooth
//! in the point coordinates wherever the involved segments are
//! non-degenerate (the two hinge kinds, `MinSeparation` and `BetweenOrder`,
//! are piecewise smooth with a kink at the hinge boundary). Angular
//! residuals are expressed in degrees so they compare directly against
//! ImgCDL literals; the trigonometry underneath works in radians.
//!
//! [`residual_with_gradient`] is the single implementation of both the
//! residual values and their analytic partial derivatives; the solver, the
//! public [`residual`] function, and the finite-difference oracle tests all
//! go through it, so the value and gradient cannot drift apart silently.

use cdl_core::{LineSeg, PointLabel};

use crate::figure::Figure;

/// Residual value a constraint reports when its geometry is too degenerate
/// to evaluate (zero-length segment, missing label). Flagged, never fatal:
/// the separation constraints pull figures out of degeneracy as the solver
/// iterates.
pub const DEGENERATE_PENALTY: f64 = 1.0;

/// Hinge margin for [`ConstraintKind::BetweenOrder`], as a fraction of the
/// first-to-last span: the middle point must project into
/// [margin, 1 − margin] along the outer pair.
pub const BETWEEN_MARGIN: f64 = 0.02;

const TINY: f64 = 1e-12;

/// Target of a length equality: an absolute value or another segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthTarget {
    Value(f64),
    Seg(LineSeg),
}

/// Target of an angle equality: degrees or another angle triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleTarget {
    Degrees(f64),
    Angle(PointLabel, PointLabel, PointLabel),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintKind {
    /// P, Q, R lie on one line: normalized cross product of (Q−P, R−P).
    Collinear3(PointLabel, PointLabel, PointLabel),
    /// `point` lies on the circle around `center`: distance minus radius.
    OnCircle {
        center: PointLabel,
        point: PointLabel,
    },
    /// Segment length equals the target: signed difference.
    LengthEq { seg: LineSeg, target: LengthTarget },
    /// Angle at the middle label equals the target, in degrees.
    AngleEq {
        angle: (PointLabel, PointLabel, PointLabel),
        target: AngleTarget,
    },
    /// Normalized cross product of the two segment directions.
    Parallel(LineSeg, LineSeg),
    /// Normalized dot product of the two segment directions.
    Perpendicular(LineSeg, LineSeg),
    /// Hinge: max(0, min_dist − distance).
    MinSeparation {
        a: PointLabel,
        b: PointLabel,
        min_dist: f64,
    },
    /// Hinge keeping `mid`'s projection strictly between `first` and `last`.
    BetweenOrder {
        first: PointLabel,
        mid: PointLabel,
        last: PointLabel,
    },
}

/// A residual term with its optimization weight. Weights shape the solver's
/// objective only; convergence and verification always judge the raw
/// residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub weight: f64,
}

impl Constraint {
    pub fn new(kind: ConstraintKind) -> Self {
        Constraint { kind, weight: 1.0 }
    }
}

/// A residual value together with its partial derivatives with respect to
/// the involved point coordinates and circle radii. A label may appear more
/// than once in `coord_grads` (a constraint can touch the same point through
/// two operands); contributions add.
#[derive(Debug, Clone, Default)]
pub struct ResidualGrad {
    pub value: f64,
    pub coord_grads: Vec<(PointLabel, f64, f64)>,
    pub radius_grads: Vec<(PointLabel, f64)>,
    /// True when the residual fell back to [`DEGENERATE_PENALTY`].
    pub degenerate: bool,
}

impl ResidualGrad {
    fn penalty() -> Self {
        ResidualGrad {
            value: DEGENERATE_PENALTY,
            degenerate: true,
            ..Default::default()
        }
    }

    fn flat(value: f64) -> Self {
        ResidualGrad {
            value,
            ..Default::default()
        }
    }
}

/// The raw residual of one constraint against a figure (weight not
/// applied).
pub fn residual(figure: &Figure, constraint: &Constraint) -> f64 {
    residual_with_gradient(figure, constraint).value
}

/// The raw residual and its analytic gradient against a figure.
pub fn residual_with_gradient(figure: &Figure, constraint: &Constraint) -> ResidualGrad {
    eval(
        &constraint.kind,
        &|l| figure.xy(l),
        &|l| figure.circles().get(&l).copied(),
    )
}

/// Angle between directions `u` and `v` in degrees, in [0, 180].
pub(crate) fn angle_between_deg(u: (f64, f64), v: (f64, f64)) -> f64 {
    let cross = u.0 * v.1 - u.1 * v.0;
    let dot = u.0 * v.0 + u.1 * v.1;
    cross.abs().atan2(dot).to_degrees()
}

/// Core evaluation, generic over the coordinate and radius sources so the
/// solver (parameter vector) and the public figure-based API share it.
pub(crate) fn eval(
    kind: &ConstraintKind,
    xy: &dyn Fn(PointLabel) -> Option<(f64, f64)>,
    radius: &dyn Fn(PointLabel) -> Option<f64>,
) -> ResidualGrad {
    match *kind {
        ConstraintKind::Collinear3(p, q, r) => {
            let (Some(p_), Some(q_), Some(r_)) = (xy(p), xy(q), xy(r)) else {
                return ResidualGrad::penalty();
            };
            normalized_cross_three(p, p_, q, q_, r, r_)
        }
        ConstraintKind::OnCircle { center, point } => {
            let (Some(o), Some(pt), Some(rho)) = (xy(center), xy(point), radius(center)) else {
                return ResidualGrad::penalty();
            };
            let (ux, uy) = (pt.0 - o.0, pt.1 - o.1);
            let dist = (ux * ux + uy * uy).sqrt();
            if dist < TINY {
                return ResidualGrad::penalty();
            }
            ResidualGrad {
                value: dist - rho,
                coord_grads: vec![
                    (point, ux / dist, uy / dist),
                    (center, -ux / dist, -uy / dist),
                ],
                radius_grads: vec![(center, -1.0)],
                degenerate: false,
            }
        }
        ConstraintKind::LengthEq { seg, target } => {
            let Some(mut out) = segment_length_grad(seg, xy, 1.0) else {
                return ResidualGrad::penalty();
            };
            match target {
                LengthTarget::Value(v) => out.value -= v,
                LengthTarget::Seg(other) => {
                    // The helper already carries the minus sign in both the
                    // value and the partials.
                    let Some(rhs) = segment_length_grad(other, xy, -1.0) else {
                        return ResidualGrad::penalty();
                    };
                    out.value += rhs.value;
                    out.coord_grads.extend(rhs.coord_grads);
                }
            }
            out
        }
        ConstraintKind::AngleEq { angle, target } => {
            let Some(mut out) = angle_deg_grad(angle, xy, 1.0) else {
                return ResidualGrad::penalty();
            };
            match target {
                AngleTarget::Degrees(deg) => out.value -= deg,
                AngleTarget::Angle(p, q, r) => {
                    let Some(rhs) = angle_deg_grad((p, q, r), xy, -1.0) else {
                        return ResidualGrad::penalty();
                    };
                    out.value += rhs.value;
                    out.coord_grads.extend(rhs.coord_grads);
                }
            }
            out
        }
        ConstraintKind::Parallel(s1, s2) | ConstraintKind::Perpendicular(s1, s2) => {
            let (Some(a), Some(b), Some(c), Some(d)) =
                (xy(s1.a()), xy(s1.b()), xy(s2.a()), xy(s2.b()))
            else {
                return ResidualGrad::penalty();
            };
            let u = (b.0 - a.0, b.1 - a.1);
            let v = (d.0 - c.0, d.1 - c.1);
            let nu = (u.0 * u.0 + u.1 * u.1).sqrt();
            let nv = (v.0 * v.0 + v.1 * v.1).sqrt();
            if nu < TINY || nv < TINY {
                return ResidualGrad::penalty();
            }
            let len = nu * nv;
            let perpendicular = matches!(kind, ConstraintKind::Perpendicular(..));
            // Numerator and its partials: cross for parallel, dot for
            // perpendicular.
            let (num, db, dd) = if perpendicular {
                (u.0 * v.0 + u.1 * v.1, v, u)
            } else {
                (
                    u.0 * v.1 - u.1 * v.0,
                    (v.1, -v.0), // ∂cross/∂(b.x, b.y)
                    (-u.1, u.0), // ∂cross/∂(d.x, d.y)
                )
            };
            let value = num / len;
            // ∂len/∂b = (u/nu)·nv on the first segment, mirrored on ∂a;
            // likewise for the second segment.
            let lb = (u.0 / nu * nv, u.1 / nu * nv);
            let ld = (v.0 / nv * nu, v.1 / nv * nu);
            let quot = |dn: (f64, f64), dl: (f64, f64)| {
                (
                    dn.0 / len - value * dl.0 / len,
                    dn.1 / len - value * dl.1 / len,
                )
            };
            let gb = quot(db, lb);
            let ga = quot((-db.0, -db.1), (-lb.0, -lb.1));
            let gd = quot(dd, ld);
            let gc = quot((-dd.0, -dd.1), (-ld.0, -ld.1));
            ResidualGrad {
                value,
                coord_grads: vec![
                    (s1.a(), ga.0, ga.1),
                    (s1.b(), gb.0, gb.1),
                    (s2.a(), gc.0, gc.1),
                    (s2.b(), gd.0, gd.1),
                ],
                radius_grads: Vec::new(),
                degenerate: false,
            }
        }
        ConstraintKind::MinSeparation { a, b, min_dist } => {
            let (Some(pa), Some(pb)) = (xy(a), xy(b)) else {
                return ResidualGrad::penalty();
            };
            let (ux, uy) = (pa.0 - pb.0, pa.1 - pb.1);
            let dist = (ux * ux + uy * uy).sqrt();
            if dist >= min_dist {
                return ResidualGrad::flat(0.0);
            }
            if dist < TINY {
                // Coincident points give the hinge no direction to push;
                // report the full violation and let restarts move them.
                return ResidualGrad {
                    value: min_dist,
                    degenerate: true,
                    ..Default::default()
                };
            }
            ResidualGrad {
                value: min_dist - dist,
                coord_grads: vec![
                    (a, -ux / dist, -uy / dist),
                    (b, ux / dist, uy / dist),
                ],
                radius_grads: Vec::new(),
                degenerate: false,
            }
        }
        ConstraintKind::BetweenOrder { first, mid, last } => {
            let (Some(p), Some(q), Some(r)) = (xy(first), xy(mid), xy(last)) else {
                return ResidualGrad::penalty();
            };
            let w = (r.0 - p.0, r.1 - p.1);
            let big_w = w.0 * w.0 + w.1 * w.1;
            if big_w < TINY {
                return ResidualGrad::penalty();
            }
            let a = (q.0 - p.0, q.1 - p.1);
            let t = (a.0 * w.0 + a.1 * w.1) / big_w;
            let sign = if t < BETWEEN_MARGIN {
                -1.0
            } else if t > 1.0 - BETWEEN_MARGIN {
                1.0
            } else {
                return ResidualGrad::flat(0.0);
            };
            let value = if sign < 0.0 {
                BETWEEN_MARGIN - t
            } else {
                t - (1.0 - BETWEEN_MARGIN)
            };
            let dt_q = (w.0 / big_w, w.1 / big_w);
            let dt_p = (
                (-w.0 - a.0 + 2.0 * t * w.0) / big_w,
                (-w.1 - a.1 + 2.0 * t * w.1) / big_w,
            );
            let dt_r = ((a.0 - 2.0 * t * w.0) / big_w, (a.1 - 2.0 * t * w.1) / big_w);
            ResidualGrad {
                value,
                coord_grads: vec![
                    (first, sign * dt_p.0, sign * dt_p.1),
                    (mid, sign * dt_q.0, sign * dt_q.1),
                    (last, sign * dt_r.0, sign * dt_r.1),
                ],
                radius_grads: Vec::new(),
                degenerate: false,
            }
        }
    }
}

/// Normalized cross product of (Q−P, R−P) with partials on all three
/// points.
fn normalized_cross_three(
    p: PointLabel,
    p_: (f64, f64),
    q: PointLabel,
    q_: (f64, f64),
    r: PointLabel,
    r_: (f64, f64),
) -> ResidualGrad {
    let u = (q_.0 - p_.0, q_.1 - p_.1);
    let v = (r_.0 - p_.0, r_.1 - p_.1);
    let nu = (u.0 * u.0 + u.1 * u.1).sqrt();
    let nv = (v.0 * v.0 + v.1 * v.1).sqrt();
    if nu < TINY || nv < TINY {
        return ResidualGrad::penalty();
    }
    let len = nu * nv;
    let cross = u.0 * v.1 - u.1 * v.0;
    let value = cross / len;
    // ∂cross and ∂len per coordinate, then the quotient rule.
    let dc_q = (v.1, -v.0);
    let dc_r = (-u.1, u.0);
    let dc_p = (u.1 - v.1, v.0 - u.0);
    let dl_q = (u.0 / nu * nv, u.1 / nu * nv);
    let dl_r = (v.0 / nv * nu, v.1 / nv * nu);
    let dl_p = (-dl_q.0 - dl_r.0, -dl_q.1 - dl_r.1);
    let quot = |dc: (f64, f64), dl: (f64, f64)| {
        (
            dc.0 / len - value * dl.0 / len,
            dc.1 / len - value * dl.1 / len,
        )
    };
    let gp = quot(dc_p, dl_p);
    let gq = quot(dc_q, dl_q);
    let gr = quot(dc_r, dl_r);
    ResidualGrad {
        value,
        coord_grads: vec![(p, gp.0, gp.1), (q, gq.0, gq.1), (r, gr.0, gr.1)],
        radius_grads: Vec::new(),
        degenerate: false,
    }
}

/// Length of a segment scaled by `sign`, with matching partials. `None`
/// when an endpoint is missing or the segment has collapsed.
fn segment_length_grad(
    seg: LineSeg,
    xy: &dyn Fn(PointLabel) -> Option<(f64, f64)>,
    sign: f64,
) -> Option<ResidualGrad> {
    let (a, b) = (xy(seg.a())?, xy(seg.b())?);
    let (ux, uy) = (b.0 - a.0, b.1 - a.1);
    let len = (ux * ux + uy * uy).sqrt();
    if len < TINY {
        return None;
    }
    Some(ResidualGrad {
        value: sign * len,
        coord_grads: vec![
            (seg.b(), sign * ux / len, sign * uy / len),
            (seg.a(), -sign * ux / len, -sign * uy / len),
        ],
        radius_grads: Vec::new(),
        degenerate: false,
    })
}

/// Angle at the middle label in degrees, scaled by `sign`, with partials on
/// all three points. Continuous on (0, 180); the derivative with respect to
/// the cross term uses the subgradient 0 exactly on the ray boundary.
fn angle_deg_grad(
    (p, q, r): (PointLabel, PointLabel, PointLabel),
    xy: &dyn Fn(PointLabel) -> Option<(f64, f64)>,
    sign: f64,
) -> Option<ResidualGrad> {
    let (p_, q_, r_) = (xy(p)?, xy(q)?, xy(r)?);
    let u = (p_.0 - q_.0, p_.1 - q_.1);
    let v = (r_.0 - q_.0, r_.1 - q_.1);
    let cross = u.0 * v.1 - u.1 * v.0;
    let dot = u.0 * v.0 + u.1 * v.1;
    let den = cross * cross + dot * dot;
    if den < TINY * TINY {
        return None;
    }
    let deg = cross.abs().atan2(dot).to_degrees();
    let s_cross = if cross > 0.0 {
        1.0
    } else if cross < 0.0 {
        -1.0
    } else {
        0.0
    };
    // ∂atan2(|c|, d) = (sign(c)·d·∂c − |c|·∂d) / (c² + d²), in radians.
    let k = sign * 180.0 / std::f64::consts::PI / den;
    let da = |dc: f64, dd: f64| k * (s_cross * dot * dc - cross.abs() * dd);
    let dc_p = (v.1, -v.0);
    let dc_r = (-u.1, u.0);
    let dc_q = (u.1 - v.1, v.0 - u.0);
    let dd_p = (v.0, v.1);
    let dd_r = (u.0, u.1);
    let dd_q = (-u.0 - v.0, -u.1 - v.1);
    Some(ResidualGrad {
        value: sign * deg,
        coord_grads: vec![
            (p, da(dc_p.0, dd_p.0), da(dc_p.1, dd_p.1)),
            (q, da(dc_q.0, dd_q.0), da(dc_q.1, dd_q.1)),
            (r, da(dc_r.0, dd_r.0), da(dc_r.1, dd_r.1)),
        ],
        radius_grads: Vec::new(),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdl_core::CdlDocument;
    use std::collections::BTreeMap;

    fn lbl(s: &str) -> PointLabel {
        s.parse().unwrap()
    }

    fn figure(pts: &[(&str, f64, f64)], circles: &[(&str, f64)]) -> Figure {
        let points: BTreeMap<PointLabel, (f64, f64)> = pts
            .iter()
            .map(|&(l, x, y)| (lbl(l), (x, y)))
            .collect();
        let circles: BTreeMap<PointLabel, f64> =
            circles.iter().map(|&(l, r)| (lbl(l), r)).collect();
        Figure::new(points, circles, CdlDocument::new())
    }

    fn seg(a: &str, b: &str) -> LineSeg {
        LineSeg::new(lbl(a), lbl(b)).unwrap()
    }

    #[test]
    fn collinear_points_give_zero_residual() {
        let fig = figure(&[("A", 0.0, 0.0), ("B", 1.0, 1.0), ("C", 2.0, 2.0)], &[]);
        let c = Constraint::new(ConstraintKind::Collinear3(lbl("A"), lbl("B"), lbl("C")));
        assert_eq!(residual(&fig, &c), 0.0);
    }

    #[test]
    fn right_angle_gives_zero_angle_residual() {
        let fig = figure(&[("A", 0.0, 0.0), ("B", 1.0, 0.0), ("C", 0.0, 1.0)], &[]);
        let c = Constraint::new(ConstraintKind::AngleEq {
            angle: (lbl("B"), lbl("A"), lbl("C")),
            target: AngleTarget::Degrees(90.0),
        });
        assert!(residual(&fig, &c).abs() < 1e-12);
    }

    #[test]
    fn angle_residual_is_direction_insensitive() {
        // 45° measured on both sides of the vertex ray.
        let fig = figure(&[("A", 1.0, 1.0), ("B", 0.0, 0.0), ("C", 1.0, 0.0)], &[]);
        let c = Constraint::new(ConstraintKind::AngleEq {
            angle: (lbl("A"), lbl("B"), lbl("C")),
            target: AngleTarget::Degrees(45.0),
        });
        assert!(residual(&fig, &c).abs() < 1e-12);
        let mirrored = figure(&[("A", 1.0, -1.0), ("B", 0.0, 0.0), ("C", 1.0, 0.0)], &[]);
        assert!(residual(&mirrored, &c).abs() < 1e-12);
    }

    #[test]
    fn on_circle_residual_is_signed_distance_error() {
        let fig = figure(&[("O", 0.0, 0.0), ("P", 2.0, 0.0)], &[("O", 1.5)]);
        let c = Constraint::new(ConstraintKind::OnCircle {
            center: lbl("O"),
            point: lbl("P"),
        });
        assert!((residual(&fig, &c) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parallel_and_perpendicular_residuals() {
        let fig = figure(
            &[
                ("A", 0.0, 0.0),
                ("B", 2.0, 0.0),
                ("C", 0.0, 1.0),
                ("D", 2.0, 1.0),
            ],
            &[],
        );
        let par = Constraint::new(ConstraintKind::Parallel(seg("A", "B"), seg("C", "D")));
        assert!(residual(&fig, &par).abs() < 1e-12);
        let perp = Constraint::new(ConstraintKind::Perpendicular(seg("A", "B"), seg("A", "C")));
        assert!(residual(&fig, &perp).abs() < 1e-12);
    }

    #[test]
    fn min_separation_hinge_activates_only_when_close() {
        let far = figure(&[("A", 0.0, 0.0), ("B", 1.0, 0.0)], &[]);
        let near = figure(&[("A", 0.0, 0.0), ("B", 0.01, 0.0)], &[]);
        let c = Constraint::new(ConstraintKind::MinSeparation {
            a: lbl("A"),
            b: lbl("B"),
            min_dist: 0.05,
        });
        assert_eq!(residual(&far, &c), 0.0);
        assert!((residual(&near, &c) - 0.04).abs() < 1e-12);
    }

    #[test]
    fn between_order_hinge_activates_outside_the_span() {
        let c = Constraint::new(ConstraintKind::BetweenOrder {
            first: lbl("A"),
            mid: lbl("M"),
            last: lbl("B"),
        });
        let inside = figure(&[("A", 0.0, 0.0), ("M", 0.5, 0.0), ("B", 1.0, 0.0)], &[]);
        assert_eq!(residual(&inside, &c), 0.0);
        let outside = figure(&[("A", 0.0, 0.0), ("M", 1.5, 0.0), ("B", 1.0, 0.0)], &[]);
        assert!((residual(&outside, &c) - (1.5 - (1.0 - BETWEEN_MARGIN))).abs() < 1e-12);
    }

    #[test]
    fn degenerate_segment_reports_the_penalty() {
        let fig = figure(&[("A", 0.0, 0.0), ("B", 0.0, 0.0), ("C", 1.0, 0.0)], &[]);
        let c = Constraint::new(ConstraintKind::Collinear3(lbl("A"), lbl("B"), lbl("C")));
        let out = residual_with_gradient(&fig, &c);
        assert!(out.degenerate);
        assert_eq!(out.value, DEGENERATE_PENALTY);
    }

    #[test]
    fn length_difference_is_signed() {
        // |AB| = 1, |CD| = 3 → residual −2; equal lengths → 0.
        let fig = figure(
            &[
                ("A", 0.0, 0.0),
                ("B", 1.0, 0.0),
                ("C", 0.0, 1.0),
                ("D", 3.0, 1.0),
            ],
            &[],
        );
        let c = Constraint::new(ConstraintKind::LengthEq {
            seg: seg("A", "B"),
            target: LengthTarget::Seg(seg("C", "D")),
        });
        assert!((residual(&fig, &c) + 2.0).abs() < 1e-12);

        let same = Constraint::new(ConstraintKind::LengthEq {
            seg: seg("A", "B"),
            target: LengthTarget::Seg(seg("A", "B")),
        });
        assert_eq!(residual(&fig, &same), 0.0);
    }

    #[test]
    fn angle_difference_is_signed() {
        // Angle ABD is 45°, angle ABC is 90° → residual −45.
        let fig = figure(
            &[
                ("A", 1.0, 0.0),
                ("B", 0.0, 0.0),
                ("C", 0.0, 1.0),
                ("D", 1.0, 1.0),
            ],
            &[],
        );
        let c = Constraint::new(ConstraintKind::AngleEq {
            angle: (lbl("A"), lbl("B"), lbl("D")),
            target: AngleTarget::Angle(lbl("A"), lbl("B"), lbl("C")),
        });
        assert!((residual(&fig, &c) + 45.0).abs() < 1e-12);
    }
}
