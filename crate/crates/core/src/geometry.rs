//! Plane primitives: points, vectors, refinable curves, continuous angle
//! lifting, and half-integer snapping.
//!
//! The sign convention for everything downstream is fixed here once:
//! angles are measured by `atan2`, counterclockwise positive.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector {
    pub dx: f64,
    pub dy: f64,
}

pub fn point(x: f64, y: f64) -> Point {
    Point { x, y }
}

pub fn vector(dx: f64, dy: f64) -> Vector {
    Vector { dx, dy }
}

impl Point {
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn to(&self, other: Point) -> Vector {
        vector(other.x - self.x, other.y - self.y)
    }

    pub fn add(&self, v: Vector) -> Point {
        point(self.x + v.dx, self.y + v.dy)
    }

    pub fn lerp(&self, other: Point, t: f64) -> Point {
        point(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn dist(&self, other: Point) -> f64 {
        self.to(other).magnitude()
    }
}

impl Vector {
    pub fn magnitude(&self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn angle(&self) -> f64 {
        self.dy.atan2(self.dx)
    }

    pub fn scale(&self, s: f64) -> Vector {
        vector(self.dx * s, self.dy * s)
    }

    pub fn is_finite(&self) -> bool {
        self.dx.is_finite() && self.dy.is_finite()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Axis-aligned rectangle, used for working windows and grid audits.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Row-major grid of `nx` by `ny` nodes including the boundary.
    pub fn grid(&self, nx: usize, ny: usize) -> Vec<Point> {
        assert!(nx >= 2 && ny >= 2, "grid must be at least 2x2");
        let mut pts = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let ty = j as f64 / (ny - 1) as f64;
            for i in 0..nx {
                let tx = i as f64 / (nx - 1) as f64;
                pts.push(point(
                    self.x0 + (self.x1 - self.x0) * tx,
                    self.y0 + (self.y1 - self.y0) * ty,
                ));
            }
        }
        pts
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("zero or non-finite vector at index {0}")]
    ZeroVector(usize),
    #[error("ambiguous direction step at index {0}: turn of {1} rad")]
    AmbiguousStep(usize, f64),
    #[error("snap failure: {value} is {gap} away from nearest {nearest}")]
    SnapFailure {
        value: f64,
        nearest: Rational,
        gap: f64,
    },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
}

/// A parametrized path on [0,1]. Immutable; refinement returns new curves.
#[derive(Clone)]
pub enum Curve {
    Polyline(Vec<Point>),
    Analytic {
        eval: Arc<dyn Fn(f64) -> Point + Send + Sync>,
        /// Parameter knots; subdivision refines these, the image is untouched.
        knots: Vec<f64>,
        label: String,
    },
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Curve::Polyline(pts) => write!(f, "Polyline({} pts)", pts.len()),
            Curve::Analytic { label, knots, .. } => {
                write!(f, "Analytic({label}, {} knots)", knots.len())
            }
        }
    }
}

impl Curve {
    /// Polyline through the given vertices. Requires at least two vertices
    /// with consecutive vertices distinct.
    pub fn polyline(points: Vec<Point>) -> Result<Curve, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::InvalidCurve(
                "polyline needs at least 2 points".into(),
            ));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !w[0].is_finite() || !w[1].is_finite() {
                return Err(GeometryError::InvalidCurve(format!(
                    "non-finite vertex near index {i}"
                )));
            }
            if w[0] == w[1] {
                return Err(GeometryError::InvalidCurve(format!(
                    "repeated consecutive vertex at index {i}"
                )));
            }
        }
        Ok(Curve::Polyline(points))
    }

    pub fn segment(a: Point, b: Point) -> Result<Curve, GeometryError> {
        Curve::polyline(vec![a, b])
    }

    pub fn analytic<F>(f: F, label: impl Into<String>) -> Curve
    where
        F: Fn(f64) -> Point + Send + Sync + 'static,
    {
        Curve::Analytic {
            eval: Arc::new(f),
            knots: vec![0.0, 1.0],
            label: label.into(),
        }
    }

    /// Counterclockwise circle traversed once, starting and ending at angle 0.
    pub fn circle(center: Point, radius: f64) -> Curve {
        Curve::analytic(
            move |t| {
                let a = TAU * t;
                point(center.x + radius * a.cos(), center.y + radius * a.sin())
            },
            format!("circle r={radius}"),
        )
    }

    pub fn eval(&self, t: f64) -> Point {
        match self {
            Curve::Polyline(pts) => {
                let n = pts.len() - 1;
                if t <= 0.0 {
                    return pts[0];
                }
                if t >= 1.0 {
                    return pts[n];
                }
                let s = t * n as f64;
                let i = (s.floor() as usize).min(n - 1);
                pts[i].lerp(pts[i + 1], s - i as f64)
            }
            Curve::Analytic { eval, .. } => eval(t),
        }
    }

    pub fn start(&self) -> Point {
        self.eval(0.0)
    }

    pub fn end(&self) -> Point {
        self.eval(1.0)
    }

    pub fn is_closed(&self, eps: f64) -> bool {
        self.start().dist(self.end()) < eps
    }

    /// Reverse orientation.
    pub fn reversed(&self) -> Curve {
        match self {
            Curve::Polyline(pts) => {
                let mut r = pts.clone();
                r.reverse();
                Curve::Polyline(r)
            }
            Curve::Analytic { eval, knots, label } => {
                let eval = eval.clone();
                let mut knots: Vec<f64> = knots.iter().map(|t| 1.0 - t).collect();
                knots.reverse();
                Curve::Analytic {
                    eval: Arc::new(move |t| eval(1.0 - t)),
                    knots,
                    label: format!("rev({label})"),
                }
            }
        }
    }

    /// Concatenate with another curve whose start matches this curve's end.
    pub fn concat(&self, other: &Curve, eps: f64) -> Result<Curve, GeometryError> {
        if self.end().dist(other.start()) > eps {
            return Err(GeometryError::InvalidCurve(
                "concatenation endpoints do not meet".into(),
            ));
        }
        match (self, other) {
            (Curve::Polyline(a), Curve::Polyline(b)) => {
                let mut pts = a.clone();
                pts.extend(b.iter().skip(1).copied());
                Curve::polyline(pts)
            }
            _ => {
                let a = self.clone();
                let b = other.clone();
                Ok(Curve::analytic(
                    move |t| {
                        if t < 0.5 {
                            a.eval(t * 2.0)
                        } else {
                            b.eval((t - 0.5) * 2.0)
                        }
                    },
                    "concat",
                ))
            }
        }
    }

    pub fn knots(&self) -> Vec<f64> {
        match self {
            Curve::Polyline(pts) => {
                let n = pts.len() - 1;
                (0..=n).map(|i| i as f64 / n as f64).collect()
            }
            Curve::Analytic { knots, .. } => knots.clone(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Curve::Polyline(pts) => {
                let body: Vec<String> = pts.iter().map(|p| format!("{:.4},{:.4}", p.x, p.y)).collect();
                body.join(";")
            }
            Curve::Analytic { label, .. } => label.clone(),
        }
    }
}

/// Split every inter-knot span of the curve.
///
/// `refinement` gives per-span split counts (each >= 1, 1 = keep). A short
/// slice is padded with 1s. Polylines gain vertices on their own segments;
/// analytic curves keep their evaluator (image unchanged) and only refine
/// the knot grid.
pub fn subdivide(curve: &Curve, refinement: &[usize]) -> Result<Curve, GeometryError> {
    if refinement.iter().any(|&k| k == 0) {
        return Err(GeometryError::InvalidCurve(
            "split counts must be at least 1".into(),
        ));
    }
    let split = |i: usize| -> usize { refinement.get(i).copied().unwrap_or(1) };
    match curve {
        Curve::Polyline(pts) => {
            let mut out = vec![pts[0]];
            for (i, w) in pts.windows(2).enumerate() {
                let k = split(i);
                for j in 1..=k {
                    out.push(w[0].lerp(w[1], j as f64 / k as f64));
                }
            }
            Ok(Curve::Polyline(out))
        }
        Curve::Analytic { eval, knots, label } => {
            let mut out = vec![knots[0]];
            for (i, w) in knots.windows(2).enumerate() {
                let k = split(i);
                for j in 1..=k {
                    out.push(w[0] + (w[1] - w[0]) * j as f64 / k as f64);
                }
            }
            Ok(Curve::Analytic {
                eval: eval.clone(),
                knots: out,
                label: label.clone(),
            })
        }
    }
}

/// A continuous lift of the direction angles of a vector sequence.
#[derive(Debug, Clone)]
pub struct AngleLift {
    /// (parameter, lifted angle). Parameters are the sample indices unless
    /// the caller supplies its own.
    pub samples: Vec<(f64, f64)>,
}

impl AngleLift {
    /// Total lifted change divided by 2π: the winding contribution.
    pub fn turns(&self) -> f64 {
        let first = self.samples.first().map(|s| s.1).unwrap_or(0.0);
        let last = self.samples.last().map(|s| s.1).unwrap_or(0.0);
        (last - first) / TAU
    }
}

/// Principal angle from `a` to `b`, in (−π, π].
pub fn turn_between(a: Vector, b: Vector) -> f64 {
    let cross = a.dx * b.dy - a.dy * b.dx;
    let dot = a.dx * b.dx + a.dy * b.dy;
    cross.atan2(dot)
}

/// Continuously lift the direction angles of a vector sequence.
///
/// Steps of exactly a quarter turn are accepted; anything strictly larger
/// is ambiguous and the caller must refine.
pub fn lift_angles(vectors: &[Vector]) -> Result<AngleLift, GeometryError> {
    if vectors.is_empty() {
        return Err(GeometryError::ZeroVector(0));
    }
    for (i, v) in vectors.iter().enumerate() {
        if !v.is_finite() || !(v.magnitude() > 0.0) {
            return Err(GeometryError::ZeroVector(i));
        }
    }
    let mut angle = vectors[0].angle();
    let mut samples = Vec::with_capacity(vectors.len());
    samples.push((0.0, angle));
    for i in 1..vectors.len() {
        let d = turn_between(vectors[i - 1], vectors[i]);
        if d.abs() > FRAC_PI_2 {
            return Err(GeometryError::AmbiguousStep(i, d));
        }
        angle += d;
        samples.push((i as f64, angle));
    }
    Ok(AngleLift { samples })
}

/// Snap to the nearest multiple of 1/denominator within `tolerance`.
pub fn snap_to_rational(x: f64, denominator: i64, tolerance: f64) -> Result<Rational, GeometryError> {
    assert!(denominator > 0 && tolerance > 0.0);
    let k = (x * denominator as f64).round();
    let nearest = Rational::new(k as i64, denominator);
    let gap = (x - nearest.to_f64()).abs();
    if gap <= tolerance {
        Ok(nearest)
    } else {
        Err(GeometryError::SnapFailure { value: x, nearest, gap })
    }
}

/// Snap to the nearest half integer k/2 within `tolerance`.
pub fn snap_to_half_integer(x: f64, tolerance: f64) -> Result<Rational, GeometryError> {
    snap_to_rational(x, 2, tolerance)
}

/// Do the closed segments a0-a1 and b0-b1 intersect?
pub fn segments_intersect(a0: Point, a1: Point, b0: Point, b1: Point) -> bool {
    fn orient(p: Point, q: Point, r: Point) -> f64 {
        (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
    }
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, d: f64| -> bool {
        d == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(b0, b1, a0, d1) || on(b0, b1, a1, d2) || on(a0, a1, b0, d3) || on(a0, a1, b1, d4)
}

pub const DEFAULT_SNAP_TOLERANCE: f64 = 0.02;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lift_constant_direction() {
        let lift = lift_angles(&[vector(1.0, 0.0), vector(1.0, 0.0), vector(1.0, 0.0)]).unwrap();
        assert_eq!(lift.turns(), 0.0);
        assert!(lift.samples.iter().all(|s| s.1 == 0.0));
    }

    #[test]
    fn lift_quarter_turns() {
        let lift =
            lift_angles(&[vector(1.0, 0.0), vector(0.0, 1.0), vector(-1.0, 0.0)]).unwrap();
        assert!((lift.turns() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lift_half_turn_is_ambiguous() {
        let err = lift_angles(&[vector(1.0, 0.0), vector(-1.0, 0.0)]).unwrap_err();
        assert!(matches!(err, GeometryError::AmbiguousStep(1, _)));
    }

    #[test]
    fn lift_rejects_zero_vector() {
        let err = lift_angles(&[vector(1.0, 0.0), vector(0.0, 0.0)]).unwrap_err();
        assert!(matches!(err, GeometryError::ZeroVector(1)));
    }

    #[test]
    fn subdivide_segment_midpoint() {
        let c = Curve::segment(point(0.0, 1.0), point(0.0, 2.0)).unwrap();
        let r = subdivide(&c, &[2]).unwrap();
        match r {
            Curve::Polyline(pts) => {
                assert_eq!(pts, vec![point(0.0, 1.0), point(0.0, 1.5), point(0.0, 2.0)]);
            }
            _ => panic!("expected polyline"),
        }
    }

    #[test]
    fn subdivide_all_ones_is_identity() {
        let c = Curve::polyline(vec![point(0.0, 0.0), point(1.0, 0.0), point(1.0, 1.0)]).unwrap();
        let r = subdivide(&c, &[1, 1]).unwrap();
        match (c, r) {
            (Curve::Polyline(a), Curve::Polyline(b)) => assert_eq!(a, b),
            _ => panic!(),
        }
    }

    #[test]
    fn subdivide_analytic_keeps_image() {
        let c = Curve::circle(point(0.0, 0.0), 1.0);
        let r = subdivide(&c, &[4]).unwrap();
        match &r {
            Curve::Analytic { knots, .. } => {
                assert_eq!(knots.len(), 5);
                for &t in knots {
                    let p = r.eval(t);
                    assert!((p.to(point(0.0, 0.0)).magnitude() - 1.0).abs() < 1e-12);
                }
            }
            _ => panic!("analytic subdivision must stay analytic"),
        }
        assert_eq!(r.start(), c_eval_start(&r));
    }

    fn c_eval_start(c: &Curve) -> Point {
        c.eval(0.0)
    }

    #[test]
    fn snap_examples() {
        assert_eq!(snap_to_half_integer(0.4999997, 0.02).unwrap(), Rational::new(1, 2));
        assert_eq!(snap_to_half_integer(0.0, 0.5).unwrap(), Rational::ZERO);
        let err = snap_to_half_integer(0.27, 0.02).unwrap_err();
        match err {
            GeometryError::SnapFailure { nearest, gap, .. } => {
                assert_eq!(nearest, Rational::new(1, 2));
                assert!((gap - 0.23).abs() < 1e-12);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn curve_endpoints_match_declared() {
        let c = Curve::segment(point(1.0, 2.0), point(3.0, 4.0)).unwrap();
        assert_eq!(c.start(), point(1.0, 2.0));
        assert_eq!(c.end(), point(3.0, 4.0));
        let circle = Curve::circle(point(5.0, 5.0), 2.0);
        assert!(circle.is_closed(1e-12));
    }

    #[test]
    fn polyline_rejects_degenerate() {
        assert!(Curve::polyline(vec![point(0.0, 0.0)]).is_err());
        assert!(Curve::polyline(vec![point(0.0, 0.0), point(0.0, 0.0)]).is_err());
    }

    proptest! {
        #[test]
        fn lift_reversal_antisymmetric(angles in proptest::collection::vec(-0.7f64..0.7, 2..40)) {
            // Build a vector sequence with steps below the ambiguity bound.
            let mut a = 0.3f64;
            let mut vs = vec![vector(a.cos(), a.sin())];
            for d in &angles {
                a += d;
                vs.push(vector(a.cos(), a.sin()));
            }
            let fwd = lift_angles(&vs).unwrap().turns();
            let mut rev = vs.clone();
            rev.reverse();
            let bwd = lift_angles(&rev).unwrap().turns();
            prop_assert!((fwd + bwd).abs() < 1e-9);
        }

        #[test]
        fn snap_grid_roundtrip(k in -1_000_000i64..1_000_000, eps in -0.02f64..0.02) {
            let x = k as f64 / 2.0 + eps;
            let snapped = snap_to_half_integer(x, 0.0201).unwrap();
            prop_assert_eq!(snapped, Rational::new(k, 2));
        }

        #[test]
        fn subdivide_preserves_winding(splits in proptest::collection::vec(1usize..4, 3)) {
            let c = Curve::polyline(vec![
                point(0.0, 0.0), point(1.0, 0.2), point(2.0, -0.1), point(3.0, 0.3),
            ]).unwrap();
            let r = subdivide(&c, &splits).unwrap();
            // Direction sequences of tangents along both curves lift to the
            // same total turn.
            let turns = |cv: &Curve| {
                let ks = cv.knots();
                let mut vs = Vec::new();
                for w in ks.windows(2) {
                    vs.push(cv.eval(w[0]).to(cv.eval(w[1])));
                }
                lift_angles(&vs).unwrap().turns()
            };
            prop_assert!((turns(&c) - turns(&r)).abs() < 1e-9);
        }
    }
}
