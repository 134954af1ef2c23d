//! Winding-number computations with adaptive refinement: index of a vector
//! field along a curve, Poincare-Hopf index at an isolated zero, and the
//! index of a homeomorphism along a curve (winding of the displacement
//! x -> h(x) - x).
//!
//! The adaptive scheme bisects any parameter interval whose direction change
//! reaches a quarter turn, so the final lift is unambiguous and the raw
//! winding carries no discretization error beyond the endpoint evaluations.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::flows::{PlanarMap, VectorField};
use crate::geometry::{
    snap_to_rational, turn_between, Curve, GeometryError, Point, Vector, DEFAULT_SNAP_TOLERANCE,
};
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindingError {
    #[error("vector below fixed-point threshold at parameter {param}: magnitude {magnitude:e}")]
    FixedPointOnCurve { param: f64, magnitude: f64 },
    #[error("refinement exhausted at {samples} samples")]
    RefinementExhausted { samples: usize },
    #[error("snap failure: raw {raw} is {gap:e} from {nearest}")]
    Snap { raw: f64, nearest: Rational, gap: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy)]
pub struct WindingOptions {
    /// Initial number of sample points on the curve (>= 8).
    pub initial_samples: usize,
    pub max_samples: usize,
    /// Magnitude below which a sample counts as a fixed point / zero.
    pub fixed_point_threshold: f64,
    pub snap_tolerance: f64,
    /// Denominator used when snapping open-curve windings.
    pub snap_denominator: i64,
    /// Endpoint coincidence distance below which a curve counts as closed.
    pub closed_curve_epsilon: f64,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions {
            initial_samples: 33,
            max_samples: 20_000,
            fixed_point_threshold: 1e-6,
            snap_tolerance: DEFAULT_SNAP_TOLERANCE,
            snap_denominator: 2,
            closed_curve_epsilon: 1e-12,
        }
    }
}

impl WindingOptions {
    pub fn validate(&self) -> Result<(), WindingError> {
        if self.initial_samples < 8
            || self.max_samples < self.initial_samples
            || !(self.fixed_point_threshold > 0.0)
            || !(self.snap_tolerance > 0.0)
            || self.snap_denominator <= 0
        {
            return Err(WindingError::Geometry(GeometryError::InvalidCurve(
                "invalid winding options".into(),
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WindingResult {
    /// Total lifted angle change divided by 2 pi.
    pub raw: f64,
    pub snapped: Option<Rational>,
    pub samples_used: usize,
    pub min_vector_magnitude: f64,
    pub refinement_rounds: usize,
}

// Refine a little before the lift would become ambiguous.
const REFINE_TURN: f64 = FRAC_PI_2 * 0.999;

/// Adaptive winding of a parametrized vector path on [0,1].
pub fn vector_path_winding<F>(
    sample: F,
    opts: &WindingOptions,
) -> Result<WindingResult, WindingError>
where
    F: Fn(f64) -> Vector,
{
    opts.validate()?;
    let probe = |t: f64| -> Result<(f64, Vector), WindingError> {
        let v = sample(t);
        let m = v.magnitude();
        if !v.is_finite() || m < opts.fixed_point_threshold {
            return Err(WindingError::FixedPointOnCurve {
                param: t,
                magnitude: m,
            });
        }
        Ok((t, v))
    };

    let n = opts.initial_samples.max(2);
    let mut samples: Vec<(f64, Vector)> = Vec::with_capacity(n);
    for i in 0..n {
        samples.push(probe(i as f64 / (n - 1) as f64)?);
    }

    let mut rounds = 0usize;
    loop {
        let mut refined: Vec<(f64, Vector)> = Vec::with_capacity(samples.len() * 2);
        let mut any = false;
        for i in 0..samples.len() - 1 {
            refined.push(samples[i]);
            let turn = turn_between(samples[i].1, samples[i + 1].1);
            if turn.abs() >= REFINE_TURN {
                let mid = 0.5 * (samples[i].0 + samples[i + 1].0);
                // A degenerate interval cannot be split further.
                if mid > samples[i].0 && mid < samples[i + 1].0 {
                    refined.push(probe(mid)?);
                    any = true;
                }
            }
        }
        refined.push(*samples.last().unwrap());
        samples = refined;
        if !any {
            break;
        }
        rounds += 1;
        if samples.len() > opts.max_samples {
            return Err(WindingError::RefinementExhausted {
                samples: samples.len(),
            });
        }
    }

    let mut total = 0.0f64;
    let mut min_mag = f64::INFINITY;
    for i in 0..samples.len() {
        min_mag = min_mag.min(samples[i].1.magnitude());
        if i > 0 {
            total += turn_between(samples[i - 1].1, samples[i].1);
        }
    }
    Ok(WindingResult {
        raw: total / std::f64::consts::TAU,
        snapped: None,
        samples_used: samples.len(),
        min_vector_magnitude: min_mag,
        refinement_rounds: rounds,
    })
}

fn snap_result(
    mut res: WindingResult,
    curve: &Curve,
    opts: &WindingOptions,
) -> Result<WindingResult, WindingError> {
    // Closed curves are honest degrees: integer quantization.
    let denom = if curve.is_closed(opts.closed_curve_epsilon) {
        1
    } else {
        opts.snap_denominator
    };
    match snap_to_rational(res.raw, denom, opts.snap_tolerance) {
        Ok(r) => {
            res.snapped = Some(r);
            Ok(res)
        }
        Err(GeometryError::SnapFailure { nearest, gap, .. }) => Err(WindingError::Snap {
            raw: res.raw,
            nearest,
            gap,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Winding of `field` along `curve`, snapped per the options.
pub fn field_winding(
    field: &VectorField,
    curve: &Curve,
    opts: &WindingOptions,
) -> Result<WindingResult, WindingError> {
    let res = vector_path_winding(|t| field.at(curve.eval(t)), opts)?;
    snap_result(res, curve, opts)
}

/// Raw winding of `field` along `curve` without snapping.
pub fn field_winding_raw(
    field: &VectorField,
    curve: &Curve,
    opts: &WindingOptions,
) -> Result<WindingResult, WindingError> {
    vector_path_winding(|t| field.at(curve.eval(t)), opts)
}

/// Poincare-Hopf index of `field` at an isolated zero: its winding around
/// the circle of the given radius, snapped to an integer.
pub fn hopf_index(
    field: &VectorField,
    center: Point,
    radius: f64,
    opts: &WindingOptions,
) -> Result<Rational, WindingError> {
    let circle = Curve::circle(center, radius);
    let res = field_winding(field, &circle, opts)?;
    Ok(res.snapped.expect("closed-curve winding always snaps"))
}

/// Winding of the displacement s -> map(curve(s)) - curve(s), snapped per
/// the options (denominator 2 by default, 1 for closed curves).
pub fn displacement_winding(
    map: &PlanarMap,
    curve: &Curve,
    opts: &WindingOptions,
) -> Result<WindingResult, WindingError> {
    let res = vector_path_winding(|t| map.displacement(curve.eval(t)), opts)?;
    snap_result(res, curve, opts)
}

/// Raw displacement winding without snapping.
pub fn displacement_winding_raw(
    map: &PlanarMap,
    curve: &Curve,
    opts: &WindingOptions,
) -> Result<WindingResult, WindingError> {
    vector_path_winding(|t| map.displacement(curve.eval(t)), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{time_one_map, IntegratorSettings};
    use crate::geometry::{point, vector};
    use std::f64::consts::PI;

    fn reeb_strip_field() -> VectorField {
        // Unit field turning from (1,0) at y=1 to (-1,0) at y=2.
        VectorField::new("reeb-strip", |p| {
            let a = PI * (p.y - 1.0);
            vector(a.cos(), a.sin())
        })
    }

    #[test]
    fn constant_field_has_zero_winding() {
        let f = VectorField::new("c", |_| vector(1.0, 0.0));
        let c = Curve::segment(point(0.0, 1.0), point(5.0, -2.0)).unwrap();
        let r = field_winding(&f, &c, &WindingOptions::default()).unwrap();
        assert_eq!(r.raw, 0.0);
        assert_eq!(r.snapped, Some(Rational::ZERO));
    }

    #[test]
    fn reeb_strip_segment_is_half() {
        let c = Curve::segment(point(0.0, 1.0), point(0.0, 2.0)).unwrap();
        let r = field_winding(&reeb_strip_field(), &c, &WindingOptions::default()).unwrap();
        assert!((r.raw - 0.5).abs() < 1e-12);
        assert_eq!(r.snapped, Some(Rational::new(1, 2)));
    }

    #[test]
    fn radial_field_around_circle_is_one() {
        let f = VectorField::new("radial", |p| vector(p.x, p.y));
        let c = Curve::circle(point(0.0, 0.0), 1.0);
        let r = field_winding(&f, &c, &WindingOptions::default()).unwrap();
        assert!((r.raw - 1.0).abs() < 1e-9);
        assert_eq!(r.snapped, Some(Rational::integer(1)));
    }

    #[test]
    fn hopf_examples() {
        let opts = WindingOptions::default();
        let id = VectorField::new("radial", |p| vector(p.x, p.y));
        assert_eq!(
            hopf_index(&id, point(0.0, 0.0), 1.0, &opts).unwrap(),
            Rational::integer(1)
        );
        let square = VectorField::new("square", |p| {
            vector(p.x * p.x - p.y * p.y, 2.0 * p.x * p.y)
        });
        assert_eq!(
            hopf_index(&square, point(0.0, 0.0), 1.0, &opts).unwrap(),
            Rational::integer(2)
        );
        let conj = VectorField::new("conj", |p| vector(p.x, -p.y));
        assert_eq!(
            hopf_index(&conj, point(0.0, 0.0), 1.0, &opts).unwrap(),
            Rational::integer(-1)
        );
    }

    #[test]
    fn hopf_radius_invariance() {
        let square = VectorField::new("square", |p| {
            vector(p.x * p.x - p.y * p.y, 2.0 * p.x * p.y)
        });
        let opts = WindingOptions::default();
        for r in [0.25, 0.5, 2.0, 7.0] {
            assert_eq!(
                hopf_index(&square, point(0.0, 0.0), r, &opts).unwrap(),
                Rational::integer(2)
            );
        }
    }

    #[test]
    fn fixed_point_on_curve_detected() {
        let f = VectorField::new("radial", |p| vector(p.x, p.y));
        let c = Curve::segment(point(-1.0, 0.0), point(1.0, 0.0)).unwrap();
        let err = field_winding(&f, &c, &WindingOptions::default()).unwrap_err();
        assert!(matches!(err, WindingError::FixedPointOnCurve { .. }));
    }

    #[test]
    fn translation_displacement_is_zero() {
        let t = PlanarMap::new("T", |p| point(p.x + 1.0, p.y), |p| point(p.x - 1.0, p.y));
        let c = Curve::segment(point(0.0, 1.0), point(0.0, 2.0)).unwrap();
        let r = displacement_winding(&t, &c, &WindingOptions::default()).unwrap();
        assert_eq!(r.raw, 0.0);
        assert_eq!(r.snapped, Some(Rational::ZERO));
    }

    #[test]
    fn reeb_time_one_displacement_matches_dense_oracle() {
        // Full Reeb field (constant extensions beyond the strip).
        let field = VectorField::new("reeb", |p| {
            if p.y <= 1.0 {
                vector(1.0, 0.0)
            } else if p.y >= 2.0 {
                vector(-1.0, 0.0)
            } else {
                let a = PI * (p.y - 1.0);
                vector(a.cos(), a.sin())
            }
        });
        let h = time_one_map(&field, IntegratorSettings::default());
        let c = Curve::segment(point(0.0, 1.0), point(0.0, 2.0)).unwrap();

        // Independent oracle: dense uniform sampling, no adaptive machinery.
        let n = 2_000;
        let mut total = 0.0;
        let mut prev = h.displacement(c.eval(0.0));
        for i in 1..=n {
            let v = h.displacement(c.eval(i as f64 / n as f64));
            let d = turn_between(prev, v);
            assert!(d.abs() < FRAC_PI_2, "oracle step ambiguous");
            total += d;
            prev = v;
        }
        let oracle = total / std::f64::consts::TAU;
        assert!((oracle - 0.5).abs() < 1e-6, "oracle={oracle}");

        let r = displacement_winding(&h, &c, &WindingOptions::default()).unwrap();
        assert!((r.raw - 0.5).abs() < 1e-6);
        assert_eq!(r.snapped, Some(Rational::new(1, 2)));
    }

    #[test]
    fn concatenation_additivity_and_reversal() {
        let f = reeb_strip_field();
        let c1 = Curve::polyline(vec![point(0.0, 1.0), point(0.4, 1.3), point(0.0, 1.6)]).unwrap();
        let c2 = Curve::polyline(vec![point(0.0, 1.6), point(-0.5, 1.8), point(0.0, 2.0)]).unwrap();
        let cat = c1.concat(&c2, 1e-12).unwrap();
        let opts = WindingOptions::default();
        let w1 = field_winding_raw(&f, &c1, &opts).unwrap().raw;
        let w2 = field_winding_raw(&f, &c2, &opts).unwrap().raw;
        let w12 = field_winding_raw(&f, &cat, &opts).unwrap().raw;
        assert!((w1 + w2 - w12).abs() < 1e-9);

        let wr = field_winding_raw(&f, &c1.reversed(), &opts).unwrap().raw;
        assert!((w1 + wr).abs() < 1e-9);
    }

    #[test]
    fn refinement_convergence_under_doubling() {
        let f = reeb_strip_field();
        let c = Curve::segment(point(0.0, 1.0), point(0.0, 2.0)).unwrap();
        let mut opts = WindingOptions::default();
        let r1 = field_winding(&f, &c, &opts).unwrap();
        opts.max_samples *= 2;
        opts.initial_samples *= 2;
        let r2 = field_winding(&f, &c, &opts).unwrap();
        assert!((r1.raw - r2.raw).abs() < 1e-6);
    }

    #[test]
    fn snap_failure_carries_raw() {
        // A quarter-turn winding cannot snap to halves.
        let f = VectorField::new("qt", |p| {
            let a = FRAC_PI_2 * p.x;
            vector(a.cos(), a.sin())
        });
        let c = Curve::segment(point(0.0, 0.0), point(1.0, 0.0)).unwrap();
        let err = field_winding(&f, &c, &WindingOptions::default()).unwrap_err();
        match err {
            WindingError::Snap { raw, .. } => assert!((raw - 0.25).abs() < 1e-9),
            other => panic!("expected snap failure, got {other:?}"),
        }
    }
}
