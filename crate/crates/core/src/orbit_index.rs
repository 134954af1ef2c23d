//! The orbit-pair index: snapped displacement winding between two orbits
//! of a fixed-point-free plane map, with the audits that make it
//! trustworthy (curve choice, conjugacy, same-orbit vanishing), triple
//! sums with their exact quasi-additivity bookkeeping, and the
//! square-boundary audit for straightening isotopies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{
    config_from_polylines, predicted_triple_sum, tripod_corrections, triple_verdict, ConfigError,
    StreamlineConfig, TracedLine, TripleVerdict,
};
use crate::flows::{orbit, FlowError, Orbit, PlanarMap};
use crate::geometry::{point, Curve, GeometryError, Point};
use crate::model_zoo::{ModelError, ModelHandle, OrbitGroup};
use crate::rational::Rational;
use crate::winding::{
    displacement_winding, displacement_winding_raw, vector_path_winding, WindingError,
    WindingOptions, WindingResult,
};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error(transparent)]
    Winding(#[from] WindingError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Unsupported(String),
}

/// Result of a pair-index computation along one curve.
#[derive(Debug, Clone)]
pub struct PairIndexResult {
    pub value: Rational,
    pub winding: WindingResult,
    pub curve_desc: String,
    pub bases: (Point, Point),
}

/// Default curve between two orbit points: the straight segment; on a
/// fixed-point or refinement failure, retry once with a deterministic
/// jittered three-point polyline.
fn default_curve(a: Point, b: Point, attempt: u64) -> Result<Curve, GeometryError> {
    if attempt == 0 {
        Curve::segment(a, b)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0000 + attempt);
        let v = a.to(b);
        let (nx, ny) = (-v.dy, v.dx);
        let scale = 0.3 / v.magnitude().max(1e-9);
        let j: f64 = rng.gen_range(0.5..1.5);
        let mid = a.lerp(b, 0.5).add(crate::geometry::vector(nx * scale * j, ny * scale * j));
        Curve::polyline(vec![a, mid, b])
    }
}

/// Index of `map` between the orbits of `a` and `b` along `curve`
/// (default: the segment between the base points), snapped with
/// denominator 2.
pub fn pair_index(
    map: &PlanarMap,
    a: &Orbit,
    b: &Orbit,
    curve: Option<Curve>,
    opts: &WindingOptions,
) -> Result<PairIndexResult, IndexError> {
    let bases = (a.base, b.base);
    let run = |c: &Curve| -> Result<PairIndexResult, WindingError> {
        let w = displacement_winding(map, c, opts)?;
        Ok(PairIndexResult {
            value: w.snapped.expect("snapped by displacement_winding"),
            winding: w,
            curve_desc: c.describe(),
            bases,
        })
    };
    match curve {
        Some(c) => Ok(run(&c)?),
        None => {
            let c = default_curve(bases.0, bases.1, 0)?;
            match run(&c) {
                Ok(r) => Ok(r),
                Err(WindingError::FixedPointOnCurve { .. })
                | Err(WindingError::RefinementExhausted { .. }) => {
                    let c = default_curve(bases.0, bases.1, 1)?;
                    Ok(run(&c)?)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// Index along a curve joining two iterates of a single orbit; vanishes
/// for translation-class models.
pub fn same_orbit_index(
    map: &PlanarMap,
    o: &Orbit,
    n0: i64,
    n1: i64,
    opts: &WindingOptions,
) -> Result<Rational, IndexError> {
    assert!(n0 != n1, "iterates must differ");
    let a = o.iterate(n0);
    let b = o.iterate(n1);
    let c = Curve::segment(a, b)?;
    let w = displacement_winding(map, &c, opts)?;
    Ok(w.snapped.expect("snapped"))
}

#[derive(Debug, Clone)]
pub struct AuditCase {
    pub description: String,
    pub value: Option<Rational>,
    pub raw: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub passes: bool,
    pub cases: Vec<AuditCase>,
}

/// Compute the pair index over `n_curves` seeded random polylines between
/// random iterate pairs; passes iff every snapped value agrees.
pub fn curve_independence_audit(
    model: &ModelHandle,
    a: &Orbit,
    b: &Orbit,
    n_curves: usize,
    seed: u64,
    opts: &WindingOptions,
) -> AuditReport {
    assert!(n_curves >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    let mut values: Vec<Rational> = Vec::new();
    for i in 0..n_curves {
        let na = rng.gen_range(-3i64..=3);
        let nb = rng.gen_range(-3i64..=3);
        let pa = a.iterate(na);
        let pb = b.iterate(nb);
        let mut pts = vec![pa];
        let interior = rng.gen_range(1usize..=3);
        for k in 1..=interior {
            let t = k as f64 / (interior + 1) as f64;
            let base = pa.lerp(pb, t);
            let jx: f64 = rng.gen_range(-1.0..1.0);
            let jy: f64 = rng.gen_range(-1.0..1.0);
            let w = &model.window;
            let p = point(
                (base.x + jx).clamp(w.x0, w.x1),
                (base.y + jy).clamp(w.y0, w.y1),
            );
            pts.push(p);
        }
        pts.push(pb);
        pts.dedup_by(|p, q| p == q);
        let curve = match Curve::polyline(pts) {
            Ok(c) => c,
            Err(e) => {
                cases.push(AuditCase {
                    description: format!("curve {i}"),
                    value: None,
                    raw: None,
                    error: Some(e.to_string()),
                });
                continue;
            }
        };
        match displacement_winding(&model.map, &curve, opts) {
            Ok(w) => {
                let v = w.snapped.expect("snapped");
                values.push(v);
                cases.push(AuditCase {
                    description: format!("curve {i}: {}", curve.describe()),
                    value: Some(v),
                    raw: Some(w.raw),
                    error: None,
                });
            }
            Err(e) => cases.push(AuditCase {
                description: format!("curve {i}: {}", curve.describe()),
                value: None,
                raw: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let all_computed = cases.iter().all(|c| c.error.is_none());
    let all_equal = values.windows(2).all(|w| w[0] == w[1]);
    AuditReport {
        passes: all_computed && all_equal && !values.is_empty(),
        cases,
    }
}

/// Pair index over an explicit list of curves; passes iff all values agree.
pub fn explicit_curves_audit(
    map: &PlanarMap,
    curves: &[Curve],
    opts: &WindingOptions,
) -> AuditReport {
    let mut cases = Vec::new();
    let mut values = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        match displacement_winding(map, c, opts) {
            Ok(w) => {
                let v = w.snapped.expect("snapped");
                values.push(v);
                cases.push(AuditCase {
                    description: format!("curve {i}: {}", c.describe()),
                    value: Some(v),
                    raw: Some(w.raw),
                    error: None,
                });
            }
            Err(e) => cases.push(AuditCase {
                description: format!("curve {i}: {}", c.describe()),
                value: None,
                raw: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let all_computed = cases.iter().all(|c| c.error.is_none());
    let all_equal = values.windows(2).all(|w| w[0] == w[1]);
    AuditReport {
        passes: all_computed && all_equal && !values.is_empty(),
        cases,
    }
}

/// Check that the pair index is unchanged under each listed coordinate
/// change (applied to map and orbits together).
pub fn conjugacy_invariance_audit(
    model: &ModelHandle,
    a_base: Point,
    b_base: Point,
    changes: &[(PlanarMap, PlanarMap)],
    opts: &WindingOptions,
) -> Result<AuditReport, IndexError> {
    let depth = 5;
    let a = orbit(&model.map, a_base, depth)?;
    let b = orbit(&model.map, b_base, depth)?;
    let reference = pair_index(&model.map, &a, &b, None, opts)?.value;
    let mut cases = vec![AuditCase {
        description: "identity".into(),
        value: Some(reference),
        raw: None,
        error: None,
    }];
    let mut passes = true;
    for (psi, psi_inv) in changes {
        let conj = crate::model_zoo::conjugate(model, psi, psi_inv)?;
        let ca = orbit(&conj.map, psi.at(a_base), depth)?;
        let cb = orbit(&conj.map, psi.at(b_base), depth)?;
        match pair_index(&conj.map, &ca, &cb, None, opts) {
            Ok(r) => {
                if r.value != reference {
                    passes = false;
                }
                cases.push(AuditCase {
                    description: psi.name.clone(),
                    value: Some(r.value),
                    raw: Some(r.winding.raw),
                    error: None,
                });
            }
            Err(e) => {
                passes = false;
                cases.push(AuditCase {
                    description: psi.name.clone(),
                    value: None,
                    raw: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    Ok(AuditReport { passes, cases })
}

/// How the three pair values of a triple report were obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum PairBasis {
    /// Three directly snapped half-integer pair indices.
    Direct,
    /// Integer base windings plus the symmetric-tripod corrections; the
    /// per-pair values are decomposition terms (construction-dependent),
    /// the sum is the certified quantity.
    TripodDecomposition {
        base: [Rational; 3],
        corrections: [Rational; 3],
    },
}

#[derive(Debug, Clone)]
pub struct TripleReport {
    /// I12, I23, I31.
    pub values: [Rational; 3],
    pub sum: Rational,
    pub verdict: Option<TripleVerdict>,
    pub predicted: Option<Rational>,
    pub basis: PairBasis,
    /// Raw base windings (w1, w2, w12) along a1, a2, a1*a2.
    pub raw_windings: [f64; 3],
    pub telescoping_residual: f64,
}

/// Exact sum of the three pair indices of one orbit triple, cross-checked
/// against the combinatorial prediction when streamline geometry exists.
///
/// Non-separating triples use the tripod decomposition: the base curve
/// windings are integers for the supported selections (checked by
/// snapping with denominator 1), they telescope exactly, and the
/// corrections carry the chirality.
pub fn triple_sum(
    model: &ModelHandle,
    bases: [Point; 3],
    opts: &WindingOptions,
) -> Result<TripleReport, IndexError> {
    let c1 = Curve::segment(bases[0], bases[1])?;
    let c2 = Curve::segment(bases[1], bases[2])?;
    let c12 = c1.concat(&c2, 1e-9)?;
    let w1 = displacement_winding_raw(&model.map, &c1, opts)?;
    let w2 = displacement_winding_raw(&model.map, &c2, opts)?;
    let w12 = displacement_winding_raw(&model.map, &c12, opts)?;
    let raw_windings = [w1.raw, w2.raw, w12.raw];
    let telescoping_residual = (w1.raw + w2.raw - w12.raw).abs();

    let config = trace_triple_config(model, &bases, 30.0);
    let verdict = match &config {
        Some(cfg) => Some(triple_verdict(cfg)?),
        None => None,
    };
    let predicted = verdict.map(predicted_triple_sum);

    let snap = |raw: f64, denom: i64| -> Result<Rational, WindingError> {
        crate::geometry::snap_to_rational(raw, denom, opts.snap_tolerance).map_err(|e| match e {
            GeometryError::SnapFailure { value, nearest, gap } => WindingError::Snap {
                raw: value,
                nearest,
                gap,
            },
            other => WindingError::Geometry(other),
        })
    };

    let (values, basis) = match verdict {
        Some(TripleVerdict::NonSeparating { sign }) => {
            let n1 = snap(w1.raw, 1)?;
            let n2 = snap(w2.raw, 1)?;
            let n12 = snap(w12.raw, 1)?;
            if n12 != n1 + n2 {
                return Err(IndexError::Unsupported(format!(
                    "base windings fail to telescope: {n1} + {n2} vs {n12}"
                )));
            }
            let corr = tripod_corrections(sign);
            let values = [n1 + corr[0], n2 + corr[1], -n12 + corr[2]];
            (
                values,
                PairBasis::TripodDecomposition {
                    base: [n1, n2, -n12],
                    corrections: corr,
                },
            )
        }
        _ => {
            let i12 = snap(w1.raw, 2)?;
            let i23 = snap(w2.raw, 2)?;
            let i31 = -snap(w12.raw, 2)?;
            ([i12, i23, i31], PairBasis::Direct)
        }
    };
    let sum = values[0] + values[1] + values[2];
    Ok(TripleReport {
        values,
        sum,
        verdict,
        predicted,
        basis,
        raw_windings,
        telescoping_residual,
    })
}

/// Trace the three streamlines through the bases and build the exact
/// configuration, when the model carries geometry.
pub fn trace_triple_config(
    model: &ModelHandle,
    bases: &[Point; 3],
    extent: f64,
) -> Option<StreamlineConfig> {
    let mut lines = Vec::with_capacity(3);
    for &b in bases {
        let pts = model.trace_streamline(b, extent)?;
        if pts.len() < 2 {
            return None;
        }
        lines.push(TracedLine::from_polyline(pts));
    }
    config_from_polylines(&lines).ok()
}

/// A one-parameter family of coordinate changes t -> Phi_t.
pub struct Isotopy {
    pub name: String,
    pub at: Box<dyn Fn(f64) -> PlanarMap + Send + Sync>,
}

impl Isotopy {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> PlanarMap + Send + Sync + 'static,
    {
        Isotopy {
            name: name.into(),
            at: Box::new(f),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SquareAuditReport {
    pub passes: bool,
    pub winding: f64,
    pub snapped: Rational,
}

/// Winding of Delta(s,t) = Phi_t h Phi_t^-1(Phi_t(gamma(s))) - Phi_t(gamma(s))
/// around the boundary of the unit square; zero because the square is
/// contractible and Delta never vanishes.
pub fn square_boundary_audit(
    map: &PlanarMap,
    isotopy: &Isotopy,
    curve: &Curve,
    opts: &WindingOptions,
) -> Result<SquareAuditReport, IndexError> {
    // Phi_0 must be the identity and each sampled Phi_t a verified inverse pair.
    let probe_points = [curve.eval(0.0), curve.eval(0.5), curve.eval(1.0)];
    let phi0 = (isotopy.at)(0.0);
    for p in probe_points {
        if phi0.at(p).dist(p) > 1e-9 {
            return Err(IndexError::Unsupported(format!(
                "isotopy {} does not start at the identity",
                isotopy.name
            )));
        }
    }
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let phi = (isotopy.at)(t);
        for p in probe_points {
            let err = phi.at_inverse(phi.at(p)).dist(p);
            if err > 1e-8 {
                return Err(IndexError::Model(ModelError::NotInverse(err, p)));
            }
        }
    }

    let delta = move |s: f64, t: f64| {
        let phi = (isotopy.at)(t);
        let q = phi.at(curve.eval(s));
        q.to(phi.at(map.at(phi.at_inverse(q))))
    };
    // Boundary of [0,1]^2, counterclockwise.
    let boundary = move |lambda: f64| {
        let l = lambda * 4.0;
        if l <= 1.0 {
            delta(l, 0.0)
        } else if l <= 2.0 {
            delta(1.0, l - 1.0)
        } else if l <= 3.0 {
            delta(3.0 - l, 1.0)
        } else {
            delta(0.0, 4.0 - l)
        }
    };
    let mut square_opts = *opts;
    square_opts.initial_samples = opts.initial_samples.max(65);
    let res = vector_path_winding(boundary, &square_opts)?;
    let snapped = crate::geometry::snap_to_rational(res.raw, 1, opts.snap_tolerance)
        .map_err(WindingError::from)?;
    Ok(SquareAuditReport {
        passes: snapped.is_zero(),
        winding: res.raw,
        snapped,
    })
}

/// Are two declared orbits compatible for a direct half-integer pair
/// index (endpoint displacements parallel or antiparallel)?
pub fn pair_compatible(a: OrbitGroup, b: OrbitGroup) -> bool {
    matches!(
        (a, b),
        (OrbitGroup::Line, OrbitGroup::Line)
            | (OrbitGroup::PocketDown, OrbitGroup::PocketDown)
            | (OrbitGroup::PocketUp, OrbitGroup::PocketUp)
    )
}
