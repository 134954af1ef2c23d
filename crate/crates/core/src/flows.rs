//! Vector fields, adaptive ODE integration, time-one maps, orbits, and
//! the audits that back them (properness, non-vanishing, flow laws).

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{point, vector, Point, Rect, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("step limit exceeded after {steps} steps at t={t}")]
    StepLimitExceeded { steps: usize, t: f64 },
    #[error("non-finite state at t={t}")]
    NonFiniteState { t: f64 },
}

/// An evaluable planar vector field.
#[derive(Clone)]
pub struct VectorField {
    pub name: String,
    eval: Arc<dyn Fn(Point) -> Vector + Send + Sync>,
}

impl VectorField {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(Point) -> Vector + Send + Sync + 'static,
    {
        VectorField {
            name: name.into(),
            eval: Arc::new(f),
        }
    }

    pub fn at(&self, p: Point) -> Vector {
        (self.eval)(p)
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({})", self.name)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorSettings {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            relative_tolerance: 1e-10,
            absolute_tolerance: 1e-12,
            max_step: 0.1,
            max_steps: 200_000,
        }
    }
}

// Dormand-Prince 5(4) coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Solve the trajectory of `field` from `p` over time `t` (either sign)
/// with an embedded Runge-Kutta 5(4) pair and step-size control.
pub fn integrate(
    field: &VectorField,
    p: Point,
    t: f64,
    settings: &IntegratorSettings,
) -> Result<Point, FlowError> {
    trace(field, p, t, settings, |_, _| {})
}

/// Like [`integrate`] but reports every accepted step to `on_step`.
pub fn trace<F>(
    field: &VectorField,
    p: Point,
    t: f64,
    settings: &IntegratorSettings,
    mut on_step: F,
) -> Result<Point, FlowError>
where
    F: FnMut(f64, Point),
{
    if t == 0.0 {
        return Ok(p);
    }
    let dir = t.signum();
    let t_end = t.abs();
    let mut time = 0.0f64;
    let mut y = p;
    let mut h = settings.max_step.min(t_end);
    let mut steps = 0usize;
    while time < t_end {
        if steps >= settings.max_steps {
            return Err(FlowError::StepLimitExceeded { steps, t: dir * time });
        }
        steps += 1;
        h = h.min(t_end - time).min(settings.max_step);
        let mut k = [vector(0.0, 0.0); 7];
        for i in 0..7 {
            let mut q = y;
            for j in 0..i {
                q = q.add(k[j].scale(dir * h * A[i][j]));
            }
            let _ = C; // stage times are implicit: autonomous fields
            k[i] = field.at(q);
            if !k[i].is_finite() {
                return Err(FlowError::NonFiniteState { t: dir * time });
            }
        }
        let mut y5 = y;
        let mut y4 = y;
        for i in 0..7 {
            y5 = y5.add(k[i].scale(dir * h * B5[i]));
            y4 = y4.add(k[i].scale(dir * h * B4[i]));
        }
        if !y5.is_finite() {
            return Err(FlowError::NonFiniteState { t: dir * time });
        }
        let scale_x = settings.absolute_tolerance
            + settings.relative_tolerance * y.x.abs().max(y5.x.abs());
        let scale_y = settings.absolute_tolerance
            + settings.relative_tolerance * y.y.abs().max(y5.y.abs());
        let ex = (y5.x - y4.x) / scale_x;
        let ey = (y5.y - y4.y) / scale_y;
        let err = (0.5 * (ex * ex + ey * ey)).sqrt();
        if err <= 1.0 {
            time += h;
            y = y5;
            on_step(dir * time, y);
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h * factor).max(1e-14);
    }
    Ok(y)
}

/// An evaluable point transformation of the plane with a known inverse.
#[derive(Clone)]
pub struct PlanarMap {
    pub name: String,
    fwd: Arc<dyn Fn(Point) -> Point + Send + Sync>,
    inv: Arc<dyn Fn(Point) -> Point + Send + Sync>,
    pub orientation_preserving: bool,
}

impl fmt::Debug for PlanarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PlanarMap({})", self.name)
    }
}

impl PlanarMap {
    pub fn new<F, G>(name: impl Into<String>, fwd: F, inv: G) -> Self
    where
        F: Fn(Point) -> Point + Send + Sync + 'static,
        G: Fn(Point) -> Point + Send + Sync + 'static,
    {
        PlanarMap {
            name: name.into(),
            fwd: Arc::new(fwd),
            inv: Arc::new(inv),
            orientation_preserving: true,
        }
    }

    pub fn identity() -> Self {
        PlanarMap::new("identity", |p| p, |p| p)
    }

    pub fn at(&self, p: Point) -> Point {
        (self.fwd)(p)
    }

    pub fn at_inverse(&self, p: Point) -> Point {
        (self.inv)(p)
    }

    pub fn inverse(&self) -> PlanarMap {
        PlanarMap {
            name: format!("inv({})", self.name),
            fwd: self.inv.clone(),
            inv: self.fwd.clone(),
            orientation_preserving: self.orientation_preserving,
        }
    }

    pub fn displacement(&self, p: Point) -> Vector {
        p.to(self.at(p))
    }
}

/// The time-`t` map of a flow as a [`PlanarMap`]; orientation preserving by
/// construction.
pub fn flow_map(field: &VectorField, time: f64, settings: IntegratorSettings) -> PlanarMap {
    let f = field.clone();
    let g = field.clone();
    PlanarMap::new(
        format!("flow({}, t={time})", field.name),
        move |p| integrate(&f, p, time, &settings).expect("flow integration failed"),
        move |p| integrate(&g, p, -time, &settings).expect("flow integration failed"),
    )
}

/// Time-one map of a complete field.
pub fn time_one_map(field: &VectorField, settings: IntegratorSettings) -> PlanarMap {
    flow_map(field, 1.0, settings)
}

/// A base point with cached forward/backward iterates under a map.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub map: PlanarMap,
    pub base: Point,
    forward: Vec<Point>,
    backward: Vec<Point>,
}

pub const DEFAULT_ORBIT_DEPTH: usize = 20;

/// Cache iterates h^n(base) for n in [-depth, depth].
pub fn orbit(map: &PlanarMap, base: Point, depth: usize) -> Result<Orbit, FlowError> {
    assert!(depth >= 1, "orbit depth must be at least 1");
    let mut o = Orbit {
        map: map.clone(),
        base,
        forward: Vec::new(),
        backward: Vec::new(),
    };
    o.extend_to(depth)?;
    Ok(o)
}

impl Orbit {
    pub fn depth(&self) -> usize {
        self.forward.len().min(self.backward.len())
    }

    pub fn extend_to(&mut self, depth: usize) -> Result<(), FlowError> {
        while self.forward.len() < depth {
            let last = *self.forward.last().unwrap_or(&self.base);
            let next = self.map.at(last);
            if !next.is_finite() {
                return Err(FlowError::NonFiniteState {
                    t: self.forward.len() as f64,
                });
            }
            self.forward.push(next);
        }
        while self.backward.len() < depth {
            let last = *self.backward.last().unwrap_or(&self.base);
            let next = self.map.at_inverse(last);
            if !next.is_finite() {
                return Err(FlowError::NonFiniteState {
                    t: -(self.backward.len() as f64),
                });
            }
            self.backward.push(next);
        }
        Ok(())
    }

    /// h^n(base) for |n| <= depth.
    pub fn iterate(&self, n: i64) -> Point {
        if n == 0 {
            self.base
        } else if n > 0 {
            self.forward[(n - 1) as usize]
        } else {
            self.backward[(-n - 1) as usize]
        }
    }

    /// Check map(iterate(n)) = iterate(n+1) at every cached index.
    pub fn consistency_error(&self) -> f64 {
        let d = self.depth() as i64;
        let mut worst = 0.0f64;
        for n in -d..d {
            let err = self.map.at(self.iterate(n)).dist(self.iterate(n + 1));
            worst = worst.max(err);
        }
        worst
    }
}

pub const DEFAULT_RADIUS_SCHEDULE: [f64; 4] = [10.0, 20.0, 40.0, 80.0];

#[derive(Debug, Clone, PartialEq)]
pub enum RadiusStatus {
    /// First iterate index (absolute value) whose magnitude exceeded the radius.
    Exceeded { first_index: usize },
    NotReached,
}

#[derive(Debug, Clone)]
pub struct PropernessReport {
    pub passes: bool,
    pub forward: Vec<(f64, RadiusStatus)>,
    pub backward: Vec<(f64, RadiusStatus)>,
    pub witness: Option<String>,
}

/// Probe whether both iterate tails escape the scheduled radii without
/// returning below half of a radius they already exceeded.
///
/// Radii beyond the cached depth's reach are reported NotReached; they do
/// not fail the probe on their own.
pub fn properness_probe(o: &Orbit, schedule: &[f64]) -> PropernessReport {
    assert!(o.depth() >= schedule.len(), "orbit cached too shallow for schedule");
    let run = |dir: i64| -> (Vec<(f64, RadiusStatus)>, Option<String>) {
        let mags: Vec<f64> = (1..=o.depth() as i64)
            .map(|n| {
                let p = o.iterate(dir * n);
                p.to(point(0.0, 0.0)).magnitude()
            })
            .collect();
        let mut statuses = Vec::new();
        let mut witness = None;
        for &r in schedule {
            let first = mags.iter().position(|&m| m > r);
            match first {
                Some(i) => {
                    // After first exceeding r, the tail must stay above r/2.
                    if let Some(j) = mags[i..].iter().position(|&m| m < r / 2.0) {
                        witness = Some(format!(
                            "direction {dir}: fell to {:.3} (< {}/2) at iterate {}",
                            mags[i + j],
                            r,
                            (i + j + 1) as i64 * dir
                        ));
                    }
                    statuses.push((r, RadiusStatus::Exceeded { first_index: i + 1 }));
                }
                None => statuses.push((r, RadiusStatus::NotReached)),
            }
        }
        (statuses, witness)
    };
    let (forward, wf) = run(1);
    let (backward, wb) = run(-1);
    let exceeded = |v: &[(f64, RadiusStatus)]| {
        v.iter()
            .any(|(_, s)| matches!(s, RadiusStatus::Exceeded { .. }))
    };
    let monotone = |v: &[(f64, RadiusStatus)]| {
        let firsts: Vec<usize> = v
            .iter()
            .filter_map(|(_, s)| match s {
                RadiusStatus::Exceeded { first_index } => Some(*first_index),
                RadiusStatus::NotReached => None,
            })
            .collect();
        firsts.windows(2).all(|w| w[0] <= w[1])
    };
    let witness = wf.or(wb);
    let passes = witness.is_none()
        && exceeded(&forward)
        && exceeded(&backward)
        && monotone(&forward)
        && monotone(&backward);
    PropernessReport {
        passes,
        forward,
        backward,
        witness,
    }
}

#[derive(Debug, Clone)]
pub struct GridAuditReport {
    pub passes: bool,
    pub min_value: f64,
    pub min_location: Point,
}

/// Check |field| >= delta on every grid node of the region.
pub fn nonvanishing_audit(
    field: &VectorField,
    region: Rect,
    grid: (usize, usize),
    delta: f64,
) -> GridAuditReport {
    let mut min_value = f64::INFINITY;
    let mut min_location = point(region.x0, region.y0);
    for p in region.grid(grid.0, grid.1) {
        let m = field.at(p).magnitude();
        if m < min_value {
            min_value = m;
            min_location = p;
        }
    }
    GridAuditReport {
        passes: min_value >= delta,
        min_value,
        min_location,
    }
}

/// Check |map(p) - p| >= delta on every grid node of the region.
pub fn displacement_audit(
    map: &PlanarMap,
    region: Rect,
    grid: (usize, usize),
    delta: f64,
) -> GridAuditReport {
    let mut min_value = f64::INFINITY;
    let mut min_location = point(region.x0, region.y0);
    for p in region.grid(grid.0, grid.1) {
        let m = map.displacement(p).magnitude();
        if m < min_value {
            min_value = m;
            min_location = p;
        }
    }
    GridAuditReport {
        passes: min_value >= delta,
        min_value,
        min_location,
    }
}
