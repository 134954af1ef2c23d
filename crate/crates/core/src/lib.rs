//! Winding indices for planar dynamics: Poincare-Hopf indices of vector
//! fields, displacement indices of fixed-point-free plane homeomorphisms
//! along curves, closed-form model flows and coordinate changes, an exact
//! combinatorial engine on streamline configurations, and the audits tying
//! the numerical and combinatorial sides together.

pub mod acceptance;
pub mod config;
pub mod flows;
pub mod geometry;
pub mod model_zoo;
pub mod orbit_index;
pub mod rational;
pub mod winding;

pub use config::{CanonicalClassLabel, StreamlineConfig, TracedLine, TripleVerdict};
pub use flows::{
    flow_map, integrate, nonvanishing_audit, orbit, properness_probe, time_one_map,
    IntegratorSettings, Orbit, PlanarMap, VectorField,
};
pub use geometry::{
    lift_angles, point, snap_to_half_integer, subdivide, vector, AngleLift, Curve, Point, Rect,
    Vector,
};
pub use model_zoo::{DeclaredOrbit, ModelHandle, StripDescriptor, StripKind};
pub use orbit_index::{PairIndexResult, TripleReport};
pub use rational::Rational;
pub use winding::{
    displacement_winding, field_winding, hopf_index, WindingOptions, WindingResult,
};
