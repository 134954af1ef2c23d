//! Exact combinatorial engine on streamline configurations: separation
//! queries on the cyclic order at infinity, the two- and three-orbit
//! classifications, predicted triple sums with their chirality bookkeeping,
//! and the twist-word algebra on the two-line mapping class group. No
//! floating point enters any verdict; geometry is only used once, to read
//! off slots.
//!
//! Conventions fixed here and inherited by everything downstream:
//! - slots 0..2r-1 run counterclockwise on the circle at infinity;
//! - the positive (+1) non-separating chirality is the pattern whose
//!   streamlines read backward-end-then-forward-end counterclockwise
//!   (forward slot = backward slot + 1 mod 2r); its mirror is -1;
//! - "left of an oriented line" is the counterclockwise arc from its
//!   forward end slot to its backward end slot.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::geometry::{segments_intersect, Point};
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("coincident end directions: streamline {0} and streamline {1}")]
    CoincidentEndDirections(usize, usize),
    #[error("crossing polylines: streamline {0} and streamline {1}")]
    CrossingPolylines(usize, usize),
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// One streamline's two end slots in the cyclic order at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamlineEnds {
    pub backward_slot: usize,
    pub forward_slot: usize,
}

/// A traced streamline: polyline ordered from the backward end to the
/// forward end, plus the two end directions as angles on the circle at
/// infinity.
#[derive(Debug, Clone)]
pub struct TracedLine {
    pub points: Vec<Point>,
    pub backward_angle: f64,
    pub forward_angle: f64,
}

impl TracedLine {
    /// Build from a polyline ordered backward-end to forward-end, taking
    /// the end directions from the endpoint position angles.
    pub fn from_polyline(points: Vec<Point>) -> Self {
        let b = points.first().copied().expect("nonempty polyline");
        let f = points.last().copied().expect("nonempty polyline");
        TracedLine {
            points,
            backward_angle: b.y.atan2(b.x),
            forward_angle: f.y.atan2(f.x),
        }
    }
}

/// Exact encoding of r proper streamlines by end slots on the circle at
/// infinity, with the flow orientation recorded per streamline.
#[derive(Debug, Clone)]
pub struct StreamlineConfig {
    pub ends: Vec<StreamlineEnds>,
    pub geometry: Option<Vec<TracedLine>>,
}

impl StreamlineConfig {
    pub fn new(ends: Vec<StreamlineEnds>) -> Result<Self, ConfigError> {
        let r = ends.len();
        if r == 0 {
            return Err(ConfigError::UnsupportedConfiguration(
                "empty configuration".into(),
            ));
        }
        let mut seen = vec![false; 2 * r];
        for e in &ends {
            for s in [e.backward_slot, e.forward_slot] {
                if s >= 2 * r || seen[s] {
                    return Err(ConfigError::UnsupportedConfiguration(format!(
                        "slot {s} out of range or reused"
                    )));
                }
                seen[s] = true;
            }
        }
        Ok(StreamlineConfig {
            ends,
            geometry: None,
        })
    }

    pub fn r(&self) -> usize {
        self.ends.len()
    }

    /// Do backward and forward ends alternate around the circle?
    pub fn is_alternating(&self) -> bool {
        let r = self.r();
        let mut kind = vec![false; 2 * r];
        for e in &self.ends {
            kind[e.forward_slot] = true;
        }
        (0..2 * r).all(|s| kind[s] != kind[(s + 1) % (2 * r)])
    }

    /// Mirror image: reverse the cyclic order of slots.
    pub fn mirrored(&self) -> StreamlineConfig {
        let m = 2 * self.r() - 1;
        let ends = self
            .ends
            .iter()
            .map(|e| StreamlineEnds {
                backward_slot: m - e.backward_slot,
                forward_slot: m - e.forward_slot,
            })
            .collect();
        StreamlineConfig {
            ends,
            geometry: None,
        }
    }

    /// Rotate all slot labels by `k`.
    pub fn rotated(&self, k: usize) -> StreamlineConfig {
        let n = 2 * self.r();
        let ends = self
            .ends
            .iter()
            .map(|e| StreamlineEnds {
                backward_slot: (e.backward_slot + k) % n,
                forward_slot: (e.forward_slot + k) % n,
            })
            .collect();
        StreamlineConfig {
            ends,
            geometry: None,
        }
    }

    /// Plain text serialization: one line per streamline.
    pub fn to_text(&self) -> String {
        let mut out = format!("streamlines {}\n", self.r());
        for (i, e) in self.ends.iter().enumerate() {
            out.push_str(&format!(
                "{i} backward {} forward {}\n",
                e.backward_slot, e.forward_slot
            ));
        }
        out
    }

    pub fn from_text(s: &str) -> Result<Self, ConfigError> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let head = lines
            .next()
            .ok_or_else(|| ConfigError::Parse("empty input".into()))?;
        let r: usize = head
            .strip_prefix("streamlines ")
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| ConfigError::Parse("bad header".into()))?;
        let mut ends = vec![
            StreamlineEnds {
                backward_slot: 0,
                forward_slot: 0
            };
            r
        ];
        let mut got = 0usize;
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 5 || toks[1] != "backward" || toks[3] != "forward" {
                return Err(ConfigError::Parse(format!("bad line `{line}`")));
            }
            let i: usize = toks[0]
                .parse()
                .map_err(|_| ConfigError::Parse("bad index".into()))?;
            let b: usize = toks[2]
                .parse()
                .map_err(|_| ConfigError::Parse("bad slot".into()))?;
            let f: usize = toks[4]
                .parse()
                .map_err(|_| ConfigError::Parse("bad slot".into()))?;
            if i >= r {
                return Err(ConfigError::Parse(format!("index {i} out of range")));
            }
            ends[i] = StreamlineEnds {
                backward_slot: b,
                forward_slot: f,
            };
            got += 1;
        }
        if got != r {
            return Err(ConfigError::Parse("missing streamlines".into()));
        }
        StreamlineConfig::new(ends)
    }
}

/// Build a configuration from traced polylines with their end angles.
/// Slots are assigned by sorting the 2r end angles counterclockwise.
/// Degenerate inputs (equal angles, crossing polylines) are rejected.
pub fn config_from_polylines(lines: &[TracedLine]) -> Result<StreamlineConfig, ConfigError> {
    let r = lines.len();
    if r == 0 {
        return Err(ConfigError::UnsupportedConfiguration(
            "no streamlines".into(),
        ));
    }
    // Pairwise disjointness within the window.
    for i in 0..r {
        for j in i + 1..r {
            if polylines_cross(&lines[i].points, &lines[j].points) {
                return Err(ConfigError::CrossingPolylines(i, j));
            }
        }
    }
    // (angle, line, is_forward) sorted counterclockwise.
    let mut entries: Vec<(f64, usize, bool)> = Vec::with_capacity(2 * r);
    for (i, l) in lines.iter().enumerate() {
        entries.push((normalize_angle(l.backward_angle), i, false));
        entries.push((normalize_angle(l.forward_angle), i, true));
    }
    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in entries.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(ConfigError::CoincidentEndDirections(w[0].1, w[1].1));
        }
    }
    let mut ends = vec![
        StreamlineEnds {
            backward_slot: 0,
            forward_slot: 0
        };
        r
    ];
    for (slot, &(_, i, fwd)) in entries.iter().enumerate() {
        if fwd {
            ends[i].forward_slot = slot;
        } else {
            ends[i].backward_slot = slot;
        }
    }
    let mut cfg = StreamlineConfig::new(ends)?;
    cfg.geometry = Some(lines.to_vec());
    Ok(cfg)
}

fn normalize_angle(a: f64) -> f64 {
    let mut x = a % TAU;
    if x <= -std::f64::consts::PI {
        x += TAU;
    } else if x > std::f64::consts::PI {
        x -= TAU;
    }
    x
}

fn polylines_cross(a: &[Point], b: &[Point]) -> bool {
    for sa in a.windows(2) {
        let (lo_x, hi_x) = (sa[0].x.min(sa[1].x), sa[0].x.max(sa[1].x));
        let (lo_y, hi_y) = (sa[0].y.min(sa[1].y), sa[0].y.max(sa[1].y));
        for sb in b.windows(2) {
            if sb[0].x.max(sb[1].x) < lo_x
                || sb[0].x.min(sb[1].x) > hi_x
                || sb[0].y.max(sb[1].y) < lo_y
                || sb[0].y.min(sb[1].y) > hi_y
            {
                continue;
            }
            if segments_intersect(sa[0], sa[1], sb[0], sb[1]) {
                return true;
            }
        }
    }
    false
}

/// Is slot `x` strictly inside the counterclockwise arc from `a` to `b`?
fn in_ccw_arc(x: usize, a: usize, b: usize, n: usize) -> bool {
    let rel_x = (x + n - a) % n;
    let rel_b = (b + n - a) % n;
    rel_x > 0 && rel_x < rel_b
}

impl StreamlineConfig {
    /// Does streamline `i` separate streamlines `j` and `k`? True iff the
    /// two slots of `i` cut the circle into arcs with both slots of `j` in
    /// one and both slots of `k` in the other. Non-distinct ids are never
    /// separated.
    pub fn separates(&self, i: usize, j: usize, k: usize) -> bool {
        if i == j || i == k || j == k {
            return false;
        }
        let n = 2 * self.r();
        let (a, b) = (self.ends[i].backward_slot, self.ends[i].forward_slot);
        let side = |s: usize| in_ccw_arc(s, a, b, n);
        let j_sides = (side(self.ends[j].backward_slot), side(self.ends[j].forward_slot));
        let k_sides = (side(self.ends[k].backward_slot), side(self.ends[k].forward_slot));
        j_sides.0 == j_sides.1 && k_sides.0 == k_sides.1 && j_sides.0 != k_sides.0
    }

    /// Is streamline `j` on the left-hand side of oriented streamline `i`?
    /// Left is the counterclockwise arc from i's forward slot to its
    /// backward slot.
    pub fn left_of(&self, i: usize, j: usize) -> bool {
        let n = 2 * self.r();
        let (f, b) = (self.ends[i].forward_slot, self.ends[i].backward_slot);
        in_ccw_arc(self.ends[j].backward_slot, f, b, n)
            && in_ccw_arc(self.ends[j].forward_slot, f, b, n)
    }

    /// Signed adjacency offset of a streamline whose two ends are adjacent
    /// on the circle: +1 if forward = backward + 1, -1 if backward =
    /// forward + 1, None otherwise.
    fn adjacency_offset(&self, i: usize) -> Option<i8> {
        let n = 2 * self.r();
        let e = self.ends[i];
        if (e.backward_slot + 1) % n == e.forward_slot {
            Some(1)
        } else if (e.forward_slot + 1) % n == e.backward_slot {
            Some(-1)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleVerdict {
    Separating { separator: usize },
    NonSeparating { sign: i8 },
}

/// Classify a three-streamline configuration: either one line separates
/// the other two, or none does and the configuration carries a chirality.
pub fn triple_verdict(config: &StreamlineConfig) -> Result<TripleVerdict, ConfigError> {
    if config.r() != 3 {
        return Err(ConfigError::UnsupportedConfiguration(format!(
            "triple verdict needs r=3, got {}",
            config.r()
        )));
    }
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        if config.separates(i, j, k) {
            return Ok(TripleVerdict::Separating { separator: i });
        }
    }
    // Non-separating flow configurations have each streamline's two ends
    // adjacent at infinity; the chirality is the majority adjacency offset
    // (reversing one streamline's orientation does not change the
    // underlying geometry, hence not the sign).
    let offsets: Vec<i8> = (0..3)
        .map(|i| {
            config.adjacency_offset(i).ok_or_else(|| {
                ConfigError::UnsupportedConfiguration(
                    "non-separating configuration without adjacent ends".into(),
                )
            })
        })
        .collect::<Result<_, _>>()?;
    let sum: i8 = offsets.iter().sum();
    Ok(TripleVerdict::NonSeparating {
        sign: if sum > 0 { 1 } else { -1 },
    })
}

/// The exact triple-sum each verdict predicts: 0 for separating
/// ("perfect additivity"), sign/2 for non-separating.
pub fn predicted_triple_sum(v: TripleVerdict) -> Rational {
    match v {
        TripleVerdict::Separating { .. } => Rational::ZERO,
        TripleVerdict::NonSeparating { sign } => Rational::new(sign as i64, 2),
    }
}

/// Per-pair corrections of the symmetric-tripod decomposition
///   I12 = I(a1) + s/6, I23 = I(a2) + s/6, I31 = -I(a1*a2) + s/6,
/// whose base terms telescope to zero, leaving the sum s/2.
pub fn tripod_corrections(sign: i8) -> [Rational; 3] {
    let c = Rational::new(sign as i64, 6);
    [c, c, c]
}

/// Canonical class labels for two- and three-orbit flow configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CanonicalClassLabel {
    Translation,
    TranslationInverse,
    Reeb,
    ReebInverse,
    Parallel,
    ParallelOuterReversed,
    ParallelMiddleReversed,
    NonSeparatingCoherent,
    NonSeparatingOneReversed,
}

impl CanonicalClassLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CanonicalClassLabel::Translation => "T",
            CanonicalClassLabel::TranslationInverse => "T^-1",
            CanonicalClassLabel::Reeb => "R",
            CanonicalClassLabel::ReebInverse => "R^-1",
            CanonicalClassLabel::Parallel => "parallel",
            CanonicalClassLabel::ParallelOuterReversed => "parallel-outer-reversed",
            CanonicalClassLabel::ParallelMiddleReversed => "parallel-middle-reversed",
            CanonicalClassLabel::NonSeparatingCoherent => "non-separating-coherent",
            CanonicalClassLabel::NonSeparatingOneReversed => "non-separating-one-reversed",
        }
    }
}

/// Classify a two-streamline flow configuration.
///
/// Same sense (one line left of the other but not mutually) gives the
/// translation classes; opposite senses give the Reeb classes, split by
/// the mutual-side invariant: mutual left = R, mutual right = R^-1 (an
/// orientation-preserving conjugacy cannot exchange them). T is the label
/// when line 1 has line 0 on its... when streamline 1 lies left of
/// streamline 0; T and T^-1 are conjugate and collapse in class reports.
pub fn classify_two_orbit(config: &StreamlineConfig) -> Result<CanonicalClassLabel, ConfigError> {
    if config.r() != 2 {
        return Err(ConfigError::UnsupportedConfiguration(format!(
            "two-orbit classification needs r=2, got {}",
            config.r()
        )));
    }
    let l01 = config.left_of(0, 1);
    let l10 = config.left_of(1, 0);
    Ok(match (l01, l10) {
        (true, true) => CanonicalClassLabel::Reeb,
        (false, false) => CanonicalClassLabel::ReebInverse,
        (true, false) => CanonicalClassLabel::Translation,
        (false, true) => CanonicalClassLabel::TranslationInverse,
    })
}

/// Classify a three-streamline flow configuration into one of the five
/// labels: three separating shapes told apart by where the reversed line
/// sits, and two non-separating shapes told apart by whether all three
/// orientations circulate coherently.
pub fn classify_three_orbit(
    config: &StreamlineConfig,
) -> Result<CanonicalClassLabel, ConfigError> {
    match triple_verdict(config)? {
        TripleVerdict::Separating { separator } => {
            let others: Vec<usize> = (0..3).filter(|&i| i != separator).collect();
            let same = |i: usize, j: usize| {
                // Same sense iff not mutually-left and not mutually-right.
                config.left_of(i, j) != config.left_of(j, i)
            };
            let mid_matches_0 = same(separator, others[0]);
            let mid_matches_1 = same(separator, others[1]);
            let outers_match = same(others[0], others[1]);
            Ok(if mid_matches_0 && mid_matches_1 && outers_match {
                CanonicalClassLabel::Parallel
            } else if outers_match {
                CanonicalClassLabel::ParallelMiddleReversed
            } else {
                CanonicalClassLabel::ParallelOuterReversed
            })
        }
        TripleVerdict::NonSeparating { .. } => {
            let offsets: Vec<i8> = (0..3)
                .filter_map(|i| config.adjacency_offset(i))
                .collect();
            if offsets.len() != 3 {
                return Err(ConfigError::UnsupportedConfiguration(
                    "non-separating configuration without adjacent ends".into(),
                ));
            }
            Ok(if offsets.iter().all(|&o| o == offsets[0]) {
                CanonicalClassLabel::NonSeparatingCoherent
            } else {
                CanonicalClassLabel::NonSeparatingOneReversed
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Twist-word algebra on the two-line mapping class group.

/// The word T1^t1 T2^t2 in the free abelian twist subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TwistWord {
    pub t1: i64,
    pub t2: i64,
}

impl TwistWord {
    pub fn new(t1: i64, t2: i64) -> Self {
        TwistWord { t1, t2 }
    }

    pub fn compose(&self, other: &TwistWord) -> TwistWord {
        TwistWord {
            t1: self.t1 + other.t1,
            t2: self.t2 + other.t2,
        }
    }

    pub fn inverse(&self) -> TwistWord {
        TwistWord {
            t1: -self.t1,
            t2: -self.t2,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.t1 == 0 && self.t2 == 0
    }

    /// Horizontal translation amounts the word induces on the two lines:
    /// t1 on y=1 and t2 on y=2.
    pub fn line_action(&self) -> (i64, i64) {
        (self.t1, self.t2)
    }

    /// Exact affine action on a rational point:
    /// (x, y) -> (x + t1 (2 - y) + t2 (y - 1), y).
    pub fn apply_exact(&self, x: Rational, y: Rational) -> (Rational, Rational) {
        let two = Rational::integer(2);
        let one = Rational::integer(1);
        let shift = Rational::integer(self.t1) * (two - y) + Rational::integer(self.t2) * (y - one);
        (x + shift, y)
    }
}

/// The four reference two-orbit classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TwoOrbitClass {
    T,
    TInverse,
    R,
    RInverse,
}

/// Conjugacy classes among {T, T^-1, R, R^-1} in the two-orbit mapping
/// class group: T and T^-1 are conjugate (witnessed by Psi0); R and R^-1
/// are distinguished by the mutual-side invariant, and neither is
/// conjugate to a translation class (translation classes admit infinitely
/// many homotopy classes of translation arcs, Reeb classes only one).
pub fn conjugacy_class_report() -> Vec<Vec<TwoOrbitClass>> {
    vec![
        vec![TwoOrbitClass::T, TwoOrbitClass::TInverse],
        vec![TwoOrbitClass::R],
        vec![TwoOrbitClass::RInverse],
    ]
}
