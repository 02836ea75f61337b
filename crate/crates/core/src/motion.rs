//! Piecewise-linear swarm motions, network evolution, exact edge-break
//! detection, landing motions onto the torus and the final certificate.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{ObstacleTorus, Point3, TorusRegion, BOUNDARY_TOLERANCE, POLE_TOLERANCE};
pub use crate::network::network_at;
use crate::network::{Network, RangeRule};
use crate::spatial::CellGrid;
use crate::swarm::SwarmPosition;
use crate::topology::{
    check_radial_homotopy, complex_at, segment_circle_distance, neighborhood_containment, orient_faces, winding_number, winding_timeline,
    ContainmentReport, HomotopyOptions, HomotopyReport, OrientedComplex, TopologyError,
};
use crate::triangulate::Build;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotionError {
    #[error("breakpoints must be strictly increasing and match the frames")]
    BadBreakpoints,
    #[error("frame {frame} has {got} robots, expected {expected}")]
    FrameSize { frame: usize, got: usize, expected: usize },
    #[error("robot {robot} starts inside the torus")]
    StartsInsideTorus { robot: usize },
    #[error("could not route robot {robot} around the torus with {pieces} pieces")]
    RepairFailed { robot: usize, pieces: usize },
    #[error("motions do not join: end of the first differs from start of the second")]
    Discontinuous,
}

/// Robot positions at each breakpoint, interpolated linearly in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMotion", into = "RawMotion")]
pub struct Motion {
    breakpoints: Vec<f64>,
    frames: Vec<Vec<Point3>>,
    /// Declared as ending on the torus boundary.
    landing: bool,
}

#[derive(Serialize, Deserialize)]
struct RawMotion {
    breakpoints: Vec<f64>,
    frames: Vec<Vec<[f64; 3]>>,
    landing: bool,
}

impl TryFrom<RawMotion> for Motion {
    type Error = MotionError;
    fn try_from(r: RawMotion) -> Result<Self, Self::Error> {
        let frames = r.frames.into_iter().map(|f| f.into_iter().map(Point3::from).collect()).collect();
        Motion::new(r.breakpoints, frames, r.landing)
    }
}

impl From<Motion> for RawMotion {
    fn from(m: Motion) -> Self {
        RawMotion {
            breakpoints: m.breakpoints,
            frames: m.frames.into_iter().map(|f| f.into_iter().map(|p| [p.x, p.y, p.z]).collect()).collect(),
            landing: m.landing,
        }
    }
}

impl Motion {
    pub fn new(breakpoints: Vec<f64>, frames: Vec<Vec<Point3>>, landing: bool) -> Result<Self, MotionError> {
        if breakpoints.is_empty()
            || breakpoints.len() != frames.len()
            || breakpoints.windows(2).any(|w| !(w[0] < w[1]))
            || breakpoints.iter().any(|t| !t.is_finite())
        {
            return Err(MotionError::BadBreakpoints);
        }
        let n = frames[0].len();
        if let Some((frame, f)) = frames.iter().enumerate().find(|(_, f)| f.len() != n) {
            return Err(MotionError::FrameSize { frame, got: f.len(), expected: n });
        }
        Ok(Motion { breakpoints, frames, landing })
    }

    /// Robots that never move.
    pub fn stationary(points: Vec<Point3>) -> Self {
        Motion { breakpoints: vec![0.0, 1.0], frames: vec![points.clone(), points], landing: false }
    }

    pub fn straight(from: &[Point3], to: &[Point3], t0: f64, t1: f64) -> Result<Self, MotionError> {
        Motion::new(vec![t0, t1], vec![from.to_vec(), to.to_vec()], false)
    }

    pub fn n(&self) -> usize {
        self.frames[0].len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn frames(&self) -> &[Vec<Point3>] {
        &self.frames
    }

    pub fn segment_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn time_range(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn is_landing(&self) -> bool {
        self.landing
    }

    pub fn with_landing(mut self, landing: bool) -> Self {
        self.landing = landing;
        self
    }

    pub fn initial(&self) -> &[Point3] {
        &self.frames[0]
    }

    pub fn last(&self) -> &[Point3] {
        self.frames.last().unwrap()
    }

    /// Segment containing `t` and the local parameter in `[0, 1]`.
    fn locate(&self, t: f64) -> (usize, f64) {
        let m = self.segment_count();
        if m == 0 {
            return (0, 0.0);
        }
        let (t0, t1) = self.time_range();
        let t = t.clamp(t0, t1);
        let k = (self.breakpoints.partition_point(|&b| b <= t).max(1) - 1).min(m - 1);
        let (a, b) = (self.breakpoints[k], self.breakpoints[k + 1]);
        (k, ((t - a) / (b - a)).clamp(0.0, 1.0))
    }

    pub fn position_at(&self, robot: usize, t: f64) -> Point3 {
        if self.segment_count() == 0 {
            return self.frames[0][robot];
        }
        let (k, s) = self.locate(t);
        let (p, q) = (self.frames[k][robot], self.frames[k + 1][robot]);
        p + (q - p) * s
    }

    pub fn positions_at(&self, t: f64) -> Vec<Point3> {
        if self.segment_count() == 0 {
            return self.frames[0].clone();
        }
        let (k, s) = self.locate(t);
        self.frames[k].iter().zip(&self.frames[k + 1]).map(|(p, q)| p + (q - p) * s).collect()
    }

    /// `self` followed by `next`, with `next` shifted to start where `self`
    /// ends. Frames must agree at the junction.
    pub fn then(&self, next: &Motion) -> Result<Motion, MotionError> {
        if self.last() != next.initial() {
            return Err(MotionError::Discontinuous);
        }
        let shift = self.time_range().1 - next.time_range().0;
        let mut breakpoints = self.breakpoints.clone();
        let mut frames = self.frames.clone();
        for (t, f) in next.breakpoints.iter().zip(&next.frames).skip(1) {
            breakpoints.push(t + shift);
            frames.push(f.clone());
        }
        Motion::new(breakpoints, frames, next.landing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakEvent {
    pub t: f64,
    pub edge: (usize, usize),
    /// Position of the edge in the sub-network's edge order.
    pub edge_id: usize,
    pub distance: f64,
    pub segment: usize,
}

/// Earliest `s ∈ [0, 1]` at which `|a + s·b|` leaves the range. The distance
/// is convex in `s`, so an in-range end means the whole segment is in range.
fn exit_parameter(a: &Point3, b: &Point3, delta: f64, rule: RangeRule) -> Option<f64> {
    if !rule.in_range(a.norm(), delta) {
        return Some(0.0);
    }
    if rule.in_range((a + b).norm(), delta) {
        return None;
    }
    let (_, s) = range_roots(a, b, delta)?;
    Some(s.clamp(0.0, 1.0))
}

/// Earliest time a sub-network edge leaves the range.
pub fn first_break(motion: &Motion, sub: &Network, delta: f64, rule: RangeRule) -> Option<BreakEvent> {
    let edges: Vec<(usize, usize)> = sub.edges().collect();
    for k in 0..motion.segment_count() {
        let (f0, f1) = (&motion.frames[k], &motion.frames[k + 1]);
        let (t0, t1) = (motion.breakpoints[k], motion.breakpoints[k + 1]);
        let best = edges
            .par_iter()
            .enumerate()
            .filter_map(|(id, &(i, j))| {
                let a = f0[i] - f0[j];
                let b = (f1[i] - f1[j]) - a;
                exit_parameter(&a, &b, delta, rule).map(|s| (t0 + s * (t1 - t0), id, (a + b * s).norm()))
            })
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        if let Some((t, id, distance)) = best {
            return Some(BreakEvent { t, edge: edges[id], edge_id: id, distance, segment: k });
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    Appeared,
    Disappeared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEvent {
    pub t: f64,
    pub edge: (usize, usize),
    pub kind: ChangeKind,
    pub segment: usize,
}

/// Roots `s1 ≤ s2` of `|a + s b|² = δ²`, if real.
fn range_roots(a: &Point3, b: &Point3, delta: f64) -> Option<(f64, f64)> {
    let qa = b.norm_squared();
    if qa == 0.0 {
        return None;
    }
    let qb = 2.0 * a.dot(b);
    let c = a.norm_squared() - delta * delta;
    let disc = qb * qb - 4.0 * qa * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let q = if qb >= 0.0 { -0.5 * (qb + sq) } else { -0.5 * (qb - sq) };
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / qa, c / q) };
    Some((r1.min(r2), r1.max(r2)))
}

/// Events of one pair within one segment, given the in-range state at both
/// ends. Between the ends the in-range set is an interval (convexity).
fn pair_events(a: &Point3, b: &Point3, delta: f64, rule: RangeRule, start: bool, end: bool) -> Vec<(f64, ChangeKind)> {
    let roots = range_roots(a, b, delta);
    match (start, end) {
        (true, false) => vec![(roots.map_or(1.0, |r| r.1.clamp(0.0, 1.0)), ChangeKind::Disappeared)],
        (false, true) => vec![(roots.map_or(0.0, |r| r.0.clamp(0.0, 1.0)), ChangeKind::Appeared)],
        (true, true) => Vec::new(),
        (false, false) => match roots {
            Some((s1, s2)) if s1 > 0.0 && s2 < 1.0 && (s1 < s2 || rule == RangeRule::Closed) => {
                vec![(s1, ChangeKind::Appeared), (s2, ChangeKind::Disappeared)]
            }
            _ => Vec::new(),
        },
    }
}

/// Pairs that may be in range at some time in segment `k`.
fn candidate_pairs(motion: &Motion, k: usize, delta: f64) -> Vec<(usize, usize)> {
    let (f0, f1) = (&motion.frames[k], &motion.frames[k + 1]);
    let reach = f0.iter().zip(f1).map(|(p, q)| (q - p).norm()).fold(0.0, f64::max);
    let cell = delta + 2.0 * reach;
    let grid = CellGrid::new(f0, cell);
    grid.pairs(f0, |_, _, d| d <= cell)
}

fn segment_events(motion: &Motion, k: usize, delta: f64, rule: RangeRule) -> Vec<NetworkEvent> {
    let (f0, f1) = (&motion.frames[k], &motion.frames[k + 1]);
    let (t0, t1) = (motion.breakpoints[k], motion.breakpoints[k + 1]);
    let mut ev: Vec<NetworkEvent> = candidate_pairs(motion, k, delta)
        .par_iter()
        .flat_map_iter(|&(i, j)| {
            let a = f0[i] - f0[j];
            let e = f1[i] - f1[j];
            let start = rule.in_range(a.norm(), delta);
            let end = rule.in_range(e.norm(), delta);
            pair_events(&a, &(e - a), delta, rule, start, end)
                .into_iter()
                .map(move |(s, kind)| NetworkEvent { t: t0 + s * (t1 - t0), edge: (i, j), kind, segment: k })
        })
        .collect();
    ev.sort_by(|x, y| x.t.total_cmp(&y.t).then(x.edge.cmp(&y.edge)).then((x.kind as u8).cmp(&(y.kind as u8))));
    ev
}

/// Earliest time the ambient network differs from its initial state.
pub fn detect_network_change(motion: &Motion, delta: f64, rule: RangeRule) -> Option<NetworkEvent> {
    (0..motion.segment_count()).find_map(|k| segment_events(motion, k, delta, rule).into_iter().next())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTimeline {
    pub initial: Network,
    pub events: Vec<NetworkEvent>,
}

impl NetworkTimeline {
    pub fn build(motion: &Motion, delta: f64, rule: RangeRule) -> Self {
        let initial = network_at(motion.initial(), delta, rule);
        let events = (0..motion.segment_count()).flat_map(|k| segment_events(motion, k, delta, rule)).collect();
        NetworkTimeline { initial, events }
    }

    /// Replays every event of the segments before breakpoint `b`.
    pub fn network_at_breakpoint(&self, b: usize) -> Network {
        let mut net = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.segment < b) {
            apply(&mut net, e);
        }
        net
    }

    /// Replays every event with time at most `t`.
    pub fn network_at_time(&self, t: f64) -> Network {
        let mut net = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.t <= t) {
            apply(&mut net, e);
        }
        net
    }
}

fn apply(net: &mut Network, e: &NetworkEvent) {
    match e.kind {
        ChangeKind::Appeared => {
            net.insert(e.edge.0, e.edge.1).expect("event edges are valid pairs");
        }
        ChangeKind::Disappeared => {
            net.remove(e.edge.0, e.edge.1);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandingStrategy {
    /// Closest boundary point.
    Nearest,
    /// Robots spread over a (θ_major, θ_minor) grid by index.
    Spread,
    /// `(θ_major, θ_minor) = offset + (x, y)` of the start point: a
    /// Lipschitz map of the sphere onto a patch, so neighbours land close.
    Patch,
}

impl std::str::FromStr for LandingStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(LandingStrategy::Nearest),
            "spread" => Ok(LandingStrategy::Spread),
            "patch" => Ok(LandingStrategy::Patch),
            _ => Err(format!("unknown strategy {s:?} (expected nearest, spread or patch)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandingOptions {
    /// Initial number of pieces of the sweep around the tube.
    pub pieces: usize,
    pub max_pieces: usize,
    /// The sweep runs at distance `ε(1 + η)` from the core (η is capped so the
    /// offset tube stays clear of the z axis).
    pub eta: f64,
}

impl Default for LandingOptions {
    fn default() -> Self {
        LandingOptions { pieces: 4, max_pieces: 1024, eta: 0.02 }
    }
}

pub const DEFAULT_MOTION_SAMPLES: usize = 2048;

/// Target (azimuth, tube angle) on ∂𝔓 for each robot.
fn landing_targets(
    initial: &[Point3],
    torus: &ObstacleTorus,
    strategy: LandingStrategy,
    rng: &mut impl Rng,
) -> Vec<(f64, f64)> {
    let n = initial.len();
    match strategy {
        LandingStrategy::Nearest => initial
            .iter()
            .map(|p| {
                let fallback = rng.gen_range(0.0..TAU);
                torus.tube_coordinates(p, fallback)
            })
            .collect(),
        LandingStrategy::Spread => {
            let per_ring = ((n as f64 * torus.major_radius() / torus.tube_radius()).sqrt().ceil() as usize).max(1);
            let rings = n.div_ceil(per_ring).max(1);
            let phi1 = rng.gen_range(0.0..TAU);
            let phi2 = rng.gen_range(0.0..TAU);
            (0..n)
                .map(|i| {
                    let major = TAU * (i % per_ring) as f64 / per_ring as f64 + phi1;
                    let minor = TAU * (i / per_ring) as f64 / rings as f64 + phi2;
                    (major, minor)
                })
                .collect()
        }
        LandingStrategy::Patch => {
            let phi1 = rng.gen_range(0.0..TAU);
            let phi2 = rng.gen_range(0.0..TAU);
            initial.iter().map(|p| (phi1 + p.x, phi2 + p.y)).collect()
        }
    }
}

impl std::fmt::Display for LandingStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LandingStrategy::Nearest => "nearest",
            LandingStrategy::Spread => "spread",
            LandingStrategy::Patch => "patch",
        })
    }
}

fn signed_turn(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// The segment stays out of the interior, by its exact distance to the core
/// circle. Interior means closer than `ε − BOUNDARY_TOLERANCE`.
fn segment_clear(p: &Point3, q: &Point3, torus: &ObstacleTorus) -> bool {
    segment_circle_distance(p, q, torus.major_radius()) >= torus.tube_radius() - BOUNDARY_TOLERANCE + 1e-12
}

/// Nodes of one robot's route: a radial step in its own half-plane onto the
/// offset tube, `pieces` chords sweeping (azimuth, tube angle) to the target,
/// then a radial step down to ∂𝔓.
fn route(
    start: &Point3,
    target: (f64, f64),
    pieces: usize,
    torus: &ObstacleTorus,
    reach: f64,
    fallback_azimuth: f64,
) -> Option<Vec<Point3>> {
    let (az0, ang0) = torus.tube_coordinates(start, fallback_azimuth);
    let (daz, dang) = (signed_turn(az0, target.0), signed_turn(ang0, target.1));
    let mut nodes = Vec::with_capacity(pieces + 3);
    nodes.push(*start);
    for k in 0..=pieces {
        let u = k as f64 / pieces as f64;
        nodes.push(torus.tube_point(az0 + u * daz, ang0 + u * dang, reach));
    }
    nodes.push(torus.boundary_point(target.0, target.1));
    nodes.windows(2).all(|w| segment_clear(&w[0], &w[1], torus)).then_some(nodes)
}

/// Motion on `[0, 1]` taking every robot to ∂𝔓 without entering the interior.
/// Robots already on ∂𝔓 stay put.
pub fn generate_landing_motion(
    initial: &[Point3],
    torus: &ObstacleTorus,
    strategy: LandingStrategy,
    seed: u64,
    opts: &LandingOptions,
) -> Result<Motion, MotionError> {
    if let Some(robot) = initial.iter().position(|p| torus.is_interior(p)) {
        return Err(MotionError::StartsInsideTorus { robot });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = landing_targets(initial, torus, strategy, &mut rng);
    let fallback: Vec<f64> = (0..initial.len()).map(|_| rng.gen_range(0.0..TAU)).collect();
    let eps = torus.tube_radius();
    let eta = opts.eta.min(0.5 * (torus.major_radius() / eps - 1.0));
    let reach = eps * (1.0 + eta);
    if initial.iter().all(|p| torus.classify(p) == TorusRegion::Boundary) {
        return Motion::new(vec![0.0, 1.0], vec![initial.to_vec(), initial.to_vec()], true);
    }
    let mut pieces = opts.pieces.max(1);
    loop {
        let routes: Result<Vec<Vec<Point3>>, usize> = (0..initial.len())
            .into_par_iter()
            .map(|i| {
                let p = &initial[i];
                if torus.classify(p) == TorusRegion::Boundary {
                    return Ok(vec![*p; pieces + 3]);
                }
                route(p, targets[i], pieces, torus, reach, fallback[i]).ok_or(i)
            })
            .collect();
        match routes {
            Ok(routes) => {
                let steps = pieces + 2;
                let breakpoints = (0..=steps).map(|k| k as f64 / steps as f64).collect();
                let frames = (0..=steps).map(|k| routes.iter().map(|r| r[k]).collect()).collect();
                return Motion::new(breakpoints, frames, true);
            }
            Err(robot) if pieces * 2 > opts.max_pieces => return Err(MotionError::RepairFailed { robot, pieces }),
            Err(_) => pieces *= 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionCheck {
    pub ok: bool,
    /// `(robot, t, point)` of the first interior sample.
    pub interior_sample: Option<(usize, f64, Point3)>,
    /// A robot not on ∂𝔓 at the end of a landing motion.
    pub unlanded_robot: Option<usize>,
}

/// No sampled path point is interior; landing motions end on ∂𝔓.
pub fn verify_motion(motion: &Motion, torus: &ObstacleTorus, samples_per_segment: usize) -> MotionCheck {
    let samples = samples_per_segment.max(1);
    let interior_sample = (0..motion.n())
        .into_par_iter()
        .filter_map(|i| {
            for k in 0..motion.segment_count() {
                let (p, q) = (motion.frames[k][i], motion.frames[k + 1][i]);
                if segment_clear(&p, &q, torus) {
                    // no sample of this segment can be interior
                    continue;
                }
                let (t0, t1) = (motion.breakpoints[k], motion.breakpoints[k + 1]);
                for s in 0..=samples {
                    let u = s as f64 / samples as f64;
                    let x = p + (q - p) * u;
                    if torus.is_interior(&x) {
                        return Some((i, t0 + u * (t1 - t0), x));
                    }
                }
            }
            None
        })
        .min_by_key(|s| s.0);
    let unlanded_robot = if motion.is_landing() {
        motion.last().iter().position(|p| torus.classify(p) != TorusRegion::Boundary)
    } else {
        None
    };
    MotionCheck { ok: interior_sample.is_none() && unlanded_robot.is_none(), interior_sample, unlanded_robot }
}

/// Robots whose final position is on ∂𝔓.
pub fn lands_on_torus(motion: &Motion, torus: &ObstacleTorus) -> bool {
    motion.last().iter().all(|p| torus.classify(p) == TorusRegion::Boundary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// A sub-network edge breaks during the landing motion.
    Certified,
    /// The motion does not end on ∂𝔓, so the theorem says nothing.
    NotALandingMotion,
    /// Landing motion without any break; contradicts the theorem.
    NoBreakFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSample {
    pub t: f64,
    pub winding: Option<i64>,
    pub residual: Option<f64>,
    pub max_sub_edge_distance: f64,
    pub max_face_diameter: f64,
    pub min_face_core_distance: f64,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub delta: f64,
    pub range_rule: RangeRule,
    pub p0: Point3,
    /// Composed time at which the landing leg starts.
    pub landing_offset: f64,
    pub t_bar: f64,
    pub winding_initial: i64,
    pub winding_final: Option<i64>,
    pub winding_timeline: Vec<CertificateSample>,
    pub first_break: Option<BreakEvent>,
    pub ambient_change: Option<NetworkEvent>,
    pub neighborhood: ContainmentReport,
    pub radial_homotopy: HomotopyReport,
    /// Consecutive samples with every sub-network edge within δ whose
    /// windings differ. Expected empty.
    pub invariance_violations: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub range_rule: RangeRule,
    /// Defaults to `(major_radius, 0, 0)`.
    pub p0: Option<Point3>,
    pub timeline_samples: usize,
    pub motion_samples: usize,
    pub homotopy: HomotopyOptions,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            range_rule: RangeRule::Open,
            p0: None,
            timeline_samples: 64,
            motion_samples: DEFAULT_MOTION_SAMPLES,
            homotopy: HomotopyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error("sub-network edge ({0}, {1}) has length {2} at t = 0, not below δ")]
    EdgeBrokenAtStart(usize, usize, f64),
    #[error("landing motion enters the torus or does not start at the actual positions")]
    InvalidMotion,
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error("orienting the initial complex: {0}")]
    Topology(#[from] TopologyError),
}

/// Runs the virtual → actual straight leg followed by `landing` and collects
/// the winding timeline, the first sub-network break and the containment
/// checks.
pub fn certify_theorem(
    actual: &SwarmPosition,
    delta: f64,
    torus: &ObstacleTorus,
    build: &Build,
    landing: &Motion,
    opts: &CertifyOptions,
) -> Result<Certificate, CertifyError> {
    let virt = build.perturbation.virtual_position.to_points();
    let act = actual.to_points();
    let sub = &build.sub_network;
    for (i, j) in sub.edges() {
        let d = (virt[i] - virt[j]).norm();
        if !opts.range_rule.in_range(d, delta) {
            return Err(CertifyError::EdgeBrokenAtStart(i, j, d));
        }
    }
    if landing.initial() != act.as_slice() || !verify_motion(landing, torus, opts.motion_samples).interior_sample.is_none() {
        return Err(CertifyError::InvalidMotion);
    }
    let leg = Motion::straight(&virt, &act, 0.0, 1.0)?;
    let composed = leg.then(landing)?;
    let landing_offset = leg.time_range().1;
    let t_bar = composed.time_range().1;
    let p0 = opts.p0.unwrap_or(Point3::new(torus.major_radius(), 0.0, 0.0));

    let k0 = OrientedComplex::new(virt.clone(), build.triangulation.robot_faces());
    let k0 = orient_faces(&k0)?;
    let faces = k0.faces.clone();

    let edges: Vec<(usize, usize)> = sub.edges().collect();
    let winding_timeline: Vec<CertificateSample> = winding_timeline(&composed, &faces, &p0, opts.timeline_samples, torus)
        .into_iter()
        .map(|s| {
            let pos = composed.positions_at(s.t);
            let max_sub_edge_distance = edges.iter().map(|&(i, j)| (pos[i] - pos[j]).norm()).fold(0.0, f64::max);
            CertificateSample {
                t: s.t,
                winding: s.winding,
                residual: s.residual,
                max_sub_edge_distance,
                max_face_diameter: s.max_face_diameter,
                min_face_core_distance: s.min_face_core_distance,
                flag: s.flag,
            }
        })
        .collect();
    let winding_initial = winding_number(&k0, &p0)?.winding;
    let winding_final = winding_timeline.last().and_then(|s| s.winding);
    let invariance_violations = winding_timeline
        .windows(2)
        .filter(|w| {
            w[0].max_sub_edge_distance <= delta
                && w[1].max_sub_edge_distance <= delta
                && w[0].winding.is_some()
                && w[1].winding.is_some()
                && w[0].winding != w[1].winding
        })
        .map(|w| (w[0].t, w[1].t))
        .collect();

    let first_break = first_break(&composed, sub, delta, opts.range_rule);
    let ambient_change = detect_network_change(&composed, delta, opts.range_rule);
    let neighborhood = neighborhood_containment(&complex_at(&composed, t_bar, &faces), torus, delta);
    let unit_k = OrientedComplex::new(virt.iter().map(|p| p / p.norm()).collect(), faces);
    let radial_homotopy = check_radial_homotopy(&unit_k, torus, &opts.homotopy);

    let verdict = if !(landing.is_landing() && lands_on_torus(landing, torus)) {
        Verdict::NotALandingMotion
    } else if first_break.is_some() {
        Verdict::Certified
    } else {
        Verdict::NoBreakFound
    };
    Ok(Certificate {
        delta,
        range_rule: opts.range_rule,
        p0,
        landing_offset,
        t_bar,
        winding_initial,
        winding_final,
        winding_timeline,
        first_break,
        ambient_change,
        neighborhood,
        radial_homotopy,
        invariance_violations,
        verdict,
    })
}

/// True when `p` lies on the z axis.
pub fn on_axis(p: &Point3) -> bool {
    p.x * p.x + p.y * p.y <= POLE_TOLERANCE
}
