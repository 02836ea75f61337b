//! Latitude-band triangulation of a general-position δ′/6-net.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{chord_distance, longitude, point_to_latitude_distance, LatitudeCircle, ObstacleTorus, Point3, UnitVector};
use crate::network::{network_at, ordered, Network, RangeRule};
use crate::spatial::CellGrid;
use crate::swarm::{
    covering_radius, delta_prime_from, perturbation_budget, perturb_to_general_with, straightline_admissible,
    CoveringMethod, GeneralPositionOptions, NetReport, PerturbationResult, SwarmError, SwarmPosition,
};
use crate::topology::solid_angle_at_origin;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TriangulateError {
    #[error("no valid k for δ′ = {delta_prime}")]
    NoValidK { delta_prime: f64 },
    #[error("latitude band {band} is not covered by its arcs (uncovered longitude {longitude})")]
    NotANetForBand { band: i32, longitude: f64 },
    #[error("no robot within δ′/6 of the south pole")]
    NoSouthAnchor,
    #[error("robot {robot} meets latitude circles {first} and {second}")]
    RobotInTwoBands { robot: usize, first: i32, second: i32 },
    #[error("north anchor robot {robot} is not at the north pole")]
    NorthAnchorOffPole { robot: usize },
    #[error("cap band {band} has {size} vertices, need at least 3")]
    BandTooSmall { band: i32, size: usize },
    #[error("annulus between bands {lower} and {upper} has a non-triangular cell near longitudes {lon_a} / {lon_b}")]
    NonTriangularCell { lower: i32, upper: i32, lon_a: f64, lon_b: f64 },
    #[error("need at least 4 robots, got {0}")]
    TooFewRobots(usize),
}

/// Latitude heights `h_j = sin(jΔφ)` for `j = −k..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Latitudes {
    pub delta_prime: f64,
    pub dphi: f64,
    pub k: usize,
    /// Indexed by `j + k`.
    pub heights: Vec<f64>,
}

impl Latitudes {
    pub fn height(&self, j: i32) -> f64 {
        self.heights[(j + self.k as i32) as usize]
    }

    pub fn circle(&self, j: i32) -> LatitudeCircle {
        LatitudeCircle::new(self.height(j)).expect("latitude heights are inside (-1, 1)")
    }

    /// Chord from the north pole to `L_k`.
    pub fn pole_chord(&self) -> f64 {
        pole_chord(self.k as f64 * self.dphi)
    }

    pub fn bands(&self) -> impl DoubleEndedIterator<Item = i32> {
        let k = self.k as i32;
        -k..=k
    }
}

/// Chord from the north pole to the latitude at angle `lat` above the equator.
fn pole_chord(lat: f64) -> f64 {
    2.0 * ((std::f64::consts::FRAC_PI_2 - lat) / 2.0).sin()
}

pub fn compute_latitudes(delta_prime: f64) -> Result<Latitudes, TriangulateError> {
    let err = TriangulateError::NoValidK { delta_prime };
    if !(delta_prime > 0.0 && delta_prime < 6.0) {
        return Err(err);
    }
    let dphi = 2.0 * (delta_prime / 6.0).asin();
    let third = delta_prime / 3.0;
    let mut k: Option<usize> = None;
    let mut j = 0usize;
    while (j as f64) * dphi < std::f64::consts::FRAC_PI_2 && pole_chord(j as f64 * dphi) >= third {
        k = Some(j);
        j += 1;
    }
    let k = k.ok_or(err.clone())?;
    if pole_chord(k as f64 * dphi) >= 2.0 * third {
        return Err(err);
    }
    let heights = (-(k as i64)..=k as i64).map(|j| (j as f64 * dphi).sin()).collect();
    Ok(Latitudes { delta_prime, dphi, k, heights })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMember {
    pub robot: usize,
    /// Longitude of the robot in the rotated frame.
    pub longitude: f64,
    /// `q_{j,l}`: the robot's longitude line meets `L_j` here (rotated frame).
    pub q: UnitVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDecomposition {
    pub latitudes: Latitudes,
    /// Indexed by `j + k`; members sorted by longitude.
    pub bands: Vec<Vec<BandMember>>,
    pub north_anchor: usize,
    pub south_anchor: usize,
}

impl BandDecomposition {
    pub fn band(&self, j: i32) -> &[BandMember] {
        &self.bands[(j + self.latitudes.k as i32) as usize]
    }

    pub fn k(&self) -> i32 {
        self.latitudes.k as i32
    }

    pub fn delta_prime(&self) -> f64 {
        self.latitudes.delta_prime
    }

    /// Vertex ids: the north anchor is 0, then bands `k, k−1, ..., −k` in
    /// longitude order, then the south anchor.
    pub fn layout(&self) -> VertexLayout {
        let mut band_start = vec![0; self.bands.len()];
        let mut next = 1;
        for j in self.latitudes.bands().rev() {
            band_start[(j + self.k()) as usize] = next;
            next += self.band(j).len();
        }
        VertexLayout { k: self.k(), band_start, south: next }
    }
}

#[derive(Debug, Clone)]
pub struct VertexLayout {
    k: i32,
    band_start: Vec<usize>,
    pub south: usize,
}

impl VertexLayout {
    pub const NORTH: usize = 0;

    pub fn vertex(&self, j: i32, l: usize) -> usize {
        self.band_start[(j + self.k) as usize] + l
    }

    pub fn vertex_count(&self) -> usize {
        self.south + 1
    }
}

/// Half-width of the open arc of `L` (radius `rho`, height `h`) within chord
/// `r` of a unit point at axial radius `rho_p`, height `z_p`. `None` when the
/// ball misses the circle; `π` when it contains it.
fn arc_half_width(rho: f64, h: f64, rho_p: f64, z_p: f64, r: f64) -> Option<f64> {
    let num = 1.0 - r * r / 2.0 - h * z_p;
    let den = rho * rho_p;
    if den <= 0.0 {
        return if num < 0.0 { Some(std::f64::consts::PI) } else { None };
    }
    let c = num / den;
    if c >= 1.0 {
        None
    } else if c <= -1.0 {
        Some(std::f64::consts::PI)
    } else {
        Some(c.acos())
    }
}

/// First angle in `[0, 2π)` not covered by the union of open arcs
/// `(c − w, c + w)`, or `None` when they cover the circle.
pub fn uncovered_angle(arcs: &[(f64, f64)]) -> Option<f64> {
    use std::f64::consts::{PI, TAU};
    if arcs.iter().any(|&(_, w)| w >= PI) {
        return None;
    }
    if arcs.is_empty() {
        return Some(0.0);
    }
    // two copies of every arc, started in [-2π, 2π); the circle is covered iff
    // some merged component is longer than 2π
    let mut iv: Vec<(f64, f64)> = Vec::with_capacity(2 * arcs.len());
    for &(c, w) in arcs {
        let s = (c - w).rem_euclid(TAU);
        iv.push((s, s + 2.0 * w));
        iv.push((s - TAU, s - TAU + 2.0 * w));
    }
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut cs, mut ce) = iv[0];
    let mut gap = None;
    for &(s, e) in &iv[1..] {
        if s < ce {
            ce = ce.max(e);
        } else {
            if ce - cs > TAU {
                return None;
            }
            if ce >= 0.0 && gap.is_none() {
                gap = Some(ce);
            }
            cs = s;
            ce = e;
        }
    }
    if ce - cs > TAU {
        return None;
    }
    Some(gap.unwrap_or(ce).rem_euclid(TAU))
}

/// `𝒞_j`, the `q_{j,l}` and both anchors. `rotated` must have its last robot
/// at the north pole.
pub fn select_bands(rotated: &SwarmPosition, lat: &Latitudes) -> Result<BandDecomposition, TriangulateError> {
    let n = rotated.len();
    if n < 4 {
        return Err(TriangulateError::TooFewRobots(n));
    }
    let north_anchor = n - 1;
    if chord_distance(&rotated.points()[north_anchor], &UnitVector::NORTH) > 1e-9 {
        return Err(TriangulateError::NorthAnchorOffPole { robot: north_anchor });
    }
    let r = lat.delta_prime / 6.0;
    let k = lat.k as i32;
    let mut bands: Vec<Vec<BandMember>> = vec![Vec::new(); 2 * lat.k + 1];
    for (i, p) in rotated.points()[..north_anchor].iter().enumerate() {
        let nearest = ((p.z().clamp(-1.0, 1.0).asin() / lat.dphi).round() as i32).clamp(-k, k);
        let mut hit: Option<i32> = None;
        for j in (nearest - 1).max(-k)..=(nearest + 1).min(k) {
            if point_to_latitude_distance(p, &lat.circle(j)) < r {
                if let Some(first) = hit {
                    return Err(TriangulateError::RobotInTwoBands { robot: i, first, second: j });
                }
                hit = Some(j);
            }
        }
        if let Some(j) = hit {
            // a robot within δ′/6 of a latitude circle is not a pole
            let lon = longitude(p).expect("band member is not a pole");
            let q = lat.circle(j).point_at(lon);
            bands[(j + k) as usize].push(BandMember { robot: i, longitude: lon, q });
        }
    }
    for (idx, band) in bands.iter_mut().enumerate() {
        band.sort_by(|a, b| a.longitude.total_cmp(&b.longitude));
        let j = idx as i32 - k;
        let l = lat.circle(j);
        let arcs: Vec<(f64, f64)> = band
            .iter()
            .filter_map(|m| {
                let p = &rotated.points()[m.robot];
                arc_half_width(l.radius(), l.height(), p.axial_radius(), p.z(), r).map(|w| (m.longitude, w))
            })
            .collect();
        if let Some(longitude) = uncovered_angle(&arcs) {
            return Err(TriangulateError::NotANetForBand { band: j, longitude });
        }
    }
    let south = UnitVector::SOUTH;
    let mut south_anchor: Option<(usize, f64)> = None;
    for (i, p) in rotated.points()[..north_anchor].iter().enumerate() {
        let d = chord_distance(p, &south);
        if d < r && south_anchor.map_or(true, |(_, best)| d < best) {
            south_anchor = Some((i, d));
        }
    }
    let (south_anchor, _) = south_anchor.ok_or(TriangulateError::NoSouthAnchor)?;
    for (idx, band) in bands.iter().enumerate() {
        if band.iter().any(|m| m.robot == south_anchor) {
            let j = idx as i32 - k;
            return Err(TriangulateError::RobotInTwoBands { robot: south_anchor, first: -k - 1, second: j });
        }
    }
    Ok(BandDecomposition { latitudes: lat.clone(), bands, north_anchor, south_anchor })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Consecutive vertices of band `j`.
    Band(i32),
    /// Between bands `j` and `j + 1`.
    Cross(i32),
    NorthSpoke,
    SouthSpoke,
}

pub type EdgeSet = BTreeMap<(usize, usize), EdgeKind>;

/// Index of the first member strictly after longitude `theta`, cyclically.
fn next_after(band: &[BandMember], theta: f64) -> usize {
    let i = band.partition_point(|m| m.longitude <= theta);
    if i == band.len() {
        0
    } else {
        i
    }
}

pub fn connect_vertices(bd: &BandDecomposition) -> Result<EdgeSet, TriangulateError> {
    let k = bd.k();
    for j in [k, -k] {
        let size = bd.band(j).len();
        if size < 3 {
            return Err(TriangulateError::BandTooSmall { band: j, size });
        }
    }
    let lay = bd.layout();
    let mut edges = EdgeSet::new();
    for j in bd.latitudes.bands() {
        let m = bd.band(j).len();
        for l in 0..m {
            let (a, b) = (lay.vertex(j, l), lay.vertex(j, (l + 1) % m));
            if a != b {
                edges.entry(ordered(a, b)).or_insert(EdgeKind::Band(j));
            }
        }
    }
    for l in 0..bd.band(k).len() {
        edges.insert(ordered(VertexLayout::NORTH, lay.vertex(k, l)), EdgeKind::NorthSpoke);
    }
    for l in 0..bd.band(-k).len() {
        edges.insert(ordered(lay.south, lay.vertex(-k, l)), EdgeKind::SouthSpoke);
    }
    for j in -k..k {
        let (lo, hi) = (bd.band(j), bd.band(j + 1));
        for (l, m) in lo.iter().enumerate() {
            let u = next_after(hi, m.longitude);
            edges.insert(ordered(lay.vertex(j, l), lay.vertex(j + 1, u)), EdgeKind::Cross(j));
        }
        for (u, m) in hi.iter().enumerate() {
            let l = next_after(lo, m.longitude);
            edges.insert(ordered(lay.vertex(j, l), lay.vertex(j + 1, u)), EdgeKind::Cross(j));
        }
    }
    Ok(edges)
}

/// Cap fans plus a zipper sweep over each annulus. Faces are oriented
/// counterclockwise seen from outside the sphere.
pub fn assemble_faces(edges: &EdgeSet, bd: &BandDecomposition) -> Result<Vec<[usize; 3]>, TriangulateError> {
    let k = bd.k();
    let lay = bd.layout();
    let mut faces = Vec::new();
    let top = bd.band(k).len();
    for l in 0..top {
        faces.push([VertexLayout::NORTH, lay.vertex(k, l), lay.vertex(k, (l + 1) % top)]);
    }
    let bottom = bd.band(-k).len();
    for l in 0..bottom {
        faces.push([lay.south, lay.vertex(-k, (l + 1) % bottom), lay.vertex(-k, l)]);
    }
    for j in -k..k {
        zipper(edges, bd, &lay, j, &mut faces)?;
    }
    Ok(faces)
}

fn zipper(
    edges: &EdgeSet,
    bd: &BandDecomposition,
    lay: &VertexLayout,
    j: i32,
    faces: &mut Vec<[usize; 3]>,
) -> Result<(), TriangulateError> {
    let (a, b) = (bd.band(j), bd.band(j + 1));
    let (na, nb) = (a.len(), b.len());
    let cross = |i: usize, u: usize| edges.contains_key(&ordered(lay.vertex(j, i % na), lay.vertex(j + 1, u % nb)));
    let fail = |i: usize, u: usize| TriangulateError::NonTriangularCell {
        lower: j,
        upper: j + 1,
        lon_a: a[i % na].longitude,
        lon_b: b[u % nb].longitude,
    };
    let (mut i, mut u) = (0usize, next_after(b, a[0].longitude));
    let (mut steps_a, mut steps_b) = (0usize, 0usize);
    let need_a = if na == 1 { 0 } else { na };
    let need_b = if nb == 1 { 0 } else { nb };
    while steps_a < need_a || steps_b < need_b {
        let adv_a = steps_a < need_a && cross(i + 1, u);
        let adv_b = steps_b < need_b && cross(i, u + 1);
        match (adv_a, adv_b) {
            (true, false) => {
                faces.push([lay.vertex(j, i % na), lay.vertex(j, (i + 1) % na), lay.vertex(j + 1, u % nb)]);
                i += 1;
                steps_a += 1;
            }
            (false, true) => {
                faces.push([lay.vertex(j, i % na), lay.vertex(j + 1, (u + 1) % nb), lay.vertex(j + 1, u % nb)]);
                u += 1;
                steps_b += 1;
            }
            _ => return Err(fail(i, u)),
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexRole {
    NorthAnchor,
    SouthAnchor,
    Band(i32),
}

/// A triangulation of the sphere whose vertices correspond one-to-one to
/// robots. Vertex positions are in the original (unrotated) frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    pub vertices: Vec<UnitVector>,
    pub roles: Vec<VertexRole>,
    pub vertex_to_robot: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub edge_kinds: Vec<EdgeKind>,
    pub faces: Vec<[usize; 3]>,
    pub delta_prime: f64,
    /// Rotation taking the original frame to the band frame.
    pub frame: Rotation3<f64>,
}

impl Triangulation {
    pub fn from_bands(bd: &BandDecomposition, edges: &EdgeSet, faces: Vec<[usize; 3]>, frame: Rotation3<f64>) -> Self {
        let lay = bd.layout();
        let inv = frame.inverse();
        let nv = lay.vertex_count();
        let mut vertices = vec![UnitVector::NORTH; nv];
        let mut roles = vec![VertexRole::NorthAnchor; nv];
        let mut vertex_to_robot = vec![bd.north_anchor; nv];
        vertices[VertexLayout::NORTH] = UnitVector::NORTH.rotated(&inv);
        for j in bd.latitudes.bands() {
            for (l, m) in bd.band(j).iter().enumerate() {
                let v = lay.vertex(j, l);
                vertices[v] = m.q.rotated(&inv);
                roles[v] = VertexRole::Band(j);
                vertex_to_robot[v] = m.robot;
            }
        }
        roles[lay.south] = VertexRole::SouthAnchor;
        vertex_to_robot[lay.south] = bd.south_anchor;
        // placeholder until the anchor's own position is attached
        vertices[lay.south] = UnitVector::SOUTH.rotated(&inv);
        let (edges, edge_kinds) = edges.iter().map(|(&e, &kd)| (e, kd)).unzip();
        Triangulation { vertices, roles, vertex_to_robot, edges, edge_kinds, faces, delta_prime: bd.delta_prime(), frame }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// `p′_ij = 1` iff the vertices of robots `i` and `j` are joined by an edge.
    pub fn sub_network(&self, n: usize) -> Network {
        let mut net = Network::empty(n);
        for &(u, v) in &self.edges {
            let (i, j) = (self.vertex_to_robot[u], self.vertex_to_robot[v]);
            if i != j {
                net.insert(i, j).expect("vertex_to_robot maps into 0..n");
            }
        }
        net
    }

    /// Faces as robot triples.
    pub fn robot_faces(&self) -> Vec<[usize; 3]> {
        self.faces.iter().map(|f| f.map(|v| self.vertex_to_robot[v])).collect()
    }

    pub fn max_edge_length(&self, positions: &SwarmPosition) -> f64 {
        let p = positions.points();
        self.edges
            .iter()
            .map(|&(u, v)| chord_distance(&p[self.vertex_to_robot[u]], &p[self.vertex_to_robot[v]]))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EulerCharacteristic { chi: i64 },
    EdgeFaceIncidence { edge: (usize, usize), faces: usize },
    FaceHasMissingEdge { face: usize },
    VertexLink { vertex: usize, cycles: usize },
    NonInjective { robot: usize },
    RobotChord { edge: usize, robots: (usize, usize), length: f64 },
    BandGap { edge: usize, length: f64 },
    NotMinorArc { edge: usize },
    CrossLength { edge: usize, length: f64 },
    NorthSpoke { edge: usize, length: f64 },
    SouthSpoke { edge: usize, length: f64 },
    QDistance { vertex: usize, distance: f64 },
    FaceOrientation { face: usize, det: f64 },
    SphereArea { total: f64 },
    ArcCrossing { first: usize, second: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub max_robot_edge: f64,
    pub violations: Vec<Violation>,
    /// Faces whose robot triangle (not the q-triangle) is negatively oriented
    /// seen from the origin. Informational.
    pub robot_face_inversions: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Combinatorial, metric and embedding checks. `positions` are the robot
/// positions the triangulation was built from (original frame).
pub fn validate_triangulation(t: &Triangulation, positions: &SwarmPosition, delta_prime: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let nv = t.vertices.len();
    let chi = t.euler_characteristic();
    if chi != 2 {
        violations.push(Violation::EulerCharacteristic { chi });
    }

    let mut incidence: HashMap<(usize, usize), usize> = t.edges.iter().map(|&e| (ordered(e.0, e.1), 0)).collect();
    for (fi, f) in t.faces.iter().enumerate() {
        let mut missing = false;
        for s in 0..3 {
            match incidence.get_mut(&ordered(f[s], f[(s + 1) % 3])) {
                Some(c) => *c += 1,
                None => missing = true,
            }
        }
        if missing {
            violations.push(Violation::FaceHasMissingEdge { face: fi });
        }
    }
    for &e in &t.edges {
        let c = incidence[&ordered(e.0, e.1)];
        if c != 2 {
            violations.push(Violation::EdgeFaceIncidence { edge: e, faces: c });
        }
    }

    for (v, cycles) in link_cycles(t).into_iter().enumerate() {
        if cycles != 1 {
            violations.push(Violation::VertexLink { vertex: v, cycles });
        }
    }

    let mut seen = HashMap::new();
    for &r in &t.vertex_to_robot {
        if seen.insert(r, ()).is_some() {
            violations.push(Violation::NonInjective { robot: r });
        }
    }

    let p = positions.points();
    let mut max_robot_edge: f64 = 0.0;
    let third = delta_prime / 3.0;
    for (ei, (&(u, v), &kind)) in t.edges.iter().zip(&t.edge_kinds).enumerate() {
        let (ri, rj) = (t.vertex_to_robot[u], t.vertex_to_robot[v]);
        if ri < p.len() && rj < p.len() {
            let len = chord_distance(&p[ri], &p[rj]);
            max_robot_edge = max_robot_edge.max(len);
            if len >= delta_prime {
                violations.push(Violation::RobotChord { edge: ei, robots: (ri, rj), length: len });
            }
        }
        let qlen = chord_distance(&t.vertices[u], &t.vertices[v]);
        match kind {
            EdgeKind::Band(_) => {
                if qlen >= third {
                    violations.push(Violation::BandGap { edge: ei, length: qlen });
                }
                // band vertices are numbered in longitude order, so the arc runs
                // from u to v unless this is the wraparound edge
                let lon = |x: usize| longitude(&t.vertices[x].rotated(&t.frame)).unwrap_or(0.0);
                let gap = if v == u + 1 { lon(v) - lon(u) } else { lon(u) - lon(v) };
                if gap.rem_euclid(std::f64::consts::TAU) >= std::f64::consts::PI {
                    violations.push(Violation::NotMinorArc { edge: ei });
                }
            }
            EdgeKind::Cross(_) => {
                if qlen >= 2.0 * third {
                    violations.push(Violation::CrossLength { edge: ei, length: qlen });
                }
            }
            EdgeKind::NorthSpoke => {
                if qlen >= 2.0 * third {
                    violations.push(Violation::NorthSpoke { edge: ei, length: qlen });
                }
            }
            EdgeKind::SouthSpoke => {
                if qlen >= 2.0 * third + delta_prime / 6.0 {
                    violations.push(Violation::SouthSpoke { edge: ei, length: qlen });
                }
            }
        }
    }
    for v in 0..nv {
        if let (VertexRole::Band(_), Some(rp)) = (t.roles[v], p.get(t.vertex_to_robot[v])) {
            let d = chord_distance(&t.vertices[v], rp);
            if d >= delta_prime / 6.0 {
                violations.push(Violation::QDistance { vertex: v, distance: d });
            }
        }
    }

    let mut total = 0.0;
    let mut robot_face_inversions = 0;
    for (fi, f) in t.faces.iter().enumerate() {
        let (a, b, c) = (t.vertices[f[0]].point(), t.vertices[f[1]].point(), t.vertices[f[2]].point());
        let det = a.cross(b).dot(c);
        if !(det > 0.0) {
            violations.push(Violation::FaceOrientation { face: fi, det });
        }
        total += solid_angle_at_origin(a, b, c);
        let r = f.map(|v| t.vertex_to_robot[v]);
        if r.iter().all(|&i| i < p.len()) && p[r[0]].point().cross(p[r[1]].point()).dot(p[r[2]].point()) <= 0.0 {
            robot_face_inversions += 1;
        }
    }
    if (total - 4.0 * std::f64::consts::PI).abs() > 1e-6 {
        violations.push(Violation::SphereArea { total });
    }
    violations.extend(arc_crossings(t, delta_prime));

    ValidationReport {
        vertices: nv,
        edges: t.edges.len(),
        faces: t.faces.len(),
        euler_characteristic: chi,
        max_robot_edge,
        violations,
        robot_face_inversions,
    }
}

/// Number of cycles in each vertex link (0 for an isolated vertex). A link
/// in which some vertex has degree other than 2 counts as 0 cycles.
fn link_cycles(t: &Triangulation) -> Vec<usize> {
    let nv = t.vertices.len();
    let mut link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for f in &t.faces {
        for s in 0..3 {
            link[f[s]].push((f[(s + 1) % 3], f[(s + 2) % 3]));
        }
    }
    link.into_iter()
        .map(|segs| {
            let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
            for &(a, b) in &segs {
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
            }
            if adj.is_empty() || adj.values().any(|v| v.len() != 2) {
                return 0;
            }
            let mut seen: HashMap<usize, bool> = adj.keys().map(|&k| (k, false)).collect();
            let mut cycles = 0;
            let keys: Vec<usize> = adj.keys().copied().collect();
            for start in keys {
                if seen[&start] {
                    continue;
                }
                cycles += 1;
                let mut stack = vec![start];
                while let Some(x) = stack.pop() {
                    if std::mem::replace(seen.get_mut(&x).unwrap(), true) {
                        continue;
                    }
                    stack.extend(adj[&x].iter().copied().filter(|y| !seen[y]));
                }
            }
            cycles
        })
        .collect()
}

const ARC_PLANE_TOLERANCE: f64 = 1e-12;

/// Whether the minor geodesic arcs `ab` and `cd` cross at an interior point.
/// Arcs on a common great circle count as crossing when they overlap.
pub fn arcs_cross(a: &Point3, b: &Point3, c: &Point3, d: &Point3) -> bool {
    let n1 = a.cross(b);
    let n2 = c.cross(d);
    let tol1 = ARC_PLANE_TOLERANCE * n1.norm();
    let (c1, d1) = (n1.dot(c), n1.dot(d));
    if c1.abs() <= tol1 && d1.abs() <= tol1 {
        return collinear_overlap(a, b, c, d);
    }
    let tol2 = ARC_PLANE_TOLERANCE * n2.norm();
    let (a2, b2) = (n2.dot(a), n2.dot(b));
    if c1.abs() <= tol1 || d1.abs() <= tol1 || a2.abs() <= tol2 || b2.abs() <= tol2 {
        // an endpoint touching the other arc's circle is not a proper crossing
        return false;
    }
    if c1 * d1 > 0.0 || a2 * b2 > 0.0 {
        return false;
    }
    let x = n1.cross(&n2);
    x.dot(&(a + b)) * x.dot(&(c + d)) > 0.0
}

fn collinear_overlap(a: &Point3, b: &Point3, c: &Point3, d: &Point3) -> bool {
    let e1 = a.normalize();
    let e2 = a.cross(b).cross(a);
    if e2.norm() == 0.0 {
        return false;
    }
    let e2 = e2.normalize();
    let ang = |p: &Point3| p.dot(&e2).atan2(p.dot(&e1));
    let (lo1, hi1) = (0.0, ang(b));
    let (c0, d0) = (ang(c), ang(d));
    let (lo2, hi2) = (c0.min(d0), c0.max(d0));
    // minor arc cd through the antipode of a covers [hi2, π] ∪ [-π, lo2]
    if hi2 - lo2 > std::f64::consts::PI {
        return hi2 < hi1 - ARC_PLANE_TOLERANCE;
    }
    lo2.max(lo1) < hi2.min(hi1) - ARC_PLANE_TOLERANCE
}

/// Pairs of edges without a shared endpoint whose q-arcs cross. Candidates
/// come from a grid over edge midpoints.
fn arc_crossings(t: &Triangulation, delta_prime: f64) -> Vec<Violation> {
    let v = |i: usize| *t.vertices[i].point();
    let mids: Vec<Point3> = t.edges.iter().map(|&(a, b)| (v(a) + v(b)) / 2.0).collect();
    let longest = t.edges.iter().map(|&(a, b)| (v(a) - v(b)).norm()).fold(0.0, f64::max);
    let cell = longest.max(delta_prime).max(1e-6);
    let grid = CellGrid::new(&mids, cell);
    let mut out = Vec::new();
    for (e1, &(a, b)) in t.edges.iter().enumerate() {
        for e2 in grid.candidates(&mids[e1]) {
            if e2 <= e1 {
                continue;
            }
            let (c, d) = t.edges[e2];
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if arcs_cross(&v(a), &v(b), &v(c), &v(d)) {
                out.push(Violation::ArcCrossing { first: e1, second: e2 });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub seed: u64,
    pub general: GeneralPositionOptions,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { seed: 0, general: GeneralPositionOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    CoveringRadius,
    ShrinkRadius,
    PerturbationBudget,
    PerturbToGeneral,
    ComputeLatitudes,
    SelectBands,
    ConnectVertices,
    AssembleFaces,
    Admissibility,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::CoveringRadius => "covering_radius",
            Stage::ShrinkRadius => "shrink_radius",
            Stage::PerturbationBudget => "perturbation_budget",
            Stage::PerturbToGeneral => "perturb_to_general",
            Stage::ComputeLatitudes => "compute_latitudes",
            Stage::SelectBands => "select_bands",
            Stage::ConnectVertices => "connect_vertices",
            Stage::AssembleFaces => "assemble_faces",
            Stage::Admissibility => "admissibility",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StageError {
    #[error(transparent)]
    Swarm(#[from] SwarmError),
    #[error(transparent)]
    Triangulate(#[from] TriangulateError),
    #[error("sub-network edge ({0}, {1}) does not survive the straight-line return or a path enters the torus")]
    NotAdmissible(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage}: {error}")]
pub struct BuildError {
    pub stage: Stage,
    pub error: StageError,
}

fn at<E: Into<StageError>>(stage: Stage) -> impl FnOnce(E) -> BuildError {
    move |e| BuildError { stage, error: e.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Build {
    pub net: NetReport,
    pub delta: f64,
    pub delta_prime: f64,
    pub budget: f64,
    pub perturbation: PerturbationResult,
    pub bands: BandDecomposition,
    pub triangulation: Triangulation,
    pub sub_network: Network,
}

/// The full construction from actual positions `o_i` with range `δ`.
pub fn build_triangulation(
    positions: &SwarmPosition,
    delta: f64,
    torus: &ObstacleTorus,
    options: &BuildOptions,
) -> Result<Build, BuildError> {
    let n = positions.len();
    if n < 4 {
        return Err(at(Stage::SelectBands)(TriangulateError::TooFewRobots(n)));
    }
    let net = covering_radius(positions, CoveringMethod::Exact).map_err(at(Stage::CoveringRadius))?;
    let delta_prime = delta_prime_from(net.covering_radius, delta).map_err(at(Stage::ShrinkRadius))?;
    let budget = perturbation_budget(positions, delta, delta_prime).map_err(at(Stage::PerturbationBudget))?;
    let perturbation = perturb_to_general_with(positions, budget, options.seed, &options.general)
        .map_err(at(Stage::PerturbToGeneral))?;
    let virt = &perturbation.virtual_position;
    let frame = crate::geom::rotation_to_north(&virt.points()[n - 1]);
    let rotated = virt.rotated(&frame);
    let latitudes = compute_latitudes(delta_prime).map_err(at(Stage::ComputeLatitudes))?;
    let bands = select_bands(&rotated, &latitudes).map_err(at(Stage::SelectBands))?;
    let edges = connect_vertices(&bands).map_err(at(Stage::ConnectVertices))?;
    let faces = assemble_faces(&edges, &bands).map_err(at(Stage::AssembleFaces))?;
    let mut triangulation = Triangulation::from_bands(&bands, &edges, faces, frame);
    let lay = bands.layout();
    triangulation.vertices[VertexLayout::NORTH] = virt.points()[bands.north_anchor];
    triangulation.vertices[lay.south] = virt.points()[bands.south_anchor];
    let sub_network = triangulation.sub_network(n);
    if !straightline_admissible(virt, positions, &sub_network, delta, torus) {
        let bad = first_inadmissible_edge(virt, positions, &sub_network, delta);
        return Err(at(Stage::Admissibility)(StageError::NotAdmissible(bad.0, bad.1)));
    }
    Ok(Build { net, delta, delta_prime, budget, perturbation, bands, triangulation, sub_network })
}

fn first_inadmissible_edge(virt: &SwarmPosition, actual: &SwarmPosition, sub: &Network, delta: f64) -> (usize, usize) {
    let (v, a) = (virt.points(), actual.points());
    sub.edges()
        .find(|&(i, j)| chord_distance(&v[i], &v[j]) >= delta || chord_distance(&a[i], &a[j]) >= delta)
        .unwrap_or((0, 0))
}

/// Sub-network relation against the ambient δ-networks at both ends of the
/// straight-line return.
pub fn subnetwork_holds(build: &Build, actual: &SwarmPosition, rule: RangeRule) -> bool {
    let virt = build.perturbation.virtual_position.to_points();
    let act = actual.to_points();
    build.sub_network.is_subnetwork_of(&network_at(&virt, build.delta, rule))
        && build.sub_network.is_subnetwork_of(&network_at(&act, build.delta, rule))
}
