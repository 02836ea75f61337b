//! Oriented complexes, signed solid angles and winding numbers about points
//! of the core circle, plus the homotopy-avoidance checks.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{ObstacleTorus, Point3};
use crate::motion::Motion;
use crate::poly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("viewpoint lies on a face")]
    ViewpointOnFace,
    #[error("point lies on the surface (face {face})")]
    PointOnSurface { face: usize },
    #[error("winding sum {turns} turns is not within 1e-6 of an integer")]
    ResidualTooLarge { turns: f64 },
    #[error("complex is not an orientable closed surface (edge {edge:?})")]
    NonOrientable { edge: (usize, usize) },
    #[error("reference point has winding {winding}; global sign cannot be fixed")]
    UnenclosedReference { winding: i64 },
}

/// Points in ℝ³ with oriented triangular faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedComplex {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
}

impl OrientedComplex {
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Self {
        OrientedComplex { vertices, faces }
    }

    pub fn face(&self, f: usize) -> [Point3; 3] {
        self.faces[f].map(|v| self.vertices[v])
    }

    pub fn flipped(&self) -> Self {
        OrientedComplex { vertices: self.vertices.clone(), faces: self.faces.iter().map(|f| [f[0], f[2], f[1]]).collect() }
    }

    pub fn vertex_centroid(&self) -> Point3 {
        let used: std::collections::BTreeSet<usize> = self.faces.iter().flatten().copied().collect();
        let s: Point3 = used.iter().map(|&v| self.vertices[v]).sum();
        s / used.len().max(1) as f64
    }

    /// Largest pairwise vertex distance of each face.
    pub fn face_diameters(&self) -> Vec<f64> {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|v| self.vertices[v]);
                (a - b).norm().max((b - c).norm()).max((c - a).norm())
            })
            .collect()
    }
}

const PLANE_TOLERANCE: f64 = 1e-12;

/// Signed solid angle of triangle `(a, b, c)` seen from `p`
/// (Van Oosterom and Strackee). Positive when the vertices run
/// counterclockwise as seen from `p`.
pub fn solid_angle(face: &[Point3; 3], p: &Point3) -> Result<f64, TopologyError> {
    let (a, b, c) = (face[0] - p, face[1] - p, face[2] - p);
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(&c));
    let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    if num.abs() <= PLANE_TOLERANCE * la * lb * lc {
        if den <= 0.0 {
            return Err(TopologyError::ViewpointOnFace);
        }
        return Ok(0.0);
    }
    Ok(2.0 * num.atan2(den))
}

/// Solid angle of a triangle with unit vertices seen from the origin, i.e.
/// its signed spherical area.
pub fn solid_angle_at_origin(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + a.dot(c) + b.dot(c);
    2.0 * num.atan2(den)
}

fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (l, r) = x.split_at(x.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

pub const WINDING_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Winding {
    pub winding: i64,
    /// `|Σ Ω / 4π − winding|`.
    pub residual: f64,
}

pub fn winding_number(complex: &OrientedComplex, p: &Point3) -> Result<Winding, TopologyError> {
    let angles: Vec<Result<f64, usize>> =
        (0..complex.faces.len()).into_par_iter().map(|f| solid_angle(&complex.face(f), p).map_err(|_| f)).collect();
    let mut vals = Vec::with_capacity(angles.len());
    for a in angles {
        match a {
            Ok(v) => vals.push(v),
            Err(face) => return Err(TopologyError::PointOnSurface { face }),
        }
    }
    let turns = pairwise_sum(&vals) / (4.0 * std::f64::consts::PI);
    let winding = turns.round();
    let residual = (turns - winding).abs();
    if residual >= WINDING_RESIDUAL {
        return Err(TopologyError::ResidualTooLarge { turns });
    }
    Ok(Winding { winding: winding as i64, residual })
}

/// Makes face orientations agree across shared edges, then fixes the global
/// sign so that the winding about the vertex centroid is +1.
pub fn orient_faces(complex: &OrientedComplex) -> Result<OrientedComplex, TopologyError> {
    let reference = complex.vertex_centroid();
    orient_faces_about(complex, &reference)
}

pub fn orient_faces_about(complex: &OrientedComplex, reference: &Point3) -> Result<OrientedComplex, TopologyError> {
    let nf = complex.faces.len();
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (fi, f) in complex.faces.iter().enumerate() {
        for s in 0..3 {
            let (u, v) = (f[s], f[(s + 1) % 3]);
            by_edge.entry((u.min(v), u.max(v))).or_default().push(fi);
        }
    }
    if let Some((&edge, _)) = by_edge.iter().find(|(_, fs)| fs.len() != 2) {
        return Err(TopologyError::NonOrientable { edge });
    }
    let has_directed = |f: &[usize; 3], u: usize, v: usize| (0..3).any(|s| f[s] == u && f[(s + 1) % 3] == v);
    let mut faces = complex.faces.clone();
    let mut done = vec![false; nf];
    for seed in 0..nf {
        if done[seed] {
            continue;
        }
        done[seed] = true;
        let mut queue = VecDeque::from([seed]);
        while let Some(fi) = queue.pop_front() {
            let f = faces[fi];
            for s in 0..3 {
                let (u, v) = (f[s], f[(s + 1) % 3]);
                for &g in &by_edge[&(u.min(v), u.max(v))] {
                    if g == fi {
                        continue;
                    }
                    // a consistent neighbour traverses the shared edge as v → u
                    let agrees = has_directed(&faces[g], v, u);
                    if done[g] {
                        if !agrees {
                            return Err(TopologyError::NonOrientable { edge: (u.min(v), u.max(v)) });
                        }
                    } else {
                        if !agrees {
                            let h = faces[g];
                            faces[g] = [h[0], h[2], h[1]];
                        }
                        done[g] = true;
                        queue.push_back(g);
                    }
                }
            }
        }
    }
    let oriented = OrientedComplex { vertices: complex.vertices.clone(), faces };
    match winding_number(&oriented, reference) {
        Ok(Winding { winding: 1, .. }) => Ok(oriented),
        Ok(Winding { winding: -1, .. }) => Ok(oriented.flipped()),
        Ok(w) => Err(TopologyError::UnenclosedReference { winding: w.winding }),
        Err(_) => Err(TopologyError::UnenclosedReference { winding: 0 }),
    }
}

/// Robot positions at `t` with the given oriented robot triples.
pub fn complex_at(motion: &Motion, t: f64, robot_faces: &[[usize; 3]]) -> OrientedComplex {
    OrientedComplex { vertices: motion.positions_at(t), faces: robot_faces.to_vec() }
}

/// `min_x∈Δ d(x, 𝒫) ≥ max_v (d(v, 𝒫) − max_w |v − w|)`.
pub fn face_core_lower_bound(face: &[Point3; 3], torus: &ObstacleTorus) -> f64 {
    (0..3)
        .map(|i| {
            let v = face[i];
            let reach = (0..3).map(|j| (face[j] - v).norm()).fold(0.0, f64::max);
            torus.core_distance(&v) - reach
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSample {
    pub t: f64,
    /// `None` when the sample point met a face or the sum did not round cleanly.
    pub winding: Option<i64>,
    pub residual: Option<f64>,
    pub max_face_diameter: f64,
    /// Certified lower bound on the face-to-core distance (may be negative).
    pub min_face_core_distance: f64,
    pub flag: Option<String>,
}

/// Sample times: `samples` uniform times in `[t_0, t̄]` plus every breakpoint.
pub fn timeline_times(motion: &Motion, samples: usize) -> Vec<f64> {
    let (t0, t1) = motion.time_range();
    let mut ts: Vec<f64> = (0..samples.max(2)).map(|i| t0 + (t1 - t0) * i as f64 / (samples.max(2) - 1) as f64).collect();
    ts.extend_from_slice(motion.breakpoints());
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

pub fn winding_timeline(
    motion: &Motion,
    robot_faces: &[[usize; 3]],
    p0: &Point3,
    samples: usize,
    torus: &ObstacleTorus,
) -> Vec<TimelineSample> {
    timeline_times(motion, samples)
        .into_iter()
        .map(|t| {
            let k = complex_at(motion, t, robot_faces);
            let max_face_diameter = k.face_diameters().into_iter().fold(0.0, f64::max);
            let min_face_core_distance = (0..k.faces.len())
                .into_par_iter()
                .map(|f| face_core_lower_bound(&k.face(f), torus))
                .reduce(|| f64::INFINITY, f64::min);
            let (winding, residual, flag) = match winding_number(&k, p0) {
                Ok(w) => (Some(w.winding), Some(w.residual), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            TimelineSample { t, winding, residual, max_face_diameter, min_face_core_distance, flag }
        })
        .collect()
}

/// Smallest `m` with `(m+1)(m+2)/2 ≥ count`.
fn grid_level(count: usize) -> usize {
    let mut m = 1;
    while (m + 1) * (m + 2) / 2 < count {
        m += 1;
    }
    m
}

/// Barycentric grid points of level `m` on a triangle.
pub fn barycentric_grid(face: &[Point3; 3], m: usize) -> Vec<Point3> {
    let mut out = Vec::with_capacity((m + 1) * (m + 2) / 2);
    for i in 0..=m {
        for j in 0..=m - i {
            let (a, b) = (i as f64 / m as f64, j as f64 / m as f64);
            out.push(face[0] * a + face[1] * b + face[2] * (1.0 - a - b));
        }
    }
    out
}

/// Exact `min_{s∈[0,1]} dist(w + s(x − w), 𝒫)` for the circle of radius `r`
/// in the plane z = 0.
pub fn segment_circle_distance(w: &Point3, x: &Point3, r: f64) -> f64 {
    let d = x - w;
    let q = [w.x * w.x + w.y * w.y, 2.0 * (w.x * d.x + w.y * d.y), d.x * d.x + d.y * d.y];
    let dq = poly::derivative(&q);
    let l = [w.dot(&d), d.norm_squared()];
    // f'(s) = 0  ⇒  4 L² Q = R² Q′²
    let g = poly::add_scaled(&poly::mul(&poly::mul(&[4.0 * l[0], 4.0 * l[1]], &l), &q), -r * r, &poly::mul(&dq, &dq));
    let mut cand = vec![0.0, 1.0];
    cand.extend(poly::roots_in(&g, 0.0, 1.0));
    cand.extend(poly::critical_points(&g, 0.0, 1.0));
    cand.extend(poly::roots_in(&q, 0.0, 1.0));
    cand.into_iter()
        .map(|s| {
            let p = w + d * s;
            let rho = p.x.hypot(p.y);
            (p.z * p.z + (rho - r) * (rho - r)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Angles `φ` at which `C cos φ + D sin φ = e`.
fn sinusoid_crossings(c: f64, d: f64, e: f64, out: &mut Vec<f64>) {
    let amp = c.hypot(d);
    if amp > 0.0 && (e / amp).abs() <= 1.0 {
        let base = d.atan2(c);
        let off = (e / amp).acos();
        out.push(base + off);
        out.push(base - off);
    }
}

/// Exact test whether the core circle meets the region swept by the radial
/// segments from `face` out to the unit sphere, i.e. the set of `λx` with `x`
/// in the face and `1 ≤ λ ≤ 1/|x|`. Returns a point of 𝒫 inside it.
pub fn face_sweep_hits_core(face: &[Point3; 3], r: f64) -> Option<Point3> {
    let m = nalgebra::Matrix3::from_columns(face);
    let Some(inv) = m.try_inverse() else {
        // face plane through the origin: the radial projection is undefined
        return Some(Point3::new(r, 0.0, 0.0));
    };
    // y(φ) = r(cos φ, sin φ, 0) = α a + β b + γ c with (α, β, γ) = inv·y
    let cs: [(f64, f64); 3] = [0, 1, 2].map(|i| (r * inv[(i, 0)], r * inv[(i, 1)]));
    let sum = (cs.iter().map(|c| c.0).sum::<f64>(), cs.iter().map(|c| c.1).sum::<f64>());
    let feasible = |phi: f64| {
        let (co, si) = (phi.cos(), phi.sin());
        cs.iter().all(|&(c, d)| c * co + d * si >= 0.0) && sum.0 * co + sum.1 * si >= 1.0
    };
    let mut angles = vec![0.0];
    for &(c, d) in &cs {
        sinusoid_crossings(c, d, 0.0, &mut angles);
    }
    sinusoid_crossings(sum.0, sum.1, 1.0, &mut angles);
    let mut probes = angles.clone();
    angles.iter_mut().for_each(|a| *a = a.rem_euclid(std::f64::consts::TAU));
    angles.sort_by(f64::total_cmp);
    for w in angles.windows(2) {
        probes.push(0.5 * (w[0] + w[1]));
    }
    if let (Some(first), Some(last)) = (angles.first(), angles.last()) {
        probes.push(0.5 * (first + last + std::f64::consts::TAU));
    }
    probes.into_iter().find(|&phi| feasible(phi)).map(|phi| Point3::new(r * phi.cos(), r * phi.sin(), 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomotopyOptions {
    pub per_face_samples: usize,
    pub margin: f64,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        HomotopyOptions { per_face_samples: 16, margin: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyWitness {
    pub face: usize,
    /// Point of the face whose radial segment comes closest to 𝒫.
    pub face_point: Point3,
    pub distance: f64,
    /// Point of 𝒫 inside the face's radial sweep, when the exact test found one.
    pub core_point: Option<Point3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyReport {
    pub ok: bool,
    /// Smallest sampled segment-to-core distance.
    pub min_distance: f64,
    pub witness: Option<HomotopyWitness>,
}

/// Whether `h_t(w) = (1−t)w + tτ⁻¹(w)` avoids 𝒫. Sampled per-face points use
/// the exact segment-to-circle distance; each face's whole radial sweep is
/// also tested exactly against the circle.
pub fn check_radial_homotopy(complex: &OrientedComplex, torus: &ObstacleTorus, opts: &HomotopyOptions) -> HomotopyReport {
    let r = torus.major_radius();
    let m = grid_level(opts.per_face_samples);
    let per_face: Vec<(f64, Point3, Option<Point3>)> = (0..complex.faces.len())
        .into_par_iter()
        .map(|f| {
            let face = complex.face(f);
            let mut best = (f64::INFINITY, face[0]);
            for x in barycentric_grid(&face, m) {
                let n = x.norm();
                let d = if n > 0.0 { segment_circle_distance(&(x / n), &x, r) } else { 0.0 };
                if d < best.0 {
                    best = (d, x);
                }
            }
            (best.0, best.1, face_sweep_hits_core(&face, r))
        })
        .collect();
    let mut report = HomotopyReport { ok: true, min_distance: f64::INFINITY, witness: None };
    let mut worst: Option<usize> = None;
    for (f, &(d, _, hit)) in per_face.iter().enumerate() {
        report.min_distance = report.min_distance.min(d);
        let bad = d <= opts.margin || hit.is_some();
        if bad && (worst.is_none() || d < per_face[worst.unwrap()].0) {
            worst = Some(f);
        }
    }
    if let Some(f) = worst {
        let (distance, face_point, core_point) = per_face[f];
        report.ok = false;
        report.witness = Some(HomotopyWitness { face: f, face_point, distance, core_point });
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub contained: bool,
    /// Largest sampled distance to the solid torus.
    pub max_distance: f64,
    pub witness: Option<Point3>,
}

/// Whether every face lies within `δ` of 𝔓, sampled on a barycentric grid
/// with spacing at most δ/8 (vertices, edge midpoints and centroid included).
pub fn neighborhood_containment(complex: &OrientedComplex, torus: &ObstacleTorus, delta: f64) -> ContainmentReport {
    let worst = (0..complex.faces.len())
        .into_par_iter()
        .map(|f| {
            let face = complex.face(f);
            let diam = (face[0] - face[1]).norm().max((face[1] - face[2]).norm()).max((face[2] - face[0]).norm());
            // level divisible by 6 hits midpoints and the centroid
            let m = (((diam / (delta / 8.0)).ceil() as usize).max(1)).div_ceil(6) * 6;
            barycentric_grid(&face, m)
                .into_iter()
                .map(|x| (torus.distance_to_solid(&x), x))
                .fold((f64::NEG_INFINITY, face[0]), |a, b| if b.0 > a.0 { b } else { a })
        })
        .reduce(|| (f64::NEG_INFINITY, Point3::zeros()), |a, b| if b.0 > a.0 { b } else { a });
    if complex.faces.is_empty() {
        return ContainmentReport { contained: true, max_distance: 0.0, witness: None };
    }
    let contained = worst.0 < delta;
    ContainmentReport { contained, max_distance: worst.0, witness: (!contained).then_some(worst.1) }
}
