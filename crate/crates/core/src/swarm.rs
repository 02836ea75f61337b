//! Swarm positions, covering nets, general position and admissible
//! perturbations.

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{chord_distance, longitude, rotation_to_north, ObstacleTorus, Point3, UnitVector, POLE_TOLERANCE};
use crate::network::Network;
use crate::spatial::{CellGrid, NearestSite};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwarmError {
    #[error("points are coplanar with the origin; exact covering radius unavailable")]
    DegenerateHull,
    #[error("need at least {needed} points, got {n}")]
    TooFewPoints { n: usize, needed: usize },
    #[error("not a net: covering radius {covering_radius} is not below {threshold}")]
    NotANet { covering_radius: f64, threshold: f64 },
    #[error("no robot pair closer than {delta}")]
    NoPairsInRange { delta: f64 },
    #[error("no general position found within bound {bound} after {attempts} attempts (best min |det| {best_min_det})")]
    PerturbationFailed { bound: f64, attempts: usize, best_min_det: f64 },
}

/// Ordered robot positions `(a_1, ..., a_n)` on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmPosition {
    points: Vec<UnitVector>,
}

impl SwarmPosition {
    pub fn new(points: Vec<UnitVector>) -> Self {
        SwarmPosition { points }
    }

    #[inline]
    pub fn points(&self) -> &[UnitVector] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_points(&self) -> Vec<Point3> {
        self.points.iter().map(|p| *p.point()).collect()
    }

    pub fn rotated(&self, r: &Rotation3<f64>) -> SwarmPosition {
        SwarmPosition { points: self.points.iter().map(|p| p.rotated(r)).collect() }
    }

    /// `max_i |a_i − b_i|`.
    pub fn max_displacement(&self, other: &SwarmPosition) -> f64 {
        assert_eq!(self.len(), other.len());
        self.points.iter().zip(&other.points).map(|(a, b)| chord_distance(a, b)).fold(0.0, f64::max)
    }
}

/// Fibonacci lattice: `z_i = 1 − (2i+1)/n`, golden-angle azimuths.
pub fn fibonacci_sphere(n: usize) -> SwarmPosition {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let points = (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            UnitVector::from_spherical(z.acos(), golden * i as f64)
        })
        .collect();
    SwarmPosition { points }
}

/// Uniformly random rotation (Shoemake's construction).
pub fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(b * (tau * u3).cos(), a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin());
    UnitQuaternion::from_quaternion(q).to_rotation_matrix()
}

/// Fibonacci lattice under a seeded random rotation.
pub fn fibonacci_net(n: usize, seed: u64) -> SwarmPosition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fibonacci_sphere(n).rotated(&random_rotation(&mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringMethod {
    Exact,
    Sampled(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetReport {
    pub covering_radius: f64,
    pub witness_point: UnitVector,
    pub method: CoveringMethod,
    /// Threshold tested by `is_net`, when one was.
    pub is_net_for: Option<f64>,
}

impl NetReport {
    pub fn is_net(&self) -> Option<bool> {
        self.is_net_for.map(|r| self.covering_radius < r)
    }
}

pub fn covering_radius(positions: &SwarmPosition, method: CoveringMethod) -> Result<NetReport, SwarmError> {
    let n = positions.len();
    if n == 0 {
        return Err(SwarmError::TooFewPoints { n, needed: 1 });
    }
    if n == 1 {
        let p = positions.points()[0];
        return Ok(NetReport { covering_radius: 2.0, witness_point: p.antipode(), method, is_net_for: None });
    }
    let pts = positions.to_points();
    let site = NearestSite::new(&pts);
    let candidates = match method {
        CoveringMethod::Exact => voronoi_vertices(&pts)?,
        CoveringMethod::Sampled(m) => fibonacci_sphere(m.max(1)).to_points(),
    };
    let (radius, witness) = candidates
        .par_iter()
        .map(|q| (site.nearest(q).1, *q))
        .reduce(|| (f64::NEG_INFINITY, Point3::z()), |a, b| if b.0 > a.0 { b } else { a });
    let witness_point = UnitVector::normalize(witness).expect("candidate directions are unit");
    Ok(NetReport { covering_radius: radius, witness_point, method, is_net_for: None })
}

/// Candidate maximisers of the nearest-site distance: both circumcentre
/// directions of every hull facet (the spherical Voronoi vertices), the
/// antipodal midpoint of every hull edge (the farthest point of a Voronoi
/// edge when sites crowd into a hemisphere) and every site's antipode.
fn voronoi_vertices(pts: &[Point3]) -> Result<Vec<Point3>, SwarmError> {
    if coplanar_with_origin(pts) {
        return Err(SwarmError::DegenerateHull);
    }
    let input: Vec<parry3d_f64::math::Vector> =
        pts.iter().map(|p| parry3d_f64::math::Vector::new(p.x, p.y, p.z)).collect();
    let (verts, faces) =
        parry3d_f64::transformation::try_convex_hull(&input).map_err(|_| SwarmError::DegenerateHull)?;
    let v = |i: u32| {
        let w = verts[i as usize];
        Point3::new(w.x, w.y, w.z)
    };
    let mut out = Vec::with_capacity(5 * faces.len() + pts.len());
    for f in &faces {
        let (a, b, c) = (v(f[0]), v(f[1]), v(f[2]));
        let nrm = (b - a).cross(&(c - a));
        let len = nrm.norm();
        if len > 0.0 {
            out.push(nrm / len);
            out.push(-nrm / len);
        }
        for (p, q) in [(a, b), (b, c), (c, a)] {
            let m = p + q;
            if m.norm() > 1e-12 {
                out.push(-m.normalize());
            }
        }
    }
    if out.is_empty() {
        return Err(SwarmError::DegenerateHull);
    }
    out.extend(pts.iter().map(|p| -p));
    Ok(out)
}

fn coplanar_with_origin(pts: &[Point3]) -> bool {
    let a = pts[0];
    let Some(b) = pts.iter().find(|b| a.cross(b).norm() > 1e-9) else {
        return true; // all on one line through the origin
    };
    let u = a.cross(b).normalize();
    pts.iter().all(|p| p.dot(&u).abs() < 1e-12)
}

/// Covering radius below `radius`.
pub fn is_net(positions: &SwarmPosition, radius: f64) -> Result<bool, SwarmError> {
    Ok(covering_radius(positions, CoveringMethod::Exact)?.covering_radius < radius)
}

/// `δ′ = (6·cr + δ)/2`, requiring `6·cr < δ`.
pub fn delta_prime_from(covering_radius: f64, delta: f64) -> Result<f64, SwarmError> {
    if 6.0 * covering_radius >= delta {
        return Err(SwarmError::NotANet { covering_radius, threshold: delta / 6.0 });
    }
    Ok((6.0 * covering_radius + delta) / 2.0)
}

pub fn shrink_radius(positions: &SwarmPosition, delta: f64) -> Result<f64, SwarmError> {
    let cr = covering_radius(positions, CoveringMethod::Exact)?.covering_radius;
    delta_prime_from(cr, delta)
}

/// `det[a_i; a_j; a_k]`.
#[inline]
pub fn f_det(positions: &SwarmPosition, i: usize, j: usize, k: usize) -> f64 {
    let p = positions.points();
    det3(p[i].point(), p[j].point(), p[k].point())
}

#[inline]
pub fn det3(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    Matrix3::from_rows(&[a.transpose(), b.transpose(), c.transpose()]).determinant()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetMode {
    Full,
    Sampled(usize),
}

const TRIPLE_SEED: u64 = 0x5eed_7e1e;

/// Minimum `|f_ijk|` over all triples, or over `m` random distinct triples.
pub fn min_abs_det(positions: &SwarmPosition, mode: DetMode) -> f64 {
    let n = positions.len();
    if n < 3 {
        return f64::INFINITY;
    }
    let p = positions.to_points();
    match mode {
        DetMode::Full => (0..n)
            .into_par_iter()
            .map(|i| {
                let mut m = f64::INFINITY;
                for j in i + 1..n {
                    let c = p[i].cross(&p[j]);
                    for pk in &p[j + 1..] {
                        m = m.min(c.dot(pk).abs());
                    }
                }
                m
            })
            .reduce(|| f64::INFINITY, f64::min),
        DetMode::Sampled(m) => {
            let mut rng = ChaCha8Rng::seed_from_u64(TRIPLE_SEED);
            let mut best = f64::INFINITY;
            for _ in 0..m {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let mut k = rng.gen_range(0..n - 2);
                for lo in [i.min(j), i.max(j)] {
                    if k >= lo {
                        k += 1;
                    }
                }
                best = best.min(p[i].cross(&p[j]).dot(&p[k]).abs());
            }
            best
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralPositionOptions {
    /// Largest `n` checked over all triples.
    pub full_check_limit: usize,
    pub sampled_triples: usize,
    pub retry_cap: usize,
}

impl Default for GeneralPositionOptions {
    fn default() -> Self {
        GeneralPositionOptions { full_check_limit: 400, sampled_triples: 1_000_000, retry_cap: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationResult {
    pub virtual_position: SwarmPosition,
    /// `δo = max_i |o_i − o′_i|`.
    pub displacement: f64,
    pub min_det: f64,
    pub det_mode: DetMode,
    pub attempts: usize,
}

/// Result of the general-position screen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralityCheck {
    pub min_det: f64,
    pub mode: DetMode,
    pub coincident: bool,
    /// After rotating the last robot to the north pole, two other robots
    /// have longitudes equal mod π (a triple with the anchor is coplanar with
    /// the origin), or one sits on a pole.
    pub longitude_clash: bool,
}

impl GeneralityCheck {
    pub fn is_general(&self) -> bool {
        self.min_det > 0.0 && !self.coincident && !self.longitude_clash
    }
}

pub fn check_general(positions: &SwarmPosition, opts: &GeneralPositionOptions) -> GeneralityCheck {
    let n = positions.len();
    let mode = if n <= opts.full_check_limit { DetMode::Full } else { DetMode::Sampled(opts.sampled_triples) };
    let min_det = min_abs_det(positions, mode);
    let pts = positions.to_points();
    let coincident = n > 1 && {
        let grid = CellGrid::new(&pts, 1e-9);
        !grid.pairs(&pts, |_, _, d| d == 0.0).is_empty()
    };
    let longitude_clash = n > 1 && {
        let r = rotation_to_north(&positions.points()[n - 1]);
        let mut lons = Vec::with_capacity(n - 1);
        let mut on_pole = false;
        for p in &positions.points()[..n - 1] {
            let q = p.rotated(&r);
            match longitude(&q) {
                Ok(l) => lons.push(l),
                Err(_) => on_pole = true,
            }
        }
        // equal mod π means coplanar with the anchor and the origin
        let mut half: Vec<f64> = lons.iter().map(|l| l.rem_euclid(std::f64::consts::PI)).collect();
        half.sort_by(f64::total_cmp);
        let wrap = half.len() > 1 && half[0] + std::f64::consts::PI - half[half.len() - 1] <= LONGITUDE_SEPARATION;
        on_pole || wrap || half.windows(2).any(|w| w[1] - w[0] <= LONGITUDE_SEPARATION)
    };
    GeneralityCheck { min_det, mode, coincident, longitude_clash }
}

/// Longitudes closer than this are treated as equal.
pub const LONGITUDE_SEPARATION: f64 = 1e-12;

pub fn perturb_to_general(positions: &SwarmPosition, bound: f64, seed: u64) -> Result<PerturbationResult, SwarmError> {
    perturb_to_general_with(positions, bound, seed, &GeneralPositionOptions::default())
}

pub fn perturb_to_general_with(
    positions: &SwarmPosition,
    bound: f64,
    seed: u64,
    opts: &GeneralPositionOptions,
) -> Result<PerturbationResult, SwarmError> {
    let first = check_general(positions, opts);
    if first.is_general() {
        return Ok(PerturbationResult {
            virtual_position: positions.clone(),
            displacement: 0.0,
            min_det: first.min_det,
            det_mode: first.mode,
            attempts: 0,
        });
    }
    let mut best = if first.coincident { 0.0 } else { first.min_det };
    if !(bound > 0.0) {
        return Err(SwarmError::PerturbationFailed { bound, attempts: 0, best_min_det: best });
    }
    for attempt in 1..=opts.retry_cap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let moved = SwarmPosition::new(positions.points().iter().map(|p| jitter(p, bound, &mut rng)).collect());
        let check = check_general(&moved, opts);
        if check.is_general() {
            let displacement = positions.max_displacement(&moved);
            debug_assert!(displacement <= bound);
            return Ok(PerturbationResult {
                virtual_position: moved,
                displacement,
                min_det: check.min_det,
                det_mode: check.mode,
                attempts: attempt,
            });
        }
        if !check.coincident {
            best = best.max(check.min_det);
        }
    }
    Err(SwarmError::PerturbationFailed { bound, attempts: opts.retry_cap, best_min_det: best })
}

/// Uniform point of the tangent disk of radius `bound` at `p`, pushed back
/// onto the sphere. The chord to `p` is shorter than the tangent offset.
fn jitter(p: &UnitVector, bound: f64, rng: &mut impl Rng) -> UnitVector {
    let v = *p.point();
    let helper = if v.x.abs() < 0.9 { Point3::x() } else { Point3::y() };
    let e1 = v.cross(&helper).normalize();
    let e2 = v.cross(&e1);
    let r = bound * rng.gen::<f64>().sqrt();
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    UnitVector::normalize(v + e1 * (r * a.cos()) + e2 * (r * a.sin())).expect("offset from a unit vector")
}

/// `l_o = max{ |o_i − o_j| : |o_i − o_j| < δ }`.
pub fn l_o(positions: &SwarmPosition, delta: f64) -> Result<f64, SwarmError> {
    let pts = positions.to_points();
    if pts.len() < 2 || !(delta > 0.0) {
        return Err(SwarmError::NoPairsInRange { delta });
    }
    let grid = CellGrid::new(&pts, delta);
    let mut best: Option<f64> = None;
    for (i, p) in pts.iter().enumerate() {
        for j in grid.candidates(p) {
            if j > i {
                let d = (pts[j] - p).norm();
                if d < delta {
                    best = Some(best.map_or(d, |b| b.max(d)));
                }
            }
        }
    }
    best.ok_or(SwarmError::NoPairsInRange { delta })
}

pub const SAFETY_FACTOR: f64 = 0.99;

/// `0.99 · min{(δ − δ′)/6, l_o}`, or 0 when `δ′ ≥ δ`.
pub fn budget_from(delta: f64, delta_prime: f64, l_o: f64) -> f64 {
    SAFETY_FACTOR * ((delta - delta_prime) / 6.0).min(l_o).max(0.0)
}

pub fn perturbation_budget(positions: &SwarmPosition, delta: f64, delta_prime: f64) -> Result<f64, SwarmError> {
    Ok(budget_from(delta, delta_prime, l_o(positions, delta)?))
}

/// Samples per robot path used by `straightline_admissible`.
pub const ADMISSIBLE_PATH_SAMPLES: usize = 1000;

/// Every sub-network edge stays `< δ` along the straight line from `virt` to
/// `actual` (convexity: checking both ends suffices), and no sampled path
/// point enters the torus interior.
pub fn straightline_admissible(
    virt: &SwarmPosition,
    actual: &SwarmPosition,
    sub: &Network,
    delta: f64,
    torus: &ObstacleTorus,
) -> bool {
    if virt.len() != actual.len() || sub.n() != virt.len() {
        return false;
    }
    let (v, a) = (virt.points(), actual.points());
    let edges_ok = sub.edges().all(|(i, j)| chord_distance(&v[i], &v[j]) < delta && chord_distance(&a[i], &a[j]) < delta);
    edges_ok
        && v.par_iter().zip(a.par_iter()).all(|(p, q)| {
            (0..=ADMISSIBLE_PATH_SAMPLES).all(|s| {
                let t = s as f64 / ADMISSIBLE_PATH_SAMPLES as f64;
                !torus.is_interior(&(p.point() * (1.0 - t) + q.point() * t))
            })
        })
}

/// True when `p` is on a pole within `POLE_TOLERANCE`.
pub fn is_pole(p: &UnitVector) -> bool {
    p.x() * p.x() + p.y() * p.y() <= POLE_TOLERANCE
}
