//! Sphere points, chord metric, latitude circles, the obstacle torus and
//! radial projection.

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::swarm::SwarmPosition;

pub type Point3 = Vector3<f64>;

/// Allowed deviation of `|p|²` from 1 for a [`UnitVector`].
pub const NORM_TOLERANCE: f64 = 1e-12;
/// `x² + y²` at or below this is treated as a pole.
pub const POLE_TOLERANCE: f64 = 1e-24;
/// Half-width of the band around `|d - ε| = 0` reported as torus boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;
const ORIGIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("vector is not unit length (|p|² = {norm_sq})")]
    NotUnit { norm_sq: f64 },
    #[error("pole has no longitude")]
    PoleHasNoLongitude,
    #[error("origin cannot be radially projected")]
    OriginNotProjectable,
    #[error("latitude height {0} outside (-1, 1)")]
    InvalidLatitude(f64),
    #[error("invalid torus: major radius {major}, tube radius {tube} (need 0 < tube < major, major + tube < 1)")]
    InvalidTorus { major: f64, tube: f64 },
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector(Point3);

impl UnitVector {
    pub const NORTH: UnitVector = UnitVector(Vector3::new(0.0, 0.0, 1.0));
    pub const SOUTH: UnitVector = UnitVector(Vector3::new(0.0, 0.0, -1.0));

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeomError> {
        Self::try_from_point(Point3::new(x, y, z))
    }

    /// Accepts `p` only if it already has unit norm.
    pub fn try_from_point(p: Point3) -> Result<Self, GeomError> {
        let norm_sq = p.norm_squared();
        if (norm_sq - 1.0).abs() <= NORM_TOLERANCE && norm_sq.is_finite() {
            Ok(UnitVector(p))
        } else {
            Err(GeomError::NotUnit { norm_sq })
        }
    }

    /// Rescales `p` onto the sphere.
    pub fn normalize(p: Point3) -> Result<Self, GeomError> {
        let n = p.norm();
        if n <= ORIGIN_TOLERANCE || !n.is_finite() {
            return Err(GeomError::OriginNotProjectable);
        }
        Ok(UnitVector(p / n))
    }

    /// Spherical coordinates: `phi` is the polar angle from the north pole.
    pub fn from_spherical(phi: f64, theta: f64) -> Self {
        let (s, c) = phi.sin_cos();
        UnitVector(Point3::new(s * theta.cos(), s * theta.sin(), c))
    }

    #[inline]
    pub fn point(&self) -> &Point3 {
        &self.0
    }
    #[inline]
    pub fn x(&self) -> f64 {
        self.0.x
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.0.y
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.0.z
    }

    /// Distance from the z axis.
    #[inline]
    pub fn axial_radius(&self) -> f64 {
        self.0.x.hypot(self.0.y)
    }

    pub fn rotated(&self, r: &Rotation3<f64>) -> UnitVector {
        // rotations preserve the norm up to rounding; renormalise to keep the invariant tight
        let p = r * self.0;
        UnitVector(p / p.norm())
    }

    pub fn antipode(&self) -> UnitVector {
        UnitVector(-self.0)
    }
}

impl From<UnitVector> for [f64; 3] {
    fn from(u: UnitVector) -> Self {
        [u.0.x, u.0.y, u.0.z]
    }
}

impl TryFrom<[f64; 3]> for UnitVector {
    type Error = GeomError;
    fn try_from(a: [f64; 3]) -> Result<Self, Self::Error> {
        UnitVector::new(a[0], a[1], a[2])
    }
}

/// Euclidean (chord) distance `|a - b|`.
#[inline]
pub fn chord_distance(a: &UnitVector, b: &UnitVector) -> f64 {
    (a.0 - b.0).norm()
}

/// Longitude in `[0, 2π)`.
pub fn longitude(p: &UnitVector) -> Result<f64, GeomError> {
    if p.x() * p.x() + p.y() * p.y() <= POLE_TOLERANCE {
        return Err(GeomError::PoleHasNoLongitude);
    }
    Ok(wrap_angle(p.y().atan2(p.x())))
}

/// Maps any angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = a.rem_euclid(tau);
    if w >= tau {
        0.0
    } else {
        w
    }
}

/// The circle `S² ∩ {z = h}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatitudeCircle {
    h: f64,
}

impl LatitudeCircle {
    pub fn new(h: f64) -> Result<Self, GeomError> {
        if h.abs() < 1.0 {
            Ok(LatitudeCircle { h })
        } else {
            Err(GeomError::InvalidLatitude(h))
        }
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        (1.0 - self.h * self.h).sqrt()
    }

    pub fn point_at(&self, longitude: f64) -> UnitVector {
        let r = self.radius();
        UnitVector(Point3::new(r * longitude.cos(), r * longitude.sin(), self.h))
    }
}

/// `min_{q ∈ L} |p - q|`. The nearest point of `L` shares the longitude of
/// `p`; for a pole every point of `L` is nearest and the same formula holds.
pub fn point_to_latitude_distance(p: &UnitVector, l: &LatitudeCircle) -> f64 {
    let dr = p.axial_radius() - l.radius();
    let dz = p.z() - l.height();
    dr.hypot(dz)
}

/// The solid torus `{ z² + (r - R)² ≤ ε² }` around the core circle
/// `{ x² + y² = R², z = 0 }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TorusParams", into = "TorusParams")]
pub struct ObstacleTorus {
    major_radius: f64,
    tube_radius: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct TorusParams {
    major_radius: f64,
    tube_radius: f64,
}

impl TryFrom<TorusParams> for ObstacleTorus {
    type Error = GeomError;
    fn try_from(p: TorusParams) -> Result<Self, Self::Error> {
        ObstacleTorus::new(p.major_radius, p.tube_radius)
    }
}

impl From<ObstacleTorus> for TorusParams {
    fn from(t: ObstacleTorus) -> Self {
        TorusParams { major_radius: t.major_radius, tube_radius: t.tube_radius }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorusRegion {
    Interior,
    Boundary,
    Exterior,
}

impl ObstacleTorus {
    pub fn new(major_radius: f64, tube_radius: f64) -> Result<Self, GeomError> {
        let ok = tube_radius > 0.0 && tube_radius < major_radius && major_radius + tube_radius < 1.0;
        if ok {
            Ok(ObstacleTorus { major_radius, tube_radius })
        } else {
            Err(GeomError::InvalidTorus { major: major_radius, tube: tube_radius })
        }
    }

    #[inline]
    pub fn major_radius(&self) -> f64 {
        self.major_radius
    }
    #[inline]
    pub fn tube_radius(&self) -> f64 {
        self.tube_radius
    }

    /// Distance from `p` to the core circle.
    #[inline]
    pub fn core_distance(&self, p: &Point3) -> f64 {
        let r = p.x.hypot(p.y);
        p.z.hypot(r - self.major_radius)
    }

    /// Distance from `p` to the solid torus (zero inside).
    #[inline]
    pub fn distance_to_solid(&self, p: &Point3) -> f64 {
        (self.core_distance(p) - self.tube_radius).max(0.0)
    }

    pub fn classify(&self, p: &Point3) -> TorusRegion {
        let d = self.core_distance(p);
        if (d - self.tube_radius).abs() <= BOUNDARY_TOLERANCE {
            TorusRegion::Boundary
        } else if d < self.tube_radius {
            TorusRegion::Interior
        } else {
            TorusRegion::Exterior
        }
    }

    #[inline]
    pub fn is_interior(&self, p: &Point3) -> bool {
        self.classify(p) == TorusRegion::Interior
    }

    pub fn core_point(&self, azimuth: f64) -> Point3 {
        Point3::new(self.major_radius * azimuth.cos(), self.major_radius * azimuth.sin(), 0.0)
    }

    /// Point at distance `offset` from the core along the tube direction
    /// `tube_angle` (0 points away from the z axis, π/2 points up).
    pub fn tube_point(&self, azimuth: f64, tube_angle: f64, offset: f64) -> Point3 {
        let r = self.major_radius + offset * tube_angle.cos();
        Point3::new(r * azimuth.cos(), r * azimuth.sin(), offset * tube_angle.sin())
    }

    pub fn boundary_point(&self, azimuth: f64, tube_angle: f64) -> Point3 {
        self.tube_point(azimuth, tube_angle, self.tube_radius)
    }

    /// Azimuth and tube angle of `p` in its own half-plane. Points on the z axis
    /// use `fallback_azimuth`; points on the core circle get tube angle 0.
    pub fn tube_coordinates(&self, p: &Point3, fallback_azimuth: f64) -> (f64, f64) {
        let r = p.x.hypot(p.y);
        let azimuth = if r * r <= POLE_TOLERANCE { fallback_azimuth } else { p.y.atan2(p.x) };
        let dr = r - self.major_radius;
        let tube_angle = if dr == 0.0 && p.z == 0.0 { 0.0 } else { p.z.atan2(dr) };
        (azimuth, tube_angle)
    }

    /// The closest point of `∂𝔓` to `p`.
    pub fn nearest_boundary_point(&self, p: &Point3, fallback_azimuth: f64) -> Point3 {
        let (azimuth, tube_angle) = self.tube_coordinates(p, fallback_azimuth);
        self.boundary_point(azimuth, tube_angle)
    }
}

pub fn torus_classify(p: &Point3, t: &ObstacleTorus) -> TorusRegion {
    t.classify(p)
}

/// Rotation taking `positions[index]` to the north pole, with the rotated
/// positions.
pub fn rotate_to_north(positions: &SwarmPosition, index: usize) -> (Rotation3<f64>, SwarmPosition) {
    let r = rotation_to_north(&positions.points()[index]);
    (r, positions.rotated(&r))
}

pub fn rotation_to_north(p: &UnitVector) -> Rotation3<f64> {
    let north = Point3::z();
    if (p.0 - north).norm() == 0.0 {
        return Rotation3::identity();
    }
    match Rotation3::rotation_between(&p.0, &north) {
        Some(r) => r,
        // antiparallel: half turn about any horizontal axis
        None => Rotation3::from_axis_angle(&Unit::new_normalize(Point3::x()), std::f64::consts::PI),
    }
}

/// `p / |p|` together with `b_p = 1 / |p|`.
pub fn radial_project(p: &Point3) -> Result<(UnitVector, f64), GeomError> {
    let n = p.norm();
    if n <= ORIGIN_TOLERANCE {
        return Err(GeomError::OriginNotProjectable);
    }
    Ok((UnitVector(p / n), 1.0 / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn uv(x: f64, y: f64, z: f64) -> UnitVector {
        UnitVector::normalize(Point3::new(x, y, z)).unwrap()
    }

    fn arb_unit() -> impl Strategy<Value = UnitVector> {
        (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU)
            .prop_map(|(z, t)| UnitVector::from_spherical(z.acos(), t))
    }

    #[test]
    fn chord_examples() {
        assert_eq!(chord_distance(&UnitVector::NORTH, &UnitVector::SOUTH), 2.0);
        let p = uv(0.3, -0.2, 0.9);
        assert_eq!(chord_distance(&p, &p), 0.0);
        let d = chord_distance(&uv(1.0, 0.0, 0.0), &uv(0.0, 1.0, 0.0));
        assert_relative_eq!(d, 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn unit_vector_rejects_non_unit() {
        assert!(UnitVector::new(1.0, 1.0, 0.0).is_err());
        assert!(UnitVector::new(1.0 + 1e-14, 0.0, 0.0).is_ok());
        assert!(UnitVector::try_from([0.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn longitude_examples() {
        assert_eq!(longitude(&uv(1.0, 0.0, 0.0)).unwrap(), 0.0);
        assert_relative_eq!(longitude(&uv(0.0, -1.0, 0.0)).unwrap(), 1.5 * PI, epsilon = 1e-15);
        assert_eq!(longitude(&UnitVector::NORTH), Err(GeomError::PoleHasNoLongitude));
    }

    #[test]
    fn latitude_distance_examples() {
        let eq = LatitudeCircle::new(0.0).unwrap();
        assert_eq!(point_to_latitude_distance(&eq.point_at(1.3), &eq), 0.0);
        assert_relative_eq!(point_to_latitude_distance(&UnitVector::NORTH, &eq), 2f64.sqrt(), epsilon = 1e-15);
        let p = UnitVector::new(0.75f64.sqrt(), 0.0, 0.5).unwrap();
        // oracle: brute-force minimum over dense samples of the circle
        let brute = (0..200_000)
            .map(|i| chord_distance(&p, &eq.point_at(i as f64 * std::f64::consts::TAU / 200_000.0)))
            .fold(f64::INFINITY, f64::min);
        let d = point_to_latitude_distance(&p, &eq);
        assert_relative_eq!(d, brute, epsilon = 1e-9);
        assert_relative_eq!(d, 0.517638, epsilon = 1e-6);
        assert!(LatitudeCircle::new(1.0).is_err());
    }

    #[test]
    fn torus_examples() {
        let t = ObstacleTorus::new(0.1, 0.008).unwrap();
        assert_eq!(t.classify(&Point3::new(0.1, 0.0, 0.0)), TorusRegion::Interior);
        assert_eq!(t.classify(&Point3::new(0.1, 0.0, 0.008)), TorusRegion::Boundary);
        assert_eq!(t.classify(&Point3::new(0.0, 0.0, 1.0)), TorusRegion::Exterior);
        assert!(ObstacleTorus::new(0.4, 0.5).is_err());
        assert!(ObstacleTorus::new(0.6, 0.5).is_err());
        assert!(ObstacleTorus::new(0.4, 0.0).is_err());
    }

    #[test]
    fn nearest_boundary_point_matches_grid_search() {
        let t = ObstacleTorus::new(0.4, 0.35).unwrap();
        let p = Point3::new(0.0, 0.0, 1.0);
        let b = t.nearest_boundary_point(&p, 0.0);
        assert_eq!(t.classify(&b), TorusRegion::Boundary);
        let mut best = f64::INFINITY;
        for i in 0..720 {
            for j in 0..720 {
                let q = t.boundary_point(i as f64 * PI / 360.0, j as f64 * PI / 360.0);
                best = best.min((q - p).norm());
            }
        }
        assert!((b - p).norm() <= best + 1e-12);
        assert!((b - p).norm() > best - 1e-4);
    }

    #[test]
    fn rotate_to_north_examples() {
        let pos = SwarmPosition::new(vec![uv(1.0, 0.0, 0.0), UnitVector::NORTH, uv(0.2, 0.3, -0.5)]);
        let (r, out) = rotate_to_north(&pos, 1);
        assert_eq!(r, Rotation3::identity());
        assert_eq!(out.points()[1], UnitVector::NORTH);
        let (_, out) = rotate_to_north(&pos, 0);
        assert!(chord_distance(&out.points()[0], &UnitVector::NORTH) < 1e-15);
        let south = SwarmPosition::new(vec![UnitVector::SOUTH]);
        let (_, out) = rotate_to_north(&south, 0);
        assert!(chord_distance(&out.points()[0], &UnitVector::NORTH) < 1e-15);
    }

    #[test]
    fn radial_project_examples() {
        let (u, b) = radial_project(&Point3::new(0.0, 0.0, 0.5)).unwrap();
        assert_eq!(u, UnitVector::NORTH);
        assert_eq!(b, 2.0);
        let w = uv(0.3, 0.4, -0.2);
        let (u, b) = radial_project(w.point()).unwrap();
        assert!(chord_distance(&u, &w) < 1e-15);
        assert_relative_eq!(b, 1.0, epsilon = 1e-15);
        assert_eq!(radial_project(&Point3::zeros()), Err(GeomError::OriginNotProjectable));
    }

    proptest! {
        #[test]
        fn chord_triangle_inequality(a in arb_unit(), b in arb_unit(), c in arb_unit()) {
            let ab = chord_distance(&a, &b);
            prop_assert!(ab >= 0.0 && ab <= 2.0 + 1e-15);
            prop_assert!((ab - chord_distance(&b, &a)).abs() == 0.0);
            prop_assert!(chord_distance(&a, &c) <= ab + chord_distance(&b, &c) + 1e-12);
        }

        #[test]
        fn radial_projection_of_chord_triangle_scales_out(
            a in arb_unit(), b in arb_unit(), c in arb_unit(), s in 0.0f64..1.0, u in 0.0f64..1.0
        ) {
            let (s1, s2) = (s, (1.0 - s) * u);
            let p = a.point() * s1 + b.point() * s2 + c.point() * (1.0 - s1 - s2);
            prop_assume!(p.norm() > 1e-9);
            let (_, bp) = radial_project(&p).unwrap();
            prop_assert!(bp >= 1.0 - 1e-12);
        }

        #[test]
        fn rotate_then_inverse_is_identity(pts in proptest::collection::vec(arb_unit(), 1..20), idx in 0usize..20) {
            let pos = SwarmPosition::new(pts);
            let idx = idx % pos.len();
            let (r, out) = rotate_to_north(&pos, idx);
            prop_assert!(chord_distance(&out.points()[idx], &UnitVector::NORTH) < 1e-12);
            let back = out.rotated(&r.inverse());
            for (p, q) in pos.points().iter().zip(back.points()) {
                prop_assert!((q.point().norm() - 1.0).abs() < 1e-12);
                prop_assert!(chord_distance(p, q) < 1e-12);
            }
        }

        #[test]
        fn interior_points_are_within_tube_of_core(
            az in 0.0f64..6.3, ang in 0.0f64..6.3, off in 0.0f64..0.5
        ) {
            let t = ObstacleTorus::new(0.4, 0.35).unwrap();
            let p = t.tube_point(az, ang, off);
            if t.classify(&p) == TorusRegion::Interior {
                // distance to the core through the nearest core point in p's half-plane
                let core = t.core_point(p.y.atan2(p.x));
                prop_assert!((p - core).norm() < t.tube_radius());
            }
        }
    }
}
