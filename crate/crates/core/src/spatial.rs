//! Neighbour queries. Nearest-site lookups on sphere points go through a
//! kiddo k-d tree; fixed-radius pair enumeration uses a uniform cell grid,
//! which tolerates arbitrarily many points sharing a coordinate.

use std::collections::HashMap;

use kiddo::{KdTree, SquaredEuclidean};
use nalgebra::{Rotation3, Unit, Vector3};

use crate::geom::Point3;

/// Fixed generic rotation applied to tree coordinates so that lattice-like
/// inputs (many points with z = 0, say) do not overflow a kiddo bucket. More
/// than 32 exactly coincident sites still would.
fn scrambler() -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(0.31, 0.57, 0.76)), 0.913)
}

pub struct NearestSite {
    tree: KdTree<f64, 3>,
    rot: Rotation3<f64>,
    points: Vec<Point3>,
}

impl NearestSite {
    pub fn new(points: &[Point3]) -> Self {
        let rot = scrambler();
        let mut tree = KdTree::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            tree.add(&(rot * p).into(), i as u64);
        }
        NearestSite { tree, rot, points: points.to_vec() }
    }

    /// Index of and Euclidean distance to the closest site.
    pub fn nearest(&self, q: &Point3) -> (usize, f64) {
        let nn = self.tree.nearest_one::<SquaredEuclidean>(&(self.rot * q).into());
        let i = nn.item as usize;
        // distance recomputed in the original frame
        (i, (self.points[i] - q).norm())
    }
}

/// Uniform grid with cell side `cell`, answering "all points within r" for
/// `r ≤ cell`.
pub struct CellGrid {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl CellGrid {
    pub fn new(points: &[Point3], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite());
        let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i);
        }
        CellGrid { cell, cells }
    }

    fn key(p: &Point3, cell: f64) -> (i64, i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64)
    }

    /// Indices of points in the 27 cells around `q`; a superset of the
    /// points within `cell` of `q`.
    pub fn candidates<'a>(&'a self, q: &Point3) -> impl Iterator<Item = usize> + 'a {
        let (a, b, c) = Self::key(q, self.cell);
        (-1..=1).flat_map(move |dx| {
            (-1..=1).flat_map(move |dy| {
                (-1..=1).flat_map(move |dz| {
                    self.cells.get(&(a + dx, b + dy, c + dz)).into_iter().flatten().copied()
                })
            })
        })
    }

    /// All unordered pairs `(i, j)`, `i < j`, whose distance satisfies `keep`.
    /// `keep` is only consulted for pairs closer than about `cell`.
    pub fn pairs<F: Fn(usize, usize, f64) -> bool>(&self, points: &[Point3], keep: F) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, p) in points.iter().enumerate() {
            for j in self.candidates(p) {
                if j > i && keep(i, j, (points[j] - p).norm()) {
                    out.push((i, j));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_matches_brute_force_with_repeated_coordinates() {
        let mut pts = Vec::new();
        for i in 0..3000 {
            pts.push(Point3::new((i % 50) as f64 * 0.02, (i / 50) as f64 * 0.02, 0.0));
        }
        pts.push(Point3::new(0.33, 0.48, 0.9));
        let ns = NearestSite::new(&pts);
        let q = Point3::new(0.31, 0.5, 0.95);
        let (_, d) = ns.nearest(&q);
        let brute = pts.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min);
        assert_eq!(d, brute);
    }

    #[test]
    fn grid_pairs_match_brute_force() {
        let mut pts: Vec<Point3> = (0..400)
            .map(|i| {
                let t = i as f64 * 0.61803398875;
                Point3::new(t.fract(), (t * 1.7).fract(), 0.0)
            })
            .collect();
        pts.extend(std::iter::repeat(Point3::new(0.5, 0.5, 0.0)).take(50));
        let r = 0.07;
        let g = CellGrid::new(&pts, r);
        let got = g.pairs(&pts, |_, _, d| d < r);
        let mut want = Vec::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if (pts[i] - pts[j]).norm() < r {
                    want.push((i, j));
                }
            }
        }
        assert_eq!(got, want);
    }
}
