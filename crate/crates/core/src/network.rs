//! Proximity communication networks `[p_ij]`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point3;
use crate::spatial::CellGrid;

/// Which distances count as "in range".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeRule {
    /// Edge iff `d < δ`; an edge is broken once `d ≥ δ`.
    #[default]
    Open,
    /// Edge iff `d ≤ δ`; an edge is broken once `d > δ`.
    Closed,
}

impl RangeRule {
    #[inline]
    pub fn in_range(self, d: f64, delta: f64) -> bool {
        match self {
            RangeRule::Open => d < delta,
            RangeRule::Closed => d <= delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("edge ({0}, {1}) is a loop or out of range for n = {2}")]
    BadEdge(usize, usize, usize),
}

/// Symmetric adjacency with zero diagonal, stored as the set of pairs `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork")]
pub struct Network {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Deserialize)]
struct RawNetwork {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawNetwork> for Network {
    type Error = NetworkError;
    fn try_from(r: RawNetwork) -> Result<Self, Self::Error> {
        Network::from_edges(r.n, r.edges)
    }
}

impl Network {
    pub fn empty(n: usize) -> Self {
        Network { n, edges: BTreeSet::new() }
    }

    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Result<Self, NetworkError> {
        let mut net = Network::empty(n);
        for (i, j) in edges {
            net.insert(i, j)?;
        }
        Ok(net)
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<bool, NetworkError> {
        if i == j || i >= self.n || j >= self.n {
            return Err(NetworkError::BadEdge(i, j, self.n));
        }
        Ok(self.edges.insert(ordered(i, j)))
    }

    pub fn remove(&mut self, i: usize, j: usize) -> bool {
        self.edges.remove(&ordered(i, j))
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.contains(&ordered(i, j))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in increasing `(i, j)` order; an edge's position in this order
    /// is its edge id.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// `p′_ij = 1 ⇒ p_ij = 1`.
    pub fn is_subnetwork_of(&self, other: &Network) -> bool {
        self.n == other.n && self.edges.is_subset(&other.edges)
    }

    /// Edges of `self` that are missing from `other`.
    pub fn missing_from(&self, other: &Network) -> Vec<(usize, usize)> {
        self.edges.difference(&other.edges).copied().collect()
    }
}

#[inline]
pub fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// `p_ij = 1` iff robots `i ≠ j` are in range under `rule`.
pub fn network_at(points: &[Point3], delta: f64, rule: RangeRule) -> Network {
    let n = points.len();
    if n < 2 || !(delta > 0.0) {
        return Network::empty(n);
    }
    let grid = CellGrid::new(points, delta);
    let pairs = grid.pairs(points, |_, _, d| rule.in_range(d, delta));
    Network { n, edges: pairs.into_iter().collect() }
}
