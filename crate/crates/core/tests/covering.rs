mod oracles;

use oracles::{covering_radius_oracle, random_unit, P};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarmnet_core::geom::UnitVector;
use swarmnet_core::swarm::{covering_radius, CoveringMethod, SwarmPosition};

fn position(points: &[P]) -> SwarmPosition {
    SwarmPosition::new(points.iter().map(|p| UnitVector::normalize(*p).unwrap()).collect())
}

fn exact(points: &[P]) -> f64 {
    covering_radius(&position(points), CoveringMethod::Exact).unwrap().covering_radius
}

#[test]
fn exact_matches_sampling_with_ascent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20u64 {
        let n = 4 + (case as usize * 7) % 47;
        let pts: Vec<P> = (0..n).map(|_| random_unit(&mut rng)).collect();
        let e = exact(&pts);
        let o = covering_radius_oracle(&pts, 200_000, case);
        assert!(o <= e + 1e-9, "case {case}: oracle {o} above exact {e}");
        assert!(e - o < 1e-3, "case {case}: exact {e} oracle {o}");
    }
}

#[test]
fn platonic_values() {
    let s = 1.0 / 3f64.sqrt();
    let tetra = [P::new(s, s, s), P::new(s, -s, -s), P::new(-s, s, -s), P::new(-s, -s, s)];
    // the farthest point is a vertex's antipode; v·w = −1/3 gives chord √(2 − 2/3)
    assert!((exact(&tetra) - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert!((exact(&tetra) - 1.1547).abs() < 1e-3);
    let octa = [P::x(), -P::x(), P::y(), -P::y(), P::z(), -P::z()];
    // face centre (1,1,1)/√3 to a vertex
    let want = (2.0 - 2.0 / 3f64.sqrt()).sqrt();
    assert!((exact(&octa) - want).abs() < 1e-12);
    assert!((exact(&octa) - 0.9194).abs() < 1e-3);
}

#[test]
fn sites_in_a_hemisphere() {
    // three sites near the north pole: the farthest point is the south pole region
    let pts = [P::new(0.1, 0.0, 1.0).normalize(), P::new(-0.05, 0.09, 1.0).normalize(), P::new(-0.05, -0.09, 1.0).normalize()];
    let o = covering_radius_oracle(&pts, 200_000, 1);
    assert!((exact(&pts) - o).abs() < 1e-6);
    // two-site clusters: the maximiser lies inside a Voronoi edge
    let pts = [P::new(1.0, 0.0, 0.2).normalize(), P::new(1.0, 0.1, 0.0).normalize(), P::new(1.0, 0.0, -0.2).normalize(), P::new(0.98, -0.1, 0.0).normalize()];
    let o = covering_radius_oracle(&pts, 200_000, 2);
    assert!((exact(&pts) - o).abs() < 1e-6);
}

#[test]
fn sampled_method_is_a_lower_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts: Vec<P> = (0..40).map(|_| random_unit(&mut rng)).collect();
    let pos = position(&pts);
    let e = covering_radius(&pos, CoveringMethod::Exact).unwrap().covering_radius;
    let s = covering_radius(&pos, CoveringMethod::Sampled(50_000)).unwrap().covering_radius;
    assert!(s <= e + 1e-12 && e - s < 0.05);
}

