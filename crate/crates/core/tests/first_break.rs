mod oracles;

use oracles::{first_break_dense, random_frames};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarmnet_core::geom::Point3;
use swarmnet_core::motion::{first_break, Motion};
use swarmnet_core::network::{network_at, RangeRule};

#[test]
fn closed_form_matches_dense_sampling() {
    let samples = 100_000;
    let step = 1.0 / samples as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut breaks = 0;
    for case in 0..50 {
        let frames = random_frames(8, 1 + case % 5, &mut rng);
        let m = frames.len() - 1;
        let motion = Motion::new((0..=m).map(|k| k as f64 / m as f64).collect(), frames.clone(), false).unwrap();
        let delta = 1.2;
        let sub = network_at(&frames[0], delta, RangeRule::Open);
        let edges: Vec<(usize, usize)> = sub.edges().collect();
        let exact = first_break(&motion, &sub, delta, RangeRule::Open);
        let dense = first_break_dense(&frames, &edges, delta, samples);
        match (exact, dense) {
            (Some(b), Some(t)) => {
                assert!(b.t <= t + 1e-12 && t - b.t <= step + 1e-12, "case {case}: {} vs {t}", b.t);
                breaks += 1;
            }
            (None, None) => {}
            (e, d) => panic!("case {case}: exact {e:?} dense {d:?}"),
        }
    }
    assert!(breaks > 40);
}

#[test]
fn two_robots_moving_apart() {
    let m = Motion::straight(
        &[Point3::zeros(), Point3::zeros()],
        &[Point3::new(1.0, 0.0, 0.0), Point3::new(-1.0, 0.0, 0.0)],
        0.0,
        1.0,
    )
    .unwrap();
    let sub = swarmnet_core::network::Network::from_edges(2, [(0, 1)]).unwrap();
    let b = first_break(&m, &sub, 1.0, RangeRule::Open).unwrap();
    assert!((b.t - 0.5).abs() <= 1e-12);
}
