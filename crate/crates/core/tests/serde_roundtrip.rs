use swarmnet_core::geom::{ObstacleTorus, Point3};
use swarmnet_core::motion::{generate_landing_motion, LandingOptions, LandingStrategy, Motion};
use swarmnet_core::network::Network;
use swarmnet_core::swarm::{fibonacci_net, SwarmPosition};
use swarmnet_core::triangulate::{build_triangulation, BuildOptions, Triangulation};

fn roundtrip<T: serde::Serialize + serde::de::DeserializeOwned + PartialEq + std::fmt::Debug>(x: &T) {
    let s = serde_json::to_string(x).unwrap();
    let y: T = serde_json::from_str(&s).unwrap();
    assert_eq!(&y, x);
    assert_eq!(serde_json::to_string(&y).unwrap(), s);
}

#[test]
fn artifacts_roundtrip_bit_exact() {
    let pos = fibonacci_net(1500, 3);
    roundtrip(&pos);
    let torus = ObstacleTorus::new(0.4, 0.35).unwrap();
    roundtrip(&torus);
    let b = build_triangulation(&pos, 0.5, &torus, &BuildOptions::default()).unwrap();
    roundtrip::<Triangulation>(&b.triangulation);
    roundtrip::<Network>(&b.sub_network);
    roundtrip(&b.perturbation);
    let few = SwarmPosition::new(pos.points()[..20].to_vec());
    let m = generate_landing_motion(&few.to_points(), &torus, LandingStrategy::Spread, 1, &LandingOptions::default()).unwrap();
    roundtrip::<Motion>(&m);
}

#[test]
fn invalid_artifacts_are_rejected() {
    assert!(serde_json::from_str::<SwarmPosition>(r#"{"points":[[1.0,1.0,0.0]]}"#).is_err());
    assert!(serde_json::from_str::<Network>(r#"{"n":2,"edges":[[0,2]]}"#).is_err());
    assert!(serde_json::from_str::<ObstacleTorus>(r#"{"major_radius":0.4,"tube_radius":0.5}"#).is_err());
    let bad = Motion::new(vec![0.0, 0.0], vec![vec![Point3::zeros()], vec![Point3::zeros()]], false);
    assert!(bad.is_err());
    assert!(serde_json::from_str::<Motion>(r#"{"breakpoints":[0.0,1.0],"frames":[[[0,0,0]],[]],"landing":false}"#).is_err());
}
