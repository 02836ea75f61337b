use std::path::Path;
use std::process::{Command, Output};

use swarmnet_cli::{RunReport, Scenario};
use swarmnet_core::motion::Motion;
use swarmnet_core::swarm::SwarmPosition;
use swarmnet_core::triangulate::Triangulation;

fn swarmnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarmnet")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_net_check_net_and_triangulate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = swarmnet(&["gen-net", "--n", "4000", "--seed", "3", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let positions = dir.path().join("positions.json");
    let pos: SwarmPosition = read(&positions);
    assert_eq!(pos.len(), 4000);

    let p = positions.to_str().unwrap();
    assert_eq!(code(&swarmnet(&["check-net", p, "--delta", "0.3"])), 0);
    assert_eq!(code(&swarmnet(&["check-net", p, "--delta", "0.2"])), 1);
    assert_eq!(code(&swarmnet(&["check-net", p])), 2);

    let o = swarmnet(&["triangulate", p, "--delta", "0.3", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t: Triangulation = read(&dir.path().join("triangulation.json"));
    assert_eq!(t.euler_characteristic(), 2);
    // a 4000-robot net is not a 0.2/6-net
    assert_eq!(code(&swarmnet(&["triangulate", p, "--delta", "0.2", "--out", out])), 1);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&swarmnet(&["gen-net", "--n", "3", "--out", out])), 2);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&swarmnet(&["check-net", bad.to_str().unwrap(), "--delta", "0.3"])), 2);
    assert_eq!(code(&swarmnet(&["certify", "--delta", "0.35", "--out", out])), 2);
    assert_eq!(code(&swarmnet(&["certify", "--delta", "0.3", "--torus-tube", "0.5", "--torus-major", "0.4", "--out", out])), 2);
}

#[test]
fn literal_range_is_refused_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmnet(&["certify", "--delta", "0.006", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("millions"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn demo_is_certified_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let o = swarmnet(&["demo", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: RunReport = read(&a.join("report.json"));
    for name in &report.artifacts {
        assert!(a.join(name).exists(), "{name}");
    }
    assert_eq!(report.hash, report.compute_hash());
    let c = &report.certificate;
    assert_eq!(c.winding_timeline[0].winding, Some(1));
    assert_eq!(c.winding_final, Some(0));
    assert!(c.first_break.as_ref().is_some_and(|b| b.t <= c.t_bar));

    // the same scenario from a file, driven by the motion the demo wrote
    let scenario = dir.path().join("scenario.json");
    std::fs::write(&scenario, serde_json::to_string_pretty(&Scenario::demo()).unwrap()).unwrap();
    let motion: Motion = read(&a.join("motion.json"));
    assert_eq!(motion.n(), 4000);
    let b = dir.path().join("b");
    let o = swarmnet(&[
        "certify",
        scenario.to_str().unwrap(),
        "--motion",
        a.join("motion.json").to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let again: RunReport = read(&b.join("report.json"));
    assert_eq!(again.hash, report.hash);
    assert_eq!(read::<SwarmPosition>(&b.join("positions.json")), read::<SwarmPosition>(&a.join("positions.json")));
}

#[test]
fn stationary_motion_is_not_a_landing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&swarmnet(&["gen-net", "--n", "4000", "--seed", "1", "--out", out])), 0);
    let pos: SwarmPosition = read(&dir.path().join("positions.json"));
    let motion = dir.path().join("stay.json");
    std::fs::write(&motion, serde_json::to_string(&Motion::stationary(pos.to_points())).unwrap()).unwrap();
    let o = swarmnet(&["certify", "--motion", motion.to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("torus boundary"));
}
