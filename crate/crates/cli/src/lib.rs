//! Scenario files, the command pipeline and run reports for the `swarmnet`
//! binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use swarmnet_core::motion::{
    certify_theorem, generate_landing_motion, verify_motion, Certificate, CertifyOptions, LandingOptions, Motion,
    Verdict,
};
use swarmnet_core::swarm::{covering_radius, fibonacci_net, CoveringMethod, NetReport, SwarmPosition, SwarmError};
use swarmnet_core::triangulate::{build_triangulation, validate_triangulation, Build, BuildOptions, ValidationReport};

mod scenario;

pub use scenario::{capacity_estimate, check_capacity, CapacityEstimate, NetGenerator, Scenario, Tolerances, DESK_LIMIT};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or invalid input; exit code 2.
    #[error("input error: {0}")]
    Input(String),
    /// The computation ran and the answer is negative; exit code 1.
    #[error("{0}")]
    Domain(String),
    /// A constructed object failed its own checks; exit code 3.
    #[error("internal assertion failed: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(path)
}

pub fn gen_net(n: usize, seed: u64) -> Result<(SwarmPosition, NetReport), CliError> {
    if n < 4 {
        return Err(CliError::Input(format!("gen-net needs n ≥ 4, got {n}")));
    }
    let pos = fibonacci_net(n, seed);
    let report = covering_radius(&pos, CoveringMethod::Exact).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok((pos, report))
}

/// Covering report with `is_net_for = δ/6`.
pub fn check_net(pos: &SwarmPosition, delta: f64) -> Result<NetReport, CliError> {
    let mut report = covering_radius(pos, CoveringMethod::Exact).map_err(|e| match e {
        SwarmError::DegenerateHull | SwarmError::TooFewPoints { .. } => CliError::Domain(e.to_string()),
        e => CliError::Internal(e.to_string()),
    })?;
    report.is_net_for = Some(delta / 6.0);
    Ok(report)
}

pub fn triangulate(pos: &SwarmPosition, delta: f64, scenario: &Scenario) -> Result<(Build, ValidationReport), CliError> {
    let opts = BuildOptions { seed: scenario.seed, ..BuildOptions::default() };
    let build =
        build_triangulation(pos, delta, &scenario.torus, &opts).map_err(|e| CliError::Domain(format!("{e}")))?;
    let validation = validate_triangulation(&build.triangulation, &build.perturbation.virtual_position, build.delta_prime);
    if !validation.is_valid() {
        return Err(CliError::Internal(format!(
            "triangulation has {} violations, first {:?}",
            validation.violations.len(),
            validation.violations[0]
        )));
    }
    Ok((build, validation))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSummary {
    pub budget: f64,
    pub displacement: f64,
    pub min_det: f64,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangulationStats {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub max_edge_length: f64,
    pub delta_prime: f64,
    pub k: i32,
    pub violations: usize,
    pub robot_face_inversions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub net: NetReport,
    pub perturbation: PerturbationSummary,
    pub triangulation: TriangulationStats,
    pub certificate: Certificate,
    /// Artifact files written next to the report.
    pub artifacts: Vec<String>,
    pub timings: Vec<Timing>,
    /// SHA-256 of the report without `timings` and this field.
    pub hash: String,
}

impl RunReport {
    pub fn compute_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        let obj = v.as_object_mut().expect("report is an object");
        obj.remove("timings");
        obj.remove("hash");
        let digest = Sha256::digest(serde_json::to_string(&v).expect("value serializes").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Tab-separated `t, winding, max_sub_edge_distance`.
pub fn plot_table(c: &Certificate) -> String {
    let mut out = String::from("t\twinding\tmax_sub_edge_distance\n");
    for s in &c.winding_timeline {
        let w = s.winding.map_or_else(|| "NA".to_string(), |w| w.to_string());
        out.push_str(&format!("{}\t{}\t{}\n", s.t, w, s.max_sub_edge_distance));
    }
    out
}

/// Everything `certify` writes, before it is written.
pub struct CertifyRun {
    pub report: RunReport,
    pub positions: SwarmPosition,
    pub build: Build,
    pub motion: Motion,
}

pub fn load_positions(scenario: &Scenario) -> Result<SwarmPosition, CliError> {
    match &scenario.net {
        NetGenerator::Fibonacci => Ok(fibonacci_net(scenario.n, scenario.seed)),
        NetGenerator::File(p) => read_json(p),
    }
}

/// gen/load → triangulate → landing motion → certificate.
pub fn run_certify(scenario: &Scenario, motion: Option<Motion>, force: bool) -> Result<CertifyRun, CliError> {
    scenario.validate()?;
    check_capacity(scenario.delta, force)?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |stage: &str, timings: &mut Vec<Timing>| {
        timings.push(Timing { stage: stage.to_string(), seconds: clock.elapsed().as_secs_f64() });
        clock = Instant::now();
    };

    let positions = load_positions(scenario)?;
    let net = check_net(&positions, scenario.delta)?;
    lap("net", &mut timings);
    let (build, validation) = triangulate(&positions, scenario.delta, scenario)?;
    lap("triangulate", &mut timings);
    let motion = match motion {
        Some(m) => m,
        None => generate_landing_motion(
            &positions.to_points(),
            &scenario.torus,
            scenario.strategy,
            scenario.seed,
            &LandingOptions::default(),
        )
        .map_err(|e| CliError::Domain(format!("landing motion: {e}")))?,
    };
    if motion.n() != positions.len() {
        return Err(CliError::Input(format!("motion has {} robots, net has {}", motion.n(), positions.len())));
    }
    let check = verify_motion(&motion, &scenario.torus, scenario.tolerances.motion_samples);
    if check.interior_sample.is_some() {
        return Err(CliError::Domain(format!("motion enters the torus: {:?}", check.interior_sample)));
    }
    lap("motion", &mut timings);
    let opts = CertifyOptions {
        range_rule: scenario.tolerances.range_rule,
        timeline_samples: scenario.tolerances.timeline_samples,
        motion_samples: scenario.tolerances.motion_samples,
        ..CertifyOptions::default()
    };
    let certificate = certify_theorem(&positions, scenario.delta, &scenario.torus, &build, &motion, &opts)
        .map_err(|e| CliError::Domain(format!("certify: {e}")))?;
    lap("certify", &mut timings);

    let t = &build.triangulation;
    let mut report = RunReport {
        scenario: scenario.clone(),
        net,
        perturbation: PerturbationSummary {
            budget: build.budget,
            displacement: build.perturbation.displacement,
            min_det: build.perturbation.min_det,
            attempts: build.perturbation.attempts,
        },
        triangulation: TriangulationStats {
            vertices: validation.vertices,
            edges: validation.edges,
            faces: validation.faces,
            euler_characteristic: validation.euler_characteristic,
            max_edge_length: t.max_edge_length(&build.perturbation.virtual_position),
            delta_prime: build.delta_prime,
            k: build.bands.k(),
            violations: validation.violations.len(),
            robot_face_inversions: validation.robot_face_inversions,
        },
        certificate,
        artifacts: ARTIFACTS.iter().map(|s| s.to_string()).collect(),
        timings,
        hash: String::new(),
    };
    report.hash = report.compute_hash();
    Ok(CertifyRun { report, positions, build, motion })
}

const ARTIFACTS: [&str; 7] = [
    "positions.json",
    "triangulation.json",
    "subnetwork.json",
    "perturbation.json",
    "motion.json",
    "certificate.json",
    "plot.tsv",
];

pub fn write_certify(run: &CertifyRun, out: &Path) -> Result<(), CliError> {
    write_json(out, "positions.json", &run.positions)?;
    write_json(out, "triangulation.json", &run.build.triangulation)?;
    write_json(out, "subnetwork.json", &run.build.sub_network)?;
    write_json(out, "perturbation.json", &run.build.perturbation)?;
    write_json(out, "motion.json", &run.motion)?;
    write_json(out, "certificate.json", &run.report.certificate)?;
    let plot = out.join("plot.tsv");
    fs::write(&plot, plot_table(&run.report.certificate)).map_err(|e| io_err(&plot, e))?;
    write_json(out, "report.json", &run.report)?;
    Ok(())
}

/// Exit status for a finished certificate.
pub fn verdict_result(c: &Certificate) -> Result<(), CliError> {
    match c.verdict {
        Verdict::Certified => Ok(()),
        Verdict::NoBreakFound => {
            Err(CliError::Domain("landing motion completed without any sub-network edge breaking".into()))
        }
        Verdict::NotALandingMotion => Err(CliError::Domain("motion does not end on the torus boundary".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Domain(String::new()).exit_code(), 1);
        assert_eq!(CliError::Input(String::new()).exit_code(), 2);
        assert_eq!(CliError::Internal(String::new()).exit_code(), 3);
    }

    #[test]
    fn gen_net_rejects_three() {
        assert!(matches!(gen_net(3, 0), Err(CliError::Input(_))));
        let (_, r) = gen_net(4, 0).unwrap();
        assert!(r.covering_radius > 1.15 && r.covering_radius < 1.45);
    }

    #[test]
    fn tetrahedron_is_not_a_net() {
        let (pos, _) = gen_net(4, 0).unwrap();
        assert_eq!(check_net(&pos, 0.3).unwrap().is_net(), Some(false));
    }
}
