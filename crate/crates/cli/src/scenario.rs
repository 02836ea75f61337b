use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use swarmnet_core::geom::ObstacleTorus;
use swarmnet_core::motion::{LandingStrategy, DEFAULT_MOTION_SAMPLES};
use swarmnet_core::network::RangeRule;
use swarmnet_core::swarm::{covering_radius, fibonacci_net, CoveringMethod};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetGenerator {
    Fibonacci,
    /// Positions file, relative to the working directory.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub timeline_samples: usize,
    pub motion_samples: usize,
    pub range_rule: RangeRule,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { timeline_samples: 64, motion_samples: DEFAULT_MOTION_SAMPLES, range_rule: RangeRule::Open }
    }
}

/// A run on the unit sphere around an obstacle torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub torus: ObstacleTorus,
    pub delta: f64,
    pub n: usize,
    pub net: NetGenerator,
    pub seed: u64,
    pub strategy: LandingStrategy,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Scenario {
    /// Built-in scaled scenario used by `demo`.
    pub fn demo() -> Self {
        Scenario {
            torus: ObstacleTorus::new(0.4, 0.35).expect("demo torus is valid"),
            delta: 0.3,
            n: 4000,
            net: NetGenerator::Fibonacci,
            seed: 1,
            strategy: LandingStrategy::Patch,
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.delta > 0.0) {
            return Err(CliError::Input(format!("delta must be positive, got {}", self.delta)));
        }
        if self.delta >= self.torus.tube_radius() {
            return Err(CliError::Input(format!(
                "delta {} must be below the tube radius {}",
                self.delta,
                self.torus.tube_radius()
            )));
        }
        if self.net == NetGenerator::Fibonacci && self.n < 4 {
            return Err(CliError::Input(format!("need at least 4 robots, got {}", self.n)));
        }
        Ok(())
    }
}

/// Robot count the Fibonacci generator needs for a δ/6-net, from its
/// measured covering constant `c = r·√n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub covering_constant: f64,
    pub required_n: f64,
}

pub const DESK_LIMIT: f64 = 100_000.0;
const CALIBRATION_N: usize = 2000;

pub fn capacity_estimate(delta: f64) -> CapacityEstimate {
    let r = covering_radius(&fibonacci_net(CALIBRATION_N, 0), CoveringMethod::Exact)
        .expect("calibration net is not degenerate")
        .covering_radius;
    let c = r * (CALIBRATION_N as f64).sqrt();
    CapacityEstimate { covering_constant: c, required_n: (6.0 * c / delta).powi(2) }
}

pub fn check_capacity(delta: f64, force: bool) -> Result<CapacityEstimate, CliError> {
    let est = capacity_estimate(delta);
    if est.required_n > DESK_LIMIT && !force {
        return Err(CliError::Input(format!(
            "a δ/6-net for δ = {delta} needs n ≈ {:.2e} robots (millions; covering constant {:.4}), \
             beyond the desk limit of {DESK_LIMIT}; pass --force to run anyway",
            est.required_n, est.covering_constant
        )));
    }
    Ok(est)
}
