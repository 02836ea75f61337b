use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swarmnet_cli::{
    check_net, gen_net, read_json, run_certify, triangulate, verdict_result, write_certify, write_json, CliError,
    NetGenerator, Scenario,
};
use swarmnet_core::geom::ObstacleTorus;
use swarmnet_core::motion::{LandingStrategy, Motion};
use swarmnet_core::network::RangeRule;
use swarmnet_core::swarm::SwarmPosition;

#[derive(Parser, Debug)]
#[command(name = "swarmnet", version, about = "Swarm network triangulations and forced-topology-change certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Communication range δ.
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    torus_major: Option<f64>,
    #[arg(long, global = true)]
    torus_tube: Option<f64>,
    /// Number of robots.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    strategy: Option<LandingStrategy>,
    /// Winding timeline samples.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Count distance exactly δ as in range.
    #[arg(long, global = true)]
    closed_range: bool,
    /// Run scenarios beyond the desk-size capacity limit.
    #[arg(long, global = true)]
    force: bool,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a Fibonacci net and print its covering radius.
    GenNet,
    /// Exit 0 iff the positions form a δ/6-net.
    CheckNet { positions: PathBuf },
    /// Build and validate the triangulation and sub-network.
    Triangulate { positions: PathBuf },
    /// Full pipeline on a scenario file (flags override its fields).
    Certify {
        scenario: Option<PathBuf>,
        /// Use this motion instead of generating a landing motion.
        #[arg(long)]
        motion: Option<PathBuf>,
    },
    /// Certify the built-in scaled scenario.
    Demo,
}

impl Cli {
    fn scenario(&self, base: Scenario) -> Result<Scenario, CliError> {
        let mut s = base;
        if self.torus_major.is_some() || self.torus_tube.is_some() {
            let major = self.torus_major.unwrap_or(s.torus.major_radius());
            let tube = self.torus_tube.unwrap_or(s.torus.tube_radius());
            s.torus = ObstacleTorus::new(major, tube).map_err(|e| CliError::Input(e.to_string()))?;
        }
        if let Some(d) = self.delta {
            s.delta = d;
        }
        if let Some(n) = self.n {
            s.n = n;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(st) = self.strategy {
            s.strategy = st;
        }
        if let Some(k) = self.samples {
            s.tolerances.timeline_samples = k;
        }
        if self.closed_range {
            s.tolerances.range_rule = RangeRule::Closed;
        }
        Ok(s)
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::GenNet => {
            let s = cli.scenario(Scenario::demo())?;
            let (pos, report) = gen_net(s.n, s.seed)?;
            let path = write_json(&cli.out, "positions.json", &pos)?;
            println!("wrote {} ({} robots, seed {})", path.display(), pos.len(), s.seed);
            println!("covering radius {}", report.covering_radius);
            Ok(())
        }
        Command::CheckNet { positions } => {
            let delta = cli.delta.ok_or_else(|| CliError::Input("check-net needs --delta".into()))?;
            let pos: SwarmPosition = read_json(positions)?;
            let report = check_net(&pos, delta)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.is_net() == Some(true) {
                Ok(())
            } else {
                Err(CliError::Domain(format!(
                    "not a δ/6-net: covering radius {} ≥ {}",
                    report.covering_radius,
                    delta / 6.0
                )))
            }
        }
        Command::Triangulate { positions } => {
            let pos: SwarmPosition = read_json(positions)?;
            let mut s = cli.scenario(Scenario::demo())?;
            s.net = NetGenerator::File(positions.clone());
            s.n = pos.len();
            s.validate()?;
            let (build, validation) = triangulate(&pos, s.delta, &s)?;
            write_json(&cli.out, "triangulation.json", &build.triangulation)?;
            write_json(&cli.out, "subnetwork.json", &build.sub_network)?;
            write_json(&cli.out, "perturbation.json", &build.perturbation)?;
            write_json(&cli.out, "validation.json", &validation)?;
            println!(
                "V {} E {} F {} χ {} max robot edge {} (δ′ = {}), violations {}",
                validation.vertices,
                validation.edges,
                validation.faces,
                validation.euler_characteristic,
                validation.max_robot_edge,
                build.delta_prime,
                validation.violations.len()
            );
            println!("wrote triangulation, sub-network and perturbation to {}", cli.out.display());
            Ok(())
        }
        Command::Certify { scenario, motion } => {
            let base = match scenario {
                Some(p) => read_json(p)?,
                None => Scenario::demo(),
            };
            let s = cli.scenario(base)?;
            let motion: Option<Motion> = motion.as_deref().map(read_json).transpose()?;
            certify_with(cli, &s, motion)
        }
        Command::Demo => certify_with(cli, &Scenario::demo(), None),
    }
}

fn certify_with(cli: &Cli, s: &Scenario, motion: Option<Motion>) -> Result<(), CliError> {
    let run = run_certify(s, motion, cli.force)?;
    write_certify(&run, &cli.out)?;
    let r = &run.report;
    let c = &r.certificate;
    let mut windings: Vec<String> =
        c.winding_timeline.iter().map(|w| w.winding.map_or("NA".into(), |w| w.to_string())).collect();
    windings.dedup();
    println!("scenario: n {} δ {} torus ({}, {}) seed {} strategy {}", s.n, s.delta, s.torus.major_radius(), s.torus.tube_radius(), s.seed, s.strategy);
    println!("covering radius {} δ′ {} budget {:.3e}", r.net.covering_radius, r.triangulation.delta_prime, r.perturbation.budget);
    println!("triangulation V {} E {} F {}", r.triangulation.vertices, r.triangulation.edges, r.triangulation.faces);
    match &c.first_break {
        Some(b) => println!("first break t* = {} on edge {:?} (t̄ = {})", b.t, b.edge, c.t_bar),
        None => println!("no sub-network edge broke (t̄ = {})", c.t_bar),
    }
    println!("winding {} (timeline {})", windings.join(" → "), c.winding_timeline.len());
    println!("neighbourhood contained {} radial homotopy {}", c.neighborhood.contained, c.radial_homotopy.ok);
    println!("verdict {:?}", c.verdict);
    println!("report {} hash {}", cli.out.join("report.json").display(), r.hash);
    verdict_result(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swarmnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
