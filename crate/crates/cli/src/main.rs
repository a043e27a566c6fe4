use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nalgebra::Vector3;
use sbt_core::bem::{build_surface_mesh, reference_self_convergence, ReferenceSystem};
use sbt_core::geometry::SlenderGeometry;
use sbt_core::rigid::{rigid_motion_gram, RigidSystem};
use sbt_core::study::{run_sweep, run_validate, write_csv};
use sbt_core::{RigidKinematics, StudyConfig};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Rigid slender-body mobility of closed-loop fibers, checked against a
/// boundary-integral reference solver.
#[derive(Parser)]
#[command(name = "sbt", version)]
struct Cli {
    /// JSON study configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single slender-body solve: force density, v and omega.
    Mobility {
        /// Tube radius; the first configured radius when omitted.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Also print the 6x6 grand mobility matrix.
        #[arg(long)]
        grand: bool,
    },
    /// Reference surface solve over the configured ladder.
    Reference {
        #[arg(long)]
        epsilon: Option<f64>,
        /// Solve only at this (Ns, Ntheta) instead of the ladder.
        #[arg(long, num_args = 2, value_names = ["NS", "NTHETA"])]
        mesh: Option<Vec<usize>>,
    },
    /// Rigid-motion Gram matrix of the centerline.
    Gram,
    /// Radius sweep; writes the CSV and prints the rate report.
    Sweep,
    /// Run the invariant suites; exits non-zero if any check fails.
    Validate,
}

#[derive(Serialize)]
struct MobilityOutput {
    epsilon: f64,
    n: usize,
    force: Vector3<f64>,
    torque: Vector3<f64>,
    kinematics: RigidKinematics,
    condition: f64,
    f_c1: f64,
    force_density: Vec<Vector3<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grand_mobility: Option<sbt_core::GrandMobility>,
}

#[derive(Serialize)]
struct ReferenceOutput {
    epsilon: f64,
    ns: usize,
    ntheta: usize,
    kinematics: RigidKinematics,
    condition: f64,
    least_squares: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    convergence: Option<sbt_core::bem::ConvergenceReport>,
}

#[derive(Serialize)]
struct GramOutput {
    n: usize,
    gram: Vec<Vec<f64>>,
    lambda_min: f64,
    constant: f64,
}

fn load_config(cli: &Cli) -> Result<StudyConfig> {
    let mut cfg = match &cli.config {
        Some(path) => StudyConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => StudyConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn geometry(cfg: &StudyConfig, epsilon: Option<f64>) -> Result<SlenderGeometry> {
    let eps = epsilon.unwrap_or(cfg.epsilons[0]);
    let g = SlenderGeometry::build(&cfg.curve_spec()?, cfg.n_sbt, eps)?;
    g.require_tube()?;
    Ok(g)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let cfg = load_config(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Mobility { epsilon, grand } => {
            let g = geometry(&cfg, *epsilon)?;
            let sys = RigidSystem::new(&g)?;
            let sol = sys.solve(&cfg.force(), &cfg.torque())?;
            let grand_mobility = if *grand { Some(sys.grand_mobility()?) } else { None };
            emit_json(
                out,
                &MobilityOutput {
                    epsilon: g.epsilon(),
                    n: cfg.n_sbt,
                    force: cfg.force(),
                    torque: cfg.torque(),
                    kinematics: sol.kinematics,
                    condition: sol.condition,
                    f_c1: sol.force.c1_norm(),
                    force_density: sol.force.values,
                    grand_mobility,
                },
            )?;
        }
        Command::Reference { epsilon, mesh } => {
            let g = geometry(&cfg, *epsilon)?;
            let method = cfg.reference_method();
            let output = match mesh.as_deref() {
                Some(&[ns, ntheta]) => {
                    let m = build_surface_mesh(&g, ns, ntheta)?;
                    let sol = ReferenceSystem::new(&m, &method)?.solve(&cfg.force(), &cfg.torque())?;
                    ReferenceOutput {
                        epsilon: g.epsilon(),
                        ns,
                        ntheta,
                        kinematics: sol.kinematics,
                        condition: sol.condition,
                        least_squares: sol.least_squares,
                        convergence: None,
                    }
                }
                Some(_) => bail!("--mesh takes two sizes"),
                None => {
                    let ladder = cfg.ladder();
                    if ladder.len() < 3 {
                        bail!("ref_ladder needs at least three rungs; use --mesh for a single solve");
                    }
                    let rep = reference_self_convergence(&g, &cfg.force(), &cfg.torque(), &ladder, &method)?;
                    let fine = rep.finest().clone();
                    ReferenceOutput {
                        epsilon: g.epsilon(),
                        ns: fine.ns,
                        ntheta: fine.ntheta,
                        kinematics: fine.kinematics,
                        condition: fine.condition,
                        least_squares: false,
                        convergence: Some(rep),
                    }
                }
            };
            emit_json(out, &output)?;
        }
        Command::Gram => {
            let g = SlenderGeometry::build(&cfg.curve_spec()?, cfg.n_sbt, cfg.epsilons[0])?;
            let gram = rigid_motion_gram(g.curve());
            let rows = (0..6).map(|i| gram.g.row(i).iter().copied().collect()).collect();
            emit_json(out, &GramOutput { n: cfg.n_sbt, gram: rows, lambda_min: gram.lambda_min, constant: gram.constant() })?;
        }
        Command::Sweep => {
            let outcome = run_sweep(&cfg)?;
            write_csv(sink(out)?, &outcome.records)?;
            // the report goes to stdout only when the CSV does not
            let report = serde_json::to_string_pretty(&outcome.rate)?;
            if out.is_some() {
                println!("{report}");
            } else {
                eprintln!("{report}");
            }
        }
        Command::Validate => {
            let report = run_validate(&cfg)?;
            emit_json(out, &report)?;
            if !report.passed {
                for c in report.checks.iter().filter(|c| !c.passed) {
                    eprintln!("FAILED {}: value {:e}, threshold {:e}; {}", c.name, c.value, c.threshold, c.detail);
                }
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
