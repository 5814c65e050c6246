//! `anisocap`: capacitary potentials, capacities and certificates from the
//! command line.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_file, ConfigError, Settings};

#[derive(Parser, Debug)]
#[command(name = "anisocap", version, about = "Anisotropic p-capacity solver and certifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Seed for randomized checks (default 0).
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Worker thread cap.
    #[arg(long, global = true, env = "ANISOCAP_THREADS")]
    threads: Option<String>,
    /// Write zero wall times so outputs are byte-identical across runs.
    #[arg(long, global = true)]
    no_timing: bool,
    /// Schedule override `key=value`, e.g. `tolerance=1e-5`; repeatable.
    #[arg(long = "schedule", global = true, value_name = "KEY=VALUE")]
    schedule: Vec<String>,
}

#[derive(Args, Debug)]
struct Problem {
    /// Norm: euclidean, l1, linf, weighted-l2(a,b) or regularized(base,eps).
    #[arg(long)]
    aniso: Option<String>,
    /// Obstacle: disk(r), ellipse(a,b), wulff(r) or polygon(path).
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    p: Option<String>,
    /// Outer Wulff radius; a comma-separated list for `sweep`.
    #[arg(long = "R")]
    big_r: Option<String>,
    /// Grid spacing; `1/64` is accepted.
    #[arg(long)]
    h: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one condenser problem and dump fields.
    Solve(Problem),
    /// Relative capacity of one condenser.
    Capacity(Problem),
    /// Capacities over increasing outer radii and their extrapolation.
    Sweep {
        #[command(flatten)]
        problem: Problem,
        /// Spacing as a multiple of the inscribed radius (ignored with --h).
        #[arg(long)]
        per_r1: Option<String>,
        /// Node cap per grid (ignored with --h).
        #[arg(long)]
        max_nodes: Option<String>,
    },
    /// Check the solution between the inner and outer radial barriers.
    VerifyBarriers {
        #[command(flatten)]
        problem: Problem,
        /// Inner barrier radius (default: inscribed Wulff radius).
        #[arg(long)]
        r1: Option<String>,
        /// Outer barrier radius (default: circumscribed Wulff radius).
        #[arg(long)]
        r2: Option<String>,
        /// Tolerance factor: violations up to `c_tol * h` pass.
        #[arg(long)]
        c_tol: Option<String>,
    },
    /// Compare the discrete Lipschitz constant with the barrier bound.
    VerifyLipschitz {
        #[command(flatten)]
        problem: Problem,
        /// Radius of the interior Wulff condition (default: inscribed radius).
        #[arg(long)]
        r: Option<String>,
    },
    /// Check the one-homogeneous example for a candidate set.
    VerifyP1 {
        /// E1, E2 or empty.
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        h: Option<String>,
    },
    /// Seeded property suite for the norm calculus.
    CalculusProps {
        /// Random points per norm.
        #[arg(long)]
        points: Option<String>,
    },
}

/// How a run ended.
pub enum Failure {
    Config(String),
    Check(String),
    Solver(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.0)
    }
}

impl From<anisocap::Error> for Failure {
    fn from(e: anisocap::Error) -> Self {
        use anisocap::Error as E;
        match e {
            E::Solver(_) | E::ResolventNotConverged { .. } | E::PolarNotConverged { .. } | E::Quadrature(_) | E::Io(_) => {
                Self::Solver(e.to_string())
            }
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Solver(format!("i/o error: {e}"))
    }
}

fn problem_flags(s: &mut Settings, p: Problem) -> Result<(), ConfigError> {
    s.flag("aniso", p.aniso)?;
    s.flag("domain", p.domain)?;
    s.flag("p", p.p)?;
    s.flag("R", p.big_r)?;
    s.flag("h", p.h)
}

fn settings(cli: Cli) -> Result<(run::Task, Settings), Failure> {
    let file = match &cli.common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
            parse_file(&text)?
        }
        None => Default::default(),
    };
    let mut s = Settings::new(file);
    let c = cli.common;
    s.flag("out", c.out)?;
    s.flag("seed", c.seed)?;
    s.flag("threads", c.threads)?;
    if c.no_timing {
        s.flag("timing", Some("false".into()))?;
    }
    for kv in c.schedule {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("schedule override `{kv}` is not key=value")))?;
        if !run::SCHEDULE_KEYS.contains(&k.trim()) {
            return Err(ConfigError(format!("unknown schedule key `{}`", k.trim())).into());
        }
        s.flag(k.trim(), Some(v.trim().to_string()))?;
    }
    let task = match cli.command {
        Command::Solve(p) => {
            problem_flags(&mut s, p)?;
            run::Task::Solve
        }
        Command::Capacity(p) => {
            problem_flags(&mut s, p)?;
            run::Task::Capacity
        }
        Command::Sweep { problem, per_r1, max_nodes } => {
            problem_flags(&mut s, problem)?;
            s.flag("per_r1", per_r1)?;
            s.flag("max_nodes", max_nodes)?;
            run::Task::Sweep
        }
        Command::VerifyBarriers { problem, r1, r2, c_tol } => {
            problem_flags(&mut s, problem)?;
            s.flag("r1", r1)?;
            s.flag("r2", r2)?;
            s.flag("c_tol", c_tol)?;
            run::Task::VerifyBarriers
        }
        Command::VerifyLipschitz { problem, r } => {
            problem_flags(&mut s, problem)?;
            s.flag("r", r)?;
            run::Task::VerifyLipschitz
        }
        Command::VerifyP1 { set, h } => {
            s.flag("set", set)?;
            s.flag("h", h)?;
            run::Task::VerifyP1
        }
        Command::CalculusProps { points } => {
            s.flag("points", points)?;
            run::Task::CalculusProps
        }
    };
    Ok((task, s))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = settings(cli).and_then(|(task, s)| run::run(task, &s));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(3)
        }
    }
}
