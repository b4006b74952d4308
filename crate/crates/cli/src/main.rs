mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Experiment, OdeParams, RunConfig};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

/// Solve and verify tame nonlinear equations between graded Fréchet spaces.
#[derive(Parser, Debug)]
#[command(name = "frechet-solve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve F(x) = y from the center of the domain.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Initial orbit parameter, in (0, 1).
        #[arg(long)]
        eps0: Option<f64>,
        /// Starting level of the orbit seminorms.
        #[arg(long)]
        k0: Option<usize>,
        /// Maximum number of outer iterations.
        #[arg(long)]
        max_outer: Option<usize>,
    },
    /// Run a randomized verification experiment.
    Verify {
        #[command(subcommand)]
        kind: VerifyKind,
    },
    /// Solve a parametrized Cauchy problem on [-1, 1].
    Ode {
        #[command(flatten)]
        common: Common,
        /// Cauchy problem name (see `list`).
        #[arg(long)]
        ode: Option<String>,
        /// Parameter r of the rescaled problem.
        #[arg(long)]
        r: Option<f64>,
        /// Number of grid intervals.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// List the registered problems.
    List,
}

#[derive(Subcommand, Debug)]
enum VerifyKind {
    /// Sampled surjectivity onto a ball around F(x).
    Surj(Common),
    /// Sampled inverse-Lipschitz estimate on image pairs.
    Inverse(Common),
    /// Local injectivity conditions from declared constants.
    Inject(Common),
    /// Implicit-map estimate for the scalar family.
    Ift(Common),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Registered problem name.
    #[arg(long)]
    problem: Option<String>,
    /// Target value, or amplitude of the cosine target on Fourier problems.
    #[arg(long, allow_hyphen_values = true)]
    target: Option<f64>,
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Residual tolerance of the solver.
    #[arg(long)]
    tol: Option<f64>,
    /// Directory for JSON and CSV outputs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record the orbit trace.
    #[arg(long)]
    trace: bool,
}

impl Common {
    fn config(&self, experiment: Experiment) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let cfg = RunConfig::load(path)?;
                if cfg.experiment != experiment {
                    return Err(Failure::Usage(format!(
                        "config is for experiment {:?}, not {:?}",
                        cfg.experiment, experiment
                    )));
                }
                cfg
            }
            None => RunConfig::new(experiment),
        };
        if let Some(p) = &self.problem {
            cfg.problem = Some(p.clone());
        }
        if self.target.is_some() {
            cfg.target = self.target;
        }
        if let Some(s) = self.seed {
            cfg.verify.seed = s;
        }
        if let Some(n) = self.samples {
            cfg.verify.samples = n;
        }
        if let Some(t) = self.tol {
            cfg.solver.tol = t;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.trace |= self.trace;
        Ok(cfg)
    }
}

fn build(cmd: Command) -> Result<Option<RunConfig>, Failure> {
    Ok(Some(match cmd {
        Command::List => return Ok(None),
        Command::Solve {
            common,
            eps0,
            k0,
            max_outer,
        } => {
            let mut cfg = common.config(Experiment::Solve)?;
            if let Some(e) = eps0 {
                cfg.solver.eps0 = e;
            }
            if let Some(k) = k0 {
                cfg.solver.k0 = k;
            }
            if let Some(m) = max_outer {
                cfg.solver.max_outer = m;
            }
            cfg
        }
        Command::Verify { kind } => match kind {
            VerifyKind::Surj(c) => c.config(Experiment::Surj)?,
            VerifyKind::Inverse(c) => c.config(Experiment::Inverse)?,
            VerifyKind::Inject(c) => c.config(Experiment::Inject)?,
            VerifyKind::Ift(c) => c.config(Experiment::Ift)?,
        },
        Command::Ode {
            common,
            ode,
            r,
            grid,
        } => {
            let mut cfg = common.config(Experiment::Ode)?;
            let mut params = match (cfg.ode.take(), ode) {
                (Some(mut p), name) => {
                    if let Some(n) = name {
                        p.ode = n;
                    }
                    p
                }
                (None, Some(n)) => OdeParams {
                    ode: n,
                    r: 0.5,
                    grid: 2000,
                },
                (None, None) => return Err(Failure::Usage("--ode is required".into())),
            };
            if let Some(r) = r {
                params.r = r;
            }
            if let Some(g) = grid {
                params.grid = g;
            }
            cfg.ode = Some(params);
            cfg
        }
    }))
}

fn set_threads() {
    if let Some(n) = std::env::var("FRECHET_SOLVE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    set_threads();
    let result = build(cli.command).and_then(|cfg| match cfg {
        None => {
            commands::list();
            Ok(true)
        }
        Some(cfg) => commands::run(&cfg),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            match &e {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Solver(m) => eprintln!("solver failure: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
