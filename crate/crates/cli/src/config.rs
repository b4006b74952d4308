use std::path::{Path, PathBuf};

use frechet_core::solver::SolveOptions;
use frechet_core::spaces::SpaceDescriptor;
use frechet_core::verify::VerifyOptions;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Solve,
    Surj,
    Inverse,
    Inject,
    Ift,
    Ode,
}

impl Experiment {
    pub fn file_stem(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Surj => "surj",
            Experiment::Inverse => "inverse",
            Experiment::Inject => "inject",
            Experiment::Ift => "ift",
            Experiment::Ode => "ode",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub eps0: f64,
    pub k0: usize,
    pub tol: f64,
    pub max_outer: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self {
            eps0: d.eps0,
            k0: d.k0,
            tol: d.tol,
            max_outer: d.max_outer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub samples: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub tol: f64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        let d = VerifyOptions::default();
        Self {
            samples: 100,
            seed: d.seed,
            rel_tol: d.rel_tol,
            tol: d.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeParams {
    pub ode: String,
    #[serde(default = "default_r")]
    pub r: f64,
    /// Number of grid intervals on `[−1, 1]`.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_r() -> f64 {
    0.5
}

fn default_grid() -> usize {
    2000
}

/// Everything that determines a run. Written next to the outputs so a run
/// can be repeated with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub problem: Option<String>,
    /// When present, must match the space of the named problem.
    #[serde(default)]
    pub space: Option<SpaceDescriptor>,
    /// Scalar target, or the amplitude `τ` of `τ cos θ` on Fourier problems.
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub verify: VerifyParams,
    #[serde(default)]
    pub ode: Option<OdeParams>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub trace: bool,
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            problem: None,
            space: None,
            target: None,
            solver: SolverParams::default(),
            verify: VerifyParams::default(),
            ode: None,
            out: None,
            trace: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            eps0: self.solver.eps0,
            eps_min: SolveOptions::default().eps_min,
            k0: self.solver.k0,
            tol: self.solver.tol,
            max_outer: self.solver.max_outer,
            record_trace: self.trace,
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            seed: self.verify.seed,
            rel_tol: self.verify.rel_tol,
            tol: self.verify.tol,
            solve: SolveOptions {
                record_trace: false,
                ..self.solve_options()
            },
        }
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let s = &self.solver;
        if !(s.eps0 > 0.0 && s.eps0 < 1.0) {
            return Err(Failure::Usage(format!("eps0 = {} must lie in (0, 1)", s.eps0)));
        }
        if !(s.tol > 0.0) || !(self.verify.tol >= 0.0) || !(self.verify.rel_tol >= 0.0) {
            return Err(Failure::Usage("tolerances must be positive".into()));
        }
        if self.verify.samples == 0 {
            return Err(Failure::Usage("samples must be positive".into()));
        }
        Ok(())
    }
}
