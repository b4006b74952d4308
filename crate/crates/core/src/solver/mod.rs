//! Orbit-based solution of `f(x) = y` under tame right-inverse estimates.
//!
//! A [`TameProblem`] supplies `f`, a right-inverse oracle for the directional
//! derivative (`h` with `f′(x, h) = v`), constants `c_n` and a loss `d` such
//! that `‖h‖_n ≤ c_n ‖v‖_{n+d}`, and an open box `U` where all of this holds.
//!
//! The inner iteration ([`run_orbit`]) works in the Banach slice `X_s` for the
//! tame profile `s_n = c_n ‖ȳ‖_{n+d}` of the current target increment and
//! builds an orbit of accepted steps whose step lengths `t_i` sum to a value in
//! `(1 − ε, 1)`. The outer loop ([`solve`]) restarts the orbit on the remaining
//! residual with a halved `ε` and a raised graded level until the residual is
//! below tolerance in the metric `rho`.

mod orbit;
mod outer;

pub use orbit::{accept_step, orbit_step, pi_solve, run_orbit, tame_profile, OrbitState};
pub use outer::{solve, Openness, SolveOptions, SolveReport, SolveStatus};

use serde::Serialize;
use thiserror::Error;

use crate::spaces::{metric_term, Reindexed, SpaceError, Seminorms};

/// Point type of the domain space of `P`.
pub type XPoint<P> = <<P as TameProblem>::X as Seminorms>::Point;
/// Point type of the image space of `P`.
pub type YPoint<P> = <<P as TameProblem>::Y as Seminorms>::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("point outside the domain of f: {0}")]
    Domain(String),
    #[error("right-inverse oracle failed: {0}")]
    Oracle(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("no step accepted after {halvings} halvings at p = {p}")]
    StepFailure { halvings: usize, p: f64 },
    #[error("invalid step parameters: {0}")]
    InvalidParams(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("target increment vanishes on every graded level")]
    DegenerateTarget,
}

/// A nonlinear map with a tame right inverse of its directional derivative.
pub trait TameProblem: Send + Sync {
    type X: Seminorms;
    type Y: Seminorms + Clone;

    fn name(&self) -> &str;
    fn domain_space(&self) -> &Self::X;
    fn image_space(&self) -> &Self::Y;
    fn eval(&self, x: &XPoint<Self>) -> Result<YPoint<Self>, ProblemError>;
    /// Some `h` with `f′(x, h) = v`. Any selection is allowed; the solver does
    /// not assume uniqueness or continuity in `x`.
    fn right_inverse(
        &self,
        x: &XPoint<Self>,
        v: &YPoint<Self>,
    ) -> Result<XPoint<Self>, ProblemError>;
    /// `c_0, …, c_{N−d}` with `N` the image truncation level.
    fn tame_constants(&self) -> &[f64];
    fn loss(&self) -> usize;
    fn domain(&self) -> &BoxDomain<XPoint<Self>>;

    /// `f′(x)(h)` when the problem knows it in closed form.
    fn derivative(&self, _x: &XPoint<Self>, _h: &XPoint<Self>) -> Option<YPoint<Self>> {
        None
    }

    /// The image with seminorms `c_n ‖·‖_{n+d}`.
    fn image_metric(&self) -> Reindexed<Self::Y> {
        Reindexed::new(
            self.image_space().clone(),
            self.tame_constants().to_vec(),
            self.loss(),
        )
        .expect("problem constants validated on construction")
    }
}

/// Checks the level bookkeeping of a problem: the domain must be truncated at
/// `N − d` and there must be one positive constant per domain level.
pub fn validate_problem<P: TameProblem + ?Sized>(problem: &P) -> Result<(), SolveError> {
    let n_y = problem.image_space().top_level();
    let d = problem.loss();
    let n_x = problem.domain_space().top_level();
    if d > n_y || n_x != n_y - d {
        return Err(SolveError::Precondition(format!(
            "domain truncation {n_x} must equal image truncation {n_y} minus loss {d}"
        )));
    }
    let c = problem.tame_constants();
    if c.len() != n_x + 1 || c.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(SolveError::Precondition(format!(
            "need {} positive tame constants, got {:?}",
            n_x + 1,
            c
        )));
    }
    if problem.domain().radii.len() != n_x + 1 {
        return Err(SolveError::Precondition(
            "domain radii must cover every domain level".into(),
        ));
    }
    Ok(())
}

/// `U = {x : ‖x − center‖_n < r_n ∀n}`; infinite radii leave a level free.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain<P> {
    pub center: P,
    pub radii: Vec<f64>,
}

impl<P: crate::spaces::Vector> BoxDomain<P> {
    pub fn new(center: P, radii: Vec<f64>) -> Self {
        Self { center, radii }
    }

    pub fn unbounded(center: P, levels: usize) -> Self {
        Self {
            center,
            radii: vec![f64::INFINITY; levels + 1],
        }
    }

    pub fn contains<S: Seminorms<Point = P>>(&self, space: &S, x: &P) -> bool {
        let diff = x.sub(&self.center);
        self.radii
            .iter()
            .enumerate()
            .all(|(n, r)| space.eval(&diff, n) < *r)
    }

    /// Distance from `x` to the complement of the box in `rho`, computed face
    /// by face: `min_n 2^{-n} a_n / (1 + a_n)` with `a_n = r_n − ‖x − center‖_n`.
    /// Every point outside the box is at least this far away. Zero outside
    /// the box, `+∞` when no level is constrained.
    pub fn margin<S: Seminorms<Point = P>>(&self, space: &S, x: &P) -> f64 {
        let diff = x.sub(&self.center);
        let mut m = f64::INFINITY;
        for (n, r) in self.radii.iter().enumerate() {
            if r.is_infinite() {
                continue;
            }
            let a = r - space.eval(&diff, n);
            if a <= 0.0 {
                return 0.0;
            }
            m = m.min(metric_term(n, a));
        }
        m
    }
}

/// Orbit parameters `ε`, `σ`, `μ` with `μ > σ > (1 − ε) μ`, and the graded
/// level `k` of the residual norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepParams {
    pub eps: f64,
    pub sigma: f64,
    pub mu: f64,
    pub k: usize,
}

impl StepParams {
    /// `μ = σ(2 − ε) / (2(1 − ε))`, the midpoint of `(σ, σ/(1 − ε))`.
    pub fn new(eps: f64, sigma: f64, k: usize) -> Result<Self, SolveError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SolveError::InvalidParams(format!("ε = {eps} not in (0, 1)")));
        }
        let mu = sigma * (2.0 - eps) / (2.0 * (1.0 - eps));
        Self::with_mu(eps, sigma, mu, k)
    }

    pub fn with_mu(eps: f64, sigma: f64, mu: f64, k: usize) -> Result<Self, SolveError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SolveError::InvalidParams(format!("ε = {eps} not in (0, 1)")));
        }
        if !(sigma > 0.0) {
            return Err(SolveError::InvalidParams(format!("σ = {sigma} must be positive")));
        }
        if !(mu > sigma && sigma > (1.0 - eps) * mu) {
            return Err(SolveError::InvalidParams(format!(
                "need μ > σ > (1 − ε)μ, got μ = {mu}, σ = {sigma}, ε = {eps}"
            )));
        }
        Ok(Self { eps, sigma, mu, k })
    }
}

/// One accepted orbit step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitStep {
    pub t: f64,
    /// Partial sum `p_i = t_0 + … + t_i`.
    pub p: f64,
    /// `‖x_{i+1} − x_i‖_s`.
    pub step_norm: f64,
    /// `|g(x_{i+1}) − p_i ȳ|_k`.
    pub residual: f64,
    pub halvings: usize,
}

/// Record of one orbit run and its certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitTrace {
    pub params: StepParams,
    /// Residual scale `λ = min(1, |ȳ|_k)` used in the acceptance test.
    pub scale: f64,
    pub target_norm: f64,
    pub profile: Vec<f64>,
    pub steps: Vec<OrbitStep>,
    pub final_p: f64,
    /// `|f(x̂) − f(x0) − ȳ|_k`.
    pub final_residual: f64,
    /// `Σ ‖x_{i+1} − x_i‖_s`.
    pub length: f64,
    /// `‖x̂ − x0‖_s`.
    pub ball_norm: f64,
}

impl OrbitTrace {
    pub(crate) fn trivial(params: StepParams) -> Self {
        Self {
            params,
            scale: 1.0,
            target_norm: 0.0,
            profile: Vec::new(),
            steps: Vec::new(),
            final_p: 0.0,
            final_residual: 0.0,
            length: 0.0,
            ball_norm: 0.0,
        }
    }

    /// `final_residual < ε(1 + |ȳ|_k)`.
    pub fn residual_certificate(&self) -> bool {
        self.final_residual < self.params.eps * (1.0 + self.target_norm)
            || self.steps.is_empty()
    }

    /// Orbit length `< μ p ≤ μ`.
    pub fn length_certificate(&self) -> bool {
        self.steps.is_empty()
            || (self.length < self.params.mu * self.final_p && self.final_p <= 1.0)
    }

    /// `‖x̂ − x0‖_s ≤ σ`.
    pub fn ball_certificate(&self) -> bool {
        self.ball_norm <= self.params.sigma
    }
}
