use serde::Serialize;

use crate::spaces::{Seminorms, Vector};

use super::orbit::{orbit_from, tame_profile};
use super::{validate_problem, OrbitTrace, SolveError, StepParams, TameProblem, XPoint, YPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Initial `ε`, halved at every restart.
    pub eps0: f64,
    /// Floor for the halving schedule; an orbit costs about `2/ε` steps.
    pub eps_min: f64,
    /// Initial graded level, raised by one per restart up to the image top.
    pub k0: usize,
    /// Stop once `rho(f(x), y) ≤ tol`.
    pub tol: f64,
    pub max_outer: usize,
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps0: 0.1,
            eps_min: 1e-4,
            k0: 0,
            tol: 1e-10,
            max_outer: 200,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    StepFailure,
    MaxIterations,
    LeftDomain,
}

/// Linear-rate openness data for a solve started at `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Openness {
    /// `rho_X(x0, x)`.
    pub rho_domain: f64,
    /// `rho'_Y(f(x0), y)` in the seminorms `c_n ‖·‖_{n+d}`.
    pub rho_image: f64,
    /// `m_U(x0)`.
    pub radius: f64,
    /// `rho'_Y(f(x0), y) < m_U(x0)`: the target is inside the ball where the
    /// openness estimate is guaranteed.
    pub within_radius: bool,
    /// `rho_X(x0, x) ≤ rho'_Y(f(x0), y) + tol`.
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport<X> {
    pub status: SolveStatus,
    pub solution: X,
    /// `rho(f(x), y)`.
    pub residual_rho: f64,
    /// `‖f(x) − y‖_n` for every image level.
    pub residual_graded: Vec<f64>,
    pub outer_iterations: usize,
    pub rejected_iterations: usize,
    pub openness: Openness,
    /// Orbit traces; filled only when `record_trace` is set.
    pub orbit_traces: Vec<OrbitTrace>,
    /// Every run orbit satisfied its residual, length and ball certificates.
    pub certificates_hold: bool,
    pub message: Option<String>,
}

impl<X> SolveReport<X> {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Solves `f(x) = y` from `x0` to `rho(f(x), y) ≤ tol`.
///
/// Each outer iteration runs one orbit toward the current residual
/// `v = y − f(x)` at the current `(ε, k)`, then halves `ε` and raises `k`.
/// An iteration that increases `rho(f(x), y)` is discarded and only `ε` is
/// halved. Algorithmic failures are reported through [`SolveStatus`]; `Err` is
/// reserved for malformed input.
pub fn solve<P: TameProblem + ?Sized>(
    problem: &P,
    y: &YPoint<P>,
    x0: &XPoint<P>,
    opts: &SolveOptions,
) -> Result<SolveReport<XPoint<P>>, SolveError> {
    validate_problem(problem)?;
    let xs = problem.domain_space();
    let ys = problem.image_space();
    xs.check(x0)?;
    ys.check(y)?;
    let top = ys.top_level();
    if opts.k0 > top {
        return Err(SolveError::InvalidParams(format!(
            "k0 = {} exceeds the image truncation {top}",
            opts.k0
        )));
    }
    if !(opts.eps0 > 0.0 && opts.eps0 < 1.0) {
        return Err(SolveError::InvalidParams(format!("ε0 = {} not in (0, 1)", opts.eps0)));
    }
    let domain = problem.domain();
    let fx0 = problem.eval(x0)?;
    let radius = domain.margin(xs, x0);
    let rho_image = problem.image_metric().rho(&fx0, y)?;

    let mut x = x0.clone();
    let mut fx = fx0.clone();
    let mut res = ys.rho(&fx, y)?;
    let mut eps = opts.eps0;
    let mut k = opts.k0;
    let mut traces = Vec::new();
    let mut certificates_hold = true;
    let mut outer = 0;
    let mut rejected = 0;
    let mut message = None;

    let status = loop {
        if res <= opts.tol {
            break SolveStatus::Converged;
        }
        if outer >= opts.max_outer {
            break SolveStatus::MaxIterations;
        }
        outer += 1;
        let v = y.sub(&fx);
        // raise k until the residual is visible at level k
        while k < top && ys.graded_unchecked(&v, k) == 0.0 {
            k += 1;
        }
        let params = StepParams::new(eps, 1.0, k)?;
        let s = tame_profile(problem, &v);
        let (candidate, trace) = match orbit_from(problem, &x, fx.clone(), &v, &s, &params) {
            Ok(r) => r,
            Err(SolveError::StepFailure { halvings, p }) => {
                message = Some(format!("no step accepted after {halvings} halvings at p = {p}"));
                break SolveStatus::StepFailure;
            }
            Err(SolveError::Problem(e)) => {
                message = Some(e.to_string());
                break SolveStatus::LeftDomain;
            }
            Err(e) => return Err(e),
        };
        certificates_hold &=
            trace.residual_certificate() && trace.length_certificate() && trace.ball_certificate();
        if opts.record_trace {
            traces.push(trace);
        }
        if !domain.contains(xs, &candidate) {
            message = Some("iterate left the domain".into());
            break SolveStatus::LeftDomain;
        }
        let f_candidate = match problem.eval(&candidate) {
            Ok(v) => v,
            Err(e) => {
                message = Some(e.to_string());
                break SolveStatus::LeftDomain;
            }
        };
        let new_res = ys.rho(&f_candidate, y)?;
        if new_res > res {
            rejected += 1;
        } else {
            x = candidate;
            fx = f_candidate;
            res = new_res;
            k = (k + 1).min(top);
        }
        eps = (0.5 * eps).max(opts.eps_min);
    };

    let rho_domain = xs.rho(x0, &x)?;
    let residual_graded = ys.profile(&fx.sub(y));
    Ok(SolveReport {
        status,
        residual_rho: res,
        residual_graded,
        outer_iterations: outer,
        rejected_iterations: rejected,
        openness: Openness {
            rho_domain,
            rho_image,
            radius,
            within_radius: rho_image < radius,
            holds: rho_domain <= rho_image + opts.tol,
        },
        orbit_traces: traces,
        certificates_hold,
        message,
        solution: x,
    })
}
