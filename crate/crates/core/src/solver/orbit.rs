use crate::spaces::{LevelVector, Seminorms, Vector};

use super::{OrbitStep, OrbitTrace, SolveError, StepParams, TameProblem, XPoint, YPoint};

/// Halvings of the trial step before an orbit step is declared failed.
const MAX_HALVINGS: usize = 60;
/// Hard cap on the number of accepted steps in one orbit.
const MAX_ORBIT_STEPS: usize = 2_000_000;

/// `s_n = c_n ‖v‖_{n+d}` for `n ≤ N − d`. Under the tame estimate the
/// right inverse of `v` lies in `Π_s` of the domain.
pub fn tame_profile<P: TameProblem + ?Sized>(problem: &P, v: &YPoint<P>) -> LevelVector {
    let d = problem.loss();
    let y = problem.image_space();
    let entries = problem
        .tame_constants()
        .iter()
        .enumerate()
        .map(|(n, c)| c * y.eval(v, n + d))
        .collect();
    LevelVector::new(entries).expect("seminorms are nonnegative")
}

/// The orbit acceptance test: `t ∈ (‖u − x‖_s / μ, ε)` and
/// `|f(u) − f(x) − t ȳ|_k < ε λ t` with `λ = min(1, |ȳ|_k)`.
///
/// `λ` rescales the image so that `|ȳ|_k` is at least one before the test is
/// applied; with `λ = 1` this is the unscaled condition.
pub fn accept_step<Y: Seminorms>(
    image: &Y,
    fx: &Y::Point,
    fu: &Y::Point,
    step_norm: f64,
    t: f64,
    ybar: &Y::Point,
    params: &StepParams,
) -> bool {
    if !(t > 0.0 && t < params.eps && step_norm / params.mu < t) {
        return false;
    }
    let scale = image.graded_unchecked(ybar, params.k).min(1.0);
    let defect = fu.sub(fx).axpy(-t, ybar);
    image.graded_unchecked(&defect, params.k) < params.eps * scale * t
}

/// Current orbit point, cached `f(x)`, partial sum `p` and accepted steps.
#[derive(Debug, Clone)]
pub struct OrbitState<X, Y> {
    pub x: X,
    pub fx: Y,
    pub p: f64,
    pub steps: Vec<OrbitStep>,
    pub length: f64,
}

impl<X, Y> OrbitState<X, Y> {
    pub fn start(x: X, fx: Y) -> Self {
        Self {
            x,
            fx,
            p: 0.0,
            steps: Vec::new(),
            length: 0.0,
        }
    }
}

/// One orbit step: `h = right_inverse(x, ȳ)`, then `t = ε/2, ε/4, …` until
/// `u = x + t h` passes [`accept_step`].
///
/// `fx0` is `f` at the orbit start, used to record the residual
/// `|f(x_{i+1}) − f(x_0) − p_i ȳ|_k`.
pub fn orbit_step<P: TameProblem + ?Sized>(
    problem: &P,
    mut state: OrbitState<XPoint<P>, YPoint<P>>,
    fx0: &YPoint<P>,
    ybar: &YPoint<P>,
    s: &LevelVector,
    params: &StepParams,
) -> Result<OrbitState<XPoint<P>, YPoint<P>>, SolveError> {
    let xs = problem.domain_space();
    let ys = problem.image_space();
    let h = problem.right_inverse(&state.x, ybar)?;
    let h_norm = xs.s_norm(&h, s)?;
    let mut t = 0.5 * params.eps;
    for halvings in 0..MAX_HALVINGS {
        let u = state.x.axpy(t, &h);
        let step_norm = t * h_norm;
        let fu = if problem.domain().contains(xs, &u) {
            problem.eval(&u).ok()
        } else {
            None
        };
        if let Some(fu) = fu {
            if accept_step(ys, &state.fx, &fu, step_norm, t, ybar, params) {
                let p = state.p + t;
                let residual = ys.graded_unchecked(&fu.sub(fx0).axpy(-p, ybar), params.k);
                state.steps.push(OrbitStep {
                    t,
                    p,
                    step_norm,
                    residual,
                    halvings,
                });
                state.length += step_norm;
                state.p = p;
                state.x = u;
                state.fx = fu;
                return Ok(state);
            }
        }
        t *= 0.5;
    }
    Err(SolveError::StepFailure {
        halvings: MAX_HALVINGS,
        p: state.p,
    })
}

/// Runs the orbit from `x0` toward `f(x0) + ȳ` in the slice `X_s` for the
/// tame profile of `ȳ`, stopping at the first partial sum in `(1 − ε, 1)`.
///
/// The returned point `x̂` satisfies `‖x̂ − x0‖_s ≤ σ` and
/// `|f(x̂) − f(x0) − ȳ|_k < ε(1 + |ȳ|_k)`; both are recorded in the trace.
pub fn run_orbit<P: TameProblem + ?Sized>(
    problem: &P,
    x0: &XPoint<P>,
    ybar: &YPoint<P>,
    params: &StepParams,
) -> Result<(XPoint<P>, OrbitTrace), SolveError> {
    let fx0 = problem.eval(x0)?;
    let s = tame_profile(problem, ybar);
    orbit_from(problem, x0, fx0, ybar, &s, params)
}

pub(crate) fn orbit_from<P: TameProblem + ?Sized>(
    problem: &P,
    x0: &XPoint<P>,
    fx0: YPoint<P>,
    ybar: &YPoint<P>,
    s: &LevelVector,
    params: &StepParams,
) -> Result<(XPoint<P>, OrbitTrace), SolveError> {
    let xs = problem.domain_space();
    let ys = problem.image_space();
    xs.check(x0)?;
    ys.check(ybar)?;
    ys.check_level(params.k)?;
    let target_norm = ys.graded_unchecked(ybar, params.k);
    if ys.profile(ybar).iter().all(|a| *a == 0.0) {
        return Ok((x0.clone(), OrbitTrace::trivial(*params)));
    }
    if target_norm == 0.0 {
        return Err(SolveError::DegenerateTarget);
    }
    if s.support().is_empty() {
        return Err(SolveError::Precondition(
            "tame profile of a nonzero target is empty".into(),
        ));
    }
    let mut state = OrbitState::start(x0.clone(), fx0.clone());
    while state.p <= 1.0 - params.eps {
        if state.steps.len() >= MAX_ORBIT_STEPS {
            return Err(SolveError::StepFailure {
                halvings: 0,
                p: state.p,
            });
        }
        state = orbit_step(problem, state, &fx0, ybar, s, params)?;
    }
    // every t is below ε, so the first partial sum past 1 − ε is below 1
    assert!(state.p < 1.0, "orbit overshot: p = {}", state.p);
    let final_residual = ys.graded_unchecked(&state.fx.sub(&fx0).sub(ybar), params.k);
    let ball_norm = xs.s_norm(&state.x.sub(x0), s)?;
    let trace = OrbitTrace {
        params: *params,
        scale: target_norm.min(1.0),
        target_norm,
        profile: s.entries().to_vec(),
        final_p: state.p,
        final_residual,
        length: state.length,
        ball_norm,
        steps: state.steps,
    };
    Ok((state.x, trace))
}

/// One orbit pass in `x0 + Π_s` toward `y`: returns `x̂` with
/// `x̂ − x0 ∈ Π_s` and `|f(x̂) − y|_k < ε1`.
///
/// Requires `c_n ‖y − f(x0)‖_{n+d} ≤ s_n` for every level.
pub fn pi_solve<P: TameProblem + ?Sized>(
    problem: &P,
    x0: &XPoint<P>,
    y: &YPoint<P>,
    s: &LevelVector,
    eps1: f64,
    k: usize,
) -> Result<XPoint<P>, SolveError> {
    if !(eps1 > 0.0) {
        return Err(SolveError::InvalidParams(format!("ε1 = {eps1} must be positive")));
    }
    let ys = problem.image_space();
    ys.check(y)?;
    ys.check_level(k)?;
    let fx0 = problem.eval(x0)?;
    let ybar = y.sub(&fx0);
    let needed = tame_profile(problem, &ybar);
    if let Some(n) = (0..=problem.domain_space().top_level()).find(|&n| needed.get(n) > s.get(n)) {
        return Err(SolveError::Precondition(format!(
            "y − f(x0) is outside Π_s at level {n}: {} > {}",
            needed.get(n),
            s.get(n)
        )));
    }
    let norm = ys.graded_unchecked(&ybar, k);
    // certificate: residual < ε(min(1, |ȳ|) + |ȳ|) ≤ ε(1 + |ȳ|)
    let eps = (0.99 * eps1 / (norm.min(1.0) + norm)).min(0.5);
    let params = StepParams::new(eps, 1.0, k)?;
    let (x, _) = orbit_from(problem, x0, fx0, &ybar, s, &params)?;
    Ok(x)
}
