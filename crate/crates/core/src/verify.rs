//! Sampled verification of local surjectivity, the inverse estimate, the
//! Dini mean-value argument along image segments, and the injectivity
//! conditions.
//!
//! Every harness falsifies rather than certifies: a passing report means no
//! violation was found among the drawn samples. All randomness comes from
//! ChaCha8 streams derived from `(seed, sample index)`, and samples are
//! evaluated in parallel but reported in index order, so a report is a pure
//! function of its inputs and seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{
    dini_mvt_check_with, CalculusError, DiniCheckOptions, DiniReport, ScalarPath, DINI_STEPS,
};
use crate::problems::sample_in_domain;
use crate::solver::{solve, SolveError, SolveOptions, SolveStatus, TameProblem};
use crate::spaces::{ModelSpace, Seminorms, SpacePoint, Vector};

/// Problems the harnesses accept: model spaces on both sides.
pub trait ModelProblem: TameProblem<X = ModelSpace, Y = ModelSpace> {}
impl<P: TameProblem<X = ModelSpace, Y = ModelSpace> + ?Sized> ModelProblem for P {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("range error: {0}")]
    Range(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// The RNG for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Relative tolerance on inequality checks.
    pub rel_tol: f64,
    /// Absolute tolerance where a claim has one (`rho(x, x̂) ≤ r + tol`).
    pub tol: f64,
    pub solve: SolveOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            rel_tol: 1e-6,
            tol: 1e-6,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No violation, but some samples could not be evaluated.
    Inconclusive,
}

/// One checked inequality `lhs ≤ bound`, where `bound` is `rhs` widened by
/// the report tolerances. `slack = lhs − bound`; positive means violated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub sample: usize,
    pub level: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub bound: f64,
    pub slack: f64,
    pub ok: bool,
}

impl SampleRow {
    pub fn new(sample: usize, level: Option<usize>, lhs: f64, rhs: f64, bound: f64) -> Self {
        let slack = lhs - bound;
        Self {
            sample,
            level,
            lhs,
            rhs,
            bound,
            slack,
            ok: slack <= 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub sample: usize,
    pub level: Option<usize>,
    pub slack: f64,
    pub inputs: Vec<SpacePoint>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub claim: String,
    pub problem: String,
    pub samples: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub tol: f64,
    pub rows: Vec<SampleRow>,
    /// Sorted by decreasing slack.
    pub violations: Vec<Violation>,
    pub inconclusive: usize,
    pub max_slack: f64,
    pub verdict: Verdict,
    pub summary: String,
}

impl VerificationReport {
    /// Assembles a report: sorts violations and derives the verdict.
    pub fn from_parts(
        claim: &str,
        problem: &str,
        samples: usize,
        opts: &VerifyOptions,
        rows: Vec<SampleRow>,
        mut violations: Vec<Violation>,
        inconclusive: usize,
    ) -> Self {
        violations.sort_by(|a, b| {
            b.slack
                .total_cmp(&a.slack)
                .then(a.sample.cmp(&b.sample))
                .then(a.level.cmp(&b.level))
        });
        let max_slack = rows
            .iter()
            .map(|r| r.slack)
            .chain(violations.iter().map(|v| v.slack))
            .fold(f64::NEG_INFINITY, f64::max);
        let verdict = if !violations.is_empty() {
            Verdict::Fail
        } else if inconclusive > 0 {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        };
        let summary = match verdict {
            Verdict::Pass => format!("no violation found in {samples} samples"),
            Verdict::Fail => format!("{} violations in {samples} samples", violations.len()),
            Verdict::Inconclusive => {
                format!("no violation found; {inconclusive} of {samples} samples not evaluated")
            }
        };
        Self {
            claim: claim.to_string(),
            problem: problem.to_string(),
            samples,
            seed: opts.seed,
            rel_tol: opts.rel_tol,
            tol: opts.tol,
            rows,
            violations,
            inconclusive,
            max_slack: if max_slack.is_finite() || max_slack > 0.0 { max_slack } else { 0.0 },
            verdict,
            summary,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// One line per checked inequality.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,level,lhs,rhs,bound,slack,ok\n");
        for r in &self.rows {
            let level = r.level.map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.sample, level, r.lhs, r.rhs, r.bound, r.slack, r.ok
            );
        }
        out
    }
}

fn violation(row: &SampleRow, inputs: Vec<SpacePoint>, note: Option<String>) -> Violation {
    Violation {
        sample: row.sample,
        level: row.level,
        slack: row.slack,
        inputs,
        note,
    }
}

fn solve_note(status: SolveStatus, message: &Option<String>) -> String {
    match message {
        Some(m) => format!("solve ended with {status:?}: {m}"),
        None => format!("solve ended with {status:?}"),
    }
}

/// A target `f(x) + w` with `rho'(0, w) = radius`, in the reindexed image
/// metric of the problem.
fn target_at<P: ModelProblem + ?Sized, R: Rng + ?Sized>(
    problem: &P,
    fx: &SpacePoint,
    radius: f64,
    rng: &mut R,
) -> SpacePoint {
    fx.add(&problem.image_metric().sample_at_radius(radius, rng))
}

/// Checks `f(B(x, r)) ⊃ B°(f(x), r)`: targets with `rho'(f(x), y) < r` are
/// solved from `x`, and each must converge with `rho(x, x̂) ≤ r + tol`.
/// A solve that fails to converge is a violation.
pub fn verify_surjectivity<P: ModelProblem + ?Sized>(
    problem: &P,
    x: &SpacePoint,
    r: f64,
    samples: usize,
    opts: &VerifyOptions,
) -> Result<VerificationReport, VerifyError> {
    let space = problem.domain_space();
    space.check(x).map_err(SolveError::from)?;
    let m = problem.domain().margin(space, x);
    if !(r > 0.0 && r < m) {
        return Err(VerifyError::Range(format!("need 0 < r < m_U(x) = {m}, got r = {r}")));
    }
    let fx = problem.eval(x).map_err(SolveError::from)?;
    let outcomes: Vec<Result<(SampleRow, Option<Violation>), VerifyError>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(opts.seed, i);
            let y = target_at(problem, &fx, r * rng.gen::<f64>(), &mut rng);
            let rep = solve(problem, &y, x, &opts.solve)?;
            if !rep.converged() {
                let row = SampleRow::new(i, None, f64::INFINITY, r, r + opts.tol);
                let v = violation(&row, vec![y], Some(solve_note(rep.status, &rep.message)));
                return Ok((row, Some(v)));
            }
            let lhs = space.rho(x, &rep.solution).map_err(SolveError::from)?;
            let row = SampleRow::new(i, None, lhs, r, r + opts.tol);
            let v = (!row.ok).then(|| violation(&row, vec![y, rep.solution.clone()], None));
            Ok((row, v))
        })
        .collect();
    let mut rows = Vec::with_capacity(samples);
    let mut violations = Vec::new();
    for o in outcomes {
        let (row, v) = o?;
        rows.push(row);
        violations.extend(v);
    }
    Ok(VerificationReport::from_parts(
        "local-surjectivity",
        problem.name(),
        samples,
        opts,
        rows,
        violations,
        0,
    ))
}

/// `count` pairs `(u, v)` in the image ball `rho'(f(x_ref), ·) < m_U(x_ref)/4`.
pub fn sample_image_pairs<P: ModelProblem + ?Sized>(
    problem: &P,
    x_ref: &SpacePoint,
    count: usize,
    seed: u64,
) -> Result<Vec<(SpacePoint, SpacePoint)>, VerifyError> {
    let fx = problem.eval(x_ref).map_err(SolveError::from)?;
    let radius = 0.25 * problem.domain().margin(problem.domain_space(), x_ref);
    if !(radius > 0.0) {
        return Err(VerifyError::Range("reference point is outside the domain".into()));
    }
    let radius = radius.min(0.25);
    Ok((0..count)
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let u = target_at(problem, &fx, radius * rng.gen::<f64>(), &mut rng);
            let v = target_at(problem, &fx, radius * rng.gen::<f64>(), &mut rng);
            (u, v)
        })
        .collect())
}

fn claimed_or_declared<'a, P: ModelProblem + ?Sized>(
    problem: &'a P,
    claimed: Option<&'a [f64]>,
) -> Result<&'a [f64], VerifyError> {
    let c = claimed.unwrap_or_else(|| problem.tame_constants());
    let need = problem.domain_space().top_level() + 1;
    if c.len() != need || c.iter().any(|v| !(*v > 0.0)) {
        return Err(VerifyError::Domain(format!("need {need} positive constants, got {c:?}")));
    }
    Ok(c)
}

/// Checks `‖f⁻¹u − f⁻¹v‖_n ≤ c_n ‖u − v‖_{n+d}` for every `n ≤ N − d`.
///
/// Preimages are computed by [`solve`] from `x_ref`. The bound is widened by
/// `rel_tol` and by `c_n(‖f(x_u) − u‖_{n+d} + ‖f(x_v) − v‖_{n+d})`, the
/// effect of the actual solve residuals. `claimed` replaces the problem's
/// constants in the inequality (the solver still uses the problem); a solve
/// failure makes the pair inconclusive.
pub fn verify_inverse_lipschitz<P: ModelProblem + ?Sized>(
    problem: &P,
    x_ref: &SpacePoint,
    pairs: &[(SpacePoint, SpacePoint)],
    claimed: Option<&[f64]>,
    opts: &VerifyOptions,
) -> Result<VerificationReport, VerifyError> {
    let c = claimed_or_declared(problem, claimed)?;
    let xs = problem.domain_space();
    let ys = problem.image_space();
    let d = problem.loss();
    let top = xs.top_level();
    assert!(top + d <= ys.top_level(), "image levels must cover n + d");
    type Outcome = Option<(Vec<SampleRow>, Vec<Violation>)>;
    let outcomes: Vec<Result<Outcome, VerifyError>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (u, v))| {
            let ru = solve(problem, u, x_ref, &opts.solve)?;
            let rv = solve(problem, v, x_ref, &opts.solve)?;
            if !(ru.converged() && rv.converged()) {
                return Ok(None);
            }
            let (xu, xv) = (&ru.solution, &rv.solution);
            let res_u = problem.eval(xu).map_err(SolveError::from)?.sub(u);
            let res_v = problem.eval(xv).map_err(SolveError::from)?.sub(v);
            let dx = xu.sub(xv);
            let dy = u.sub(v);
            let mut rows = Vec::with_capacity(top + 1);
            let mut viols = Vec::new();
            for n in 0..=top {
                let lhs = xs.eval(&dx, n);
                let rhs = c[n] * ys.eval(&dy, n + d);
                let slack = c[n] * (ys.eval(&res_u, n + d) + ys.eval(&res_v, n + d));
                let row = SampleRow::new(i, Some(n), lhs, rhs, rhs * (1.0 + opts.rel_tol) + slack);
                if !row.ok {
                    viols.push(violation(&row, vec![u.clone(), v.clone()], None));
                }
                rows.push(row);
            }
            Ok(Some((rows, viols)))
        })
        .collect();
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut inconclusive = 0;
    for o in outcomes {
        match o? {
            Some((r, v)) => {
                rows.extend(r);
                violations.extend(v);
            }
            None => inconclusive += 1,
        }
    }
    Ok(VerificationReport::from_parts(
        "inverse-lipschitz",
        problem.name(),
        pairs.len(),
        opts,
        rows,
        violations,
        inconclusive,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzPathReport {
    pub level: usize,
    /// `c_n ‖v − u‖_{n+d}`, the normalization of the path.
    pub scale: f64,
    /// Normalized `g(1)`.
    pub g1: f64,
    /// Bound on the evaluation error of `g` from the solve residuals.
    pub noise: f64,
    /// `None` when `u = v` (the path is identically zero).
    pub dini: Option<DiniReport>,
    /// Rows check `g(λ) ≤ λ` on the tabulation grid.
    pub report: VerificationReport,
}

/// Runs the Dini mean-value argument on `g(λ) = ‖f⁻¹((1−λ)u + λv) − f⁻¹(u)‖_n`
/// normalized by `c_n ‖v − u‖_{n+d}`, and cross-checks `g(λ) ≤ λ` on a grid.
///
/// Every evaluation of `g` is a solve, warm-started along the segment. The Dini
/// check runs on `interior` points with a tolerance widened by the solve
/// noise `2·max_err / (c_n‖v − u‖ · min step)`.
pub fn verify_lipschitz_path<P: ModelProblem + ?Sized>(
    problem: &P,
    x_ref: &SpacePoint,
    u: &SpacePoint,
    v: &SpacePoint,
    n: usize,
    claimed: Option<&[f64]>,
    interior: usize,
    opts: &VerifyOptions,
) -> Result<LipschitzPathReport, VerifyError> {
    let c = claimed_or_declared(problem, claimed)?;
    let xs = problem.domain_space();
    let ys = problem.image_space();
    let d = problem.loss();
    xs.check_level(n).map_err(SolveError::from)?;
    let scale = c[n] * ys.eval(&v.sub(u), n + d);
    let base = solve(problem, u, x_ref, &opts.solve)?;
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    if scale == 0.0 {
        let rows = grid
            .iter()
            .enumerate()
            .map(|(i, l)| SampleRow::new(i, Some(n), 0.0, *l, *l))
            .collect();
        let report = VerificationReport::from_parts("lipschitz-path", problem.name(), grid.len(), opts, rows, vec![], 0);
        return Ok(LipschitzPathReport {
            level: n,
            scale,
            g1: 0.0,
            noise: 0.0,
            dini: None,
            report,
        });
    }
    if !base.converged() {
        let report = VerificationReport::from_parts("lipschitz-path", problem.name(), 0, opts, vec![], vec![], 1);
        return Ok(LipschitzPathReport {
            level: n,
            scale,
            g1: f64::NAN,
            noise: f64::NAN,
            dini: None,
            report,
        });
    }
    let x_u = base.solution;

    // every λ the check will read
    let dini_opts = DiniCheckOptions {
        tolerance: opts.rel_tol,
        interior,
    };
    let mut lambdas: Vec<f64> = grid.clone();
    for i in 1..=interior {
        let l = i as f64 / (interior + 1) as f64;
        lambdas.push(l);
        lambdas.extend(DINI_STEPS.iter().map(|t| l + t).filter(|x| *x <= 1.0));
    }
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();

    // g(λ) and the error bound c_n ‖f(x_λ) − y_λ‖_{n+d} for each λ
    // solved in increasing λ, each from the previous solution, so every
    // solve starts at a residual of order (λ_i − λ_{i−1})‖v − u‖
    let mut evals = Vec::with_capacity(lambdas.len());
    let mut prev = x_u.clone();
    for &l in &lambdas {
        if l == 0.0 {
            evals.push(Some((0.0, 0.0)));
            continue;
        }
        let y = u.scale(1.0 - l).axpy(l, v);
        let rep = solve(problem, &y, &prev, &opts.solve)?;
        if !rep.converged() {
            evals.push(None);
            continue;
        }
        let res = problem.eval(&rep.solution).map_err(SolveError::from)?.sub(&y);
        let g = xs.eval(&rep.solution.sub(&x_u), n) / scale;
        evals.push(Some((g, c[n] * ys.eval(&res, n + d) / scale)));
        prev = rep.solution;
    }
    let mut table = BTreeMap::new();
    let mut failed = 0;
    for (l, e) in lambdas.iter().zip(evals) {
        match e {
            Some(ge) => {
                table.insert(l.to_bits(), ge);
            }
            None => failed += 1,
        }
    }
    if failed > 0 {
        let report = VerificationReport::from_parts("lipschitz-path", problem.name(), lambdas.len(), opts, vec![], vec![], failed);
        return Ok(LipschitzPathReport {
            level: n,
            scale,
            g1: f64::NAN,
            noise: f64::NAN,
            dini: None,
            report,
        });
    }
    // the base point itself carries a residual too
    let base_err = {
        let res = problem.eval(&x_u).map_err(SolveError::from)?.sub(u);
        c[n] * ys.eval(&res, n + d) / scale
    };
    let max_err = table.values().map(|(_, e)| *e).fold(base_err, f64::max);
    let min_step = DINI_STEPS.iter().copied().fold(f64::INFINITY, f64::min);
    let noise = 2.0 * max_err / min_step;

    let lookup = |l: f64| {
        table
            .get(&l.to_bits())
            .map(|(g, _)| *g)
            .ok_or_else(|| CalculusError::Domain(format!("λ = {l} was not tabulated")))
    };
    let path = ScalarPath::new(lookup);
    let dini = dini_mvt_check_with(
        &path,
        DiniCheckOptions {
            tolerance: dini_opts.tolerance + noise,
            ..dini_opts
        },
    )?;

    let mut rows = Vec::with_capacity(grid.len());
    let mut violations = Vec::new();
    for (i, &l) in grid.iter().enumerate() {
        let (g, e) = table[&l.to_bits()];
        let row = SampleRow::new(i, Some(n), g, l, l * (1.0 + opts.rel_tol) + e + base_err);
        if !row.ok {
            violations.push(violation(&row, vec![u.clone(), v.clone()], Some(format!("λ = {l}"))));
        }
        rows.push(row);
    }
    let g1 = table[&1f64.to_bits()].0;
    let report = VerificationReport::from_parts("lipschitz-path", problem.name(), grid.len(), opts, rows, violations, 0);
    Ok(LipschitzPathReport {
        level: n,
        scale,
        g1,
        noise,
        dini: Some(dini),
        report,
    })
}

/// Declared constants for the injectivity conditions: `c_n` in
/// `‖h‖_n ≤ c_n ‖f′(x)h‖_n` and `c′_n`, `r` in
/// `‖f′(x)h − f′(z)h‖_n ≤ c′_n (‖x−z‖_r ‖h‖_n + ‖x−z‖_n ‖h‖_r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectivityClaim {
    pub c: Vec<f64>,
    pub cprime: Vec<f64>,
    pub r: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectivityReport {
    pub claim: InjectivityClaim,
    pub samples: usize,
    /// Largest sampled `‖h‖_n / ‖f′(x)h‖_n`.
    pub c_est: Vec<f64>,
    /// Largest sampled ratio of the two sides of the second condition.
    pub cprime_est: Vec<f64>,
    /// `1 / (2 c_r c′_r)`.
    pub delta_bound: f64,
    /// Radius of the sampled ball, `min(δ_bound / 2, radius of U at level r)`.
    pub delta: f64,
    /// `(1/c_r − 2δ c′_r)⁻¹`.
    pub c_local: f64,
    pub derivative_bound: VerificationReport,
    pub derivative_modulus: VerificationReport,
    pub local_inverse: VerificationReport,
    pub verdict: Verdict,
}

/// `δ_bound = 1 / (2 c_r c′_r)`.
pub fn injectivity_delta_bound(c_r: f64, cprime_r: f64) -> f64 {
    1.0 / (2.0 * c_r * cprime_r)
}

/// `(1/c_r − 2δ c′_r)⁻¹`, finite for `δ < δ_bound`.
pub fn injectivity_constant(c_r: f64, cprime_r: f64, delta: f64) -> f64 {
    1.0 / (1.0 / c_r - 2.0 * delta * cprime_r)
}

/// Relative tolerance of the injectivity comparisons; they involve only
/// evaluations of `f` and `f′`, so rounding is the only error source.
const INJECTIVITY_REL_TOL: f64 = 1e-12;

/// `rhs` widened by the relative tolerance and by the rounding error of a
/// difference of two quantities of size `magnitude`.
fn widen(rhs: f64, magnitude: f64) -> f64 {
    rhs * (1.0 + INJECTIVITY_REL_TOL) + 4.0 * f64::EPSILON * magnitude
}

/// Samples both injectivity conditions on `U`, then the resulting local
/// estimate `‖x0 − x1‖_r ≤ c ‖f(x0) − f(x1)‖_r` on the `δ`-ball around the
/// domain center.
pub fn verify_injectivity_conditions<P: ModelProblem + ?Sized>(
    problem: &P,
    claim: &InjectivityClaim,
    samples: usize,
    opts: &VerifyOptions,
) -> Result<InjectivityReport, VerifyError> {
    let xs = problem.domain_space();
    let ys = problem.image_space();
    let top = xs.top_level();
    if claim.c.len() != top + 1 || claim.cprime.len() != top + 1 {
        return Err(VerifyError::Domain(format!("need {} constants of each kind", top + 1)));
    }
    if claim.c.iter().chain(&claim.cprime).any(|v| !(*v > 0.0)) {
        return Err(VerifyError::Domain("declared constants must be positive".into()));
    }
    if claim.r > top {
        return Err(VerifyError::Domain(format!("r = {} exceeds the top level {top}", claim.r)));
    }
    let derivative = |x: &SpacePoint, h: &SpacePoint| {
        problem
            .derivative(x, h)
            .ok_or_else(|| VerifyError::Domain(format!("{} has no analytic derivative", problem.name())))
    };
    let r = claim.r;

    type Cond = (Vec<SampleRow>, Vec<SampleRow>, Vec<f64>, Vec<f64>, Vec<Violation>, Vec<Violation>);
    let per_sample: Vec<Result<Cond, VerifyError>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(opts.seed, i);
            let x = sample_in_domain(problem, 1.0, &mut rng);
            let z = sample_in_domain(problem, 1.0, &mut rng);
            let h = xs.random_point(&mut rng);
            let dxh = derivative(&x, &h)?;
            let dzh = derivative(&z, &h)?;
            let diff = dxh.sub(&dzh);
            let xz = x.sub(&z);
            let (mut r1, mut r2, mut e1, mut e2, mut v1, mut v2) =
                (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for n in 0..=top {
                let lhs = xs.eval(&h, n);
                let image = ys.eval(&dxh, n);
                let rhs = claim.c[n] * image;
                let row = SampleRow::new(i, Some(n), lhs, rhs, widen(rhs, 0.0));
                if !row.ok {
                    v1.push(violation(&row, vec![x.clone(), h.clone()], None));
                }
                r1.push(row);
                e1.push(if image > 0.0 { lhs / image } else if lhs > 0.0 { f64::INFINITY } else { 0.0 });

                let lhs = ys.eval(&diff, n);
                let bracket = xs.eval(&xz, r) * xs.eval(&h, n) + xs.eval(&xz, n) * xs.eval(&h, r);
                let rhs = claim.cprime[n] * bracket;
                let magnitude = ys.eval(&dxh, n) + ys.eval(&dzh, n);
                let row = SampleRow::new(i, Some(n), lhs, rhs, widen(rhs, magnitude));
                if !row.ok {
                    v2.push(violation(&row, vec![x.clone(), z.clone(), h.clone()], None));
                }
                r2.push(row);
                e2.push(if bracket > 0.0 { lhs / bracket } else { 0.0 });
            }
            Ok((r1, r2, e1, e2, v1, v2))
        })
        .collect();

    let mut c_est = vec![0.0f64; top + 1];
    let mut cprime_est = vec![0.0f64; top + 1];
    let (mut rows1, mut rows2, mut viol1, mut viol2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for s in per_sample {
        let (r1, r2, e1, e2, v1, v2) = s?;
        for n in 0..=top {
            c_est[n] = c_est[n].max(e1[n]);
            cprime_est[n] = cprime_est[n].max(e2[n]);
        }
        rows1.extend(r1);
        rows2.extend(r2);
        viol1.extend(v1);
        viol2.extend(v2);
    }

    let delta_bound = injectivity_delta_bound(claim.c[r], claim.cprime[r]);
    let delta = (0.5 * delta_bound).min(problem.domain().radii[r]);
    let c_local = injectivity_constant(claim.c[r], claim.cprime[r], delta);

    // pairs in U ∩ {‖x − center‖_r < δ}
    let center = &problem.domain().center;
    let in_ball = |rng: &mut ChaCha8Rng| {
        let x = sample_in_domain(problem, 1.0, rng);
        let off = x.sub(center);
        let a = xs.eval(&off, r);
        let t = if a > 0.0 { (0.999 * delta / a).min(1.0) } else { 1.0 };
        center.axpy(t, &off)
    };
    let local: Vec<Result<(SampleRow, Option<Violation>), VerifyError>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(opts.seed ^ 0x9e37_79b9_7f4a_7c15, i);
            let x0 = in_ball(&mut rng);
            let x1 = in_ball(&mut rng);
            let f0 = problem.eval(&x0).map_err(SolveError::from)?;
            let f1 = problem.eval(&x1).map_err(SolveError::from)?;
            let lhs = xs.eval(&x0.sub(&x1), r);
            let rhs = c_local * ys.eval(&f0.sub(&f1), r);
            let magnitude = c_local * (ys.eval(&f0, r) + ys.eval(&f1, r));
            let row = SampleRow::new(i, Some(r), lhs, rhs, widen(rhs, magnitude));
            let v = (!row.ok).then(|| violation(&row, vec![x0, x1], None));
            Ok((row, v))
        })
        .collect();
    let mut rows3 = Vec::with_capacity(samples);
    let mut viol3 = Vec::new();
    for o in local {
        let (row, v) = o?;
        rows3.push(row);
        viol3.extend(v);
    }

    let inj_opts = VerifyOptions {
        rel_tol: INJECTIVITY_REL_TOL,
        tol: 0.0,
        ..*opts
    };
    let name = problem.name();
    let derivative_bound = VerificationReport::from_parts("injectivity-derivative-bound", name, samples, &inj_opts, rows1, viol1, 0);
    let derivative_modulus = VerificationReport::from_parts("injectivity-derivative-modulus", name, samples, &inj_opts, rows2, viol2, 0);
    let local_inverse = VerificationReport::from_parts("injectivity-local-inverse", name, samples, &inj_opts, rows3, viol3, 0);
    let verdict = if derivative_bound.passed() && derivative_modulus.passed() && local_inverse.passed() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(InjectivityReport {
        claim: claim.clone(),
        samples,
        c_est,
        cprime_est,
        delta_bound,
        delta,
        c_local,
        derivative_bound,
        derivative_modulus,
        local_inverse,
        verdict,
    })
}

/// Declared injectivity constants of a registered problem, where it has any.
///
/// For `u + u²` on `M` modes, `f′(x)h − f′(z)h = 2(x − z)h` and the weighted
/// sup-norms satisfy `‖ab‖_n ≤ 2^n (2M+1)(‖a‖_0‖b‖_n + ‖a‖_n‖b‖_0)`, so
/// `c′_n = 2^{n+1}(2M+1)` with `r = 0`. The antiderivative problem gains a
/// derivative in `f′` and satisfies no loss-free bound of the first kind.
pub fn injectivity_claim<P: ModelProblem + ?Sized>(problem: &P) -> Option<InjectivityClaim> {
    let levels = problem.domain_space().top_level();
    match problem.name() {
        "scalar-quadratic" => Some(InjectivityClaim {
            c: vec![2.0; levels + 1],
            cprime: vec![0.25; levels + 1],
            r: 0,
        }),
        "fourier-quadratic" => {
            let modes = problem.domain_space().zero().modes()? as f64;
            Some(InjectivityClaim {
                c: problem.tame_constants().to_vec(),
                cprime: (0..=levels).map(|n| 2f64.powi(n as i32 + 1) * (2.0 * modes + 1.0)).collect(),
                r: 0,
            })
        }
        _ => None,
    }
}
