//! Parameterized equations `f(x, p) = 0`: solving for a member of
//! `S(p) = {x : f(x, p) = 0}` and checking the distance estimate
//! `d(x, S(p)) ≤ rho'(0, f(x, p))` on a neighbourhood of a base solution.
//!
//! The parameter space is a box in `ℝ^m` with the max-norm.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::solver::{
    solve, BoxDomain, ProblemError, SolveError, SolveOptions, SolveReport, TameProblem,
};
use crate::spaces::{Reindexed, Seminorms, Vector};
use crate::verify::{sample_rng, SampleRow, VerificationReport, Verdict, VerifyError, VerifyOptions};

/// A box `Π [lo_i, hi_i]` of parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamBox {
    pub bounds: Vec<[f64; 2]>,
}

impl ParamBox {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self, VerifyError> {
        if bounds.is_empty() || bounds.iter().any(|[lo, hi]| !(lo <= hi)) {
            return Err(VerifyError::Domain(format!("invalid parameter box {bounds:?}")));
        }
        Ok(Self { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(&self.bounds).all(|(x, [lo, hi])| lo <= x && x <= hi)
    }

    /// `{p : |p − center|_∞ ≤ half_width}` intersected with this box.
    pub fn around(&self, center: &[f64], half_width: f64) -> Self {
        Self {
            bounds: center
                .iter()
                .zip(&self.bounds)
                .map(|(c, [lo, hi])| [(c - half_width).max(*lo), (c + half_width).min(*hi)])
                .collect(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|[lo, hi]| if lo == hi { *lo } else { rng.gen_range(*lo..=*hi) })
            .collect()
    }

    /// All points of the tensor grid with `per_axis` nodes per coordinate.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|[lo, hi]| match per_axis {
                0 => vec![],
                1 => vec![0.5 * (lo + hi)],
                k => (0..k)
                    .map(|i| (lo + (hi - lo) * i as f64 / (k - 1) as f64).min(*hi))
                    .collect(),
            })
            .collect();
        let mut out = vec![vec![]];
        for axis in axes {
            out = out
                .into_iter()
                .flat_map(|pre| {
                    axis.iter().map(move |v| {
                        let mut p = pre.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    pub fn max_half_width(&self) -> f64 {
        self.bounds.iter().map(|[lo, hi]| 0.5 * (hi - lo)).fold(0.0, f64::max)
    }
}

/// `f(x, p)` with a right inverse of `f′((x, p), ·)` for every fixed `p`
/// and parameter-uniform tame constants.
pub trait ParamProblem: Send + Sync {
    type X: Seminorms;
    type Y: Seminorms + Clone;

    fn name(&self) -> &str;
    fn domain_space(&self) -> &Self::X;
    fn image_space(&self) -> &Self::Y;
    fn eval(
        &self,
        x: &<Self::X as Seminorms>::Point,
        p: &[f64],
    ) -> Result<<Self::Y as Seminorms>::Point, ProblemError>;
    fn right_inverse(
        &self,
        x: &<Self::X as Seminorms>::Point,
        p: &[f64],
        v: &<Self::Y as Seminorms>::Point,
    ) -> Result<<Self::X as Seminorms>::Point, ProblemError>;
    fn tame_constants(&self) -> &[f64];
    fn loss(&self) -> usize;
    fn domain(&self) -> &BoxDomain<<Self::X as Seminorms>::Point>;
    /// `(x̄, p̄)` with `f(x̄, p̄) = 0`.
    fn base_point(&self) -> (<Self::X as Seminorms>::Point, Vec<f64>);
    fn param_box(&self) -> &ParamBox;

    fn image_metric(&self) -> Reindexed<Self::Y> {
        Reindexed::new(
            self.image_space().clone(),
            self.tame_constants().to_vec(),
            self.loss(),
        )
        .expect("problem constants validated on construction")
    }
}

/// `f(·, p)` for a fixed parameter, as a [`TameProblem`].
pub struct AtParameter<'a, Q: ?Sized> {
    problem: &'a Q,
    p: Vec<f64>,
}

impl<'a, Q: ParamProblem + ?Sized> AtParameter<'a, Q> {
    pub fn new(problem: &'a Q, p: Vec<f64>) -> Self {
        Self { problem, p }
    }
}

impl<Q: ParamProblem + ?Sized> TameProblem for AtParameter<'_, Q> {
    type X = Q::X;
    type Y = Q::Y;

    fn name(&self) -> &str {
        self.problem.name()
    }

    fn domain_space(&self) -> &Q::X {
        self.problem.domain_space()
    }

    fn image_space(&self) -> &Q::Y {
        self.problem.image_space()
    }

    fn eval(
        &self,
        x: &<Q::X as Seminorms>::Point,
    ) -> Result<<Q::Y as Seminorms>::Point, ProblemError> {
        self.problem.eval(x, &self.p)
    }

    fn right_inverse(
        &self,
        x: &<Q::X as Seminorms>::Point,
        v: &<Q::Y as Seminorms>::Point,
    ) -> Result<<Q::X as Seminorms>::Point, ProblemError> {
        self.problem.right_inverse(x, &self.p, v)
    }

    fn tame_constants(&self) -> &[f64] {
        self.problem.tame_constants()
    }

    fn loss(&self) -> usize {
        self.problem.loss()
    }

    fn domain(&self) -> &BoxDomain<<Q::X as Seminorms>::Point> {
        self.problem.domain()
    }
}

/// Solves `f(x, p) = 0` from `x_init`.
pub fn implicit_solve<Q: ParamProblem + ?Sized>(
    problem: &Q,
    p: &[f64],
    x_init: &<Q::X as Seminorms>::Point,
    opts: &SolveOptions,
) -> Result<SolveReport<<Q::X as Seminorms>::Point>, SolveError> {
    if !problem.param_box().contains(p) {
        return Err(SolveError::Precondition(format!("parameter {p:?} outside the box")));
    }
    let at = AtParameter::new(problem, p.to_vec());
    solve(&at, &problem.image_space().zero(), x_init, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IftOptions {
    pub samples: usize,
    /// Random draws used to confirm `f(B(x̄, δ), O) ⊂ B°(0, ε)` at each
    /// bisection stage.
    pub inclusion_samples: usize,
    /// Optional tensor grid of parameters added to the inclusion check.
    pub grid: Option<usize>,
    pub max_bisections: usize,
}

impl Default for IftOptions {
    fn default() -> Self {
        Self {
            samples: 100,
            inclusion_samples: 200,
            grid: None,
            max_bisections: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicitSample<XP> {
    pub x: XP,
    pub p: Vec<f64>,
    pub solved: Option<XP>,
    /// `rho_X(x, x̂)`, an upper bound for `d(x, S(p))`.
    pub lhs: f64,
    /// `rho'(0, f(x, p))`.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicitReport<XP> {
    /// Radius with `B(x̄, 2ε) ⊂ U`.
    pub eps: f64,
    /// Radius of `U′ = B°(x̄, δ)`.
    pub delta: f64,
    /// Parameter neighbourhood `O`.
    pub neighbourhood: ParamBox,
    pub bisections: usize,
    pub samples: Vec<ImplicitSample<XP>>,
    pub report: VerificationReport,
}

/// Checks `d(x, S(p)) ≤ rho'(0, f(x, p))` on `U′ × O`.
///
/// `ε = 0.45 m_U(x̄)`. Starting from `δ = 0.9ε` and `O` the whole box, both
/// are halved until `rho'(0, f(x, p)) < ε` on every sampled `(x, p)` with
/// `rho(x̄, x) < δ`, `p ∈ O`. Then each sample `(x, p)` is solved from `x`,
/// and the solved point witnesses `d(x, S(p)) ≤ rho(x, x̂)`.
pub fn verify_ift_estimate<Q: ParamProblem + ?Sized>(
    problem: &Q,
    ift: &IftOptions,
    opts: &VerifyOptions,
) -> Result<ImplicitReport<<Q::X as Seminorms>::Point>, VerifyError>
where
    <Q::X as Seminorms>::Point: Send + Sync,
{
    let xs = problem.domain_space();
    let metric = problem.image_metric();
    let (xbar, pbar) = problem.base_point();
    let f0 = problem.eval(&xbar, &pbar).map_err(SolveError::from)?;
    let base_residual = metric.rho_zero(&f0);
    if base_residual > 1e-12 {
        return Err(VerifyError::Domain(format!(
            "f(x̄, p̄) is not zero: rho' = {base_residual:e}"
        )));
    }
    let eps = 0.45 * problem.domain().margin(xs, &xbar);
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(VerifyError::Range(format!("unusable domain margin at x̄: ε = {eps}")));
    }
    let eps = eps.min(0.45);

    let full = problem.param_box();
    let mut delta = 0.9 * eps;
    let mut width = full.max_half_width();
    let mut bisections = 0;
    let neighbourhood = loop {
        let o = full.around(&pbar, width);
        let mut params: Vec<Vec<f64>> = (0..ift.inclusion_samples)
            .map(|i| o.sample(&mut sample_rng(opts.seed ^ 0x0b5e_55ed, i)))
            .collect();
        if let Some(g) = ift.grid {
            params.extend(o.grid(g));
        }
        let ok = params.par_iter().enumerate().all(|(i, p)| {
            let mut rng = sample_rng(opts.seed ^ 0xba11, i);
            let x = xbar.add(&xs.sample_at_radius(delta * rng.gen::<f64>(), &mut rng));
            match problem.eval(&x, p) {
                Ok(fx) => metric.rho_zero(&fx) < eps,
                Err(_) => false,
            }
        });
        if ok {
            break o;
        }
        bisections += 1;
        if bisections > ift.max_bisections {
            return Err(VerifyError::Range(
                "no neighbourhood with f(B(x̄, δ), O) ⊂ B°(0, ε) found".into(),
            ));
        }
        delta *= 0.5;
        width *= 0.5;
    };

    let outcomes: Vec<Result<ImplicitSample<_>, VerifyError>> = (0..ift.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(opts.seed, i);
            let p = neighbourhood.sample(&mut rng);
            let x = xbar.add(&xs.sample_at_radius(delta * rng.gen::<f64>(), &mut rng));
            let rhs = metric.rho_zero(&problem.eval(&x, &p).map_err(SolveError::from)?);
            let rep = implicit_solve(problem, &p, &x, &opts.solve)?;
            if !rep.converged() {
                return Ok(ImplicitSample {
                    x,
                    p,
                    solved: None,
                    lhs: f64::NAN,
                    rhs,
                });
            }
            let lhs = xs.rho(&x, &rep.solution).map_err(SolveError::from)?;
            Ok(ImplicitSample {
                x,
                p,
                solved: Some(rep.solution),
                lhs,
                rhs,
            })
        })
        .collect();
    let mut samples = Vec::with_capacity(ift.samples);
    for o in outcomes {
        samples.push(o?);
    }
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut inconclusive = 0;
    for (i, s) in samples.iter().enumerate() {
        if s.solved.is_none() {
            inconclusive += 1;
            continue;
        }
        let row = SampleRow::new(i, None, s.lhs, s.rhs, s.rhs * (1.0 + opts.rel_tol) + opts.solve.tol);
        if !row.ok {
            violations.push(crate::verify::Violation {
                sample: i,
                level: None,
                slack: row.slack,
                inputs: vec![],
                note: Some(format!("p = {:?}", s.p)),
            });
        }
        rows.push(row);
    }
    let report = VerificationReport::from_parts(
        "implicit-distance",
        problem.name(),
        ift.samples,
        opts,
        rows,
        violations,
        inconclusive,
    );
    debug_assert!(report.verdict != Verdict::Pass || report.violations.is_empty());
    Ok(ImplicitReport {
        eps,
        delta,
        neighbourhood,
        bisections,
        samples,
        report,
    })
}

/// `f(x, p) = g(x) − p` for a scalar map `g` with `g(x̄) = p̄`, on the
/// scalar space of the demos.
pub mod scalar {
    use super::*;
    use crate::problems::ScalarProblem;
    use crate::spaces::{ModelSpace, SpacePoint};

    pub struct ShiftedScalar {
        inner: ScalarProblem,
        params: ParamBox,
        base: f64,
    }

    impl ShiftedScalar {
        /// `g(x) − p` for `p` in `params`, with base point `x̄ = base`.
        pub fn new(inner: ScalarProblem, params: ParamBox, base: f64) -> Self {
            Self {
                inner,
                params,
                base,
            }
        }

        /// `x + x²/4 − p` around `(0, 0)` with `p ∈ [−0.5, 0.5]`.
        pub fn quadratic() -> Self {
            Self::new(
                ScalarProblem::quadratic(),
                ParamBox {
                    bounds: vec![[-0.5, 0.5]],
                },
                0.0,
            )
        }

        /// `x − p` with unit constants.
        pub fn identity() -> Self {
            Self::new(
                ScalarProblem::identity(),
                ParamBox {
                    bounds: vec![[-0.5, 0.5]],
                },
                0.0,
            )
        }
    }

    impl ParamProblem for ShiftedScalar {
        type X = ModelSpace;
        type Y = ModelSpace;

        fn name(&self) -> &str {
            self.inner.name()
        }

        fn domain_space(&self) -> &ModelSpace {
            self.inner.domain_space()
        }

        fn image_space(&self) -> &ModelSpace {
            self.inner.image_space()
        }

        fn eval(&self, x: &SpacePoint, p: &[f64]) -> Result<SpacePoint, ProblemError> {
            Ok(SpacePoint::scalar(self.inner.value(x.coords()[0]) - p[0]))
        }

        fn right_inverse(
            &self,
            x: &SpacePoint,
            _p: &[f64],
            v: &SpacePoint,
        ) -> Result<SpacePoint, ProblemError> {
            self.inner.right_inverse(x, v)
        }

        fn tame_constants(&self) -> &[f64] {
            self.inner.tame_constants()
        }

        fn loss(&self) -> usize {
            0
        }

        fn domain(&self) -> &BoxDomain<SpacePoint> {
            self.inner.domain()
        }

        fn base_point(&self) -> (SpacePoint, Vec<f64>) {
            let x = self.base;
            (SpacePoint::scalar(x), vec![self.inner.value(x)])
        }

        fn param_box(&self) -> &ParamBox {
            &self.params
        }
    }
}

#[cfg(test)]
mod tests {
    use super::scalar::ShiftedScalar;
    use super::*;
    use crate::spaces::SpacePoint;

    #[test]
    fn implicit_solve_examples() {
        let q = ShiftedScalar::quadratic();
        let opts = SolveOptions::default();
        let rep = implicit_solve(&q, &[0.0], &SpacePoint::scalar(0.0), &opts).unwrap();
        assert_eq!(rep.solution, SpacePoint::scalar(0.0));
        let rep = implicit_solve(&q, &[0.5], &SpacePoint::scalar(0.0), &opts).unwrap();
        assert!((rep.solution.coords()[0] - (-2.0 + 6f64.sqrt())).abs() < 1e-10);
        let id = ShiftedScalar::identity();
        let rep = implicit_solve(&id, &[0.3], &SpacePoint::scalar(0.0), &opts).unwrap();
        assert!((rep.solution.coords()[0] - 0.3).abs() < 1e-10);
        assert!(implicit_solve(&id, &[0.9], &SpacePoint::scalar(0.0), &opts).is_err());
    }

    #[test]
    fn ift_estimate_scalar_family() {
        let q = ShiftedScalar::quadratic();
        let rep = verify_ift_estimate(&q, &IftOptions::default(), &VerifyOptions::default()).unwrap();
        assert!(rep.report.passed(), "{:?}", rep.report.violations.first());
        assert!(rep.delta < rep.eps);
        assert_eq!(rep.samples.len(), 100);
    }

    #[test]
    fn ift_identity_is_isometric() {
        let q = ShiftedScalar::identity();
        let rep = verify_ift_estimate(&q, &IftOptions::default(), &VerifyOptions::default()).unwrap();
        for s in &rep.samples {
            // unit constants on every level: rho(x, p) = rho'(0, x − p)
            assert!((s.lhs - s.rhs).abs() < 1e-9, "{s:?}");
        }
    }

    #[test]
    fn param_box_grid_and_neighbourhood() {
        let b = ParamBox::new(vec![[0.0, 1.0], [-1.0, 1.0]]).unwrap();
        assert_eq!(b.grid(3).len(), 9);
        assert_eq!(b.around(&[0.5, 0.9], 0.25).bounds, vec![[0.25, 0.75], [0.65, 1.0]]);
        assert!(ParamBox::new(vec![[1.0, 0.0]]).is_err());
    }
}
