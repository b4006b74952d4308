//! Built-in demo problems and negative-control wrappers.
//!
//! Every demo maps a [`ModelSpace`] to a [`ModelSpace`], so they are all
//! available behind the object type [`DynProblem`] and from the name
//! registry [`build_problem`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::solver::{BoxDomain, ProblemError, TameProblem};
use crate::spaces::{ModelSpace, Seminorms, SpacePoint, Vector};

pub type DynProblem = dyn TameProblem<X = ModelSpace, Y = ModelSpace>;

/// Registered problem names, in listing order.
pub const PROBLEM_NAMES: [&str; 3] = [
    "scalar-quadratic",
    "fourier-quadratic",
    "fourier-antiderivative",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub loss: usize,
}

pub fn catalog() -> Vec<ProblemInfo> {
    vec![
        ProblemInfo {
            name: "scalar-quadratic",
            summary: "f(x) = x + x^2/4 on (-1, 1), c_n = 2",
            loss: 0,
        },
        ProblemInfo {
            name: "fourier-quadratic",
            summary: "f(u) = u + u^2 on trigonometric polynomials, Galerkin right inverse",
            loss: 0,
        },
        ProblemInfo {
            name: "fourier-antiderivative",
            summary: "f(u) = Ju + (Ju)^2 with J the antiderivative, loses one derivative",
            loss: 1,
        },
    ]
}

pub fn build_problem(name: &str) -> Option<Box<DynProblem>> {
    match name {
        "scalar-quadratic" => Some(Box::new(ScalarProblem::quadratic())),
        "fourier-quadratic" => Some(Box::new(FourierQuadratic::new(FOURIER_MODES, FOURIER_LEVELS))),
        "fourier-antiderivative" => Some(Box::new(FourierAntiderivative::new(
            FOURIER_MODES,
            FOURIER_LEVELS,
            1.0,
        ))),
        _ => None,
    }
}

/// Mode cutoff of the Fourier demos. Kept small: seminorm weights grow like
/// `(1 + M)^N`, which amplifies rounding in the top levels.
pub const FOURIER_MODES: usize = 16;
pub const FOURIER_LEVELS: usize = 6;
/// `U = {‖u‖_n < 0.08 · 2^n}` for the Fourier demos.
pub const FOURIER_RADIUS: f64 = 0.08;
/// Multiplier on the largest probed inverse norm.
const CONSTANT_SAFETY: f64 = 1.25;
const PROBE_SEED: u64 = 0x5eed_c0de;
const RANDOM_PROBES: usize = 24;

/// A map `ℝ → ℝ` given by `f` and its derivative, on an interval `U`.
#[derive(Debug, Clone)]
pub struct ScalarProblem {
    name: String,
    f: fn(f64) -> f64,
    fprime: fn(f64) -> f64,
    space: ModelSpace,
    c: Vec<f64>,
    domain: BoxDomain<SpacePoint>,
}

/// Levels of the scalar demos; all seminorms coincide there.
pub const SCALAR_LEVELS: usize = 2;

impl ScalarProblem {
    /// `f` on `(center − radius, center + radius)` with constant `c_n = c`.
    pub fn new(
        name: &str,
        f: fn(f64) -> f64,
        fprime: fn(f64) -> f64,
        c: f64,
        center: f64,
        radius: f64,
    ) -> Self {
        let space = ModelSpace::euclidean(1, SCALAR_LEVELS);
        // one constrained level is enough: every level is the same norm
        let mut radii = vec![f64::INFINITY; SCALAR_LEVELS + 1];
        radii[0] = radius;
        Self {
            name: name.to_string(),
            f,
            fprime,
            space,
            c: vec![c; SCALAR_LEVELS + 1],
            domain: BoxDomain::new(SpacePoint::scalar(center), radii),
        }
    }

    /// `x + x²/4` on `(−1, 1)`; `f′ ≥ 1/2` there, so `c = 2`.
    pub fn quadratic() -> Self {
        Self::new("scalar-quadratic", |x| x + 0.25 * x * x, |x| 1.0 + 0.5 * x, 2.0, 0.0, 1.0)
    }

    /// Same map on a smaller interval.
    pub fn quadratic_on(radius: f64) -> Self {
        Self::new("scalar-quadratic", |x| x + 0.25 * x * x, |x| 1.0 + 0.5 * x, 2.0, 0.0, radius)
    }

    pub fn doubling() -> Self {
        Self::new("scalar-doubling", |x| 2.0 * x, |_| 2.0, 0.5, 0.0, 1.0)
    }

    pub fn identity() -> Self {
        Self::new("scalar-identity", |x| x, |_| 1.0, 1.0, 0.0, 1.0)
    }

    /// The fold `x²`, not injective on any interval around 0.
    pub fn fold() -> Self {
        Self::new("scalar-fold", |x| x * x, |x| 2.0 * x, 2.0, 0.0, 1.0)
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn slope(&self, x: f64) -> f64 {
        (self.fprime)(x)
    }
}

impl TameProblem for ScalarProblem {
    type X = ModelSpace;
    type Y = ModelSpace;

    fn name(&self) -> &str {
        &self.name
    }

    fn domain_space(&self) -> &ModelSpace {
        &self.space
    }

    fn image_space(&self) -> &ModelSpace {
        &self.space
    }

    fn eval(&self, x: &SpacePoint) -> Result<SpacePoint, ProblemError> {
        Ok(SpacePoint::scalar((self.f)(x.coords()[0])))
    }

    fn right_inverse(&self, x: &SpacePoint, v: &SpacePoint) -> Result<SpacePoint, ProblemError> {
        let d = (self.fprime)(x.coords()[0]);
        if d == 0.0 {
            return Err(ProblemError::Oracle(format!("f′ vanishes at {}", x.coords()[0])));
        }
        Ok(SpacePoint::scalar(v.coords()[0] / d))
    }

    fn tame_constants(&self) -> &[f64] {
        &self.c
    }

    fn loss(&self) -> usize {
        0
    }

    fn domain(&self) -> &BoxDomain<SpacePoint> {
        &self.domain
    }

    fn derivative(&self, x: &SpacePoint, h: &SpacePoint) -> Option<SpacePoint> {
        Some(SpacePoint::scalar((self.fprime)(x.coords()[0]) * h.coords()[0]))
    }
}

/// Matrix of `w ↦ u·w` (truncated convolution) on coefficient vectors.
fn multiplication_matrix(u: &[Complex64]) -> DMatrix<Complex64> {
    let len = u.len();
    let m = (len / 2) as i64;
    DMatrix::from_fn(len, len, |row, col| {
        let j = row as i64 - m;
        let k = col as i64 - m;
        let idx = j - k;
        if idx.abs() > m {
            Complex64::new(0.0, 0.0)
        } else {
            u[(idx + m) as usize]
        }
    })
}

/// Solves `(I + a·T_w) h = v` for the truncated convolution `T_w`.
fn solve_multiplier(w: &SpacePoint, a: f64, v: &SpacePoint) -> Result<SpacePoint, ProblemError> {
    let len = w.coeffs().len();
    let mat = DMatrix::identity(len, len) + multiplication_matrix(w.coeffs()) * Complex64::new(a, 0.0);
    let rhs = nalgebra::DVector::from_column_slice(v.coeffs());
    let sol = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| ProblemError::Oracle("Galerkin system is singular".into()))?;
    if sol.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(ProblemError::Oracle("Galerkin solve produced non-finite values".into()));
    }
    Ok(SpacePoint::from_coefficients(sol.iter().copied().collect()))
}

/// Level-`n` operator norms `max_j Σ_k (1+|j|)^n |A⁻¹_{jk}| / (1+|k|)^n` of
/// `A = I + a·T_w`, for `n = 0..=levels`. `None` if `A` is singular.
pub fn inverse_operator_norms(w: &SpacePoint, a: f64, levels: usize) -> Option<Vec<f64>> {
    let len = w.coeffs().len();
    let m = (len / 2) as i64;
    let mat = DMatrix::identity(len, len) + multiplication_matrix(w.coeffs()) * Complex64::new(a, 0.0);
    let inv = mat.try_inverse()?;
    let weight = |n: usize, idx: usize| (1.0 + (idx as i64 - m).abs() as f64).powi(n as i32);
    Some(
        (0..=levels)
            .map(|n| {
                (0..len)
                    .map(|j| {
                        (0..len)
                            .map(|k| weight(n, j) * inv[(j, k)].norm() / weight(n, k))
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max)
            })
            .collect(),
    )
}

/// Largest admissible `|û_j|` in the box `{‖u‖_n < r_n, n ≤ N}`.
fn coefficient_bounds(modes: usize, radii: &[f64]) -> Vec<f64> {
    let m = modes as i64;
    (-m..=m)
        .map(|j| {
            radii
                .iter()
                .enumerate()
                .map(|(n, r)| r / (1.0 + j.abs() as f64).powi(n as i32))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Deterministic real-valued probe points with `|ŵ_j| ≤ bounds_j`: the
/// aligned and alternating extremes, their negatives, and seeded random
/// points.
fn probe_points(bounds: &[f64]) -> Vec<SpacePoint> {
    let len = bounds.len();
    let m = len / 2;
    let shrink = 0.999;
    let mut out = vec![SpacePoint::from_coefficients(vec![Complex64::new(0.0, 0.0); len])];
    for sign in [1.0, -1.0] {
        for alternate in [false, true] {
            let c = (0..len)
                .map(|i| {
                    let j = i as i64 - m as i64;
                    let s = if alternate && j.abs() % 2 == 1 { -sign } else { sign };
                    Complex64::new(s * shrink * bounds[i], 0.0)
                })
                .collect();
            out.push(SpacePoint::from_coefficients(c));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    for _ in 0..RANDOM_PROBES {
        let mut c = vec![Complex64::new(0.0, 0.0); len];
        c[m] = Complex64::new(shrink * bounds[m] * rng.gen_range(-1.0..1.0), 0.0);
        for j in 1..=m {
            let r = shrink * bounds[m + j] * rng.gen::<f64>().sqrt();
            let z = Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
            c[m + j] = z;
            c[m - j] = z.conj();
        }
        out.push(SpacePoint::from_coefficients(c));
    }
    out
}

/// `CONSTANT_SAFETY` times the largest probed inverse norm, per level.
fn probed_constants(probes: &[SpacePoint], a: f64, levels: usize) -> Vec<f64> {
    let mut best = vec![0.0f64; levels + 1];
    for w in probes {
        let norms = inverse_operator_norms(w, a, levels).expect("probe inside the domain");
        for (b, v) in best.iter_mut().zip(norms) {
            *b = b.max(v);
        }
    }
    best.into_iter().map(|b| CONSTANT_SAFETY * b).collect()
}

fn fourier_box(modes: usize, levels: usize) -> BoxDomain<SpacePoint> {
    BoxDomain::new(
        SpacePoint::fourier_zero(modes),
        (0..=levels).map(|n| FOURIER_RADIUS * 2f64.powi(n as i32)).collect(),
    )
}

/// `f(u) = u + u²` on trigonometric polynomials of degree `≤ M`, with the
/// product truncated at `M`. `f′(u)h = h + 2uh`; the right inverse solves the
/// Galerkin system `(I + 2T_u)h = v`.
#[derive(Debug, Clone)]
pub struct FourierQuadratic {
    space: ModelSpace,
    c: Vec<f64>,
    domain: BoxDomain<SpacePoint>,
}

impl FourierQuadratic {
    pub fn new(modes: usize, levels: usize) -> Self {
        let domain = fourier_box(modes, levels);
        let probes = probe_points(&coefficient_bounds(modes, &domain.radii));
        Self {
            space: ModelSpace::fourier(modes, levels),
            c: probed_constants(&probes, 2.0, levels),
            domain,
        }
    }
}

impl TameProblem for FourierQuadratic {
    type X = ModelSpace;
    type Y = ModelSpace;

    fn name(&self) -> &str {
        "fourier-quadratic"
    }

    fn domain_space(&self) -> &ModelSpace {
        &self.space
    }

    fn image_space(&self) -> &ModelSpace {
        &self.space
    }

    fn eval(&self, u: &SpacePoint) -> Result<SpacePoint, ProblemError> {
        Ok(u.add(&u.pointwise_mul(u)))
    }

    fn right_inverse(&self, u: &SpacePoint, v: &SpacePoint) -> Result<SpacePoint, ProblemError> {
        solve_multiplier(u, 2.0, v)
    }

    fn tame_constants(&self) -> &[f64] {
        &self.c
    }

    fn loss(&self) -> usize {
        0
    }

    fn domain(&self) -> &BoxDomain<SpacePoint> {
        &self.domain
    }

    fn derivative(&self, u: &SpacePoint, h: &SpacePoint) -> Option<SpacePoint> {
        Some(h.axpy(2.0, &u.pointwise_mul(h)))
    }
}

/// `(Ju)_j = û_j / (ij)` for `j ≠ 0` and `(Ju)_0 = û_0`.
pub fn antiderivative(u: &SpacePoint) -> SpacePoint {
    let m = u.modes().expect("Fourier point") as i64;
    let mut out = u.antiderivative_meanzero();
    if let SpacePoint::Fourier(c) = &mut out {
        c[m as usize] = u.coefficient(0);
    }
    out
}

/// Inverse of [`antiderivative`].
pub fn antiderivative_inverse(w: &SpacePoint) -> SpacePoint {
    let m = w.modes().expect("Fourier point") as i64;
    let mut out = w.derivative();
    if let SpacePoint::Fourier(c) = &mut out {
        c[m as usize] = w.coefficient(0);
    }
    out
}

/// `f(u) = Ju + a(Ju)²` from `X` (levels `N − 1`) to `Y` (levels `N`).
/// `f′(u)h = (I + 2a T_{Ju}) Jh`, so a right inverse is `J⁻¹(I + 2aT_{Ju})⁻¹`,
/// which costs one derivative: `c_n` is the level-`(n+1)` bound of the
/// multiplier inverse.
#[derive(Debug, Clone)]
pub struct FourierAntiderivative {
    domain_space: ModelSpace,
    image_space: ModelSpace,
    a: f64,
    c: Vec<f64>,
    domain: BoxDomain<SpacePoint>,
}

impl FourierAntiderivative {
    pub fn new(modes: usize, levels: usize, a: f64) -> Self {
        assert!(levels >= 1, "need at least one image level above the loss");
        let domain = fourier_box(modes, levels - 1);
        let m = modes as i64;
        // U is a coefficient box, so J(U) is the box with bounds b_j / |j|
        let bounds: Vec<f64> = coefficient_bounds(modes, &domain.radii)
            .into_iter()
            .zip(-m..=m)
            .map(|(b, j)| if j == 0 { b } else { b / j.abs() as f64 })
            .collect();
        let probes = probe_points(&bounds);
        let image_bounds = probed_constants(&probes, 2.0 * a, levels);
        Self {
            domain_space: ModelSpace::fourier(modes, levels - 1),
            image_space: ModelSpace::fourier(modes, levels),
            a,
            c: image_bounds[1..].to_vec(),
            domain,
        }
    }

    pub fn coefficient(&self) -> f64 {
        self.a
    }
}

impl TameProblem for FourierAntiderivative {
    type X = ModelSpace;
    type Y = ModelSpace;

    fn name(&self) -> &str {
        "fourier-antiderivative"
    }

    fn domain_space(&self) -> &ModelSpace {
        &self.domain_space
    }

    fn image_space(&self) -> &ModelSpace {
        &self.image_space
    }

    fn eval(&self, u: &SpacePoint) -> Result<SpacePoint, ProblemError> {
        let w = antiderivative(u);
        Ok(w.axpy(self.a, &w.pointwise_mul(&w)))
    }

    fn right_inverse(&self, u: &SpacePoint, v: &SpacePoint) -> Result<SpacePoint, ProblemError> {
        let w = solve_multiplier(&antiderivative(u), 2.0 * self.a, v)?;
        Ok(antiderivative_inverse(&w))
    }

    fn tame_constants(&self) -> &[f64] {
        &self.c
    }

    fn loss(&self) -> usize {
        1
    }

    fn domain(&self) -> &BoxDomain<SpacePoint> {
        &self.domain
    }

    fn derivative(&self, u: &SpacePoint, h: &SpacePoint) -> Option<SpacePoint> {
        let ju = antiderivative(u);
        let jh = antiderivative(h);
        Some(jh.axpy(2.0 * self.a, &ju.pointwise_mul(&jh)))
    }
}

/// Negative control: the wrapped right inverse multiplied by `factor`, so
/// `f′(x, h) = v` fails while the declared constants stay the same.
pub struct ScaledInverse<P: ?Sized> {
    pub factor: f64,
    pub inner: Box<P>,
}

impl<P: TameProblem + ?Sized> TameProblem for ScaledInverse<P> {
    type X = P::X;
    type Y = P::Y;

    fn name(&self) -> &str {
        self.inner.name()
    }

    fn domain_space(&self) -> &P::X {
        self.inner.domain_space()
    }

    fn image_space(&self) -> &P::Y {
        self.inner.image_space()
    }

    fn eval(
        &self,
        x: &<P::X as Seminorms>::Point,
    ) -> Result<<P::Y as Seminorms>::Point, ProblemError> {
        self.inner.eval(x)
    }

    fn right_inverse(
        &self,
        x: &<P::X as Seminorms>::Point,
        v: &<P::Y as Seminorms>::Point,
    ) -> Result<<P::X as Seminorms>::Point, ProblemError> {
        Ok(self.inner.right_inverse(x, v)?.scale(self.factor))
    }

    fn tame_constants(&self) -> &[f64] {
        self.inner.tame_constants()
    }

    fn loss(&self) -> usize {
        self.inner.loss()
    }

    fn domain(&self) -> &BoxDomain<<P::X as Seminorms>::Point> {
        self.inner.domain()
    }

    fn derivative(
        &self,
        x: &<P::X as Seminorms>::Point,
        h: &<P::X as Seminorms>::Point,
    ) -> Option<<P::Y as Seminorms>::Point> {
        self.inner.derivative(x, h)
    }
}

/// Negative control: the wrapped problem with different declared constants.
/// Understating them makes every tame estimate false.
pub struct ClaimedConstants<P: ?Sized> {
    pub c: Vec<f64>,
    pub inner: Box<P>,
}

impl<P: TameProblem + ?Sized> ClaimedConstants<P> {
    /// The inner constants divided by `divisor`.
    pub fn understated(inner: Box<P>, divisor: f64) -> Self {
        let c = inner.tame_constants().iter().map(|c| c / divisor).collect();
        Self { c, inner }
    }
}

impl<P: TameProblem + ?Sized> TameProblem for ClaimedConstants<P> {
    type X = P::X;
    type Y = P::Y;

    fn name(&self) -> &str {
        self.inner.name()
    }

    fn domain_space(&self) -> &P::X {
        self.inner.domain_space()
    }

    fn image_space(&self) -> &P::Y {
        self.inner.image_space()
    }

    fn eval(
        &self,
        x: &<P::X as Seminorms>::Point,
    ) -> Result<<P::Y as Seminorms>::Point, ProblemError> {
        self.inner.eval(x)
    }

    fn right_inverse(
        &self,
        x: &<P::X as Seminorms>::Point,
        v: &<P::Y as Seminorms>::Point,
    ) -> Result<<P::X as Seminorms>::Point, ProblemError> {
        self.inner.right_inverse(x, v)
    }

    fn tame_constants(&self) -> &[f64] {
        &self.c
    }

    fn loss(&self) -> usize {
        self.inner.loss()
    }

    fn domain(&self) -> &BoxDomain<<P::X as Seminorms>::Point> {
        self.inner.domain()
    }

    fn derivative(
        &self,
        x: &<P::X as Seminorms>::Point,
        h: &<P::X as Seminorms>::Point,
    ) -> Option<<P::Y as Seminorms>::Point> {
        self.inner.derivative(x, h)
    }
}

/// A point of `U` drawn uniformly in the coefficient box, shrunk by `frac`.
pub fn sample_in_domain<P, R>(
    problem: &P,
    frac: f64,
    rng: &mut R,
) -> SpacePoint
where
    P: TameProblem<X = ModelSpace, Y = ModelSpace> + ?Sized,
    R: Rng + ?Sized,
{
    let space = problem.domain_space();
    let dom = problem.domain();
    let raw = space.random_point(rng);
    // largest scale keeping every level inside its radius
    let mut t = f64::INFINITY;
    for (n, r) in dom.radii.iter().enumerate() {
        let a = space.eval(&raw, n);
        if a > 0.0 && r.is_finite() {
            t = t.min(r / a);
        }
    }
    if !t.is_finite() {
        t = 1.0;
    }
    dom.center.axpy(frac * t * rng.gen::<f64>(), &raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::validate_problem;

    #[test]
    fn registry_builds_every_listed_problem() {
        for name in PROBLEM_NAMES {
            let p = build_problem(name).unwrap();
            assert_eq!(p.name(), name);
            validate_problem(p.as_ref()).unwrap();
        }
        assert!(build_problem("nope").is_none());
        let names: Vec<_> = catalog().iter().map(|i| i.name).collect();
        assert_eq!(names, PROBLEM_NAMES);
    }

    #[test]
    fn antiderivative_round_trip() {
        let u = SpacePoint::cosine(4, 2, 0.3).add(&SpacePoint::fourier_mode(4, 0, 0.1));
        let back = antiderivative_inverse(&antiderivative(&u));
        for (a, b) in back.coeffs().iter().zip(u.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn right_inverses_invert_the_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in PROBLEM_NAMES {
            let p = build_problem(name).unwrap();
            for _ in 0..5 {
                let x = sample_in_domain(p.as_ref(), 0.9, &mut rng);
                let v = p.image_space().random_point(&mut rng);
                let h = p.right_inverse(&x, &v).unwrap();
                let back = p.derivative(&x, &h).unwrap();
                assert!(p.image_space().graded_unchecked(&back.sub(&v), 0) < 1e-12, "{name}");
            }
        }
    }

    #[test]
    fn fourier_constants_are_modest() {
        let p = FourierQuadratic::new(FOURIER_MODES, FOURIER_LEVELS);
        assert!(p.c.iter().all(|c| *c > 1.0 && *c < 500.0), "{:?}", p.c);
        let q = FourierAntiderivative::new(FOURIER_MODES, FOURIER_LEVELS, 1.0);
        assert_eq!(q.c.len(), FOURIER_LEVELS);
    }

    #[test]
    fn scalar_quadratic_solves_to_closed_form() {
        use crate::solver::{solve, SolveOptions};
        let p = ScalarProblem::quadratic();
        let rep = solve(&p, &SpacePoint::scalar(0.5), &SpacePoint::scalar(0.0), &SolveOptions::default())
            .unwrap();
        assert!(rep.converged(), "{rep:?}");
        let x = rep.solution.coords()[0];
        assert!((x - (-2.0 + 6f64.sqrt())).abs() < 1e-10, "{x}");
        assert!(rep.openness.holds && rep.certificates_hold);
    }
}
