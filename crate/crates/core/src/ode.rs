//! Cauchy problems `x′(t) = f(t, x(t))`, `x(0) = x₀` with values in a model
//! space, solved through the parameterized equation
//! `F(z, r) = (z′(s) − r f(rs, z(s)), z(0) − x₀) = 0` on `s ∈ [−1, 1]`,
//! so that `x(t) = z(t/r)` for `|t| ≤ r`.
//!
//! Curves live on a uniform grid with `T + 1` nodes and carry explicit
//! derivative values. The linearization `D_zF(z, r)u = (u′ − r D_xf(rs, z)u, u(0))`
//! is inverted by RK4 from `s = 0` outward, with the derivative values set
//! from the right-hand side, so the discrete right inverse is exact.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::implicit::{implicit_solve, ParamBox, ParamProblem};
use crate::problems::{FOURIER_LEVELS, FOURIER_MODES, SCALAR_LEVELS};
use crate::solver::{BoxDomain, ProblemError, SolveError, SolveOptions, SolveReport};
use crate::spaces::{ModelSpace, SpaceError, SpacePoint, Seminorms, Vector};

/// A C¹ curve sampled at `T + 1` uniform nodes on `[−1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    pub values: Vec<SpacePoint>,
    pub derivatives: Vec<SpacePoint>,
}

/// `(v, v₀)`: a sup-normed curve and a point, the image of `F`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyData {
    pub curve: Vec<SpacePoint>,
    pub initial: SpacePoint,
}

fn check_intervals(intervals: usize) -> Result<(), SpaceError> {
    if intervals < 4 || intervals % 2 != 0 {
        return Err(SpaceError::InvalidParameter(format!(
            "grid needs an even number ≥ 4 of intervals, got {intervals}"
        )));
    }
    Ok(())
}

/// Node `i` of a grid with `intervals` steps.
pub fn node(intervals: usize, i: usize) -> f64 {
    -1.0 + 2.0 * i as f64 / intervals as f64
}

/// Number of intervals for a requested step on `[−1, 1]`, rounded up to even.
pub fn intervals_for_step(step: f64) -> usize {
    let t = (2.0 / step).round() as usize;
    (t + t % 2).max(4)
}

impl GridFunction {
    pub fn new(values: Vec<SpacePoint>, derivatives: Vec<SpacePoint>) -> Result<Self, SpaceError> {
        if values.len() != derivatives.len() {
            return Err(SpaceError::Mismatch("values and derivatives differ in length".into()));
        }
        check_intervals(values.len().saturating_sub(1))?;
        Ok(Self {
            values,
            derivatives,
        })
    }

    /// Samples `z` and `z′` at the nodes.
    pub fn sample(
        intervals: usize,
        z: impl Fn(f64) -> SpacePoint,
        dz: impl Fn(f64) -> SpacePoint,
    ) -> Result<Self, SpaceError> {
        check_intervals(intervals)?;
        let s: Vec<f64> = (0..=intervals).map(|i| node(intervals, i)).collect();
        Ok(Self {
            values: s.iter().map(|t| z(*t)).collect(),
            derivatives: s.iter().map(|t| dz(*t)).collect(),
        })
    }

    pub fn constant(x: &SpacePoint, intervals: usize) -> Result<Self, SpaceError> {
        let zero = x.scale(0.0);
        Self::sample(intervals, |_| x.clone(), |_| zero.clone())
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> f64 {
        2.0 / self.intervals() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.intervals()).map(|i| node(self.intervals(), i)).collect()
    }

    /// Index of `s = 0`.
    pub fn center(&self) -> usize {
        self.intervals() / 2
    }

    /// `max(‖z(s_i)‖_n, ‖z′(s_i)‖_n)`.
    pub fn node_seminorm(&self, space: &ModelSpace, i: usize, n: usize) -> f64 {
        space.eval(&self.values[i], n).max(space.eval(&self.derivatives[i], n))
    }

    /// `max_i max(‖z(s_i)‖_n, ‖z′(s_i)‖_n)`.
    pub fn c1_seminorm(&self, space: &ModelSpace, n: usize) -> f64 {
        (0..self.values.len())
            .map(|i| self.node_seminorm(space, i, n))
            .fold(0.0, f64::max)
    }

    /// Central differences of the values at interior nodes `1..T`.
    pub fn central_differences(&self) -> Vec<SpacePoint> {
        let h = self.step();
        (1..self.intervals())
            .map(|i| self.values[i + 1].sub(&self.values[i - 1]).scale(0.5 / h))
            .collect()
    }

    /// `node,level,seminorm` rows of the C¹ seminorm at each node.
    pub fn seminorm_csv(&self, space: &ModelSpace) -> String {
        let mut out = String::from("node,level,seminorm\n");
        for i in 0..self.values.len() {
            for n in 0..=space.top_level() {
                out.push_str(&format!("{i},{n},{:.16e}\n", self.node_seminorm(space, i, n)));
            }
        }
        out
    }

    /// Cubic Hermite value at the midpoint of interval `j`.
    fn hermite_mid(&self, j: usize) -> SpacePoint {
        let h = self.step();
        self.values[j]
            .add(&self.values[j + 1])
            .scale(0.5)
            .axpy(h / 8.0, &self.derivatives[j].sub(&self.derivatives[j + 1]))
    }
}

impl Vector for GridFunction {
    fn add(&self, o: &Self) -> Self {
        Self {
            values: zip_map(&self.values, &o.values, |a, b| a.add(b)),
            derivatives: zip_map(&self.derivatives, &o.derivatives, |a, b| a.add(b)),
        }
    }

    fn sub(&self, o: &Self) -> Self {
        Self {
            values: zip_map(&self.values, &o.values, |a, b| a.sub(b)),
            derivatives: zip_map(&self.derivatives, &o.derivatives, |a, b| a.sub(b)),
        }
    }

    fn scale(&self, a: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v.scale(a)).collect(),
            derivatives: self.derivatives.iter().map(|v| v.scale(a)).collect(),
        }
    }

    fn axpy(&self, a: f64, o: &Self) -> Self {
        Self {
            values: zip_map(&self.values, &o.values, |x, y| x.axpy(a, y)),
            derivatives: zip_map(&self.derivatives, &o.derivatives, |x, y| x.axpy(a, y)),
        }
    }
}

impl Vector for CauchyData {
    fn add(&self, o: &Self) -> Self {
        Self {
            curve: zip_map(&self.curve, &o.curve, |a, b| a.add(b)),
            initial: self.initial.add(&o.initial),
        }
    }

    fn sub(&self, o: &Self) -> Self {
        Self {
            curve: zip_map(&self.curve, &o.curve, |a, b| a.sub(b)),
            initial: self.initial.sub(&o.initial),
        }
    }

    fn scale(&self, a: f64) -> Self {
        Self {
            curve: self.curve.iter().map(|v| v.scale(a)).collect(),
            initial: self.initial.scale(a),
        }
    }

    fn axpy(&self, a: f64, o: &Self) -> Self {
        Self {
            curve: zip_map(&self.curve, &o.curve, |x, y| x.axpy(a, y)),
            initial: self.initial.axpy(a, &o.initial),
        }
    }
}

fn zip_map(a: &[SpacePoint], b: &[SpacePoint], f: impl Fn(&SpacePoint, &SpacePoint) -> SpacePoint) -> Vec<SpacePoint> {
    assert_eq!(a.len(), b.len(), "grid size mismatch");
    a.iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

/// C¹ curves on a fixed grid: `‖z‖_n = max_i max(‖z(s_i)‖_n, ‖z′(s_i)‖_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpace {
    pub base: ModelSpace,
    pub intervals: usize,
}

/// Pairs `(v, v₀)` with `‖(v, v₀)‖_n = max(max_i ‖v(s_i)‖_n, ‖v₀‖_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSpace {
    pub base: ModelSpace,
    pub intervals: usize,
}

fn check_nodes(base: &ModelSpace, points: &[SpacePoint], intervals: usize) -> Result<(), SpaceError> {
    if points.len() != intervals + 1 {
        return Err(SpaceError::Mismatch(format!(
            "expected {} nodes, got {}",
            intervals + 1,
            points.len()
        )));
    }
    points.iter().try_for_each(|p| base.check(p))
}

impl Seminorms for CurveSpace {
    type Point = GridFunction;

    fn top_level(&self) -> usize {
        self.base.top_level()
    }

    fn eval(&self, x: &GridFunction, n: usize) -> f64 {
        x.c1_seminorm(&self.base, n)
    }

    fn check(&self, x: &GridFunction) -> Result<(), SpaceError> {
        check_nodes(&self.base, &x.values, self.intervals)?;
        check_nodes(&self.base, &x.derivatives, self.intervals)
    }

    fn zero(&self) -> GridFunction {
        GridFunction::constant(&self.base.zero(), self.intervals).expect("validated grid")
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> GridFunction {
        let k = self.intervals + 1;
        GridFunction {
            values: (0..k).map(|_| self.base.random_point(rng)).collect(),
            derivatives: (0..k).map(|_| self.base.random_point(rng)).collect(),
        }
    }
}

impl Seminorms for DataSpace {
    type Point = CauchyData;

    fn top_level(&self) -> usize {
        self.base.top_level()
    }

    fn eval(&self, x: &CauchyData, n: usize) -> f64 {
        x.curve
            .iter()
            .map(|v| self.base.eval(v, n))
            .fold(self.base.eval(&x.initial, n), f64::max)
    }

    fn check(&self, x: &CauchyData) -> Result<(), SpaceError> {
        check_nodes(&self.base, &x.curve, self.intervals)?;
        self.base.check(&x.initial)
    }

    fn zero(&self) -> CauchyData {
        CauchyData {
            curve: vec![self.base.zero(); self.intervals + 1],
            initial: self.base.zero(),
        }
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> CauchyData {
        CauchyData {
            curve: (0..=self.intervals).map(|_| self.base.random_point(rng)).collect(),
            initial: self.base.random_point(rng),
        }
    }
}

/// `f(t, x)`.
pub type VectorField = Arc<dyn Fn(f64, &SpacePoint) -> SpacePoint + Send + Sync>;
/// `(t, x, h) ↦ D_xf(t, x)h`.
pub type FieldDerivative = Arc<dyn Fn(f64, &SpacePoint, &SpacePoint) -> SpacePoint + Send + Sync>;
/// `t ↦ x(t)`.
pub type ClosedForm = Arc<dyn Fn(f64) -> SpacePoint + Send + Sync>;

/// `x′ = f(t, x)`, `x(0) = x₀` with `‖D_xf(t, x)h‖_n ≤ c_n ‖h‖_n` for
/// `|t| ≤ r₀` and `x` in the state box `{‖x − center‖_n < radii_n}`.
#[derive(Clone)]
pub struct CauchyProblem {
    pub name: String,
    pub space: ModelSpace,
    pub f: VectorField,
    pub df: FieldDerivative,
    pub c: Vec<f64>,
    pub r0: f64,
    pub x0: SpacePoint,
    pub center: SpacePoint,
    pub radii: Vec<f64>,
    pub exact: Option<ClosedForm>,
}

impl std::fmt::Debug for CauchyProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CauchyProblem")
            .field("name", &self.name)
            .field("c", &self.c)
            .field("r0", &self.r0)
            .field("x0", &self.x0)
            .finish_non_exhaustive()
    }
}

/// `1 + (1 + r₀c)e^{r₀c}`.
pub fn gronwall_value(c: f64, r0: f64) -> f64 {
    1.0 + (1.0 + r0 * c) * (r0 * c).exp()
}

/// `c1_seminorm(u, n) ≤ G_n max(sup_i ‖v(s_i)‖_n, ‖v₀‖_n)`: slack of this
/// bound per level (nonpositive when it holds).
pub fn gronwall_slack(problem: &CauchyProblem, v: &CauchyData, u: &GridFunction) -> Vec<f64> {
    let ds = DataSpace {
        base: problem.space.clone(),
        intervals: u.intervals(),
    };
    (0..=problem.space.top_level())
        .map(|n| u.c1_seminorm(&problem.space, n) - gronwall_constant(n, problem) * ds.eval(v, n))
        .collect()
}

/// The Gronwall constant `1 + (1 + r₀c_n)e^{r₀c_n}` at level `n`.
pub fn gronwall_constant(n: usize, problem: &CauchyProblem) -> f64 {
    gronwall_value(problem.c[n], problem.r0)
}

/// Names accepted by [`build_cauchy`].
pub const ODE_NAMES: [&str; 3] = ["linear-scalar", "linear-fourier", "logistic-scalar"];

/// Coefficient of the linear Fourier demo `x′ = a x`.
pub const LINEAR_FOURIER_RATE: f64 = 0.5;

pub fn build_cauchy(name: &str) -> Option<CauchyProblem> {
    match name {
        "linear-scalar" => Some(CauchyProblem::linear_scalar()),
        "linear-fourier" => Some(CauchyProblem::linear_fourier()),
        "logistic-scalar" => Some(CauchyProblem::logistic_scalar()),
        _ => None,
    }
}

impl CauchyProblem {
    /// `x′ = x`, `x(0) = 1`, `r₀ = 1`.
    pub fn linear_scalar() -> Self {
        let space = ModelSpace::euclidean(1, SCALAR_LEVELS);
        Self {
            name: "linear-scalar".into(),
            c: vec![1.0; SCALAR_LEVELS + 1],
            r0: 1.0,
            x0: SpacePoint::scalar(1.0),
            center: SpacePoint::scalar(0.0),
            radii: vec![f64::INFINITY; SCALAR_LEVELS + 1],
            f: Arc::new(|_, x| x.clone()),
            df: Arc::new(|_, _, h| h.clone()),
            exact: Some(Arc::new(|t| SpacePoint::scalar(t.exp()))),
            space,
        }
    }

    /// `u′ = a u` on the Fourier model with `u(0) = cos θ`.
    pub fn linear_fourier() -> Self {
        let a = LINEAR_FOURIER_RATE;
        let space = ModelSpace::fourier(FOURIER_MODES, FOURIER_LEVELS);
        let x0 = SpacePoint::cosine(FOURIER_MODES, 1, 1.0);
        let x0c = x0.clone();
        Self {
            name: "linear-fourier".into(),
            c: vec![a; FOURIER_LEVELS + 1],
            r0: 1.0,
            center: space.zero(),
            radii: vec![f64::INFINITY; FOURIER_LEVELS + 1],
            f: Arc::new(move |_, x| x.scale(a)),
            df: Arc::new(move |_, _, h| h.scale(a)),
            exact: Some(Arc::new(move |t| x0c.scale((a * t).exp()))),
            x0,
            space,
        }
    }

    /// `x′ = x(1 − x)`, `x(0) = 1/4`, on states in `(0, 1)` where
    /// `|D_xf| = |1 − 2x| ≤ 1`.
    pub fn logistic_scalar() -> Self {
        let space = ModelSpace::euclidean(1, SCALAR_LEVELS);
        let x0 = 0.25;
        Self {
            name: "logistic-scalar".into(),
            c: vec![1.0; SCALAR_LEVELS + 1],
            r0: 1.0,
            x0: SpacePoint::scalar(x0),
            center: SpacePoint::scalar(0.5),
            radii: vec![0.5; SCALAR_LEVELS + 1],
            f: Arc::new(|_, x| {
                let v = x.coords()[0];
                SpacePoint::scalar(v * (1.0 - v))
            }),
            df: Arc::new(|_, x, h| SpacePoint::scalar((1.0 - 2.0 * x.coords()[0]) * h.coords()[0])),
            exact: Some(Arc::new(move |t| {
                SpacePoint::scalar(1.0 / (1.0 + (1.0 / x0 - 1.0) * (-t).exp()))
            })),
            space,
        }
    }

    /// Same problem with different condition constants.
    pub fn with_constants(mut self, c: Vec<f64>) -> Self {
        self.c = c;
        self
    }

    fn state_ok(&self, x: &SpacePoint) -> bool {
        let d = x.sub(&self.center);
        self.radii
            .iter()
            .enumerate()
            .all(|(n, r)| self.space.eval(&d, n) < *r)
    }

    fn check_r(&self, r: f64) -> Result<(), ProblemError> {
        if r.abs() < self.r0 {
            Ok(())
        } else {
            Err(ProblemError::Domain(format!("|r| = {} is not below r0 = {}", r.abs(), self.r0)))
        }
    }

    fn check_curve(&self, z: &GridFunction) -> Result<(), ProblemError> {
        match z.values.iter().position(|x| !self.state_ok(x)) {
            None => Ok(()),
            Some(i) => Err(ProblemError::Domain(format!("z leaves the state box at node {i}"))),
        }
    }

    /// A state drawn inside the state box (or a random point when it is
    /// unbounded).
    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> SpacePoint {
        let p = self.space.random_point(rng);
        let ratio = (0..=self.space.top_level())
            .map(|n| self.space.eval(&p, n) / self.radii[n])
            .fold(0.0, f64::max);
        if ratio > 0.0 {
            self.center.axpy(0.99 * rng.gen_range(0.0..1.0) / ratio, &p)
        } else {
            self.center.add(&p)
        }
    }

    /// Largest `‖D_xf(t, x)h‖_n / (c_n ‖h‖_n)` over sampled `(t, x, h)`.
    pub fn condition_ratio<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> f64 {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let t = rng.gen_range(-self.r0..=self.r0);
            let x = self.sample_state(rng);
            let h = self.space.random_point(rng);
            let dh = (self.df)(t, &x, &h);
            for n in 0..=self.space.top_level() {
                let hn = self.space.eval(&h, n);
                if hn > 0.0 {
                    worst = worst.max(self.space.eval(&dh, n) / (self.c[n] * hn));
                }
            }
        }
        worst
    }

    /// `F(z, r) = (s ↦ z′(s) − r f(rs, z(s)), z(0))`.
    pub fn f_eval(&self, z: &GridFunction, r: f64) -> Result<CauchyData, ProblemError> {
        self.check_r(r)?;
        self.check_curve(z)?;
        let curve = z
            .times()
            .iter()
            .zip(z.values.iter().zip(&z.derivatives))
            .map(|(s, (x, dx))| dx.axpy(-r, &(self.f)(r * s, x)))
            .collect();
        Ok(CauchyData {
            curve,
            initial: z.values[z.center()].clone(),
        })
    }

    /// `D_zF(z, r)u = (u′ − r D_xf(rs, z)u, u(0))`.
    pub fn dzf_apply(
        &self,
        z: &GridFunction,
        r: f64,
        u: &GridFunction,
    ) -> Result<CauchyData, ProblemError> {
        self.check_r(r)?;
        self.check_curve(z)?;
        let times = z.times();
        let curve = (0..times.len())
            .map(|i| {
                u.derivatives[i].axpy(-r, &(self.df)(r * times[i], &z.values[i], &u.values[i]))
            })
            .collect();
        Ok(CauchyData {
            curve,
            initial: u.values[u.center()].clone(),
        })
    }

    /// Solves `u′ = r D_xf(rs, z(s))u + v(s)`, `u(0) = v₀` by RK4 marching
    /// forward on `[0, 1]` and backward on `[−1, 0]`.
    ///
    /// Off-node values use cubic Hermite interpolation for `z` and four-point
    /// Lagrange interpolation for `v`. The derivative values of `u` are the
    /// right-hand side at the nodes.
    pub fn linear_right_inverse(
        &self,
        z: &GridFunction,
        r: f64,
        v: &CauchyData,
    ) -> Result<GridFunction, ProblemError> {
        self.check_r(r)?;
        let t = z.intervals();
        if v.curve.len() != t + 1 {
            return Err(ProblemError::Oracle("grid size mismatch".into()));
        }
        let h = z.step();
        let times = z.times();
        let rhs = |s: f64, zs: &SpacePoint, vs: &SpacePoint, u: &SpacePoint| {
            vs.axpy(r, &(self.df)(r * s, zs, u))
        };
        let mut u: Vec<Option<SpacePoint>> = vec![None; t + 1];
        let c = z.center();
        u[c] = Some(v.initial.clone());
        // forward over intervals c..t, then backward over c−1..0
        let order = (c..t).map(|j| (j, true)).chain((0..c).rev().map(|j| (j, false)));
        for (j, forward) in order {
            let (from, to, step) = if forward { (j, j + 1, h) } else { (j + 1, j, -h) };
            let u0 = u[from].clone().expect("marching order");
            let zm = z.hermite_mid(j);
            let vm = lagrange_mid(&v.curve, j);
            let sm = 0.5 * (times[j] + times[j + 1]);
            let k1 = rhs(times[from], &z.values[from], &v.curve[from], &u0);
            let k2 = rhs(sm, &zm, &vm, &u0.axpy(0.5 * step, &k1));
            let k3 = rhs(sm, &zm, &vm, &u0.axpy(0.5 * step, &k2));
            let k4 = rhs(times[to], &z.values[to], &v.curve[to], &u0.axpy(step, &k3));
            let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4);
            u[to] = Some(u0.axpy(step / 6.0, &incr));
        }
        let values: Vec<SpacePoint> = u.into_iter().map(|p| p.expect("every node visited")).collect();
        let derivatives = (0..=t)
            .map(|i| rhs(times[i], &z.values[i], &v.curve[i], &values[i]))
            .collect();
        let out = GridFunction {
            values,
            derivatives,
        };
        self.check_stability(v, &out)?;
        Ok(out)
    }

    fn check_stability(&self, v: &CauchyData, u: &GridFunction) -> Result<(), ProblemError> {
        let ds = DataSpace {
            base: self.space.clone(),
            intervals: u.intervals(),
        };
        for n in 0..=self.space.top_level() {
            let got = u.c1_seminorm(&self.space, n);
            let cap = 10.0 * gronwall_constant(n, self) * ds.eval(v, n) + 1e-6;
            if !got.is_finite() || got > cap {
                return Err(ProblemError::Oracle(format!(
                    "step instability at level {n}: {got} exceeds {cap}"
                )));
            }
        }
        Ok(())
    }

    /// Plain RK4 for `z′ = r f(rs, z)`, `z(0) = x₀`, from `s = 0` outward.
    pub fn rk4_reference(&self, r: f64, intervals: usize) -> Result<GridFunction, ProblemError> {
        self.check_r(r)?;
        check_intervals(intervals).map_err(|e| ProblemError::Domain(e.to_string()))?;
        let h = 2.0 / intervals as f64;
        let g = |s: f64, x: &SpacePoint| (self.f)(r * s, x).scale(r);
        let c = intervals / 2;
        let mut z: Vec<Option<SpacePoint>> = vec![None; intervals + 1];
        z[c] = Some(self.x0.clone());
        let order = (c..intervals).map(|j| (j, true)).chain((0..c).rev().map(|j| (j, false)));
        for (j, forward) in order {
            let (from, to, step) = if forward { (j, j + 1, h) } else { (j + 1, j, -h) };
            let s = node(intervals, from);
            let x = z[from].clone().expect("marching order");
            let k1 = g(s, &x);
            let k2 = g(s + 0.5 * step, &x.axpy(0.5 * step, &k1));
            let k3 = g(s + 0.5 * step, &x.axpy(0.5 * step, &k2));
            let k4 = g(s + step, &x.axpy(step, &k3));
            let next = x.axpy(step / 6.0, &k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4));
            if (0..=self.space.top_level()).any(|n| !self.space.eval(&next, n).is_finite()) {
                return Err(ProblemError::Oracle(format!("RK4 blew up at node {to}")));
            }
            z[to] = Some(next);
        }
        let values: Vec<SpacePoint> = z.into_iter().map(|p| p.expect("every node visited")).collect();
        let derivatives = values
            .iter()
            .enumerate()
            .map(|(i, x)| g(node(intervals, i), x))
            .collect();
        Ok(GridFunction {
            values,
            derivatives,
        })
    }

    /// `z(s) = x(rs)` sampled from the closed form, when one is known.
    pub fn closed_form(&self, r: f64, intervals: usize) -> Option<GridFunction> {
        let x = self.exact.as_ref()?;
        GridFunction::sample(
            intervals,
            |s| x(r * s),
            |s| (self.f)(r * s, &x(r * s)).scale(r),
        )
        .ok()
    }

    /// Per level, `max_i ‖x′(t_i) − f(t_i, x(t_i))‖_n` for `x(t) = z(t/r)`,
    /// `t_i = r s_i`.
    pub fn original_residual(&self, z: &GridFunction, r: f64) -> Vec<f64> {
        let times = z.times();
        (0..=self.space.top_level())
            .map(|n| {
                (0..times.len())
                    .map(|i| {
                        let dx = z.derivatives[i].scale(1.0 / r);
                        self.space.eval(&dx.sub(&(self.f)(r * times[i], &z.values[i])), n)
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// `F(·, r)` on a grid with `intervals` steps as a parameterized problem.
    pub fn operator(&self, intervals: usize) -> Result<CauchyOperator<'_>, SpaceError> {
        check_intervals(intervals)?;
        let top = self.space.top_level();
        if self.c.len() != top + 1 || self.radii.len() != top + 1 {
            return Err(SpaceError::InvalidParameter(
                "need one constant and one radius per level".into(),
            ));
        }
        let xs = CurveSpace {
            base: self.space.clone(),
            intervals,
        };
        Ok(CauchyOperator {
            problem: self,
            constants: (0..=top).map(|n| gronwall_constant(n, self)).collect(),
            domain: BoxDomain::new(
                GridFunction::constant(&self.center, intervals)?,
                self.radii.clone(),
            ),
            params: ParamBox {
                bounds: vec![[-self.r0, self.r0]],
            },
            ys: DataSpace {
                base: self.space.clone(),
                intervals,
            },
            xs,
        })
    }
}

fn lagrange_mid(v: &[SpacePoint], j: usize) -> SpacePoint {
    const INNER: [f64; 4] = [-0.0625, 0.5625, 0.5625, -0.0625];
    const EDGE: [f64; 4] = [0.3125, 0.9375, -0.3125, 0.0625];
    let last = v.len() - 1;
    let (start, w) = if j == 0 {
        (0, EDGE)
    } else if j + 1 == last {
        (last - 3, [EDGE[3], EDGE[2], EDGE[1], EDGE[0]])
    } else {
        (j - 1, INNER)
    };
    (1..4).fold(v[start].scale(w[0]), |acc, k| acc.axpy(w[k], &v[start + k]))
}

/// `(z, r) ↦ (z′ − r f(rs, z), z(0) − x₀)` with the Gronwall constants as
/// tame constants and no loss of derivatives.
pub struct CauchyOperator<'a> {
    problem: &'a CauchyProblem,
    xs: CurveSpace,
    ys: DataSpace,
    constants: Vec<f64>,
    domain: BoxDomain<GridFunction>,
    params: ParamBox,
}

impl CauchyOperator<'_> {
    pub fn problem(&self) -> &CauchyProblem {
        self.problem
    }

    /// The constant curve `x₀`.
    pub fn initial_curve(&self) -> GridFunction {
        GridFunction::constant(&self.problem.x0, self.xs.intervals).expect("validated grid")
    }
}

impl ParamProblem for CauchyOperator<'_> {
    type X = CurveSpace;
    type Y = DataSpace;

    fn name(&self) -> &str {
        &self.problem.name
    }

    fn domain_space(&self) -> &CurveSpace {
        &self.xs
    }

    fn image_space(&self) -> &DataSpace {
        &self.ys
    }

    fn eval(&self, z: &GridFunction, p: &[f64]) -> Result<CauchyData, ProblemError> {
        let mut out = self.problem.f_eval(z, p[0])?;
        out.initial = out.initial.sub(&self.problem.x0);
        Ok(out)
    }

    fn right_inverse(
        &self,
        z: &GridFunction,
        p: &[f64],
        v: &CauchyData,
    ) -> Result<GridFunction, ProblemError> {
        self.problem.linear_right_inverse(z, p[0], v)
    }

    fn tame_constants(&self) -> &[f64] {
        &self.constants
    }

    fn loss(&self) -> usize {
        0
    }

    fn domain(&self) -> &BoxDomain<GridFunction> {
        &self.domain
    }

    /// `F(x₀, 0) = (0, 0)` for the constant curve.
    fn base_point(&self) -> (GridFunction, Vec<f64>) {
        (self.initial_curve(), vec![0.0])
    }

    fn param_box(&self) -> &ParamBox {
        &self.params
    }
}

/// Initial `ε` of ODE solves. Each orbit costs about `2/ε` right-inverse
/// calls, each a full RK4 sweep, so the schedule starts coarse.
pub const ODE_EPS0: f64 = 0.5;

/// Solves `F(z, r) = 0` from the constant curve `x₀` to `rho(F(z, r), 0) ≤ tol`.
pub fn cauchy_solve(
    problem: &CauchyProblem,
    r: f64,
    intervals: usize,
    tol: f64,
) -> Result<SolveReport<GridFunction>, SolveError> {
    if !(r > 0.0 && r < problem.r0) {
        return Err(SolveError::Precondition(format!("r = {r} not in (0, {})", problem.r0)));
    }
    let op = problem.operator(intervals)?;
    let opts = SolveOptions {
        tol,
        eps0: ODE_EPS0,
        ..SolveOptions::default()
    };
    implicit_solve(&op, &[r], &op.initial_curve(), &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::sample_rng;

    fn sc(x: f64) -> SpacePoint {
        SpacePoint::scalar(x)
    }

    #[test]
    fn gronwall_values() {
        assert_eq!(gronwall_value(0.0, 1.0), 2.0);
        assert!((gronwall_value(1.0, 1.0) - (1.0 + 2.0 * std::f64::consts::E)).abs() < 1e-14);
        assert!((gronwall_value(1.0, 1.0) - 6.43656).abs() < 1e-5);
    }

    #[test]
    fn f_eval_examples() {
        let p = CauchyProblem::linear_scalar();
        let zero = GridFunction::constant(&sc(0.0), 8).unwrap();
        let out = p.f_eval(&zero, 0.3).unwrap();
        assert!(out.curve.iter().all(|v| v.coords()[0] == 0.0));
        assert_eq!(out.initial, sc(0.0));

        let z = GridFunction::sample(8, |s| sc(s * s), |s| sc(2.0 * s)).unwrap();
        let out = p.f_eval(&z, 0.0).unwrap();
        assert_eq!(out.curve, z.derivatives);

        let exact = p.closed_form(0.4, 16).unwrap();
        let out = p.f_eval(&exact, 0.4).unwrap();
        assert!(out.curve.iter().all(|v| v.coords()[0].abs() < 1e-14));
        assert_eq!(out.initial, sc(1.0));
        assert!(p.f_eval(&exact, 1.0).is_err());
    }

    #[test]
    fn linear_derivative_is_z_independent() {
        let p = CauchyProblem::linear_scalar();
        let z = GridFunction::sample(8, |s| sc(s.sin()), |s| sc(s.cos())).unwrap();
        let u = GridFunction::sample(8, |s| sc(1.0 + s), |_| sc(1.0)).unwrap();
        let out = p.dzf_apply(&z, 0.5, &u).unwrap();
        for (i, s) in u.times().iter().enumerate() {
            assert!((out.curve[i].coords()[0] - (1.0 - 0.5 * (1.0 + s))).abs() < 1e-15);
        }
        assert_eq!(out.initial, sc(1.0));
    }

    #[test]
    fn right_inverse_is_exact_on_the_grid() {
        let p = CauchyProblem::logistic_scalar();
        let z = GridFunction::sample(20, |s| sc(0.3 + 0.1 * s), |_| sc(0.1)).unwrap();
        let v = CauchyData {
            curve: z.times().iter().map(|s| sc((3.0 * s).cos())).collect(),
            initial: sc(0.2),
        };
        let u = p.linear_right_inverse(&z, 0.7, &v).unwrap();
        let back = p.dzf_apply(&z, 0.7, &u).unwrap();
        let ds = DataSpace {
            base: p.space.clone(),
            intervals: 20,
        };
        assert!(ds.eval(&back.sub(&v), 0) < 1e-14);
    }

    #[test]
    fn right_inverse_exponential() {
        let p = CauchyProblem::linear_scalar();
        let t = intervals_for_step(1e-3);
        let z = GridFunction::constant(&sc(0.0), t).unwrap();
        let v = CauchyData {
            curve: vec![sc(0.0); t + 1],
            initial: sc(1.0),
        };
        let u = p.linear_right_inverse(&z, 0.1, &v).unwrap();
        for (i, s) in u.times().iter().enumerate() {
            assert!((u.values[i].coords()[0] - (0.1 * s).exp()).abs() < 1e-8);
        }
        let zero = CauchyData {
            curve: vec![sc(0.0); t + 1],
            initial: sc(0.0),
        };
        let u = p.linear_right_inverse(&z, 0.1, &zero).unwrap();
        assert!(u.values.iter().all(|x| x.coords()[0] == 0.0));
    }

    #[test]
    fn gronwall_bound_on_random_data() {
        let p = CauchyProblem::linear_scalar();
        let mut rng = sample_rng(3, 0);
        let ds = DataSpace {
            base: p.space.clone(),
            intervals: 40,
        };
        let z = GridFunction::constant(&sc(0.0), 40).unwrap();
        for _ in 0..100 {
            let v = ds.random_point(&mut rng);
            let r = rng.gen_range(-0.99..0.99);
            let u = p.linear_right_inverse(&z, r, &v).unwrap();
            assert!(gronwall_slack(&p, &v, &u).iter().all(|s| *s <= 1e-6));
        }
    }

    #[test]
    fn condition_holds_on_demos() {
        let mut rng = sample_rng(1, 0);
        for name in ODE_NAMES {
            let p = build_cauchy(name).unwrap();
            assert!(p.condition_ratio(200, &mut rng) <= 1.0 + 1e-12, "{name}");
        }
    }

    #[test]
    fn rk4_reference_examples() {
        let p = CauchyProblem::linear_scalar();
        let t = intervals_for_step(1e-3);
        let z = p.rk4_reference(0.5, t).unwrap();
        for (i, s) in z.times().iter().enumerate() {
            assert!((z.values[i].coords()[0] - (0.5 * s).exp()).abs() < 1e-10);
        }
        let mut still = p.clone();
        still.f = Arc::new(|_, x| x.scale(0.0));
        let z = still.rk4_reference(0.5, 8).unwrap();
        assert!(z.values.iter().all(|x| *x == sc(1.0)));
    }

    #[test]
    fn central_differences_match_stored_derivative() {
        let z = GridFunction::sample(64, |s| sc(s.sin()), |s| sc(s.cos())).unwrap();
        let h = z.step();
        for (k, d) in z.central_differences().iter().enumerate() {
            assert!((d.coords()[0] - z.derivatives[k + 1].coords()[0]).abs() < h * h);
        }
    }

    #[test]
    fn cauchy_solve_zero_field_keeps_x0() {
        let mut p = CauchyProblem::linear_scalar();
        p.f = Arc::new(|_, x| x.scale(0.0));
        p.df = Arc::new(|_, _, h| h.scale(0.0));
        let rep = cauchy_solve(&p, 0.5, 8, 1e-12).unwrap();
        assert!(rep.converged());
        assert!(rep.solution.values.iter().all(|x| *x == sc(1.0)));
    }

    #[test]
    fn cauchy_solve_scalar_matches_exponential() {
        let p = CauchyProblem::linear_scalar();
        let rep = cauchy_solve(&p, 0.1, 200, 1e-10).unwrap();
        assert!(rep.converged(), "{:?}", rep.message);
        let exact = p.closed_form(0.1, 200).unwrap();
        let err = CurveSpace {
            base: p.space.clone(),
            intervals: 200,
        }
        .eval(&rep.solution.sub(&exact), 0);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(intervals_for_step(1e-3), 2000);
        assert_eq!(intervals_for_step(0.3), 8);
        assert!(GridFunction::constant(&sc(0.0), 5).is_err());
    }
}
