//! Python bindings: `import frechet_solve`.

use frechet_core::implicit::scalar::ShiftedScalar;
use frechet_core::implicit::{verify_ift_estimate, IftOptions};
use frechet_core::ode::{build_cauchy, cauchy_solve, CurveSpace, GridFunction, ODE_NAMES};
use frechet_core::problems::{build_problem, catalog, DynProblem};
use frechet_core::solver::{solve as core_solve, SolveOptions, SolveReport};
use frechet_core::spaces::{ModelSpace, Seminorms, SpacePoint, Vector};
use frechet_core::verify::{
    injectivity_claim, sample_image_pairs, verify_injectivity_conditions,
    verify_inverse_lipschitz, verify_surjectivity, Verdict, VerificationReport, VerifyOptions,
};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_json(v: &impl Serialize) -> PyResult<String> {
    serde_json::to_string(v).map_err(runtime_err)
}

/// A point of a model space: Euclidean coordinates or Fourier coefficients.
#[pyclass(name = "Point", module = "frechet_solve", frozen)]
pub struct PyPoint {
    inner: SpacePoint,
}

#[pymethods]
impl PyPoint {
    #[staticmethod]
    fn real(coords: Vec<f64>) -> Self {
        Self { inner: SpacePoint::real(coords) }
    }

    #[staticmethod]
    fn scalar(x: f64) -> Self {
        Self { inner: SpacePoint::scalar(x) }
    }

    /// `amp * cos(j θ)` truncated at `modes`.
    #[staticmethod]
    fn cosine(modes: usize, j: usize, amp: f64) -> Self {
        Self { inner: SpacePoint::cosine(modes, j, amp) }
    }

    /// Coefficients for `j = -M..=M`, in that order.
    #[staticmethod]
    fn fourier(coeffs: Vec<Complex64>) -> PyResult<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(value_err("need an odd number 2M+1 of coefficients"));
        }
        Ok(Self { inner: SpacePoint::from_coefficients(coeffs) })
    }

    #[getter]
    fn modes(&self) -> Option<usize> {
        self.inner.modes()
    }

    #[getter]
    fn coords(&self) -> PyResult<Vec<f64>> {
        match &self.inner {
            SpacePoint::Euclidean(v) => Ok(v.clone()),
            SpacePoint::Fourier(_) => Err(value_err("a Fourier point has no coordinates")),
        }
    }

    #[getter]
    fn coeffs(&self) -> PyResult<Vec<Complex64>> {
        match &self.inner {
            SpacePoint::Fourier(c) => Ok(c.clone()),
            SpacePoint::Euclidean(_) => Err(value_err("a Euclidean point has no coefficients")),
        }
    }

    fn __add__(&self, other: PyRef<'_, PyPoint>) -> PyResult<Self> {
        same_shape(&self.inner, &other.inner)?;
        Ok(Self { inner: self.inner.add(&other.inner) })
    }

    fn __sub__(&self, other: PyRef<'_, PyPoint>) -> PyResult<Self> {
        same_shape(&self.inner, &other.inner)?;
        Ok(Self { inner: self.inner.sub(&other.inner) })
    }

    fn __mul__(&self, s: f64) -> Self {
        Self { inner: self.inner.scale(s) }
    }

    fn __rmul__(&self, s: f64) -> Self {
        self.__mul__(s)
    }

    fn __eq__(&self, other: PyRef<'_, PyPoint>) -> bool {
        self.inner == other.inner
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        match &self.inner {
            SpacePoint::Euclidean(v) => format!("Point.real({v:?})"),
            SpacePoint::Fourier(c) => format!("Point(fourier, modes={})", c.len() / 2),
        }
    }
}

fn same_shape(a: &SpacePoint, b: &SpacePoint) -> PyResult<()> {
    let ok = match (a, b) {
        (SpacePoint::Euclidean(x), SpacePoint::Euclidean(y)) => x.len() == y.len(),
        (SpacePoint::Fourier(x), SpacePoint::Fourier(y)) => x.len() == y.len(),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(value_err("points live in different spaces"))
    }
}

fn check(space: &ModelSpace, p: &SpacePoint) -> PyResult<()> {
    space.check(p).map_err(value_err)
}

/// A registered tame problem `f: U ⊂ X → Y`.
#[pyclass(name = "Problem", module = "frechet_solve", frozen)]
pub struct PyProblem {
    inner: Box<DynProblem>,
}

#[pymethods]
impl PyProblem {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        build_problem(name)
            .map(|inner| Self { inner })
            .ok_or_else(|| value_err(format!("unknown problem {name:?}")))
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    /// Derivative loss `d`.
    #[getter]
    fn loss(&self) -> usize {
        self.inner.loss()
    }

    #[getter]
    fn tame_constants(&self) -> Vec<f64> {
        self.inner.tame_constants().to_vec()
    }

    #[getter]
    fn center(&self) -> PyPoint {
        PyPoint { inner: self.inner.domain().center.clone() }
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.inner.domain().radii.clone()
    }

    fn eval(&self, x: PyRef<'_, PyPoint>) -> PyResult<PyPoint> {
        check(self.inner.domain_space(), &x.inner)?;
        let y = self.inner.eval(&x.inner).map_err(value_err)?;
        Ok(PyPoint { inner: y })
    }

    /// Some `h` with `f'(x) h = v`.
    fn right_inverse(&self, x: PyRef<'_, PyPoint>, v: PyRef<'_, PyPoint>) -> PyResult<PyPoint> {
        check(self.inner.domain_space(), &x.inner)?;
        check(self.inner.image_space(), &v.inner)?;
        let h = self.inner.right_inverse(&x.inner, &v.inner).map_err(value_err)?;
        Ok(PyPoint { inner: h })
    }

    /// Domain seminorms `|x|_0, ..., |x|_N`.
    fn seminorms(&self, x: PyRef<'_, PyPoint>) -> PyResult<Vec<f64>> {
        check(self.inner.domain_space(), &x.inner)?;
        Ok(self.inner.domain_space().profile(&x.inner))
    }

    /// Metric distance in the image space.
    fn image_rho(&self, a: PyRef<'_, PyPoint>, b: PyRef<'_, PyPoint>) -> PyResult<f64> {
        self.inner.image_space().rho(&a.inner, &b.inner).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Problem({:?})", self.inner.name())
    }
}

/// Outcome of a solve.
#[pyclass(name = "SolveResult", module = "frechet_solve", frozen)]
pub struct PySolveResult {
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    residual_rho: f64,
    #[pyo3(get)]
    residual_graded: Vec<f64>,
    #[pyo3(get)]
    outer_iterations: usize,
    json: String,
    solution: SpacePoint,
}

impl PySolveResult {
    fn from_report<X: Serialize>(rep: &SolveReport<X>, solution: SpacePoint) -> PyResult<Self> {
        Ok(Self {
            status: format!("{:?}", rep.status),
            converged: rep.converged(),
            residual_rho: rep.residual_rho,
            residual_graded: rep.residual_graded.clone(),
            outer_iterations: rep.outer_iterations,
            json: to_json(rep)?,
            solution,
        })
    }
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn solution(&self) -> PyPoint {
        PyPoint { inner: self.solution.clone() }
    }

    fn to_json(&self) -> String {
        self.json.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveResult(status={}, residual_rho={:e}, outer_iterations={})",
            self.status, self.residual_rho, self.outer_iterations
        )
    }
}

/// Solve `f(x) = y`, starting from `x0` or the domain center.
#[pyfunction]
#[pyo3(signature = (problem, y, x0=None, eps0=None, tol=None, max_outer=None, k0=None))]
fn solve(
    problem: PyRef<'_, PyProblem>,
    y: PyRef<'_, PyPoint>,
    x0: Option<PyRef<'_, PyPoint>>,
    eps0: Option<f64>,
    tol: Option<f64>,
    max_outer: Option<usize>,
    k0: Option<usize>,
) -> PyResult<PySolveResult> {
    let p = problem.inner.as_ref();
    let d = SolveOptions::default();
    let opts = SolveOptions {
        eps0: eps0.unwrap_or(d.eps0),
        tol: tol.unwrap_or(d.tol),
        max_outer: max_outer.unwrap_or(d.max_outer),
        k0: k0.unwrap_or(d.k0),
        ..d
    };
    let start = x0.map(|x| x.inner.clone()).unwrap_or_else(|| p.domain().center.clone());
    check(p.image_space(), &y.inner)?;
    let rep = core_solve(p, &y.inner, &start, &opts).map_err(value_err)?;
    PySolveResult::from_report(&rep, rep.solution.clone())
}

/// A verification outcome.
#[pyclass(name = "Report", module = "frechet_solve", frozen)]
pub struct PyReport {
    #[pyo3(get)]
    verdict: String,
    #[pyo3(get)]
    max_slack: f64,
    #[pyo3(get)]
    violations: usize,
    csv: String,
    json: String,
}

impl PyReport {
    fn new(rep: &VerificationReport, json: String) -> Self {
        Self {
            verdict: verdict(rep.verdict),
            max_slack: rep.max_slack,
            violations: rep.violations.len(),
            csv: rep.to_csv(),
            json,
        }
    }
}

fn verdict(v: Verdict) -> String {
    format!("{v:?}").to_lowercase()
}

#[pymethods]
impl PyReport {
    #[getter]
    fn passed(&self) -> bool {
        self.verdict == "pass"
    }

    fn to_csv(&self) -> String {
        self.csv.clone()
    }

    fn to_json(&self) -> String {
        self.json.clone()
    }

    fn __repr__(&self) -> String {
        format!("Report(verdict={}, max_slack={:e})", self.verdict, self.max_slack)
    }
}

fn verify_opts(seed: u64) -> VerifyOptions {
    VerifyOptions { seed, ..VerifyOptions::default() }
}

/// Sampled surjectivity of `f` onto a ball of radius `radius` (default: half
/// the domain margin) around `f(center)`.
#[pyfunction]
#[pyo3(signature = (problem, samples=100, seed=0, radius=None))]
fn verify_surj(
    problem: PyRef<'_, PyProblem>,
    samples: usize,
    seed: u64,
    radius: Option<f64>,
) -> PyResult<PyReport> {
    let p = problem.inner.as_ref();
    let x = p.domain().center.clone();
    let r = radius.unwrap_or_else(|| 0.5 * p.domain().margin(p.domain_space(), &x));
    let rep = verify_surjectivity(p, &x, r, samples, &verify_opts(seed)).map_err(runtime_err)?;
    Ok(PyReport::new(&rep, to_json(&rep)?))
}

/// Sampled inverse-Lipschitz estimate on random image pairs near `f(center)`.
#[pyfunction]
#[pyo3(signature = (problem, samples=100, seed=0))]
fn verify_inverse(problem: PyRef<'_, PyProblem>, samples: usize, seed: u64) -> PyResult<PyReport> {
    let p = problem.inner.as_ref();
    let x = p.domain().center.clone();
    let pairs = sample_image_pairs(p, &x, samples, seed).map_err(runtime_err)?;
    let rep = verify_inverse_lipschitz(p, &x, &pairs, None, &verify_opts(seed)).map_err(runtime_err)?;
    Ok(PyReport::new(&rep, to_json(&rep)?))
}

/// Local injectivity conditions; the report covers the local-inverse bound.
#[pyfunction]
#[pyo3(signature = (problem, samples=100, seed=0))]
fn verify_inject(problem: PyRef<'_, PyProblem>, samples: usize, seed: u64) -> PyResult<PyReport> {
    let p = problem.inner.as_ref();
    let claim = injectivity_claim(p)
        .ok_or_else(|| value_err(format!("{} declares no injectivity constants", p.name())))?;
    let rep = verify_injectivity_conditions(p, &claim, samples, &verify_opts(seed))
        .map_err(runtime_err)?;
    let mut out = PyReport::new(&rep.local_inverse, to_json(&rep)?);
    out.verdict = verdict(rep.verdict);
    Ok(out)
}

/// Implicit-map estimate for `x + x²/4 - p = 0`.
#[pyfunction]
#[pyo3(signature = (samples=100, seed=0))]
fn verify_ift(samples: usize, seed: u64) -> PyResult<PyReport> {
    let ift = IftOptions { samples, ..IftOptions::default() };
    let rep = verify_ift_estimate(&ShiftedScalar::quadratic(), &ift, &verify_opts(seed))
        .map_err(runtime_err)?;
    Ok(PyReport::new(&rep.report, to_json(&rep)?))
}

/// A solved Cauchy problem sampled on `[-1, 1]`.
#[pyclass(name = "CauchyResult", module = "frechet_solve", frozen)]
pub struct PyCauchyResult {
    #[pyo3(get)]
    solve: Py<PySolveResult>,
    #[pyo3(get)]
    times: Vec<f64>,
    /// C¹ seminorms of the difference to the closed form, when known.
    #[pyo3(get)]
    closed_form_error: Option<Vec<f64>>,
    #[pyo3(get)]
    rk4_gap: Vec<f64>,
    curve: GridFunction,
}

#[pymethods]
impl PyCauchyResult {
    #[getter]
    fn values(&self) -> Vec<PyPoint> {
        self.curve.values.iter().map(|v| PyPoint { inner: v.clone() }).collect()
    }

    #[getter]
    fn derivatives(&self) -> Vec<PyPoint> {
        self.curve.derivatives.iter().map(|v| PyPoint { inner: v.clone() }).collect()
    }
}

/// Solve the rescaled Cauchy problem `name` at parameter `r` on `grid` intervals.
#[pyfunction]
#[pyo3(signature = (name, r=0.5, grid=2000, tol=1e-10))]
fn solve_cauchy(py: Python<'_>, name: &str, r: f64, grid: usize, tol: f64) -> PyResult<PyCauchyResult> {
    let p = build_cauchy(name).ok_or_else(|| value_err(format!("unknown Cauchy problem {name:?}")))?;
    let rep = cauchy_solve(&p, r, grid, tol).map_err(value_err)?;
    let xs = CurveSpace { base: p.space.clone(), intervals: grid };
    let closed_form_error = p.closed_form(r, grid).map(|e| xs.profile(&rep.solution.sub(&e)));
    let reference = p.rk4_reference(r, grid).map_err(runtime_err)?;
    let rk4_gap = xs.profile(&rep.solution.sub(&reference));
    let solve = PySolveResult::from_report(&rep, rep.solution.values[grid / 2].clone())?;
    Ok(PyCauchyResult {
        solve: Py::new(py, solve)?,
        times: rep.solution.times(),
        closed_form_error,
        rk4_gap,
        curve: rep.solution,
    })
}

/// Names of the registered problems.
#[pyfunction]
fn problems() -> Vec<String> {
    catalog().into_iter().map(|i| i.name.to_string()).collect()
}

/// Names of the registered Cauchy problems.
#[pyfunction]
fn cauchy_problems() -> Vec<String> {
    ODE_NAMES.iter().map(|s| s.to_string()).collect()
}

#[pymodule]
fn frechet_solve(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPoint>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolveResult>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyCauchyResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify_surj, m)?)?;
    m.add_function(wrap_pyfunction!(verify_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(verify_inject, m)?)?;
    m.add_function(wrap_pyfunction!(verify_ift, m)?)?;
    m.add_function(wrap_pyfunction!(solve_cauchy, m)?)?;
    m.add_function(wrap_pyfunction!(problems, m)?)?;
    m.add_function(wrap_pyfunction!(cauchy_problems, m)?)?;
    Ok(())
}
