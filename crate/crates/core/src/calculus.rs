//! Difference quotients, upper Dini derivatives and the Dini mean-value check.
//!
//! These are verification utilities: the solver never differentiates
//! numerically, it only calls the problem's right-inverse oracle.

use serde::Serialize;
use thiserror::Error;

use crate::spaces::Vector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

/// Default step grid for the Dini limsup estimator.
pub const DINI_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// `(f(x + th) − f(x)) / t` with one Richardson level (`t` and `t/2`).
pub fn dir_derivative_fd<V, E>(
    f: impl Fn(&V) -> Result<V, E>,
    x: &V,
    h: &V,
    t: f64,
) -> Result<V, CalculusError>
where
    V: Vector,
    E: std::fmt::Display,
{
    if !(t > 0.0) {
        return Err(CalculusError::Range(format!("step must be positive, got {t}")));
    }
    let eval = |p: &V| f(p).map_err(|e| CalculusError::Domain(e.to_string()));
    let fx = eval(x)?;
    let quotient = |step: f64| -> Result<V, CalculusError> {
        Ok(eval(&x.axpy(step, h))?.sub(&fx).scale(1.0 / step))
    };
    let coarse = quotient(t)?;
    let fine = quotient(0.5 * t)?;
    Ok(fine.scale(2.0).sub(&coarse))
}

type PathFn<'a> = Box<dyn Fn(f64) -> Result<f64, CalculusError> + Send + Sync + 'a>;

/// A real function on `[0, 1]`, evaluable at arbitrary points.
pub struct ScalarPath<'a> {
    g: PathFn<'a>,
    /// Grid resolution used by callers that tabulate the path.
    pub resolution: f64,
}

impl<'a> ScalarPath<'a> {
    pub fn new(g: impl Fn(f64) -> Result<f64, CalculusError> + Send + Sync + 'a) -> Self {
        Self {
            g: Box::new(g),
            resolution: 1e-4,
        }
    }

    pub fn from_fn(g: impl Fn(f64) -> f64 + Send + Sync + 'a) -> Self {
        Self::new(move |l| Ok(g(l)))
    }

    pub fn eval(&self, lambda: f64) -> Result<f64, CalculusError> {
        (self.g)(lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiniEstimate {
    pub value: f64,
    /// Steps the estimate was taken over.
    pub grid: Vec<f64>,
}

/// Estimates `g⁺(λ)` by the largest difference quotient over `steps`.
pub fn dini_upper(
    path: &ScalarPath<'_>,
    lambda: f64,
    steps: &[f64],
) -> Result<DiniEstimate, CalculusError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(CalculusError::Range(format!("λ = {lambda} not in (0, 1)")));
    }
    let max_step = steps.iter().copied().fold(0.0, f64::max);
    let min_step = steps.iter().copied().fold(f64::INFINITY, f64::min);
    if steps.is_empty() || !(min_step > 0.0) {
        return Err(CalculusError::Range("steps must be positive".into()));
    }
    if lambda + max_step > 1.0 {
        return Err(CalculusError::Range(format!(
            "λ + {max_step} leaves [0, 1]"
        )));
    }
    let g0 = path.eval(lambda)?;
    let mut value = f64::NEG_INFINITY;
    for &t in steps {
        value = value.max((path.eval(lambda + t)? - g0) / t);
    }
    Ok(DiniEstimate {
        value,
        grid: steps.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiniCheckOptions {
    pub tolerance: f64,
    /// Number of interior sample points `λ_i = i / (count + 1)`.
    pub interior: usize,
}

impl Default for DiniCheckOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            interior: 19,
        }
    }
}

/// Outcome of the sampled mean-value check. This is sampled evidence: the
/// hypothesis `g⁺ ≤ 1` can only be falsified on a grid, never certified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiniReport {
    pub hypothesis_holds: bool,
    pub max_slope: f64,
    pub g1: f64,
    /// `true` only when the sampled hypothesis held and `g(1) ≤ 1 + tol`.
    pub verdict: bool,
    pub tolerance: f64,
    pub lambdas: Vec<f64>,
    pub steps: Vec<f64>,
}

pub fn dini_mvt_check(path: &ScalarPath<'_>) -> Result<DiniReport, CalculusError> {
    dini_mvt_check_with(path, DiniCheckOptions::default())
}

pub fn dini_mvt_check_with(
    path: &ScalarPath<'_>,
    opts: DiniCheckOptions,
) -> Result<DiniReport, CalculusError> {
    let g0 = path.eval(0.0)?;
    if g0.abs() > 1e-12 {
        return Err(CalculusError::Precondition(format!("g(0) = {g0} ≠ 0")));
    }
    let lambdas: Vec<f64> = (1..=opts.interior)
        .map(|i| i as f64 / (opts.interior + 1) as f64)
        .collect();
    let mut max_slope = f64::NEG_INFINITY;
    for &l in &lambdas {
        // keep λ + step inside [0, 1] near the right end
        let steps: Vec<f64> = DINI_STEPS.iter().copied().filter(|t| l + t <= 1.0).collect();
        max_slope = max_slope.max(dini_upper(path, l, &steps)?.value);
    }
    let hypothesis_holds = max_slope <= 1.0 + opts.tolerance;
    let g1 = path.eval(1.0)?;
    Ok(DiniReport {
        hypothesis_holds,
        max_slope,
        g1,
        verdict: hypothesis_holds && g1 <= 1.0 + opts.tolerance,
        tolerance: opts.tolerance,
        lambdas,
        steps: DINI_STEPS.to_vec(),
    })
}

/// Two-point Gauss–Legendre nodes on `[-1, 1]`.
const GL2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// `∫₀¹ f′(x0 + t(x1 − x0))(x1 − x0) dt` by composite two-point Gauss–Legendre
/// over `panels` equal panels (exact for integrands of degree ≤ 3 in `t`).
pub fn taylor_integral_remainder<V: Vector>(
    fprime: impl Fn(&V, &V) -> V,
    x0: &V,
    x1: &V,
    panels: usize,
) -> Result<V, CalculusError> {
    if panels < 2 {
        return Err(CalculusError::Range(format!(
            "need at least 2 panels, got {panels}"
        )));
    }
    let dx = x1.sub(x0);
    let width = 1.0 / panels as f64;
    let mut acc: Option<V> = None;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for node in GL2 {
            let t = mid + 0.5 * width * node;
            let term = fprime(&x0.axpy(t, &dx), &dx).scale(0.5 * width);
            acc = Some(match acc {
                Some(a) => a.add(&term),
                None => term,
            });
        }
    }
    Ok(acc.expect("panels >= 2"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpacePoint;
    use std::convert::Infallible;

    fn s(x: f64) -> SpacePoint {
        SpacePoint::scalar(x)
    }

    fn val(p: &SpacePoint) -> f64 {
        p.coords()[0]
    }

    #[test]
    fn fd_linear_is_exact() {
        let f = |x: &SpacePoint| Ok::<_, Infallible>(x.scale(3.0).add(&s(1.0)));
        let d = dir_derivative_fd(f, &s(0.7), &s(2.0), 0.3).unwrap();
        assert!((val(&d) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn fd_quadratic_examples() {
        let f = |x: &SpacePoint| Ok::<_, Infallible>(s(val(x) + val(x) * val(x) / 4.0));
        let d = dir_derivative_fd(f, &s(0.0), &s(1.0), 1e-5).unwrap();
        assert!((val(&d) - 1.0).abs() < 1e-8);
        let sq = |x: &SpacePoint| Ok::<_, Infallible>(s(val(x) * val(x)));
        let d = dir_derivative_fd(sq, &s(1.0), &s(1.0), 1e-5).unwrap();
        assert!((val(&d) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn fd_rejects_nonpositive_step() {
        let f = |x: &SpacePoint| Ok::<_, Infallible>(x.clone());
        assert!(dir_derivative_fd(f, &s(0.0), &s(1.0), 0.0).is_err());
    }

    #[test]
    fn dini_upper_examples() {
        let id = ScalarPath::from_fn(|l| l);
        let e = dini_upper(&id, 0.5, &DINI_STEPS).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        let sin = ScalarPath::from_fn(f64::sin);
        let e = dini_upper(&sin, 0.5, &DINI_STEPS).unwrap();
        assert!((e.value - 0.5f64.cos()).abs() < 1e-4);
        let sq = ScalarPath::from_fn(|l| l * l);
        let e = dini_upper(&sq, 0.5, &DINI_STEPS).unwrap();
        assert!(e.value >= 1.0);
        assert_eq!(e.grid, DINI_STEPS.to_vec());
    }

    #[test]
    fn dini_upper_range_errors() {
        let id = ScalarPath::from_fn(|l| l);
        assert!(dini_upper(&id, 0.995, &DINI_STEPS).is_err());
        assert!(dini_upper(&id, 0.0, &DINI_STEPS).is_err());
        assert!(dini_upper(&id, 0.5, &[0.0]).is_err());
    }

    #[test]
    fn mvt_check_examples() {
        let r = dini_mvt_check(&ScalarPath::from_fn(|l| l)).unwrap();
        assert!(r.hypothesis_holds && r.verdict);
        assert_eq!(r.g1, 1.0);
        let r = dini_mvt_check(&ScalarPath::from_fn(f64::sin)).unwrap();
        assert!(r.hypothesis_holds && r.verdict);
        assert!((r.g1 - 1f64.sin()).abs() < 1e-15);
        let r = dini_mvt_check(&ScalarPath::from_fn(|l| 2.0 * l)).unwrap();
        assert!(!r.hypothesis_holds);
        assert!(!r.verdict);
    }

    #[test]
    fn mvt_check_requires_zero_start() {
        let r = dini_mvt_check(&ScalarPath::from_fn(|l| l + 0.1));
        assert!(matches!(r, Err(CalculusError::Precondition(_))));
    }

    #[test]
    fn mvt_check_never_asserts_false_verdicts() {
        // closed-form paths with g(0) = 0; the verdict may only be true when g(1) ≤ 1
        let paths: Vec<(&str, Box<dyn Fn(f64) -> f64 + Send + Sync>)> = vec![
            ("affine 0.5", Box::new(|l| 0.5 * l)),
            ("affine 1.0", Box::new(|l| l)),
            ("affine 1.5", Box::new(|l| 1.5 * l)),
            ("sin", Box::new(f64::sin)),
            ("sqrt", Box::new(f64::sqrt)),
            ("pow 0.7", Box::new(|l: f64| l.powf(0.7))),
            ("pow 1.5", Box::new(|l: f64| l.powf(1.5))),
            ("2 sin", Box::new(|l: f64| 2.0 * l.sin())),
        ];
        for (name, g) in paths {
            let g1 = g(1.0);
            let r = dini_mvt_check(&ScalarPath::from_fn(g)).unwrap();
            if r.verdict {
                assert!(g1 <= 1.0 + 1e-9, "{name}: false verdict");
            }
        }
    }

    #[test]
    fn remainder_examples() {
        // f(x) = x²/2, f′(x)h = xh
        let r = taylor_integral_remainder(
            |x: &SpacePoint, h: &SpacePoint| s(val(x) * val(h)),
            &s(0.0),
            &s(1.0),
            2,
        )
        .unwrap();
        assert!((val(&r) - 0.5).abs() < 1e-15);
        // f(x) = x³
        let r = taylor_integral_remainder(
            |x: &SpacePoint, h: &SpacePoint| s(3.0 * val(x) * val(x) * val(h)),
            &s(0.0),
            &s(1.0),
            2,
        )
        .unwrap();
        assert!((val(&r) - 1.0).abs() < 1e-15);
        // constant derivative
        let r = taylor_integral_remainder(
            |_: &SpacePoint, h: &SpacePoint| h.scale(4.0),
            &s(-1.0),
            &s(2.0),
            3,
        )
        .unwrap();
        assert!((val(&r) - 12.0).abs() < 1e-14);
    }

    #[test]
    fn remainder_converges_at_fourth_order() {
        // f(x) = x⁶ on [0, 1]: exact increment 1
        let fp = |x: &SpacePoint, h: &SpacePoint| s(6.0 * val(x).powi(5) * val(h));
        let err = |panels| {
            (val(&taylor_integral_remainder(fp, &s(0.0), &s(1.0), panels).unwrap()) - 1.0).abs()
        };
        for panels in [2, 4, 8] {
            let ratio = err(panels) / err(2 * panels);
            assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio} at {panels}");
        }
    }

    #[test]
    fn remainder_rejects_single_panel() {
        let r = taylor_integral_remainder(|_: &SpacePoint, h: &SpacePoint| h.clone(), &s(0.0), &s(1.0), 1);
        assert!(r.is_err());
    }
}
