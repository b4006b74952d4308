//! Truncated seminorm scales and the metric/ball machinery built on them.
//!
//! A space is described by a [`Seminorms`] family: a representation type for
//! points, a truncation level `N`, and an evaluator for `‖x‖_n`, `n ≤ N`.
//! Everything else (the translation-invariant metric `rho`, its truncation
//! `rho_k`, the graded norms `|x|_k`, the `Π_s` balls and the slice norm
//! `‖x‖_s`) is derived from the evaluator by the provided methods.

mod level;
mod model;
mod reindex;

pub use level::LevelVector;
pub use model::{
    ModelKind, ModelSpace, ModelTag, ReindexSpec, SpaceDescriptor, SpacePoint, DEFAULT_LEVELS,
    DEFAULT_MODES,
};
pub use reindex::Reindexed;

use rand::Rng;
use thiserror::Error;

/// Errors raised by seminorm evaluation and the derived metric operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("level {level} out of range (truncation level {top})")]
    LevelOutOfRange { level: usize, top: usize },
    #[error("point does not belong to this space: {0}")]
    Mismatch(String),
    #[error("level vector has empty support")]
    EmptySupport,
    #[error("invalid space parameter: {0}")]
    InvalidParameter(String),
}

/// Exact linear arithmetic on a point representation.
pub trait Vector: Clone + std::fmt::Debug + Send + Sync {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn scale(&self, a: f64) -> Self;
    /// `self + a * other`.
    fn axpy(&self, a: f64, other: &Self) -> Self {
        self.add(&other.scale(a))
    }
}

/// `2^{-n} a / (1 + a)`, the level-`n` term shared by `rho` and `|s|`.
#[inline]
pub(crate) fn metric_term(n: usize, a: f64) -> f64 {
    if a.is_infinite() {
        return 0.5f64.powi(n as i32);
    }
    0.5f64.powi(n as i32) * a / (1.0 + a)
}

/// A separating family of seminorms `‖·‖_0, …, ‖·‖_N` on a point type.
///
/// Implementors supply [`eval`](Seminorms::eval) for `n ≤ N`; the range-checked
/// and derived quantities are provided.
pub trait Seminorms: Send + Sync {
    type Point: Vector;

    /// Truncation level `N` (the family has `N + 1` seminorms).
    fn top_level(&self) -> usize;

    /// `‖x‖_n` for `n ≤ top_level()`. Callers guarantee the range.
    fn eval(&self, x: &Self::Point, n: usize) -> f64;

    /// Checks that `x` is a point of this space.
    fn check(&self, x: &Self::Point) -> Result<(), SpaceError>;

    fn zero(&self) -> Self::Point;

    /// A random point with every coordinate of unit order. Not normalized.
    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point;

    fn seminorm(&self, x: &Self::Point, n: usize) -> Result<f64, SpaceError> {
        self.check_level(n)?;
        self.check(x)?;
        Ok(self.eval(x, n))
    }

    fn check_level(&self, n: usize) -> Result<(), SpaceError> {
        if n > self.top_level() {
            Err(SpaceError::LevelOutOfRange {
                level: n,
                top: self.top_level(),
            })
        } else {
            Ok(())
        }
    }

    /// `(‖x‖_0, …, ‖x‖_N)`.
    fn profile(&self, x: &Self::Point) -> Vec<f64> {
        (0..=self.top_level()).map(|n| self.eval(x, n)).collect()
    }

    fn rho(&self, x: &Self::Point, y: &Self::Point) -> Result<f64, SpaceError> {
        self.rho_k(x, y, self.top_level())
    }

    fn rho_k(&self, x: &Self::Point, y: &Self::Point, k: usize) -> Result<f64, SpaceError> {
        self.check_level(k)?;
        self.check(x)?;
        self.check(y)?;
        let diff = x.sub(y);
        Ok((0..=k)
            .map(|n| metric_term(n, self.eval(&diff, n)))
            .fold(0.0, f64::max))
    }

    /// `rho(0, x)` without the subtraction.
    fn rho_zero(&self, x: &Self::Point) -> f64 {
        (0..=self.top_level())
            .map(|n| metric_term(n, self.eval(x, n)))
            .fold(0.0, f64::max)
    }

    /// `|x|_k = max_{i ≤ k} ‖x‖_i`.
    fn graded_norm(&self, x: &Self::Point, k: usize) -> Result<f64, SpaceError> {
        self.check_level(k)?;
        Ok(self.graded_unchecked(x, k))
    }

    fn graded_unchecked(&self, x: &Self::Point, k: usize) -> f64 {
        (0..=k).map(|i| self.eval(x, i)).fold(0.0, f64::max)
    }

    /// Membership in the closed ball `Π_s = {x : ‖x‖_n ≤ s_n ∀n}`.
    fn pi_contains(&self, x: &Self::Point, s: &LevelVector) -> bool {
        (0..=self.top_level()).all(|n| self.eval(x, n) <= s.get(n))
    }

    /// `‖x‖_s = sup_{n ∈ supp s} ‖x‖_n / s_n`, or `+∞` when `x` has mass on a
    /// level outside the support.
    fn s_norm(&self, x: &Self::Point, s: &LevelVector) -> Result<f64, SpaceError> {
        if s.support().is_empty() {
            return Err(SpaceError::EmptySupport);
        }
        let mut out = 0.0f64;
        for n in 0..=self.top_level() {
            let a = self.eval(x, n);
            let sn = s.get(n);
            if sn > 0.0 {
                out = out.max(a / sn);
            } else if a > 0.0 {
                return Ok(f64::INFINITY);
            }
        }
        Ok(out)
    }

    /// Draws a point of `Π_s`: a random point rescaled by a uniform fraction
    /// of the largest admissible factor, shrunk further if rounding pushes it
    /// out of the ball.
    fn sample_in_pi_ball<R: Rng + ?Sized>(&self, s: &LevelVector, rng: &mut R) -> Self::Point {
        let raw = self.random_point(rng);
        let mut factor = f64::INFINITY;
        for n in 0..=self.top_level() {
            let a = self.eval(&raw, n);
            if a > 0.0 {
                factor = factor.min(s.get(n) / a);
            }
        }
        if !factor.is_finite() || factor <= 0.0 {
            return self.zero();
        }
        let mut x = raw.scale(factor * rng.gen::<f64>());
        for _ in 0..1000 {
            if self.pi_contains(&x, s) {
                return x;
            }
            x = x.scale(0.5);
        }
        self.zero()
    }

    /// A random point `x` with `rho(0, x)` equal to `radius` (up to bisection
    /// tolerance). Requires `radius < 1`.
    fn sample_at_radius<R: Rng + ?Sized>(&self, radius: f64, rng: &mut R) -> Self::Point {
        let dir = self.random_point(rng);
        scale_to_radius(|t| self.rho_zero(&dir.scale(t)), radius)
            .map(|t| dir.scale(t))
            .unwrap_or_else(|| self.zero())
    }
}

/// Finds `t ≥ 0` with `phi(t) = target` for a nondecreasing `phi` with
/// `phi(0) = 0`, by bracketing and bisection.
pub(crate) fn scale_to_radius(phi: impl Fn(f64) -> f64, target: f64) -> Option<f64> {
    if target <= 0.0 {
        return Some(0.0);
    }
    let mut hi = 1.0;
    let mut grow = 0;
    while phi(hi) < target {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar() -> ModelSpace {
        ModelSpace::euclidean(1, 3)
    }

    #[test]
    fn zero_point_has_zero_seminorm() {
        let sp = scalar();
        assert_eq!(sp.seminorm(&SpacePoint::real(vec![0.0]), 3).unwrap(), 0.0);
    }

    #[test]
    fn level_out_of_range_is_an_error() {
        let sp = scalar();
        let err = sp.seminorm(&SpacePoint::real(vec![1.0]), 4).unwrap_err();
        assert_eq!(err, SpaceError::LevelOutOfRange { level: 4, top: 3 });
        assert!(sp.rho_k(&sp.zero(), &sp.zero(), 7).is_err());
        assert!(sp.graded_norm(&sp.zero(), 9).is_err());
    }

    #[test]
    fn rho_of_constant_profiles() {
        let sp = scalar();
        let x = SpacePoint::real(vec![1.0]);
        let y = SpacePoint::real(vec![0.0]);
        assert_eq!(sp.rho(&x, &x).unwrap(), 0.0);
        assert_eq!(sp.rho(&x, &y).unwrap(), 0.5);
        let z = SpacePoint::real(vec![3.0]);
        assert_eq!(sp.rho(&z, &y).unwrap(), 0.75);
    }

    #[test]
    fn rho_rejects_mismatched_spaces() {
        let sp = scalar();
        let f = SpacePoint::fourier_zero(2);
        assert!(matches!(
            sp.rho(&sp.zero(), &f),
            Err(SpaceError::Mismatch(_))
        ));
    }

    /// Scalar family with `‖x‖_n = |x| w_n`, for pinning exact profiles.
    struct Weighted(Vec<f64>);

    impl Seminorms for Weighted {
        type Point = SpacePoint;
        fn top_level(&self) -> usize {
            self.0.len() - 1
        }
        fn eval(&self, x: &SpacePoint, n: usize) -> f64 {
            x.coords()[0].abs() * self.0[n]
        }
        fn check(&self, _x: &SpacePoint) -> Result<(), SpaceError> {
            Ok(())
        }
        fn zero(&self) -> SpacePoint {
            SpacePoint::real(vec![0.0])
        }
        fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> SpacePoint {
            SpacePoint::real(vec![rng.gen_range(-1.0..1.0)])
        }
    }

    #[test]
    fn rho_k_only_sees_low_levels() {
        let fam = Weighted(vec![0.0, 1.0, 0.0]);
        let x = SpacePoint::real(vec![1.0]);
        let y = fam.zero();
        assert_eq!(fam.rho_k(&x, &y, 0).unwrap(), 0.0);
        assert_eq!(fam.rho_k(&x, &y, 1).unwrap(), 0.25);
        assert_eq!(fam.rho_k(&x, &y, 2).unwrap(), fam.rho(&x, &y).unwrap());
    }

    #[test]
    fn graded_norm_of_fixed_profile() {
        let fam = Weighted(vec![2.0, 1.0, 5.0]);
        let x = SpacePoint::real(vec![1.0]);
        assert_eq!(fam.graded_norm(&x, 1).unwrap(), 2.0);
        assert_eq!(fam.graded_norm(&x, 2).unwrap(), 5.0);
    }

    #[test]
    fn graded_norm_is_running_max() {
        let sp = ModelSpace::fourier(2, 2);
        // mode 0 = 2, mode 1 = 0.5/2^? chosen so the profile is (2, 2, 2) at least
        let x = SpacePoint::fourier_mode(2, 0, 2.0);
        assert_eq!(sp.graded_norm(&x, 0).unwrap(), 2.0);
        assert_eq!(sp.graded_norm(&sp.zero(), 2).unwrap(), 0.0);
        let y = SpacePoint::fourier_mode(2, 2, 1.0).add(&x);
        // profile (2, 3, 9)
        assert_eq!(sp.graded_norm(&y, 1).unwrap(), 3.0);
        assert_eq!(sp.graded_norm(&y, 2).unwrap(), 9.0);
    }

    #[test]
    fn pi_ball_membership_and_s_norm() {
        let sp = ModelSpace::euclidean(1, 1);
        let s = LevelVector::new(vec![1.0, 1.0]).unwrap();
        assert!(sp.pi_contains(&sp.zero(), &s));
        assert!(sp.pi_contains(&SpacePoint::real(vec![1.0]), &s));
        assert!(!sp.pi_contains(&SpacePoint::real(vec![2.0]), &s));
        assert_eq!(sp.s_norm(&SpacePoint::real(vec![2.0]), &s).unwrap(), 2.0);
        assert_eq!(sp.s_norm(&SpacePoint::real(vec![1.0]), &s).unwrap(), 1.0);
        assert_eq!(sp.s_norm(&sp.zero(), &s).unwrap(), 0.0);
        let empty = LevelVector::zeros(1);
        assert_eq!(
            sp.s_norm(&sp.zero(), &empty),
            Err(SpaceError::EmptySupport)
        );
        let partial = LevelVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            sp.s_norm(&SpacePoint::real(vec![0.5]), &partial).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn s_norm_profile_two_one() {
        // profile (2, 1) against s = (1, 1) on a reindexed scalar family
        let base = ModelSpace::euclidean(1, 1);
        let fam = Reindexed::new(base.clone(), vec![2.0, 1.0], 0).unwrap();
        let s = LevelVector::new(vec![1.0, 1.0]).unwrap();
        let x = SpacePoint::real(vec![1.0]);
        assert_eq!(fam.profile(&x), vec![2.0, 1.0]);
        assert_eq!(fam.s_norm(&x, &s).unwrap(), 2.0);
    }

    #[test]
    fn samples_land_in_the_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sp = ModelSpace::fourier(4, 5);
        let s = LevelVector::new(vec![0.1, 0.3, 0.2, 2.0, 1.0, 5.0]).unwrap();
        for _ in 0..200 {
            let x = sp.sample_in_pi_ball(&s, &mut rng);
            assert!(sp.pi_contains(&x, &s));
        }
    }

    #[test]
    fn radius_sampler_hits_requested_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sp = ModelSpace::fourier(3, 4);
        for r in [0.01, 0.2, 0.4] {
            let x = sp.sample_at_radius(r, &mut rng);
            assert!((sp.rho_zero(&x) - r).abs() < 1e-12);
        }
    }
}
