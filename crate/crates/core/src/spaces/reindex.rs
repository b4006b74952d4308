use rand::Rng;

use super::{SpaceError, Seminorms};

/// The family `|||x|||_n = c_n ‖x‖_{n+d}`, truncated at `N − d`.
///
/// On a graded base this is topologically equivalent to the base family, so
/// it is how a loss of `d` derivatives is absorbed into the image metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Reindexed<F> {
    base: F,
    c: Vec<f64>,
    d: usize,
}

impl<F: Seminorms> Reindexed<F> {
    /// `c` must hold at least `N − d + 1` positive constants; extra entries are
    /// ignored.
    pub fn new(base: F, c: Vec<f64>, d: usize) -> Result<Self, SpaceError> {
        let top = base.top_level();
        if d > top {
            return Err(SpaceError::LevelOutOfRange { level: d, top });
        }
        let len = top - d + 1;
        if c.len() < len {
            return Err(SpaceError::InvalidParameter(format!(
                "need {len} reindexing constants, got {}",
                c.len()
            )));
        }
        if let Some(bad) = c.iter().take(len).find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(SpaceError::InvalidParameter(format!(
                "reindexing constants must be positive, got {bad}"
            )));
        }
        let mut c = c;
        c.truncate(len);
        Ok(Self { base, c, d })
    }

    pub fn base(&self) -> &F {
        &self.base
    }

    pub fn constants(&self) -> &[f64] {
        &self.c
    }

    pub fn loss(&self) -> usize {
        self.d
    }
}

impl<F: Seminorms> Seminorms for Reindexed<F> {
    type Point = F::Point;

    fn top_level(&self) -> usize {
        self.base.top_level() - self.d
    }

    fn eval(&self, x: &F::Point, n: usize) -> f64 {
        self.c[n] * self.base.eval(x, n + self.d)
    }

    fn check(&self, x: &F::Point) -> Result<(), SpaceError> {
        self.base.check(x)
    }

    fn zero(&self) -> F::Point {
        self.base.zero()
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> F::Point {
        self.base.random_point(rng)
    }
}
