use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Reindexed, SpaceError, Seminorms, Vector};

/// A point of one of the two concrete model spaces.
///
/// `Fourier` holds the coefficients `û_j`, `j = -M..=M`, stored at index
/// `j + M`. Binary arithmetic between different variants (or different
/// sizes) is a caller bug and panics; use [`Seminorms::check`] to validate
/// untrusted input first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "data", rename_all = "lowercase")]
pub enum SpacePoint {
    Euclidean(Vec<f64>),
    Fourier(Vec<Complex64>),
}

impl SpacePoint {
    pub fn real(coords: Vec<f64>) -> Self {
        SpacePoint::Euclidean(coords)
    }

    pub fn scalar(x: f64) -> Self {
        SpacePoint::Euclidean(vec![x])
    }

    pub fn fourier_zero(modes: usize) -> Self {
        SpacePoint::Fourier(vec![Complex64::new(0.0, 0.0); 2 * modes + 1])
    }

    /// A single coefficient `û_j = value`, all others zero.
    pub fn fourier_mode(modes: usize, j: i64, value: f64) -> Self {
        let mut p = Self::fourier_zero(modes);
        if let SpacePoint::Fourier(c) = &mut p {
            c[(j + modes as i64) as usize] = Complex64::new(value, 0.0);
        }
        p
    }

    /// `amp · cos(jθ)`.
    pub fn cosine(modes: usize, j: usize, amp: f64) -> Self {
        if j == 0 {
            return Self::fourier_mode(modes, 0, amp);
        }
        Self::fourier_mode(modes, j as i64, amp / 2.0).add(&Self::fourier_mode(
            modes,
            -(j as i64),
            amp / 2.0,
        ))
    }

    pub fn from_coefficients(coeffs: Vec<Complex64>) -> Self {
        assert!(coeffs.len() % 2 == 1, "need 2M+1 coefficients");
        SpacePoint::Fourier(coeffs)
    }

    /// Euclidean coordinates. Panics on a Fourier point.
    pub fn coords(&self) -> &[f64] {
        match self {
            SpacePoint::Euclidean(v) => v,
            SpacePoint::Fourier(_) => panic!("coords() on a Fourier point"),
        }
    }

    /// Fourier coefficients. Panics on a Euclidean point.
    pub fn coeffs(&self) -> &[Complex64] {
        match self {
            SpacePoint::Fourier(c) => c,
            SpacePoint::Euclidean(_) => panic!("coeffs() on a Euclidean point"),
        }
    }

    pub fn modes(&self) -> Option<usize> {
        match self {
            SpacePoint::Fourier(c) => Some(c.len() / 2),
            SpacePoint::Euclidean(_) => None,
        }
    }

    pub fn coefficient(&self, j: i64) -> Complex64 {
        let c = self.coeffs();
        let m = (c.len() / 2) as i64;
        if j.abs() > m {
            Complex64::new(0.0, 0.0)
        } else {
            c[(j + m) as usize]
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SpacePoint::Euclidean(v) => v.iter().all(|x| *x == 0.0),
            SpacePoint::Fourier(c) => c.iter().all(|x| x.re == 0.0 && x.im == 0.0),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        match (self, other) {
            (SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => {
                assert_eq!(a.len(), b.len(), "dimension mismatch");
                SpacePoint::Euclidean(a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            }
            (SpacePoint::Fourier(a), SpacePoint::Fourier(b)) => {
                assert_eq!(a.len(), b.len(), "mode cutoff mismatch");
                SpacePoint::Fourier(
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| Complex64::new(f(x.re, y.re), f(x.im, y.im)))
                        .collect(),
                )
            }
            _ => panic!("arithmetic between different model spaces"),
        }
    }

    /// Product of functions. On the Fourier model this is the coefficient
    /// convolution with every mode above the cutoff `M` discarded.
    pub fn pointwise_mul(&self, other: &Self) -> Self {
        match (self, other) {
            (SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => {
                assert_eq!(a.len(), b.len(), "dimension mismatch");
                SpacePoint::Euclidean(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            (SpacePoint::Fourier(a), SpacePoint::Fourier(b)) => {
                assert_eq!(a.len(), b.len(), "mode cutoff mismatch");
                let m = (a.len() / 2) as i64;
                let mut out = vec![Complex64::new(0.0, 0.0); a.len()];
                for j in -m..=m {
                    let lo = (-m).max(j - m);
                    let hi = m.min(j + m);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in lo..=hi {
                        acc += a[(k + m) as usize] * b[(j - k + m) as usize];
                    }
                    out[(j + m) as usize] = acc;
                }
                SpacePoint::Fourier(out)
            }
            _ => panic!("arithmetic between different model spaces"),
        }
    }

    /// `û_j ↦ i j û_j`. Panics on a Euclidean point.
    pub fn derivative(&self) -> Self {
        let c = self.coeffs();
        let m = (c.len() / 2) as i64;
        SpacePoint::Fourier(
            (-m..=m)
                .zip(c)
                .map(|(j, u)| Complex64::new(0.0, j as f64) * u)
                .collect(),
        )
    }

    /// `û_j ↦ û_j / (i j)` for `j ≠ 0`; the mean is dropped.
    pub fn antiderivative_meanzero(&self) -> Self {
        let c = self.coeffs();
        let m = (c.len() / 2) as i64;
        SpacePoint::Fourier(
            (-m..=m)
                .zip(c)
                .map(|(j, u)| {
                    if j == 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        u / Complex64::new(0.0, j as f64)
                    }
                })
                .collect(),
        )
    }

    /// Values `u(θ_m)` on `count` equispaced nodes `θ_m = 2πm/count` (real part).
    pub fn nodal_values(&self, count: usize) -> Vec<f64> {
        let c = self.coeffs();
        let m = (c.len() / 2) as i64;
        (0..count)
            .map(|node| {
                let theta = 2.0 * std::f64::consts::PI * node as f64 / count as f64;
                (-m..=m)
                    .zip(c)
                    .map(|(j, u)| (u * Complex64::from_polar(1.0, j as f64 * theta)).re)
                    .sum()
            })
            .collect()
    }
}

impl Vector for SpacePoint {
    fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    fn scale(&self, a: f64) -> Self {
        match self {
            SpacePoint::Euclidean(v) => SpacePoint::Euclidean(v.iter().map(|x| a * x).collect()),
            SpacePoint::Fourier(c) => SpacePoint::Fourier(c.iter().map(|x| x * a).collect()),
        }
    }

    fn axpy(&self, a: f64, other: &Self) -> Self {
        self.zip_with(other, |x, y| x + a * y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// `ℝ^dim` with every seminorm equal to the max-norm.
    Euclidean { dim: usize },
    /// Trigonometric polynomials of degree `≤ modes` with
    /// `‖u‖_n = max_j (1 + |j|)^n |û_j|`.
    Fourier { modes: usize },
}

/// One of the concrete graded spaces, truncated at `levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpace {
    kind: ModelKind,
    levels: usize,
    /// `(1 + |j|)^n` for the Fourier model, row-major by level.
    weights: Vec<f64>,
    /// Squares of `weights`, so seminorms need one square root per level.
    weights_sq: Vec<f64>,
}

pub const DEFAULT_LEVELS: usize = 16;
pub const DEFAULT_MODES: usize = 64;

impl ModelSpace {
    pub fn new(kind: ModelKind, levels: usize) -> Self {
        let weights = match kind {
            ModelKind::Euclidean { .. } => Vec::new(),
            ModelKind::Fourier { modes } => {
                let m = modes as i64;
                (0..=levels)
                    .flat_map(|n| (-m..=m).map(move |j| (1.0 + j.abs() as f64).powi(n as i32)))
                    .collect()
            }
        };
        let weights_sq = weights.iter().map(|w| w * w).collect();
        Self {
            kind,
            levels,
            weights,
            weights_sq,
        }
    }

    pub fn euclidean(dim: usize, levels: usize) -> Self {
        Self::new(ModelKind::Euclidean { dim }, levels)
    }

    pub fn fourier(modes: usize, levels: usize) -> Self {
        Self::new(ModelKind::Fourier { modes }, levels)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Same model with a different truncation level.
    pub fn with_levels(&self, levels: usize) -> Self {
        Self::new(self.kind, levels)
    }

    /// Weight `(1 + |j|)^n` of coefficient index `idx = j + M`.
    pub fn weight(&self, n: usize, idx: usize) -> f64 {
        match self.kind {
            ModelKind::Euclidean { .. } => 1.0,
            ModelKind::Fourier { modes } => self.weights[n * (2 * modes + 1) + idx],
        }
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        match self.kind {
            ModelKind::Euclidean { dim } => SpaceDescriptor {
                model: ModelTag::Euclidean,
                dim: Some(dim),
                modes: None,
                levels: self.levels,
                reindex: None,
            },
            ModelKind::Fourier { modes } => SpaceDescriptor {
                model: ModelTag::Fourier,
                dim: None,
                modes: Some(modes),
                levels: self.levels,
                reindex: None,
            },
        }
    }
}

impl Seminorms for ModelSpace {
    type Point = SpacePoint;

    fn top_level(&self) -> usize {
        self.levels
    }

    fn eval(&self, x: &SpacePoint, n: usize) -> f64 {
        match x {
            SpacePoint::Euclidean(v) => v.iter().fold(0.0, |m, a| m.max(a.abs())),
            SpacePoint::Fourier(c) => {
                let row = n * c.len();
                let w = &self.weights_sq[row..row + c.len()];
                c.iter()
                    .zip(w)
                    .fold(0.0, |m: f64, (u, w)| m.max(w * u.norm_sqr()))
                    .sqrt()
            }
        }
    }

    fn check(&self, x: &SpacePoint) -> Result<(), SpaceError> {
        match (self.kind, x) {
            (ModelKind::Euclidean { dim }, SpacePoint::Euclidean(v)) if v.len() == dim => Ok(()),
            (ModelKind::Fourier { modes }, SpacePoint::Fourier(c)) if c.len() == 2 * modes + 1 => {
                Ok(())
            }
            _ => Err(SpaceError::Mismatch(format!(
                "expected {:?}, got a point of the other shape",
                self.kind
            ))),
        }
    }

    fn zero(&self) -> SpacePoint {
        match self.kind {
            ModelKind::Euclidean { dim } => SpacePoint::Euclidean(vec![0.0; dim]),
            ModelKind::Fourier { modes } => SpacePoint::fourier_zero(modes),
        }
    }

    /// Euclidean: uniform in `[-1, 1]^dim`. Fourier: a real-valued
    /// trigonometric polynomial (`û_{-j} = conj û_j`) with coefficients
    /// uniform in the unit square.
    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> SpacePoint {
        match self.kind {
            ModelKind::Euclidean { dim } => {
                SpacePoint::Euclidean((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            }
            ModelKind::Fourier { modes } => {
                let mut c = vec![Complex64::new(0.0, 0.0); 2 * modes + 1];
                c[modes] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
                for j in 1..=modes {
                    let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    c[modes + j] = z;
                    c[modes - j] = z.conj();
                }
                SpacePoint::Fourier(c)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Euclidean,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReindexSpec {
    pub c: Vec<f64>,
    pub d: usize,
}

/// Serializable description of a model space, optionally reindexed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub model: ModelTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reindex: Option<ReindexSpec>,
}

fn default_levels() -> usize {
    DEFAULT_LEVELS
}

impl SpaceDescriptor {
    pub fn base(&self) -> Result<ModelSpace, SpaceError> {
        match self.model {
            ModelTag::Euclidean => {
                let dim = self.dim.ok_or_else(|| {
                    SpaceError::InvalidParameter("euclidean model needs \"dim\"".into())
                })?;
                if dim == 0 {
                    return Err(SpaceError::InvalidParameter("dim must be positive".into()));
                }
                Ok(ModelSpace::euclidean(dim, self.levels))
            }
            ModelTag::Fourier => Ok(ModelSpace::fourier(
                self.modes.unwrap_or(DEFAULT_MODES),
                self.levels,
            )),
        }
    }

    /// The described family: the base space, reindexed when requested
    /// (identity constants otherwise).
    pub fn build(&self) -> Result<Reindexed<ModelSpace>, SpaceError> {
        let base = self.base()?;
        match &self.reindex {
            Some(r) => Reindexed::new(base, r.c.clone(), r.d),
            None => {
                let c = vec![1.0; self.levels + 1];
                Reindexed::new(base, c, 0)
            }
        }
    }
}
