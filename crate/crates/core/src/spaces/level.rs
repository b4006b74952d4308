use serde::{Deserialize, Serialize};

use super::{metric_term, SpaceError};

/// A truncated nonnegative sequence `(s_0, …, s_N)`.
///
/// Indexes the balls `Π_s` and carries tame profiles `s_n = c_n ‖v‖_{n+d}`.
/// Levels past the stored length read as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelVector {
    entries: Vec<f64>,
}

impl LevelVector {
    pub fn new(entries: Vec<f64>) -> Result<Self, SpaceError> {
        if let Some(bad) = entries.iter().find(|e| !(**e >= 0.0)) {
            return Err(SpaceError::InvalidParameter(format!(
                "level vector entries must be nonnegative, got {bad}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn zeros(top_level: usize) -> Self {
        Self {
            entries: vec![0.0; top_level + 1],
        }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn top_level(&self) -> usize {
        self.entries.len().saturating_sub(1)
    }

    pub fn get(&self, n: usize) -> f64 {
        self.entries.get(n).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(n, _)| n)
            .collect()
    }

    /// `|s| = max_n 2^{-n} s_n / (1 + s_n)`, a number in `[0, 1)`.
    pub fn magnitude(&self) -> f64 {
        self.entries
            .iter()
            .enumerate()
            .map(|(n, &s)| metric_term(n, s))
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        assert!(c >= 0.0);
        Self {
            entries: self.entries.iter().map(|s| s * c).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|s| *s == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnitude_examples() {
        assert_eq!(LevelVector::zeros(4).magnitude(), 0.0);
        assert_eq!(LevelVector::new(vec![1.0; 5]).unwrap().magnitude(), 0.5);
        assert_eq!(
            LevelVector::new(vec![0.0, 1.0, 0.0, 0.0]).unwrap().magnitude(),
            0.25
        );
    }

    #[test]
    fn support_tracks_positive_entries() {
        let s = LevelVector::new(vec![0.0, 2.0, 0.0, 1e-300]).unwrap();
        assert_eq!(s.support(), vec![1, 3]);
        assert!(LevelVector::zeros(3).support().is_empty());
    }

    #[test]
    fn rejects_negative_and_nan() {
        assert!(LevelVector::new(vec![1.0, -0.5]).is_err());
        assert!(LevelVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn magnitude_stays_below_one() {
        let s = LevelVector::new(vec![1e6, 1e6]).unwrap();
        assert!(s.magnitude() < 1.0);
    }
}
