//! Task parameters and the box-shaped task spaces they live in.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in a skill's task-parameter space.
///
/// Ball-Throw uses `[t_goal, y_goal]`, Puck-Slide uses `[x_goal, y_goal]`.
/// The same type carries desired parameters, current parameters and
/// adjustments between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskParam(pub Vec<f64>);

impl TaskParam {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        TaskParam(values.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Componentwise `self + other`.
    pub fn offset(&self, delta: &[f64]) -> Result<TaskParam> {
        if delta.len() != self.dim() {
            return Err(Error::dims(self.dim(), delta.len()));
        }
        Ok(TaskParam(self.0.iter().zip(delta).map(|(a, b)| a + b).collect()))
    }

    /// Componentwise `other - self`.
    pub fn delta_to(&self, other: &TaskParam) -> Result<Vec<f64>> {
        if other.dim() != self.dim() {
            return Err(Error::dims(self.dim(), other.dim()));
        }
        Ok(other.0.iter().zip(&self.0).map(|(b, a)| b - a).collect())
    }
}

impl From<Vec<f64>> for TaskParam {
    fn from(v: Vec<f64>) -> Self {
        TaskParam(v)
    }
}

impl<const N: usize> From<[f64; N]> for TaskParam {
    fn from(v: [f64; N]) -> Self {
        TaskParam(v.to_vec())
    }
}

/// Axis-aligned box `lo <= x <= hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: impl Into<Vec<f64>>, hi: impl Into<Vec<f64>>) -> Result<Self> {
        let (lo, hi) = (lo.into(), hi.into());
        if lo.len() != hi.len() {
            return Err(Error::dims(lo.len(), hi.len()));
        }
        if lo.is_empty() {
            return Err(Error::Config("bounds must have at least one dimension".into()));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Config(format!("invalid bound interval [{a}, {b}]")));
            }
        }
        Ok(Bounds { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn range(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn diagonal(&self) -> f64 {
        (0..self.dim()).map(|i| self.range(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clip(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect()
    }

    pub fn clip_param(&self, tau: &TaskParam) -> TaskParam {
        TaskParam(self.clip(&tau.0))
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// The centered sub-box covering `fraction` of each axis' range.
    pub fn interior(&self, fraction: f64) -> Bounds {
        let margin = 0.5 * (1.0 - fraction.clamp(0.0, 1.0));
        let lo = (0..self.dim()).map(|i| self.lo[i] + margin * self.range(i)).collect();
        let hi = (0..self.dim()).map(|i| self.hi[i] - margin * self.range(i)).collect();
        Bounds { lo, hi }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TaskParam {
        TaskParam(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_shrinks_symmetrically() {
        let b = Bounds::new([0.5, -15.0], [4.0, 15.0]).unwrap();
        let i = b.interior(0.8);
        assert!((i.lo[0] - 0.85).abs() < 1e-12);
        assert!((i.hi[1] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_inverted_interval() {
        assert!(Bounds::new([1.0], [0.0]).is_err());
    }

    #[test]
    fn clip_and_contains() {
        let b = Bounds::new([0.0, 0.0], [1.0, 2.0]).unwrap();
        assert_eq!(b.clip(&[-1.0, 3.0]), vec![0.0, 2.0]);
        assert!(b.contains(&[0.5, 2.0]));
        assert!(!b.contains(&[0.5, 2.1]));
    }
}
