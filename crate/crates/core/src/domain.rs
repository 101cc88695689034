use nalgebra::DVector;
use rand::Rng;

use crate::error::{LagoError, Result};
use crate::scalar::Scalar;

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<T: Scalar> {
    pub lower: DVector<T>,
    pub upper: DVector<T>,
}

impl<T: Scalar> Bounds<T> {
    pub fn new(lower: DVector<T>, upper: DVector<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(LagoError::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l < u)) {
            return Err(LagoError::Config("degenerate box: every lower bound must be below its upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn from_slices(lower: &[f64], upper: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_iterator(lower.len(), lower.iter().map(|&v| T::lit(v))),
            DVector::from_iterator(upper.len(), upper.iter().map(|&v| T::lit(v))),
        )
    }

    /// The same interval in every coordinate.
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::from_slices(&vec![lo; d], &vec![hi; d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn widths(&self) -> DVector<T> {
        &self.upper - &self.lower
    }

    pub fn diagonal(&self) -> T {
        self.widths().norm()
    }

    pub fn contains(&self, x: &DVector<T>) -> bool {
        x.len() == self.dim() && (0..self.dim()).all(|i| x[i] >= self.lower[i] && x[i] <= self.upper[i])
    }

    pub fn clip(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_fn(self.dim(), |i, _| x[i].max(self.lower[i]).min(self.upper[i]))
    }

    /// Corner of the box farthest from `p`.
    pub fn farthest_corner(&self, p: &DVector<T>) -> DVector<T> {
        DVector::from_fn(self.dim(), |i, _| {
            if (p[i] - self.lower[i]).abs() >= (self.upper[i] - p[i]).abs() {
                self.lower[i]
            } else {
                self.upper[i]
            }
        })
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<T> {
        DVector::from_fn(self.dim(), |i, _| {
            let u: f64 = rng.random();
            self.lower[i] + (self.upper[i] - self.lower[i]) * T::lit(u)
        })
    }
}
