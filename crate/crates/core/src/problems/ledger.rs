use nalgebra::DVector;

use crate::scalar::Scalar;

/// Running count of function-evaluation units.
///
/// A joint value-and-gradient evaluation costs `1 + gradient_cost` units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationLedger<T: Scalar> {
    pub function_units: usize,
    pub entries: Vec<(DVector<T>, usize)>,
}

impl<T: Scalar> EvaluationLedger<T> {
    pub fn new() -> Self {
        Self { function_units: 0, entries: Vec::new() }
    }

    pub fn charge(&mut self, x: &DVector<T>, cost: usize) {
        self.function_units += cost;
        self.entries.push((x.clone(), cost));
    }

    pub fn evaluations(&self) -> usize {
        self.entries.len()
    }
}
