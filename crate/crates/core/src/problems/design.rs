use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Bounds;
use crate::scalar::Scalar;

/// Latin hypercube design of `n` points: along every axis each of the `n`
/// equal-width strata holds exactly one point.
pub fn latin_hypercube<T: Scalar>(bounds: &Bounds<T>, n: usize, seed: u64) -> Vec<DVector<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = bounds.dim();
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        columns.push(perm);
    }
    let nf = n as f64;
    (0..n)
        .map(|i| {
            DVector::from_fn(d, |k, _| {
                let u: f64 = rng.random();
                let frac = (columns[k][i] as f64 + u) / nf;
                bounds.lower[k] + (bounds.upper[k] - bounds.lower[k]) * T::lit(frac)
            })
        })
        .collect()
}
