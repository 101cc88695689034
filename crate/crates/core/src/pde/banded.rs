use crate::error::{LagoError, Result};

/// Symmetric matrix stored by its lower band: `band[i][k]` holds entry
/// `(i, i-k)` for `k ≤ bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    pub size: usize,
    pub bandwidth: usize,
    band: Vec<f64>,
}

impl SymBand {
    pub fn zeros(size: usize, bandwidth: usize) -> Self {
        Self { size, bandwidth, band: vec![0.0; size * (bandwidth + 1)] }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = i - j;
        (k <= self.bandwidth).then_some(i * (self.bandwidth + 1) + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.band[s])
    }

    /// Adds `v` to entry `(i, j)` (and, implicitly, `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.band[s] += v;
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size];
        for i in 0..self.size {
            let row = &self.band[i * (self.bandwidth + 1)..(i + 1) * (self.bandwidth + 1)];
            y[i] += row[0] * x[i];
            for (k, &a) in row.iter().enumerate().take(self.bandwidth.min(i) + 1).skip(1) {
                let j = i - k;
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|i| (0..self.size).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Band Cholesky `A = L Lᵀ`; the factor has the same bandwidth.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let (n, w) = (self.size, self.bandwidth);
        let mut l = self.clone();
        for j in 0..n {
            let mut d = l.band[j * (w + 1)];
            for k in j.saturating_sub(w)..j {
                let v = l.get(j, k);
                d -= v * v;
            }
            if !(d > 0.0) {
                return Err(LagoError::Numerical(format!("band matrix not positive definite at row {j}")));
            }
            let d = d.sqrt();
            l.band[j * (w + 1)] = d;
            for i in j + 1..(j + w + 1).min(n) {
                let mut v = l.get(i, j);
                for k in i.saturating_sub(w)..j {
                    v -= l.get(i, k) * l.get(j, k);
                }
                let s = l.slot(i, j).expect("inside band");
                l.band[s] = v / d;
            }
        }
        Ok(BandCholesky { l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: SymBand,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, w) = (self.l.size, self.l.bandwidth);
        let row = |i: usize| &self.l.band[i * (w + 1)..(i + 1) * (w + 1)];
        let mut x = b.to_vec();
        for i in 0..n {
            let r = row(i);
            let mut v = x[i];
            for k in 1..=w.min(i) {
                v -= r[k] * x[i - k];
            }
            x[i] = v / r[0];
        }
        for i in (0..n).rev() {
            let r = row(i);
            x[i] /= r[0];
            let xi = x[i];
            for k in 1..=w.min(i) {
                x[i - k] -= r[k] * xi;
            }
        }
        x
    }
}
