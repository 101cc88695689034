use nalgebra::DVector;

use super::Problem;
use crate::domain::Bounds;
use crate::error::{LagoError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticKind {
    Branin,
    StyblinskiTang,
    Rosenbrock,
    Levy,
    Sphere,
}

/// Problem names accepted by [`make_problem`].
pub const SUITE: [&str; 5] = ["branin", "styblinski-tang", "rosenbrock", "levy", "sphere"];

impl SyntheticKind {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "branin" => SyntheticKind::Branin,
            "styblinski-tang" => SyntheticKind::StyblinskiTang,
            "rosenbrock" => SyntheticKind::Rosenbrock,
            "levy" => SyntheticKind::Levy,
            "sphere" => SyntheticKind::Sphere,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::Branin => "branin",
            SyntheticKind::StyblinskiTang => "styblinski-tang",
            SyntheticKind::Rosenbrock => "rosenbrock",
            SyntheticKind::Levy => "levy",
            SyntheticKind::Sphere => "sphere",
        }
    }

    pub fn supports_dim(self, d: usize) -> bool {
        match self {
            SyntheticKind::StyblinskiTang => d == 2 || d == 5,
            _ => d == 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProblem<T: Scalar> {
    kind: SyntheticKind,
    bounds: Bounds<T>,
}

/// Builds a benchmark objective by name.
pub fn make_problem<T: Scalar>(name: &str, d: usize) -> Result<SyntheticProblem<T>> {
    let unknown = || LagoError::UnknownProblem { name: name.to_string(), dim: d };
    let kind = SyntheticKind::from_name(name).ok_or_else(unknown)?;
    if !kind.supports_dim(d) {
        return Err(unknown());
    }
    let bounds = match kind {
        SyntheticKind::Branin => Bounds::from_slices(&[-5.0, 0.0], &[10.0, 15.0])?,
        SyntheticKind::StyblinskiTang => Bounds::cube(d, -5.0, 5.0)?,
        SyntheticKind::Rosenbrock => Bounds::cube(d, -5.0, 10.0)?,
        SyntheticKind::Levy => Bounds::cube(d, -10.0, 10.0)?,
        SyntheticKind::Sphere => Bounds::cube(d, -5.12, 5.12)?,
    };
    Ok(SyntheticProblem { kind, bounds })
}

/// Per-coordinate minimum of `½(t⁴ - 16t² + 5t)`.
const STYBLINSKI_TANG_MIN_PER_DIM: f64 = -39.166_165_703_771_42;
const BRANIN_MIN: f64 = 0.397_887_357_729_738_16;

impl<T: Scalar> SyntheticProblem<T> {
    pub fn kind(&self) -> SyntheticKind {
        self.kind
    }

    fn branin(x: &DVector<T>) -> (T, DVector<T>) {
        let pi = T::pi();
        let b = T::lit(5.1) / (T::lit(4.0) * pi * pi);
        let c = T::lit(5.0) / pi;
        let s = T::lit(10.0);
        let t = T::one() / (T::lit(8.0) * pi);
        let (x1, x2) = (x[0], x[1]);
        let h = x2 - b * x1 * x1 + c * x1 - T::lit(6.0);
        let f = h * h + s * (T::one() - t) * x1.cos() + s;
        let g1 = T::lit(2.0) * h * (c - T::lit(2.0) * b * x1) - s * (T::one() - t) * x1.sin();
        let g2 = T::lit(2.0) * h;
        (f, DVector::from_vec(vec![g1, g2]))
    }

    fn styblinski_tang(x: &DVector<T>) -> (T, DVector<T>) {
        let half = T::lit(0.5);
        let f = x.iter().fold(T::zero(), |acc, &v| {
            let v2 = v * v;
            acc + v2 * v2 - T::lit(16.0) * v2 + T::lit(5.0) * v
        }) * half;
        let g = x.map(|v| half * (T::lit(4.0) * v * v * v - T::lit(32.0) * v + T::lit(5.0)));
        (f, g)
    }

    fn rosenbrock(x: &DVector<T>) -> (T, DVector<T>) {
        let (x1, x2) = (x[0], x[1]);
        let a = T::one() - x1;
        let b = x2 - x1 * x1;
        let hundred = T::lit(100.0);
        let f = a * a + hundred * b * b;
        let g1 = -T::lit(2.0) * a - T::lit(400.0) * x1 * b;
        let g2 = T::lit(200.0) * b;
        (f, DVector::from_vec(vec![g1, g2]))
    }

    fn levy(x: &DVector<T>) -> (T, DVector<T>) {
        let pi = T::pi();
        let one = T::one();
        let two = T::lit(2.0);
        let quarter = T::lit(0.25);
        let w1 = one + (x[0] - one) * quarter;
        let w2 = one + (x[1] - one) * quarter;

        let s1 = (pi * w1).sin();
        let c1 = (pi * w1).cos();
        let s1b = (pi * w1 + one).sin();
        let c1b = (pi * w1 + one).cos();
        let s2 = (two * pi * w2).sin();
        let c2 = (two * pi * w2).cos();
        let a1 = w1 - one;
        let a2 = w2 - one;
        let ten = T::lit(10.0);

        let f = s1 * s1 + a1 * a1 * (one + ten * s1b * s1b) + a2 * a2 * (one + s2 * s2);
        let df_dw1 = two * pi * s1 * c1 + two * a1 * (one + ten * s1b * s1b) + a1 * a1 * ten * two * pi * s1b * c1b;
        let df_dw2 = two * a2 * (one + s2 * s2) + a2 * a2 * T::lit(4.0) * pi * s2 * c2;
        (f, DVector::from_vec(vec![df_dw1 * quarter, df_dw2 * quarter]))
    }

    fn sphere(x: &DVector<T>) -> (T, DVector<T>) {
        (x.norm_squared(), x * T::lit(2.0))
    }
}

impl<T: Scalar> Problem<T> for SyntheticProblem<T> {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn bounds(&self) -> &Bounds<T> {
        &self.bounds
    }

    fn evaluate(&self, x: &DVector<T>) -> (T, DVector<T>) {
        match self.kind {
            SyntheticKind::Branin => Self::branin(x),
            SyntheticKind::StyblinskiTang => Self::styblinski_tang(x),
            SyntheticKind::Rosenbrock => Self::rosenbrock(x),
            SyntheticKind::Levy => Self::levy(x),
            SyntheticKind::Sphere => Self::sphere(x),
        }
    }

    fn known_min(&self) -> Option<T> {
        Some(match self.kind {
            SyntheticKind::Branin => T::lit(BRANIN_MIN),
            SyntheticKind::StyblinskiTang => T::lit(STYBLINSKI_TANG_MIN_PER_DIM * self.dim() as f64),
            SyntheticKind::Rosenbrock | SyntheticKind::Levy | SyntheticKind::Sphere => T::zero(),
        })
    }
}
