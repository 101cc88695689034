//! Derivative-free local search used for the inner optimizations
//! (acquisition, posterior-mean minimization).

use nalgebra::DVector;

use crate::scalar::Scalar;

/// Nelder–Mead minimization with a hard evaluation budget.
///
/// Non-finite objective values are treated as `+∞`. Returns the best vertex
/// and its value.
pub fn nelder_mead<T, F>(mut f: F, x0: &DVector<T>, step: &DVector<T>, max_evals: usize, ftol: T) -> (DVector<T>, T)
where
    T: Scalar,
    F: FnMut(&DVector<T>) -> T,
{
    let d = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &DVector<T>, evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::infinity()
        }
    };

    let mut simplex: Vec<(DVector<T>, T)> = Vec::with_capacity(d + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.clone(), v0));
    for i in 0..d {
        let mut x = x0.clone();
        x[i] += step[i];
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let half = T::lit(0.5);
    let two = T::lit(2.0);
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        if best.is_finite() && (worst - best).abs() <= ftol * (best.abs() + ftol) {
            break;
        }
        let mut centroid = DVector::zeros(d);
        for (x, _) in &simplex[..d] {
            centroid += x;
        }
        centroid /= T::from_usize_lossy(d);

        let xr = &centroid + (&centroid - &simplex[d].0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = &centroid + (&xr - &centroid) * two;
            let fe = eval(&xe, &mut evals);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[d].1 {
                let xc = &centroid + (&xr - &centroid) * half;
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = &centroid + (&simplex[d].0 - &centroid) * half;
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x = &x_best + (&vertex.0 - &x_best) * half;
                    let v = eval(&x, &mut evals);
                    *vertex = (x, v);
                }
            }
        }
    }
    simplex
        .into_iter()
        .fold(None, |acc: Option<(DVector<T>, T)>, cur| match acc {
            Some(a) if a.1 <= cur.1 => Some(a),
            _ => Some(cur),
        })
        .expect("simplex is never empty")
}
