use lago::gradient_gp::{fit_hyperparameters, HyperBounds};
use lago::{GpPrior, GradientGp, Kernel, KernelFamily, KernelHyper, Observation};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn test_function(x: &DVector<f64>) -> (f64, DVector<f64>) {
    let f = x.iter().enumerate().map(|(i, v)| (3.0 * v + i as f64).sin()).sum::<f64>() + 0.5 * x.norm_squared();
    let g = DVector::from_fn(x.len(), |i, _| 3.0 * (3.0 * x[i] + i as f64).cos() + x[i]);
    (f, g)
}

fn dataset(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<Observation<f64>> {
    (0..n)
        .map(|i| {
            let x = DVector::from_fn(d, |_, _| rng.random_range(0.0..1.0));
            let (f, g) = test_function(&x);
            Observation::new(x, f, g, i)
        })
        .collect()
}

/// Dense LU solve of the joint system, assembled from kernel blocks.
struct DenseOracle {
    prior: GpPrior<f64>,
    data: Vec<Observation<f64>>,
    weights: DVector<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseOracle {
    fn new(prior: GpPrior<f64>, data: &[Observation<f64>]) -> Self {
        let d = data[0].x.len();
        let b = if prior.use_gradients { d + 1 } else { 1 };
        let n = data.len();
        let kernel = prior.kernel();
        let mut k = DMatrix::zeros(n * b, n * b);
        for i in 0..n {
            for j in 0..n {
                let blk = kernel.joint_block(&data[i].x, &data[j].x).unwrap();
                k.view_mut((i * b, j * b), (b, b)).copy_from(&blk.view((0, 0), (b, b)));
            }
        }
        for i in 0..n * b {
            k[(i, i)] += prior.nugget * prior.hyper.scale;
        }
        let mut r = DVector::zeros(n * b);
        for (i, o) in data.iter().enumerate() {
            r[i * b] = o.f - prior.mean;
            for p in 1..b {
                r[i * b + p] = o.grad[p - 1];
            }
        }
        let lu = k.lu();
        let weights = lu.solve(&r).unwrap();
        Self { prior, data: data.to_vec(), weights, lu }
    }

    /// Rows: covariance of `f(x)` and of `∂_{x_p} f(x)` with every observation.
    fn cross(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = x.len();
        let b = if self.prior.use_gradients { d + 1 } else { 1 };
        let kernel = self.prior.kernel();
        let mut c = DMatrix::zeros(d + 1, self.data.len() * b);
        for (j, o) in self.data.iter().enumerate() {
            let blk = kernel.joint_block(x, &o.x).unwrap();
            c.view_mut((0, j * b), (d + 1, b)).copy_from(&blk.view((0, 0), (d + 1, b)));
        }
        c
    }

    fn predict(&self, x: &DVector<f64>) -> (f64, f64, DVector<f64>) {
        let c = self.cross(x);
        let row = c.row(0).transpose();
        let mean = self.prior.mean + row.dot(&self.weights);
        let var = self.prior.hyper.scale - row.dot(&self.lu.solve(&row).unwrap());
        let grad = (c.rows(1, x.len()) * &self.weights).column(0).into_owned();
        (mean, var, grad)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn factorized_posterior_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let d = 1 + case % 3;
        let n = rng.random_range(3..=15);
        let data = dataset(&mut rng, d, n);
        let family = if case % 2 == 0 { KernelFamily::Matern52 } else { KernelFamily::Matern72 };
        let hyper = KernelHyper::new(rng.random_range(0.3..0.8), rng.random_range(0.5..4.0)).unwrap();
        let prior = GpPrior::new(family, hyper).with_nugget(1e-6).with_mean(0.3);
        let gp = GradientGp::condition(prior, &data).unwrap();
        let oracle = DenseOracle::new(prior, &data);
        for _ in 0..5 {
            let x = DVector::from_fn(d, |_, _| rng.random_range(-0.2..1.2));
            let q = gp.posterior(&x, true, false).unwrap();
            let (m, v, g) = oracle.predict(&x);
            // The posterior variance is a difference of terms of size σ_f², so
            // its rounding floor scales with σ_f², not with its own size.
            let var_err = (q.variance - v).abs() / v.abs().max(hyper.scale);
            worst = worst.max(rel(q.mean, m)).max(var_err);
            for p in 0..d {
                worst = worst.max(rel(q.mean_grad.as_ref().unwrap()[p], g[p]));
            }
        }
    }
    assert!(worst < 1e-9, "worst relative error {worst:e}");
}

#[test]
fn value_only_model_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let data = dataset(&mut rng, 2, 12);
    let prior = GpPrior::new(KernelFamily::Matern52, KernelHyper::new(0.4, 1.5).unwrap())
        .with_nugget(1e-8)
        .with_gradients(false);
    let gp = GradientGp::condition(prior, &data).unwrap();
    let oracle = DenseOracle::new(prior, &data);
    for _ in 0..10 {
        let x = DVector::from_fn(2, |_, _| rng.random_range(0.0..1.0));
        let q = gp.posterior(&x, true, false).unwrap();
        let (m, v, g) = oracle.predict(&x);
        assert!(rel(q.mean, m) < 1e-9 && rel(q.variance, v) < 1e-8);
        assert!((q.mean_grad.unwrap() - &g).norm() < 1e-8 * g.norm().max(1.0));
    }
}

#[test]
fn interpolates_values_and_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data = dataset(&mut rng, 2, 8);
    let prior = GpPrior::new(KernelFamily::Matern72, KernelHyper::new(0.5, 2.0).unwrap()).with_nugget(1e-10);
    let gp = GradientGp::condition(prior, &data).unwrap();
    for o in &data {
        let q = gp.posterior(&o.x, true, false).unwrap();
        assert!((q.mean - o.f).abs() < 1e-6);
        assert!((q.mean_grad.unwrap() - &o.grad).norm() < 1e-5);
        assert!(q.variance < 1e-6);
    }
}

#[test]
fn mean_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-5;
    for d in 1..=3 {
        let data = dataset(&mut rng, d, 10);
        let prior = GpPrior::new(KernelFamily::Matern72, KernelHyper::new(0.6, 1.0).unwrap()).with_nugget(1e-8);
        let gp = GradientGp::condition(prior, &data).unwrap();
        for _ in 0..10 {
            let x = DVector::from_fn(d, |_, _| rng.random_range(0.0..1.0));
            let q = gp.posterior(&x, true, true).unwrap();
            let g = q.mean_grad.unwrap();
            let hess = q.mean_hessian.unwrap();
            for i in 0..d {
                let mut e = DVector::zeros(d);
                e[i] = h;
                let fd = (gp.mean(&(&x + &e)) - gp.mean(&(&x - &e))) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6 * g.amax().max(1.0));
                let gu = gp.posterior(&(&x + &e), true, false).unwrap().mean_grad.unwrap();
                let gd = gp.posterior(&(&x - &e), true, false).unwrap().mean_grad.unwrap();
                let col = (gu - gd) / (2.0 * h);
                for j in 0..d {
                    assert!((col[j] - hess[(j, i)]).abs() < 1e-4 * hess.amax().max(1.0));
                }
            }
        }
    }
}

#[test]
fn posterior_variance_never_exceeds_prior() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data = dataset(&mut rng, 3, 15);
    let prior = GpPrior::new(KernelFamily::Matern52, KernelHyper::new(0.5, 2.0).unwrap()).with_nugget(1e-8);
    let gp = GradientGp::condition(prior, &data).unwrap();
    for _ in 0..200 {
        let x = DVector::from_fn(3, |_, _| rng.random_range(-1.0..2.0));
        let (_, s) = gp.mean_std(&x);
        assert!(s >= 0.0 && s * s <= 2.0 + 1e-12);
    }
}

#[test]
fn dimension_mismatch_is_an_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut data = dataset(&mut rng, 2, 4);
    let prior = GpPrior::new(KernelFamily::Matern52, KernelHyper::new(0.5, 1.0).unwrap());
    let gp = GradientGp::condition(prior, &data).unwrap();
    assert!(gp.posterior(&DVector::zeros(3), false, false).is_err());
    data[1].grad = DVector::zeros(3);
    assert!(GradientGp::condition(prior, &data).is_err());
    assert!(GradientGp::condition(prior, &[]).is_err());
}

/// Draws a function and its gradients jointly from the prior and checks the
/// fitted hyperparameters land near the truth.
#[test]
fn recovers_hyperparameters_of_prior_draws() {
    let (ell, s2) = (0.3, 4.0);
    let truth = KernelHyper::new(ell, s2).unwrap();
    let kernel = Kernel::new(KernelFamily::Matern72, truth);
    let d = 2;
    let n = 30;
    let mut ratios_ell = Vec::new();
    let mut ratios_s2 = Vec::new();
    for seed in 0..8 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let xs: Vec<DVector<f64>> = (0..n).map(|_| DVector::from_fn(d, |_, _| rng.random_range(0.0..1.0))).collect();
        let b = d + 1;
        let mut k = DMatrix::zeros(n * b, n * b);
        for i in 0..n {
            for j in 0..n {
                k.view_mut((i * b, j * b), (b, b)).copy_from(&kernel.joint_block(&xs[i], &xs[j]).unwrap());
            }
        }
        for i in 0..n * b {
            k[(i, i)] += 1e-8 * s2;
        }
        let l = k.cholesky().unwrap().unpack();
        let z = DVector::from_fn(n * b, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = l * z;
        let data: Vec<_> =
            (0..n).map(|i| Observation::new(xs[i].clone(), y[i * b], y.rows(i * b + 1, d).into_owned(), i)).collect();
        let prior = GpPrior::new(KernelFamily::Matern72, KernelHyper::new(1.0, 1.0).unwrap()).with_nugget(1e-8);
        let bounds = HyperBounds::from_data(2f64.sqrt(), &data);
        let fit = fit_hyperparameters(&prior, &data, &bounds).unwrap();
        ratios_ell.push(fit.hyper.lengthscale / ell);
        ratios_s2.push(fit.hyper.scale / s2);
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    let me = median(&mut ratios_ell);
    let ms = median(&mut ratios_s2);
    assert!((0.8..1.25).contains(&me), "lengthscale ratio {me}");
    assert!((0.5..2.0).contains(&ms), "scale ratio {ms}");
}

#[test]
fn generic_over_f32() {
    let data: Vec<Observation<f32>> = (0..5)
        .map(|i| {
            let x = DVector::from_vec(vec![i as f32 * 0.2, 0.5]);
            Observation::new(x.clone(), x.norm_squared(), x * 2.0, i)
        })
        .collect();
    let prior = GpPrior::new(KernelFamily::Matern72, KernelHyper::new(0.5f32, 1.0).unwrap()).with_nugget(1e-4);
    let gp = GradientGp::condition(prior, &data).unwrap();
    let q = gp.posterior(&DVector::from_vec(vec![0.3f32, 0.5]), true, true).unwrap();
    assert!((q.mean - 0.34).abs() < 0.05);
}
