use lago::problems::{gradient_check, registry};
use lago::{build_problem, make_problem, Problem};
use nalgebra::DVector;

fn at(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

#[test]
fn documented_minimum_values() {
    let branin = make_problem::<f64>("branin", 2).unwrap();
    for x in [[-std::f64::consts::PI, 12.275], [std::f64::consts::PI, 2.275], [9.42478, 2.475]] {
        assert!((branin.evaluate(&at(&x)).0 - 0.39789).abs() < 1e-5);
    }
    let st = make_problem::<f64>("styblinski-tang", 2).unwrap();
    let v = st.evaluate(&at(&[-2.903534, -2.903534])).0;
    // -39.16599 per coordinate is the usual rounded value.
    assert!((v - 2.0 * -39.16599).abs() < 1e-3);
    assert!((st.known_min().unwrap() - v).abs() < 1e-9);
    for (name, x) in [("rosenbrock", [1.0, 1.0]), ("levy", [1.0, 1.0]), ("sphere", [0.0, 0.0])] {
        let p = make_problem::<f64>(name, 2).unwrap();
        let (f, g) = p.evaluate(&at(&x));
        assert!(f.abs() < 1e-14 && g.norm() < 1e-12, "{name}");
        assert_eq!(p.known_min(), Some(0.0));
    }
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for (name, dims) in registry() {
        for &d in dims {
            let p = build_problem::<f64>(name, d, Some(16)).unwrap();
            assert!(gradient_check(p.as_ref(), 20, 7) < 1e-5, "{name} d={d}");
        }
    }
}

#[test]
fn registry_builds_every_entry_and_rejects_others() {
    for (name, dims) in registry() {
        for &d in dims {
            let p = build_problem::<f64>(name, d, Some(8)).unwrap();
            assert_eq!((p.name(), p.dim()), (name, d));
        }
    }
    assert!(build_problem::<f64>("branin", 3, None).is_err());
    assert!(build_problem::<f64>("pde-source-2d", 3, None).is_err());
    assert!(build_problem::<f64>("ackley", 2, None).is_err());
}

#[test]
fn gradient_cost_defaults() {
    assert_eq!(make_problem::<f64>("styblinski-tang", 5).unwrap().default_gradient_cost(), 5);
    assert_eq!(build_problem::<f64>("pde-source-2d", 2, Some(8)).unwrap().default_gradient_cost(), 1);
}
