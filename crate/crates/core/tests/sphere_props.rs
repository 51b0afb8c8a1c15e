mod common;

use common::cubic_orthogonal_field;
use proptest::prelude::*;
use rdtm::ode::{integrate_adaptive, AdaptiveOptions};
use rdtm::presets::antisymmetric_linear;
use rdtm::sphere::{choose_sigma, extend_to_ambient, radial_residual, translate_field};

fn unit_ball_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
        .prop_filter("inside the ball", |x| x.iter().map(|v| v * v).sum::<f64>() < 0.95)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn radial_part_is_logistic(c in prop::array::uniform3(-1.0f64..1.0), x in prop::collection::vec(-3.0f64..3.0, 3)) {
        let ext = extend_to_ambient(cubic_orthogonal_field(c)).unwrap();
        let v = ext.eval(&x).unwrap();
        let r2: f64 = x.iter().map(|a| a * a).sum();
        let dot: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
        // d/dt |x|^2 = 2 |x|^2 (1 - |x|^2)
        let want = r2 * (1.0 - r2);
        prop_assert!((dot - want).abs() <= 1e-11 * (1.0 + want.abs()));
        prop_assert!(radial_residual(&ext, &x) <= 1e-11 * (1.0 + want.abs()));
    }

    #[test]
    fn translation_is_a_conjugacy(upper in prop::array::uniform3(-2.0f64..2.0), sigma in 0.5f64..5.0, x in prop::collection::vec(-2.0f64..2.0, 3)) {
        let ext = extend_to_ambient(antisymmetric_linear(3, &upper)).unwrap();
        let params = choose_sigma(sigma.powi(3)).unwrap();
        let g = translate_field(&ext, &params).unwrap();
        // g(x + sigma 1) = f(x)
        let shifted: Vec<f64> = x.iter().map(|v| v + params.sigma).collect();
        let a = g.eval(&shifted).unwrap();
        let b = ext.eval(&x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn ball_is_forward_invariant(c in prop::array::uniform3(-1.0f64..1.0), x0 in unit_ball_point()) {
        let ext = extend_to_ambient(cubic_orthogonal_field(c)).unwrap();
        let tr = integrate_adaptive(&ext, &x0, 50.0, AdaptiveOptions::new(1e-9, 1e-12)).unwrap();
        for s in tr.states() {
            prop_assert!(s.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-7);
        }
    }
}
