mod common;

use common::{fd_push, inf_dist};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdtm::glv::{embed_glv, glv_field, poly_to_glv, pushforward_residual, EmbeddingMap, GlvSystem};
use rdtm::poly::{Polynomial, PolynomialField};
use rdtm::presets::random_glv;

fn system(seed: u64) -> GlvSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let m_mon = rng.gen_range(1..=if n == 1 { 4 } else { 5 });
    random_glv(&mut rng, n, m_mon, 1.0)
}

fn positive(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..5.0, n)
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    inf_dist(a, b) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn inverse_undoes_forward((seed, x) in any::<u64>().prop_flat_map(|s| (Just(s), positive(system(s).dim())))) {
        let emb = embed_glv(&system(seed));
        let p = emb.map.forward(&x).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let back = emb.map.inverse(&p).unwrap();
        prop_assert!(rel(&back, &x) < 1e-10);
    }

    #[test]
    fn analytic_pushforward_matches_finite_differences(
        (seed, x) in any::<u64>().prop_flat_map(|s| (Just(s), positive(system(s).dim())))
    ) {
        let sys = system(seed);
        let emb = embed_glv(&sys);
        let v = glv_field(&sys, &x).unwrap();
        let an = emb.map.push_vector(&x, &v).unwrap();
        let fd = fd_push(&emb.map, &x, &v);
        prop_assert!(rel(&an, &fd) < 1e-6, "analytic {an:?} vs fd {fd:?}");
    }

    #[test]
    fn pushed_field_is_parallel_to_replicator(
        (seed, x) in any::<u64>().prop_flat_map(|s| (Just(s), positive(system(s).dim())))
    ) {
        let sys = system(seed);
        let emb = embed_glv(&sys);
        let chk = pushforward_residual(&sys, &emb.map, &emb.game, &x).unwrap();
        prop_assert!(chk.residual < 1e-9);
        if let Some(c) = chk.factor {
            prop_assert!(c > 0.0);
        }
        prop_assert!(emb.size_bound_holds());
    }

    #[test]
    fn glv_json_round_trip(seed in any::<u64>()) {
        let sys = system(seed);
        prop_assert_eq!(GlvSystem::from_json(&sys.to_json()).unwrap(), sys);
    }

    #[test]
    fn poly_to_glv_reproduces_the_field(
        terms in prop::collection::vec(prop::collection::vec((-2.0f64..2.0, prop::collection::vec(0u32..3, 2)), 1..5), 2),
        x in positive(2),
    ) {
        let comps = terms.into_iter().map(|t| Polynomial::from_terms(2, t).unwrap()).collect();
        let f = PolynomialField::new(comps).unwrap();
        let sys = poly_to_glv(&f);
        let a = glv_field(&sys, &x).unwrap();
        let b = f.eval(&x).unwrap();
        prop_assert!(rel(&a, &b) < 1e-12);
    }

    #[test]
    fn left_inverse_is_exact(seed in any::<u64>()) {
        let emb = embed_glv(&system(seed));
        let map: &EmbeddingMap = &emb.map;
        let b = map.exponents();
        let bp = map.left_inverse();
        let n = map.source_dim();
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..b.len()).map(|k| bp[i][k] * b[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((s - want).abs() < 1e-12);
            }
        }
    }
}
