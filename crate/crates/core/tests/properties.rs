use adicflow::flow::{self, value_between};
use adicflow::graph::{example_qa, example_qb};
use adicflow::measures::{PlusMeasure, TOL_ARC};
use adicflow::tower::{dd_to_f64, PeriodicTower};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twofloat::TwoFloat;

fn towers() -> [PeriodicTower; 2] {
    [PeriodicTower::of_graph(&example_qa()).unwrap(), PeriodicTower::of_graph(&example_qb()).unwrap()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_is_a_group_action(seed in 0u64..10_000, s in -500.0f64..500.0, u in -500.0f64..500.0, which in 0usize..2) {
        let t = &towers()[which];
        let x = flow::sample_state(t, 6, &mut ChaCha8Rng::seed_from_u64(seed), seed).unwrap();
        let (s, u) = (TwoFloat::from(s), TwoFloat::from(u));
        let two = flow::flow(t, &flow::flow(t, &x, s).unwrap(), u).unwrap();
        let one = flow::flow(t, &x, s + u).unwrap();
        let (mut a, mut b) = (one, two);
        let top = a.top().max(b.top());
        a.extend_to(t, top).unwrap();
        b.extend_to(t, top).unwrap();
        prop_assert_eq!(&a.window.edges, &b.window.edges);
        prop_assert!(dd_to_f64((a.offset - b.offset).abs()) < 1e-20);
    }

    #[test]
    fn cocycle_is_additive(seed in 0u64..10_000, s in 0.0f64..1e4, u in 0.0f64..1e4) {
        let t = &towers()[0];
        let tab = PlusMeasure::second(&t.sd).unwrap().table(&t.sd, t, TOL_ARC).unwrap();
        let x = flow::sample_state(t, 6, &mut ChaCha8Rng::seed_from_u64(seed), seed).unwrap();
        let y = flow::flow(t, &x, TwoFloat::from(s)).unwrap();
        let z = flow::flow(t, &y, TwoFloat::from(u)).unwrap();
        let whole = value_between(&tab, t, &x, &z).unwrap();
        let parts = value_between(&tab, t, &x, &y).unwrap() + value_between(&tab, t, &y, &z).unwrap();
        prop_assert!((whole - parts).norm() < 1e-9, "{} vs {}", whole, parts);
    }
}
