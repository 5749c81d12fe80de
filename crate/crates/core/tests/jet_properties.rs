use eqlab::random::{jet, rng};
use eqlab::{JetScalar, Rational};
use proptest::prelude::*;

/// Three jets of a shared dimension; their orders may differ.
fn triple() -> impl Strategy<Value = (JetScalar, JetScalar, JetScalar)> {
    (1usize..=3, 0usize..=3, 0usize..=3, 0usize..=3, any::<u64>()).prop_map(|(dim, oa, ob, oc, seed)| {
        let mut r = rng(seed);
        (jet(&mut r, dim, oa), jet(&mut r, dim, ob), jet(&mut r, dim, oc))
    })
}

fn jet_with_order(min_order: usize) -> impl Strategy<Value = JetScalar> {
    (1usize..=3, min_order..=4, any::<u64>()).prop_map(|(dim, order, seed)| jet(&mut rng(seed), dim, order))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn addition_is_a_commutative_group((a, b, c) in triple()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        let zero = JetScalar::zero(a.dim(), a.order());
        prop_assert_eq!(&a + &zero, a.clone());
        prop_assert!((&a + &(-&a)).is_zero());
        prop_assert_eq!(&a - &b, &a + &(-&b));
    }

    #[test]
    fn multiplication_is_commutative_associative_unital((a, b, c) in triple()) {
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &JetScalar::one(a.dim(), a.order()), a.clone());
    }

    #[test]
    fn multiplication_distributes((a, b, c) in triple()) {
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
    }

    #[test]
    fn mixed_partials_commute(f in jet_with_order(2), j in 0usize..3, k in 0usize..3) {
        let (j, k) = (j % f.dim(), k % f.dim());
        let jk = f.partial(j).unwrap().partial(k).unwrap();
        let kj = f.partial(k).unwrap().partial(j).unwrap();
        prop_assert_eq!(jk, kj);
    }

    #[test]
    fn leibniz_rule((f, g, _) in triple(), k in 0usize..3) {
        prop_assume!(f.order() >= 1 && g.order() >= 1);
        let k = k % f.dim();
        let lhs = (&f * &g).partial(k).unwrap();
        let rhs = &(&f.partial(k).unwrap() * &g) + &(&f * &g.partial(k).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn inverse_is_reciprocal(a in jet_with_order(0)) {
        prop_assume!(a.value_at_base() != eqlab::rat(0, 1));
        let inv = a.inverse().unwrap();
        prop_assert_eq!(&a * &inv, JetScalar::one(a.dim(), a.order()));
    }

    #[test]
    fn truncation_is_a_ring_map((a, b, _) in triple(), k in 0usize..3) {
        let k = k.min(a.order()).min(b.order());
        prop_assert_eq!((&a * &b).truncate(k), &a.truncate(k) * &b.truncate(k));
        prop_assert_eq!((&a + &b).truncate(k), &a.truncate(k) + &b.truncate(k));
    }

    #[test]
    fn scaling_matches_constant_product(a in jet_with_order(0), n in -20i64..20, d in 1i64..20) {
        let q = Rational::new(n.into(), d.into());
        let c = JetScalar::constant(a.dim(), a.order(), q.clone());
        prop_assert_eq!(a.scale(&q), &a * &c);
    }

    #[test]
    fn terms_rebuild_the_jet(a in jet_with_order(0)) {
        let terms: Vec<(Vec<u32>, Rational)> = a.terms().map(|(m, c)| (m.to_vec(), c)).collect();
        prop_assert_eq!(JetScalar::from_terms(a.dim(), a.order(), terms).unwrap(), a.clone());
        let text = serde_json::to_string(&a).unwrap();
        prop_assert_eq!(serde_json::from_str::<JetScalar>(&text).unwrap(), a);
    }
}
