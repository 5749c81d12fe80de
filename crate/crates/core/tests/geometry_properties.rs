use eqlab::random::{rng, space};
use eqlab::tensor::{Down, Up};
use eqlab::{rat, CurvatureParams, DerivKind, Space, TensorField};
use proptest::prelude::*;

fn torsion_free(seed: u64, dim: usize) -> Space {
    Space::from_connection(space(&mut rng(seed), dim, 2).symmetric_part()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cyclic_sum_of_curvature_vanishes(seed in any::<u64>(), dim in 2usize..=3) {
        let r = torsion_free(seed, dim).curvature_r().unwrap();
        let cyclic = TensorField::from_fn(dim, &[Up, Down, Down, Down], |ix| {
            let (i, j, m, n) = (ix[0], ix[1], ix[2], ix[3]);
            r.get(&[i, j, m, n]) + r.get(&[i, m, n, j]) + r.get(&[i, n, j, m])
        });
        prop_assert!(cyclic.is_zero());
    }

    #[test]
    fn curvature_is_antisymmetric_in_last_pair(seed in any::<u64>(), dim in 2usize..=3) {
        let r = space(&mut rng(seed), dim, 2).curvature_r().unwrap();
        prop_assert_eq!(r.swap_slots(2, 3).unwrap(), r.neg());
    }

    #[test]
    fn kronecker_delta_derivatives(seed in any::<u64>(), dim in 2usize..=3) {
        let s = space(&mut rng(seed), dim, 2);
        let delta = TensorField::kronecker(dim, 2);
        prop_assert!(s.cov_deriv_assoc(&delta).unwrap().is_zero());
        for kind in [DerivKind::First, DerivKind::Second] {
            prop_assert!(s.cov_deriv_kind(&delta, kind).unwrap().is_zero());
        }
        // the mixed kinds leave Γ^i_{jk} − Γ^i_{kj} = 2T^i_{jk} with opposite signs
        let twice_torsion = s.torsion().scale(&rat(2, 1)).map(|c| c.truncate(1));
        prop_assert_eq!(s.cov_deriv_kind(&delta, DerivKind::Third).unwrap(), twice_torsion.clone());
        prop_assert_eq!(s.cov_deriv_kind(&delta, DerivKind::Fourth).unwrap(), twice_torsion.neg());
    }

    #[test]
    fn curvature_family_is_affine_in_parameters(seed in any::<u64>(), lambda in -5i64..5) {
        let s = space(&mut rng(seed), 3, 2);
        let r = s.curvature_r().unwrap();
        let p1 = CurvatureParams::new(rat(1, 2), rat(-3, 1), rat(2, 7), rat(0, 1), rat(5, 3));
        let p2 = CurvatureParams::new(rat(-4, 5), rat(1, 1), rat(0, 1), rat(9, 2), rat(-1, 6));
        let l = rat(lambda, 1);
        let combo: Vec<_> = p1.as_array().iter().zip(p2.as_array()).map(|(a, b)| *a * &l + b).collect();
        let p = CurvatureParams::new(combo[0].clone(), combo[1].clone(), combo[2].clone(), combo[3].clone(), combo[4].clone());
        let part = |q: &CurvatureParams| s.curvature_k(q).unwrap().sub(&r).unwrap();
        prop_assert_eq!(part(&p), part(&p1).scale(&l).add(&part(&p2)).unwrap());
    }
}
