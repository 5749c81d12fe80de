use super::*;
use crate::linalg::generic_rank;
use crate::mapping::synthesize_instance;

fn torsion_free_pair(n: usize, seed: u64) -> MappedPair {
    // Γ = 0, φ^i = 2x^i, ν = 0, μ = 2 solves the basic equation for any ψ, σ
    let mut rng = random::rng(seed);
    let phi = TensorField::from_fn(n, &[Up], |ix| {
        JetScalar::coordinate(n, 3, ix[0]).unwrap().scale(&rat(2, 1))
    });
    let m = AG3Mapping::new(
        random::field(&mut rng, n, &[Down], 2),
        random::symmetric_form(&mut rng, n, 2),
        phi,
        TensorField::zeros(n, &[Down], 2),
        JetScalar::constant(n, 2, rat(2, 1)),
        MappingKind::First,
    )
    .unwrap();
    let flat = Space::from_connection(TensorField::zeros(n, &[Up, Down, Down], 2)).unwrap();
    MappedPair::new(flat, m).unwrap()
}

fn ctx(pair: &MappedPair) -> InvariantContext {
    InvariantContext::new(&pair.source, &pair.mapping).unwrap()
}

#[test]
fn torsion_free_products_vanish() {
    let pair = torsion_free_pair(3, 1);
    let c = ctx(&pair);
    for theta in 1..=U_COUNT {
        assert!(c.u_theta(theta).unwrap().is_zero(), "U{theta}");
    }
    for p in 1..=SIGMA_COUNT {
        assert!(c.sigma_p(p).unwrap().is_zero(), "sigma{p}");
    }
    assert!(c.u_theta(0).is_err());
    assert!(c.sigma_p(9).is_err());
    assert!(c.t_tilde(0).is_err());
}

#[test]
fn u1_matches_double_loop() {
    let pair = synthesize_instance(2, MappingKind::First, 5, 2).unwrap();
    let (sym, tor) = pair.source.split_connection();
    let u1 = ctx(&pair).u_theta(1).unwrap().clone();
    for i in 0..2 {
        for j in 0..2 {
            for m in 0..2 {
                for n in 0..2 {
                    let mut v = JetScalar::zero(2, 2);
                    for a in 0..2 {
                        let half = rat(1, 2);
                        let t = (pair.source.gamma().get(&[a, j, m]) - pair.source.gamma().get(&[a, m, j])).scale(&half);
                        assert_eq!(&t, tor.get(&[a, j, m]));
                        v = v + t * sym.get(&[i, a, n]);
                    }
                    assert_eq!(&v.truncate(1), &u1.get(&[i, j, m, n]).truncate(1));
                }
            }
        }
    }
}

#[test]
fn u6_vanishes_with_traceless_connection() {
    // a connection with only skew part has G = 0
    let mut rng = random::rng(4);
    let raw = random::field(&mut rng, 3, &[Up, Down, Down], 2);
    let skew = Space::from_connection(raw.antisym_pair(1, 2).unwrap()).unwrap();
    let pair = MappedPair::new(skew, torsion_free_pair(3, 2).mapping).unwrap();
    assert!(ctx(&pair).u_theta(6).unwrap().is_zero());
}

#[test]
fn coefficient_table_rows() {
    let m = sigma_coeff_matrix(3).unwrap();
    let row1: Vec<Rational> = [1, 0, -1, 0, -1].iter().map(|&k| rat(k, 1)).chain(std::iter::repeat_n(rat(0, 1), 15)).collect();
    assert_eq!(m.row(0), row1.as_slice());
    // row 2: U1 + U9 + U11 − c(2U6 + U7 − U8) − c(2U12 + U13 − U14)
    let c = rat(1, 4);
    let r2 = m.row(1);
    assert_eq!(r2[0], rat(1, 1));
    assert_eq!(r2[8], rat(1, 1));
    assert_eq!(r2[10], rat(1, 1));
    assert_eq!(r2[5], &c * rat(-2, 1));
    assert_eq!(r2[6], -&c);
    assert_eq!(r2[7], c.clone());
    assert_eq!(r2[11], &c * rat(-2, 1));
    assert_eq!(r2[12], -&c);
    assert_eq!(r2[13], c);
    assert!(sigma_coeff_matrix(1).is_err());
}

#[test]
fn coefficient_table_rank_is_four() {
    for n in 2..=6 {
        assert_eq!(sigma_coeff_matrix(n).unwrap().rank(), 4, "N = {n}");
    }
}

#[test]
fn coefficient_table_reproduces_sigmas() {
    for kind in MappingKind::ALL {
        for seed in 0..2 {
            let pair = synthesize_instance(3, kind, seed, 2).unwrap();
            ctx(&pair).validate_sigma_coeff_matrix().unwrap();
        }
    }
}

#[test]
fn swap_transport_matches_direct_evaluation() {
    let pair = synthesize_instance(3, MappingKind::Second, 3, 2).unwrap();
    let c = ctx(&pair);
    let table = sigma_coeff_matrix(3).unwrap();
    for p in 1..=SIGMA_COUNT {
        let direct = c.sigma_p(p).unwrap().swap_slots(2, 3).unwrap();
        let transported = c.u_combination(&swapped_coeff_row(table.row(p - 1)));
        assert_eq!(direct, transported, "p = {p}");
    }
    for theta in 1..=U_COUNT {
        let (target, sign) = U_SWAP[theta - 1];
        let swapped = c.u_theta(theta).unwrap().swap_slots(2, 3).unwrap();
        assert_eq!(swapped, c.u_theta(target + 1).unwrap().scale(&rat(sign, 1)), "U{theta}");
    }
}

#[test]
fn w_matrix_generic_rank_is_six() {
    for n in 2..=6 {
        let m = build_w_matrix(n).unwrap();
        assert_eq!((m.rows(), m.cols()), (64, 26));
        assert_eq!(generic_rank(&m, 5, 7).unwrap(), 6, "N = {n}");
    }
}

#[test]
fn w_matrix_without_torsion_derivative_terms_has_identical_rows() {
    let m = build_w_matrix(3).unwrap();
    let point = [rat(0, 1), rat(0, 1), rat(2, 3), rat(-5, 7), rat(1, 9)];
    let sub = m.substitute(&point);
    for r in 1..sub.rows() {
        assert_eq!(sub.row(r), sub.row(0));
    }
    assert_eq!(sub.rank(), 1);
}

#[test]
fn eta_without_sigma_is_trace_product() {
    let mut pair = synthesize_instance(3, MappingKind::First, 9, 2).unwrap();
    pair.mapping.sigma = TensorField::zeros(3, &[Down, Down], 2);
    let c = ctx(&pair);
    let g = connection_trace(&pair.source.symmetric_part());
    let expected = TensorField::from_fn(3, &[Down, Down], |ix| {
        (g.get(&[ix[0]]) * g.get(&[ix[1]])).scale(&rat(-1, 16)).truncate(1)
    });
    for which in MappingKind::ALL {
        assert_eq!(c.eta_star(which), expected);
    }
}

#[test]
fn torsion_free_kinds_agree() {
    let pair = torsion_free_pair(3, 6);
    let c = ctx(&pair);
    assert_eq!(c.eta_star(MappingKind::First), c.eta_star(MappingKind::Second));
    for form in [WStarForm::Printed, WStarForm::Derived] {
        assert_eq!(c.w_star(MappingKind::First, form), c.w_star(MappingKind::Second, form));
    }
}

#[test]
fn identity_on_flat_space_is_zero() {
    let n = 3;
    let phi = TensorField::from_fn(n, &[Up], |ix| JetScalar::coordinate(n, 3, ix[0]).unwrap());
    let m = AG3Mapping::new(
        TensorField::zeros(n, &[Down], 2),
        TensorField::zeros(n, &[Down, Down], 2),
        phi,
        TensorField::zeros(n, &[Down], 2),
        JetScalar::zero(n, 2),
        MappingKind::First,
    )
    .unwrap();
    let flat = Space::from_connection(TensorField::zeros(n, &[Up, Down, Down], 2)).unwrap();
    let c = InvariantContext::new(&flat, &m).unwrap();
    assert!(c.eta_star(MappingKind::First).is_zero());
    assert!(c.w_star(MappingKind::First, WStarForm::Printed).is_zero());
    assert!(c.w_star(MappingKind::Second, WStarForm::Derived).is_zero());
}

#[test]
fn zero_parameters_family_is_w_star() {
    let pair = synthesize_instance(2, MappingKind::First, 1, 2).unwrap();
    let c = ctx(&pair);
    let zero = CurvatureParams::zero();
    for (p, q) in [(1, 1), (3, 7), (8, 2)] {
        for form in [WStarForm::Printed, WStarForm::Derived] {
            assert_eq!(
                c.w_family(MappingKind::First, form, p, q, &zero).unwrap(),
                c.w_star(MappingKind::First, form)
            );
        }
    }
}

#[test]
fn pair_identities_hold_on_synthesized_instances() {
    for kind in MappingKind::ALL {
        let pair = synthesize_instance(3, kind, 21, 2).unwrap();
        let sides = PairContexts::new(&pair).unwrap();
        for p in 1..=SIGMA_COUNT {
            let r = sides.torsion_cd_difference_check(p).unwrap();
            assert!(r.pass, "torsion derivative difference p = {p}, kind {kind:?}");
            assert!(sides.t_tilde_invariance(p).unwrap().pass, "T-tilde {p}");
        }
        let params = family_params(5);
        for (p, q) in [(1, 2), (5, 5), (8, 3)] {
            assert!(sides.correlation_check(kind, WStarForm::Printed, p, q, &params).unwrap().pass);
        }
    }
}

#[test]
fn derived_form_is_invariant() {
    for kind in MappingKind::ALL {
        for (n, seed) in [(2, 0), (3, 1), (3, 2)] {
            let pair = synthesize_instance(n, kind, seed, 2).unwrap();
            let sides = PairContexts::new(&pair).unwrap();
            assert!(sides.w_star_invariance(kind, WStarForm::Derived).pass, "N={n} seed={seed} {kind:?}");
            let params = family_params(seed);
            assert!(sides.w_family_invariance(kind, WStarForm::Derived, 2, 6, &params).unwrap().pass);
            for r in sides.r_and_k_transformation_check(kind, WStarForm::Derived, 4, 7, &params).unwrap() {
                assert!(r.pass, "{}", r.check);
            }
        }
    }
}

#[test]
fn printed_form_is_not_invariant() {
    // recorded behaviour: the printed correction terms do not cancel R̄ − R
    let pair = synthesize_instance(3, MappingKind::First, 1, 2).unwrap();
    let sides = PairContexts::new(&pair).unwrap();
    let report = sides.w_star_invariance(MappingKind::First, WStarForm::Printed);
    assert!(!report.pass);
    assert!(report.residual.is_some());
}

#[test]
fn k_check_reduces_to_r_check_without_torsion_derivative_terms() {
    let pair = synthesize_instance(3, MappingKind::Second, 4, 2).unwrap();
    let sides = PairContexts::new(&pair).unwrap();
    let params = CurvatureParams::new(rat(0, 1), rat(0, 1), rat(3, 2), rat(-1, 5), rat(7, 3));
    let [r, k] = sides
        .r_and_k_transformation_check(MappingKind::Second, WStarForm::Printed, 1, 1, &params)
        .unwrap();
    assert_eq!(r.residual, k.residual);
}

#[test]
fn identity_mapping_transformations_are_trivial() {
    let pair = synthesize_instance(2, MappingKind::First, 2, 2).unwrap();
    let mut m = pair.mapping.clone();
    m.psi = TensorField::zeros(2, &[Down], 2);
    m.sigma = TensorField::zeros(2, &[Down, Down], 2);
    let id = MappedPair::new(pair.source.clone(), m).unwrap();
    let sides = PairContexts::new(&id).unwrap();
    let params = family_params(3);
    for form in [WStarForm::Printed, WStarForm::Derived] {
        assert!(sides.w_star_invariance(MappingKind::First, form).pass);
        for r in sides.r_and_k_transformation_check(MappingKind::First, form, 2, 5, &params).unwrap() {
            assert!(r.pass);
        }
    }
    let t = sides.torsion_cd_difference_check(3).unwrap();
    assert!(t.pass);
}

#[test]
fn spans() {
    let pairs: Vec<MappedPair> = (0..2)
        .map(|s| synthesize_instance(3, MappingKind::First, s, 2).unwrap())
        .collect();
    assert_eq!(family_span_dimension(&pairs, MappingKind::First, 64, 1).unwrap(), 6);
    assert!(matches!(
        family_span_dimension(&pairs, MappingKind::First, 25, 1),
        Err(Error::InsufficientSamples { .. })
    ));
    let flat = vec![torsion_free_pair(3, 3)];
    assert!(family_span_dimension(&flat, MappingKind::First, 26, 1).unwrap() < 6);

    let contexts: Vec<InvariantContext> = pairs.iter().map(ctx).collect();
    assert_eq!(u_combination_span(&contexts).unwrap(), 4);

    let mut rng = random::rng(12);
    let spaces: Vec<Space> = (0..3).map(|_| random::space(&mut rng, 3, 2)).collect();
    assert_eq!(curvature_family_span(&spaces).unwrap(), 5);
}

#[test]
fn family_table_cells_match_direct_evaluation() {
    let pair = synthesize_instance(2, MappingKind::Second, 8, 2).unwrap();
    let c = ctx(&pair);
    let params = family_params(4);
    for form in [WStarForm::Printed, WStarForm::Derived] {
        let table = c.family_table(MappingKind::Second, form, &params).unwrap();
        for (p, q) in [(1, 8), (4, 4), (7, 2)] {
            assert_eq!(
                table.cell(p, q).unwrap(),
                c.w_family(MappingKind::Second, form, p, q, &params).unwrap()
            );
        }
    }
}

#[test]
fn grid_checks_agree_with_single_cell_checks() {
    let pair = synthesize_instance(3, MappingKind::First, 6, 2).unwrap();
    let sides = PairContexts::new(&pair).unwrap();
    let params = family_params(2);
    let grid = [(2, 5), (6, 6)];
    for form in [WStarForm::Printed, WStarForm::Derived] {
        let reports = sides.family_checks(MappingKind::First, form, &params, &grid).unwrap();
        for (k, &(p, q)) in grid.iter().enumerate() {
            let single = sides.w_family_invariance(MappingKind::First, form, p, q, &params).unwrap();
            assert_eq!(reports[3 * k].residual, single.residual);
            let [_, kk] = sides.r_and_k_transformation_check(MappingKind::First, form, p, q, &params).unwrap();
            assert_eq!(reports[3 * k + 2].residual, kk.residual);
            assert!(reports[3 * k + 1].pass);
        }
        let [r, _] = sides.r_and_k_transformation_check(MappingKind::First, form, 1, 1, &params).unwrap();
        assert_eq!(sides.r_transformation_check(MappingKind::First, form).unwrap().residual, r.residual);
    }
}
