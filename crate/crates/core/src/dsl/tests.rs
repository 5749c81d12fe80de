use proptest::prelude::*;

use super::*;
use crate::random;
use crate::tensor::{Down, Up};

const CURVATURE: &str = "d(Gamma[^i,_j,_m],_n) - d(Gamma[^i,_j,_n],_m) \
    + Gamma[^a,_j,_m]*Gamma[^i,_a,_n] - Gamma[^a,_j,_n]*Gamma[^i,_a,_m]";

fn bind(pairs: &[(&str, TensorField)]) -> BTreeMap<String, TensorField> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn free_of(src: &str) -> Vec<Index> {
    parse(src).unwrap().free_indices().to_vec()
}

#[test]
fn single_reference_signature() {
    assert_eq!(
        free_of("Gamma[^i,_j,_k]"),
        vec![Index::up("i"), Index::down("j"), Index::down("k")]
    );
}

#[test]
fn product_binds_repeated_index() {
    assert_eq!(
        free_of("Gamma[^a,_j,_m]*Gamma[^i,_a,_n]"),
        vec![Index::up("i"), Index::down("j"), Index::down("m"), Index::down("n")]
    );
}

#[test]
fn summands_with_different_valence_are_rejected() {
    let err = parse("T[^i,_j] + S[_j,^i]").unwrap_err();
    assert!(matches!(err, Error::IndexDiscipline(_)), "{err}");
    assert!(matches!(parse("T[^i,_j] + S[^i,_k]"), Err(Error::IndexDiscipline(_))));
}

#[test]
fn discipline_errors() {
    for src in [
        "A[^a,_a]*B[_a]",
        "A[_a]*B[_a]",
        "A[^i,^i]",
        "d(V[_i],_i)",
        "d(V[^i],^j)",
        "A[^a,_a]*B[^a]",
        "delta[^i,^j]",
    ] {
        assert!(matches!(parse(src), Err(Error::IndexDiscipline(_))), "{src}");
    }
}

#[test]
fn syntax_error_positions() {
    match parse("A[^i] + * B[^i]") {
        Err(Error::Parse { position, .. }) => assert_eq!(position, 8),
        other => panic!("{other:?}"),
    }
    match parse("A[i]") {
        Err(Error::Parse { position, .. }) => assert_eq!(position, 2),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse("1/0"), Err(Error::Parse { .. })));
    assert!(matches!(parse("A[^i"), Err(Error::Parse { position: 4, .. })));
    assert!(matches!(parse("A $ B"), Err(Error::Parse { position: 2, .. })));
}

#[test]
fn curvature_text_matches_builtin() {
    let mut rng = random::rng(2024);
    for n in [2, 2, 2, 3, 3, 3, 3, 2, 3, 3] {
        let space = random::space(&mut rng, n, 2);
        let plan = parse(CURVATURE).unwrap();
        let got = evaluate(&plan, &bind(&[("Gamma", space.symmetric_part())])).unwrap();
        assert_eq!(got, space.curvature_r().unwrap());
    }
}

#[test]
fn delta_and_zero_literal() {
    let g = random::field(&mut random::rng(1), 3, &[Up, Down, Down], 2);
    let b = bind(&[("Gamma", g.clone())]);
    let delta = evaluate(&parse("delta[^i,_j]").unwrap(), &b).unwrap();
    assert_eq!(delta, TensorField::kronecker(3, 2));
    let zero = evaluate(&parse("0*Gamma[^i,_j,_k]").unwrap(), &b).unwrap();
    assert!(zero.is_zero());
    let via_delta = evaluate(&parse("delta[^i,_a]*Gamma[^a,_j,_k]").unwrap(), &b).unwrap();
    assert_eq!(via_delta, g);
}

#[test]
fn traces_and_divergence() {
    let g = random::field(&mut random::rng(3), 3, &[Up, Down, Down], 2);
    let v = random::field(&mut random::rng(4), 3, &[Up], 2);
    let b = bind(&[("Gamma", g.clone()), ("V", v.clone())]);
    let trace = evaluate(&parse("Gamma[^a,_a,_k]").unwrap(), &b).unwrap();
    assert_eq!(trace, g.contract(0, 1).unwrap());
    let div = evaluate(&parse("d(V[^i],_i)").unwrap(), &b).unwrap();
    assert_eq!(div, v.gradient().unwrap().contract(0, 1).unwrap());
    let half = evaluate(&parse("1/2*(Gamma[^i,_j,_k] + Gamma[^i,_k,_j])").unwrap(), &b).unwrap();
    assert_eq!(half, g.sym_pair(1, 2).unwrap());
}

#[test]
fn evaluation_errors() {
    let g = random::field(&mut random::rng(5), 2, &[Up, Down, Down], 1);
    let b = bind(&[("Gamma", g)]);
    assert!(matches!(
        evaluate(&parse("X[^i]").unwrap(), &b),
        Err(Error::Unbound(n)) if n == "X"
    ));
    assert!(matches!(
        evaluate(&parse("Gamma[_i,_j,_k]").unwrap(), &b),
        Err(Error::ValenceMismatch(_))
    ));
    assert!(matches!(
        evaluate(&parse("d(d(Gamma[^i,_j,_k],_m),_n)").unwrap(), &b),
        Err(Error::OrderExhausted)
    ));
}

#[test]
fn program_assignments() {
    let space = random::space(&mut random::rng(11), 3, 2);
    let b = bind(&[("Gamma", space.gamma().clone())]);
    let src = "# curvature of the symmetric part\n\
               S[^i,_j,_k] = 1/2*(Gamma[^i,_j,_k] + Gamma[^i,_k,_j])\n\
               \n\
               R[^i,_j,_m,_n] = d(S[^i,_j,_m],_n) - d(S[^i,_j,_n],_m) + S[^a,_j,_m]*S[^i,_a,_n] - S[^a,_j,_n]*S[^i,_a,_m]\n\
               Q[_j,^i,_m,_n] = R[^i,_j,_m,_n]\n";
    let out = evaluate_program(src, &b).unwrap();
    let names: Vec<&str> = out.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["S", "R", "Q"]);
    let r = space.curvature_r().unwrap();
    assert_eq!(out[1].1, r);
    assert_eq!(out[2].1, r.permute(&[1, 0, 2, 3]).unwrap());
    assert!(evaluate_program("", &b).unwrap().is_empty());
}

#[test]
fn program_errors_carry_line_numbers() {
    let b = bind(&[("Gamma", random::field(&mut random::rng(1), 2, &[Up, Down, Down], 2))]);
    let err = evaluate_program("A[^i,_j,_k] = Gamma[^i,_j,_k]\nB[^i] = Missing[^i]\n", &b).unwrap_err();
    match err {
        Error::AtLine { line: 2, source } => assert!(matches!(*source, Error::Unbound(ref n) if n == "Missing")),
        other => panic!("{other:?}"),
    }
    let err = evaluate_program("\n\nA[^i] = Gamma[^i,_j,_k]", &b).unwrap_err();
    assert!(matches!(err, Error::AtLine { line: 3, .. }));
    let err = evaluate_program("A[^i,_j,_k] Gamma[^i,_j,_k]", &b).unwrap_err();
    assert!(matches!(err, Error::AtLine { line: 1, .. }));
}

#[test]
fn printed_plans_reparse() {
    for src in [
        CURVATURE,
        "-(A[^i] + B[^i])*c",
        "a - -b - (c - d)",
        "2/3*x*(y*z)",
        "d(d(f,_i),_j) - d(d(f,_j),_i)",
        "-x*y + -(x*y)",
    ] {
        let plan = parse(src).unwrap();
        let printed = plan.to_string();
        assert_eq!(parse(&printed).unwrap(), plan, "{src} -> {printed}");
    }
}

fn arb_index() -> impl Strategy<Value = Index> {
    (prop::sample::select(vec!["i", "j", "k", "a1"]), any::<bool>()).prop_map(|(n, up)| {
        if up {
            Index::up(n)
        } else {
            Index::down(n)
        }
    })
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0i64..50, 1i64..9).prop_map(|(n, d)| Expr::Literal(crate::rat(n, d))),
        (
            prop::sample::select(vec!["A", "Gamma", "f", "x2"]),
            prop::collection::vec(arb_index(), 0..4)
        )
            .prop_map(|(name, indices)| Expr::Ref {
                name: name.to_owned(),
                indices
            }),
    ];
    leaf.prop_recursive(4, 32, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner.clone(), arb_index()).prop_map(|(e, index)| Expr::Deriv {
                inner: Box::new(e),
                index
            }),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Product),
            (inner.clone(), prop::collection::vec((any::<bool>(), inner), 1..3)).prop_map(
                |(first, rest)| {
                    let mut terms = vec![(false, first)];
                    terms.extend(rest);
                    Expr::Sum(terms)
                }
            ),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let printed = e.to_string();
        prop_assert_eq!(Expr::parse(&printed).unwrap(), e);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn renaming_dummies_preserves_value(
        seed in any::<u64>(),
        dummy in prop::sample::select(vec!["b", "c", "r", "s", "z9"]),
    ) {
        let space = random::space(&mut random::rng(seed), 2, 2);
        let b = bind(&[("Gamma", space.symmetric_part())]);
        let renamed = CURVATURE.replace("^a", &format!("^{dummy}")).replace("_a", &format!("_{dummy}"));
        let base = evaluate(&parse(CURVATURE).unwrap(), &b).unwrap();
        let other = evaluate(&parse(&renamed).unwrap(), &b).unwrap();
        prop_assert_eq!(base, other);
    }
}
