mod common;

use proptest::collection::vec;
use proptest::prelude::*;
use provbench::godel::godel;
use provbench::oracle::least_witness_scan;
use provbench::semantics::{eval_bounded, sigma1_witness, OutputList};
use provbench::syntax::parse;
use provbench::{numeral, Formula, MachineId, Term, Truth};

/// Sentences mixing arithmetic with `E`-machine atoms over a tiny alphabet.
fn machine_sentence() -> impl Strategy<Value = Formula> {
    let code = (0u32..4).prop_map(numeral);
    let leaf = prop_oneof![
        code.clone().prop_map(|c| Formula::pr(MachineId::E, c)),
        code.clone().prop_map(|c| Formula::exists(0, Formula::out(MachineId::E, Term::Var(0), c))),
        (code.clone(), code).prop_map(|(a, b)| {
            let l = Formula::exists(0, Formula::out(MachineId::E, Term::Var(0), a));
            let r = Formula::exists(0, Formula::out(MachineId::E, Term::Var(0), b));
            provbench::formula::wc_strict(&l, &r).unwrap()
        }),
        common::sigma1_sentence(),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::negate),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::implies(a, b)),
        ]
    })
}

#[test]
fn examples() {
    let t = |s: &str| eval_bounded(&parse(s).unwrap(), 64, None);
    assert_eq!(t("Ex0.(x0*x0=49)"), Truth::True);
    assert_eq!(t("Ax0<=10.(x0*x0=x0*x0)"), Truth::True);
    assert_eq!(t("Ex0.((x0*x0)=2)"), Truth::Unknown);
    assert_eq!(t("Ax0.!(x0=3)"), Truth::False);
    assert_eq!(t("Ax0.(x0=x0)"), Truth::Unknown);
}

#[test]
fn machine_atoms_follow_the_list() {
    let zero = parse("0=0").unwrap();
    let list = OutputList::from_formulas(&[zero.clone()]);
    let pr = Formula::pr(MachineId::E, Term::Num(godel(&zero)));
    assert_eq!(eval_bounded(&pr, 8, Some((MachineId::E, &list))), Truth::True);
    let other = Formula::pr(MachineId::E, numeral(1u32));
    assert_eq!(eval_bounded(&other, 8, Some((MachineId::E, &list))), Truth::Unknown);
    let done = list.completed();
    assert_eq!(eval_bounded(&other, 8, Some((MachineId::E, &done))), Truth::False);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decided_values_persist_as_the_bound_grows(s in common::sigma1_sentence(), small in 0u64..20, extra in 1u64..40) {
        for phi in [s.clone(), Formula::negate(s.clone())] {
            let early = eval_bounded(&phi, small, None);
            if early != Truth::Unknown {
                prop_assert_eq!(eval_bounded(&phi, small + extra, None), early);
            }
        }
    }

    #[test]
    fn decided_values_persist_along_trace_prefixes(phi in machine_sentence(), codes in vec(0u32..5, 0..8), cut in 0usize..8) {
        let codes: Vec<_> = codes.into_iter().map(num_bigint::BigUint::from).collect();
        let cut = cut.min(codes.len());
        let prefix = OutputList::new(codes[..cut].to_vec());
        let full = OutputList::new(codes);
        let early = eval_bounded(&phi, 12, Some((MachineId::E, &prefix)));
        if early != Truth::Unknown {
            prop_assert_eq!(eval_bounded(&phi, 12, Some((MachineId::E, &full))), early);
        }
    }

    #[test]
    fn witnesses_are_least_and_make_the_sentence_true(s in common::sigma1_sentence(), bound in 0u64..64) {
        let w = sigma1_witness(&s, bound, None).unwrap();
        prop_assert_eq!(w, least_witness_scan(&s, bound));
        if w.is_some() {
            prop_assert_eq!(eval_bounded(&s, bound, None), Truth::True);
        }
    }
}
