mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use provbench::formula::{wc_strict, wc_weak};
use provbench::godel::{decode, godel};
use provbench::hierarchy::in_class;
use provbench::oracle::{least_witness_scan, Corpus};
use provbench::semantics::eval_bounded;
use provbench::syntax::{parse, print};
use provbench::{numeral, Formula, HierarchyClass, Term, Truth};

const BOUND: u64 = 64;

#[test]
fn godel_round_trip_and_injectivity_on_small_corpus() {
    let corpus = Corpus::up_to_size(6);
    let mut seen: HashMap<_, &Formula> = HashMap::new();
    for phi in &corpus.formulas {
        let code = godel(phi);
        assert_eq!(decode(&code).as_ref(), Ok(phi));
        if let Some(prev) = seen.insert(code, phi) {
            panic!("{prev} and {phi} share a code");
        }
    }
    assert_eq!(seen.len(), corpus.len());
}

#[test]
fn substitution_examples() {
    let x = Term::Var(0);
    let y = Term::Var(1);
    let one = numeral(1u32);
    assert_eq!(Formula::eq(x.clone(), x.clone()).substitute(0, &one), Formula::eq(one.clone(), one.clone()));
    let inner = Formula::forall(0, Formula::eq(x.clone(), y.clone()));
    assert_eq!(inner.substitute(1, &numeral(0u32)), Formula::forall(0, Formula::eq(x.clone(), numeral(0u32))));

    // Ex0.(x0=x1)[x1 := x0] must rename the binder instead of capturing.
    let captured = Formula::exists(0, Formula::eq(x.clone(), y)).substitute(1, &x);
    let expected = Formula::exists(5, Formula::eq(Term::Var(5), x));
    assert!(captured.alpha_eq(&expected), "got {captured}");
    assert!(captured.free_vars().contains(&0));
}

#[test]
fn witness_comparison_shapes() {
    let d1 = Formula::eq(Term::Var(0), numeral(3u32));
    let d2 = Formula::le(numeral(5u32), Term::Var(0));
    let s1 = Formula::exists(0, d1.clone());
    let s2 = Formula::exists(0, d2.clone());
    assert_eq!(print(&wc_strict(&s1, &s2).unwrap()), "Ex0.(x0=3&Ax1<=x0.!(5<=x1))");
    assert_eq!(print(&wc_weak(&s1, &s2).unwrap()), "Ex0.(x0=3&Ax1<x0.!(5<=x1))");
    let merged = wc_strict(&Formula::or(s1.clone(), s2.clone()), &s1).unwrap();
    assert_eq!(print(&merged), "Ex0.((x0=3|5<=x0)&Ax1<=x0.!(x1=3))");
    assert!(wc_strict(&d1, &s2).is_err());
    assert_eq!(eval_bounded(&wc_strict(&s1, &s1).unwrap(), BOUND, None), Truth::False);
    assert_eq!(eval_bounded(&wc_weak(&s1, &s1).unwrap(), BOUND, None), Truth::True);
}

fn leaves_are_atomic(phi: &Formula) -> bool {
    match phi {
        Formula::Not(a) => leaves_are_atomic(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => leaves_are_atomic(a) && leaves_are_atomic(b),
        other => other.is_prop_atomic(),
    }
}

/// Truth of `phi < psi` (strict) or `phi <= psi` from least witnesses; `None`
/// when the bound does not settle it.
fn expected_comparison(a: Option<u64>, b: Option<u64>, strict: bool) -> Option<bool> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if strict { a < b } else { a <= b }),
        (Some(_), None) => Some(true),
        (None, Some(_)) => Some(false),
        (None, None) => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_round_trip(phi in common::formula()) {
        let text = print(&phi);
        prop_assert_eq!(parse(&text).unwrap(), phi);
    }

    #[test]
    fn godel_round_trip(phi in common::formula()) {
        prop_assert_eq!(decode(&godel(&phi)).unwrap(), phi);
    }

    #[test]
    fn every_formula_is_a_boolean_combination_of_atomic_ones(phi in common::formula()) {
        prop_assert!(leaves_are_atomic(&phi));
    }

    #[test]
    fn witness_comparisons_are_sigma1(s in common::sigma1_sentence(), t in common::sigma1_sentence()) {
        prop_assert!(in_class(&wc_strict(&s, &t).unwrap(), HierarchyClass::sigma(1)));
        prop_assert!(in_class(&wc_weak(&s, &t).unwrap(), HierarchyClass::sigma(1)));
    }

    #[test]
    fn witness_comparisons_follow_least_witnesses(s in common::sigma1_sentence(), t in common::sigma1_sentence()) {
        let a = least_witness_scan(&s, BOUND);
        let b = least_witness_scan(&t, BOUND);
        for strict in [true, false] {
            let wc = if strict { wc_strict(&s, &t) } else { wc_weak(&s, &t) }.unwrap();
            let got = eval_bounded(&wc, BOUND, None);
            if let Some(want) = expected_comparison(a, b, strict) {
                prop_assert_eq!(got, Truth::from_bool(want), "{}", print(&wc));
            }
        }
    }

    #[test]
    fn comparison_laws_hold(s in common::sigma1_sentence(), t in common::sigma1_sentence()) {
        let strict = |p: &Formula, q: &Formula| wc_strict(p, q).unwrap();
        let weak = |p: &Formula, q: &Formula| wc_weak(p, q).unwrap();
        let laws = [
            Formula::implies(strict(&s, &t), weak(&s, &t)),
            Formula::negate(Formula::and(strict(&s, &t), weak(&t, &s))),
            Formula::implies(Formula::or(s.clone(), t.clone()), Formula::or(weak(&s, &t), strict(&t, &s))),
        ];
        let decided = least_witness_scan(&s, BOUND).is_some() || least_witness_scan(&t, BOUND).is_some();
        for law in &laws {
            let v = eval_bounded(law, BOUND, None);
            prop_assert!(!v.is_false(), "{}", print(law));
            if decided {
                prop_assert!(v.is_true(), "{}", print(law));
            }
        }
    }
}
