mod common;

use std::collections::HashMap;

use proptest::collection::vec;
use proptest::prelude::*;
use provbench::oracle::{truth_table_satisfiable, truth_table_tautology, truth_table_tc, Corpus};
use provbench::prop::{prop_satisfiable, skeleton, tautology, tc, tc_with_cap, PropError};
use provbench::syntax::parse;
use provbench::Formula;

fn f(s: &str) -> Formula {
    parse(s).unwrap()
}

#[test]
fn tc_examples() {
    assert!(tc(&[f("0=0")], &f("0=0")).unwrap());
    assert!(tc(&[f("0=1")], &f("(0=1|Ax0.(x0=x0))")).unwrap());
    assert!(tc(&[], &f("(Ax0.(x0=x0)|!Ax0.(x0=x0))")).unwrap());
    // Quantified formulas are opaque: no first-order reasoning sneaks in.
    assert!(!tc(&[f("Ax0.(x0=x0)")], &f("0=0")).unwrap());
    assert!(tc(&[f("0=1"), f("!0=1")], &Formula::falsum()).unwrap());
    assert!(!prop_satisfiable(&[f("0=1"), f("!0=1")]).unwrap());
}

#[test]
fn atom_cap_is_reported() {
    let atoms: Vec<Formula> = (0u32..30).map(|i| f(&format!("{i}=0"))).collect();
    let big = Formula::disj(atoms).unwrap();
    assert_eq!(tc_with_cap(&[], &big, 10), Err(PropError::TooManyAtoms { count: 30, cap: 10 }));
}

#[test]
fn skeleton_is_injective_on_a_repetition_free_corpus() {
    let corpus = Corpus::up_to_size(5);
    let mut seen = HashMap::new();
    for phi in &corpus.formulas {
        if let Some(prev) = seen.insert(skeleton(phi), phi) {
            panic!("{prev} and {phi} share a skeleton");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn agrees_with_truth_tables(premises in vec(common::boolean_over(10), 0..4), phi in common::boolean_over(10)) {
        prop_assert_eq!(tc(&premises, &phi).unwrap(), truth_table_tc(&premises, &phi));
        prop_assert_eq!(tautology(&skeleton(&phi)).unwrap(), truth_table_tautology(&phi));
        let mut set = premises.clone();
        set.push(phi.clone());
        prop_assert_eq!(prop_satisfiable(&set).unwrap(), truth_table_satisfiable(&set));
    }

    #[test]
    fn modus_ponens_closure(xs in vec(common::boolean_over(6), 0..4), a in common::boolean_over(6), b in common::boolean_over(6)) {
        if tc(&xs, &Formula::implies(a.clone(), b.clone())).unwrap() && tc(&xs, &a).unwrap() {
            prop_assert!(tc(&xs, &b).unwrap());
        }
    }

    #[test]
    fn monotonicity(xs in vec(common::boolean_over(6), 0..4), extra in vec(common::boolean_over(6), 0..3), phi in common::boolean_over(6)) {
        if tc(&xs, &phi).unwrap() {
            let mut ys = xs.clone();
            ys.extend(extra);
            prop_assert!(tc(&ys, &phi).unwrap());
        }
    }

    #[test]
    fn cut(xs in vec(common::boolean_over(6), 0..4), a in common::boolean_over(6), b in common::boolean_over(6)) {
        let mut with_a = xs.clone();
        with_a.push(a.clone());
        if tc(&xs, &a).unwrap() && tc(&with_a, &b).unwrap() {
            prop_assert!(tc(&xs, &b).unwrap());
        }
    }
}
