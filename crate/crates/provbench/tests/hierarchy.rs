mod common;

use proptest::prelude::*;
use provbench::hierarchy::{alpha, classify, in_bool_combo_sigma, in_class};
use provbench::oracle::{bounded_validity, hierarchy_mismatches, Corpus, HierarchyFixpoint};
use provbench::syntax::parse;
use provbench::{Formula, HierarchyClass};

fn classes_up_to(n: u32) -> Vec<HierarchyClass> {
    (0..=n).flat_map(|l| [HierarchyClass::sigma(l), HierarchyClass::pi(l)]).collect()
}

#[test]
fn agrees_with_the_brute_force_fixpoint_up_to_size_seven() {
    let corpus = Corpus::up_to_size(7);
    let fix = HierarchyFixpoint::compute(&corpus, 5);
    let mismatches = hierarchy_mismatches(&corpus, &fix);
    assert!(mismatches.is_empty(), "first mismatches: {:?}", &mismatches[..mismatches.len().min(5)]);
}

#[test]
fn membership_is_monotone_along_inclusions() {
    let corpus = Corpus::up_to_size(6);
    let all = classes_up_to(4);
    for phi in &corpus.formulas {
        for &small in &all {
            if !in_class(phi, small) {
                continue;
            }
            for &big in all.iter().filter(|b| small.is_subclass_of(**b)) {
                assert!(in_class(phi, big), "{phi} in {small} but not {big}");
            }
        }
    }
}

#[test]
fn implication_clause_on_corpus() {
    let corpus = Corpus::up_to_size(4);
    for n in 0..3 {
        let sig: Vec<&Formula> = corpus.formulas.iter().filter(|f| in_class(f, HierarchyClass::sigma(n + 1))).collect();
        let pi: Vec<&Formula> = corpus.formulas.iter().filter(|f| in_class(f, HierarchyClass::pi(n + 1))).collect();
        for a in sig.iter().step_by(7) {
            for b in pi.iter().step_by(7) {
                let imp = Formula::implies((*a).clone(), (*b).clone());
                assert!(in_class(&imp, HierarchyClass::pi(n + 1)), "{imp}");
            }
        }
    }
}

#[test]
fn dual_is_an_involution() {
    for c in classes_up_to(6) {
        assert_eq!(c.dual().dual(), c);
        assert_ne!(c.dual(), c);
    }
}

#[test]
fn alpha_sentences_separate_dual_classes() {
    for n in 1..=5 {
        for c in [HierarchyClass::sigma(n), HierarchyClass::pi(n)] {
            let a = alpha(c).unwrap();
            assert!(a.is_sentence());
            assert!(bounded_validity(&a, 4), "{a} fails at a small domain cut");
            assert!(in_class(&a, c));
            assert!(!in_class(&a, c.dual()), "{a} is also {}", c.dual());
        }
    }
    assert!(alpha(HierarchyClass::sigma(0)).is_err());
}

#[test]
fn classification_examples() {
    let m = classify(&parse("Ax0.(x0=x0)").unwrap(), 3);
    assert_eq!(m.minimal_classes(), vec![HierarchyClass::pi(1)]);
    assert!(m.classes.contains(&HierarchyClass::sigma(2)));
    assert!(!m.classes.contains(&HierarchyClass::sigma(1)));

    let m = classify(&parse("Ex0.Ax1.(x0<=x1)").unwrap(), 3);
    assert_eq!(m.minimal_classes(), vec![HierarchyClass::sigma(2)]);

    let m = classify(&parse("Ax0<=3.(x0=x0)").unwrap(), 2);
    assert_eq!(m.minimal_classes(), vec![HierarchyClass::sigma(0)]);
}

#[test]
fn boolean_combinations_of_sigma1() {
    let mixed = parse("(Ex0.(x0=0)->Ax0.(x0=x0))").unwrap();
    assert!(in_bool_combo_sigma(&mixed, 1));
    assert!(!in_class(&mixed, HierarchyClass::sigma(1)));
    assert!(!in_bool_combo_sigma(&parse("Ex0.Ax1.(x0<=x1)").unwrap(), 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bounded_formulas_are_in_every_class(d in common::delta0(vec![], 3)) {
        for c in classes_up_to(3) {
            prop_assert!(in_class(&d, c));
        }
    }

    #[test]
    fn negation_swaps_polarity(phi in common::formula()) {
        for c in classes_up_to(4) {
            prop_assert_eq!(in_class(&Formula::negate(phi.clone()), c), in_class(&phi, c.dual()));
        }
    }
}
