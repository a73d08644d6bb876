//! Shared generators for the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use provbench::{numeral, BoundKind, Formula, Term, Var};

pub fn small_numeral() -> impl Strategy<Value = Term> {
    (0u32..6).prop_map(numeral)
}

/// Terms over the given variables (closed when `vars` is empty).
pub fn term(vars: Vec<Var>) -> impl Strategy<Value = Term> {
    let leaf = if vars.is_empty() {
        small_numeral().boxed()
    } else {
        prop_oneof![small_numeral(), proptest::sample::select(vars).prop_map(Term::Var)].boxed()
    };
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Term::succ),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::add(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Term::mul(a, b)),
        ]
    })
}

/// Quantifier bounds stay small so bounded evaluation stays cheap.
fn bound_term(vars: Vec<Var>) -> BoxedStrategy<Term> {
    if vars.is_empty() {
        return small_numeral().boxed();
    }
    prop_oneof![small_numeral(), proptest::sample::select(vars).prop_map(Term::Var)].boxed()
}

fn atom(vars: Vec<Var>) -> impl Strategy<Value = Formula> {
    (term(vars.clone()), term(vars), any::<bool>())
        .prop_map(|(a, b, eq)| if eq { Formula::eq(a, b) } else { Formula::le(a, b) })
}

fn bound_kind() -> impl Strategy<Value = BoundKind> {
    proptest::sample::select(vec![BoundKind::ForallLe, BoundKind::ExistsLe, BoundKind::ForallLt, BoundKind::ExistsLt])
}

/// Bounded formulas whose free variables lie in `vars`.
pub fn delta0(vars: Vec<Var>, depth: u32) -> BoxedStrategy<Formula> {
    if depth == 0 {
        return atom(vars).boxed();
    }
    let fresh = vars.iter().max().map_or(0, |v| v + 1);
    let mut inner_vars = vars.clone();
    inner_vars.push(fresh);
    prop_oneof![
        3 => atom(vars.clone()),
        1 => delta0(vars.clone(), depth - 1).prop_map(Formula::negate),
        1 => (delta0(vars.clone(), depth - 1), delta0(vars.clone(), depth - 1)).prop_map(|(a, b)| Formula::and(a, b)),
        1 => (delta0(vars.clone(), depth - 1), delta0(vars.clone(), depth - 1)).prop_map(|(a, b)| Formula::or(a, b)),
        1 => (delta0(vars.clone(), depth - 1), delta0(vars.clone(), depth - 1)).prop_map(|(a, b)| Formula::implies(a, b)),
        1 => (bound_kind(), bound_term(vars), delta0(inner_vars, depth - 1))
            .prop_map(move |(k, t, body)| Formula::bounded(k, fresh, t, body)),
    ]
    .boxed()
}

/// `Ex0.delta(x0)` with a bounded matrix.
pub fn sigma1_sentence() -> impl Strategy<Value = Formula> {
    delta0(vec![0], 2).prop_map(|d| Formula::exists(0, d))
}

/// Arbitrary formulas with unbounded quantifiers over `x0..x2`.
pub fn formula() -> impl Strategy<Value = Formula> {
    atom(vec![0, 1, 2]).prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::negate),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (0u32..3, inner.clone()).prop_map(|(v, b)| Formula::forall(v, b)),
            (0u32..3, inner.clone()).prop_map(|(v, b)| Formula::exists(v, b)),
            (bound_kind(), 0u32..3, term(vec![0, 1, 2]), inner)
                .prop_map(|(k, v, t, b)| Formula::bounded(k, v, t, b)),
        ]
    })
}

/// Ten propositionally atomic sentences, pairwise distinct.
pub fn atom_pool() -> Vec<Formula> {
    let mut pool: Vec<Formula> = (0u32..7).map(|i| Formula::eq(numeral(i), numeral(i + 1))).collect();
    pool.push(Formula::forall(0, Formula::eq(Term::Var(0), Term::Var(0))));
    pool.push(Formula::exists(0, Formula::eq(Term::Var(0), numeral(1u32))));
    pool.push(Formula::pr(provbench::MachineId::E, numeral(7u32)));
    pool
}

/// Boolean combinations of the first `atoms` pool members.
pub fn boolean_over(atoms: usize) -> impl Strategy<Value = Formula> {
    let pool = atom_pool()[..atoms].to_vec();
    proptest::sample::select(pool).prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::negate),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::implies(a, b)),
        ]
    })
}
