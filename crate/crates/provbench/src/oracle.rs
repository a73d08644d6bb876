//! Brute-force reference computations.
//!
//! Each oracle here is written without calling the procedure it checks:
//! truth tables instead of DPLL, a bottom-up fixpoint over an enumerated
//! corpus instead of the recursive classifier, linear scans instead of
//! witness searches. Tests and the `oracle` subcommand compare the two.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::formula::{numeral, BoundKind, Formula, MachineId, Term, Var};
use crate::hierarchy::HierarchyClass;
use crate::semantics::eval_delta0;
use crate::theory::{ProofStream, ToyTheory};

/// Largest atom count the truth-table oracle accepts.
pub const TRUTH_TABLE_ATOMS: usize = 20;

fn collect_atoms(phi: &Formula, out: &mut Vec<Formula>) {
    match phi {
        Formula::Not(a) => collect_atoms(a, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
            collect_atoms(a, out);
            collect_atoms(b, out);
        }
        atom => {
            if !out.contains(atom) {
                out.push(atom.clone());
            }
        }
    }
}

fn eval_row(phi: &Formula, atoms: &[Formula], row: u32) -> bool {
    match phi {
        Formula::Not(a) => !eval_row(a, atoms, row),
        Formula::And(a, b) => eval_row(a, atoms, row) && eval_row(b, atoms, row),
        Formula::Or(a, b) => eval_row(a, atoms, row) || eval_row(b, atoms, row),
        Formula::Imp(a, b) => !eval_row(a, atoms, row) || eval_row(b, atoms, row),
        atom => {
            let i = atoms.iter().position(|a| a == atom).expect("atom collected");
            row & (1 << i) != 0
        }
    }
}

fn rows(set: &[Formula]) -> (Vec<Formula>, u32) {
    let mut atoms = Vec::new();
    for phi in set {
        collect_atoms(phi, &mut atoms);
    }
    assert!(atoms.len() <= TRUTH_TABLE_ATOMS, "truth table over {} atoms", atoms.len());
    let n = atoms.len() as u32;
    (atoms, 1u32 << n)
}

/// Some row satisfies every formula of `set`.
pub fn truth_table_satisfiable(set: &[Formula]) -> bool {
    let (atoms, count) = rows(set);
    (0..count).any(|row| set.iter().all(|phi| eval_row(phi, &atoms, row)))
}

/// Every row satisfying the premises satisfies `phi`.
pub fn truth_table_tc(premises: &[Formula], phi: &Formula) -> bool {
    let mut all = premises.to_vec();
    all.push(phi.clone());
    let (atoms, count) = rows(&all);
    (0..count).all(|row| !premises.iter().all(|p| eval_row(p, &atoms, row)) || eval_row(phi, &atoms, row))
}

pub fn truth_table_tautology(phi: &Formula) -> bool {
    truth_table_tc(&[], phi)
}

/// How a corpus entry is built from earlier entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Atom,
    /// A provability atom, read as an existential over a bounded matrix.
    ProvAtom,
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Imp(usize, usize),
    Exists(usize),
    Forall(usize),
    Bounded(usize),
}

/// Every formula up to a size over variables `x0, x1` and the atomic terms
/// `0, x0, x1`, listed so that subformulas come first.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub formulas: Vec<Formula>,
    pub shapes: Vec<Shape>,
}

impl Corpus {
    pub fn up_to_size(max_size: usize) -> Self {
        let terms = [Term::zero(), Term::var(0), Term::var(1)];
        let vars: [Var; 2] = [0, 1];
        let mut formulas = Vec::new();
        let mut shapes = Vec::new();
        let mut by_size: Vec<Vec<usize>> = vec![Vec::new(); max_size + 1];
        let mut push = |f: Formula, s: Shape, size: usize, formulas: &mut Vec<Formula>, by_size: &mut Vec<Vec<usize>>| {
            debug_assert_eq!(f.size(), size);
            formulas.push(f);
            shapes.push(s);
            by_size[size].push(formulas.len() - 1);
        };
        for size in 1..=max_size {
            if size == 2 {
                for t in &terms {
                    push(Formula::pr(MachineId::E, t.clone()), Shape::ProvAtom, 2, &mut formulas, &mut by_size);
                }
            }
            if size == 3 {
                for a in &terms {
                    for b in &terms {
                        push(Formula::eq(a.clone(), b.clone()), Shape::Atom, 3, &mut formulas, &mut by_size);
                        push(Formula::le(a.clone(), b.clone()), Shape::Atom, 3, &mut formulas, &mut by_size);
                    }
                }
            }
            if size >= 2 {
                for &i in &by_size[size - 1].clone() {
                    let body = formulas[i].clone();
                    push(Formula::negate(body.clone()), Shape::Not(i), size, &mut formulas, &mut by_size);
                    for &v in &vars {
                        push(Formula::exists(v, body.clone()), Shape::Exists(i), size, &mut formulas, &mut by_size);
                        push(Formula::forall(v, body.clone()), Shape::Forall(i), size, &mut formulas, &mut by_size);
                    }
                }
            }
            if size >= 3 {
                for &i in &by_size[size - 2].clone() {
                    let body = formulas[i].clone();
                    for kind in [BoundKind::ForallLe, BoundKind::ExistsLe, BoundKind::ForallLt, BoundKind::ExistsLt] {
                        for &v in &vars {
                            for t in &terms {
                                push(Formula::bounded(kind, v, t.clone(), body.clone()), Shape::Bounded(i), size, &mut formulas, &mut by_size);
                            }
                        }
                    }
                }
            }
            for left in 1..size.saturating_sub(1) {
                let right = size - 1 - left;
                for &a in &by_size[left].clone() {
                    for &b in &by_size[right].clone() {
                        let (fa, fb) = (formulas[a].clone(), formulas[b].clone());
                        push(Formula::and(fa.clone(), fb.clone()), Shape::And(a, b), size, &mut formulas, &mut by_size);
                        push(Formula::or(fa.clone(), fb.clone()), Shape::Or(a, b), size, &mut formulas, &mut by_size);
                        push(Formula::implies(fa, fb), Shape::Imp(a, b), size, &mut formulas, &mut by_size);
                    }
                }
            }
        }
        Corpus { formulas, shapes }
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }
}

/// Least sets `Sigma_n`, `Pi_n` (restricted to a corpus) closed under the
/// four inductive clauses, starting from the formulas whose quantifiers are
/// all bounded.
#[derive(Clone, Debug)]
pub struct HierarchyFixpoint {
    pub max_level: u32,
    sigma: Vec<Vec<bool>>,
    pi: Vec<Vec<bool>>,
}

fn all_bounded(phi: &Formula) -> bool {
    match phi {
        Formula::Pr(..) => false,
        Formula::Exists(..) | Formula::Forall(..) => false,
        Formula::Not(a) => all_bounded(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => all_bounded(a) && all_bounded(b),
        Formula::Bounded { body, .. } => all_bounded(body),
        _ => true,
    }
}

impl HierarchyFixpoint {
    pub fn compute(corpus: &Corpus, max_level: u32) -> Self {
        let n_items = corpus.len();
        let base: Vec<bool> = corpus.formulas.iter().map(all_bounded).collect();
        let mut sigma = vec![base.clone()];
        let mut pi = vec![base];
        for n in 1..=max_level as usize {
            let mut s: Vec<bool> = (0..n_items).map(|i| sigma[n - 1][i] || pi[n - 1][i]).collect();
            let mut p = s.clone();
            if n == 1 {
                for (i, shape) in corpus.shapes.iter().enumerate() {
                    if *shape == Shape::ProvAtom {
                        s[i] = true;
                    }
                }
            }
            loop {
                let mut changed = false;
                for i in 0..n_items {
                    let (ns, np) = match corpus.shapes[i] {
                        Shape::And(a, b) | Shape::Or(a, b) => (s[a] && s[b], p[a] && p[b]),
                        Shape::Exists(a) => (s[a], false),
                        Shape::Forall(a) => (false, p[a]),
                        Shape::Not(a) => (p[a], s[a]),
                        Shape::Imp(a, b) => (p[a] && s[b], s[a] && p[b]),
                        Shape::Atom | Shape::ProvAtom | Shape::Bounded(_) => (false, false),
                    };
                    if ns && !s[i] {
                        s[i] = true;
                        changed = true;
                    }
                    if np && !p[i] {
                        p[i] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            sigma.push(s);
            pi.push(p);
        }
        HierarchyFixpoint { max_level, sigma, pi }
    }

    pub fn member(&self, index: usize, class: HierarchyClass) -> bool {
        let n = class.level as usize;
        if class.is_sigma() {
            self.sigma[n][index]
        } else {
            self.pi[n][index]
        }
    }
}

/// Mismatches between `in_class` and the fixpoint, as `(formula, class)`.
pub fn hierarchy_mismatches(corpus: &Corpus, fix: &HierarchyFixpoint) -> Vec<(Formula, HierarchyClass)> {
    let mut out = Vec::new();
    for (i, phi) in corpus.formulas.iter().enumerate() {
        for n in 0..=fix.max_level {
            for c in [HierarchyClass::sigma(n), HierarchyClass::pi(n)] {
                if crate::hierarchy::in_class(phi, c) != fix.member(i, c) {
                    out.push((phi.clone(), c));
                }
            }
        }
    }
    out
}

/// First stage `m <= max_stage` at which `0=1` follows by truth tables from `P_m`.
pub fn first_bell_scan(theory: &ToyTheory, max_stage: u64) -> Option<u64> {
    let mut stream = ProofStream::new(theory.clone());
    (0..=max_stage).find(|&m| truth_table_tc(&stream.theorems_upto(m), &Formula::falsum()))
}

/// Least `x <= bound` with `delta(x)`, by linear scan; `sigma` must be `Ev.delta`.
pub fn least_witness_scan(sigma: &Formula, bound: u64) -> Option<u64> {
    let Formula::Exists(v, delta) = sigma else { panic!("expected an existential, got {sigma}") };
    (0..=bound).find(|&x| {
        let env: BTreeMap<Var, BigUint> = [(*v, BigUint::from(x))].into_iter().collect();
        eval_delta0(delta, &env).expect("bounded matrix")
    })
}

fn bound_all(phi: &Formula, bound: u64) -> Formula {
    let rec = |f: &Formula| bound_all(f, bound);
    match phi {
        Formula::Exists(v, a) => Formula::bounded(BoundKind::ExistsLe, *v, numeral(bound), rec(a)),
        Formula::Forall(v, a) => Formula::bounded(BoundKind::ForallLe, *v, numeral(bound), rec(a)),
        Formula::Not(a) => Formula::negate(rec(a)),
        Formula::And(a, b) => Formula::and(rec(a), rec(b)),
        Formula::Or(a, b) => Formula::or(rec(a), rec(b)),
        Formula::Imp(a, b) => Formula::implies(rec(a), rec(b)),
        Formula::Bounded { kind, var, bound: t, body } => Formula::bounded(*kind, *var, t.clone(), rec(body)),
        other => other.clone(),
    }
}

/// Truth of a machine-free sentence with every quantifier cut at `bound`.
pub fn bounded_truth(phi: &Formula, bound: u64) -> bool {
    eval_delta0(&bound_all(phi, bound), &BTreeMap::new()).expect("machine-free sentence")
}

/// Truth under every domain cut `0..=b` for `b <= bound`: the desk check
/// for validity of a quantifier-only sentence.
pub fn bounded_validity(phi: &Formula, bound: u64) -> bool {
    (0..=bound).all(|b| bounded_truth(phi, b))
}

/// Decomposes `phi` under the propositional connectives into maximal
/// non-propositional leaves and checks each leaf against `leaf_ok`.
pub fn boolean_leaves_all(phi: &Formula, leaf_ok: &dyn Fn(&Formula) -> bool) -> bool {
    let mut leaves = Vec::new();
    collect_atoms(phi, &mut leaves);
    leaves.iter().all(leaf_ok)
}
