//! Terms and formulas of first-order arithmetic over `{0, S, +, *, =, <=}`,
//! extended with machine atoms and named (self-referential) sentences.
//!
//! Numerals are stored compactly as [`Term::Num`]; the smart constructors keep
//! terms canonical so that `S(S(0))` and `numeral(2)` are the same value.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::hierarchy::HierarchyClass;

/// Variable index; `x0, x1, ...` in concrete syntax.
pub type Var = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// The numeral `S(...S(0)...)` with the given number of successors.
    Num(BigUint),
    Var(Var),
    /// Successor of a term that is not itself a numeral.
    Succ(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
}

impl Term {
    pub fn zero() -> Term {
        Term::Num(BigUint::zero())
    }

    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    pub fn succ(t: Term) -> Term {
        match t {
            Term::Num(n) => Term::Num(n + 1u32),
            other => Term::Succ(Box::new(other)),
        }
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }

    /// The value of a numeral term, if this term is one.
    pub fn numeral_value(&self) -> Option<&BigUint> {
        match self {
            Term::Num(n) => Some(n),
            _ => None,
        }
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Num(_) => {}
            Term::Var(v) => {
                out.insert(*v);
            }
            Term::Succ(t) => t.free_vars_into(out),
            Term::Add(a, b) | Term::Mul(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    pub fn substitute(&self, v: Var, t: &Term) -> Term {
        match self {
            Term::Num(_) => self.clone(),
            Term::Var(w) if *w == v => t.clone(),
            Term::Var(_) => self.clone(),
            Term::Succ(a) => Term::succ(a.substitute(v, t)),
            Term::Add(a, b) => Term::add(a.substitute(v, t), b.substitute(v, t)),
            Term::Mul(a, b) => Term::mul(a.substitute(v, t), b.substitute(v, t)),
        }
    }

    /// Node count of the term with numerals unfolded into successor chains
    /// (saturating for very large numerals).
    pub fn size(&self) -> usize {
        match self {
            Term::Num(n) => n.to_usize().map_or(usize::MAX, |k| k.saturating_add(1)),
            Term::Var(_) => 1,
            Term::Succ(t) => t.size().saturating_add(1),
            Term::Add(a, b) | Term::Mul(a, b) => 1usize.saturating_add(a.size()).saturating_add(b.size()),
        }
    }
}

/// The numeral for `n`.
pub fn numeral<N: Into<BigUint>>(n: N) -> Term {
    Term::Num(n.into())
}

/// Identifies a staged machine whose outputs are referenced by `PR[M](t)` and
/// `OUT[M](y, t)` atoms. `T` is the canonical proof enumerator of the theory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MachineId {
    E,
    F(HierarchyClass),
    G,
    H,
    T,
}

impl MachineId {
    pub fn is_valid(&self) -> bool {
        match self {
            MachineId::F(c) => c.level >= 1,
            _ => true,
        }
    }
}

impl fmt::Display for MachineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MachineId::E => f.write_str("E"),
            MachineId::F(c) => write!(f, "F:{c}"),
            MachineId::G => f.write_str("G"),
            MachineId::H => f.write_str("H"),
            MachineId::T => f.write_str("T"),
        }
    }
}

impl std::str::FromStr for MachineId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "E" => Ok(MachineId::E),
            "G" => Ok(MachineId::G),
            "H" => Ok(MachineId::H),
            "T" => Ok(MachineId::T),
            _ => {
                let rest = s.strip_prefix("F:").ok_or_else(|| format!("unknown machine id `{s}`"))?;
                let class: HierarchyClass = rest.parse().map_err(|_| format!("unknown machine id `{s}`"))?;
                if class.level == 0 {
                    return Err(format!("machine F needs a class of level >= 1, got `{s}`"));
                }
                Ok(MachineId::F(class))
            }
        }
    }
}

/// Name of a registered sentence: `[A-Za-z][A-Za-z0-9_]*`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(String);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid sentence name `{0}`")]
pub struct InvalidName(pub String);

impl Name {
    pub fn new(s: &str) -> Result<Name, InvalidName> {
        let mut chars = s.chars();
        let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if ok {
            Ok(Name(s.to_string()))
        } else {
            Err(InvalidName(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Bounded quantifier flavours; all are primitive nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    /// `A x<=t.`
    ForallLe,
    /// `E x<=t.`
    ExistsLe,
    /// `A x<t.`
    ForallLt,
    /// `E x<t.`
    ExistsLt,
}

impl BoundKind {
    pub fn is_universal(self) -> bool {
        matches!(self, BoundKind::ForallLe | BoundKind::ForallLt)
    }

    pub fn is_strict(self) -> bool {
        matches!(self, BoundKind::ForallLt | BoundKind::ExistsLt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Eq(Term, Term),
    Le(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Forall(Var, Box<Formula>),
    Exists(Var, Box<Formula>),
    Bounded {
        kind: BoundKind,
        var: Var,
        bound: Term,
        body: Box<Formula>,
    },
    /// `PR[M](t)`: `t` is the code of some output of machine `M`.
    Pr(MachineId, Term),
    /// `OUT[M](y, t)`: the `y`-th output of machine `M` has code `t`.
    Out(MachineId, Term, Term),
    Named(Name),
}

impl Formula {
    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn le(a: Term, b: Term) -> Formula {
        Formula::Le(a, b)
    }

    pub fn negate(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(Formula::implies(a.clone(), b.clone()), Formula::implies(b, a))
    }

    pub fn forall(v: Var, body: Formula) -> Formula {
        Formula::Forall(v, Box::new(body))
    }

    pub fn exists(v: Var, body: Formula) -> Formula {
        Formula::Exists(v, Box::new(body))
    }

    pub fn bounded(kind: BoundKind, var: Var, bound: Term, body: Formula) -> Formula {
        Formula::Bounded { kind, var, bound, body: Box::new(body) }
    }

    pub fn pr(m: MachineId, t: Term) -> Formula {
        Formula::Pr(m, t)
    }

    pub fn out(m: MachineId, index: Term, value: Term) -> Formula {
        Formula::Out(m, index, value)
    }

    pub fn named(name: &Name) -> Formula {
        Formula::Named(name.clone())
    }

    /// `0=0`, used as the empty conjunction where one is needed.
    pub fn verum() -> Formula {
        Formula::Eq(Term::zero(), Term::zero())
    }

    /// `0=1`.
    pub fn falsum() -> Formula {
        Formula::Eq(Term::zero(), numeral(1u32))
    }

    /// `n` negation signs in front of `a`.
    pub fn negations(a: Formula, n: usize) -> Formula {
        (0..n).fold(a, |acc, _| Formula::negate(acc))
    }

    /// Right-nested conjunction `a0 & (a1 & (...))`; `None` for an empty list.
    pub fn conj(items: Vec<Formula>) -> Option<Formula> {
        Self::fold_right(items, Formula::and)
    }

    /// Right-nested disjunction `a0 | (a1 | (...))`; `None` for an empty list.
    pub fn disj(items: Vec<Formula>) -> Option<Formula> {
        Self::fold_right(items, Formula::or)
    }

    fn fold_right(items: Vec<Formula>, op: fn(Formula, Formula) -> Formula) -> Option<Formula> {
        let mut iter = items.into_iter().rev();
        let last = iter.next()?;
        Some(iter.fold(last, |acc, item| op(item, acc)))
    }

    /// Splits a right-nested conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        let mut cur = self;
        while let Formula::And(a, b) = cur {
            out.push(a.as_ref());
            cur = b;
        }
        out.push(cur);
        out
    }

    /// Strips leading negations, returning the count and the remainder.
    pub fn strip_negations(&self) -> (usize, &Formula) {
        let mut n = 0;
        let mut cur = self;
        while let Formula::Not(inner) = cur {
            n += 1;
            cur = inner;
        }
        (n, cur)
    }

    /// True for formulas that the propositional skeleton treats as atoms:
    /// atomic formulas, quantified formulas, machine atoms and named sentences.
    pub fn is_prop_atomic(&self) -> bool {
        !matches!(self, Formula::Not(_) | Formula::And(..) | Formula::Or(..) | Formula::Imp(..))
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Eq(a, b) | Formula::Le(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Not(a) => a.free_vars_into(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let mut inner = BTreeSet::new();
                body.free_vars_into(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
            Formula::Bounded { var, bound, body, .. } => {
                bound.free_vars_into(out);
                let mut inner = BTreeSet::new();
                body.free_vars_into(&mut inner);
                inner.remove(var);
                out.extend(inner);
            }
            Formula::Pr(_, t) => t.free_vars_into(out),
            Formula::Out(_, a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Named(_) => {}
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// AST node count, counting term nodes and unfolding numerals.
    pub fn size(&self) -> usize {
        let s = |a: &Formula| a.size();
        match self {
            Formula::Eq(a, b) | Formula::Le(a, b) => 1usize.saturating_add(a.size()).saturating_add(b.size()),
            Formula::Not(a) => s(a).saturating_add(1),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => 1usize.saturating_add(s(a)).saturating_add(s(b)),
            Formula::Forall(_, a) | Formula::Exists(_, a) => s(a).saturating_add(1),
            Formula::Bounded { bound, body, .. } => 1usize.saturating_add(bound.size()).saturating_add(s(body)),
            Formula::Pr(_, t) => t.size().saturating_add(1),
            Formula::Out(_, a, b) => 1usize.saturating_add(a.size()).saturating_add(b.size()),
            Formula::Named(_) => 1,
        }
    }

    /// Capture-avoiding substitution of `t` for the free occurrences of `v`.
    pub fn substitute(&self, v: Var, t: &Term) -> Formula {
        let tfv = t.free_vars();
        self.subst_inner(v, t, &tfv)
    }

    fn subst_inner(&self, v: Var, t: &Term, tfv: &BTreeSet<Var>) -> Formula {
        match self {
            Formula::Eq(a, b) => Formula::Eq(a.substitute(v, t), b.substitute(v, t)),
            Formula::Le(a, b) => Formula::Le(a.substitute(v, t), b.substitute(v, t)),
            Formula::Not(a) => Formula::negate(a.subst_inner(v, t, tfv)),
            Formula::And(a, b) => Formula::and(a.subst_inner(v, t, tfv), b.subst_inner(v, t, tfv)),
            Formula::Or(a, b) => Formula::or(a.subst_inner(v, t, tfv), b.subst_inner(v, t, tfv)),
            Formula::Imp(a, b) => Formula::implies(a.subst_inner(v, t, tfv), b.subst_inner(v, t, tfv)),
            Formula::Forall(w, body) => {
                let (w, body) = Self::subst_binder(*w, body, v, t, tfv);
                Formula::Forall(w, Box::new(body))
            }
            Formula::Exists(w, body) => {
                let (w, body) = Self::subst_binder(*w, body, v, t, tfv);
                Formula::Exists(w, Box::new(body))
            }
            Formula::Bounded { kind, var, bound, body } => {
                let bound = bound.substitute(v, t);
                let (var, body) = Self::subst_binder(*var, body, v, t, tfv);
                Formula::Bounded { kind: *kind, var, bound, body: Box::new(body) }
            }
            Formula::Pr(m, a) => Formula::Pr(*m, a.substitute(v, t)),
            Formula::Out(m, a, b) => Formula::Out(*m, a.substitute(v, t), b.substitute(v, t)),
            Formula::Named(_) => self.clone(),
        }
    }

    fn subst_binder(w: Var, body: &Formula, v: Var, t: &Term, tfv: &BTreeSet<Var>) -> (Var, Formula) {
        if w == v {
            return (w, body.clone());
        }
        let body_fv = body.free_vars();
        if !body_fv.contains(&v) {
            return (w, body.clone());
        }
        if tfv.contains(&w) {
            let mut avoid = body_fv;
            avoid.extend(tfv.iter().copied());
            avoid.insert(v);
            let fresh = fresh_var(&avoid);
            let renamed = body.substitute(w, &Term::Var(fresh));
            (fresh, renamed.subst_inner(v, t, tfv))
        } else {
            (w, body.subst_inner(v, t, tfv))
        }
    }

    /// Structural equality up to renaming of bound variables.
    pub fn alpha_eq(&self, other: &Formula) -> bool {
        alpha::eq(self, other)
    }

    /// Visits every subformula (including `self`) in pre-order.
    pub fn for_each_subformula<'a>(&'a self, f: &mut dyn FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::Not(a) | Formula::Forall(_, a) | Formula::Exists(_, a) => a.for_each_subformula(f),
            Formula::Bounded { body, .. } => body.for_each_subformula(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.for_each_subformula(f);
                b.for_each_subformula(f);
            }
            _ => {}
        }
    }

    /// Named sentences occurring in this formula outside of quotations.
    pub fn named_refs(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.for_each_subformula(&mut |g| {
            if let Formula::Named(n) = g {
                out.insert(n.clone());
            }
        });
        out
    }
}

/// Smallest variable not in `avoid`.
pub fn fresh_var(avoid: &BTreeSet<Var>) -> Var {
    (0..).find(|v| !avoid.contains(v)).expect("variable space exhausted")
}

mod alpha {
    use super::{Formula, Term, Var};

    /// Compares two formulas modulo bound-variable names by tracking binder depth.
    pub fn eq(a: &Formula, b: &Formula) -> bool {
        go(a, b, &mut Vec::new(), &mut Vec::new())
    }

    fn lookup(stack: &[Var], v: Var) -> Option<usize> {
        stack.iter().rposition(|w| *w == v)
    }

    fn term_eq(a: &Term, b: &Term, sa: &[Var], sb: &[Var]) -> bool {
        match (a, b) {
            (Term::Num(x), Term::Num(y)) => x == y,
            (Term::Var(x), Term::Var(y)) => match (lookup(sa, *x), lookup(sb, *y)) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            },
            (Term::Succ(x), Term::Succ(y)) => term_eq(x, y, sa, sb),
            (Term::Add(x1, x2), Term::Add(y1, y2)) | (Term::Mul(x1, x2), Term::Mul(y1, y2)) => {
                term_eq(x1, y1, sa, sb) && term_eq(x2, y2, sa, sb)
            }
            _ => false,
        }
    }

    fn go(a: &Formula, b: &Formula, sa: &mut Vec<Var>, sb: &mut Vec<Var>) -> bool {
        use Formula::*;
        match (a, b) {
            (Eq(a1, a2), Eq(b1, b2)) | (Le(a1, a2), Le(b1, b2)) => term_eq(a1, b1, sa, sb) && term_eq(a2, b2, sa, sb),
            (Not(x), Not(y)) => go(x, y, sa, sb),
            (And(x1, x2), And(y1, y2)) | (Or(x1, x2), Or(y1, y2)) | (Imp(x1, x2), Imp(y1, y2)) => {
                go(x1, y1, sa, sb) && go(x2, y2, sa, sb)
            }
            (Forall(v, x), Forall(w, y)) | (Exists(v, x), Exists(w, y)) => binder(*v, x, *w, y, sa, sb),
            (
                Bounded { kind: k1, var: v, bound: t1, body: x },
                Bounded { kind: k2, var: w, bound: t2, body: y },
            ) => k1 == k2 && term_eq(t1, t2, sa, sb) && binder(*v, x, *w, y, sa, sb),
            (Pr(m1, t1), Pr(m2, t2)) => m1 == m2 && term_eq(t1, t2, sa, sb),
            (Out(m1, a1, a2), Out(m2, b1, b2)) => m1 == m2 && term_eq(a1, b1, sa, sb) && term_eq(a2, b2, sa, sb),
            (Named(x), Named(y)) => x == y,
            _ => false,
        }
    }

    fn binder(v: Var, x: &Formula, w: Var, y: &Formula, sa: &mut Vec<Var>, sb: &mut Vec<Var>) -> bool {
        sa.push(v);
        sb.push(w);
        let r = go(x, y, sa, sb);
        sa.pop();
        sb.pop();
        r
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WitnessComparisonError {
    #[error("witness comparison needs an existential formula, got `{0}`")]
    NotExistential(String),
}

/// Reads `phi` as `Ex. phi0(x)`: an existential, a machine atom `PR[M](t)`
/// (read as `Ey OUT[M](y,t)`), or a disjunction of these (merged into one
/// existential over a shared variable). Returns the matrix with its
/// distinguished variable replaced by `Var(target)`.
fn existential_matrix(phi: &Formula, target: Var) -> Option<Formula> {
    match phi {
        Formula::Exists(x, body) => Some(body.substitute(*x, &Term::Var(target))),
        Formula::Pr(m, t) => Some(Formula::Out(*m, Term::Var(target), t.clone())),
        Formula::Or(a, b) => {
            let ma = existential_matrix(a, target)?;
            let mb = existential_matrix(b, target)?;
            Some(Formula::or(ma, mb))
        }
        _ => None,
    }
}

fn witness_comparison(phi: &Formula, psi: &Formula, kind: BoundKind) -> Result<Formula, WitnessComparisonError> {
    let mut avoid = phi.free_vars();
    avoid.extend(psi.free_vars());
    let x = fresh_var(&avoid);
    avoid.insert(x);
    let y = fresh_var(&avoid);
    let left = existential_matrix(phi, x).ok_or_else(|| WitnessComparisonError::NotExistential(phi.to_string()))?;
    let right = existential_matrix(psi, y).ok_or_else(|| WitnessComparisonError::NotExistential(psi.to_string()))?;
    Ok(Formula::exists(
        x,
        Formula::and(left, Formula::bounded(kind, y, Term::Var(x), Formula::negate(right))),
    ))
}

/// `phi < psi`: `Ex(phi0(x) & A y<=x. !psi0(y))`.
pub fn wc_strict(phi: &Formula, psi: &Formula) -> Result<Formula, WitnessComparisonError> {
    witness_comparison(phi, psi, BoundKind::ForallLe)
}

/// `phi <= psi`: `Ex(phi0(x) & A y<x. !psi0(y))`.
pub fn wc_weak(phi: &Formula, psi: &Formula) -> Result<Formula, WitnessComparisonError> {
    witness_comparison(phi, psi, BoundKind::ForallLt)
}

/// Recognises the output shape of [`wc_strict`] / [`wc_weak`], returning
/// `(x, left matrix, y, right matrix, strict)`.
pub fn match_witness_comparison(phi: &Formula) -> Option<(Var, &Formula, Var, &Formula, bool)> {
    let Formula::Exists(x, body) = phi else { return None };
    let Formula::And(left, rest) = body.as_ref() else { return None };
    let Formula::Bounded { kind, var: y, bound: Term::Var(bx), body: neg } = rest.as_ref() else {
        return None;
    };
    if bx != x || !kind.is_universal() || y == x {
        return None;
    }
    let Formula::Not(right) = neg.as_ref() else { return None };
    Some((*x, left, *y, right, !kind.is_strict()))
}

/// `PR[M](#phi)`.
pub fn provability(m: MachineId, phi: &Formula) -> Formula {
    Formula::Pr(m, crate::godel::quote(phi))
}

/// The Rosser predicate of machine `M` applied to `phi`:
/// `PR[M](#phi) < PR[M](#!phi)`.
pub fn rosser_provability(m: MachineId, phi: &Formula) -> Formula {
    let yes = provability(m, phi);
    let no = provability(m, &Formula::negate(phi.clone()));
    wc_strict(&yes, &no).expect("machine atoms are existential")
}

/// Reflection instance `Pr^R_M(#phi) -> phi` (or the plain predicate when `rosser` is false).
pub fn reflection(m: MachineId, phi: &Formula, rosser: bool) -> Formula {
    let p = if rosser { rosser_provability(m, phi) } else { provability(m, phi) };
    Formula::implies(p, phi.clone())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print_term(self))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: Var) -> Term {
        Term::Var(i)
    }

    #[test]
    fn numerals_are_canonical() {
        assert_eq!(numeral(0u32), Term::zero());
        assert_eq!(numeral(2u32), Term::succ(Term::succ(Term::zero())));
        assert_eq!(Term::succ(x(0)), Term::Succ(Box::new(x(0))));
        assert_eq!(numeral(1u32).numeral_value(), Some(&BigUint::from(1u32)));
    }

    #[test]
    fn substitution_replaces_free_occurrences_only() {
        let phi = Formula::eq(x(0), x(0));
        assert_eq!(phi.substitute(0, &numeral(1u32)), Formula::eq(numeral(1u32), numeral(1u32)));
        let all = Formula::forall(0, Formula::eq(x(0), x(1)));
        assert_eq!(all.substitute(1, &Term::zero()), Formula::forall(0, Formula::eq(x(0), Term::zero())));
        assert_eq!(all.substitute(0, &Term::zero()), all);
    }

    #[test]
    fn substitution_renames_capturing_binder() {
        let phi = Formula::exists(0, Formula::eq(x(0), x(1)));
        let out = phi.substitute(1, &Term::succ(x(0)));
        let Formula::Exists(v, body) = &out else { panic!() };
        assert_ne!(*v, 0);
        assert_eq!(**body, Formula::eq(x(*v), Term::succ(x(0))));
        assert!(out.alpha_eq(&Formula::exists(7, Formula::eq(x(7), Term::succ(x(0))))));
    }

    #[test]
    fn substitution_into_successor_collapses_numerals() {
        let t = Term::succ(x(0));
        assert_eq!(t.substitute(0, &numeral(4u32)), numeral(5u32));
    }

    #[test]
    fn prop_atomicity() {
        assert!(Formula::verum().is_prop_atomic());
        assert!(Formula::forall(0, Formula::eq(x(0), x(0))).is_prop_atomic());
        assert!(!Formula::and(Formula::verum(), Formula::verum()).is_prop_atomic());
        assert!(!Formula::negate(Formula::verum()).is_prop_atomic());
    }

    #[test]
    fn witness_comparison_shapes() {
        let d1 = Formula::exists(0, Formula::eq(x(0), numeral(1u32)));
        let d2 = Formula::exists(0, Formula::eq(x(0), numeral(2u32)));
        let strict = wc_strict(&d1, &d2).unwrap();
        let expected = Formula::exists(
            0,
            Formula::and(
                Formula::eq(x(0), numeral(1u32)),
                Formula::bounded(BoundKind::ForallLe, 1, x(0), Formula::negate(Formula::eq(x(1), numeral(2u32)))),
            ),
        );
        assert_eq!(strict, expected);
        let weak = wc_weak(&d1, &d2).unwrap();
        let (_, _, _, _, is_strict) = match_witness_comparison(&weak).unwrap();
        assert!(!is_strict);
        assert!(wc_strict(&Formula::verum(), &d1).is_err());
    }

    #[test]
    fn disjunctions_of_existentials_merge() {
        let a = Formula::exists(0, Formula::eq(x(0), numeral(1u32)));
        let b = Formula::exists(3, Formula::eq(x(3), numeral(2u32)));
        let c = Formula::exists(0, Formula::eq(x(0), Term::zero()));
        let merged = wc_strict(&Formula::or(a, b), &c).unwrap();
        let (xv, left, _, _, _) = match_witness_comparison(&merged).unwrap();
        assert_eq!(*left, Formula::or(Formula::eq(x(xv), numeral(1u32)), Formula::eq(x(xv), numeral(2u32))));
    }

    #[test]
    fn conjunction_helpers_round_trip() {
        let items = vec![Formula::verum(), Formula::falsum(), Formula::verum()];
        let c = Formula::conj(items.clone()).unwrap();
        let back: Vec<Formula> = c.conjuncts().into_iter().cloned().collect();
        assert_eq!(back, items);
        assert!(Formula::conj(vec![]).is_none());
    }
}
