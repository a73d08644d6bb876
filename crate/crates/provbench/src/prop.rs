//! Propositional skeletons and tautological consequence.
//!
//! The skeleton replaces every propositionally atomic subformula (atomic,
//! quantified, machine atom or named sentence) by a propositional variable
//! keyed by its exact syntax tree. Satisfiability is decided by DPLL over a
//! Tseitin encoding, branching only on skeleton atoms in ascending code
//! order; gate variables are then fixed by unit propagation.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use thiserror::Error;

use crate::formula::Formula;
use crate::godel::godel;

pub const DEFAULT_ATOM_CAP: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PropFormula {
    Atom(Box<Formula>),
    Not(Box<PropFormula>),
    And(Box<PropFormula>, Box<PropFormula>),
    Or(Box<PropFormula>, Box<PropFormula>),
    Imp(Box<PropFormula>, Box<PropFormula>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PropError {
    #[error("{count} propositional atoms exceed the cap of {cap}")]
    TooManyAtoms { count: usize, cap: usize },
}

impl PropFormula {
    pub fn not(a: PropFormula) -> Self {
        PropFormula::Not(Box::new(a))
    }

    pub fn and(a: PropFormula, b: PropFormula) -> Self {
        PropFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: PropFormula, b: PropFormula) -> Self {
        PropFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn imp(a: PropFormula, b: PropFormula) -> Self {
        PropFormula::Imp(Box::new(a), Box::new(b))
    }

    /// Evaluates under an assignment of the atoms.
    pub fn eval(&self, assignment: &dyn Fn(&Formula) -> bool) -> bool {
        match self {
            PropFormula::Atom(a) => assignment(a),
            PropFormula::Not(a) => !a.eval(assignment),
            PropFormula::And(a, b) => a.eval(assignment) && b.eval(assignment),
            PropFormula::Or(a, b) => a.eval(assignment) || b.eval(assignment),
            PropFormula::Imp(a, b) => !a.eval(assignment) || b.eval(assignment),
        }
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Formula>) {
        match self {
            PropFormula::Atom(a) => out.push(a),
            PropFormula::Not(a) => a.collect_atoms(out),
            PropFormula::And(a, b) | PropFormula::Or(a, b) | PropFormula::Imp(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Distinct atoms in ascending code order.
    pub fn atoms(&self) -> Vec<Formula> {
        atoms_of(std::slice::from_ref(self))
    }
}

/// Distinct atoms of several skeletons, in ascending code order.
pub fn atoms_of(items: &[PropFormula]) -> Vec<Formula> {
    let mut raw = Vec::new();
    for p in items {
        p.collect_atoms(&mut raw);
    }
    let by_code: BTreeMap<BigUint, &Formula> = raw.into_iter().map(|a| (godel(a), a)).collect();
    by_code.into_values().cloned().collect()
}

/// The injection into propositional formulas.
pub fn skeleton(phi: &Formula) -> PropFormula {
    match phi {
        Formula::Not(a) => PropFormula::not(skeleton(a)),
        Formula::And(a, b) => PropFormula::and(skeleton(a), skeleton(b)),
        Formula::Or(a, b) => PropFormula::or(skeleton(a), skeleton(b)),
        Formula::Imp(a, b) => PropFormula::imp(skeleton(a), skeleton(b)),
        atomic => PropFormula::Atom(Box::new(atomic.clone())),
    }
}

/// Clause database for one satisfiability query.
struct Cnf {
    atom_index: BTreeMap<Formula, usize>,
    num_atoms: usize,
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
}

impl Cnf {
    fn new(atoms: &[Formula]) -> Self {
        let atom_index: BTreeMap<Formula, usize> = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        Cnf { num_atoms: atoms.len(), num_vars: atoms.len(), atom_index, clauses: Vec::new() }
    }

    fn fresh(&mut self) -> i32 {
        self.num_vars += 1;
        self.num_vars as i32
    }

    /// Returns a literal equivalent to `p`, adding defining clauses.
    fn encode(&mut self, p: &PropFormula) -> i32 {
        match p {
            PropFormula::Atom(a) => self.atom_index[a.as_ref()] as i32 + 1,
            PropFormula::Not(a) => -self.encode(a),
            PropFormula::And(a, b) => {
                let (x, y) = (self.encode(a), self.encode(b));
                let g = self.fresh();
                self.clauses.extend([vec![-g, x], vec![-g, y], vec![g, -x, -y]]);
                g
            }
            PropFormula::Or(a, b) => {
                let (x, y) = (self.encode(a), self.encode(b));
                let g = self.fresh();
                self.clauses.extend([vec![-g, x, y], vec![g, -x], vec![g, -y]]);
                g
            }
            PropFormula::Imp(a, b) => {
                let (x, y) = (self.encode(a), self.encode(b));
                let g = self.fresh();
                self.clauses.extend([vec![-g, -x, y], vec![g, x], vec![g, -y]]);
                g
            }
        }
    }

    fn solve(&self) -> bool {
        let mut assignment = vec![None; self.num_vars + 1];
        self.dpll(&mut assignment)
    }

    fn value(assignment: &[Option<bool>], lit: i32) -> Option<bool> {
        assignment[lit.unsigned_abs() as usize].map(|v| v == (lit > 0))
    }

    /// Unit propagation; returns the literals it set, or `None` on conflict.
    fn propagate(&self, assignment: &mut [Option<bool>]) -> Option<Vec<usize>> {
        let mut trail = Vec::new();
        loop {
            let mut changed = false;
            for clause in &self.clauses {
                let mut unassigned = None;
                let mut open = 0;
                let mut satisfied = false;
                for &lit in clause {
                    match Self::value(assignment, lit) {
                        Some(true) => {
                            satisfied = true;
                            break;
                        }
                        Some(false) => {}
                        None => {
                            open += 1;
                            unassigned = Some(lit);
                        }
                    }
                }
                if satisfied {
                    continue;
                }
                match (open, unassigned) {
                    (0, _) => {
                        for v in trail {
                            assignment[v] = None;
                        }
                        return None;
                    }
                    (1, Some(lit)) => {
                        let v = lit.unsigned_abs() as usize;
                        assignment[v] = Some(lit > 0);
                        trail.push(v);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return Some(trail);
            }
        }
    }

    fn dpll(&self, assignment: &mut [Option<bool>]) -> bool {
        let Some(trail) = self.propagate(assignment) else { return false };
        // Skeleton atoms first, in order; gate variables only if something is left open.
        let next = (1..=self.num_atoms)
            .chain(self.num_atoms + 1..=self.num_vars)
            .find(|&v| assignment[v].is_none());
        let result = match next {
            None => true,
            Some(v) => [false, true].into_iter().any(|b| {
                assignment[v] = Some(b);
                let ok = self.dpll(assignment);
                assignment[v] = None;
                ok
            }),
        };
        if !result {
            for v in trail {
                assignment[v] = None;
            }
        }
        result
    }
}

fn check_cap(count: usize, cap: usize) -> Result<(), PropError> {
    if count > cap {
        Err(PropError::TooManyAtoms { count, cap })
    } else {
        Ok(())
    }
}

/// Joint satisfiability of skeletons, with an explicit atom cap.
pub fn satisfiable_with_cap(items: &[PropFormula], cap: usize) -> Result<bool, PropError> {
    let atoms = atoms_of(items);
    check_cap(atoms.len(), cap)?;
    let mut cnf = Cnf::new(&atoms);
    for p in items {
        let lit = cnf.encode(p);
        cnf.clauses.push(vec![lit]);
    }
    Ok(cnf.solve())
}

pub fn tautology_with_cap(p: &PropFormula, cap: usize) -> Result<bool, PropError> {
    Ok(!satisfiable_with_cap(&[PropFormula::not(p.clone())], cap)?)
}

pub fn tautology(p: &PropFormula) -> Result<bool, PropError> {
    tautology_with_cap(p, DEFAULT_ATOM_CAP)
}

/// Whether `phi` is a tautological consequence of `premises`.
pub fn tc_with_cap(premises: &[Formula], phi: &Formula, cap: usize) -> Result<bool, PropError> {
    let mut items: Vec<PropFormula> = premises.iter().map(skeleton).collect();
    items.push(PropFormula::not(skeleton(phi)));
    Ok(!satisfiable_with_cap(&items, cap)?)
}

pub fn tc(premises: &[Formula], phi: &Formula) -> Result<bool, PropError> {
    tc_with_cap(premises, phi, DEFAULT_ATOM_CAP)
}

pub fn prop_satisfiable_with_cap(set: &[Formula], cap: usize) -> Result<bool, PropError> {
    let items: Vec<PropFormula> = set.iter().map(skeleton).collect();
    satisfiable_with_cap(&items, cap)
}

pub fn prop_satisfiable(set: &[Formula]) -> Result<bool, PropError> {
    prop_satisfiable_with_cap(set, DEFAULT_ATOM_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    #[test]
    fn excluded_middle_and_single_atom() {
        assert!(tautology(&skeleton(&f("(0=1|!0=1)"))).unwrap());
        assert!(!tautology(&skeleton(&f("0=1"))).unwrap());
    }

    #[test]
    fn quantified_formulas_are_opaque() {
        assert_eq!(skeleton(&f("Ax(x=x)")), PropFormula::Atom(Box::new(f("Ax(x=x)"))));
        assert!(!tc(&[f("Ax(x=x)")], &f("0=0")).unwrap());
    }

    #[test]
    fn modus_ponens() {
        assert!(tc(&[f("Ex(x=1)"), f("(Ex(x=1)->1<=2)")], &f("1<=2")).unwrap());
        assert!(!tc(&[], &f("0=1")).unwrap());
    }

    #[test]
    fn satisfiability() {
        assert!(prop_satisfiable(&[f("0=0")]).unwrap());
        assert!(!prop_satisfiable(&[f("0=0"), f("!0=0")]).unwrap());
        assert!(prop_satisfiable(&[]).unwrap());
    }

    #[test]
    fn atoms_are_sorted_by_code() {
        let atoms = skeleton(&f("((1=1&0=0)|1=1)")).atoms();
        assert_eq!(atoms.len(), 2);
        assert!(godel(&atoms[0]) < godel(&atoms[1]));
    }

    #[test]
    fn cap_is_enforced() {
        let big: Vec<Formula> = (0..5u32).map(|i| Formula::eq(crate::numeral(i), crate::numeral(i))).collect();
        assert_eq!(prop_satisfiable_with_cap(&big, 4), Err(PropError::TooManyAtoms { count: 5, cap: 4 }));
    }
}
