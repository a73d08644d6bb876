//! Reflection instances and justified derivation chains.
//!
//! [`conserve_chain`] turns a certified hypothesis
//! `/\_{i<k} (P(#phi_i) -> phi_i) -> gamma` into a chain deriving `gamma`
//! from reflection instances for one class, by induction over subsets `X` of
//! `{0..k-1}` in order of cardinality. [`check_chain`] replays any chain,
//! including the hand-built [`scripted_scenario`] derivations.
//!
//! The provable-equivalence closure of a class is replaced by syntactic
//! membership of the literal disjunctions: a sufficient, checkable condition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::diagonal::{self, DiagonalError};
use crate::formula::{match_witness_comparison, BoundKind, provability, rosser_provability, wc_weak, Formula, MachineId, Name, Term};
use crate::godel::decode;
use crate::hierarchy::{alpha, in_bool_combo_sigma, in_class, HierarchyClass};
use crate::prop::{self, PropError};
use crate::semantics::{Evaluator, OutputList};
use crate::syntax::print;
use crate::theory::{unsound_theta, ProofStream, ToyTheory};

/// A provability predicate over a machine's outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Predicate {
    Plain(MachineId),
    Rosser(MachineId),
}

impl Predicate {
    pub fn machine(self) -> MachineId {
        match self {
            Predicate::Plain(m) | Predicate::Rosser(m) => m,
        }
    }

    pub fn apply(self, phi: &Formula) -> Formula {
        match self {
            Predicate::Plain(m) => provability(m, phi),
            Predicate::Rosser(m) => rosser_provability(m, phi),
        }
    }

    /// Recovers `phi` from `apply(phi)`.
    pub fn argument(self, atom: &Formula) -> Option<Formula> {
        let code = match (self, atom) {
            (Predicate::Plain(m), Formula::Pr(mm, Term::Num(c))) if *mm == m => c,
            (Predicate::Rosser(m), _) => {
                let (_, left, _, _, _) = match_witness_comparison(atom)?;
                match left {
                    Formula::Out(mm, _, Term::Num(c)) if *mm == m => c,
                    _ => return None,
                }
            }
            _ => return None,
        };
        let phi = decode(code).ok()?;
        (self.apply(&phi) == *atom).then_some(phi)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Plain(m) => write!(f, "Pr[{m}]"),
            Predicate::Rosser(m) => write!(f, "PrR[{m}]"),
        }
    }
}

/// The class a reflection schema is restricted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ClassGate {
    Level(HierarchyClass),
    /// Boolean combinations of `Sigma_n` formulas.
    BoolSigma(u32),
}

impl ClassGate {
    pub fn admits(self, phi: &Formula) -> bool {
        match self {
            ClassGate::Level(c) => in_class(phi, c),
            ClassGate::BoolSigma(n) => in_bool_combo_sigma(phi, n),
        }
    }
}

impl fmt::Display for ClassGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassGate::Level(c) => write!(f, "{c}"),
            ClassGate::BoolSigma(n) => write!(f, "B(Sigma{n})"),
        }
    }
}

impl FromStr for ClassGate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("B(Sigma").and_then(|r| r.strip_suffix(')')) {
            let n: u32 = rest.parse().map_err(|_| format!("bad class `{s}`"))?;
            return Ok(ClassGate::BoolSigma(n));
        }
        s.parse::<HierarchyClass>().map(ClassGate::Level).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReflectionInstance {
    pub predicate: Predicate,
    pub sentence: Formula,
    pub rendered: Formula,
}

impl ReflectionInstance {
    /// Whether the instance belongs to the schema restricted to `gate`.
    pub fn admissible(&self, gate: ClassGate) -> bool {
        self.sentence.is_sentence() && gate.admits(&self.sentence)
    }
}

/// `P(#phi) -> phi`.
pub fn reflection_instance(predicate: Predicate, phi: &Formula) -> ReflectionInstance {
    ReflectionInstance {
        predicate,
        sentence: phi.clone(),
        rendered: Formula::implies(predicate.apply(phi), phi.clone()),
    }
}

/// How a chain line is justified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    /// Certified by the chain's prover.
    Hypothesis,
    /// A theorem of the base theory, certified by the chain's prover.
    TheoryFact,
    /// `P(#phi_j) | D_X` from the conclusion for `X \ {j}`.
    InductionDisjunction { subset: Vec<usize>, j: usize, premise: usize },
    Tautological { premises: Vec<usize> },
    /// `/\ P(#psi_j) -> P(#chi)` from the implication `/\ psi_j -> chi` on line `from`.
    D2Application { from: usize },
    ReflectionUse { gate: ClassGate },
    FixedPointExpansion { name: Name },
    AlphaValidity,
    /// A law about least witnesses, valid with each `generic` sentence read
    /// as an arbitrary existential.
    WitnessComparisonLaw { generic: Vec<Formula> },
}

impl Justification {
    pub fn label(&self) -> &'static str {
        match self {
            Justification::Hypothesis => "Hypothesis",
            Justification::TheoryFact => "TheoryFact",
            Justification::InductionDisjunction { .. } => "InductionDisjunction",
            Justification::Tautological { .. } => "TautologicalStep",
            Justification::D2Application { .. } => "D2Application",
            Justification::ReflectionUse { .. } => "ReflectionUse",
            Justification::FixedPointExpansion { .. } => "FixedPointExpansion",
            Justification::AlphaValidity => "AlphaValidity",
            Justification::WitnessComparisonLaw { .. } => "WitnessComparisonLaw",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub sentence: Formula,
    pub justification: Justification,
    /// Set on the line that concludes the subset stage `X`.
    pub subset: Option<Vec<usize>>,
}

/// Certifies `Hypothesis` and `TheoryFact` lines by bounded provability in a toy theory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prover {
    pub theory: ToyTheory,
    pub bound: u64,
}

impl Prover {
    pub fn certifies(&self, phi: &Formula) -> Result<bool, PropError> {
        ProofStream::new(self.theory.clone()).provable(phi, self.bound, true)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub predicate: Predicate,
    pub prover: Option<Prover>,
    pub steps: Vec<Step>,
}

#[derive(Serialize)]
struct StepJson<'a> {
    index: usize,
    rule: &'a str,
    premises: Vec<usize>,
    detail: Option<String>,
    subset: Option<&'a [usize]>,
    sentence: String,
}

impl Derivation {
    pub fn conclusion(&self) -> Option<&Formula> {
        self.steps.last().map(|s| &s.sentence)
    }

    /// Subset conclusions in chain order.
    pub fn subset_conclusions(&self) -> Vec<(&[usize], &Formula)> {
        self.steps.iter().filter_map(|s| s.subset.as_deref().map(|x| (x, &s.sentence))).collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (index, step) in self.steps.iter().enumerate() {
            let (premises, detail) = match &step.justification {
                Justification::InductionDisjunction { subset, j, premise } => {
                    (vec![*premise], Some(format!("X={subset:?} j={j}")))
                }
                Justification::Tautological { premises } => (premises.clone(), None),
                Justification::D2Application { from } => (vec![*from], None),
                Justification::ReflectionUse { gate } => (vec![], Some(gate.to_string())),
                Justification::FixedPointExpansion { name } => (vec![], Some(name.as_str().to_string())),
                Justification::WitnessComparisonLaw { generic } => {
                    (vec![], Some(generic.iter().map(print).collect::<Vec<_>>().join(", ")))
                }
                _ => (vec![], None),
            };
            let line = StepJson {
                index,
                rule: step.justification.label(),
                premises,
                detail,
                subset: step.subset.as_deref(),
                sentence: print(&step.sentence),
            };
            out.push_str(&serde_json::to_string(&line).expect("steps serialise"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum ConservationError {
    #[error("the hypothesis is not certified by the prover: {0}")]
    NotCertified(String),
    #[error("`{sentence}` is not in {gate}")]
    ClassGate { sentence: String, gate: ClassGate },
    #[error("the D2 step for subset {0:?} cannot be certified")]
    D2NotCertified(Vec<usize>),
    #[error(transparent)]
    Diagonal(#[from] DiagonalError),
    #[error(transparent)]
    Prop(#[from] PropError),
}

/// `\/_{i not in X} P(#phi_i) | gamma`, right-nested with `gamma` last.
pub fn subset_disjunction(predicate: Predicate, phis: &[Formula], gamma: &Formula, x: &BTreeSet<usize>) -> Formula {
    let mut items: Vec<Formula> =
        phis.iter().enumerate().filter(|(i, _)| !x.contains(i)).map(|(_, p)| predicate.apply(p)).collect();
    items.push(gamma.clone());
    Formula::disj(items).expect("gamma is always present")
}

/// `/\_{i<k} (P(#phi_i) -> phi_i) -> gamma`, or `gamma` when `k = 0`.
pub fn conservation_hypothesis(predicate: Predicate, phis: &[Formula], gamma: &Formula) -> Formula {
    match Formula::conj(phis.iter().map(|p| Formula::implies(predicate.apply(p), p.clone())).collect()) {
        Some(premise) => Formula::implies(premise, gamma.clone()),
        None => gamma.clone(),
    }
}

/// Subsets of `{0..k-1}` by cardinality, then lexicographically.
pub fn subsets_by_cardinality(k: usize) -> Vec<BTreeSet<usize>> {
    let mut all: Vec<Vec<usize>> = (0u32..1 << k)
        .map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all.into_iter().map(|v| v.into_iter().collect()).collect()
}

/// Builds the subset-induction chain deriving `gamma`.
pub fn conserve_chain(
    gamma: &Formula,
    phis: &[Formula],
    gate: ClassGate,
    predicate: Predicate,
    prover: Prover,
) -> Result<Derivation, ConservationError> {
    let hypothesis = conservation_hypothesis(predicate, phis, gamma);
    if !prover.certifies(&hypothesis)? {
        return Err(ConservationError::NotCertified(print(&hypothesis)));
    }
    let subsets = subsets_by_cardinality(phis.len());
    let gate_check = |f: &Formula| {
        if gate.admits(f) {
            Ok(())
        } else {
            Err(ConservationError::ClassGate { sentence: print(f), gate })
        }
    };
    gate_check(gamma)?;
    for x in &subsets {
        gate_check(&subset_disjunction(predicate, phis, gamma, x))?;
    }

    let mut steps = vec![Step { sentence: hypothesis.clone(), justification: Justification::Hypothesis, subset: None }];
    if phis.is_empty() {
        steps[0].subset = Some(Vec::new());
        return Ok(Derivation { predicate, prover: Some(prover), steps });
    }
    let mut conclusion_at: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for x in &subsets {
        let key: Vec<usize> = x.iter().copied().collect();
        let d_x = subset_disjunction(predicate, phis, gamma, x);
        if x.is_empty() {
            steps.push(Step { sentence: d_x, justification: Justification::Tautological { premises: vec![0] }, subset: Some(key.clone()) });
            conclusion_at.insert(key, steps.len() - 1);
            continue;
        }
        let mut induction_lines = Vec::new();
        for &j in x {
            let mut smaller = key.clone();
            smaller.retain(|&i| i != j);
            let premise = conclusion_at[&smaller];
            steps.push(Step {
                sentence: Formula::or(predicate.apply(&phis[j]), d_x.clone()),
                justification: Justification::InductionDisjunction { subset: key.clone(), j, premise },
                subset: None,
            });
            induction_lines.push(steps.len() - 1);
        }
        let pr_conj = Formula::conj(x.iter().map(|&j| predicate.apply(&phis[j])).collect()).expect("non-empty");
        let phi_conj = Formula::conj(x.iter().map(|&j| phis[j].clone()).collect()).expect("non-empty");
        steps.push(Step {
            sentence: Formula::or(pr_conj.clone(), d_x.clone()),
            justification: Justification::Tautological { premises: induction_lines },
            subset: None,
        });
        let middle = steps.len() - 1;
        steps.push(Step {
            sentence: Formula::implies(phi_conj, d_x.clone()),
            justification: Justification::Tautological { premises: vec![0] },
            subset: None,
        });
        let implication = steps.len() - 1;
        if !prop::tc(std::slice::from_ref(&hypothesis), &steps[implication].sentence)? {
            return Err(ConservationError::D2NotCertified(key));
        }
        steps.push(Step {
            sentence: Formula::implies(pr_conj, predicate.apply(&d_x)),
            justification: Justification::D2Application { from: implication },
            subset: None,
        });
        let d2 = steps.len() - 1;
        steps.push(Step {
            sentence: Formula::or(predicate.apply(&d_x), d_x.clone()),
            justification: Justification::Tautological { premises: vec![middle, d2] },
            subset: None,
        });
        let either = steps.len() - 1;
        steps.push(Step {
            sentence: reflection_instance(predicate, &d_x).rendered,
            justification: Justification::ReflectionUse { gate },
            subset: None,
        });
        let rfn = steps.len() - 1;
        steps.push(Step {
            sentence: d_x,
            justification: Justification::Tautological { premises: vec![either, rfn] },
            subset: Some(key.clone()),
        });
        conclusion_at.insert(key, steps.len() - 1);
    }
    Ok(Derivation { predicate, prover: Some(prover), steps })
}

/// The first line that failed to validate.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("step {index} fails: {reason}")]
pub struct ChainFailure {
    pub index: usize,
    pub reason: String,
}

/// Replays every justification.
pub fn check_chain(d: &Derivation) -> Result<(), ChainFailure> {
    let hypotheses: Vec<Formula> = d
        .steps
        .iter()
        .filter(|s| s.justification == Justification::Hypothesis)
        .map(|s| s.sentence.clone())
        .collect();
    for (index, step) in d.steps.iter().enumerate() {
        check_step(d, &hypotheses, index, step).map_err(|reason| ChainFailure { index, reason })?;
    }
    Ok(())
}

fn earlier(index: usize, premises: &[usize]) -> Result<(), String> {
    match premises.iter().find(|&&p| p >= index) {
        Some(p) => Err(format!("premise {p} is not an earlier line")),
        None => Ok(()),
    }
}

fn tc_lines(d: &Derivation, premises: &[usize], sentence: &Formula) -> Result<(), String> {
    let set: Vec<Formula> = premises.iter().map(|&p| d.steps[p].sentence.clone()).collect();
    match prop::tc(&set, sentence) {
        Ok(true) => Ok(()),
        Ok(false) => Err("not a tautological consequence of its premises".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn check_step(d: &Derivation, hypotheses: &[Formula], index: usize, step: &Step) -> Result<(), String> {
    let s = &step.sentence;
    match &step.justification {
        Justification::Hypothesis | Justification::TheoryFact => {
            let prover = d.prover.as_ref().ok_or("no prover attached")?;
            match prover.certifies(s) {
                Ok(true) => Ok(()),
                Ok(false) => Err("not certified by the prover".into()),
                Err(e) => Err(e.to_string()),
            }
        }
        Justification::Tautological { premises } => {
            earlier(index, premises)?;
            tc_lines(d, premises, s)
        }
        Justification::InductionDisjunction { subset, j, premise } => {
            earlier(index, &[*premise])?;
            if !subset.contains(j) {
                return Err(format!("{j} is not in {subset:?}"));
            }
            let mut smaller = subset.clone();
            smaller.retain(|i| i != j);
            if d.steps[*premise].subset.as_ref() != Some(&smaller) {
                return Err(format!("line {premise} does not conclude the subset {smaller:?}"));
            }
            tc_lines(d, &[*premise], s)
        }
        Justification::D2Application { from } => {
            earlier(index, &[*from])?;
            let Formula::Imp(pr_conj, pr_concl) = s else { return Err("not an implication".into()) };
            let psis: Option<Vec<Formula>> = pr_conj.conjuncts().into_iter().map(|a| d.predicate.argument(a)).collect();
            let psis = psis.ok_or("antecedent is not a conjunction of predicate atoms")?;
            let chi = d.predicate.argument(pr_concl).ok_or("consequent is not a predicate atom")?;
            let source = Formula::implies(Formula::conj(psis).expect("non-empty"), chi);
            if d.steps[*from].sentence != source {
                return Err(format!("line {from} is not the implication under the predicate"));
            }
            match prop::tc(hypotheses, &source) {
                Ok(true) => Ok(()),
                Ok(false) => Err("the implication is not a t.c. of the recorded premises".into()),
                Err(e) => Err(e.to_string()),
            }
        }
        Justification::ReflectionUse { gate } => {
            let Formula::Imp(_, phi) = s else { return Err("not an implication".into()) };
            let inst = reflection_instance(d.predicate, phi);
            if inst.rendered != *s {
                return Err("not a reflection instance of the chain's predicate".into());
            }
            if !inst.admissible(*gate) {
                return Err(format!("instance sentence is not in {gate}"));
            }
            Ok(())
        }
        Justification::FixedPointExpansion { name } => {
            let body = diagonal::expand(name).map_err(|e| e.to_string())?;
            if *s == Formula::iff(Formula::named(name), body) {
                Ok(())
            } else {
                Err(format!("not the definitional equivalence of {}", name.as_str()))
            }
        }
        Justification::AlphaValidity => {
            let hit = (1..=5)
                .flat_map(|n| [HierarchyClass::sigma(n), HierarchyClass::pi(n)])
                .any(|c| alpha(c).ok().as_ref() == Some(s));
            if hit {
                Ok(())
            } else {
                Err("not an alpha sentence".into())
            }
        }
        Justification::WitnessComparisonLaw { generic } => {
            if witness_law_holds(s, generic) {
                Ok(())
            } else {
                Err("refuted by a finite output list".into())
            }
        }
    }
}

/// Replaces named sentences at formula positions by their expansions, a few levels deep.
fn unfold_names(phi: &Formula, depth: usize) -> Formula {
    if depth == 0 {
        return phi.clone();
    }
    let rec = |f: &Formula| Box::new(unfold_names(f, depth));
    match phi {
        Formula::Named(n) => match diagonal::expand(n) {
            Ok(body) => unfold_names(&body, depth - 1),
            Err(_) => phi.clone(),
        },
        Formula::Not(a) => Formula::Not(rec(a)),
        Formula::And(a, b) => Formula::And(rec(a), rec(b)),
        Formula::Or(a, b) => Formula::Or(rec(a), rec(b)),
        Formula::Imp(a, b) => Formula::Imp(rec(a), rec(b)),
        Formula::Forall(v, a) => Formula::Forall(*v, rec(a)),
        Formula::Exists(v, a) => Formula::Exists(*v, rec(a)),
        Formula::Bounded { kind, var, bound, body } => {
            Formula::Bounded { kind: *kind, var: *var, bound: bound.clone(), body: rec(body) }
        }
        other => other.clone(),
    }
}

/// Reads each `generic` sentence `Ex.body` as `PR[phantom](#i)`, including
/// occurrences of its matrix merged into a larger witness comparison.
fn genericize(phi: &Formula, generic: &[(Formula, Formula)]) -> Formula {
    for (g, atom) in generic {
        if phi == g {
            return atom.clone();
        }
        if let (Formula::Exists(v, body), Formula::Pr(m, code)) = (g, atom) {
            let mut vars = phi.free_vars();
            vars.insert(*v);
            for w in vars {
                if body.substitute(*v, &Term::Var(w)) == *phi {
                    return Formula::Out(*m, Term::Var(w), code.clone());
                }
            }
        }
    }
    let rec = |f: &Formula| Box::new(genericize(f, generic));
    match phi {
        Formula::Not(a) => Formula::Not(rec(a)),
        Formula::And(a, b) => Formula::And(rec(a), rec(b)),
        Formula::Or(a, b) => Formula::Or(rec(a), rec(b)),
        Formula::Imp(a, b) => Formula::Imp(rec(a), rec(b)),
        Formula::Forall(v, a) => Formula::Forall(*v, rec(a)),
        Formula::Exists(v, a) => Formula::Exists(*v, rec(a)),
        Formula::Bounded { kind, var, bound, body } => {
            Formula::Bounded { kind: *kind, var: *var, bound: bound.clone(), body: rec(body) }
        }
        other => other.clone(),
    }
}

fn indexes_outputs(phi: &Formula, v: u32) -> bool {
    let mut hit = false;
    phi.for_each_subformula(&mut |g| {
        if let Formula::Out(_, Term::Var(w), _) = g {
            hit |= *w == v;
        }
    });
    hit
}

/// Bounds every unbounded quantifier by `len`; `None` if some quantified
/// variable does not range over output indices.
fn bound_quantifiers(phi: &Formula, len: u64) -> Option<Formula> {
    let rec = |f: &Formula| bound_quantifiers(f, len).map(Box::new);
    Some(match phi {
        Formula::Not(a) => Formula::Not(rec(a)?),
        Formula::And(a, b) => Formula::And(rec(a)?, rec(b)?),
        Formula::Or(a, b) => Formula::Or(rec(a)?, rec(b)?),
        Formula::Imp(a, b) => Formula::Imp(rec(a)?, rec(b)?),
        Formula::Forall(v, a) | Formula::Exists(v, a) => {
            if !indexes_outputs(a, *v) {
                return None;
            }
            let kind = if matches!(phi, Formula::Forall(..)) { BoundKind::ForallLe } else { BoundKind::ExistsLe };
            Formula::Bounded { kind, var: *v, bound: crate::formula::numeral(len), body: rec(a)? }
        }
        Formula::Bounded { kind, var, bound, body } => {
            Formula::Bounded { kind: *kind, var: *var, bound: bound.clone(), body: rec(body)? }
        }
        other => other.clone(),
    })
}

fn machine_codes(phi: &Formula) -> BTreeMap<MachineId, BTreeSet<BigUint>> {
    let mut out: BTreeMap<MachineId, BTreeSet<BigUint>> = BTreeMap::new();
    phi.for_each_subformula(&mut |g| match g {
        Formula::Pr(m, Term::Num(c)) | Formula::Out(m, _, Term::Num(c)) => {
            out.entry(*m).or_default().insert(c.clone());
        }
        Formula::Pr(m, _) | Formula::Out(m, _, _) => {
            out.entry(*m).or_default();
        }
        _ => {}
    });
    out
}

fn lists_up_to(alphabet: &[BigUint], len: usize) -> Vec<Vec<BigUint>> {
    let mut all = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for l in &frontier {
            for a in alphabet {
                let mut e: Vec<BigUint> = l.clone();
                e.push(a.clone());
                next.push(e);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

const LAW_CASE_LIMIT: usize = 60_000;

/// Least-witness model checking: after unfolding names and reading each
/// `generic` sentence as a fresh machine atom, the sentence must evaluate
/// True on every combination of short, complete output lists over the codes
/// it mentions plus one unrelated code. Unbounded quantifiers must range over
/// output indices; they are cut at the list length.
pub fn witness_law_holds(sentence: &Formula, generic: &[Formula]) -> bool {
    let mut phi = unfold_names(sentence, 4);
    let used = machine_codes(&phi);
    let spare: Vec<MachineId> = [MachineId::T, MachineId::E, MachineId::G, MachineId::H]
        .into_iter()
        .filter(|m| !used.contains_key(m))
        .collect();
    if spare.is_empty() && !generic.is_empty() {
        return false;
    }
    if !generic.is_empty() {
        let pairs: Vec<(Formula, Formula)> = generic
            .iter()
            .enumerate()
            .map(|(i, g)| (unfold_names(g, 4), Formula::Pr(spare[0], crate::formula::numeral(i as u32))))
            .collect();
        phi = genericize(&phi, &pairs);
    }
    let machines: Vec<(MachineId, Vec<BigUint>)> = machine_codes(&phi)
        .into_iter()
        .map(|(m, codes)| {
            let other = codes.iter().max().map_or(BigUint::from(0u32), |c| c + 1u32);
            let mut alphabet: Vec<BigUint> = codes.into_iter().collect();
            alphabet.push(other);
            (m, alphabet)
        })
        .collect();
    let mut len = 4;
    let cases = |len: usize| -> usize {
        machines.iter().map(|(_, a)| (0..=len).map(|l| a.len().pow(l as u32)).sum::<usize>()).product()
    };
    while len > 1 && cases(len) > LAW_CASE_LIMIT {
        len -= 1;
    }
    let Some(phi) = bound_quantifiers(&phi, len as u64) else { return false };
    let per_machine: Vec<Vec<OutputList>> = machines
        .iter()
        .map(|(_, alphabet)| {
            lists_up_to(alphabet, len).into_iter().map(|l| OutputList::new(l).completed()).collect()
        })
        .collect();
    let mut idx = vec![0usize; machines.len()];
    loop {
        let mut ev = Evaluator::new(len as u64 + 1);
        for (slot, (m, _)) in machines.iter().enumerate() {
            ev = ev.with_machine(*m, &per_machine[slot][idx[slot]]);
        }
        if !ev.eval(&phi).is_true() {
            return false;
        }
        let mut slot = 0;
        loop {
            if slot == machines.len() {
                return true;
            }
            idx[slot] += 1;
            if idx[slot] < per_machine[slot].len() {
                break;
            }
            idx[slot] = 0;
            slot += 1;
        }
    }
}

/// Hand-built derivations for individual claims.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// Reflection for `Sigma1 u Pi1` refutes Rosser provability of the
    /// fixed point `FP1_phi` and of its negation.
    Fp1C1,
    /// `psi_{Gamma^d}` from the `Gamma^d` reflection instance for machine G.
    GPsi(HierarchyClass),
    /// `chi_Sigma1` from `Sigma1` reflection for machine H over the unsound theory.
    HChi1,
}

impl FromStr for Scenario {
    type Err = String;

    /// `FP1-C1`, `H-chi1`, or `G-psi:<Gamma>` (bare `G-psi` means `Gamma = Sigma2`).
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "FP1-C1" => Ok(Scenario::Fp1C1),
            "H-chi1" => Ok(Scenario::HChi1),
            "G-psi" => Ok(Scenario::GPsi(HierarchyClass::sigma(2))),
            _ => match s.strip_prefix("G-psi:") {
                Some(c) => c.parse().map(Scenario::GPsi).map_err(|e: crate::hierarchy::ParseClassError| e.to_string()),
                None => Err(format!("unknown scenario `{s}` (FP1-C1, G-psi[:CLASS], H-chi1)")),
            },
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Fp1C1 => f.write_str("FP1-C1"),
            Scenario::GPsi(c) => write!(f, "G-psi:{c}"),
            Scenario::HChi1 => f.write_str("H-chi1"),
        }
    }
}

struct ChainBuilder {
    steps: Vec<Step>,
}

impl ChainBuilder {
    fn push(&mut self, sentence: Formula, justification: Justification) -> usize {
        self.steps.push(Step { sentence, justification, subset: None });
        self.steps.len() - 1
    }

    fn taut(&mut self, sentence: Formula, premises: &[usize]) -> usize {
        self.push(sentence, Justification::Tautological { premises: premises.to_vec() })
    }
}

fn name_of(phi: &Formula) -> Name {
    match phi {
        Formula::Named(n) => n.clone(),
        other => panic!("expected a named sentence, got {other}"),
    }
}

fn expansion_step(phi: &Formula) -> Result<(Formula, Justification), DiagonalError> {
    let name = name_of(phi);
    let body = diagonal::expand(&name)?;
    Ok((Formula::iff(phi.clone(), body), Justification::FixedPointExpansion { name }))
}

/// Builds one of the scripted derivations, registering the fixed points it needs.
pub fn scripted_scenario(scenario: Scenario) -> Result<Derivation, ConservationError> {
    let not = |f: &Formula| Formula::negate(f.clone());
    match scenario {
        Scenario::Fp1C1 => {
            let t = MachineId::T;
            let r = |f: &Formula| rosser_provability(t, f);
            let phi = diagonal::fp1()?;
            let mut b = ChainBuilder { steps: Vec::new() };
            let (s, j) = expansion_step(&phi)?;
            let fp = b.push(s, j);
            let pi1 = ClassGate::Level(HierarchyClass::pi(1));
            let sigma1 = ClassGate::Level(HierarchyClass::sigma(1));
            let rfn_phi = b.push(reflection_instance(Predicate::Rosser(t), &phi).rendered, Justification::ReflectionUse { gate: pi1 });
            let not_r_phi = b.taut(not(&r(&phi)), &[fp, rfn_phi]);
            let inner = not(&r(&not(&phi)));
            let eq1 = b.taut(Formula::iff(phi.clone(), not(&r(&inner))), &[fp, not_r_phi]);
            let eq2 = b.push(reflection_instance(Predicate::Rosser(t), &inner).rendered, Justification::ReflectionUse { gate: pi1 });
            let rfn_neg = b.push(
                reflection_instance(Predicate::Rosser(t), &not(&phi)).rendered,
                Justification::ReflectionUse { gate: sigma1 },
            );
            let contra = b.taut(Formula::implies(phi.clone(), inner.clone()), &[rfn_neg]);
            let combined = b.taut(Formula::implies(not(&r(&inner)), inner.clone()), &[eq1, contra]);
            let neg = b.taut(inner.clone(), &[eq2, combined]);
            b.taut(Formula::and(not(&r(&phi)), inner), &[not_r_phi, neg]);
            Ok(Derivation { predicate: Predicate::Rosser(t), prover: None, steps: b.steps })
        }
        Scenario::GPsi(gamma) => {
            let g = MachineId::G;
            let gs = diagonal::g_family()?;
            let target = gamma.dual();
            let psi = gs.psi(target).clone();
            let mut b = ChainBuilder { steps: Vec::new() };
            if target == HierarchyClass::sigma(1) {
                let ba = gs.beta_alpha();
                let (s, j) = expansion_step(&psi)?;
                let fp_psi = b.push(s, j);
                let (s, j) = expansion_step(&gs.beta)?;
                let fp_beta = b.push(s, j);
                let rfn = b.push(
                    reflection_instance(Predicate::Rosser(g), &ba).rendered,
                    Justification::ReflectionUse { gate: ClassGate::Level(target) },
                );
                let not_psi_beta = b.taut(Formula::implies(not(&psi), gs.beta.clone()), &[fp_psi, rfn]);
                let wc = wc_weak(&provability(g, &not(&ba)), &provability(g, &ba)).expect("machine atoms");
                let law = b.push(
                    Formula::implies(wc, not(&rosser_provability(g, &ba))),
                    Justification::WitnessComparisonLaw { generic: Vec::new() },
                );
                let beta_psi = b.taut(Formula::implies(gs.beta.clone(), psi.clone()), &[fp_beta, law, fp_psi]);
                b.taut(psi, &[not_psi_beta, beta_psi]);
            } else {
                let pa = gs.psi_alpha(target);
                let (s, j) = expansion_step(&psi)?;
                let fp = b.push(s, j);
                let rfn = b.push(
                    reflection_instance(Predicate::Rosser(g), &pa).rendered,
                    Justification::ReflectionUse { gate: ClassGate::Level(target) },
                );
                b.taut(psi, &[fp, rfn]);
            }
            Ok(Derivation { predicate: Predicate::Rosser(g), prover: None, steps: b.steps })
        }
        Scenario::HChi1 => {
            let h = MachineId::H;
            let theta = unsound_theta();
            let hs = diagonal::h_family(&theta, "H")?;
            let sigma1 = HierarchyClass::sigma(1);
            let chi = hs.chi(sigma1).clone();
            let ca = hs.chi_alpha(sigma1);
            let mut b = ChainBuilder { steps: Vec::new() };
            let fact = b.push(theta.clone(), Justification::TheoryFact);
            let rfn = b.push(
                reflection_instance(Predicate::Rosser(h), &ca).rendered,
                Justification::ReflectionUse { gate: ClassGate::Level(sigma1) },
            );
            let law = b.push(
                Formula::implies(theta.clone(), Formula::implies(not(&chi), rosser_provability(h, &ca))),
                Justification::WitnessComparisonLaw { generic: vec![theta] },
            );
            let alpha_line = b.push(alpha(sigma1).expect("level 1"), Justification::AlphaValidity);
            let from_refl = b.taut(Formula::implies(rosser_provability(h, &ca), chi.clone()), &[rfn, alpha_line]);
            b.taut(chi, &[fact, law, from_refl]);
            let prover = Prover { theory: ToyTheory::unsound(), bound: 64 };
            Ok(Derivation { predicate: Predicate::Rosser(h), prover: Some(prover), steps: b.steps })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;
    use crate::theory::TheoryId;

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    fn prover_for(h: &Formula) -> Prover {
        let theory = ToyTheory::new(TheoryId::Custom("hyp".into()), vec![], vec![h.clone()], BTreeMap::new()).unwrap();
        Prover { theory, bound: 8 }
    }

    #[test]
    fn k_zero_chain_is_gamma() {
        let gamma = f("Ex(x=3)");
        let p = Predicate::Plain(MachineId::T);
        let d = conserve_chain(&gamma, &[], ClassGate::Level(HierarchyClass::sigma(1)), p, prover_for(&gamma)).unwrap();
        assert_eq!(d.steps.len(), 1);
        assert_eq!(d.steps[0].sentence, gamma);
        assert!(check_chain(&d).is_ok());
    }

    #[test]
    fn k_one_visits_empty_then_singleton() {
        let gamma = f("Ex(x=3)");
        let phis = vec![f("Ax(x=x)")];
        let p = Predicate::Plain(MachineId::T);
        let h = conservation_hypothesis(p, &phis, &gamma);
        let d = conserve_chain(&gamma, &phis, ClassGate::Level(HierarchyClass::sigma(1)), p, prover_for(&h)).unwrap();
        let concl = d.subset_conclusions();
        assert_eq!(concl.len(), 2);
        assert_eq!(concl[0].1, &Formula::or(p.apply(&phis[0]), gamma.clone()));
        assert_eq!(concl[1].1, &gamma);
        assert!(check_chain(&d).is_ok());
    }

    #[test]
    fn tampering_is_detected() {
        let gamma = f("Ex(x=3)");
        let phis = vec![f("0=0"), f("Ax(x=x)")];
        let p = Predicate::Plain(MachineId::T);
        let h = conservation_hypothesis(p, &phis, &gamma);
        let mut d = conserve_chain(&gamma, &phis, ClassGate::Level(HierarchyClass::sigma(1)), p, prover_for(&h)).unwrap();
        d.steps[3].sentence = f("0=1");
        assert_eq!(check_chain(&d).unwrap_err().index, 3);
    }

    #[test]
    fn gate_rejects_out_of_class_gamma() {
        let gamma = f("Ax(x=x)");
        let p = Predicate::Plain(MachineId::T);
        let err = conserve_chain(&gamma, &[], ClassGate::Level(HierarchyClass::sigma(1)), p, prover_for(&gamma));
        assert!(matches!(err, Err(ConservationError::ClassGate { .. })));
    }

    #[test]
    fn uncertified_hypothesis_is_rejected() {
        let gamma = f("Ex(x=3)");
        let p = Predicate::Plain(MachineId::T);
        let err = conserve_chain(&gamma, &[], ClassGate::Level(HierarchyClass::sigma(1)), p, prover_for(&f("0=0")));
        assert!(matches!(err, Err(ConservationError::NotCertified(_))));
    }

    #[test]
    fn rosser_argument_round_trips() {
        let p = Predicate::Rosser(MachineId::E);
        let phi = f("0=0");
        assert_eq!(p.argument(&p.apply(&phi)), Some(phi));
    }

    #[test]
    fn weak_comparison_refutes_rosser() {
        let g = MachineId::G;
        let x = f("0=0");
        let law = Formula::implies(
            wc_weak(&provability(g, &Formula::negate(x.clone())), &provability(g, &x)).unwrap(),
            Formula::negate(rosser_provability(g, &x)),
        );
        assert!(witness_law_holds(&law, &[]));
        let wrong = Formula::implies(
            wc_weak(&provability(g, &x), &provability(g, &Formula::negate(x.clone()))).unwrap(),
            Formula::negate(rosser_provability(g, &x)),
        );
        assert!(!witness_law_holds(&wrong, &[]));
    }

    #[test]
    fn scenarios_validate() {
        for s in [
            Scenario::Fp1C1,
            Scenario::HChi1,
            Scenario::GPsi(HierarchyClass::pi(1)),
            Scenario::GPsi(HierarchyClass::sigma(2)),
        ] {
            let d = scripted_scenario(s).unwrap();
            assert_eq!(check_chain(&d), Ok(()), "{s}");
        }
    }
}
