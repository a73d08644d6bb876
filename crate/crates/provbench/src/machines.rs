//! Staged bell machines.
//!
//! Each machine reads the proof stream of a toy theory one stage at a time
//! (Procedure 1), copying new theorems to its output list unless a theorem
//! matches one of its trigger shapes. A trigger "rings the bell": the machine
//! appends a fixed block and switches to Procedure 2, where it enumerates
//! formulas in ascending code order.
//!
//! Stages are flattened into one counter: Procedure-1 records carry the proof
//! stage `m`; the `s`-th Procedure-2 block after a bell at stage `b` is
//! recorded as stage `b + 1 + s`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagonal::{self, DiagonalError, FSentences, GSentences, HSentences};
use crate::formula::{match_witness_comparison, provability, rosser_provability, wc_weak, Formula, MachineId, Term};
use crate::godel::{decode, godel, FormulaEnumerator};
use crate::hierarchy::{alpha, in_class, HierarchyClass, Polarity};
use crate::prop::{self, PropError};
use crate::semantics::{self, eval_delta0, EvalError, Evaluator, OutputList, OutputOracle, Truth};
use crate::syntax::{parse_with, print, NamePolicy};
use crate::theory::{unsound_theta, ProofStream, ToyTheory};

/// Which construction to run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MachineKind {
    E,
    F(HierarchyClass),
    G,
    /// `theta` must have the shape `Ex.delta(x)` with `delta` bounded; the
    /// `chi` family is registered under `<prefix>_chi_<class>`.
    H { theta: Formula, prefix: String },
}

impl MachineKind {
    /// Machine H over the false sentence of the unsound theory.
    pub fn h_standard() -> Self {
        MachineKind::H { theta: unsound_theta(), prefix: "H".to_string() }
    }

    pub fn id(&self) -> MachineId {
        match self {
            MachineKind::E => MachineId::E,
            MachineKind::F(c) => MachineId::F(*c),
            MachineKind::G => MachineId::G,
            MachineKind::H { .. } => MachineId::H,
        }
    }

    /// Parses the command-line spelling: `E`, `F:Sigma1`, `G`, `H`.
    pub fn parse(s: &str) -> Result<Self, String> {
        match s.parse::<MachineId>()? {
            MachineId::E => Ok(MachineKind::E),
            MachineId::F(c) => Ok(MachineKind::F(c)),
            MachineId::G => Ok(MachineKind::G),
            MachineId::H => Ok(MachineKind::h_standard()),
            MachineId::T => Err("T is the proof enumerator, not a bell machine".to_string()),
        }
    }
}

#[derive(Debug, Error)]
pub enum MachineError {
    #[error(transparent)]
    Prop(#[from] PropError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Diagonal(#[from] DiagonalError),
    #[error("invariant violated at stage {stage}: {msg}")]
    Invariant { stage: u64, msg: String },
    #[error("budgets must be positive")]
    ZeroBudget,
    #[error("theta must have the form Ex.delta(x) with delta bounded: {0}")]
    BadTheta(String),
    #[error("trace line {line}: {msg}")]
    TraceFormat { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    P1,
    P2,
}

/// One line of a trace. Field order is the JSON key order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageRecord {
    pub stage: u64,
    pub phase: Phase,
    pub case: String,
    pub new_theorem: Option<Formula>,
    pub appended: Vec<Formula>,
    pub k: u64,
    pub bell: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    stage: u64,
    phase: Phase,
    case: String,
    new_theorem: Option<String>,
    appended: Vec<String>,
    k: u64,
    bell: Option<u64>,
}

impl StageRecord {
    pub fn to_json(&self) -> String {
        let j = RecordJson {
            stage: self.stage,
            phase: self.phase,
            case: self.case.clone(),
            new_theorem: self.new_theorem.as_ref().map(print),
            appended: self.appended.iter().map(print).collect(),
            k: self.k,
            bell: self.bell,
        };
        serde_json::to_string(&j).expect("records serialise")
    }
}

/// A completed run: the per-stage records plus lookup tables for the outputs.
#[derive(Clone, Debug)]
pub struct MachineTrace {
    pub records: Vec<StageRecord>,
    outputs: Vec<Formula>,
    list: OutputList,
}

impl MachineTrace {
    pub fn new(records: Vec<StageRecord>) -> Self {
        let outputs: Vec<Formula> = records.iter().flat_map(|r| r.appended.iter().cloned()).collect();
        let mut list = OutputList::from_formulas(&outputs);
        let bell = records.iter().find_map(|r| r.bell).is_some();
        if bell {
            if let Some(cap) = formula_cap_of(&records) {
                list = list.with_certified_upto(cap);
            }
        }
        MachineTrace { records, outputs, list }
    }

    pub fn outputs(&self) -> &[Formula] {
        &self.outputs
    }

    pub fn output_list(&self) -> &OutputList {
        &self.list
    }

    pub fn bell_stage(&self) -> Option<u64> {
        self.records.iter().find_map(|r| r.bell)
    }

    /// Code of the last formula fully processed by Procedure 2; formulas up
    /// to this code are "standard" for the run.
    pub fn formula_cap(&self) -> Option<BigUint> {
        formula_cap_of(&self.records)
    }

    pub fn first_index(&self, phi: &Formula) -> Option<usize> {
        self.list.first_index(&godel(phi))
    }

    pub fn procedure1_outputs(&self) -> Vec<Formula> {
        self.records.iter().filter(|r| r.phase == Phase::P1).flat_map(|r| r.appended.iter().cloned()).collect()
    }

    /// `PR_M(#phi)` read off the trace.
    pub fn pr(&self, phi: &Formula) -> Truth {
        let code = godel(phi);
        if self.list.first_index(&code).is_some() {
            Truth::True
        } else if self.list.never_output(&code) {
            Truth::False
        } else {
            Truth::Unknown
        }
    }

    /// The Rosser predicate: `phi` occurs before any `!phi`.
    pub fn rosser(&self, phi: &Formula) -> Truth {
        let yes = self.first_index(phi);
        let no = self.first_index(&Formula::negate(phi.clone()));
        match (yes, no) {
            (Some(i), Some(j)) => Truth::from_bool(i < j),
            (Some(_), None) => Truth::True,
            (None, Some(_)) => Truth::False,
            (None, None) => {
                if self.pr(phi).is_false() {
                    Truth::False
                } else {
                    Truth::Unknown
                }
            }
        }
    }

    /// Three-valued evaluation of a sentence whose machine atoms refer to
    /// `machine`, with every `alpha` sentence assumed valid. The search bound
    /// covers the whole output list.
    pub fn evaluate(&self, machine: MachineId, phi: &Formula) -> Truth {
        self.evaluate_against(&self.list, machine, phi)
    }

    /// As [`MachineTrace::evaluate`], reading the trace as the whole output
    /// sequence: nothing is output after the last record.
    pub fn evaluate_completed(&self, machine: MachineId, phi: &Formula) -> Truth {
        self.evaluate_against(&self.list.clone().completed(), machine, phi)
    }

    fn evaluate_against(&self, list: &OutputList, machine: MachineId, phi: &Formula) -> Truth {
        let mut ev = Evaluator::new(self.outputs.len() as u64 + 1).with_machine(machine, list);
        for level in 1..=5 {
            for c in [HierarchyClass::sigma(level), HierarchyClass::pi(level)] {
                ev = ev.assume(alpha(c).expect("level >= 1"));
            }
        }
        ev.eval(phi)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_json());
            out.push('\n');
        }
        out
    }

    /// Rebuilds a trace from its JSON Lines form.
    pub fn from_jsonl(text: &str) -> Result<Self, MachineError> {
        let mut records = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| MachineError::TraceFormat { line: idx + 1, msg };
            let j: RecordJson = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            let parse = |s: &str| parse_with(s, NamePolicy::Any).map_err(|e| err(e.to_string()));
            let new_theorem = j.new_theorem.as_deref().map(parse).transpose()?;
            let appended = j.appended.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()?;
            records.push(StageRecord { stage: j.stage, phase: j.phase, case: j.case, new_theorem, appended, k: j.k, bell: j.bell });
        }
        Ok(MachineTrace::new(records))
    }
}

fn formula_cap_of(records: &[StageRecord]) -> Option<BigUint> {
    records.iter().rev().find(|r| r.phase == Phase::P2).and_then(|r| r.appended.last()).map(godel)
}

/// Descending printed length, ties by ascending code.
pub fn rearrange_descending_length(items: &[Formula]) -> Vec<Formula> {
    let mut keyed: Vec<(Reverse<usize>, BigUint, Formula)> =
        items.iter().map(|f| (Reverse(print(f).len()), godel(f), f.clone())).collect();
    keyed.sort();
    keyed.into_iter().map(|(_, _, f)| f).collect()
}

/// `phi'_i != !phi'_l` for every `l < i`.
pub fn rearrangement_ok(items: &[Formula]) -> bool {
    items.iter().enumerate().all(|(i, fi)| items[..i].iter().all(|fl| *fi != Formula::negate(fl.clone())))
}

/// Reads `/\_{i<n} (R_M(#psi_i) -> psi_i)` (right-nested, `n >= 1`).
pub fn match_reflection_premises(m: MachineId, premise: &Formula) -> Option<Vec<Formula>> {
    premise
        .conjuncts()
        .into_iter()
        .map(|c| match c {
            Formula::Imp(r, psi) if **r == rosser_provability(m, psi) => Some((**psi).clone()),
            _ => None,
        })
        .collect()
}

/// Reads `!/\_{i<j} (PR_M(#!phi_i) < PR_M(#phi_i))` (`j >= 1`).
pub fn match_negated_wc_block(m: MachineId, phi: &Formula) -> Option<Vec<Formula>> {
    let Formula::Not(block) = phi else { return None };
    block
        .conjuncts()
        .into_iter()
        .map(|c| {
            let (_, _, _, right, strict) = match_witness_comparison(c)?;
            let Formula::Out(mm, _, Term::Num(code)) = right else { return None };
            if *mm != m || !strict {
                return None;
            }
            let target = decode(code).ok()?;
            let rebuilt = crate::formula::wc_strict(
                &provability(m, &Formula::negate(target.clone())),
                &provability(m, &target),
            )
            .ok()?;
            (rebuilt == *c).then_some(target)
        })
        .collect()
}

/// `!/\ (PR(#!phi_i) < PR(#phi_i))` for the given formulas.
pub fn negated_wc_block(m: MachineId, items: &[Formula]) -> Formula {
    let parts = items
        .iter()
        .map(|p| {
            crate::formula::wc_strict(&provability(m, &Formula::negate(p.clone())), &provability(m, p))
                .expect("machine atoms")
        })
        .collect();
    Formula::negate(Formula::conj(parts).expect("non-empty block"))
}

/// `/\ (R(#g_i) -> g_i) -> target` for the given formulas.
pub fn reflection_implication(m: MachineId, items: &[Formula], target: Formula) -> Formula {
    match Formula::conj(items.iter().map(|g| Formula::implies(rosser_provability(m, g), g.clone())).collect()) {
        Some(premise) => Formula::implies(premise, target),
        None => target,
    }
}

fn all_distinct(items: &[Formula]) -> bool {
    let set: HashSet<&Formula> = items.iter().collect();
    set.len() == items.len()
}

/// The reflection-witness disjunction for machine F: for `Sigma_n`
/// `(R(!(pi&a)) & (pi&a)) | (R(sigma&a') & !(sigma&a'))`, for `Pi_n`
/// `(R(pi&a) & !(pi&a)) | (R(!(sigma&a')) & (sigma&a'))`.
pub fn f_reflection_disjunction(fs: &FSentences) -> Formula {
    let m = MachineId::F(fs.gamma);
    let pa = fs.pi_alpha();
    let sa = fs.sigma_alpha();
    let not = |f: &Formula| Formula::negate(f.clone());
    if fs.gamma.polarity == Polarity::Sigma {
        Formula::or(
            Formula::and(rosser_provability(m, &not(&pa)), pa.clone()),
            Formula::and(rosser_provability(m, &sa), not(&sa)),
        )
    } else {
        Formula::or(
            Formula::and(rosser_provability(m, &pa), not(&pa)),
            Formula::and(rosser_provability(m, &not(&sa)), sa.clone()),
        )
    }
}

/// `/\_i (PR(#!g_i) <= PR(#g_i))`.
pub fn weak_wc_conjunction(m: MachineId, items: &[Formula]) -> Option<Formula> {
    Formula::conj(
        items
            .iter()
            .map(|g| wc_weak(&provability(m, &Formula::negate(g.clone())), &provability(m, g)).expect("machine atoms"))
            .collect(),
    )
}

enum Resolved {
    E,
    F(FSentences),
    G(GSentences),
    H { sentences: HSentences, delta_var: u32, delta: Formula },
}

/// Live machine state.
pub struct BellMachine {
    kind: MachineKind,
    resolved: Resolved,
    stream: ProofStream,
    /// Next Procedure-1 stage.
    stage: u64,
    outputs: Vec<Formula>,
    first_index: HashMap<Formula, usize>,
    bell: Option<u64>,
    p2: Option<P2State>,
    /// `P_m` cache for the bell test of machine E.
    falsum_tc: bool,
}

struct P2State {
    base: Vec<Formula>,
    enumerator: FormulaEnumerator,
    /// Blocks processed (`s`) and formulas output (`t`).
    s: u64,
    t: u64,
}

impl BellMachine {
    pub fn new(kind: MachineKind, theory: ToyTheory) -> Result<Self, MachineError> {
        let resolved = match &kind {
            MachineKind::E => Resolved::E,
            MachineKind::F(c) => Resolved::F(diagonal::f_family(*c)?),
            MachineKind::G => Resolved::G(diagonal::g_family()?),
            MachineKind::H { theta, prefix } => {
                let Formula::Exists(v, delta) = theta else { return Err(MachineError::BadTheta(theta.to_string())) };
                if !crate::hierarchy::is_delta0(delta) || !theta.is_sentence() {
                    return Err(MachineError::BadTheta(theta.to_string()));
                }
                let sentences = diagonal::h_family(theta, prefix)?;
                Resolved::H { sentences, delta_var: *v, delta: (**delta).clone() }
            }
        };
        Ok(BellMachine {
            kind,
            resolved,
            stream: ProofStream::new(theory),
            stage: 0,
            outputs: Vec::new(),
            first_index: HashMap::new(),
            bell: None,
            p2: None,
            falsum_tc: false,
        })
    }

    pub fn kind(&self) -> &MachineKind {
        &self.kind
    }

    pub fn id(&self) -> MachineId {
        self.kind.id()
    }

    pub fn outputs(&self) -> &[Formula] {
        &self.outputs
    }

    pub fn bell(&self) -> Option<u64> {
        self.bell
    }

    pub fn k(&self) -> u64 {
        self.outputs.len() as u64
    }

    pub fn phase(&self) -> Phase {
        if self.bell.is_some() {
            Phase::P2
        } else {
            Phase::P1
        }
    }

    /// Procedure-2 cursor `(s, t)`.
    pub fn p2_cursor(&self) -> Option<(u64, u64)> {
        self.p2.as_ref().map(|p| (p.s, p.t))
    }

    fn append(&mut self, phi: Formula) {
        self.first_index.entry(phi.clone()).or_insert(self.outputs.len());
        self.outputs.push(phi);
    }

    fn output_before(&self, phi: &Formula) -> bool {
        self.first_index.contains_key(phi)
    }

    fn breach(&self, stage: u64, msg: impl Into<String>) -> MachineError {
        MachineError::Invariant { stage, msg: msg.into() }
    }

    /// Runs one Procedure-1 stage or one Procedure-2 block.
    pub fn step(&mut self) -> Result<StageRecord, MachineError> {
        if self.bell.is_some() {
            return self.step_p2();
        }
        let m = self.stage;
        self.stage += 1;
        let new_theorem = self.stream.new_theorem(m);
        let before = self.outputs.len();
        let (case, rang) = match &new_theorem {
            None => {
                if matches!(self.resolved, Resolved::E) && self.falsum_tc {
                    ("bell-tc".to_string(), true)
                } else {
                    ("none".to_string(), false)
                }
            }
            Some(phi) => self.dispatch(m, phi)?,
        };
        if rang {
            if self.bell.is_some() {
                return Err(self.breach(m, "bell rang twice"));
            }
            self.bell = Some(m);
            let base = self.stream.theorems_before(m);
            self.p2 = Some(P2State { base, enumerator: FormulaEnumerator::new(), s: 0, t: 0 });
        }
        Ok(StageRecord {
            stage: m,
            phase: Phase::P1,
            case,
            new_theorem,
            appended: self.outputs[before..].to_vec(),
            k: self.k(),
            bell: self.bell,
        })
    }

    fn dispatch(&mut self, m: u64, phi: &Formula) -> Result<(String, bool), MachineError> {
        match &self.resolved {
            Resolved::E => self.step_e(m, phi),
            Resolved::F(fs) => {
                let fs = fs.clone();
                self.step_f(m, phi, &fs)
            }
            Resolved::G(gs) => {
                let gs = gs.clone();
                self.step_g(m, phi, &gs)
            }
            Resolved::H { sentences, delta_var, delta } => {
                let (hs, v, d) = (sentences.clone(), *delta_var, delta.clone());
                self.step_h(m, phi, &hs, v, &d)
            }
        }
    }

    fn step_e(&mut self, m: u64, phi: &Formula) -> Result<(String, bool), MachineError> {
        let pm = self.stream.theorems_upto(m);
        self.falsum_tc = prop::tc(&pm, &Formula::falsum())?;
        if self.falsum_tc {
            return Ok(("bell-tc".to_string(), true));
        }
        if let Formula::Imp(premise, pi) = phi {
            if let Some(psis) = match_reflection_premises(MachineId::E, premise) {
                if all_distinct(&psis) && pi.is_sentence() && in_class(pi, HierarchyClass::pi(1)) {
                    let list = OutputList::from_formulas(&self.outputs);
                    let neg = Formula::negate((**pi).clone());
                    let witness = semantics::sigma1_witness(&neg, m, Some((MachineId::E, &list)))?;
                    if witness.is_some() {
                        return Ok(("i".to_string(), true));
                    }
                }
            }
        }
        self.append(phi.clone());
        Ok(("ii".to_string(), false))
    }

    fn check_rearrangement(&self, m: u64, items: &[Formula]) -> Result<Vec<Formula>, MachineError> {
        let r = rearrange_descending_length(items);
        if !rearrangement_ok(&r) {
            return Err(self.breach(m, "descending-length rearrangement produced phi'_i = !phi'_l"));
        }
        Ok(r)
    }

    fn step_f(&mut self, m: u64, phi: &Formula, fs: &FSentences) -> Result<(String, bool), MachineError> {
        let id = MachineId::F(fs.gamma);
        let pa = fs.pi_alpha();
        let sa = fs.sigma_alpha();
        let not = |f: &Formula| Formula::negate(f.clone());
        let sigma_case = fs.gamma.polarity == Polarity::Sigma;
        if sigma_case && (*phi == pa || *phi == not(&not(&pa))) {
            self.append(pa);
            self.append(sa);
            return Ok(("i".to_string(), true));
        }
        if !sigma_case && (*phi == pa || *phi == not(&not(&sa))) {
            self.append(pa);
            self.append(sa.clone());
            self.append(not(&not(&sa)));
            return Ok(("i'".to_string(), true));
        }
        if *phi == not(&pa) || *phi == not(&sa) {
            self.append(not(&pa));
            self.append(not(&sa));
            return Ok(("ii".to_string(), true));
        }
        if let Some(items) = match_negated_wc_block(id, phi) {
            let dual = fs.gamma.dual();
            if all_distinct(&items)
                && items.iter().all(|p| in_class(p, dual))
                && items.iter().all(|p| !self.output_before(p))
            {
                let r = self.check_rearrangement(m, &items)?;
                self.append(if sigma_case { not(&pa) } else { pa });
                for p in r {
                    self.append(not(&p));
                }
                return Ok((if sigma_case { "iii" } else { "iii'" }.to_string(), true));
            }
        }
        self.append(phi.clone());
        Ok(("iv".to_string(), false))
    }

    /// The class whose target `phi` concludes, with the premise formulas.
    fn match_target_implication(
        &self,
        id: MachineId,
        phi: &Formula,
        targets: &BTreeMap<HierarchyClass, Formula>,
        allow_empty: bool,
    ) -> Option<(HierarchyClass, Vec<Formula>)> {
        if allow_empty {
            if let Some((c, _)) = targets.iter().find(|(_, t)| *t == phi) {
                return Some((*c, Vec::new()));
            }
        }
        let Formula::Imp(premise, concl) = phi else { return None };
        let (c, _) = targets.iter().find(|(_, t)| *t == concl.as_ref())?;
        let items = match_reflection_premises(id, premise)?;
        let dual = c.dual();
        let ok = all_distinct(&items)
            && items.iter().all(|g| in_class(g, dual))
            && items.iter().all(|g| !self.output_before(g));
        ok.then_some((*c, items))
    }

    fn step_g(&mut self, m: u64, phi: &Formula, gs: &GSentences) -> Result<(String, bool), MachineError> {
        let targets: BTreeMap<HierarchyClass, Formula> =
            HierarchyClass::low_levels().into_iter().map(|c| (c, gs.psi_alpha(c))).collect();
        if let Some((c, items)) = self.match_target_implication(MachineId::G, phi, &targets, false) {
            if !items.is_empty() {
                let r = self.check_rearrangement(m, &items)?;
                self.append(gs.target_output(c));
                for g in r {
                    self.append(Formula::negate(g));
                }
                return Ok(("i".to_string(), true));
            }
        }
        let ba = gs.beta_alpha();
        let mut special = vec![ba.clone(), Formula::negate(ba)];
        special.extend(
            HierarchyClass::low_levels()
                .into_iter()
                .filter(|c| *c != HierarchyClass::sigma(1))
                .map(|c| Formula::negate(gs.psi_alpha(c))),
        );
        if special.contains(phi) {
            self.append(phi.clone());
            return Ok(("ii".to_string(), true));
        }
        self.append(phi.clone());
        Ok(("iii".to_string(), false))
    }

    fn step_h(
        &mut self,
        m: u64,
        phi: &Formula,
        hs: &HSentences,
        delta_var: u32,
        delta: &Formula,
    ) -> Result<(String, bool), MachineError> {
        let targets: BTreeMap<HierarchyClass, Formula> =
            HierarchyClass::low_levels().into_iter().map(|c| (c, hs.chi_alpha(c))).collect();
        if let Some((c, items)) = self.match_target_implication(MachineId::H, phi, &targets, true) {
            if self.guard_holds(delta_var, delta)? {
                let r = self.check_rearrangement(m, &items)?;
                self.append(hs.chi_alpha(c));
                for g in r {
                    self.append(Formula::negate(g));
                }
                return Ok(("i".to_string(), true));
            }
        }
        if targets.values().any(|t| *phi == Formula::negate(t.clone())) {
            self.append(phi.clone());
            return Ok(("ii".to_string(), true));
        }
        self.append(phi.clone());
        Ok(("iii".to_string(), false))
    }

    /// `A x <= k_m. !delta(x)`.
    fn guard_holds(&self, delta_var: u32, delta: &Formula) -> Result<bool, MachineError> {
        h_guard(delta_var, delta, self.k())
    }

    fn step_p2(&mut self) -> Result<StageRecord, MachineError> {
        let bell = self.bell.expect("procedure 2 follows the bell");
        let is_e = matches!(self.resolved, Resolved::E);
        let p2 = self.p2.as_mut().expect("procedure 2 state");
        let (_, xi) = p2.enumerator.next().expect("formula enumeration is infinite");
        let stage = bell + 1 + p2.s;
        let (case, block) = if is_e {
            let not_xi = Formula::negate(xi.clone());
            if prop::tc(&p2.base, &xi)? {
                ("i'", vec![xi])
            } else if prop::tc(&p2.base, &not_xi)? {
                ("ii'", vec![not_xi, xi])
            } else {
                let block: Vec<Formula> = (0..=bell + 1).map(|a| Formula::negations(xi.clone(), (bell + 1 - a) as usize)).collect();
                ("iii'", block)
            }
        } else {
            ("p2", vec![xi])
        };
        if case == "iii'" && block.len() as u64 != bell + 2 {
            return Err(self.breach(stage, "procedure-2 block has the wrong length"));
        }
        p2.s += 1;
        p2.t += block.len() as u64;
        let start = self.outputs.len();
        for phi in block {
            self.append(phi);
        }
        Ok(StageRecord {
            stage,
            phase: Phase::P2,
            case: case.to_string(),
            new_theorem: None,
            appended: self.outputs[start..].to_vec(),
            k: self.k(),
            bell: self.bell,
        })
    }
}

/// The guard of machine H: no `x <= k` satisfies `delta`.
pub fn h_guard(delta_var: u32, delta: &Formula, k: u64) -> Result<bool, MachineError> {
    for x in 0..=k {
        let env = [(delta_var, BigUint::from(x))].into_iter().collect();
        if eval_delta0(delta, &env)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs Procedure 1 for at most `stages` stages; after a bell, runs whole
/// Procedure-2 blocks until at least `p2_budget` formulas were output there.
pub fn run(kind: MachineKind, theory: ToyTheory, stages: u64, p2_budget: u64) -> Result<MachineTrace, MachineError> {
    if stages == 0 || p2_budget == 0 {
        return Err(MachineError::ZeroBudget);
    }
    let mut machine = BellMachine::new(kind, theory)?;
    let mut records = Vec::new();
    for _ in 0..stages {
        let rec = machine.step()?;
        records.push(rec);
        if machine.bell().is_some() {
            break;
        }
    }
    if machine.bell().is_some() {
        while machine.p2_cursor().map_or(0, |(_, t)| t) < p2_budget {
            records.push(machine.step()?);
        }
    }
    Ok(MachineTrace::new(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    #[test]
    fn rosser_on_small_lists() {
        let phi = f("0=0");
        let not_phi = Formula::negate(phi.clone());
        let rec = |appended: Vec<Formula>| StageRecord {
            stage: 0,
            phase: Phase::P1,
            case: "ii".into(),
            new_theorem: None,
            appended,
            k: 0,
            bell: None,
        };
        assert_eq!(MachineTrace::new(vec![rec(vec![not_phi.clone(), phi.clone()])]).rosser(&phi), Truth::False);
        assert_eq!(MachineTrace::new(vec![rec(vec![phi.clone(), not_phi])]).rosser(&phi), Truth::True);
        assert_eq!(MachineTrace::new(vec![rec(vec![])]).rosser(&phi), Truth::Unknown);
        assert_eq!(MachineTrace::new(vec![rec(vec![phi.clone()])]).pr(&phi), Truth::True);
    }

    #[test]
    fn e_on_incons_rings_at_ten() {
        let trace = run(MachineKind::E, ToyTheory::incons(), 100, 50).unwrap();
        assert_eq!(trace.bell_stage(), Some(10));
        let bell = trace.records.iter().find(|r| r.bell.is_some()).unwrap();
        assert_eq!(bell.case, "bell-tc");
        assert!(bell.appended.is_empty());
    }

    #[test]
    fn quiet_stage_changes_only_the_counter() {
        let mut machine = BellMachine::new(MachineKind::E, ToyTheory::sound()).unwrap();
        let r0 = machine.step().unwrap();
        assert_eq!(r0.appended, vec![Formula::verum()]);
        let r1 = machine.step().unwrap();
        assert_eq!(r1.case, "none");
        assert!(r1.appended.is_empty());
        assert_eq!(r1.k, r0.k);
    }

    #[test]
    fn f_sigma_case_ii_appends_two_negations() {
        let fs = diagonal::f_family(HierarchyClass::sigma(1)).unwrap();
        let trigger = Formula::negate(fs.pi_alpha());
        let theory = ToyTheory::sound().with_injections([(1, trigger)]).unwrap();
        let trace = run(MachineKind::F(HierarchyClass::sigma(1)), theory, 10, 5).unwrap();
        let bell = trace.records.iter().find(|r| r.bell.is_some()).unwrap();
        assert_eq!(bell.case, "ii");
        assert_eq!(bell.appended, vec![Formula::negate(fs.pi_alpha()), Formula::negate(fs.sigma_alpha())]);
    }

    #[test]
    fn rearrangement_orders_by_length() {
        let items = vec![f("0=0"), f("!!0=0"), f("Ax(x=x)")];
        let r = rearrange_descending_length(&items);
        assert_eq!(r[0], f("Ax(x=x)"));
        assert!(rearrangement_ok(&r));
        assert!(!rearrangement_ok(&[f("0=0"), f("!0=0")]));
    }

    #[test]
    fn jsonl_round_trip() {
        let trace = run(MachineKind::E, ToyTheory::incons(), 100, 20).unwrap();
        let text = trace.to_jsonl();
        let back = MachineTrace::from_jsonl(&text).unwrap();
        assert_eq!(back.records, trace.records);
        assert_eq!(back.to_jsonl(), text);
        assert!(text.lines().next().unwrap().starts_with("{\"stage\":0,\"phase\":\"P1\",\"case\":"));
    }

    #[test]
    fn shape_matchers_invert_builders() {
        let items = vec![f("Ax(x=x)"), f("0=0")];
        let blk = negated_wc_block(MachineId::G, &items);
        assert_eq!(match_negated_wc_block(MachineId::G, &blk), Some(items.clone()));
        let imp = reflection_implication(MachineId::E, &items, f("Ax(x=x)"));
        let Formula::Imp(p, _) = &imp else { panic!() };
        assert_eq!(match_reflection_premises(MachineId::E, p), Some(items));
    }
}
