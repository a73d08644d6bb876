//! Toy recursively axiomatised theories.
//!
//! Stage `m` is read as a candidate proof:
//! * a scripted injection at `m` takes priority;
//! * `m = 2q` cites axiom (or admitted fact) number `q`;
//! * `m = 2p + 1` with `(i, j)` the Cantor unpairing of `p` applies modus
//!   ponens to the conclusions of stages `i` and `j`, when stage `j` proves
//!   `A -> B` and stage `i` proves `A`.
//!
//! Every stage has at most one conclusion, so at most one new theorem appears
//! per stage. The proof code of a stage is `pair(m, lines)` where `lines` is
//! the sequence code of the full derivation; it dominates every line code.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::formula::{numeral, provability, Formula, MachineId, Term};
use crate::godel::{cantor_unpair, godel, pair, sequence_code};
use crate::prop::{self, PropError};
use crate::syntax::{parse, ParseError};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TheoryId {
    Sound,
    Incons,
    Unsound,
    Custom(String),
}

impl fmt::Display for TheoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoryId::Sound => f.write_str("sound"),
            TheoryId::Incons => f.write_str("incons"),
            TheoryId::Unsound => f.write_str("unsound"),
            TheoryId::Custom(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("injection at stage {stage} collides with the citation of axiom {index}")]
    InjectionCollision { stage: u64, index: usize },
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("axioms and injections must be sentences: {0}")]
    NotASentence(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToyTheory {
    pub id: TheoryId,
    axioms: Vec<Formula>,
    facts: Vec<Formula>,
    injections: BTreeMap<u64, Formula>,
}

/// `Ex0.((x0*x0)=2)`: a false Sigma1 sentence, refuted by no finite check
/// but with no witness either.
pub fn unsound_theta() -> Formula {
    Formula::exists(0, Formula::eq(Term::mul(Term::Var(0), Term::Var(0)), numeral(2u32)))
}

fn canned(items: &[&str]) -> Vec<Formula> {
    items.iter().map(|s| parse(s).expect("canned axiom parses")).collect()
}

const SOUND_AXIOMS: [&str; 7] =
    ["0=0", "(0=0->1=1)", "Ax0.(x0=x0)", "(Ax0.(x0=x0)->0=0)", "Ex0.(x0=1)", "!0=1", "(1+1)=2"];

impl ToyTheory {
    pub fn new(
        id: TheoryId,
        axioms: Vec<Formula>,
        facts: Vec<Formula>,
        injections: BTreeMap<u64, Formula>,
    ) -> Result<Self, TheoryError> {
        for phi in axioms.iter().chain(&facts).chain(injections.values()) {
            if !phi.is_sentence() {
                return Err(TheoryError::NotASentence(phi.to_string()));
            }
        }
        let cited = (axioms.len() + facts.len()) as u64;
        for &stage in injections.keys() {
            if stage % 2 == 0 && stage / 2 < cited {
                return Err(TheoryError::InjectionCollision { stage, index: (stage / 2) as usize });
            }
        }
        Ok(ToyTheory { id, axioms, facts, injections })
    }

    /// True axioms of elementary arithmetic and logic.
    pub fn sound() -> Self {
        Self::new(TheoryId::Sound, canned(&SOUND_AXIOMS), Vec::new(), BTreeMap::new()).expect("valid")
    }

    /// `0=1` is axiom number 5, so it is cited at stage 10.
    pub fn incons() -> Self {
        let axioms = canned(&["0=0", "(0=0->1=1)", "Ax0.(x0=x0)", "(Ax0.(x0=x0)->0=0)", "Ex0.(x0=1)", "0=1", "(1+1)=2"]);
        Self::new(TheoryId::Incons, axioms, Vec::new(), BTreeMap::new()).expect("valid")
    }

    /// The sound axioms plus the false Sigma1 sentence [`unsound_theta`].
    pub fn unsound() -> Self {
        let mut axioms = canned(&SOUND_AXIOMS);
        axioms.push(unsound_theta());
        Self::new(TheoryId::Unsound, axioms, Vec::new(), BTreeMap::new()).expect("valid")
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "sound" => Some(Self::sound()),
            "incons" => Some(Self::incons()),
            "unsound" => Some(Self::unsound()),
            _ => None,
        }
    }

    /// A copy with extra scripted injections.
    pub fn with_injections(&self, extra: impl IntoIterator<Item = (u64, Formula)>) -> Result<Self, TheoryError> {
        let mut injections = self.injections.clone();
        injections.extend(extra);
        Self::new(self.id.clone(), self.axioms.clone(), self.facts.clone(), injections)
    }

    pub fn axioms(&self) -> &[Formula] {
        &self.axioms
    }

    pub fn facts(&self) -> &[Formula] {
        &self.facts
    }

    pub fn injections(&self) -> &BTreeMap<u64, Formula> {
        &self.injections
    }

    fn cited(&self, q: usize) -> Option<(Justification, &Formula)> {
        if q < self.axioms.len() {
            Some((Justification::Axiom(q), &self.axioms[q]))
        } else {
            let f = q - self.axioms.len();
            self.facts.get(f).map(|phi| (Justification::Fact(f), phi))
        }
    }

    /// Parses the plain-text theory format: one axiom per line, `fact <formula>`
    /// for admitted facts, `at_stage N inject <formula>` for scripted
    /// theorems, `#` comments and blank lines ignored.
    pub fn parse_file(name: &str, text: &str) -> Result<Self, TheoryError> {
        let mut axioms = Vec::new();
        let mut facts = Vec::new();
        let mut injections = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let parse_at = |s: &str| parse(s).map_err(|source| TheoryError::Parse { line, source });
            if let Some(rest) = content.strip_prefix("fact ") {
                facts.push(parse_at(rest)?);
            } else if let Some(rest) = content.strip_prefix("at_stage ") {
                let (num, tail) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| TheoryError::Syntax { line, msg: "expected `at_stage N inject <formula>`".into() })?;
                let stage: u64 =
                    num.parse().map_err(|_| TheoryError::Syntax { line, msg: format!("bad stage number `{num}`") })?;
                let formula = tail
                    .trim_start()
                    .strip_prefix("inject")
                    .ok_or_else(|| TheoryError::Syntax { line, msg: "expected `inject`".into() })?;
                injections.insert(stage, parse_at(formula)?);
            } else {
                axioms.push(parse_at(content)?);
            }
        }
        Self::new(TheoryId::Custom(name.to_string()), axioms, facts, injections)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    Axiom(usize),
    Fact(usize),
    ModusPonens { minor: u64, major: u64 },
    Injected,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofRecord {
    pub stage: u64,
    pub conclusion: Formula,
    pub justification: Justification,
    /// Full derivation, conclusion last.
    pub lines: Vec<Formula>,
}

impl ProofRecord {
    pub fn proof_code(&self) -> BigUint {
        let codes: Vec<BigUint> = self.lines.iter().map(godel).collect();
        pair(&BigUint::from(self.stage), &sequence_code(&codes))
    }
}

/// Incrementally decoded proofs of a theory, with the sets `P_m`.
#[derive(Clone, Debug)]
pub struct ProofStream {
    theory: ToyTheory,
    records: Vec<Option<ProofRecord>>,
    /// Theorems in order of first appearance, with their stage.
    theorems: Vec<(u64, Formula)>,
    seen: HashSet<Formula>,
}

impl ProofStream {
    pub fn new(theory: ToyTheory) -> Self {
        ProofStream { theory, records: Vec::new(), theorems: Vec::new(), seen: HashSet::new() }
    }

    pub fn theory(&self) -> &ToyTheory {
        &self.theory
    }

    fn extend_to(&mut self, m: u64) {
        while (self.records.len() as u64) <= m {
            let stage = self.records.len() as u64;
            let rec = self.decode_stage(stage);
            if let Some(r) = &rec {
                if self.seen.insert(r.conclusion.clone()) {
                    self.theorems.push((stage, r.conclusion.clone()));
                }
            }
            self.records.push(rec);
        }
    }

    fn decode_stage(&self, m: u64) -> Option<ProofRecord> {
        if let Some(phi) = self.theory.injections.get(&m) {
            return Some(ProofRecord { stage: m, conclusion: phi.clone(), justification: Justification::Injected, lines: vec![phi.clone()] });
        }
        if m % 2 == 0 {
            let (justification, phi) = self.theory.cited((m / 2) as usize)?;
            return Some(ProofRecord { stage: m, conclusion: phi.clone(), justification, lines: vec![phi.clone()] });
        }
        let (i, j) = cantor_unpair((m - 1) / 2);
        let minor = self.records.get(i as usize)?.as_ref()?;
        let major = self.records.get(j as usize)?.as_ref()?;
        let Formula::Imp(a, b) = &major.conclusion else { return None };
        if **a != minor.conclusion {
            return None;
        }
        let mut lines = minor.lines.clone();
        lines.extend(major.lines.iter().cloned());
        lines.push((**b).clone());
        Some(ProofRecord { stage: m, conclusion: (**b).clone(), justification: Justification::ModusPonens { minor: i, major: j }, lines })
    }

    pub fn decode_proof(&mut self, m: u64) -> Option<&ProofRecord> {
        self.extend_to(m);
        self.records[m as usize].as_ref()
    }

    /// The theorem that first appears at stage `m`, if any.
    pub fn new_theorem(&mut self, m: u64) -> Option<Formula> {
        self.extend_to(m);
        let idx = self.theorems.partition_point(|(s, _)| *s < m);
        self.theorems.get(idx).filter(|(s, _)| *s == m).map(|(_, phi)| phi.clone())
    }

    /// `P_m` in order of first appearance.
    pub fn theorems_upto(&mut self, m: u64) -> Vec<Formula> {
        self.extend_to(m);
        self.theorems.iter().take_while(|(s, _)| *s <= m).map(|(_, phi)| phi.clone()).collect()
    }

    /// `P_{m-1}`; empty for `m = 0`.
    pub fn theorems_before(&mut self, m: u64) -> Vec<Formula> {
        match m.checked_sub(1) {
            Some(p) => self.theorems_upto(p),
            None => Vec::new(),
        }
    }

    /// Membership in `P_m`, or tautological consequence of `P_m` when `tc_closed`.
    pub fn provable(&mut self, phi: &Formula, bound: u64, tc_closed: bool) -> Result<bool, PropError> {
        let set = self.theorems_upto(bound);
        if set.contains(phi) {
            return Ok(true);
        }
        if tc_closed {
            prop::tc(&set, phi)
        } else {
            Ok(false)
        }
    }
}

/// `Con^0 = 0=0`, `Con^{n+1} = !PR[T](#(!Con^n))`.
pub fn consistency_sentence(n: usize) -> Formula {
    (0..n).fold(Formula::verum(), |con, _| Formula::negate(provability(MachineId::T, &Formula::negate(con))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stage_convention() {
        let mut ps = ProofStream::new(ToyTheory::sound());
        assert!(ps.theorems_before(0).is_empty());
        assert_eq!(ps.theorems_upto(0), vec![Formula::verum()]);
    }

    #[test]
    fn axiom_citation_and_invalid_codes() {
        let mut ps = ProofStream::new(ToyTheory::sound());
        assert_eq!(ps.decode_proof(0).unwrap().conclusion, Formula::verum());
        assert!(ps.decode_proof(1000).is_none());
    }

    #[test]
    fn modus_ponens_stage() {
        let mut ps = ProofStream::new(ToyTheory::sound());
        // (i, j) = (0, 2): 0=0 and 0=0->1=1; Cantor pair 5, so stage 11.
        let rec = ps.decode_proof(11).unwrap().clone();
        assert_eq!(rec.conclusion, parse("1=1").unwrap());
        assert_eq!(rec.justification, Justification::ModusPonens { minor: 0, major: 2 });
        assert!(rec.lines.iter().all(|l| godel(l) < rec.proof_code()));
    }

    #[test]
    fn incons_cites_falsum_at_stage_ten() {
        let mut ps = ProofStream::new(ToyTheory::incons());
        assert_eq!(ps.new_theorem(10), Some(Formula::falsum()));
        assert!(ps.provable(&Formula::falsum(), 10, false).unwrap());
        assert!(!ps.provable(&Formula::falsum(), 9, true).unwrap());
    }

    #[test]
    fn consistency_iterates() {
        assert_eq!(consistency_sentence(0), Formula::verum());
        let c1 = consistency_sentence(1);
        assert_eq!(c1, Formula::negate(provability(MachineId::T, &Formula::negate(Formula::verum()))));
        let c2 = consistency_sentence(2);
        assert_eq!(c2, Formula::negate(provability(MachineId::T, &Formula::negate(c1))));
    }

    #[test]
    fn injections_cannot_shadow_axioms() {
        let t = ToyTheory::sound();
        assert!(matches!(t.with_injections([(4, Formula::falsum())]), Err(TheoryError::InjectionCollision { .. })));
        let ok = t.with_injections([(101, Formula::falsum())]).unwrap();
        let mut ps = ProofStream::new(ok);
        assert_eq!(ps.new_theorem(101), Some(Formula::falsum()));
    }

    #[test]
    fn theory_file_format() {
        let text = "# demo\n0=0\nfact Ax0.(x0=x0)\n\nat_stage 31 inject 0=1\n";
        let t = ToyTheory::parse_file("demo", text).unwrap();
        assert_eq!(t.axioms().len(), 1);
        assert_eq!(t.facts().len(), 1);
        assert_eq!(t.injections()[&31], Formula::falsum());
        assert!(ToyTheory::parse_file("bad", "at_stage x inject 0=0").is_err());
    }
}
