//! Arithmetical hierarchy classes and syntactic classification.
//!
//! Classification computes, for every formula, the least `n` with the formula
//! in `Sigma_n` and the least `n` with it in `Pi_n`, following the inductive
//! closure clauses literally: no normalisation is applied first, so logically
//! equivalent formulas may land in different classes.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::diagonal;
use crate::formula::{Formula, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Polarity {
    Sigma,
    Pi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct HierarchyClass {
    pub polarity: Polarity,
    pub level: u32,
}

impl HierarchyClass {
    pub const fn sigma(level: u32) -> Self {
        HierarchyClass { polarity: Polarity::Sigma, level }
    }

    pub const fn pi(level: u32) -> Self {
        HierarchyClass { polarity: Polarity::Pi, level }
    }

    pub fn dual(self) -> Self {
        let polarity = match self.polarity {
            Polarity::Sigma => Polarity::Pi,
            Polarity::Pi => Polarity::Sigma,
        };
        HierarchyClass { polarity, level: self.level }
    }

    pub fn is_sigma(self) -> bool {
        self.polarity == Polarity::Sigma
    }

    /// Inclusion of the formula sets, as generated by the cumulative clause.
    pub fn is_subclass_of(self, other: HierarchyClass) -> bool {
        self.level == 0 || self.level < other.level || (self.level == other.level && self.polarity == other.polarity)
    }

    /// The four classes of levels one and two, in a fixed order.
    pub fn low_levels() -> [HierarchyClass; 4] {
        [Self::sigma(1), Self::pi(1), Self::sigma(2), Self::pi(2)]
    }
}

impl fmt::Display for HierarchyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarity {
            Polarity::Sigma => write!(f, "Sigma{}", self.level),
            Polarity::Pi => write!(f, "Pi{}", self.level),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown hierarchy class `{0}` (expected Sigma<n> or Pi<n>)")]
pub struct ParseClassError(pub String);

impl FromStr for HierarchyClass {
    type Err = ParseClassError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseClassError(s.to_string());
        let (polarity, digits) = if let Some(rest) = s.strip_prefix("Sigma") {
            (Polarity::Sigma, rest)
        } else if let Some(rest) = s.strip_prefix("Pi") {
            (Polarity::Pi, rest)
        } else {
            return Err(err());
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let level = digits.parse().map_err(|_| err())?;
        Ok(HierarchyClass { polarity, level })
    }
}

/// Minimal levels of a formula; `None` means the formula is in no class of
/// that polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Levels {
    sigma: Option<u32>,
    pi: Option<u32>,
}

impl Levels {
    const DELTA0: Levels = Levels { sigma: Some(0), pi: Some(0) };
    const NONE: Levels = Levels { sigma: None, pi: None };

    /// Applies the cumulative clause `Sigma_n u Pi_n <= Sigma_n+1 n Pi_n+1`.
    fn closed(sigma: Option<u32>, pi: Option<u32>) -> Levels {
        let up = |x: Option<u32>| x.map(|n| n + 1);
        Levels { sigma: min_opt(sigma, up(pi)), pi: min_opt(pi, up(sigma)) }
    }
}

fn min_opt(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn max_opt(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    Some(a?.max(b?))
}

fn at_least_one(a: Option<u32>) -> Option<u32> {
    a.map(|n| n.max(1))
}

/// True when every quantifier is bounded and no provability atom or
/// higher-level named sentence occurs.
pub fn is_delta0(phi: &Formula) -> bool {
    levels(phi) == Levels::DELTA0
}

fn levels(phi: &Formula) -> Levels {
    match phi {
        Formula::Eq(..) | Formula::Le(..) | Formula::Out(..) => Levels::DELTA0,
        Formula::Pr(..) => Levels::closed(Some(1), None),
        Formula::Named(name) => match diagonal::declared_class(name) {
            Some(c) if c.level == 0 => Levels::DELTA0,
            Some(c) if c.is_sigma() => Levels::closed(Some(c.level), None),
            Some(c) => Levels::closed(None, Some(c.level)),
            None => Levels::NONE,
        },
        Formula::Not(a) => {
            let la = levels(a);
            if la == Levels::DELTA0 {
                return Levels::DELTA0;
            }
            Levels::closed(la.pi, la.sigma)
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            let (la, lb) = (levels(a), levels(b));
            if la == Levels::DELTA0 && lb == Levels::DELTA0 {
                return Levels::DELTA0;
            }
            Levels::closed(max_opt(la.sigma, lb.sigma), max_opt(la.pi, lb.pi))
        }
        Formula::Imp(a, b) => {
            let (la, lb) = (levels(a), levels(b));
            if la == Levels::DELTA0 && lb == Levels::DELTA0 {
                return Levels::DELTA0;
            }
            Levels::closed(at_least_one(max_opt(la.pi, lb.sigma)), at_least_one(max_opt(la.sigma, lb.pi)))
        }
        Formula::Exists(_, body) => {
            let lb = levels(body);
            Levels::closed(at_least_one(lb.sigma), None)
        }
        Formula::Forall(_, body) => {
            let lb = levels(body);
            Levels::closed(None, at_least_one(lb.pi))
        }
        Formula::Bounded { body, .. } => {
            if levels(body) == Levels::DELTA0 {
                Levels::DELTA0
            } else {
                Levels::NONE
            }
        }
    }
}

/// Decides `phi` in `class` by the inductive clauses, reading provability
/// atoms as Sigma1 and named sentences by their declared class.
pub fn in_class(phi: &Formula, class: HierarchyClass) -> bool {
    let l = levels(phi);
    if class.level == 0 {
        return l == Levels::DELTA0;
    }
    let min = if class.is_sigma() { l.sigma } else { l.pi };
    min.is_some_and(|n| n <= class.level)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMembership {
    pub minimal_sigma: Option<u32>,
    pub minimal_pi: Option<u32>,
    /// Every class up to `level_cap` containing the formula.
    pub classes: BTreeSet<HierarchyClass>,
}

impl ClassMembership {
    /// The smallest classes, e.g. `["Pi1"]` or `["Sigma0"]` for a bounded formula.
    pub fn minimal_classes(&self) -> Vec<HierarchyClass> {
        match (self.minimal_sigma, self.minimal_pi) {
            (Some(0), _) | (_, Some(0)) => vec![HierarchyClass::sigma(0)],
            (Some(s), Some(p)) if s == p => vec![HierarchyClass::sigma(s), HierarchyClass::pi(p)],
            (Some(s), Some(p)) if s < p => vec![HierarchyClass::sigma(s)],
            (Some(_), Some(p)) => vec![HierarchyClass::pi(p)],
            (Some(s), None) => vec![HierarchyClass::sigma(s)],
            (None, Some(p)) => vec![HierarchyClass::pi(p)],
            (None, None) => vec![],
        }
    }
}

pub fn classify(phi: &Formula, level_cap: u32) -> ClassMembership {
    let l = levels(phi);
    let mut classes = BTreeSet::new();
    for n in 0..=level_cap {
        for c in [HierarchyClass::sigma(n), HierarchyClass::pi(n)] {
            if in_class(phi, c) {
                classes.insert(c);
            }
        }
    }
    ClassMembership { minimal_sigma: l.sigma, minimal_pi: l.pi, classes }
}

/// Membership in the Boolean combinations of Sigma_n formulas.
pub fn in_bool_combo_sigma(phi: &Formula, n: u32) -> bool {
    if in_class(phi, HierarchyClass::sigma(n)) || in_class(phi, HierarchyClass::pi(n)) {
        return true;
    }
    match phi {
        Formula::Not(a) => in_bool_combo_sigma(a, n),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
            in_bool_combo_sigma(a, n) && in_bool_combo_sigma(b, n)
        }
        _ => false,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("alpha sentences exist only for levels >= 1, got {0}")]
pub struct AlphaLevelError(pub HierarchyClass);

/// A logically valid sentence in `class` but not in its dual: a block of
/// alternating dummy quantifiers over `x0=x0`, innermost quantifier matching
/// the opposite polarity at each step.
///
/// `Pi1` gives `Ax0.(x0=x0)`, `Sigma2` gives `Ex1.Ax0.(x0=x0)`.
pub fn alpha(class: HierarchyClass) -> Result<Formula, AlphaLevelError> {
    if class.level == 0 {
        return Err(AlphaLevelError(class));
    }
    let x0 = Term::Var(0);
    let mut phi = Formula::eq(x0.clone(), x0);
    // Quantifiers from the inside out; the outermost one carries the class polarity.
    let mut universal = (class.level % 2 == 1) == (class.polarity == crate::hierarchy::Polarity::Pi);
    for v in 0..class.level {
        phi = if universal { Formula::forall(v, phi) } else { Formula::exists(v, phi) };
        universal = !universal;
    }
    Ok(phi)
}
