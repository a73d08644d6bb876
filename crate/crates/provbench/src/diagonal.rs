//! Named fixed points.
//!
//! A fixed point `phi <-> Phi(#phi)` is realised by a named sentence `@n`
//! whose one-step expansion is the template applied to `@n` itself. Since a
//! name has a fixed code, expansion is finite even when the template quotes
//! the sentence being defined.
//!
//! The registry is process-global and append-only. Registering the same name
//! twice with an identical expansion is allowed through
//! [`ensure_fixed_point`]; anything else under an existing name is rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use thiserror::Error;

use crate::formula::{provability, rosser_provability, wc_strict, wc_weak, Formula, MachineId, Name, Var};
use crate::godel::quote;
use crate::hierarchy::{alpha, in_class, HierarchyClass};

type BuildFn = dyn Fn(&Formula) -> Formula + Send + Sync;

/// How the body of a fixed point is obtained from the sentence itself.
#[derive(Clone)]
pub enum Template {
    /// A formula with one free variable standing for the code of the sentence.
    Hole { var: Var, body: Formula },
    /// An arbitrary construction receiving the named sentence `@n`; used when
    /// the quotation sits inside a larger compound such as `#(@n & alpha)`.
    Builder(Arc<BuildFn>),
}

impl Template {
    pub fn hole(var: Var, body: Formula) -> Self {
        Template::Hole { var, body }
    }

    pub fn builder(f: impl Fn(&Formula) -> Formula + Send + Sync + 'static) -> Self {
        Template::Builder(Arc::new(f))
    }

    /// The template applied to the given sentence.
    pub fn apply(&self, sentence: &Formula) -> Formula {
        match self {
            Template::Hole { var, body } => body.substitute(*var, &quote(sentence)),
            Template::Builder(f) => f(sentence),
        }
    }
}

impl fmt::Debug for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Template::Hole { var, body } => write!(f, "Hole(x{var}, {body})"),
            Template::Builder(_) => f.write_str("Builder(..)"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagonalError {
    #[error("sentence name `{0}` is already registered")]
    Duplicate(String),
    #[error("unknown sentence name `{0}`")]
    Unknown(String),
    #[error("invalid sentence name `{0}`")]
    InvalidName(String),
    #[error("expansion of `{name}` refers to unregistered sentence `{missing}`")]
    DanglingReference { name: String, missing: String },
    #[error("expansion of `{0}` mentions itself outside a quotation")]
    DirectSelfReference(String),
    #[error("expansion of `{name}` is not in its declared class {class}: {expansion}")]
    ClassMismatch { name: String, class: HierarchyClass, expansion: String },
}

#[derive(Clone, Debug)]
struct Entry {
    class: HierarchyClass,
    expansion: Formula,
}

fn registry() -> &'static RwLock<BTreeMap<Name, Entry>> {
    static REGISTRY: OnceLock<RwLock<BTreeMap<Name, Entry>>> = OnceLock::new();
    REGISTRY.get_or_init(|| RwLock::new(BTreeMap::new()))
}

fn lookup(name: &Name) -> Option<Entry> {
    registry().read().expect("registry lock").get(name).cloned()
}

pub fn is_registered(name: &Name) -> bool {
    registry().read().expect("registry lock").contains_key(name)
}

pub fn declared_class(name: &Name) -> Option<HierarchyClass> {
    lookup(name).map(|e| e.class)
}

/// One-step expansion; named subsentences stay named.
pub fn expand(name: &Name) -> Result<Formula, DiagonalError> {
    lookup(name).map(|e| e.expansion).ok_or_else(|| DiagonalError::Unknown(name.to_string()))
}

/// All registered names, sorted.
pub fn registered_names() -> Vec<Name> {
    registry().read().expect("registry lock").keys().cloned().collect()
}

fn prepare(template: &Template, name: &str, class: HierarchyClass) -> Result<(Name, Formula), DiagonalError> {
    let name = Name::new(name).map_err(|_| DiagonalError::InvalidName(name.to_string()))?;
    let me = Formula::Named(name.clone());
    let expansion = template.apply(&me);
    for r in expansion.named_refs() {
        if r == name {
            return Err(DiagonalError::DirectSelfReference(name.to_string()));
        }
        if !is_registered(&r) {
            return Err(DiagonalError::DanglingReference { name: name.to_string(), missing: r.to_string() });
        }
    }
    if !in_class(&expansion, class) {
        return Err(DiagonalError::ClassMismatch { name: name.to_string(), class, expansion: expansion.to_string() });
    }
    Ok((name, expansion))
}

/// Registers `name` with expansion `template(@name)` and declared class
/// `class`, returning the named sentence.
pub fn fixed_point(template: &Template, name: &str, class: HierarchyClass) -> Result<Formula, DiagonalError> {
    let (name, expansion) = prepare(template, name, class)?;
    let mut reg = registry().write().expect("registry lock");
    if reg.contains_key(&name) {
        return Err(DiagonalError::Duplicate(name.to_string()));
    }
    reg.insert(name.clone(), Entry { class, expansion });
    Ok(Formula::Named(name))
}

/// Like [`fixed_point`], but succeeds without change when `name` is already
/// registered with the same class and expansion.
pub fn ensure_fixed_point(template: &Template, name: &str, class: HierarchyClass) -> Result<Formula, DiagonalError> {
    let (name, expansion) = prepare(template, name, class)?;
    let mut reg = registry().write().expect("registry lock");
    match reg.get(&name) {
        Some(e) if e.class == class && e.expansion == expansion => {}
        Some(_) => return Err(DiagonalError::Duplicate(name.to_string())),
        None => {
            reg.insert(name.clone(), Entry { class, expansion });
        }
    }
    Ok(Formula::Named(name))
}

/// Registers one fixed point per requested class. `describe` gives, for each
/// class, the name, the template and the declared class of the sentence.
pub fn register_family<F>(classes: &[HierarchyClass], mut describe: F) -> Result<BTreeMap<HierarchyClass, Formula>, DiagonalError>
where
    F: FnMut(HierarchyClass) -> (String, Template, HierarchyClass),
{
    let mut out = BTreeMap::new();
    for &c in classes {
        let (name, template, declared) = describe(c);
        out.insert(c, ensure_fixed_point(&template, &name, declared)?);
    }
    Ok(out)
}

fn alpha_of(c: HierarchyClass) -> Formula {
    alpha(c).expect("families use levels >= 1")
}

/// The pair `(pi, sigma)` used by the machine for class `gamma`:
/// `pi <-> !R_f(pi & alpha_Pin)` and
/// `sigma <-> PR_f(!(pi & alpha_Pin)) <= PR_f(pi & alpha_Pin)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FSentences {
    pub gamma: HierarchyClass,
    pub pi: Formula,
    pub sigma: Formula,
    pub alpha_pi: Formula,
    pub alpha_sigma: Formula,
}

impl FSentences {
    pub fn pi_alpha(&self) -> Formula {
        Formula::and(self.pi.clone(), self.alpha_pi.clone())
    }

    pub fn sigma_alpha(&self) -> Formula {
        Formula::and(self.sigma.clone(), self.alpha_sigma.clone())
    }
}

pub fn f_family(gamma: HierarchyClass) -> Result<FSentences, DiagonalError> {
    let n = gamma.level;
    let m = MachineId::F(gamma);
    let alpha_pi = alpha_of(HierarchyClass::pi(n));
    let alpha_sigma = alpha_of(HierarchyClass::sigma(n));
    let a = alpha_pi.clone();
    let pi = ensure_fixed_point(
        &Template::builder(move |me| {
            Formula::negate(rosser_provability(m, &Formula::and(me.clone(), a.clone())))
        }),
        &format!("F_{gamma}_pi"),
        HierarchyClass::pi(1),
    )?;
    let pa = Formula::and(pi.clone(), alpha_pi.clone());
    let sigma = ensure_fixed_point(
        &Template::builder(move |_| {
            wc_weak(&provability(m, &Formula::negate(pa.clone())), &provability(m, &pa)).expect("machine atoms")
        }),
        &format!("F_{gamma}_sigma"),
        HierarchyClass::sigma(1),
    )?;
    Ok(FSentences { gamma, pi, sigma, alpha_pi, alpha_sigma })
}

/// `beta` and the sequence `psi_Gamma` for levels one and two.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GSentences {
    pub beta: Formula,
    pub psi: BTreeMap<HierarchyClass, Formula>,
}

impl GSentences {
    pub fn psi(&self, c: HierarchyClass) -> &Formula {
        &self.psi[&c]
    }

    /// `beta & alpha_Sigma1`.
    pub fn beta_alpha(&self) -> Formula {
        Formula::and(self.beta.clone(), alpha_of(HierarchyClass::sigma(1)))
    }

    /// `psi_Gamma & alpha_Gamma`.
    pub fn psi_alpha(&self, c: HierarchyClass) -> Formula {
        Formula::and(self.psi(c).clone(), alpha_of(c))
    }

    /// What the machine outputs first on a case (i) trigger for `c`.
    pub fn target_output(&self, c: HierarchyClass) -> Formula {
        if c == HierarchyClass::sigma(1) {
            self.beta_alpha()
        } else {
            self.psi_alpha(c)
        }
    }
}

pub fn g_family() -> Result<GSentences, DiagonalError> {
    let m = MachineId::G;
    let a1 = alpha_of(HierarchyClass::sigma(1));
    let beta = ensure_fixed_point(
        &Template::builder(move |me| {
            let ba = Formula::and(me.clone(), a1.clone());
            wc_weak(&provability(m, &Formula::negate(ba.clone())), &provability(m, &ba)).expect("machine atoms")
        }),
        "G_beta",
        HierarchyClass::sigma(1),
    )?;
    let beta_alpha = Formula::and(beta.clone(), alpha_of(HierarchyClass::sigma(1)));
    let psi = register_family(&HierarchyClass::low_levels(), |c| {
        let template = if c == HierarchyClass::sigma(1) {
            let ba = beta_alpha.clone();
            Template::builder(move |_| Formula::negate(rosser_provability(m, &ba)))
        } else {
            let a = alpha_of(c);
            Template::builder(move |me| Formula::negate(rosser_provability(m, &Formula::and(me.clone(), a.clone()))))
        };
        (format!("G_psi_{c}"), template, HierarchyClass::pi(1))
    })?;
    Ok(GSentences { beta, psi })
}

/// The sequence `chi_Gamma` for levels one and two, relative to a sentence `theta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HSentences {
    pub theta: Formula,
    pub chi: BTreeMap<HierarchyClass, Formula>,
}

impl HSentences {
    pub fn chi(&self, c: HierarchyClass) -> &Formula {
        &self.chi[&c]
    }

    pub fn chi_alpha(&self, c: HierarchyClass) -> Formula {
        Formula::and(self.chi(c).clone(), alpha_of(c))
    }
}

/// Registers `chi_Gamma` under `<prefix>_chi_<Gamma>`:
/// `chi_Sigma1 <-> (PR_h(!(chi & a)) | theta) < PR_h(chi & a)` and, for the
/// other classes, `chi <-> !(PR_h(chi & a) <= (PR_h(!(chi & a)) | theta))`.
pub fn h_family(theta: &Formula, prefix: &str) -> Result<HSentences, DiagonalError> {
    let m = MachineId::H;
    let chi = register_family(&HierarchyClass::low_levels(), |c| {
        let a = alpha_of(c);
        let th = theta.clone();
        let template = if c == HierarchyClass::sigma(1) {
            Template::builder(move |me| {
                let ca = Formula::and(me.clone(), a.clone());
                let left = Formula::or(provability(m, &Formula::negate(ca.clone())), th.clone());
                wc_strict(&left, &provability(m, &ca)).expect("existential arguments")
            })
        } else {
            Template::builder(move |me| {
                let ca = Formula::and(me.clone(), a.clone());
                let right = Formula::or(provability(m, &Formula::negate(ca.clone())), th.clone());
                Formula::negate(wc_weak(&provability(m, &ca), &right).expect("existential arguments"))
            })
        };
        let declared = if c == HierarchyClass::sigma(1) { HierarchyClass::sigma(1) } else { HierarchyClass::pi(1) };
        (format!("{prefix}_chi_{c}"), template, declared)
    })?;
    Ok(HSentences { theta: theta.clone(), chi })
}

/// `phi <-> !R_T(phi) & !R_T(!R_T(!phi))`, a Pi1 sentence over the proof
/// enumerator of the theory.
pub fn fp1() -> Result<Formula, DiagonalError> {
    let t = MachineId::T;
    ensure_fixed_point(
        &Template::builder(move |me| {
            let not_me = Formula::negate(me.clone());
            let inner = Formula::negate(rosser_provability(t, &not_me));
            Formula::and(Formula::negate(rosser_provability(t, me)), Formula::negate(rosser_provability(t, &inner)))
        }),
        "FP1_phi",
        HierarchyClass::pi(1),
    )
}

/// Registers every family used by the machines and scenarios. Idempotent.
pub fn register_standard_families() -> Result<(), DiagonalError> {
    for c in HierarchyClass::low_levels() {
        f_family(c)?;
    }
    g_family()?;
    h_family(&crate::theory::unsound_theta(), "H")?;
    fp1()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{match_witness_comparison, Term};
    use crate::godel::godel;

    #[test]
    fn constant_template_expands_to_itself() {
        let phi = fixed_point(&Template::hole(0, Formula::verum()), "diag_const", HierarchyClass::sigma(0)).unwrap();
        assert_eq!(expand(&Name::new("diag_const").unwrap()).unwrap(), Formula::verum());
        assert_eq!(godel(&phi), godel(&Formula::Named(Name::new("diag_const").unwrap())));
    }

    #[test]
    fn hole_receives_own_code() {
        let body = Formula::negate(Formula::Pr(MachineId::T, Term::Var(0)));
        let phi = fixed_point(&Template::hole(0, body), "diag_liar", HierarchyClass::pi(1)).unwrap();
        let e = expand(&Name::new("diag_liar").unwrap()).unwrap();
        assert_eq!(e, Formula::negate(provability(MachineId::T, &phi)));
    }

    #[test]
    fn duplicates_and_bad_classes_are_rejected() {
        let t = Template::hole(0, Formula::verum());
        fixed_point(&t, "diag_dup", HierarchyClass::sigma(0)).unwrap();
        assert!(matches!(fixed_point(&t, "diag_dup", HierarchyClass::sigma(0)), Err(DiagonalError::Duplicate(_))));
        assert!(ensure_fixed_point(&t, "diag_dup", HierarchyClass::sigma(0)).is_ok());
        let unbounded = Template::hole(0, Formula::forall(1, Formula::verum()));
        assert!(matches!(
            fixed_point(&unbounded, "diag_wrong", HierarchyClass::sigma(1)),
            Err(DiagonalError::ClassMismatch { .. })
        ));
        assert!(!is_registered(&Name::new("diag_wrong").unwrap()));
    }

    #[test]
    fn direct_self_reference_is_rejected() {
        let t = Template::builder(|me| Formula::negate(me.clone()));
        assert!(matches!(fixed_point(&t, "diag_loop", HierarchyClass::pi(1)), Err(DiagonalError::DirectSelfReference(_))));
    }

    #[test]
    fn f_family_shapes() {
        let fs = f_family(HierarchyClass::sigma(1)).unwrap();
        let Formula::Named(pn) = &fs.pi else { panic!() };
        let Formula::Named(sn) = &fs.sigma else { panic!() };
        let pe = expand(pn).unwrap();
        assert_eq!(pe, Formula::negate(rosser_provability(MachineId::F(HierarchyClass::sigma(1)), &fs.pi_alpha())));
        let se = expand(sn).unwrap();
        let (_, _, _, _, strict) = match_witness_comparison(&se).unwrap();
        assert!(!strict);
        assert_eq!(declared_class(sn), Some(HierarchyClass::sigma(1)));
    }

    #[test]
    fn h_sigma1_mentions_theta_on_the_left() {
        register_standard_families().unwrap();
        let hs = h_family(&crate::theory::unsound_theta(), "H").unwrap();
        let Formula::Named(n) = hs.chi(HierarchyClass::sigma(1)) else { panic!() };
        let e = expand(n).unwrap();
        let (_, left, _, _, strict) = match_witness_comparison(&e).unwrap();
        assert!(strict);
        assert!(matches!(left, Formula::Or(..)));
    }

    #[test]
    fn empty_family_request_is_empty() {
        let out = register_family(&[], |_| unreachable!()).unwrap();
        assert!(out.is_empty());
    }
}
