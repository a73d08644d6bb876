//! Evaluation over the standard model.
//!
//! Three entry points:
//! * [`eval_delta0`] decides bounded formulas exactly;
//! * [`sigma1_witness`] finds the least witness of a Sigma1 sentence after
//!   collapsing its existential block with Cantor pairing;
//! * [`Evaluator`] gives a three-valued, monotone verdict for arbitrary
//!   sentences, consulting machine output lists for `PR`/`OUT` atoms.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::diagonal;
use crate::formula::{fresh_var, match_witness_comparison, BoundKind, Formula, MachineId, Term, Var};
use crate::godel::cantor_split;
use crate::hierarchy::is_delta0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    pub fn is_true(self) -> bool {
        self == Truth::True
    }

    pub fn is_false(self) -> bool {
        self == Truth::False
    }

    pub fn not(self) -> Self {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }

    pub fn and(self, other: Truth) -> Self {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    pub fn or(self, other: Truth) -> Self {
        self.not().and(other.not()).not()
    }

    pub fn implies(self, other: Truth) -> Self {
        self.not().or(other)
    }
}

impl std::fmt::Display for Truth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Truth::True => "True",
            Truth::False => "False",
            Truth::Unknown => "Unknown",
        })
    }
}

/// What is known about the output sequence of one machine.
pub trait OutputOracle {
    /// Number of outputs known so far.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Code of the `i`-th output, when known.
    fn code_at(&self, i: usize) -> Option<&BigUint>;

    /// Index of the first output with this code, when known.
    fn first_index(&self, code: &BigUint) -> Option<usize>;

    /// True when the code is certified never to be output.
    fn never_output(&self, _code: &BigUint) -> bool {
        false
    }

    /// True when the sequence ends after the known outputs.
    fn is_complete(&self) -> bool {
        false
    }
}

/// A finite prefix of an output sequence, optionally certifying that every
/// absent code up to some value will never appear.
#[derive(Clone, Debug, Default)]
pub struct OutputList {
    codes: Vec<BigUint>,
    first: HashMap<BigUint, usize>,
    certified_upto: Option<BigUint>,
    complete: bool,
}

impl OutputList {
    pub fn new(codes: Vec<BigUint>) -> Self {
        let mut first = HashMap::new();
        for (i, c) in codes.iter().enumerate() {
            first.entry(c.clone()).or_insert(i);
        }
        OutputList { codes, first, certified_upto: None, complete: false }
    }

    pub fn from_formulas(items: &[Formula]) -> Self {
        Self::new(items.iter().map(crate::godel::godel).collect())
    }

    /// Declares that codes `<= cap` absent from the list never appear.
    pub fn with_certified_upto(mut self, cap: BigUint) -> Self {
        self.certified_upto = Some(cap);
        self
    }

    /// Declares that nothing follows the listed outputs.
    pub fn completed(mut self) -> Self {
        self.complete = true;
        self
    }

    pub fn codes(&self) -> &[BigUint] {
        &self.codes
    }
}

impl OutputOracle for OutputList {
    fn len(&self) -> usize {
        self.codes.len()
    }

    fn code_at(&self, i: usize) -> Option<&BigUint> {
        self.codes.get(i)
    }

    fn first_index(&self, code: &BigUint) -> Option<usize> {
        self.first.get(code).copied()
    }

    fn never_output(&self, code: &BigUint) -> bool {
        !self.first.contains_key(code) && (self.complete || self.certified_upto.as_ref().is_some_and(|cap| code <= cap))
    }

    fn is_complete(&self) -> bool {
        self.complete
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbounded quantifier in a formula that must be bounded: {0}")]
    UnboundedQuantifier(String),
    #[error("free variable x{0} is not covered by the environment")]
    UncoveredVariable(Var),
    #[error("machine atom for {0} needs an output trace")]
    MachineAtomWithoutTrace(MachineId),
    #[error("named sentence @{0} cannot be evaluated here")]
    NamedSentence(String),
    #[error("bounded quantifier range {0} exceeds the loop cap")]
    BoundTooLarge(BigUint),
    #[error("formula is not a Sigma1 sentence: {0}")]
    NotSigma1(String),
    #[error("value undetermined by the supplied trace: {0}")]
    Undetermined(String),
}

/// Variable environment as a stack; later bindings shadow earlier ones.
pub type Env = Vec<(Var, BigUint)>;

fn lookup(env: &Env, v: Var) -> Option<&BigUint> {
    env.iter().rev().find(|(w, _)| *w == v).map(|(_, n)| n)
}

pub fn eval_term(t: &Term, env: &Env) -> Result<BigUint, EvalError> {
    Ok(match t {
        Term::Num(n) => n.clone(),
        Term::Var(v) => lookup(env, *v).cloned().ok_or(EvalError::UncoveredVariable(*v))?,
        Term::Succ(a) => eval_term(a, env)? + 1u32,
        Term::Add(a, b) => eval_term(a, env)? + eval_term(b, env)?,
        Term::Mul(a, b) => eval_term(a, env)? * eval_term(b, env)?,
    })
}

/// Largest range a bounded quantifier may sweep.
pub const DEFAULT_LOOP_CAP: u64 = 1 << 20;

/// Three-valued evaluator.
///
/// Unbounded quantifiers are searched up to `bound`: a witness (for `E`) or a
/// counterexample (for `A`) settles the value, otherwise it is `Unknown`.
/// A witness comparison is additionally refuted when the right-hand side has
/// a witness and the left-hand side is false everywhere before it. Formulas
/// in the assumed set count as true.
pub struct Evaluator<'a> {
    pub bound: u64,
    pub loop_cap: u64,
    machines: BTreeMap<MachineId, &'a dyn OutputOracle>,
    assumed: BTreeSet<Formula>,
}

impl<'a> Evaluator<'a> {
    pub fn new(bound: u64) -> Self {
        Evaluator { bound, loop_cap: DEFAULT_LOOP_CAP, machines: BTreeMap::new(), assumed: BTreeSet::new() }
    }

    pub fn with_machine(mut self, m: MachineId, oracle: &'a dyn OutputOracle) -> Self {
        self.machines.insert(m, oracle);
        self
    }

    /// Treat `phi` as true wherever it occurs.
    pub fn assume(mut self, phi: Formula) -> Self {
        self.assumed.insert(phi);
        self
    }

    pub fn eval(&self, phi: &Formula) -> Truth {
        self.eval_in(phi, &mut Vec::new())
    }

    pub fn eval_in(&self, phi: &Formula, env: &mut Env) -> Truth {
        if self.assumed.contains(phi) {
            return Truth::True;
        }
        match phi {
            Formula::Eq(a, b) => self.compare(a, b, env, |x, y| x == y),
            Formula::Le(a, b) => self.compare(a, b, env, |x, y| x <= y),
            Formula::Not(a) => self.eval_in(a, env).not(),
            Formula::And(a, b) => {
                let l = self.eval_in(a, env);
                if l.is_false() {
                    return Truth::False;
                }
                l.and(self.eval_in(b, env))
            }
            Formula::Or(a, b) => {
                let l = self.eval_in(a, env);
                if l.is_true() {
                    return Truth::True;
                }
                l.or(self.eval_in(b, env))
            }
            Formula::Imp(a, b) => {
                let l = self.eval_in(a, env);
                if l.is_false() {
                    return Truth::True;
                }
                l.implies(self.eval_in(b, env))
            }
            Formula::Exists(v, body) => {
                if let Some(len) = self.complete_index_range(*v, body) {
                    return self.eval_bounded_quantifier(BoundKind::ExistsLt, *v, &Term::Num(len.into()), body, env);
                }
                if (0..=self.bound).any(|n| self.with_binding(env, *v, n, |env| self.eval_in(body, env)).is_true()) {
                    return Truth::True;
                }
                self.refute_witness_comparison(phi, env)
            }
            Formula::Forall(v, body) => {
                if (0..=self.bound).any(|n| self.with_binding(env, *v, n, |env| self.eval_in(body, env)).is_false()) {
                    Truth::False
                } else {
                    Truth::Unknown
                }
            }
            Formula::Bounded { kind, var, bound, body } => self.eval_bounded_quantifier(*kind, *var, bound, body, env),
            Formula::Pr(m, t) => {
                let Some(oracle) = self.machines.get(m) else { return Truth::Unknown };
                let Ok(code) = eval_term(t, env) else { return Truth::Unknown };
                if oracle.first_index(&code).is_some() {
                    Truth::True
                } else if oracle.never_output(&code) {
                    Truth::False
                } else {
                    Truth::Unknown
                }
            }
            Formula::Out(m, i, t) => {
                let Some(oracle) = self.machines.get(m) else { return Truth::Unknown };
                let (Ok(i), Ok(code)) = (eval_term(i, env), eval_term(t, env)) else { return Truth::Unknown };
                match i.to_usize().and_then(|i| oracle.code_at(i)) {
                    Some(c) => Truth::from_bool(*c == code),
                    None if oracle.is_complete() => Truth::False,
                    None => Truth::Unknown,
                }
            }
            Formula::Named(n) => match diagonal::expand(n) {
                Ok(e) => self.eval_in(&e, env),
                Err(_) => Truth::Unknown,
            },
        }
    }

    /// When `body` is a conjunction with a conjunct `OUT[M](v, t)` and the
    /// output list of `M` is complete, `body` is false for every `v` past the
    /// end of that list.
    fn complete_index_range(&self, v: Var, body: &Formula) -> Option<u64> {
        body.conjuncts().into_iter().find_map(|c| match c {
            Formula::Out(m, Term::Var(w), _) if *w == v => {
                let oracle = self.machines.get(m)?;
                oracle.is_complete().then(|| oracle.len() as u64)
            }
            _ => None,
        })
    }

    fn compare(&self, a: &Term, b: &Term, env: &Env, op: fn(&BigUint, &BigUint) -> bool) -> Truth {
        match (eval_term(a, env), eval_term(b, env)) {
            (Ok(x), Ok(y)) => Truth::from_bool(op(&x, &y)),
            _ => Truth::Unknown,
        }
    }

    fn with_binding<R>(&self, env: &mut Env, v: Var, n: u64, f: impl FnOnce(&mut Env) -> R) -> R {
        env.push((v, BigUint::from(n)));
        let r = f(env);
        env.pop();
        r
    }

    fn eval_bounded_quantifier(&self, kind: BoundKind, var: Var, bound: &Term, body: &Formula, env: &mut Env) -> Truth {
        let Ok(b) = eval_term(bound, env) else { return Truth::Unknown };
        let (end, truncated) = match b.to_u64() {
            Some(b) if b < self.loop_cap => (b, false),
            _ => (self.loop_cap, true),
        };
        // Range is 0..=end for <=, 0..end for <.
        let range: Box<dyn Iterator<Item = u64>> =
            if kind.is_strict() && !truncated { Box::new(0..end) } else { Box::new(0..=end) };
        let universal = kind.is_universal();
        let mut all_decided = !truncated;
        for n in range {
            match self.with_binding(env, var, n, |env| self.eval_in(body, env)) {
                Truth::True if !universal => return Truth::True,
                Truth::False if universal => return Truth::False,
                Truth::Unknown => all_decided = false,
                _ => {}
            }
        }
        if all_decided {
            Truth::from_bool(universal)
        } else {
            Truth::Unknown
        }
    }

    /// `Ex(L(x) & A y<=x. !R(y))` is false once some `y0` has `R(y0)` and
    /// `L(x)` is false for every `x < y0` (every `x <= y0` for the weak form).
    fn refute_witness_comparison(&self, phi: &Formula, env: &mut Env) -> Truth {
        let Some((x, left, y, right, strict)) = match_witness_comparison(phi) else { return Truth::Unknown };
        let Some(y0) = (0..=self.bound).find(|&n| self.with_binding(env, y, n, |env| self.eval_in(right, env)).is_true())
        else {
            return Truth::Unknown;
        };
        let limit = if strict { y0 } else { y0 + 1 };
        let left_false = (0..limit).all(|n| self.with_binding(env, x, n, |env| self.eval_in(left, env)).is_false());
        if left_false {
            Truth::False
        } else {
            Truth::Unknown
        }
    }
}

/// Three-valued evaluation with a search bound and an optional output list
/// for one machine.
pub fn eval_bounded(phi: &Formula, bound: u64, trace: Option<(MachineId, &dyn OutputOracle)>) -> Truth {
    let mut ev = Evaluator::new(bound);
    if let Some((m, oracle)) = trace {
        ev = ev.with_machine(m, oracle);
    }
    ev.eval(phi)
}

fn check_delta0_shape(phi: &Formula, bound_vars: &mut Vec<Var>, env: &Env, has_trace: &dyn Fn(MachineId) -> bool) -> Result<(), EvalError> {
    let check_term = |t: &Term, bound_vars: &Vec<Var>| -> Result<(), EvalError> {
        for v in t.free_vars() {
            if !bound_vars.contains(&v) && lookup(env, v).is_none() {
                return Err(EvalError::UncoveredVariable(v));
            }
        }
        Ok(())
    };
    match phi {
        Formula::Eq(a, b) | Formula::Le(a, b) => {
            check_term(a, bound_vars)?;
            check_term(b, bound_vars)
        }
        Formula::Not(a) => check_delta0_shape(a, bound_vars, env, has_trace),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
            check_delta0_shape(a, bound_vars, env, has_trace)?;
            check_delta0_shape(b, bound_vars, env, has_trace)
        }
        Formula::Forall(..) | Formula::Exists(..) => Err(EvalError::UnboundedQuantifier(phi.to_string())),
        Formula::Bounded { var, bound, body, .. } => {
            check_term(bound, bound_vars)?;
            bound_vars.push(*var);
            let r = check_delta0_shape(body, bound_vars, env, has_trace);
            bound_vars.pop();
            r
        }
        Formula::Pr(m, _) => {
            if has_trace(*m) {
                Err(EvalError::UnboundedQuantifier(phi.to_string()))
            } else {
                Err(EvalError::MachineAtomWithoutTrace(*m))
            }
        }
        Formula::Out(m, a, b) => {
            if !has_trace(*m) {
                return Err(EvalError::MachineAtomWithoutTrace(*m));
            }
            check_term(a, bound_vars)?;
            check_term(b, bound_vars)
        }
        Formula::Named(n) => Err(EvalError::NamedSentence(n.to_string())),
    }
}

/// Decides a bounded formula in the standard model.
pub fn eval_delta0(phi: &Formula, env: &BTreeMap<Var, BigUint>) -> Result<bool, EvalError> {
    eval_delta0_with(phi, env, None)
}

/// As [`eval_delta0`], with `OUT` atoms of one machine read from a trace;
/// an output index beyond the trace is an error.
pub fn eval_delta0_with(
    phi: &Formula,
    env: &BTreeMap<Var, BigUint>,
    trace: Option<(MachineId, &dyn OutputOracle)>,
) -> Result<bool, EvalError> {
    let stack: Env = env.iter().map(|(v, n)| (*v, n.clone())).collect();
    let has_trace = |m: MachineId| trace.is_some_and(|(t, _)| t == m);
    check_delta0_shape(phi, &mut Vec::new(), &stack, &has_trace)?;
    let mut ev = Evaluator::new(0);
    if let Some((m, oracle)) = trace {
        ev = ev.with_machine(m, oracle);
    }
    check_ranges(phi, &mut stack.clone(), ev.loop_cap)?;
    match ev.eval_in(phi, &mut stack.clone()) {
        Truth::True => Ok(true),
        Truth::False => Ok(false),
        Truth::Unknown => Err(EvalError::Undetermined(phi.to_string())),
    }
}

/// Rejects bounded quantifiers whose range exceeds the loop cap, which the
/// three-valued evaluator would otherwise truncate.
fn check_ranges(phi: &Formula, env: &mut Env, cap: u64) -> Result<(), EvalError> {
    match phi {
        Formula::Not(a) => check_ranges(a, env, cap),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
            check_ranges(a, env, cap)?;
            check_ranges(b, env, cap)
        }
        Formula::Bounded { bound, body, var, .. } => {
            let free: BTreeSet<Var> = bound.free_vars();
            if free.iter().all(|v| lookup(env, *v).is_some()) {
                let b = eval_term(bound, env)?;
                if b >= BigUint::from(cap) {
                    return Err(EvalError::BoundTooLarge(b));
                }
            }
            // Inner bounds may depend on the bound variable; check them at the top value.
            let top = eval_term(bound, env).ok();
            if let Some(top) = top {
                env.push((*var, top));
                let r = check_ranges(body, env, cap);
                env.pop();
                r
            } else {
                check_ranges(body, env, cap)
            }
        }
        _ => Ok(()),
    }
}

/// Normal form `E v1..vk. matrix` of a Sigma1 formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sigma1Normal {
    pub vars: Vec<Var>,
    pub matrix: Formula,
}

fn is_plain_delta0(phi: &Formula) -> bool {
    let mut named = false;
    phi.for_each_subformula(&mut |g| named |= matches!(g, Formula::Named(_)));
    !named && is_delta0(phi)
}

/// Collapses a Sigma1 formula to an existential block over a bounded matrix:
/// negations are pushed inward, implications rewritten, named sentences
/// expanded, `PR[M](t)` read as `Ey OUT[M](y,t)`, and blocks of binary
/// connectives renamed apart and concatenated.
pub fn sigma1_normalize(phi: &Formula) -> Result<Sigma1Normal, EvalError> {
    let mut avoid = BTreeSet::new();
    collect_all_vars(phi, &mut avoid);
    let mut used = avoid;
    normalize(phi, true, &mut used)
}

fn collect_all_vars(phi: &Formula, out: &mut BTreeSet<Var>) {
    phi.for_each_subformula(&mut |g| match g {
        Formula::Forall(v, _) | Formula::Exists(v, _) => {
            out.insert(*v);
        }
        Formula::Bounded { var, bound, .. } => {
            out.insert(*var);
            bound.free_vars_into(out);
        }
        Formula::Eq(a, b) | Formula::Le(a, b) | Formula::Out(_, a, b) => {
            a.free_vars_into(out);
            b.free_vars_into(out);
        }
        Formula::Pr(_, t) => t.free_vars_into(out),
        _ => {}
    });
}

fn fresh(used: &mut BTreeSet<Var>) -> Var {
    let v = fresh_var(used);
    used.insert(v);
    v
}

fn normalize(phi: &Formula, positive: bool, used: &mut BTreeSet<Var>) -> Result<Sigma1Normal, EvalError> {
    let not_sigma1 = || EvalError::NotSigma1(phi.to_string());
    if is_plain_delta0(phi) {
        let matrix = if positive { phi.clone() } else { Formula::negate(phi.clone()) };
        return Ok(Sigma1Normal { vars: Vec::new(), matrix });
    }
    let combine = |a: Sigma1Normal, b: Sigma1Normal, conj: bool| {
        let mut vars = a.vars;
        vars.extend(b.vars);
        let matrix = if conj { Formula::and(a.matrix, b.matrix) } else { Formula::or(a.matrix, b.matrix) };
        Sigma1Normal { vars, matrix }
    };
    match (phi, positive) {
        (Formula::Not(a), _) => normalize(a, !positive, used),
        (Formula::And(a, b), true) | (Formula::Or(a, b), false) => {
            Ok(combine(normalize(a, positive, used)?, normalize(b, positive, used)?, true))
        }
        (Formula::Or(a, b), true) | (Formula::And(a, b), false) => {
            Ok(combine(normalize(a, positive, used)?, normalize(b, positive, used)?, false))
        }
        (Formula::Imp(a, b), true) => Ok(combine(normalize(a, false, used)?, normalize(b, true, used)?, false)),
        (Formula::Imp(a, b), false) => Ok(combine(normalize(a, true, used)?, normalize(b, false, used)?, true)),
        (Formula::Exists(v, body), true) | (Formula::Forall(v, body), false) => {
            let w = fresh(used);
            let renamed = body.substitute(*v, &Term::Var(w));
            let inner = normalize(&renamed, positive, used)?;
            let mut vars = vec![w];
            vars.extend(inner.vars);
            Ok(Sigma1Normal { vars, matrix: inner.matrix })
        }
        (Formula::Pr(m, t), true) => {
            let w = fresh(used);
            Ok(Sigma1Normal { vars: vec![w], matrix: Formula::Out(*m, Term::Var(w), t.clone()) })
        }
        (Formula::Named(n), _) => {
            let e = diagonal::expand(n).map_err(|_| not_sigma1())?;
            normalize(&e, positive, used)
        }
        _ => Err(not_sigma1()),
    }
}

/// Least `r <= bound` such that the matrix holds at the tuple coded by `r`
/// (nested Cantor unpairing over the existential block). Matrix values left
/// undetermined by the trace do not count as witnesses.
pub fn sigma1_witness(
    sigma: &Formula,
    bound: u64,
    trace: Option<(MachineId, &dyn OutputOracle)>,
) -> Result<Option<u64>, EvalError> {
    if !sigma.is_sentence() {
        return Err(EvalError::NotSigma1(sigma.to_string()));
    }
    let normal = sigma1_normalize(sigma)?;
    let mut ev = Evaluator::new(0);
    if let Some((m, oracle)) = trace {
        ev = ev.with_machine(m, oracle);
    }
    let has_trace = |m: MachineId| trace.is_some_and(|(t, _)| t == m);
    let outer: Env = normal.vars.iter().map(|v| (*v, BigUint::zero())).collect();
    check_delta0_shape(&normal.matrix, &mut Vec::new(), &outer, &has_trace)?;
    let k = normal.vars.len();
    let upper = if k == 0 { 0 } else { bound };
    for r in 0..=upper {
        let mut env: Env = normal.vars.iter().copied().zip(cantor_split(r, k).into_iter().map(BigUint::from)).collect();
        if ev.eval_in(&normal.matrix, &mut env).is_true() {
            return Ok(Some(r));
        }
    }
    Ok(None)
}
