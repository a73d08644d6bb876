//! Concrete ASCII syntax: a bit-exact printer and a recursive-descent parser.
//!
//! Grammar (whitespace is insignificant between tokens):
//!
//! ```text
//! formula := disj [ "->" formula ]              implication, right associative
//! disj    := conj { "|" conj }
//! conj    := unary { "&" unary }
//! unary   := "!" unary
//!          | ("A" | "E") var [ ("<=" | "<") term ] [ "." ] unary
//!          | "PR" "[" machine "]" "(" term ")"
//!          | "OUT" "[" machine "]" "(" term "," term ")"
//!          | "@" name
//!          | term ("=" | "<=") term
//!          | "(" formula ")"
//! term    := prod { "+" prod }
//! prod    := base { "*" base }
//! base    := digits | var | "S" "(" term ")" | "(" term ")" | "#" "(" formula ")"
//! var     := "x" digits | "x" | "y" | "z" | "u" | "v" | "w"
//! machine := "E" | "G" | "H" | "T" | "F:" class
//! ```
//!
//! `#(phi)` denotes the numeral of the code of `phi`. The printer always emits
//! the fully parenthesised canonical form, so `print(parse(print(phi)))`
//! equals `print(phi)`.

use std::fmt::Write as _;

use num_bigint::BigUint;
use thiserror::Error;

use crate::diagonal;
use crate::formula::{BoundKind, Formula, MachineId, Name, Term, Var};
use crate::godel;

pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, t);
    out
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Num(n) => {
            let _ = write!(out, "{n}");
        }
        Term::Var(v) => {
            let _ = write!(out, "x{v}");
        }
        Term::Succ(a) => {
            out.push_str("S(");
            write_term(out, a);
            out.push(')');
        }
        Term::Add(a, b) | Term::Mul(a, b) => {
            out.push('(');
            write_term(out, a);
            out.push(if matches!(t, Term::Add(..)) { '+' } else { '*' });
            write_term(out, b);
            out.push(')');
        }
    }
}

pub fn print(phi: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, phi, false);
    out
}

/// `unit` is set when the formula follows a prefix operator, where atoms
/// are wrapped in parentheses to keep the output unambiguous.
fn write_formula(out: &mut String, phi: &Formula, unit: bool) {
    match phi {
        Formula::Eq(a, b) | Formula::Le(a, b) => {
            if unit {
                out.push('(');
            }
            write_term(out, a);
            out.push_str(if matches!(phi, Formula::Eq(..)) { "=" } else { "<=" });
            write_term(out, b);
            if unit {
                out.push(')');
            }
        }
        Formula::Not(a) => {
            out.push('!');
            write_formula(out, a, true);
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
            out.push('(');
            write_formula(out, a, false);
            out.push_str(match phi {
                Formula::And(..) => "&",
                Formula::Or(..) => "|",
                _ => "->",
            });
            write_formula(out, b, false);
            out.push(')');
        }
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let q = if matches!(phi, Formula::Forall(..)) { 'A' } else { 'E' };
            let _ = write!(out, "{q}x{v}.");
            write_formula(out, body, true);
        }
        Formula::Bounded { kind, var, bound, body } => {
            let q = if kind.is_universal() { 'A' } else { 'E' };
            let rel = if kind.is_strict() { "<" } else { "<=" };
            let _ = write!(out, "{q}x{var}{rel}");
            write_term(out, bound);
            out.push('.');
            write_formula(out, body, true);
        }
        Formula::Pr(m, t) => {
            let _ = write!(out, "PR[{m}](");
            write_term(out, t);
            out.push(')');
        }
        Formula::Out(m, i, t) => {
            let _ = write!(out, "OUT[{m}](");
            write_term(out, i);
            out.push(',');
            write_term(out, t);
            out.push(')');
        }
        Formula::Named(n) => {
            out.push('@');
            out.push_str(n.as_str());
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown machine id `{id}` at byte {pos}")]
    UnknownMachine { pos: usize, id: String },
    #[error("unknown sentence name `@{name}` at byte {pos}")]
    UnknownName { pos: usize, name: String },
}

/// How `@name` references are resolved while parsing.
#[derive(Clone, Copy, Debug)]
pub enum NamePolicy<'a> {
    /// Names must already be registered.
    Registered,
    /// Names must be registered or one of the listed extra names.
    RegisteredOr(&'a [&'a str]),
    /// Any syntactically valid name is accepted.
    Any,
}

/// Parses a formula, requiring every `@name` to be registered.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    parse_with(text, NamePolicy::Registered)
}

pub fn parse_with(text: &str, names: NamePolicy<'_>) -> Result<Formula, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, names };
    let phi = p.formula()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(phi)
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, names: NamePolicy::Registered };
    let t = p.term()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(t)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    names: NamePolicy<'a>,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{s}`")))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disj()?;
        if self.eat("->") {
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conj()?;
        while self.eat("|") {
            let rhs = self.conj()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.eat("&") {
            let rhs = self.unary()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(Formula::negate(self.unary()?))
            }
            Some(q @ (b'A' | b'E')) => {
                self.pos += 1;
                self.quantifier(q == b'A')
            }
            Some(b'@') => {
                self.pos += 1;
                self.named()
            }
            Some(b'P') if self.src[self.pos..].starts_with(b"PR[") => {
                self.pos += 2;
                let m = self.machine()?;
                self.expect("(")?;
                let t = self.term()?;
                self.expect(")")?;
                Ok(Formula::Pr(m, t))
            }
            Some(b'O') if self.src[self.pos..].starts_with(b"OUT[") => {
                self.pos += 3;
                let m = self.machine()?;
                self.expect("(")?;
                let i = self.term()?;
                self.expect(",")?;
                let t = self.term()?;
                self.expect(")")?;
                Ok(Formula::Out(m, i, t))
            }
            Some(b'(') => {
                let start = self.pos;
                match self.atom() {
                    Ok(phi) => Ok(phi),
                    Err(atom_err) => {
                        self.pos = start + 1;
                        match self.formula().and_then(|phi| self.expect(")").map(|_| phi)) {
                            Ok(phi) => Ok(phi),
                            Err(err) => Err(furthest(atom_err, err)),
                        }
                    }
                }
            }
            Some(_) => self.atom(),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn quantifier(&mut self, universal: bool) -> Result<Formula, ParseError> {
        let v = self.var()?.ok_or_else(|| self.error("expected a variable after quantifier"))?;
        let bound = if self.eat("<=") {
            Some((false, self.term()?))
        } else if self.eat("<") {
            Some((true, self.term()?))
        } else {
            None
        };
        self.eat(".");
        let body = self.unary()?;
        Ok(match (bound, universal) {
            (None, true) => Formula::forall(v, body),
            (None, false) => Formula::exists(v, body),
            (Some((strict, t)), _) => {
                let kind = match (universal, strict) {
                    (true, false) => BoundKind::ForallLe,
                    (false, false) => BoundKind::ExistsLe,
                    (true, true) => BoundKind::ForallLt,
                    (false, true) => BoundKind::ExistsLt,
                };
                Formula::bounded(kind, v, t, body)
            }
        })
    }

    fn named(&mut self) -> Result<Formula, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let name = Name::new(text).map_err(|_| ParseError::Syntax { pos: start, msg: "expected a sentence name".into() })?;
        let known = match self.names {
            NamePolicy::Any => true,
            NamePolicy::Registered => diagonal::is_registered(&name),
            NamePolicy::RegisteredOr(extra) => extra.contains(&text) || diagonal::is_registered(&name),
        };
        if !known {
            return Err(ParseError::UnknownName { pos: start, name: text.to_string() });
        }
        Ok(Formula::Named(name))
    }

    fn machine(&mut self) -> Result<MachineId, ParseError> {
        self.expect("[")?;
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos] != b']' {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii").trim().to_string();
        self.expect("]")?;
        text.parse().map_err(|_| ParseError::UnknownMachine { pos: start, id: text })
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.term()?;
        if self.eat("<=") {
            Ok(Formula::Le(lhs, self.term()?))
        } else if self.eat("=") {
            Ok(Formula::Eq(lhs, self.term()?))
        } else {
            Err(self.error("expected `=` or `<=`"))
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.prod()?;
        while self.eat("+") {
            acc = Term::add(acc, self.prod()?);
        }
        Ok(acc)
    }

    fn prod(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.base()?;
        while self.eat("*") {
            acc = Term::mul(acc, self.base()?);
        }
        Ok(acc)
    }

    fn base(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(b'0'..=b'9') => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                Ok(Term::Num(digits.parse::<BigUint>().expect("digits")))
            }
            Some(b'S') => {
                self.pos += 1;
                self.expect("(")?;
                let t = self.term()?;
                self.expect(")")?;
                Ok(Term::succ(t))
            }
            Some(b'(') => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(")")?;
                Ok(t)
            }
            Some(b'#') => {
                self.pos += 1;
                self.expect("(")?;
                let phi = self.formula()?;
                self.expect(")")?;
                Ok(godel::quote(&phi))
            }
            _ => match self.var()? {
                Some(v) => Ok(Term::Var(v)),
                None => Err(self.error("expected a term")),
            },
        }
    }

    fn var(&mut self) -> Result<Option<Var>, ParseError> {
        let Some(c) = self.peek() else { return Ok(None) };
        let alias = match c {
            b'x' => 0,
            b'y' => 1,
            b'z' => 2,
            b'u' => 3,
            b'v' => 4,
            b'w' => 5,
            _ => return Ok(None),
        };
        self.pos += 1;
        if c == b'x' {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos > start {
                let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                return digits
                    .parse::<Var>()
                    .map(Some)
                    .map_err(|_| ParseError::Syntax { pos: start, msg: "variable index too large".into() });
            }
        }
        Ok(Some(alias))
    }
}

fn position(e: &ParseError) -> usize {
    match e {
        ParseError::Syntax { pos, .. } | ParseError::UnknownMachine { pos, .. } | ParseError::UnknownName { pos, .. } => *pos,
    }
}

/// Reports whichever alternative got further, which is usually the intended one.
fn furthest(a: ParseError, b: ParseError) -> ParseError {
    let semantic = |e: &ParseError| !matches!(e, ParseError::Syntax { .. });
    if semantic(&b) || (!semantic(&a) && position(&b) >= position(&a)) {
        b
    } else {
        a
    }
}

/// Canonical form of a formula text: `print(parse(text))`.
pub fn normalize(text: &str) -> Result<String, ParseError> {
    Ok(print(&parse(text)?))
}
