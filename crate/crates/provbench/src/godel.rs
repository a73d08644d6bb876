//! Gödel coding of terms, formulas and finite sequences.
//!
//! Pairing is length-prefixed bit concatenation:
//! `pair(a, b)` is the number whose binary expansion is `1`, then the Elias
//! gamma code of `bitlen(a) + 1`, then the bits of `a`, then the bits of `b`.
//! It is injective, strictly increasing in both arguments and strictly larger
//! than both arguments, and it keeps codes polynomial in formula size (no
//! exponential blow-up as with Cantor pairing on nested structures).
//!
//! Terms use tags modulo 5 and formulas tags modulo 15, so every proper
//! subterm or subformula has a strictly smaller code.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::formula::{BoundKind, Formula, MachineId, Name, Term, Var};
use crate::hierarchy::{HierarchyClass, Polarity};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("{0} is not a pair code")]
    NotAPair(BigUint),
    #[error("{0} is not a term code")]
    NotATerm(BigUint),
    #[error("{0} is not a formula code")]
    NotAFormula(BigUint),
    #[error("{0} is not a machine code")]
    NotAMachine(BigUint),
    #[error("{0} is not a name code")]
    NotAName(BigUint),
}

fn bits_msb_first(n: &BigUint) -> Vec<bool> {
    let len = n.bits();
    (0..len).rev().map(|i| n.bit(i)).collect()
}

fn push_bits(out: &mut Vec<bool>, n: &BigUint) {
    out.extend(bits_msb_first(n));
}

fn from_bits(bits: &[bool]) -> BigUint {
    let mut n = BigUint::zero();
    for (i, b) in bits.iter().rev().enumerate() {
        if *b {
            n.set_bit(i as u64, true);
        }
    }
    n
}

pub fn pair(a: &BigUint, b: &BigUint) -> BigUint {
    let la = a.bits();
    let mut bits = vec![true];
    let gamma = BigUint::from(la + 1);
    let glen = gamma.bits();
    bits.extend(std::iter::repeat_n(false, (glen - 1) as usize));
    push_bits(&mut bits, &gamma);
    push_bits(&mut bits, a);
    push_bits(&mut bits, b);
    from_bits(&bits)
}

/// Inverse of [`pair`]; rejects every number that is not a canonical pair.
pub fn unpair(c: &BigUint) -> Result<(BigUint, BigUint), DecodeError> {
    let err = || DecodeError::NotAPair(c.clone());
    let bits = bits_msb_first(c);
    if bits.is_empty() {
        return Err(err());
    }
    let mut i = 1;
    let mut zeros = 0usize;
    while i < bits.len() && !bits[i] {
        zeros += 1;
        i += 1;
    }
    if i + zeros + 1 > bits.len() {
        return Err(err());
    }
    let gamma = from_bits(&bits[i..i + zeros + 1]);
    i += zeros + 1;
    let la = gamma.to_usize().ok_or_else(err)? - 1;
    if i + la > bits.len() {
        return Err(err());
    }
    let a_bits = &bits[i..i + la];
    if la > 0 && !a_bits[0] {
        return Err(err());
    }
    let b_bits = &bits[i + la..];
    if !b_bits.is_empty() && !b_bits[0] {
        return Err(err());
    }
    Ok((from_bits(a_bits), from_bits(b_bits)))
}

/// Code of a finite sequence: `pair(c0, pair(c1, ... pair(cn, 0)))`, with 0 for
/// the empty sequence. Strictly larger than every element.
pub fn sequence_code(items: &[BigUint]) -> BigUint {
    items.iter().rev().fold(BigUint::zero(), |acc, c| pair(c, &acc))
}

pub fn decode_sequence(code: &BigUint) -> Result<Vec<BigUint>, DecodeError> {
    let mut out = Vec::new();
    let mut cur = code.clone();
    while !cur.is_zero() {
        let (head, tail) = unpair(&cur)?;
        out.push(head);
        cur = tail;
    }
    Ok(out)
}

/// Cantor pairing on machine integers, used for stage and witness splitting.
pub fn cantor_pair(a: u64, b: u64) -> u64 {
    (a + b) * (a + b + 1) / 2 + b
}

pub fn cantor_unpair(z: u64) -> (u64, u64) {
    // w is the largest integer with w(w+1)/2 <= z.
    let mut w = (((8.0 * z as f64 + 1.0).sqrt() - 1.0) / 2.0) as u64;
    while w * (w + 1) / 2 > z {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= z {
        w += 1;
    }
    let b = z - w * (w + 1) / 2;
    (w - b, b)
}

/// Splits `z` into `k` numbers by nested Cantor unpairing; the inverse of
/// folding [`cantor_pair`] from the right.
pub fn cantor_split(z: u64, k: usize) -> Vec<u64> {
    match k {
        0 => Vec::new(),
        1 => vec![z],
        _ => {
            let (a, rest) = cantor_unpair(z);
            let mut out = vec![a];
            out.extend(cantor_split(rest, k - 1));
            out
        }
    }
}

pub fn machine_code(m: MachineId) -> BigUint {
    BigUint::from(match m {
        MachineId::E => 0u64,
        MachineId::G => 1,
        MachineId::H => 2,
        MachineId::T => 3,
        MachineId::F(c) => 4 + 2 * (u64::from(c.level) - 1) + u64::from(c.polarity == Polarity::Pi),
    })
}

pub fn decode_machine(code: &BigUint) -> Result<MachineId, DecodeError> {
    let n = code.to_u64().ok_or_else(|| DecodeError::NotAMachine(code.clone()))?;
    Ok(match n {
        0 => MachineId::E,
        1 => MachineId::G,
        2 => MachineId::H,
        3 => MachineId::T,
        _ => {
            let k = n - 4;
            let level = u32::try_from(k / 2 + 1).map_err(|_| DecodeError::NotAMachine(code.clone()))?;
            let polarity = if k % 2 == 0 { Polarity::Sigma } else { Polarity::Pi };
            MachineId::F(HierarchyClass { polarity, level })
        }
    })
}

const NAME_ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_";

/// Bijective base-63 reading of the name, first character most significant.
pub fn name_code(name: &Name) -> BigUint {
    let base = BigUint::from(NAME_ALPHABET.len());
    name.as_str().bytes().fold(BigUint::zero(), |acc, ch| {
        let digit = NAME_ALPHABET.iter().position(|c| *c == ch).expect("valid name character") + 1;
        acc * &base + BigUint::from(digit)
    })
}

pub fn decode_name(code: &BigUint) -> Result<Name, DecodeError> {
    let err = || DecodeError::NotAName(code.clone());
    let base = BigUint::from(NAME_ALPHABET.len());
    let mut n = code.clone();
    let mut chars = Vec::new();
    while !n.is_zero() {
        let mut digit = (&n % &base).to_usize().expect("small");
        n /= &base;
        if digit == 0 {
            digit = NAME_ALPHABET.len();
            n -= 1u32;
        }
        chars.push(NAME_ALPHABET[digit - 1]);
    }
    chars.reverse();
    let s = String::from_utf8(chars).map_err(|_| err())?;
    Name::new(&s).map_err(|_| err())
}

pub fn encode_term(t: &Term) -> BigUint {
    match t {
        Term::Num(n) => n * 5u32,
        Term::Var(v) => BigUint::from(*v) * 5u32 + 1u32,
        Term::Succ(a) => encode_term(a) * 5u32 + 2u32,
        Term::Add(a, b) => pair(&encode_term(a), &encode_term(b)) * 5u32 + 3u32,
        Term::Mul(a, b) => pair(&encode_term(a), &encode_term(b)) * 5u32 + 4u32,
    }
}

pub fn decode_term(code: &BigUint) -> Result<Term, DecodeError> {
    let err = || DecodeError::NotATerm(code.clone());
    let tag = (code % 5u32).to_u32().expect("small");
    let payload = code / 5u32;
    match tag {
        0 => Ok(Term::Num(payload)),
        1 => Ok(Term::Var(payload.to_u32().ok_or_else(err)?)),
        2 => {
            let inner = decode_term(&payload).map_err(|_| err())?;
            if matches!(inner, Term::Num(_)) {
                return Err(err());
            }
            Ok(Term::Succ(Box::new(inner)))
        }
        _ => {
            let (a, b) = unpair(&payload).map_err(|_| err())?;
            let a = decode_term(&a).map_err(|_| err())?;
            let b = decode_term(&b).map_err(|_| err())?;
            Ok(if tag == 3 { Term::add(a, b) } else { Term::mul(a, b) })
        }
    }
}

fn bound_tag(kind: BoundKind) -> u32 {
    match kind {
        BoundKind::ForallLe => 8,
        BoundKind::ExistsLe => 9,
        BoundKind::ForallLt => 10,
        BoundKind::ExistsLt => 11,
    }
}

pub fn encode(phi: &Formula) -> BigUint {
    let (payload, tag) = match phi {
        Formula::Eq(a, b) => (pair(&encode_term(a), &encode_term(b)), 0u32),
        Formula::Le(a, b) => (pair(&encode_term(a), &encode_term(b)), 1),
        Formula::Not(a) => (encode(a), 2),
        Formula::And(a, b) => (pair(&encode(a), &encode(b)), 3),
        Formula::Or(a, b) => (pair(&encode(a), &encode(b)), 4),
        Formula::Imp(a, b) => (pair(&encode(a), &encode(b)), 5),
        Formula::Forall(v, a) => (pair(&BigUint::from(*v), &encode(a)), 6),
        Formula::Exists(v, a) => (pair(&BigUint::from(*v), &encode(a)), 7),
        Formula::Bounded { kind, var, bound, body } => {
            let inner = pair(&encode_term(bound), &encode(body));
            (pair(&BigUint::from(*var), &inner), bound_tag(*kind))
        }
        Formula::Pr(m, t) => (pair(&machine_code(*m), &encode_term(t)), 12),
        Formula::Out(m, i, t) => (pair(&machine_code(*m), &pair(&encode_term(i), &encode_term(t))), 13),
        Formula::Named(n) => (name_code(n), 14),
    };
    payload * 15u32 + tag
}

/// The Gödel number of `phi`.
pub fn godel(phi: &Formula) -> BigUint {
    encode(phi)
}

/// The numeral of the Gödel number of `phi`.
pub fn quote(phi: &Formula) -> Term {
    Term::Num(encode(phi))
}

pub fn decode(code: &BigUint) -> Result<Formula, DecodeError> {
    let err = || DecodeError::NotAFormula(code.clone());
    let tag = (code % 15u32).to_u32().expect("small");
    let payload = code / 15u32;
    let sub = |c: &BigUint| decode(c).map_err(|_| err());
    let term = |c: &BigUint| decode_term(c).map_err(|_| err());
    let var = |c: &BigUint| -> Result<Var, DecodeError> { c.to_u32().ok_or_else(err) };
    let split = |c: &BigUint| unpair(c).map_err(|_| err());
    Ok(match tag {
        0 | 1 => {
            let (a, b) = split(&payload)?;
            let (a, b) = (term(&a)?, term(&b)?);
            if tag == 0 {
                Formula::Eq(a, b)
            } else {
                Formula::Le(a, b)
            }
        }
        2 => Formula::negate(sub(&payload)?),
        3..=5 => {
            let (a, b) = split(&payload)?;
            let (a, b) = (sub(&a)?, sub(&b)?);
            match tag {
                3 => Formula::and(a, b),
                4 => Formula::or(a, b),
                _ => Formula::implies(a, b),
            }
        }
        6 | 7 => {
            let (v, body) = split(&payload)?;
            let (v, body) = (var(&v)?, sub(&body)?);
            if tag == 6 {
                Formula::forall(v, body)
            } else {
                Formula::exists(v, body)
            }
        }
        8..=11 => {
            let (v, rest) = split(&payload)?;
            let (t, body) = split(&rest)?;
            let kind = match tag {
                8 => BoundKind::ForallLe,
                9 => BoundKind::ExistsLe,
                10 => BoundKind::ForallLt,
                _ => BoundKind::ExistsLt,
            };
            Formula::bounded(kind, var(&v)?, term(&t)?, sub(&body)?)
        }
        12 => {
            let (m, t) = split(&payload)?;
            Formula::Pr(decode_machine(&m).map_err(|_| err())?, term(&t)?)
        }
        13 => {
            let (m, rest) = split(&payload)?;
            let (i, t) = split(&rest)?;
            Formula::Out(decode_machine(&m).map_err(|_| err())?, term(&i)?, term(&t)?)
        }
        _ => Formula::Named(decode_name(&payload).map_err(|_| err())?),
    })
}

/// All formulas without named sentences, in ascending code order, starting
/// at a given code. Non-codes and codes of formulas mentioning a name are
/// skipped, so the sequence is repetition-free and independent of what has
/// been registered.
#[derive(Clone, Debug)]
pub struct FormulaEnumerator {
    next: BigUint,
}

impl FormulaEnumerator {
    pub fn from_code(start: BigUint) -> Self {
        FormulaEnumerator { next: start }
    }

    pub fn new() -> Self {
        Self::from_code(BigUint::zero())
    }

    /// The next code that will be examined.
    pub fn cursor(&self) -> &BigUint {
        &self.next
    }
}

impl Default for FormulaEnumerator {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for FormulaEnumerator {
    type Item = (BigUint, Formula);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let code = self.next.clone();
            self.next += 1u32;
            if let Ok(phi) = decode(&code) {
                if phi.named_refs().is_empty() {
                    return Some((code, phi));
                }
            }
        }
    }
}

/// Formulas with code at most `cap`, ascending.
pub fn formulas_up_to(cap: &BigUint) -> Vec<(BigUint, Formula)> {
    FormulaEnumerator::new().take_while(|(c, _)| c <= cap).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::numeral;
    use crate::syntax::{parse_with, NamePolicy};

    fn n(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn cantor_round_trips() {
        for z in 0..5000u64 {
            let (a, b) = cantor_unpair(z);
            assert_eq!(cantor_pair(a, b), z);
        }
        let parts = cantor_split(1234, 3);
        assert_eq!(cantor_pair(parts[0], cantor_pair(parts[1], parts[2])), 1234);
    }

    #[test]
    fn pairing_round_trips_and_dominates() {
        for a in 0..40u64 {
            for b in 0..40u64 {
                let c = pair(&n(a), &n(b));
                assert!(c > n(a) && c > n(b));
                assert_eq!(unpair(&c).unwrap(), (n(a), n(b)));
                assert!(pair(&n(a + 1), &n(b)) > c);
                assert!(pair(&n(a), &n(b + 1)) > c);
            }
        }
        assert_eq!(pair(&n(0), &n(0)), n(3));
        assert!(unpair(&n(0)).is_err());
    }

    #[test]
    fn pairing_is_a_partial_bijection_on_small_numbers() {
        let mut seen = std::collections::HashSet::new();
        for c in 0..5000u64 {
            if let Ok((a, b)) = unpair(&n(c)) {
                assert_eq!(pair(&a, &b), n(c));
                assert!(seen.insert((a, b)));
            }
        }
    }

    #[test]
    fn numerals_round_trip() {
        for k in 0..1000u64 {
            let t = numeral(k);
            assert_eq!(decode_term(&encode_term(&t)).unwrap().numeral_value(), Some(&n(k)));
        }
    }

    #[test]
    fn names_round_trip() {
        for s in ["a", "Z", "F_Sigma1_pi", "x9_", "zz"] {
            let name = Name::new(s).unwrap();
            assert_eq!(decode_name(&name_code(&name)).unwrap(), name);
        }
        assert!(decode_name(&n(53)).is_err(), "a leading digit is not a name");
    }

    #[test]
    fn machines_round_trip() {
        let ids = [
            MachineId::E,
            MachineId::G,
            MachineId::H,
            MachineId::T,
            MachineId::F(HierarchyClass::sigma(1)),
            MachineId::F(HierarchyClass::pi(3)),
        ];
        for m in ids {
            assert_eq!(decode_machine(&machine_code(m)).unwrap(), m);
        }
    }

    #[test]
    fn formulas_round_trip() {
        for s in [
            "0=0",
            "!Ax(x=x)",
            "Ex0<=S(x1).(x0*x0<=x1)",
            "Ax3<x2.!(x3=0)",
            "(PR[E](12)->OUT[F:Pi2](x0,3))",
            "(@nm|Ey(y+1=3))",
        ] {
            let phi = parse_with(s, NamePolicy::Any).unwrap();
            let c = godel(&phi);
            assert_eq!(decode(&c).unwrap(), phi, "{s}");
        }
        assert_eq!(decode(&godel(&Formula::verum())).unwrap(), Formula::verum());
    }

    #[test]
    fn subformula_codes_are_smaller() {
        let phi = parse_with("(Ax0.!(x0=0)&Ex1<=x0.(x1<=1))", NamePolicy::Any).unwrap();
        let whole = godel(&phi);
        phi.for_each_subformula(&mut |g| {
            if g != &phi {
                assert!(godel(g) < whole);
            }
        });
        assert!(godel(&Formula::negate(phi.clone())) > whole);
    }

    #[test]
    fn non_codes_are_rejected() {
        assert!(decode(&n(0)).is_err());
        // Successor over a numeral is not canonical.
        assert!(decode_term(&n(5 * 5 + 2)).is_err());
    }

    #[test]
    fn enumeration_is_ascending_and_decodable() {
        let list = formulas_up_to(&n(20_000));
        assert!(!list.is_empty());
        assert!(list.windows(2).all(|w| w[0].0 < w[1].0));
        for (c, phi) in &list {
            assert_eq!(&godel(phi), c);
        }
        assert_eq!(list[0].1, Formula::verum());
    }
}
