//! Finite fields `GF(p^e)` with involutions and traces, and the split ring `k0 ⊕ k0`.
//!
//! Elements are stored as a single integer index `c_0 + c_1 p + ... + c_{e-1} p^{e-1}`
//! where `c_i` are the coefficients of the canonical polynomial representative
//! modulo the field's defining polynomial. Prime-subfield elements therefore have
//! index equal to their value. Multiplication goes through discrete log tables.
//!
//! The *canonical order* on elements is lexicographic on coefficient vectors
//! compared from the constant term upwards; see [`Field::canonical_key`].

mod conway;
pub mod packed;
pub mod split;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use split::{SplitRing, SplitRingElement};

/// Largest field order accepted by [`make_field`].
pub const MAX_FIELD_ORDER: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("field exponent must be at least 1")]
    ExponentZero,
    #[error("GF({p}^{e}) exceeds the supported order {MAX_FIELD_ORDER}")]
    FieldTooLarge { p: u32, e: u32 },
    #[error("GF({p}^{d}) is not a subfield of GF({p}^{e})")]
    NotASubfield { p: u32, d: u32, e: u32 },
    #[error("involution is trivial; no element with a + σ(a) = 1 is defined")]
    InvolutionTrivial,
    #[error("involution {kind:?} is not valid on GF({p}^{e})")]
    InvalidInvolution { kind: Involution, p: u32, e: u32 },
    #[error("coefficient vector {0:?} does not describe an element")]
    BadCoefficients(Vec<u32>),
}

/// The data determining a finite field: characteristic, degree and defining polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub e: u32,
    /// Monic degree-`e` polynomial, coefficients constant term first (length `e + 1`).
    pub modulus: Vec<u32>,
}

impl FieldSpec {
    pub fn order(&self) -> u32 {
        self.p.pow(self.e)
    }
}

/// An element of a [`Field`], identified by its coefficient index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Wraps a raw index that is known to be in range for the field at hand.
    #[inline]
    pub(crate) fn from_index_unchecked(index: u32) -> Self {
        FieldElement(index)
    }
}

/// Involutions of a coefficient ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Involution {
    Identity,
    /// `x ↦ x^{p^{e/2}}`, only for even `e`.
    FrobeniusHalf,
    /// `(x, y) ↦ (y, x)` on the split ring.
    SplitSwap,
}

impl Involution {
    pub fn name(self) -> &'static str {
        match self {
            Involution::Identity => "identity",
            Involution::FrobeniusHalf => "frobenius-half",
            Involution::SplitSwap => "split-swap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(Involution::Identity),
            "frobenius-half" => Some(Involution::FrobeniusHalf),
            "split-swap" => Some(Involution::SplitSwap),
            _ => None,
        }
    }
}

/// A finite field with precomputed arithmetic tables. Immutable and `Send + Sync`.
#[derive(Clone)]
pub struct Field {
    spec: FieldSpec,
    q: u32,
    /// `exp[i] = g^i` for `0 <= i < 2(q-1)`.
    exp: Vec<u32>,
    /// `log[x]` for nonzero `x`; `log[0]` unused.
    log: Vec<u32>,
    neg: Vec<u32>,
    add_table: Option<Vec<u32>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{})", self.spec.p, self.spec.e)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Eq for Field {}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Writes `q = p^e` with `p` prime, if possible.
pub fn prime_power(q: u64) -> Option<(u32, u32)> {
    let factors = prime_factors(q);
    if factors.len() != 1 || factors[0] > u32::MAX as u64 {
        return None;
    }
    let p = factors[0];
    let mut e = 0;
    let mut r = q;
    while r.is_multiple_of(p) {
        r /= p;
        e += 1;
    }
    Some((p as u32, e))
}

/// The field of order `q` with its default modulus.
pub fn field_of_order(q: u64) -> Result<Field, GfError> {
    match prime_power(q) {
        Some((p, e)) => make_field(p, e),
        None => Err(GfError::NotPrime(q.min(u32::MAX as u64) as u32)),
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

fn least_primitive_root(p: u32) -> u32 {
    if p == 2 {
        return 1;
    }
    let order = (p - 1) as u64;
    let factors = prime_factors(order);
    (2..p)
        .find(|&g| factors.iter().all(|&f| pow_mod(g as u64, order / f, p as u64) != 1))
        .expect("every prime has a primitive root")
}

/// Polynomial arithmetic on coefficient vectors (constant term first) used to
/// bootstrap the tables and to test irreducibility.
mod poly {
    pub fn mul_mod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
        let e = modulus.len() - 1;
        let mut r = vec![0u64; 2 * e.max(1)];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                r[i + j] = (r[i + j] + x as u64 * y as u64) % p as u64;
            }
        }
        for k in (e..r.len()).rev() {
            let c = r[k];
            if c != 0 {
                for t in 0..=e {
                    let sub = c * modulus[t] as u64 % p as u64;
                    r[k - e + t] = (r[k - e + t] + p as u64 - sub) % p as u64;
                }
            }
        }
        r.truncate(e);
        r.into_iter().map(|x| x as u32).collect()
    }

    pub fn pow_mod(base: &[u32], mut n: u64, modulus: &[u32], p: u32) -> Vec<u32> {
        let e = modulus.len() - 1;
        let mut result = vec![0u32; e];
        result[0] = 1;
        let mut b = base.to_vec();
        b.resize(e, 0);
        while n > 0 {
            if n & 1 == 1 {
                result = mul_mod(&result, &b, modulus, p);
            }
            b = mul_mod(&b, &b, modulus, p);
            n >>= 1;
        }
        result
    }

    /// Rabin-style irreducibility: `x^{p^e} = x` and `gcd(x^{p^{e/r}} - x, f) = 1` for primes `r | e`.
    /// The gcd condition is checked by verifying `x` has no conjugate of smaller degree.
    pub fn is_irreducible(modulus: &[u32], p: u32) -> bool {
        let e = modulus.len() - 1;
        if e == 1 {
            return true;
        }
        if modulus[0] == 0 {
            return false;
        }
        // Brute force over monic divisors would be slow; instead check that the
        // quotient ring has no zero divisors among elements of degree < e by
        // testing that x generates a field: x^{p^e} == x and for each proper
        // divisor d of e, the gcd of x^{p^d} - x with f is 1.
        let mut x = vec![0u32; e];
        x[1] = 1;
        let q = (p as u64).pow(e as u32);
        if pow_mod(&x, q, modulus, p) != x {
            return false;
        }
        for d in 1..e {
            if !e.is_multiple_of(d) {
                continue;
            }
            let xd = pow_mod(&x, (p as u64).pow(d as u32), modulus, p);
            let mut diff: Vec<u32> = xd.iter().zip(&x).map(|(a, b)| (a + p - b) % p).collect();
            while diff.last() == Some(&0) {
                diff.pop();
            }
            if gcd_degree(&diff, modulus, p) > 0 {
                return false;
            }
        }
        true
    }

    fn inv_mod_p(a: u32, p: u32) -> u32 {
        super::pow_mod(a as u64, (p - 2) as u64, p as u64) as u32
    }

    /// Degree of `gcd(a, b)` (`a` may be the zero polynomial, giving `deg b`).
    fn gcd_degree(a: &[u32], b: &[u32], p: u32) -> usize {
        let mut a: Vec<u32> = a.to_vec();
        let mut b: Vec<u32> = b.to_vec();
        let trim = |v: &mut Vec<u32>| {
            while v.last() == Some(&0) {
                v.pop();
            }
        };
        trim(&mut a);
        trim(&mut b);
        while !a.is_empty() {
            // b mod a
            while b.len() >= a.len() && !b.is_empty() {
                let lead = *b.last().unwrap();
                let f = lead as u64 * inv_mod_p(*a.last().unwrap(), p) as u64 % p as u64;
                let shift = b.len() - a.len();
                for (i, &c) in a.iter().enumerate() {
                    let sub = (f * c as u64 % p as u64) as u32;
                    b[i + shift] = (b[i + shift] + p - sub) % p;
                }
                trim(&mut b);
            }
            std::mem::swap(&mut a, &mut b);
        }
        b.len().saturating_sub(1)
    }
}

/// First monic irreducible of degree `e` in lexicographic order of its
/// coefficient vector read from the constant term.
fn first_irreducible(p: u32, e: u32) -> Vec<u32> {
    let count = (p as u64).pow(e);
    for n in 0..count {
        let mut coeffs = Vec::with_capacity(e as usize + 1);
        // Constant term varies slowest, i.e. is the most significant digit.
        let mut rest = n;
        let mut digits = vec![0u32; e as usize];
        for i in (0..e as usize).rev() {
            digits[i] = (rest % p as u64) as u32;
            rest /= p as u64;
        }
        coeffs.extend_from_slice(&digits);
        coeffs.push(1);
        if poly::is_irreducible(&coeffs, p) {
            return coeffs;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// Deterministic defining polynomial for `GF(p^e)`.
pub fn default_modulus(p: u32, e: u32) -> Vec<u32> {
    if e == 1 {
        let g = least_primitive_root(p);
        return vec![(p - g) % p, 1];
    }
    match conway::lookup(p, e) {
        Some(m) => m.to_vec(),
        None => first_irreducible(p, e),
    }
}

/// Builds `GF(p^e)` with its deterministic modulus.
pub fn make_field(p: u32, e: u32) -> Result<Field, GfError> {
    if !is_prime(p) {
        return Err(GfError::NotPrime(p));
    }
    if e == 0 {
        return Err(GfError::ExponentZero);
    }
    let too_large = (p as u64)
        .checked_pow(e)
        .is_none_or(|q| q > MAX_FIELD_ORDER);
    if too_large {
        return Err(GfError::FieldTooLarge { p, e });
    }
    Ok(Field::from_spec(FieldSpec { p, e, modulus: default_modulus(p, e) }))
}

impl Field {
    /// Builds the tables for a field given an irreducible modulus.
    ///
    /// Panics if the modulus is not monic of degree `e`.
    pub fn from_spec(spec: FieldSpec) -> Field {
        let FieldSpec { p, e, ref modulus } = spec;
        assert_eq!(modulus.len(), e as usize + 1, "modulus must have degree e");
        assert_eq!(modulus[e as usize], 1, "modulus must be monic");
        let q = p.pow(e);
        let to_index = |c: &[u32]| c.iter().rev().fold(0u32, |acc, &d| acc * p + d);
        let to_coeffs = |mut x: u32| {
            let mut c = vec![0u32; e as usize];
            for d in c.iter_mut() {
                *d = x % p;
                x /= p;
            }
            c
        };

        let neg: Vec<u32> = (0..q)
            .map(|x| to_index(&to_coeffs(x).iter().map(|&d| (p - d) % p).collect::<Vec<_>>()))
            .collect();

        // Find a generator of the multiplicative group.
        let order = (q - 1) as u64;
        let factors = prime_factors(order);
        let is_generator = |g: &[u32]| {
            factors
                .iter()
                .all(|&f| poly::pow_mod(g, order / f, modulus, p) != to_coeffs(1))
        };
        let generator: Vec<u32> = if e == 1 {
            vec![least_primitive_root(p)]
        } else {
            let x: Vec<u32> = (0..e).map(|i| u32::from(i == 1)).collect();
            if is_generator(&x) {
                x
            } else {
                (2..q)
                    .map(to_coeffs)
                    .find(|g| is_generator(g))
                    .expect("multiplicative group is cyclic")
            }
        };

        let mut exp = vec![0u32; 2 * (q as usize - 1)];
        let mut log = vec![0u32; q as usize];
        let mut cur = to_coeffs(1);
        for (i, slot) in exp.iter_mut().take((q - 1) as usize).enumerate() {
            let idx = to_index(&cur);
            *slot = idx;
            log[idx as usize] = i as u32;
            cur = if e == 1 {
                vec![(cur[0] as u64 * generator[0] as u64 % p as u64) as u32]
            } else {
                poly::mul_mod(&cur, &generator, modulus, p)
            };
        }
        for i in 0..(q - 1) as usize {
            exp[i + q as usize - 1] = exp[i];
        }

        let add_table = if p != 2 && e > 1 && q <= 256 {
            let mut t = vec![0u32; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    let ca = to_coeffs(a);
                    let cb = to_coeffs(b);
                    let s: Vec<u32> = ca.iter().zip(&cb).map(|(x, y)| (x + y) % p).collect();
                    t[(a * q + b) as usize] = to_index(&s);
                }
            }
            Some(t)
        } else {
            None
        };

        Field { spec, q, exp, log, neg, add_table }
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn p(&self) -> u32 {
        self.spec.p
    }

    pub fn e(&self) -> u32 {
        self.spec.e
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::ZERO
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::ONE
    }

    /// Element with the given raw index. Panics if out of range.
    pub fn element(&self, index: u32) -> FieldElement {
        assert!(index < self.q, "index {index} out of range for {:?}", self);
        FieldElement(index)
    }

    /// The image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> FieldElement {
        FieldElement(n.rem_euclid(self.spec.p as i64) as u32)
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElement, GfError> {
        if coeffs.len() != self.spec.e as usize || coeffs.iter().any(|&c| c >= self.spec.p) {
            return Err(GfError::BadCoefficients(coeffs.to_vec()));
        }
        Ok(FieldElement(
            coeffs.iter().rev().fold(0u32, |acc, &d| acc * self.spec.p + d),
        ))
    }

    pub fn coeffs(&self, x: FieldElement) -> Vec<u32> {
        let mut v = x.0;
        (0..self.spec.e)
            .map(|_| {
                let d = v % self.spec.p;
                v /= self.spec.p;
                d
            })
            .collect()
    }

    /// The generator `x` of the field over its prime subfield (the class of the
    /// polynomial variable); equals the root of the modulus.
    pub fn generator(&self) -> FieldElement {
        if self.spec.e == 1 {
            // root of x + c is -c
            FieldElement((self.spec.p - self.spec.modulus[0]) % self.spec.p)
        } else {
            FieldElement(self.spec.p)
        }
    }

    /// Key whose integer order is the canonical element order.
    pub fn canonical_key(&self, x: FieldElement) -> u32 {
        self.coeffs(x).iter().fold(0u32, |acc, &d| acc * self.spec.p + d)
    }

    /// All elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(FieldElement)
    }

    /// All elements in canonical (lexicographic, constant term first) order.
    pub fn elements_canonical(&self) -> Vec<FieldElement> {
        let mut v: Vec<FieldElement> = self.elements().collect();
        v.sort_by_key(|&x| self.canonical_key(x));
        v
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let p = self.spec.p;
        if p == 2 {
            return FieldElement(a.0 ^ b.0);
        }
        if self.spec.e == 1 {
            let s = a.0 + b.0;
            return FieldElement(if s >= p { s - p } else { s });
        }
        if let Some(t) = &self.add_table {
            return FieldElement(t[(a.0 * self.q + b.0) as usize]);
        }
        let (mut x, mut y) = (a.0, b.0);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.spec.e {
            out += ((x % p + y % p) % p) * place;
            x /= p;
            y /= p;
            place *= p;
        }
        FieldElement(out)
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        let i = self.log[a.0 as usize] + self.log[b.0 as usize];
        FieldElement(self.exp[i as usize])
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(&self, a: FieldElement) -> FieldElement {
        assert!(!a.is_zero(), "inverse of zero");
        let l = self.log[a.0 as usize];
        FieldElement(self.exp[((self.q - 1 - l) % (self.q - 1)) as usize])
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: FieldElement, n: u64) -> FieldElement {
        if n == 0 {
            return FieldElement::ONE;
        }
        if a.is_zero() {
            return FieldElement::ZERO;
        }
        let l = self.log[a.0 as usize] as u64;
        FieldElement(self.exp[(l * (n % (self.q as u64 - 1)) % (self.q as u64 - 1)) as usize])
    }

    /// `x ↦ x^{p^k}`.
    pub fn frobenius(&self, a: FieldElement, k: u32) -> FieldElement {
        if a.is_zero() {
            return a;
        }
        let m = (self.q - 1) as u64;
        let pk = pow_mod(self.spec.p as u64, k as u64, m.max(1));
        let l = self.log[a.0 as usize] as u64;
        FieldElement(self.exp[(l * pk % m.max(1)) as usize])
    }

    /// Checks that `inv` is an involution of this field.
    pub fn check_involution(&self, inv: Involution) -> Result<(), GfError> {
        match inv {
            Involution::Identity => Ok(()),
            Involution::FrobeniusHalf if self.spec.e.is_multiple_of(2) => Ok(()),
            kind => Err(GfError::InvalidInvolution { kind, p: self.spec.p, e: self.spec.e }),
        }
    }

    /// Applies a field involution. Panics on [`Involution::SplitSwap`].
    #[inline]
    pub fn conj(&self, inv: Involution, a: FieldElement) -> FieldElement {
        match inv {
            Involution::Identity => a,
            Involution::FrobeniusHalf => self.frobenius(a, self.spec.e / 2),
            Involution::SplitSwap => panic!("split swap is not a field involution"),
        }
    }

    pub fn is_in_subfield(&self, a: FieldElement, d: u32) -> bool {
        self.spec.e.is_multiple_of(d) && self.frobenius(a, d) == a
    }

    /// `Tr_{GF(p^e)/GF(p^d)}(a) = sum_{i < e/d} a^{p^{d i}}`, an element of the subfield.
    pub fn trace(&self, a: FieldElement, d: u32) -> Result<FieldElement, GfError> {
        let e = self.spec.e;
        if d == 0 || !e.is_multiple_of(d) {
            return Err(GfError::NotASubfield { p: self.spec.p, d, e });
        }
        Ok((0..e / d).fold(FieldElement::ZERO, |acc, i| self.add(acc, self.frobenius(a, d * i))))
    }

    /// Absolute trace to the prime field, returned as an integer in `0..p`.
    pub fn trace_to_prime(&self, a: FieldElement) -> u32 {
        self.trace(a, 1).expect("prime field is a subfield").0
    }

    /// Canonically first `a` with `a + σ(a) = 1`.
    pub fn solve_half_unit(&self, inv: Involution) -> Result<FieldElement, GfError> {
        match inv {
            Involution::FrobeniusHalf => self.check_involution(inv)?,
            Involution::Identity => return Err(GfError::InvolutionTrivial),
            Involution::SplitSwap => {
                return Err(GfError::InvalidInvolution { kind: inv, p: self.spec.p, e: self.spec.e })
            }
        }
        Ok(self
            .elements_canonical()
            .into_iter()
            .find(|&a| self.add(a, self.conj(inv, a)) == FieldElement::ONE)
            .expect("relative trace is surjective"))
    }

    /// Human-readable coefficient tuple, e.g. `1,0` for the constant `1` in `GF(p^2)`.
    pub fn format(&self, a: FieldElement) -> String {
        self.coeffs(a).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    }

    /// Inverse of [`Field::format`].
    pub fn parse(&self, s: &str) -> Result<FieldElement, GfError> {
        let coeffs: Result<Vec<u32>, _> = s.split(',').map(|t| t.trim().parse::<u32>()).collect();
        match coeffs {
            Ok(c) => self.from_coeffs(&c),
            Err(_) => Err(GfError::BadCoefficients(Vec::new())),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn small_fields() -> Vec<Field> {
        [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (2, 4), (5, 2), (2, 6)]
            .iter()
            .map(|&(p, e)| make_field(p, e).unwrap())
            .collect()
    }

    #[test]
    fn construction_errors() {
        assert_eq!(make_field(4, 1).unwrap_err(), GfError::NotPrime(4));
        assert_eq!(make_field(2, 0).unwrap_err(), GfError::ExponentZero);
        assert_eq!(make_field(2, 17).unwrap_err(), GfError::FieldTooLarge { p: 2, e: 17 });
        assert!(make_field(2, 16).is_ok());
        assert!(matches!(make_field(257, 2), Err(GfError::FieldTooLarge { .. })));
    }

    #[test]
    fn documented_moduli() {
        let gf2 = make_field(2, 1).unwrap();
        assert_eq!(gf2.q(), 2);
        assert_eq!(gf2.spec().modulus, vec![1, 1]);
        assert_eq!(make_field(2, 2).unwrap().spec().modulus, vec![1, 1, 1]);
        assert_eq!(make_field(3, 2).unwrap().spec().modulus, vec![2, 2, 1]);
    }

    #[test]
    fn uncatalogued_modulus_is_first_irreducible() {
        let m = first_irreducible(3, 2);
        // Constant-first lexicographic: x^2 + 1 is the first irreducible over GF(3).
        assert_eq!(m, vec![1, 0, 1]);
        // x^3 + x^2 + 1 precedes x^3 + x + 1 when the constant term is compared first.
        let m = first_irreducible(2, 3);
        assert_eq!(m, vec![1, 0, 1, 1]);
        let f = Field::from_spec(FieldSpec { p: 3, e: 2, modulus: vec![1, 0, 1] });
        // x is not primitive for x^2 + 1, the table build must still work.
        let nonzero: Vec<_> = f.elements().skip(1).collect();
        for &a in &nonzero {
            assert_eq!(f.mul(a, f.inv(a)), f.one());
        }
    }

    #[test]
    fn traces() {
        let gf4 = make_field(2, 2).unwrap();
        let w = gf4.generator();
        assert_eq!(gf4.trace(gf4.one(), 1).unwrap(), gf4.zero());
        assert_eq!(gf4.trace(w, 1).unwrap(), gf4.one());
        let gf9 = make_field(3, 2).unwrap();
        assert_eq!(gf9.trace(gf9.one(), 1).unwrap(), gf9.from_int(2));
        assert_eq!(
            gf9.trace(gf9.one(), 3).unwrap_err(),
            GfError::NotASubfield { p: 3, d: 3, e: 2 }
        );
        let gf64 = make_field(2, 6).unwrap();
        for a in gf64.elements() {
            let t = gf64.trace(a, 2).unwrap();
            assert!(gf64.is_in_subfield(t, 2));
            let t3 = gf64.trace(a, 3).unwrap();
            assert!(gf64.is_in_subfield(t3, 3));
        }
    }

    #[test]
    fn half_units() {
        let gf4 = make_field(2, 2).unwrap();
        let a = gf4.solve_half_unit(Involution::FrobeniusHalf).unwrap();
        assert_eq!(a, gf4.generator());
        let gf9 = make_field(3, 2).unwrap();
        let a = gf9.solve_half_unit(Involution::FrobeniusHalf).unwrap();
        // exhaustive scan in canonical order
        let expect = gf9
            .elements_canonical()
            .into_iter()
            .find(|&x| gf9.add(x, gf9.pow(x, 3)) == gf9.one())
            .unwrap();
        assert_eq!(a, expect);
        assert_eq!(gf9.coeffs(a), vec![0, 1]);
        assert_eq!(
            gf9.solve_half_unit(Involution::Identity).unwrap_err(),
            GfError::InvolutionTrivial
        );
        for p in [2, 3, 5, 7, 11, 13] {
            let f = make_field(p, 2).unwrap();
            let a = f.solve_half_unit(Involution::FrobeniusHalf).unwrap();
            assert_eq!(f.add(a, f.conj(Involution::FrobeniusHalf, a)), f.one());
        }
    }

    #[test]
    fn involutions_square_to_identity() {
        for f in small_fields() {
            for inv in [Involution::Identity, Involution::FrobeniusHalf] {
                if f.check_involution(inv).is_err() {
                    continue;
                }
                for a in f.elements() {
                    assert_eq!(f.conj(inv, f.conj(inv, a)), a);
                }
            }
        }
        let gf8 = make_field(2, 3).unwrap();
        assert!(gf8.check_involution(Involution::FrobeniusHalf).is_err());
        assert!(gf8.check_involution(Involution::SplitSwap).is_err());
    }

    #[test]
    fn trace_pairing_is_nondegenerate() {
        for f in small_fields() {
            if f.q() > 64 {
                continue;
            }
            let basis: Vec<FieldElement> = (0..f.e()).map(|i| f.pow(f.generator(), i as u64)).collect();
            for x in f.elements().skip(1) {
                assert!(
                    basis.iter().any(|&y| f.trace_to_prime(f.mul(x, y)) != 0),
                    "{x:?} is in the radical of the trace form of {f:?}"
                );
            }
        }
    }

    #[test]
    fn format_round_trip() {
        let f = make_field(5, 2).unwrap();
        for a in f.elements() {
            assert_eq!(f.parse(&f.format(a)).unwrap(), a);
        }
        assert!(f.parse("5,0").is_err());
        assert!(f.parse("1").is_err());
    }

    /// Test-only Conway search: least primitive polynomial in Conway order
    /// compatible with the Conway polynomials of all proper subfields.
    fn conway_brute_force(p: u32, e: u32, lower: &dyn Fn(u32) -> Vec<u32>) -> Vec<u32> {
        let total = (p as u64).pow(e);
        let q = total;
        let order = q - 1;
        let factors = prime_factors(order);
        for n in 0..total {
            // alpha_{e-1} is the most significant digit.
            let mut alphas = vec![0u32; e as usize];
            let mut rest = n;
            for a in alphas.iter_mut() {
                *a = (rest % p as u64) as u32;
                rest /= p as u64;
            }
            let mut f = vec![0u32; e as usize + 1];
            f[e as usize] = 1;
            for i in 0..e as usize {
                let al = alphas[i];
                let sign_neg = (e as usize - i) % 2 == 1;
                f[i] = if sign_neg { (p - al) % p } else { al };
            }
            if f[0] == 0 {
                continue;
            }
            let mut x = vec![0u32; e as usize];
            if e == 1 {
                x[0] = (p - f[0]) % p;
            } else {
                x[1] = 1;
            }
            let one: Vec<u32> = (0..e).map(|i| u32::from(i == 0)).collect();
            let pm = |b: &[u32], k: u64| -> Vec<u32> {
                if e == 1 {
                    vec![pow_mod(b[0] as u64, k, p as u64) as u32]
                } else {
                    poly::pow_mod(b, k, &f, p)
                }
            };
            if pm(&x, order) != one || factors.iter().any(|&r| pm(&x, order / r) == one) {
                continue;
            }
            let mut ok = true;
            for d in 1..e {
                if !e.is_multiple_of(d) {
                    continue;
                }
                let g = lower(d);
                let y = pm(&x, (q - 1) / ((p as u64).pow(d) - 1));
                // evaluate g at y
                let mut acc = vec![0u32; e as usize];
                let mut pw = one.clone();
                for &c in &g {
                    for (a, w) in acc.iter_mut().zip(&pw) {
                        *a = (*a + c * w) % p;
                    }
                    pw = poly::mul_mod(&pw, &y, &f, p);
                }
                if acc.iter().any(|&c| c != 0) {
                    ok = false;
                    break;
                }
            }
            if ok {
                return f;
            }
        }
        panic!("no Conway polynomial found for ({p},{e})");
    }

    #[test]
    fn conway_table_matches_brute_force_search() {
        for &(p, e, m) in conway::CONWAY {
            if (p as u64).pow(e) > 20_000 {
                continue;
            }
            let lower = |d: u32| default_modulus(p, d);
            assert_eq!(conway_brute_force(p, e, &lower), m.to_vec(), "Conway({p},{e})");
        }
        for p in [2u32, 3, 5, 7, 11, 13, 101, 65521] {
            let lower = |_d: u32| unreachable!();
            assert_eq!(conway_brute_force(p, 1, &lower), default_modulus(p, 1), "Conway({p},1)");
        }
    }

    #[test]
    fn tabulated_moduli_are_irreducible() {
        for &(p, e, m) in conway::CONWAY {
            assert!(poly::is_irreducible(m, p), "({p},{e})");
        }
        assert!(!poly::is_irreducible(&[1, 0, 1], 2));
        assert!(!poly::is_irreducible(&[0, 1, 1], 3));
    }

    fn field_and_pair() -> impl Strategy<Value = (usize, u32, u32, u32)> {
        (0usize..10).prop_flat_map(|i| {
            let q = small_fields()[i].q();
            (Just(i), 0..q, 0..q, 0..q)
        })
    }

    proptest! {
        #[test]
        fn field_axioms((i, a, b, c) in field_and_pair()) {
            let f = &small_fields()[i];
            let (a, b, c) = (f.element(a), f.element(b), f.element(c));
            prop_assert_eq!(f.add(a, b), f.add(b, a));
            prop_assert_eq!(f.mul(a, b), f.mul(b, a));
            prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            prop_assert_eq!(f.add(a, f.neg(a)), f.zero());
            if !a.is_zero() {
                prop_assert_eq!(f.mul(a, f.inv(a)), f.one());
            }
            // Frobenius is additive and multiplicative.
            prop_assert_eq!(f.frobenius(f.add(a, b), 1), f.add(f.frobenius(a, 1), f.frobenius(b, 1)));
            prop_assert_eq!(f.frobenius(f.mul(a, b), 1), f.mul(f.frobenius(a, 1), f.frobenius(b, 1)));
        }

        #[test]
        fn trace_is_linear_over_subfield((i, a, b, c) in field_and_pair()) {
            let f = &small_fields()[i];
            let (x, y) = (f.element(a), f.element(b));
            for d in (1..=f.e()).filter(|d| f.e().is_multiple_of(*d)) {
                let t = |z| f.trace(z, d).unwrap();
                prop_assert_eq!(t(f.add(x, y)), f.add(t(x), t(y)));
                // scalar from the subfield: trace of a subfield element lies in it
                let s = t(f.element(c));
                prop_assert!(f.is_in_subfield(s, d));
                prop_assert_eq!(t(f.mul(s, x)), f.mul(s, t(x)));
            }
        }
    }
}
