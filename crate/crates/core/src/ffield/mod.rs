//! Exact arithmetic in GF(p^k).
//!
//! Elements are encoded as integers in `[0, q)`: the base-p digits of the
//! value are the coefficients (low degree first) of the polynomial residue
//! modulo the defining modulus. `0` and `1` are the additive and multiplicative
//! identities.
//!
//! Multiplication runs through discrete log/exp tables built once per context.
//! The canonical additive character is `e(a) = exp(2πi·Tr(a)/p)` with
//! `Tr(a) = a + a^p + ... + a^{p^{k-1}}`.
//!
//! A field is described textually as `p^k/c_0,c_1,...,c_k` (modulus
//! coefficients, low degree first). `p^k` and `p` alone select the default
//! modulus.

mod poly;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported field order, 3^10.
pub const MAX_ORDER: u64 = 59_049;

/// Fields up to this order carry a full addition table.
const ADD_TABLE_MAX: u32 = 729;

/// Fields up to this order carry a `Tr(a·b)` table.
const TRMUL_TABLE_MAX: u32 = 1024;

/// A field element, encoded as described in the module docs.
#[derive(
    Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Elem(pub(crate) u32);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A subfield, realized as the fixed set of `x ↦ x^{p^j}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subfield {
    /// Degree `j` over the prime field; `j | k`.
    pub degree: u32,
    pub order: u32,
    /// Elements in increasing encoding order.
    pub elements: Vec<Elem>,
}

impl Subfield {
    pub fn contains(&self, a: Elem) -> bool {
        self.elements.binary_search(&a).is_ok()
    }
}

/// An immutable finite field context.
#[derive(Clone)]
pub struct FieldCtx {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    add_table: Option<Vec<u32>>,
    neg: Vec<u32>,
    trace: Vec<u32>,
    trmul: Option<Vec<u16>>,
    roots: Vec<Complex64>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldCtx({})", self.description())
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k && self.modulus == other.modulus
    }
}

impl Eq for FieldCtx {}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d as u64 * d as u64 <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
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

impl FieldCtx {
    /// GF(p^k) with the default modulus.
    pub fn new(p: u32, k: u32) -> Result<FieldCtx> {
        Self::check_params(p, k)?;
        let modulus = poly::default_modulus(p, k);
        Self::with_modulus(p, k, &modulus)
    }

    /// The prime field GF(p).
    pub fn prime(p: u32) -> Result<FieldCtx> {
        Self::new(p, 1)
    }

    fn check_params(p: u32, k: u32) -> Result<u64> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p == 2 {
            return Err(Error::EvenCharacteristic);
        }
        if k == 0 {
            return Err(Error::ZeroDegree);
        }
        let q = (p as u64).checked_pow(k).unwrap_or(u64::MAX);
        if q > MAX_ORDER {
            return Err(Error::FieldTooLarge(q));
        }
        Ok(q)
    }

    /// GF(p^k) defined by an explicit monic modulus (low degree first).
    pub fn with_modulus(p: u32, k: u32, modulus: &[u32]) -> Result<FieldCtx> {
        let q = Self::check_params(p, k)? as u32;
        if modulus.len() != k as usize + 1 || modulus[k as usize] != 1 || modulus.iter().any(|&c| c >= p)
        {
            return Err(Error::BadModulus { expected: k, got: modulus.to_vec() });
        }
        if !poly::is_irreducible(modulus, p) {
            return Err(Error::ReducibleModulus(modulus.to_vec()));
        }
        let (exp, log) = Self::build_log_tables(p, k, q, modulus);
        let neg: Vec<u32> = (0..q)
            .map(|v| {
                let d = poly::decode(v, p, k);
                let n: Vec<u32> = d.iter().map(|&c| (p - c) % p).collect();
                poly::encode(&n, p)
            })
            .collect();
        let mut ctx = FieldCtx {
            p,
            k,
            q,
            modulus: modulus.to_vec(),
            exp,
            log,
            add_table: None,
            neg,
            trace: Vec::new(),
            trmul: None,
            roots: (0..p)
                .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / p as f64))
                .collect(),
        };
        if k > 1 && q <= ADD_TABLE_MAX {
            let mut t = vec![0u32; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    t[(a * q + b) as usize] = ctx.add_digits(a, b);
                }
            }
            ctx.add_table = Some(t);
        }
        ctx.trace = (0..q).map(|a| ctx.compute_trace(Elem(a))).collect();
        if q <= TRMUL_TABLE_MAX {
            let mut t = vec![0u16; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    t[(a * q + b) as usize] = ctx.trace[ctx.mul(Elem(a), Elem(b)).0 as usize] as u16;
                }
            }
            ctx.trmul = Some(t);
        }
        Ok(ctx)
    }

    fn build_log_tables(p: u32, k: u32, q: u32, modulus: &[u32]) -> (Vec<u32>, Vec<u32>) {
        let n = q - 1;
        let factors = prime_factors(n);
        let pow = |g: &[u32], mut e: u32| -> Vec<u32> {
            let mut acc = vec![1u32];
            let mut base = g.to_vec();
            while e > 0 {
                if e & 1 == 1 {
                    acc = poly::mulmod(&acc, &base, modulus, p);
                }
                base = poly::mulmod(&base, &base, modulus, p);
                e >>= 1;
            }
            acc
        };
        let generator = (2..q.max(3))
            .map(|v| poly::decode(v, p, k))
            .find(|g| factors.iter().all(|&r| pow(g, n / r) != vec![1]))
            .unwrap_or_else(|| vec![1]);
        let mut exp = vec![0u32; 2 * n as usize];
        let mut log = vec![u32::MAX; q as usize];
        let mut cur = vec![1u32];
        for i in 0..n {
            let v = poly::encode(&cur, p);
            exp[i as usize] = v;
            exp[(i + n) as usize] = v;
            log[v as usize] = i;
            cur = poly::mulmod(&cur, &generator, modulus, p);
        }
        (exp, log)
    }

    fn add_digits(&self, mut a: u32, mut b: u32) -> u32 {
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.k {
            let d = (a % self.p + b % self.p) % self.p;
            out += d * place;
            place *= self.p;
            a /= self.p;
            b /= self.p;
        }
        out
    }

    fn compute_trace(&self, a: Elem) -> u32 {
        let mut acc = Elem::ZERO;
        let mut cur = a;
        for _ in 0..self.k {
            acc = self.add(acc, cur);
            cur = self.pow(cur, self.p as u64);
        }
        debug_assert!(acc.0 < self.p, "trace must land in the prime field");
        acc.0
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Field order `q = p^k`.
    #[inline]
    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn elem(&self, v: u32) -> Result<Elem> {
        if v < self.q {
            Ok(Elem(v))
        } else {
            Err(Error::ElementOutOfRange { value: v, order: self.q })
        }
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> Elem {
        Elem(n.rem_euclid(self.p as i64) as u32)
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + Clone {
        (0..self.q).map(Elem)
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if self.k == 1 {
            let s = a.0 + b.0;
            return Elem(if s >= self.p { s - self.p } else { s });
        }
        match &self.add_table {
            Some(t) => Elem(t[(a.0 * self.q + b.0) as usize]),
            None => Elem(self.add_digits(a.0, b.0)),
        }
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        Elem(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a.0 == 0 || b.0 == 0 {
            return Elem::ZERO;
        }
        let i = self.log[a.0 as usize] + self.log[b.0 as usize];
        Elem(self.exp[i as usize])
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a.0 == 0 {
            return Err(Error::InverseOfZero);
        }
        let n = self.q - 1;
        let l = self.log[a.0 as usize];
        Ok(Elem(self.exp[((n - l) % n) as usize]))
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if e == 0 {
            return Elem::ONE;
        }
        if a.0 == 0 {
            return Elem::ZERO;
        }
        let n = (self.q - 1) as u64;
        let l = self.log[a.0 as usize] as u64;
        Elem(self.exp[((l * (e % n)) % n) as usize])
    }

    /// `Tr(a)` as an element of the prime subfield.
    #[inline]
    pub fn trace(&self, a: Elem) -> Elem {
        Elem(self.trace[a.0 as usize])
    }

    /// `Tr(a)` as an integer in `[0, p)`.
    #[inline]
    pub fn trace_value(&self, a: Elem) -> u32 {
        self.trace[a.0 as usize]
    }

    /// `Tr(a·b)` as an integer in `[0, p)`.
    #[inline]
    pub fn trace_of_product(&self, a: Elem, b: Elem) -> u32 {
        match &self.trmul {
            Some(t) => t[(a.0 * self.q + b.0) as usize] as u32,
            None => self.trace[self.mul(a, b).0 as usize],
        }
    }

    /// `exp(2πi·t/p)` for a trace value `t` (taken mod p).
    #[inline]
    pub fn root(&self, t: u32) -> Complex64 {
        self.roots[(t % self.p) as usize]
    }

    /// The canonical additive character `e(a) = exp(2πi·Tr(a)/p)`.
    #[inline]
    pub fn character(&self, a: Elem) -> Complex64 {
        self.roots[self.trace[a.0 as usize] as usize]
    }

    /// The twisted character `a ↦ e(c·a)`; nonprincipal for `c ≠ 0`.
    pub fn twisted_character(&self, c: Elem, a: Elem) -> Complex64 {
        self.character(self.mul(c, a))
    }

    /// Euler's criterion; `0` counts as a square.
    pub fn is_square(&self, a: Elem) -> bool {
        a.0 == 0 || self.pow(a, ((self.q - 1) / 2) as u64) == Elem::ONE
    }

    /// Squareness of every element, decided by enumerating `x²`.
    pub fn squares_by_enumeration(&self) -> Vec<bool> {
        let mut out = vec![false; self.q as usize];
        for x in self.elements() {
            out[self.mul(x, x).0 as usize] = true;
        }
        out
    }

    pub fn minus_one_is_square(&self) -> bool {
        self.is_square(self.neg(Elem::ONE))
    }

    /// Some `i` with `i² = -1`, when one exists.
    pub fn sqrt_minus_one(&self) -> Option<Elem> {
        let m1 = self.neg(Elem::ONE);
        self.elements().find(|&x| self.mul(x, x) == m1)
    }

    /// `x ↦ x^{p^j}`.
    pub fn frobenius(&self, a: Elem, j: u32) -> Elem {
        let mut cur = a;
        for _ in 0..j {
            cur = self.pow(cur, self.p as u64);
        }
        cur
    }

    /// One subfield per divisor `j` of `k`, in increasing order.
    pub fn subfields(&self) -> Vec<Subfield> {
        (1..=self.k)
            .filter(|j| self.k % j == 0)
            .map(|j| {
                let elements: Vec<Elem> =
                    self.elements().filter(|&x| self.frobenius(x, j) == x).collect();
                Subfield { degree: j, order: elements.len() as u32, elements }
            })
            .collect()
    }

    /// `p^k/c_0,...,c_k`.
    pub fn description(&self) -> String {
        let coeffs: Vec<String> = self.modulus.iter().map(|c| c.to_string()).collect();
        format!("{}^{}/{}", self.p, self.k, coeffs.join(","))
    }

    /// Parse `p^k/c_0,...,c_k`, `p^k`, or `p`.
    pub fn parse(s: &str) -> Result<FieldCtx> {
        let bad = |why: &str| Error::ParseField(s.to_string(), why.to_string());
        let s_trim = s.trim();
        let (head, modulus) = match s_trim.split_once('/') {
            Some((h, m)) => (h, Some(m)),
            None => (s_trim, None),
        };
        let (p, k) = match head.split_once('^') {
            Some((p, k)) => (
                p.trim().parse::<u32>().map_err(|_| bad("p is not an integer"))?,
                k.trim().parse::<u32>().map_err(|_| bad("k is not an integer"))?,
            ),
            None => (head.trim().parse::<u32>().map_err(|_| bad("p is not an integer"))?, 1),
        };
        match modulus {
            None => FieldCtx::new(p, k),
            Some(m) => {
                let coeffs = m
                    .split(',')
                    .map(|c| c.trim().parse::<u32>())
                    .collect::<std::result::Result<Vec<u32>, _>>()
                    .map_err(|_| bad("modulus coefficients must be integers"))?;
                FieldCtx::with_modulus(p, k, &coeffs)
            }
        }
    }
}

impl fmt::Display for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.description())
    }
}

impl FromStr for FieldCtx {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FieldCtx::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: u32, k: u32) -> FieldCtx {
        FieldCtx::new(p, k).unwrap()
    }

    #[test]
    fn gf7_products_and_inverse() {
        let f = gf(7, 1);
        assert_eq!(f.mul(Elem(3), Elem(5)), Elem(1));
        // exhaustive search oracle for 3x = 1
        let oracle = (0..7).find(|x| (3 * x) % 7 == 1).unwrap();
        assert_eq!(f.inv(Elem(3)).unwrap(), Elem(oracle));
        assert_eq!(f.inv(Elem(3)).unwrap(), Elem(5));
    }

    #[test]
    fn inverse_of_zero_is_an_error() {
        assert_eq!(gf(7, 1).inv(Elem::ZERO), Err(Error::InverseOfZero));
        assert!(gf(7, 1).div(Elem::ONE, Elem::ZERO).is_err());
    }

    #[test]
    fn gf9_x_squared_is_minus_one() {
        let f = FieldCtx::with_modulus(3, 2, &[1, 0, 1]).unwrap();
        let x = Elem(3); // digits (0, 1) = x
        assert_eq!(f.mul(x, x), Elem(2));
        assert_eq!(f.neg(Elem::ONE), Elem(2));
    }

    #[test]
    fn trace_examples() {
        let f7 = gf(7, 1);
        for a in f7.elements() {
            assert_eq!(f7.trace(a), a);
        }
        let f9 = FieldCtx::with_modulus(3, 2, &[1, 0, 1]).unwrap();
        assert_eq!(f9.trace(Elem(3)), Elem::ZERO);
        // Tr(1) = k mod p
        assert_eq!(f9.trace_value(Elem::ONE), 2);
    }

    #[test]
    fn character_orthogonality_and_unitarity() {
        for f in [gf(3, 1), gf(7, 1), gf(3, 2), gf(5, 2), gf(3, 4)] {
            let s: Complex64 = f.elements().map(|a| f.character(a)).sum();
            assert!(s.norm() < 1e-9, "{f}: {s}");
            for a in f.elements() {
                let prod = f.character(a) * f.character(f.neg(a));
                assert!((prod - Complex64::new(1.0, 0.0)).norm() < 1e-12);
                assert!((f.character(a).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn character_is_additive() {
        let f = gf(3, 3);
        for a in f.elements().step_by(3) {
            for b in f.elements().step_by(5) {
                let lhs = f.character(f.add(a, b));
                let rhs = f.character(a) * f.character(b);
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn minus_one_examples() {
        assert!(!gf(7, 1).minus_one_is_square());
        assert!(gf(5, 1).minus_one_is_square());
        assert!(FieldCtx::with_modulus(3, 2, &[1, 0, 1]).unwrap().minus_one_is_square());
    }

    #[test]
    fn minus_one_square_iff_q_is_1_mod_4() {
        for p in [3u32, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            for k in 1..=6 {
                let Ok(f) = FieldCtx::new(p, k) else { continue };
                if f.order() > 1000 {
                    continue;
                }
                assert_eq!(f.minus_one_is_square(), f.order() % 4 == 1, "{f}");
                if k % 2 == 0 {
                    assert!(f.minus_one_is_square());
                }
            }
        }
    }

    #[test]
    fn euler_matches_enumeration() {
        for f in [gf(3, 1), gf(11, 1), gf(3, 3), gf(5, 2), gf(7, 2), gf(3, 5)] {
            let enumerated = f.squares_by_enumeration();
            for a in f.elements() {
                assert_eq!(f.is_square(a), enumerated[a.0 as usize], "{f} {a}");
            }
        }
    }

    #[test]
    fn subfield_lattice() {
        let f7 = gf(7, 1);
        let s = f7.subfields();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].order, 7);

        let f81 = gf(3, 4);
        let orders: Vec<u32> = f81.subfields().iter().map(|s| s.order).collect();
        assert_eq!(orders, vec![3, 9, 81]);
        for sub in f81.subfields() {
            for &a in &sub.elements {
                for &b in &sub.elements {
                    assert!(sub.contains(f81.add(a, b)));
                    assert!(sub.contains(f81.mul(a, b)));
                }
            }
        }

        let f9 = gf(3, 2);
        let s3 = &f9.subfields()[0];
        assert_eq!(s3.elements, vec![Elem(0), Elem(1), Elem(2)]);
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for f in [gf(3, 1), gf(5, 1), gf(3, 2), gf(7, 2), gf(3, 4)] {
            let els: Vec<Elem> = f.elements().collect();
            let stride = if f.order() > 27 { 7 } else { 1 };
            for &a in els.iter().step_by(stride) {
                for &b in els.iter().step_by(stride) {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for &c in els.iter().step_by(stride * 3) {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), Elem::ONE);
                }
                assert_eq!(f.add(a, f.neg(a)), Elem::ZERO);
            }
        }
    }

    #[test]
    fn parse_and_display() {
        let f = FieldCtx::parse("3^2/1,0,1").unwrap();
        assert_eq!(f.description(), "3^2/1,0,1");
        assert_eq!(FieldCtx::parse("3^2").unwrap(), f);
        assert_eq!(FieldCtx::parse("7").unwrap().description(), "7^1/0,1");
        assert_eq!(FieldCtx::parse("4^1").unwrap_err(), Error::NotPrime(4));
        assert_eq!(FieldCtx::parse("2^3").unwrap_err(), Error::EvenCharacteristic);
        assert!(matches!(FieldCtx::parse("5^2/1,0,1"), Err(Error::ReducibleModulus(_))));
        assert!(matches!(FieldCtx::parse("3^11"), Err(Error::FieldTooLarge(_))));
        assert!(matches!(FieldCtx::parse("x^2"), Err(Error::ParseField(..))));
        assert!(matches!(FieldCtx::parse("3^2/1,0,2,1"), Err(Error::BadModulus { .. })));
    }

    #[test]
    fn large_field_without_tables() {
        let f = gf(3, 10);
        assert_eq!(f.order(), 59_049);
        let a = Elem(12_345);
        let b = Elem(40_000);
        assert_eq!(f.sub(f.add(a, b), b), a);
        assert_eq!(f.mul(f.div(a, b).unwrap(), b), a);
        assert_eq!(f.trace_of_product(a, b), f.trace_value(f.mul(a, b)));
    }
}
