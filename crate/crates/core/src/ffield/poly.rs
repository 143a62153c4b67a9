//! Dense polynomials over GF(p), coefficients low degree first.
//!
//! Only used while building a field context; runtime arithmetic goes through
//! the log/exp tables.

pub(crate) type Poly = Vec<u32>;

pub(crate) fn trim(mut a: Poly) -> Poly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

pub(crate) fn degree(a: &[u32]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

fn inv_mod_p(a: u32, p: u32) -> u32 {
    pow_mod_p(a, p - 2, p)
}

pub(crate) fn pow_mod_p(b: u32, mut e: u32, p: u32) -> u32 {
    let p64 = p as u64;
    let mut acc = 1u64;
    let mut base = (b % p) as u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p64;
        }
        base = base * base % p64;
        e >>= 1;
    }
    acc as u32
}

/// Remainder of `a` modulo a nonzero polynomial `m`.
pub(crate) fn rem(a: &[u32], m: &[u32], p: u32) -> Poly {
    let dm = degree(m).expect("modulus is nonzero");
    let lead_inv = inv_mod_p(m[dm], p) as u64;
    let mut r: Poly = a.to_vec();
    while let Some(dr) = degree(&r) {
        if dr < dm {
            break;
        }
        let factor = (r[dr] as u64 * lead_inv % p as u64) as u32;
        let shift = dr - dm;
        for (i, &c) in m.iter().enumerate().take(dm + 1) {
            let sub = (factor as u64 * c as u64 % p as u64) as u32;
            r[shift + i] = (r[shift + i] + p - sub) % p;
        }
    }
    trim(r)
}

pub(crate) fn mul(a: &[u32], b: &[u32], p: u32) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    trim(out.into_iter().map(|c| c as u32).collect())
}

pub(crate) fn mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Poly {
    rem(&mul(a, b, p), m, p)
}

/// Base-p digit encoding of a residue of degree < k.
pub(crate) fn encode(a: &[u32], p: u32) -> u32 {
    a.iter().rev().fold(0u32, |acc, &c| acc * p + c)
}

pub(crate) fn decode(mut v: u32, p: u32, k: u32) -> Poly {
    let mut out = Vec::with_capacity(k as usize);
    for _ in 0..k {
        out.push(v % p);
        v /= p;
    }
    trim(out)
}

/// Trial division by every monic polynomial of degree 1..=deg/2.
pub(crate) fn is_irreducible(m: &[u32], p: u32) -> bool {
    let Some(d) = degree(m) else { return false };
    if d == 0 {
        return false;
    }
    for dd in 1..=d / 2 {
        let count = (p as u64).pow(dd as u32);
        for low in 0..count {
            let mut cand = decode_full(low, p, dd);
            cand.push(1);
            if rem(m, &cand, p).is_empty() {
                return false;
            }
        }
    }
    true
}

fn decode_full(mut v: u64, p: u32, len: usize) -> Poly {
    let mut out = Vec::with_capacity(len + 1);
    for _ in 0..len {
        out.push((v % p as u64) as u32);
        v /= p as u64;
    }
    out
}

/// The lexicographically smallest monic irreducible of degree `k`, ordered by
/// the base-p value of its lower coefficients (low degree first).
pub(crate) fn default_modulus(p: u32, k: u32) -> Poly {
    let count = (p as u64).pow(k);
    for low in 0..count {
        let mut cand = decode_full(low, p, k as usize);
        cand.push(1);
        if is_irreducible(&cand, p) {
            return cand;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}
