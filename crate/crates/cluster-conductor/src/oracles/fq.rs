//! Polynomials over the prime field F_q, q < 2^62, and factorization of
//! polynomials whose irreducible factors share a degree.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::valuation::{mul_mod, pow_mod};

/// Dense coefficient vector, constant term first, no trailing zeros.
pub type Fp = Vec<u64>;

pub fn trim(mut a: Fp) -> Fp {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

pub fn inv_mod(a: u64, q: u64) -> u64 {
    pow_mod(a % q, q - 2, q)
}

pub fn add(a: &[u64], b: &[u64], q: u64) -> Fp {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| {
                let s = a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0);
                if s >= q { s - q } else { s }
            })
            .collect(),
    )
}

pub fn sub(a: &[u64], b: &[u64], q: u64) -> Fp {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| {
                let (x, y) = (a.get(i).copied().unwrap_or(0), b.get(i).copied().unwrap_or(0));
                if x >= y { x - y } else { x + q - y }
            })
            .collect(),
    )
}

pub fn mul(a: &[u64], b: &[u64], q: u64) -> Fp {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mul_mod(x, y, q)) % q;
        }
    }
    trim(out)
}

pub fn scale(a: &[u64], k: u64, q: u64) -> Fp {
    trim(a.iter().map(|&x| mul_mod(x, k, q)).collect())
}

/// Quotient and remainder; `b` must be nonzero.
pub fn divrem(a: &[u64], b: &[u64], q: u64) -> (Fp, Fp) {
    let db = b.len() - 1;
    let lc_inv = inv_mod(b[db], q);
    let mut r = a.to_vec();
    if r.len() <= db {
        return (Vec::new(), trim(r));
    }
    let mut quo = vec![0u64; r.len() - db];
    for k in (0..quo.len()).rev() {
        let c = mul_mod(r[k + db], lc_inv, q);
        quo[k] = c;
        if c == 0 {
            continue;
        }
        for (i, &y) in b.iter().enumerate() {
            let t = mul_mod(c, y, q);
            r[k + i] = if r[k + i] >= t { r[k + i] - t } else { r[k + i] + q - t };
        }
    }
    r.truncate(db);
    (trim(quo), trim(r))
}

pub fn rem(a: &[u64], b: &[u64], q: u64) -> Fp {
    divrem(a, b, q).1
}

pub fn monic(a: &[u64], q: u64) -> Fp {
    match a.last() {
        None => Vec::new(),
        Some(&lc) => scale(a, inv_mod(lc, q), q),
    }
}

pub fn gcd(a: &[u64], b: &[u64], q: u64) -> Fp {
    let (mut x, mut y) = (trim(a.to_vec()), trim(b.to_vec()));
    while !y.is_empty() {
        let r = rem(&x, &y, q);
        x = y;
        y = r;
    }
    monic(&x, q)
}

/// (g, s, t) with s·a + t·b = g monic.
pub fn xgcd(a: &[u64], b: &[u64], q: u64) -> (Fp, Fp, Fp) {
    let (mut r0, mut r1) = (trim(a.to_vec()), trim(b.to_vec()));
    let (mut s0, mut s1) = (vec![1u64], Vec::new());
    let (mut t0, mut t1) = (Vec::new(), vec![1u64]);
    while !r1.is_empty() {
        let (quo, r) = divrem(&r0, &r1, q);
        let s = sub(&s0, &mul(&quo, &s1, q), q);
        let t = sub(&t0, &mul(&quo, &t1, q), q);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
        t0 = std::mem::replace(&mut t1, t);
    }
    let k = inv_mod(*r0.last().expect("xgcd of zeros"), q);
    (scale(&r0, k, q), scale(&s0, k, q), scale(&t0, k, q))
}

/// `base^e mod m` for a big exponent.
pub fn powmod_poly(base: &[u64], e: &BigUint, m: &[u64], q: u64) -> Fp {
    let mut acc: Fp = rem(&[1], m, q);
    let b = rem(base, m, q);
    for i in (0..e.bits()).rev() {
        acc = rem(&mul(&acc, &acc, q), m, q);
        if e.bit(i) {
            acc = rem(&mul(&acc, &b, q), m, q);
        }
    }
    acc
}

/// Distinct-degree factorization of a squarefree monic polynomial:
/// pairs (d, product of all degree-d irreducible factors).
pub fn distinct_degree(f: &[u64], q: u64) -> Vec<(usize, Fp)> {
    let mut out = Vec::new();
    let mut rest = monic(f, q);
    let x: Fp = vec![0, 1];
    let mut h = x.clone();
    let qb = BigUint::from(q);
    let mut d = 0;
    while rest.len() > 1 {
        d += 1;
        if 2 * d > rest.len() - 1 {
            out.push((rest.len() - 1, rest));
            break;
        }
        h = powmod_poly(&h, &qb, &rest, q);
        let g = gcd(&rest, &sub(&h, &x, q), q);
        if g.len() > 1 {
            rest = divrem(&rest, &g, q).0;
            h = rem(&h, &rest, q);
            out.push((d, g));
        }
    }
    out
}

/// Cantor–Zassenhaus splitting of a monic product of distinct degree-d
/// irreducibles into its factors.
pub fn equal_degree(f: &[u64], d: usize, q: u64, rng: &mut ChaCha8Rng) -> Vec<Fp> {
    let n = f.len() - 1;
    if n == d {
        return vec![f.to_vec()];
    }
    let e = (BigUint::from(q).pow(d as u32) - 1u32) / 2u32;
    loop {
        let a: Fp = trim((0..n).map(|_| rng.gen_range(0..q)).collect());
        if a.len() < 2 {
            continue;
        }
        let b = powmod_poly(&a, &e, f, q);
        let g = gcd(f, &sub(&b, &[1], q), q);
        if g.len() > 1 && g.len() < f.len() {
            let h = divrem(f, &g, q).0;
            let mut out = equal_degree(&g, d, q, rng);
            out.extend(equal_degree(&h, d, q, rng));
            return out;
        }
    }
}

/// All monic irreducible factors of a squarefree polynomial, sorted
/// lexicographically by coefficient vector. The random stream is seeded by
/// `seed` so repeated runs agree.
pub fn factor_squarefree(f: &[u64], q: u64, seed: u64) -> Vec<Fp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (d, g) in distinct_degree(f, q) {
        out.extend(equal_degree(&g, d, q, &mut rng));
    }
    out.sort();
    out
}

pub fn legendre(a: u64, q: u64) -> i32 {
    match pow_mod(a % q, (q - 1) / 2, q) {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(p: &[u64], x: u64, q: u64) -> u64 {
        p.iter().rev().fold(0, |acc, &c| (mul_mod(acc, x, q) + c) % q)
    }

    #[test]
    fn cyclotomic_splits_by_order() {
        // 11 ≡ 1 mod 5, so Φ_5 splits into linear factors.
        let phi5 = vec![1u64; 5];
        let fs = factor_squarefree(&phi5, 11, 0);
        assert_eq!(fs.len(), 4);
        for f in &fs {
            assert_eq!(f.len(), 2);
            assert_eq!(eval(&phi5, (11 - f[0]) % 11, 11), 0);
        }
        // 3 has order 4 mod 5.
        assert_eq!(factor_squarefree(&phi5, 3, 0), vec![phi5.clone()]);
        // q = 19 has order 2 mod 5.
        let fs = factor_squarefree(&phi5, 19, 7);
        assert_eq!(fs.len(), 2);
        assert!(fs.iter().all(|f| f.len() == 3));
        let prod = mul(&fs[0], &fs[1], 19);
        assert_eq!(prod, phi5);
    }

    #[test]
    fn factorization_is_seed_independent() {
        let phi13 = vec![1u64; 13];
        assert_eq!(factor_squarefree(&phi13, 103, 1), factor_squarefree(&phi13, 103, 2));
    }

    proptest! {
        #[test]
        fn xgcd_bezout(a in prop::collection::vec(0u64..101, 1..8), b in prop::collection::vec(0u64..101, 1..8)) {
            let (a, b) = (trim(a), trim(b));
            prop_assume!(!a.is_empty() && !b.is_empty());
            let q = 101;
            let (g, s, t) = xgcd(&a, &b, q);
            prop_assert_eq!(add(&mul(&s, &a, q), &mul(&t, &b, q), q), g.clone());
            prop_assert!(rem(&a, &g, q).is_empty() && rem(&b, &g, q).is_empty());
        }

        #[test]
        fn factors_multiply_back(roots in prop::collection::btree_set(0u64..97, 1..6), extra in 0usize..2) {
            let q = 97;
            let mut f: Fp = vec![1];
            for &r in &roots {
                f = mul(&f, &[(q - r) % q, 1], q);
            }
            if extra == 1 {
                // 5 is a non-residue mod 97.
                f = mul(&f, &[q - 5, 0, 1], q);
            }
            let fs = factor_squarefree(&f, q, 3);
            let prod = fs.iter().fold(vec![1u64], |acc, g| mul(&acc, g, q));
            prop_assert_eq!(prod, f);
            prop_assert_eq!(fs.len(), roots.len() + extra);
        }
    }
}
