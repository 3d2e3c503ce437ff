//! Unramified extensions of ℤ_q truncated at precision q^N, presented as
//! (ℤ/q^N)[t]/(m) with m monic and irreducible mod q.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fq::{self, Fp};
use crate::error::{Error, Result};
use crate::valuation::{check_odd_prime, vq};

/// Largest residue characteristic the u64 field arithmetic supports.
pub const MAX_Q: u64 = 1 << 62;

#[derive(Clone, Debug)]
pub struct UnramifiedRing {
    q: u64,
    prec: u32,
    modulus: BigInt,
    m: Vec<BigInt>,
}

/// Coefficient vector of length `degree`, entries in [0, q^N).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UrElt(pub Vec<BigInt>);

fn zn_reduce(a: &mut Vec<BigInt>, modulus: &BigInt) {
    for c in a.iter_mut() {
        *c = c.mod_floor(modulus);
    }
    while a.last().is_some_and(Zero::is_zero) {
        a.pop();
    }
}

fn zn_add(a: &[BigInt], b: &[BigInt], modulus: &BigInt) -> Vec<BigInt> {
    let n = a.len().max(b.len());
    let zero = BigInt::zero();
    let mut out: Vec<BigInt> =
        (0..n).map(|i| a.get(i).unwrap_or(&zero) + b.get(i).unwrap_or(&zero)).collect();
    zn_reduce(&mut out, modulus);
    out
}

fn zn_sub(a: &[BigInt], b: &[BigInt], modulus: &BigInt) -> Vec<BigInt> {
    let n = a.len().max(b.len());
    let zero = BigInt::zero();
    let mut out: Vec<BigInt> =
        (0..n).map(|i| a.get(i).unwrap_or(&zero) - b.get(i).unwrap_or(&zero)).collect();
    zn_reduce(&mut out, modulus);
    out
}

fn zn_mul(a: &[BigInt], b: &[BigInt], modulus: &BigInt) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    zn_reduce(&mut out, modulus);
    out
}

/// Division by a monic polynomial over ℤ/M.
fn zn_divrem(a: &[BigInt], b: &[BigInt], modulus: &BigInt) -> (Vec<BigInt>, Vec<BigInt>) {
    let db = b.len() - 1;
    debug_assert!(b[db].is_one());
    let mut r = a.to_vec();
    if r.len() <= db {
        return (Vec::new(), r);
    }
    let mut quo = vec![BigInt::zero(); r.len() - db];
    for k in (0..quo.len()).rev() {
        let c = r[k + db].mod_floor(modulus);
        if !c.is_zero() {
            for (i, y) in b.iter().enumerate() {
                r[k + i] -= &c * y;
            }
        }
        quo[k] = c;
    }
    r.truncate(db);
    zn_reduce(&mut r, modulus);
    zn_reduce(&mut quo, modulus);
    (quo, r)
}

fn lift_fp(a: &[u64]) -> Vec<BigInt> {
    a.iter().map(|&c| BigInt::from(c)).collect()
}

fn to_fp(a: &[BigInt], q: u64) -> Fp {
    let qb = BigInt::from(q);
    fq::trim(a.iter().map(|c| c.mod_floor(&qb).to_u64().unwrap()).collect())
}

/// One quadratic Hensel step: from f ≡ g·h and s·g + t·h ≡ 1 mod M to the
/// same relations mod M², keeping h monic.
fn hensel_step(
    f: &[BigInt],
    g: &[BigInt],
    h: &[BigInt],
    s: &[BigInt],
    t: &[BigInt],
    m2: &BigInt,
) -> [Vec<BigInt>; 4] {
    let e = zn_sub(f, &zn_mul(g, h, m2), m2);
    let (qq, rr) = zn_divrem(&zn_mul(s, &e, m2), h, m2);
    let g1 = zn_add(&zn_add(g, &zn_mul(t, &e, m2), m2), &zn_mul(&qq, g, m2), m2);
    let h1 = zn_add(h, &rr, m2);
    let b = zn_sub(&zn_add(&zn_mul(s, &g1, m2), &zn_mul(t, &h1, m2), m2), &[BigInt::one()], m2);
    let (c, d) = zn_divrem(&zn_mul(s, &b, m2), &h1, m2);
    let s1 = zn_sub(s, &d, m2);
    let t1 = zn_sub(&zn_sub(t, &zn_mul(t, &b, m2), m2), &zn_mul(&c, &g1, m2), m2);
    [g1, h1, s1, t1]
}

fn padded(mut v: Vec<BigInt>, n: usize) -> Vec<BigInt> {
    v.resize(n, BigInt::zero());
    v
}

impl UnramifiedRing {
    /// Ring with an explicit modulus; `m` must be monic and irreducible mod q.
    pub fn new(q: u64, prec: u32, m: Vec<BigInt>) -> Result<Self> {
        check_odd_prime(q)?;
        if q >= MAX_Q {
            return Err(Error::Oracle(format!("residue characteristic {q} too large")));
        }
        if prec == 0 {
            return Err(Error::Oracle("precision must be positive".into()));
        }
        let modulus = BigInt::from(q).pow(prec);
        let mut m = m;
        zn_reduce(&mut m, &modulus);
        if m.len() < 2 || !m.last().unwrap().is_one() {
            return Err(Error::Oracle("modulus must be monic of positive degree".into()));
        }
        let mbar = to_fp(&m, q);
        let ddf = fq::distinct_degree(&mbar, q);
        if ddf.len() != 1 || ddf[0].0 != mbar.len() - 1 {
            return Err(Error::Oracle("modulus is reducible mod q".into()));
        }
        Ok(UnramifiedRing { q, prec, modulus, m })
    }

    /// ℤ_q[ζ_r] mod q^N, with m the Hensel lift of the lexicographically
    /// least irreducible factor of Φ_r mod q. Returns the ring and ζ = t.
    pub fn cyclotomic(q: u64, r: u32, prec: u32) -> Result<(Self, UrElt)> {
        check_odd_prime(q)?;
        if q == r as u64 {
            return Err(Error::Oracle("q = r is ramified in the cyclotomic field".into()));
        }
        if q >= MAX_Q {
            return Err(Error::Oracle(format!("residue characteristic {q} too large")));
        }
        let phi_bar: Fp = vec![1; r as usize];
        let seed = q.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ r as u64;
        let factors = fq::factor_squarefree(&phi_bar, q, seed);
        let hbar = factors[0].clone();
        let modulus = BigInt::from(q).pow(prec);
        let m = if hbar.len() == phi_bar.len() {
            vec![BigInt::one(); r as usize]
        } else {
            let gbar = fq::divrem(&phi_bar, &hbar, q).0;
            let (_, sbar, tbar) = fq::xgcd(&gbar, &hbar, q);
            let f = vec![BigInt::one(); r as usize];
            let (mut g, mut h, mut s, mut t) = (lift_fp(&gbar), lift_fp(&hbar), lift_fp(&sbar), lift_fp(&tbar));
            let mut cur = BigInt::from(q);
            while cur < modulus {
                cur = &cur * &cur;
                [g, h, s, t] = hensel_step(&f, &g, &h, &s, &t, &cur);
            }
            let mut h = h;
            zn_reduce(&mut h, &modulus);
            h
        };
        let ring = UnramifiedRing { q, prec, modulus, m };
        let zeta = ring.t();
        Ok((ring, zeta))
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn degree(&self) -> usize {
        self.m.len() - 1
    }

    pub fn modulus_poly(&self) -> &[BigInt] {
        &self.m
    }

    /// q^degree, the size of the residue field.
    pub fn residue_size(&self) -> BigUint {
        BigUint::from(self.q).pow(self.degree() as u32)
    }

    fn wrap(&self, mut v: Vec<BigInt>) -> UrElt {
        if v.len() > self.degree() {
            v = zn_divrem(&v, &self.m, &self.modulus).1;
        } else {
            zn_reduce(&mut v, &self.modulus);
        }
        UrElt(padded(v, self.degree()))
    }

    /// Element from an arbitrary coefficient vector, reduced mod (q^N, m).
    pub fn from_coeffs(&self, v: Vec<BigInt>) -> UrElt {
        self.wrap(v)
    }

    pub fn zero(&self) -> UrElt {
        UrElt(vec![BigInt::zero(); self.degree()])
    }

    pub fn one(&self) -> UrElt {
        self.from_int(&BigInt::one())
    }

    pub fn from_int(&self, n: &BigInt) -> UrElt {
        self.wrap(vec![n.clone()])
    }

    /// The class of t; a constant when the degree is 1.
    pub fn t(&self) -> UrElt {
        self.wrap(vec![BigInt::zero(), BigInt::one()])
    }

    pub fn add(&self, a: &UrElt, b: &UrElt) -> UrElt {
        self.wrap(zn_add(&a.0, &b.0, &self.modulus))
    }

    pub fn sub(&self, a: &UrElt, b: &UrElt) -> UrElt {
        self.wrap(zn_sub(&a.0, &b.0, &self.modulus))
    }

    pub fn neg(&self, a: &UrElt) -> UrElt {
        self.sub(&self.zero(), a)
    }

    pub fn mul(&self, a: &UrElt, b: &UrElt) -> UrElt {
        self.wrap(zn_mul(&a.0, &b.0, &self.modulus))
    }

    pub fn scale(&self, a: &UrElt, k: &BigInt) -> UrElt {
        self.wrap(a.0.iter().map(|c| c * k).collect())
    }

    pub fn pow(&self, a: &UrElt, e: &BigUint) -> UrElt {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }

    pub fn pow_u64(&self, a: &UrElt, e: u64) -> UrElt {
        self.pow(a, &BigUint::from(e))
    }

    pub fn is_zero(&self, a: &UrElt) -> bool {
        a.0.iter().all(Zero::is_zero)
    }

    /// Minimum coefficient valuation, `None` when the element is 0 mod q^N.
    /// Exact for the integral basis 1, t, …, t^(d−1) because the extension
    /// is unramified.
    pub fn val(&self, a: &UrElt) -> Option<u64> {
        a.0.iter().filter_map(|c| vq(c, self.q)).min()
    }

    pub fn is_unit(&self, a: &UrElt) -> bool {
        self.val(a) == Some(0)
    }

    fn residue(&self, a: &UrElt) -> Fp {
        to_fp(&a.0, self.q)
    }

    /// Inverse of a unit: invert mod q, then Newton y ← y(2 − ay).
    pub fn inv(&self, a: &UrElt) -> Result<UrElt> {
        if !self.is_unit(a) {
            return Err(Error::Oracle("inverse of a non-unit".into()));
        }
        let mbar = to_fp(&self.m, self.q);
        let (_, s, _) = fq::xgcd(&self.residue(a), &mbar, self.q);
        let mut y = self.wrap(lift_fp(&s));
        let two = self.from_int(&BigInt::from(2));
        let mut good = 1u32;
        while good < self.prec {
            y = self.mul(&y, &self.sub(&two, &self.mul(a, &y)));
            good *= 2;
        }
        Ok(y)
    }

    /// Square root of a unit, if one exists: Tonelli–Shanks in the residue
    /// field followed by Newton lifting.
    pub fn sqrt(&self, a: &UrElt) -> Result<Option<UrElt>> {
        if !self.is_unit(a) {
            return Err(Error::Oracle("square root of a non-unit".into()));
        }
        let field = UnramifiedRing {
            q: self.q,
            prec: 1,
            modulus: BigInt::from(self.q),
            m: lift_fp(&to_fp(&self.m, self.q)),
        };
        let abar = field.wrap(a.0.clone());
        let Some(root) = field.tonelli_shanks(&abar) else {
            return Ok(None);
        };
        let mut y = self.wrap(root.0);
        let two = BigInt::from(2);
        let mut good = 1u32;
        while good < self.prec {
            let num = self.sub(&self.mul(&y, &y), a);
            let den = self.inv(&self.scale(&y, &two))?;
            y = self.sub(&y, &self.mul(&num, &den));
            good *= 2;
        }
        Ok(Some(y))
    }

    /// Tonelli–Shanks in the residue field (self must have precision 1).
    fn tonelli_shanks(&self, a: &UrElt) -> Option<UrElt> {
        let size = self.residue_size();
        let one = self.one();
        let half = (&size - 1u32) >> 1;
        if self.pow(a, &half) != one {
            return None;
        }
        let mut s = 0u64;
        let mut t = &size - 1u32;
        while t.is_even() {
            t >>= 1;
            s += 1;
        }
        let minus_one = self.neg(&one);
        let mut rng = ChaCha8Rng::seed_from_u64(self.q ^ (self.degree() as u64) << 40);
        let z = loop {
            let cand = self.wrap((0..self.degree()).map(|_| BigInt::from(rng.gen_range(0..self.q))).collect());
            if !self.is_zero(&cand) && self.pow(&cand, &half) == minus_one {
                break cand;
            }
        };
        let mut mm = s;
        let mut c = self.pow(&z, &t);
        let mut tt = self.pow(a, &t);
        let mut res = self.pow(a, &((&t + 1u32) >> 1));
        while tt != one {
            let mut i = 0u64;
            let mut probe = tt.clone();
            while probe != one {
                probe = self.mul(&probe, &probe);
                i += 1;
            }
            let mut b = c.clone();
            for _ in 0..mm - i - 1 {
                b = self.mul(&b, &b);
            }
            mm = i;
            c = self.mul(&b, &b);
            tt = self.mul(&tt, &c);
            res = self.mul(&res, &b);
        }
        Some(res)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn cyclotomic_root_of_unity() {
        for (q, r) in [(3u64, 5u32), (11, 5), (19, 5), (3, 7), (29, 7), (23, 11), (103, 13)] {
            let (ring, zeta) = UnramifiedRing::cyclotomic(q, r, 20).unwrap();
            let zr = ring.pow_u64(&zeta, r as u64);
            assert_eq!(zr, ring.one(), "q={q} r={r}");
            assert_ne!(zeta, ring.one());
            // Φ_r(ζ) = 0 exactly mod q^N.
            let mut acc = ring.zero();
            for k in 0..r {
                acc = ring.add(&acc, &ring.pow_u64(&zeta, k as u64));
            }
            assert!(ring.is_zero(&acc));
        }
    }

    #[test]
    fn inverse_and_sqrt() {
        let (ring, zeta) = UnramifiedRing::cyclotomic(7, 5, 24).unwrap();
        let x = ring.add(&zeta, &ring.from_int(&int(3)));
        let y = ring.inv(&x).unwrap();
        assert_eq!(ring.mul(&x, &y), ring.one());
        let sq = ring.mul(&x, &x);
        let root = ring.sqrt(&sq).unwrap().unwrap();
        assert_eq!(ring.mul(&root, &root), sq);
        assert!(ring.inv(&ring.from_int(&int(7))).is_err());
    }

    #[test]
    fn non_square_detected() {
        // ℤ/7^10 itself; 3 is a non-residue mod 7 and 2 = 3².
        let ring = UnramifiedRing::new(7, 10, vec![int(0), int(1)]).unwrap();
        assert!(ring.sqrt(&ring.from_int(&int(3))).unwrap().is_none());
        let r2 = ring.sqrt(&ring.from_int(&int(2))).unwrap().unwrap();
        assert_eq!(ring.mul(&r2, &r2), ring.from_int(&int(2)));
    }

    #[test]
    fn reducible_modulus_rejected() {
        assert!(UnramifiedRing::new(7, 4, vec![int(-1), int(0), int(1)]).is_err());
    }

    #[test]
    fn valuation_of_multiples() {
        let (ring, zeta) = UnramifiedRing::cyclotomic(3, 7, 16).unwrap();
        let x = ring.scale(&ring.sub(&zeta, &ring.one()), &int(9));
        assert_eq!(ring.val(&x), Some(2));
        assert_eq!(ring.val(&ring.zero()), None);
    }
}
