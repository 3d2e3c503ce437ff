//! Extended rationals and q-adic valuations.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A rational number or `+∞`. Infinity is the largest element and absorbs
/// addition, which is exactly the behaviour of the valuation of zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtRat {
    Finite(BigRational),
    Infinity,
}

pub use ExtRat::Infinity as INFINITY;

impl ExtRat {
    pub fn zero() -> Self {
        ExtRat::Finite(BigRational::zero())
    }

    pub fn int(n: i64) -> Self {
        ExtRat::Finite(BigRational::from_integer(n.into()))
    }

    /// `n/d`, reduced. Panics on `d == 0`.
    pub fn frac(n: i64, d: i64) -> Self {
        ExtRat::Finite(BigRational::new(n.into(), d.into()))
    }

    pub fn from_big(n: BigInt) -> Self {
        ExtRat::Finite(BigRational::from_integer(n))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRat::Infinity)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtRat::Finite(x) if x.is_zero())
    }

    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            ExtRat::Finite(x) => Some(x),
            ExtRat::Infinity => None,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, ExtRat::Finite(x) if x.is_integer())
    }

    /// Denominator of a finite value, 1 for infinity.
    pub fn denom(&self) -> BigInt {
        match self {
            ExtRat::Finite(x) => x.denom().clone(),
            ExtRat::Infinity => BigInt::one(),
        }
    }

    pub fn to_integer(&self) -> Option<BigInt> {
        match self {
            ExtRat::Finite(x) if x.is_integer() => Some(x.to_integer()),
            _ => None,
        }
    }

    pub fn scale(&self, k: u64) -> ExtRat {
        match self {
            ExtRat::Finite(x) => ExtRat::Finite(x * BigRational::from_integer(k.into())),
            ExtRat::Infinity => ExtRat::Infinity,
        }
    }

    pub fn half(&self) -> ExtRat {
        match self {
            ExtRat::Finite(x) => ExtRat::Finite(x / BigRational::from_integer(2.into())),
            ExtRat::Infinity => ExtRat::Infinity,
        }
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Infinity, ExtRat::Infinity) => Ordering::Equal,
            (ExtRat::Infinity, _) => Ordering::Greater,
            (_, ExtRat::Infinity) => Ordering::Less,
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &ExtRat {
    type Output = ExtRat;
    fn add(self, rhs: &ExtRat) -> ExtRat {
        match (self, rhs) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a + b),
            _ => ExtRat::Infinity,
        }
    }
}

impl Add for ExtRat {
    type Output = ExtRat;
    fn add(self, rhs: ExtRat) -> ExtRat {
        &self + &rhs
    }
}

/// Subtraction of finite values; panics if either side is infinite, since
/// `∞ − x` never arises from well-formed depths.
impl Sub for &ExtRat {
    type Output = ExtRat;
    fn sub(self, rhs: &ExtRat) -> ExtRat {
        match (self, rhs) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a - b),
            _ => panic!("subtraction involving infinity"),
        }
    }
}

impl Sub for ExtRat {
    type Output = ExtRat;
    fn sub(self, rhs: ExtRat) -> ExtRat {
        &self - &rhs
    }
}

impl Neg for ExtRat {
    type Output = ExtRat;
    fn neg(self) -> ExtRat {
        match self {
            ExtRat::Finite(a) => ExtRat::Finite(-a),
            ExtRat::Infinity => panic!("negating infinity"),
        }
    }
}

impl Mul for &ExtRat {
    type Output = ExtRat;
    fn mul(self, rhs: &ExtRat) -> ExtRat {
        match (self, rhs) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a * b),
            _ => ExtRat::Infinity,
        }
    }
}

impl From<BigRational> for ExtRat {
    fn from(x: BigRational) -> Self {
        ExtRat::Finite(x)
    }
}

impl From<i64> for ExtRat {
    fn from(n: i64) -> Self {
        ExtRat::int(n)
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Infinity => f.write_str("inf"),
            ExtRat::Finite(x) if x.is_integer() => write!(f, "{}", x.numer()),
            ExtRat::Finite(x) => write!(f, "{}/{}", x.numer(), x.denom()),
        }
    }
}

impl FromStr for ExtRat {
    type Err = Error;

    /// Accepts `inf`, an integer, or `p/q` with `q > 0`. Non-reduced input is
    /// reduced.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseExtRat(s.to_string());
        if s == "inf" {
            return Ok(ExtRat::Infinity);
        }
        let parse_int = |t: &str| -> Result<BigInt> {
            let digits = t.strip_prefix('-').unwrap_or(t);
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            t.parse::<BigInt>().map_err(|_| bad())
        };
        match s.split_once('/') {
            None => Ok(ExtRat::from_big(parse_int(s)?)),
            Some((n, d)) => {
                let n = parse_int(n)?;
                if d.starts_with('-') {
                    return Err(bad());
                }
                let d = parse_int(d)?;
                if d.is_zero() {
                    return Err(bad());
                }
                Ok(ExtRat::Finite(BigRational::new(n, d)))
            }
        }
    }
}

impl Serialize for ExtRat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtRat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A place of ℚ or of the real cyclotomic field, recorded by its residue
/// characteristic and the factor that converts q-normalized valuations into
/// valuations normalized at the place.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimePlace {
    pub q: u64,
    pub ramification_scale: u64,
}

impl PrimePlace {
    pub fn rational(q: u64) -> Result<Self> {
        check_odd_prime(q)?;
        Ok(PrimePlace { q, ramification_scale: 1 })
    }

    /// A place of ℚ(ζ_r)^+ above q: scale (r−1)/2 over r, 1 elsewhere.
    pub fn real_cyclotomic(q: u64, r: u32) -> Result<Self> {
        check_odd_prime(q)?;
        let scale = if q == r as u64 { (r as u64 - 1) / 2 } else { 1 };
        Ok(PrimePlace { q, ramification_scale: scale })
    }
}

pub fn rescale_place(v: &ExtRat, place: &PrimePlace) -> ExtRat {
    v.scale(place.ramification_scale)
}

/// Deterministic Miller–Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

pub fn check_odd_prime(q: u64) -> Result<()> {
    if q == 2 || !is_prime(q) {
        return Err(Error::NotOddPrime(q.to_string()));
    }
    Ok(())
}

/// Exponent of `q` in `n`, or `None` for `n = 0`. Ascends through
/// q, q², q⁴, … while they divide, then descends, so a valuation `v` costs
/// O(log v) big divisions.
pub fn vq(n: &BigInt, q: u64) -> Option<u64> {
    if n.is_zero() {
        return None;
    }
    let mut n = n.abs();
    let mut pows = vec![BigInt::from(q)];
    let mut v = 0u64;
    loop {
        let p = pows.last().unwrap();
        let (quo, rem) = n.div_rem(p);
        if !rem.is_zero() {
            break;
        }
        n = quo;
        v += 1 << (pows.len() - 1);
        let sq = p * p;
        pows.push(sq);
    }
    for k in (0..pows.len()).rev() {
        let (quo, rem) = n.div_rem(&pows[k]);
        if rem.is_zero() {
            n = quo;
            v += 1 << k;
        }
    }
    Some(v)
}

pub fn val_int(n: &BigInt, q: u64) -> Result<ExtRat> {
    check_odd_prime(q)?;
    Ok(match vq(n, q) {
        None => ExtRat::Infinity,
        Some(v) => ExtRat::int(v as i64),
    })
}

pub fn val_rat(x: &BigRational, q: u64) -> Result<ExtRat> {
    check_odd_prime(q)?;
    Ok(match vq(x.numer(), q) {
        None => ExtRat::Infinity,
        Some(v) => ExtRat::int(v as i64 - vq(x.denom(), q).unwrap() as i64),
    })
}

fn v2_int(n: &BigInt) -> i64 {
    n.trailing_zeros().expect("nonzero") as i64
}

/// 2-adic valuation of a nonzero finite rational.
pub fn val2(x: &ExtRat) -> Result<i64> {
    match x {
        ExtRat::Finite(r) if !r.is_zero() => Ok(v2_int(r.numer()) - v2_int(r.denom())),
        _ => Err(Error::DegenerateValuation),
    }
}
