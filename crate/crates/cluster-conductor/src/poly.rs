//! Dense univariate polynomials over ℤ.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Coefficients are stored constant term first and never carry trailing
/// zeros, so `degree` is always the true degree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPoly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: BigInt) -> Self {
        IntPoly::new(vec![c])
    }

    pub fn x() -> Self {
        IntPoly::from_i64(&[0, 1])
    }

    pub fn monomial(c: BigInt, k: usize) -> Self {
        let mut v = vec![BigInt::zero(); k + 1];
        v[k] = c;
        IntPoly::new(v)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    fn deg(&self) -> usize {
        self.degree().expect("nonzero polynomial")
    }

    pub fn lc(&self) -> &BigInt {
        self.coeffs.last().expect("nonzero polynomial")
    }

    pub fn is_monic(&self) -> bool {
        !self.is_zero() && self.lc().is_one()
    }

    pub fn scale(&self, k: &BigInt) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> IntPoly {
        IntPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        self.coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    pub fn pow(&self, mut e: u32) -> IntPoly {
        let mut base = self.clone();
        let mut acc = IntPoly::constant(BigInt::one());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// `p(q(x))` by Horner.
    pub fn compose(&self, q: &IntPoly) -> IntPoly {
        self.coeffs
            .iter()
            .rev()
            .fold(IntPoly::zero(), |acc, c| &(&acc * q) + &IntPoly::constant(c.clone()))
    }

    /// `p(x + k)`.
    pub fn shift(&self, k: &BigInt) -> IntPoly {
        self.compose(&IntPoly::new(vec![k.clone(), BigInt::one()]))
    }

    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    fn div_scalar_exact(&self, d: &BigInt) -> IntPoly {
        IntPoly::new(
            self.coeffs
                .iter()
                .map(|c| {
                    let (q, r) = c.div_rem(d);
                    debug_assert!(r.is_zero(), "inexact scalar division");
                    q
                })
                .collect(),
        )
    }

    /// Pseudo-remainder `lc(b)^(deg a − deg b + 1) · a mod b`.
    pub fn prem(&self, b: &IntPoly) -> IntPoly {
        let db = b.deg();
        let lb = b.lc();
        let mut r = self.clone();
        if r.is_zero() || r.deg() < db {
            return r;
        }
        let mut e = r.deg() - db + 1;
        while !r.is_zero() && r.deg() >= db {
            let shift = r.deg() - db;
            let lead = r.lc().clone();
            let mut next: Vec<BigInt> = r.coeffs.iter().map(|c| c * lb).collect();
            for (i, c) in b.coeffs.iter().enumerate() {
                next[i + shift] -= &lead * c;
            }
            r = IntPoly::new(next);
            e -= 1;
        }
        r.scale(&Pow::pow(lb, e))
    }
}

trait Pow {
    fn pow(&self, e: usize) -> BigInt;
}

impl Pow for BigInt {
    fn pow(&self, e: usize) -> BigInt {
        num_traits::pow(self.clone(), e)
    }
}

impl Add for &IntPoly {
    type Output = IntPoly;
    fn add(self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &IntPoly {
    type Output = IntPoly;
    fn sub(self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &IntPoly {
    type Output = IntPoly;
    fn mul(self, rhs: &IntPoly) -> IntPoly {
        if self.is_zero() || rhs.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }
}

impl Neg for &IntPoly {
    type Output = IntPoly;
    fn neg(self) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match (i, a.is_one()) {
                (0, _) => write!(f, "{a}")?,
                (1, true) => f.write_str("x")?,
                (1, false) => write!(f, "{a}*x")?,
                (_, true) => write!(f, "x^{i}")?,
                (_, false) => write!(f, "{a}*x^{i}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for IntPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        let coeffs = v
            .iter()
            .map(|s| s.parse::<BigInt>().map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(IntPoly::new(coeffs))
    }
}

/// Res(a, b) by the subresultant pseudo-remainder sequence, with contents
/// pulled out first so intermediate coefficients stay small.
pub fn resultant(a: &IntPoly, b: &IntPoly) -> BigInt {
    if a.is_zero() || b.is_zero() {
        return BigInt::zero();
    }
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut s = BigInt::one();
    if a.deg() < b.deg() {
        if a.deg() % 2 == 1 && b.deg() % 2 == 1 {
            s = -s;
        }
        std::mem::swap(&mut a, &mut b);
    }
    if b.deg() == 0 {
        return s * Pow::pow(b.lc(), a.deg());
    }
    let ca = a.content();
    let cb = b.content();
    let t = Pow::pow(&ca, b.deg()) * Pow::pow(&cb, a.deg());
    a = a.div_scalar_exact(&ca);
    b = b.div_scalar_exact(&cb);
    let mut g = BigInt::one();
    let mut h = BigInt::one();
    loop {
        let delta = a.deg() - b.deg();
        if a.deg() % 2 == 1 && b.deg() % 2 == 1 {
            s = -s;
        }
        let r = a.prem(&b);
        if r.is_zero() {
            return BigInt::zero();
        }
        a = b;
        b = r.div_scalar_exact(&(&g * Pow::pow(&h, delta)));
        g = a.lc().clone();
        h = if delta == 0 {
            h
        } else {
            Pow::pow(&g, delta) / Pow::pow(&h, delta - 1)
        };
        if b.deg() == 0 {
            let da = a.deg();
            let hh = Pow::pow(b.lc(), da) / Pow::pow(&h, da - 1);
            return s * t * hh;
        }
    }
}

/// Discriminant with the usual normalization
/// `(−1)^(n(n−1)/2) · Res(p, p′) / lc(p)`, equal to `Π_{i<j} (γ_i − γ_j)²`
/// times `lc^(2n−2)`.
pub fn discriminant(p: &IntPoly) -> Result<BigInt> {
    let n = match p.degree() {
        None => return Err(Error::Polynomial("discriminant of the zero polynomial".into())),
        Some(0) => return Err(Error::Polynomial("discriminant of a constant".into())),
        Some(n) => n,
    };
    let res = resultant(p, &p.derivative());
    let (q, rem) = res.div_rem(p.lc());
    debug_assert!(rem.is_zero());
    Ok(if (n * (n - 1) / 2) % 2 == 1 { -q } else { q })
}

/// Discriminant of the hyperelliptic curve `y² = p(x)` for monic `p`:
/// `2^(4g) · disc(p)` with `g = ⌊(deg p − 1)/2⌋`.
pub fn curve_discriminant(p: &IntPoly) -> Result<BigInt> {
    if !p.is_monic() {
        return Err(Error::Polynomial("curve discriminant needs a monic model".into()));
    }
    let g = (p.deg() - 1) / 2;
    Ok(discriminant(p)? << (4 * g))
}
