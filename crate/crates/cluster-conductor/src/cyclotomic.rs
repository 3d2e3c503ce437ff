//! Arithmetic in ℤ[ζ_r] and the integer polynomials built from it.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::families::FamilyParams;
use crate::poly::{resultant, IntPoly};
use crate::valuation::is_prime;

/// `Σ coeffs[i] ζ^i` with `coeffs.len() == r − 1`, the canonical
/// representative modulo Φ_r.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycElt {
    r: u32,
    coeffs: Vec<BigInt>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycOp {
    Add,
    Sub,
    Mul,
}

pub fn check_cyclotomic_r(r: u32) -> Result<()> {
    if r < 3 || !is_prime(r as u64) {
        return Err(Error::NotOddPrime(r.to_string()));
    }
    Ok(())
}

impl CycElt {
    /// Reduces an arbitrary coefficient vector (indices taken mod r, then
    /// modulo Φ_r).
    pub fn new(r: u32, coeffs: Vec<BigInt>) -> Self {
        let n = r as usize;
        let mut full = vec![BigInt::zero(); n];
        for (i, c) in coeffs.into_iter().enumerate() {
            full[i % n] += c;
        }
        CycElt::from_full(r, full)
    }

    /// Reduce a length-r vector over x^r − 1 by subtracting the top
    /// coefficient, since ζ^(r−1) = −(1 + ζ + … + ζ^(r−2)).
    fn from_full(r: u32, mut full: Vec<BigInt>) -> Self {
        let top = full.pop().unwrap_or_default();
        if !top.is_zero() {
            for c in full.iter_mut() {
                *c -= &top;
            }
        }
        CycElt { r, coeffs: full }
    }

    pub fn zero(r: u32) -> Self {
        CycElt { r, coeffs: vec![BigInt::zero(); r as usize - 1] }
    }

    pub fn from_int(r: u32, m: BigInt) -> Self {
        let mut e = CycElt::zero(r);
        e.coeffs[0] = m;
        e
    }

    pub fn one(r: u32) -> Self {
        CycElt::from_int(r, BigInt::one())
    }

    /// ζ^j for any integer j.
    pub fn zeta_pow(r: u32, j: i64) -> Self {
        let k = j.rem_euclid(r as i64) as usize;
        let mut full = vec![BigInt::zero(); r as usize];
        full[k] = BigInt::one();
        CycElt::from_full(r, full)
    }

    /// ω_j = ζ^j + ζ^(−j).
    pub fn omega(r: u32, j: i64) -> Self {
        &CycElt::zeta_pow(r, j) + &CycElt::zeta_pow(r, -j)
    }

    /// τ_j = ζ^j − ζ^(−j).
    pub fn tau(r: u32, j: i64) -> Self {
        &CycElt::zeta_pow(r, j) - &CycElt::zeta_pow(r, -j)
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// The rational integer this element equals, if any.
    pub fn as_integer(&self) -> Option<&BigInt> {
        self.coeffs[1..].iter().all(Zero::is_zero).then(|| &self.coeffs[0])
    }

    pub fn scale(&self, k: &BigInt) -> CycElt {
        CycElt { r: self.r, coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    pub fn pow(&self, mut e: u32) -> CycElt {
        let mut base = self.clone();
        let mut acc = CycElt::one(self.r);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// σ_k : ζ ↦ ζ^k.
    pub fn conjugate(&self, k: i64) -> Result<CycElt> {
        let r = self.r as i64;
        if k.rem_euclid(r) == 0 {
            return Err(Error::NotCoprime(k, self.r));
        }
        let mut full = vec![BigInt::zero(); self.r as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            full[((i as i64) * k).rem_euclid(r) as usize] += c;
        }
        Ok(CycElt::from_full(self.r, full))
    }

    /// The polynomial of degree < r − 1 whose value at ζ is `self`.
    pub fn lift(&self) -> IntPoly {
        IntPoly::new(self.coeffs.clone())
    }

    /// Product of all r − 1 conjugates, as Res(Φ_r, lift).
    pub fn norm_to_q(&self) -> BigInt {
        let lift = self.lift();
        if lift.is_zero() {
            return BigInt::zero();
        }
        resultant(&cyclotomic_poly(self.r), &lift)
    }

    fn same_r(&self, other: &CycElt) -> Result<()> {
        if self.r != other.r {
            return Err(Error::MismatchedCyclotomic(self.r, other.r));
        }
        Ok(())
    }

    fn mul_unchecked(&self, other: &CycElt) -> CycElt {
        let n = self.r as usize;
        let mut full = vec![BigInt::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    full[(i + j) % n] += a * b;
                }
            }
        }
        CycElt::from_full(self.r, full)
    }
}

/// Checked ring operation; the operator impls assume matching r.
pub fn cyc_arith(a: &CycElt, b: &CycElt, op: CycOp) -> Result<CycElt> {
    a.same_r(b)?;
    Ok(match op {
        CycOp::Add => a + b,
        CycOp::Sub => a - b,
        CycOp::Mul => a * b,
    })
}

impl Add for &CycElt {
    type Output = CycElt;
    fn add(self, rhs: &CycElt) -> CycElt {
        assert_eq!(self.r, rhs.r, "mismatched cyclotomic r");
        CycElt {
            r: self.r,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CycElt {
    type Output = CycElt;
    fn sub(self, rhs: &CycElt) -> CycElt {
        assert_eq!(self.r, rhs.r, "mismatched cyclotomic r");
        CycElt {
            r: self.r,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CycElt {
    type Output = CycElt;
    fn mul(self, rhs: &CycElt) -> CycElt {
        assert_eq!(self.r, rhs.r, "mismatched cyclotomic r");
        self.mul_unchecked(rhs)
    }
}

impl Neg for &CycElt {
    type Output = CycElt;
    fn neg(self) -> CycElt {
        CycElt { r: self.r, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl fmt::Display for CycElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            } else if c.is_negative() {
                f.write_str("-")?;
            }
            first = false;
            let a = c.abs();
            match (i, a.is_one()) {
                (0, _) => write!(f, "{a}")?,
                (1, true) => f.write_str("z")?,
                (1, false) => write!(f, "{a}*z")?,
                (_, true) => write!(f, "z^{i}")?,
                (_, false) => write!(f, "{a}*z^{i}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Horner evaluation of an integer polynomial at a cyclotomic element.
pub fn eval_at(p: &IntPoly, x: &CycElt) -> CycElt {
    p.coeffs().iter().rev().fold(CycElt::zero(x.r), |acc, c| {
        let mut next = &acc * x;
        next.coeffs[0] += c;
        next
    })
}

pub fn cyclotomic_poly(r: u32) -> IntPoly {
    IntPoly::new(vec![BigInt::one(); r as usize])
}

/// (Φ_r, h_r) with h_r = Π_{j=1}^{(r−1)/2} (x − ω_j), expanded inside ℤ[ζ_r].
pub fn build_phi_h(r: u32) -> Result<(IntPoly, IntPoly)> {
    check_cyclotomic_r(r)?;
    let mut h: Vec<CycElt> = vec![CycElt::one(r)];
    for j in 1..=((r as i64 - 1) / 2) {
        let w = CycElt::omega(r, j);
        let mut next = vec![CycElt::zero(r); h.len() + 1];
        for (i, c) in h.iter().enumerate() {
            next[i + 1] = &next[i + 1] + c;
            next[i] = &next[i] - &(c * &w);
        }
        h = next;
    }
    let coeffs = h
        .iter()
        .map(|c| {
            c.as_integer()
                .cloned()
                .ok_or_else(|| Error::Polynomial("non-integral coefficient in h_r".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((cyclotomic_poly(r), IntPoly::new(coeffs)))
}

fn h_coeffs(r: u32) -> Result<Vec<BigInt>> {
    Ok(build_phi_h(r)?.1.coeffs().to_vec())
}

/// f_r = x Σ h_k (x² + 2ab)^k (ab)^(m−k) + b^r − a^r with m = (r − 1)/2.
pub fn f_r(r: u32, a: &BigInt, b: &BigInt) -> Result<IntPoly> {
    let h = h_coeffs(r)?;
    let m = (r as usize - 1) / 2;
    let ab = a * b;
    let inner = IntPoly::new(vec![&ab * 2, BigInt::zero(), BigInt::one()]);
    let mut sum = IntPoly::zero();
    for (k, hk) in h.iter().enumerate() {
        let coeff = hk * num_traits::pow(ab.clone(), m - k);
        sum = &sum + &inner.pow(k as u32).scale(&coeff);
    }
    let tail = num_traits::pow(b.clone(), r as usize) - num_traits::pow(a.clone(), r as usize);
    Ok(&(&sum * &IntPoly::x()) + &IntPoly::constant(tail))
}

/// g_r^− = (−1)^m x Σ h_k (2c² − x²)^k c^(r−1−2k) − 2(A − B).
pub fn g_minus(r: u32, big_a: &BigInt, big_b: &BigInt, c: &BigInt) -> Result<IntPoly> {
    let h = h_coeffs(r)?;
    let m = (r as usize - 1) / 2;
    let c2 = c * c;
    let inner = IntPoly::new(vec![&c2 * 2, BigInt::zero(), BigInt::from(-1)]);
    let mut sum = IntPoly::zero();
    for (k, hk) in h.iter().enumerate() {
        let coeff = hk * num_traits::pow(c.clone(), r as usize - 1 - 2 * k);
        sum = &sum + &inner.pow(k as u32).scale(&coeff);
    }
    if m % 2 == 1 {
        sum = -&sum;
    }
    let tail = -(big_a - big_b) * 2;
    Ok(&(&sum * &IntPoly::x()) + &IntPoly::constant(tail))
}

/// g_r^+ = g_r^− · (x + 2c).
pub fn g_plus(r: u32, big_a: &BigInt, big_b: &BigInt, c: &BigInt) -> Result<IntPoly> {
    let lin = IntPoly::new(vec![c * 2, BigInt::one()]);
    Ok(&g_minus(r, big_a, big_b, c)? * &lin)
}

pub fn build_family_poly(params: &FamilyParams) -> Result<IntPoly> {
    match params {
        FamilyParams::Cr { r, a, b } => f_r(*r, a, b),
        FamilyParams::CrMinus { r, big_a, big_b, c } => g_minus(*r, big_a, big_b, c),
        FamilyParams::CrPlus { r, big_a, big_b, c } => g_plus(*r, big_a, big_b, c),
    }
}

/// Dense bivariate polynomial, `t[i][j]` the coefficient of x^i y^j.
type Bivariate = Vec<Vec<BigInt>>;

fn bi_zero(n: usize) -> Bivariate {
    vec![vec![BigInt::zero(); n]; n]
}

fn bi_mul(a: &Bivariate, b: &Bivariate) -> Bivariate {
    let n = a.len();
    let mut out = bi_zero(n);
    for i in 0..n {
        for j in 0..n {
            if a[i][j].is_zero() {
                continue;
            }
            for k in 0..n - i {
                for l in 0..n - j {
                    if !b[k][l].is_zero() {
                        out[i + k][j + l] += &a[i][j] * &b[k][l];
                    }
                }
            }
        }
    }
    out
}

fn bi_monomial(n: usize, i: usize, j: usize, c: i64) -> Bivariate {
    let mut t = bi_zero(n);
    t[i][j] = BigInt::from(c);
    t
}

/// Checks (−xy)^m (x + y) h_r(2 − (x + y)²/(xy)) = x^r + y^r in ℤ[x, y],
/// with the (xy)^m denominator cleared: the left side becomes
/// (x + y) Σ h_k (−1)^m (xy)^(m−k) (−(x² + y²))^k.
pub fn check_phih_identity(r: u32) -> bool {
    let Ok(h) = h_coeffs(r) else {
        return false;
    };
    let n = r as usize + 1;
    let m = (r as usize - 1) / 2;
    let xy = bi_monomial(n, 1, 1, 1);
    let mut sq = bi_monomial(n, 2, 0, -1);
    sq[0][2] = BigInt::from(-1);
    let mut x_plus_y = bi_monomial(n, 1, 0, 1);
    x_plus_y[0][1] = BigInt::one();

    let power = |base: &Bivariate, e: usize| -> Bivariate {
        (0..e).fold(bi_monomial(n, 0, 0, 1), |acc, _| bi_mul(&acc, base))
    };
    let mut sum = bi_zero(n);
    for (k, hk) in h.iter().enumerate() {
        let term = bi_mul(&power(&xy, m - k), &power(&sq, k));
        let sign: BigInt = if m % 2 == 1 { -hk } else { hk.clone() };
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += &term[i][j] * &sign;
            }
        }
    }
    let lhs = bi_mul(&sum, &x_plus_y);
    let mut rhs = bi_monomial(n, r as usize, 0, 1);
    rhs[0][r as usize] = BigInt::one();
    lhs == rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(r: u32, j: i64) -> CycElt {
        CycElt::zeta_pow(r, j)
    }

    fn int(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn basic_identities() {
        assert_eq!(&z(5, 1) * &z(5, 4), CycElt::one(5));
        let s = (1..5).fold(CycElt::zero(5), |acc, i| &acc + &z(5, i));
        assert_eq!(s, CycElt::from_int(5, int(-1)));
        assert_eq!(&CycElt::omega(5, 1) + &CycElt::omega(5, 2), CycElt::from_int(5, int(-1)));
        assert!(cyc_arith(&z(5, 1), &z(7, 1), CycOp::Add).is_err());
    }

    #[test]
    fn conjugation_examples() {
        assert_eq!(z(5, 1).conjugate(2).unwrap(), z(5, 2));
        assert_eq!(CycElt::omega(5, 1).conjugate(-1).unwrap(), CycElt::omega(5, 1));
        assert_eq!(CycElt::tau(5, 1).conjugate(-1).unwrap(), -&CycElt::tau(5, 1));
        assert!(z(5, 1).conjugate(10).is_err());
    }

    #[test]
    fn norms() {
        for r in [3u32, 5, 7, 11, 13] {
            let one_minus = &CycElt::one(r) - &z(r, 1);
            assert_eq!(one_minus.norm_to_q(), int(r as i64));
            assert_eq!(CycElt::from_int(r, int(6)).norm_to_q(), int(6).pow(r - 1));
        }
        assert_eq!(CycElt::zero(5).norm_to_q(), int(0));
    }

    #[test]
    fn h_polynomials() {
        let (phi, h5) = build_phi_h(5).unwrap();
        assert_eq!(phi, IntPoly::from_i64(&[1, 1, 1, 1, 1]));
        assert_eq!(h5, IntPoly::from_i64(&[-1, 1, 1]));
        assert_eq!(build_phi_h(7).unwrap().1, IntPoly::from_i64(&[-1, -2, 1, 1]));
        assert!(build_phi_h(9).is_err());
    }

    #[test]
    fn family_polys_r5() {
        let (a, b) = (int(3), int(-7));
        let ab = &a * &b;
        let expect = IntPoly::new(vec![
            b.pow(5) - a.pow(5),
            &ab * &ab * 5,
            int(0),
            &ab * 5,
            int(0),
            int(1),
        ]);
        assert_eq!(f_r(5, &a, &b).unwrap(), expect);

        let (ba, bb, c) = (int(118), int(125), int(3));
        let expect = IntPoly::new(vec![int(-2 * (118 - 125)), int(5 * 81), int(0), int(-45), int(0), int(1)]);
        let gm = g_minus(5, &ba, &bb, &c).unwrap();
        assert_eq!(gm, expect);
        assert_eq!(g_plus(5, &ba, &bb, &c).unwrap(), &gm * &IntPoly::from_i64(&[6, 1]));
    }

    #[test]
    fn power_sum_identity() {
        for r in [3, 5, 7, 11, 13, 17] {
            assert!(check_phih_identity(r), "r = {r}");
        }
        assert!(!check_phih_identity(15));
    }

    #[test]
    fn family_roots_vanish() {
        let (a, b) = (int(2), int(-5));
        for r in [5u32, 7] {
            let f = f_r(r, &a, &b).unwrap();
            for j in 0..r as i64 {
                let g = &z(r, j).scale(&a) - &z(r, -j).scale(&b);
                assert!(eval_at(&f, &g).is_zero());
            }
        }
    }

    fn arb_elt(r: u32) -> impl Strategy<Value = CycElt> {
        prop::collection::vec(-20i64..20, (r - 1) as usize)
            .prop_map(move |v| CycElt::new(r, v.into_iter().map(BigInt::from).collect()))
    }

    proptest! {
        #[test]
        fn norm_multiplicative(a in arb_elt(7), b in arb_elt(7)) {
            prop_assert_eq!((&a * &b).norm_to_q(), a.norm_to_q() * b.norm_to_q());
        }

        #[test]
        fn conjugation_is_a_morphism(a in arb_elt(7), b in arb_elt(7), k in 1i64..7, l in 1i64..7) {
            let s = |x: &CycElt| x.conjugate(k).unwrap();
            prop_assert_eq!(s(&(&a * &b)), &s(&a) * &s(&b));
            prop_assert_eq!(s(&(&a + &b)), &s(&a) + &s(&b));
            prop_assert_eq!(s(&a).conjugate(l).unwrap(), a.conjugate((k * l) % 7).unwrap());
        }

        #[test]
        fn norm_is_product_of_conjugates(a in arb_elt(5)) {
            let prod = (1..5).fold(CycElt::one(5), |acc, k| &acc * &a.conjugate(k).unwrap());
            prop_assert_eq!(prod.as_integer().cloned(), Some(a.norm_to_q()));
        }
    }
}
