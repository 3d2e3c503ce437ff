//! The root-difference polynomial and its Newton polygon.
//!
//! For monic p with roots γ_1..γ_n, D(y) = Π_{i≠j} (y − (γ_i − γ_j)) is
//! Res_x(p(x), p(x + y)) / y^n up to sign. Its coefficients are obtained
//! from power sums, which keeps the computation in ℤ throughout.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::{binomial, Integer};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly::{discriminant, IntPoly};
use crate::valuation::{check_odd_prime, vq, ExtRat};

/// Value → multiplicity, ordered by value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValMultiset(BTreeMap<ExtRat, u64>);

impl ValMultiset {
    pub fn new() -> Self {
        ValMultiset(BTreeMap::new())
    }

    pub fn insert(&mut self, v: ExtRat, mult: u64) {
        if mult > 0 {
            *self.0.entry(v).or_insert(0) += mult;
        }
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    /// Σ value × multiplicity.
    pub fn weighted_sum(&self) -> ExtRat {
        self.0.iter().fold(ExtRat::zero(), |acc, (v, &m)| &acc + &(v * &ExtRat::int(m as i64)))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&ExtRat, u64)> {
        self.0.iter().map(|(v, &m)| (v, m))
    }

    pub fn get(&self, v: &ExtRat) -> u64 {
        self.0.get(v).copied().unwrap_or(0)
    }

    /// Off-diagonal entries of a square matrix, one per ordered pair.
    pub fn from_matrix(m: &[Vec<ExtRat>]) -> Self {
        let mut out = ValMultiset::new();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    out.insert(v.clone(), 1);
                }
            }
        }
        out
    }
}

impl Serialize for ValMultiset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<(String, u64)> = self.0.iter().map(|(k, &m)| (k.to_string(), m)).collect();
        v.serialize(s)
    }
}

/// Power sums P_0..P_k of the roots of a monic polynomial (Newton).
fn power_sums(p: &IntPoly, k: usize) -> Vec<BigInt> {
    let n = p.degree().unwrap();
    // e_i with sign: p = Σ c_i x^i, c_{n−i} = (−1)^i e_i.
    let c = p.coeffs();
    let mut ps = vec![BigInt::from(n)];
    for m in 1..=k {
        let mut s = BigInt::zero();
        for i in 1..=m.min(n) {
            let ci = &c[n - i];
            if i < m {
                s -= ci * &ps[m - i];
            } else {
                s -= ci * BigInt::from(m);
            }
        }
        ps.push(s);
    }
    ps
}

/// The monic degree-n(n−1) polynomial whose roots are all ordered
/// differences γ_i − γ_j, i ≠ j.
pub fn diff_poly(p: &IntPoly) -> Result<IntPoly> {
    if !p.is_monic() {
        return Err(Error::Polynomial("difference polynomial needs a monic input".into()));
    }
    let n = p.degree().unwrap();
    let big_n = n * (n - 1);
    let ps = power_sums(p, big_n);
    // S_k = Σ_{i,j} (γ_i − γ_j)^k; diagonal terms vanish for k ≥ 1.
    let mut s = vec![BigInt::from(big_n)];
    for k in 1..=big_n {
        let mut acc = BigInt::zero();
        for m in 0..=k {
            let term = binomial(BigInt::from(k), BigInt::from(m)) * &ps[m] * &ps[k - m];
            if (k - m) % 2 == 1 {
                acc -= term;
            } else {
                acc += term;
            }
        }
        s.push(acc);
    }
    // Newton's identities back to elementary symmetric functions.
    let mut e = vec![BigInt::one()];
    for k in 1..=big_n {
        let mut acc = BigInt::zero();
        for i in 1..=k {
            let term = &e[k - i] * &s[i];
            if i % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        let (quo, rem) = acc.div_rem(&BigInt::from(k));
        debug_assert!(rem.is_zero());
        e.push(quo);
    }
    let mut coeffs = vec![BigInt::zero(); big_n + 1];
    for (k, ek) in e.into_iter().enumerate() {
        coeffs[big_n - k] = if k % 2 == 1 { -ek } else { ek };
    }
    Ok(IntPoly::new(coeffs))
}

/// Root valuations of a polynomial with nonzero constant term, read from the
/// lower convex hull of the points (i, v_q(c_i)).
pub fn newton_slopes(p: &IntPoly, q: u64) -> Result<ValMultiset> {
    check_odd_prime(q)?;
    let c = p.coeffs();
    if c.first().map_or(true, Zero::is_zero) {
        return Err(Error::Polynomial("Newton polygon needs a nonzero constant term".into()));
    }
    let pts: Vec<(i64, i64)> = c
        .iter()
        .enumerate()
        .filter_map(|(i, ci)| vq(ci, q).map(|v| (i as i64, v as i64)))
        .collect();
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Drop b unless it lies strictly below segment a–pt.
            let cross = (b.0 - a.0) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 - a.0);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut out = ValMultiset::new();
    for w in hull.windows(2) {
        let (len, rise) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        let slope = BigRational::new(BigInt::from(-rise), BigInt::from(len));
        out.insert(ExtRat::from(slope), len as u64);
    }
    Ok(out)
}

/// Multiset { v_q(γ_i − γ_j) : i ≠ j } of a monic separable polynomial.
pub fn diff_multiset_oracle(p: &IntPoly, q: u64) -> Result<ValMultiset> {
    let d = diff_poly(p)?;
    if discriminant(p)?.is_zero() {
        return Err(Error::Polynomial("polynomial is not separable".into()));
    }
    newton_slopes(&d, q)
}

/// Same as [`diff_multiset_oracle`] for a precomputed difference polynomial,
/// so several primes can share one expansion.
pub fn multiset_from_diff_poly(d: &IntPoly, q: u64) -> Result<ValMultiset> {
    newton_slopes(d, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::f_r;
    use crate::poly::resultant;
    use proptest::prelude::*;

    fn int(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn spec_examples() {
        let f = f_r(5, &int(1), &int(2)).unwrap();
        let ms = diff_multiset_oracle(&f, 3).unwrap();
        assert_eq!(ms.get(&ExtRat::zero()), 16);
        assert_eq!(ms.get(&ExtRat::int(1)), 4);
        assert_eq!(ms.total(), 20);

        let f = f_r(5, &int(2), &int(3)).unwrap();
        let ms = diff_multiset_oracle(&f, 5).unwrap();
        assert_eq!(ms.get(&ExtRat::frac(1, 2)), 16);
        assert_eq!(ms.get(&ExtRat::frac(5, 4)), 4);
        let disc_v = vq(&discriminant(&f).unwrap(), 5).unwrap() as i64;
        assert_eq!(ms.weighted_sum(), ExtRat::int(disc_v));

        let ms = diff_multiset_oracle(&IntPoly::from_i64(&[-1, 0, 1]), 3).unwrap();
        assert_eq!(ms.get(&ExtRat::zero()), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(diff_multiset_oracle(&IntPoly::from_i64(&[1, 0, 2]), 3).is_err());
        assert!(diff_multiset_oracle(&IntPoly::from_i64(&[1, 2, 1]), 3).is_err());
    }

    #[test]
    fn diff_poly_matches_literal_resultants() {
        // Res_x(p(x), p(x + k)) = ±k^n · D(k).
        let p = f_r(5, &int(3), &int(-2)).unwrap();
        let d = diff_poly(&p).unwrap();
        for k in [1i64, 2, 3, -5, 7] {
            let res = resultant(&p, &p.shift(&int(k)));
            let expect = int(k).pow(5) * d.eval(&int(k));
            assert!(res == expect || res == -expect, "k = {k}");
        }
    }

    proptest! {
        #[test]
        fn multiset_from_integer_roots(roots in prop::collection::btree_set(-60i64..60, 2..6), q in prop::sample::select(vec![3u64, 5, 7])) {
            let roots: Vec<i64> = roots.into_iter().collect();
            let p = roots.iter().fold(IntPoly::from_i64(&[1]), |acc, &r| &acc * &IntPoly::from_i64(&[-r, 1]));
            let ms = diff_multiset_oracle(&p, q).unwrap();
            let mut expect = ValMultiset::new();
            for (i, a) in roots.iter().enumerate() {
                for (j, b) in roots.iter().enumerate() {
                    if i != j {
                        expect.insert(ExtRat::int(vq(&int(a - b), q).unwrap() as i64), 1);
                    }
                }
            }
            prop_assert_eq!(ms, expect);
        }

        #[test]
        fn multiset_sums_to_discriminant(a in 1i64..25, b in -25i64..25, q in prop::sample::select(vec![3u64, 5, 7, 11])) {
            prop_assume!(b != 0 && num_integer::Integer::gcd(&a, &b) == 1 && a.pow(5) + b.pow(5) != 0);
            let f = f_r(5, &int(a), &int(b)).unwrap();
            let ms = diff_multiset_oracle(&f, q).unwrap();
            let dv = vq(&discriminant(&f).unwrap(), q).unwrap() as i64;
            prop_assert_eq!(ms.weighted_sum(), ExtRat::int(dv));
            prop_assert_eq!(ms.total(), 20);
        }
    }
}
