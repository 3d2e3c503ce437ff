//! Full matrices v_q(γ_i − γ_j) for the family roots, computed from explicit
//! roots: norms in ℤ[ζ_r] at q = r, Hensel-lifted roots of unity elsewhere.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::Serialize;

use super::tower::{Tower, TowerElem};
use super::unramified::{UnramifiedRing, UrElt};
use crate::cyclotomic::{check_cyclotomic_r, CycElt};
use crate::error::{Error, Result};
use crate::valuation::{check_odd_prime, vq, ExtRat};

pub const START_PRECISION: u32 = 32;
pub const MAX_PRECISION: u32 = 512;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairwiseMatrix {
    pub prime: u64,
    /// Set when q does not divide the discriminant; the matrix is then all
    /// zeros off the diagonal.
    pub good_reduction: bool,
    pub matrix: Vec<Vec<ExtRat>>,
}

/// Valuation at the prime (1 − ζ_r), normalized so v(r) = 1. Zero maps to
/// INFINITY rather than an error.
pub fn ramified_norm_valuation(a: &CycElt) -> ExtRat {
    let r = a.r() as u64;
    match vq(&a.norm_to_q(), r) {
        None => ExtRat::Infinity,
        Some(v) => ExtRat::frac(v as i64, r as i64 - 1),
    }
}

/// γ_j = ζ^j a − ζ^(−j) b in ℤ[ζ_r], j = 0..r−1.
pub fn cr_roots(r: u32, a: &BigInt, b: &BigInt) -> Vec<CycElt> {
    (0..r as i64)
        .map(|j| {
            &CycElt::zeta_pow(r, j).scale(a) - &CycElt::zeta_pow(r, -j).scale(b)
        })
        .collect()
}

fn check_cr(r: u32, a: &BigInt, b: &BigInt) -> Result<()> {
    check_cyclotomic_r(r)?;
    if a.is_zero() || b.is_zero() || !a.gcd(b).abs().eq(&BigInt::from(1)) {
        return Err(Error::InvalidParams(format!("need coprime nonzero a, b; got {a}, {b}")));
    }
    Ok(())
}

fn diag(n: usize) -> Vec<Vec<ExtRat>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { ExtRat::Infinity } else { ExtRat::zero() }).collect())
        .collect()
}

/// Fills a symmetric matrix from a pairwise valuation that may report an
/// unresolved entry with `None`.
fn fill<F: FnMut(usize, usize) -> Option<ExtRat>>(n: usize, mut f: F) -> Option<Vec<Vec<ExtRat>>> {
    let mut m = diag(n);
    for i in 0..n {
        for j in i + 1..n {
            let v = f(i, j)?;
            m[i][j] = v.clone();
            m[j][i] = v;
        }
    }
    Some(m)
}

/// v_q(γ_i − γ_j) for the roots of f_r, normalized over ℚ_q.
pub fn pairwise_matrix_oracle_cr(r: u32, a: &BigInt, b: &BigInt, q: u64) -> Result<PairwiseMatrix> {
    check_cr(r, a, b)?;
    check_odd_prime(q)?;
    let n = r as usize;
    if q == r as u64 {
        let roots = cr_roots(r, a, b);
        let m = fill(n, |i, j| Some(ramified_norm_valuation(&(&roots[i] - &roots[j])))).unwrap();
        return Ok(PairwiseMatrix { prime: q, good_reduction: false, matrix: m });
    }
    let s = num_traits::pow(a.clone(), n) + num_traits::pow(b.clone(), n);
    if s.is_zero() {
        return Err(Error::InvalidParams("a^r + b^r = 0".into()));
    }
    if vq(&s, q) == Some(0) {
        return Ok(PairwiseMatrix { prime: q, good_reduction: true, matrix: diag(n) });
    }
    let mut prec = START_PRECISION;
    loop {
        let (ring, zeta) = UnramifiedRing::cyclotomic(q, r, prec)?;
        let zpow: Vec<UrElt> = (0..r as u64).map(|k| ring.pow_u64(&zeta, k)).collect();
        let roots: Vec<UrElt> = (0..n)
            .map(|j| ring.sub(&ring.scale(&zpow[j], a), &ring.scale(&zpow[(n - j) % n], b)))
            .collect();
        let m = fill(n, |i, j| {
            let v = ring.val(&ring.sub(&roots[i], &roots[j]))?;
            (2 * v < prec as u64).then(|| ExtRat::int(v as i64))
        });
        if let Some(m) = m {
            return Ok(PairwiseMatrix { prime: q, good_reduction: false, matrix: m });
        }
        if prec >= MAX_PRECISION {
            return Err(Error::PrecisionExhausted(prec));
        }
        prec *= 2;
    }
}

fn check_cpm(r: u32, big_a: &BigInt, big_b: &BigInt, c: &BigInt) -> Result<()> {
    check_cyclotomic_r(r)?;
    if big_a.is_zero() || big_b.is_zero() || c.is_zero() {
        return Err(Error::InvalidParams("A, B, c must be nonzero".into()));
    }
    if big_a + big_b != num_traits::pow(c.clone(), r as usize) {
        return Err(Error::InvalidParams(format!("A + B ≠ c^r for A = {big_a}, B = {big_b}, c = {c}")));
    }
    if !big_a.gcd(big_b).abs().eq(&BigInt::from(1)) {
        return Err(Error::InvalidParams("A and B must be coprime".into()));
    }
    Ok(())
}

/// r-th root of a unit u near x0 by Newton's method in the tower.
fn rth_root(t: &Tower, u: &TowerElem, x0: &TowerElem, r: u32) -> Result<TowerElem> {
    let rb = BigInt::from(r);
    let mut x = x0.clone();
    for _ in 0..64 {
        let fx = t.sub(&t.pow(&x, r as u64), u);
        if t.is_zero(&fx) {
            return Ok(x);
        }
        let dfx = t.scale(&t.pow(&x, r as u64 - 1), &rb);
        x = t.sub(&x, &t.mul(&fx, &t.inv(&dfx)?));
    }
    Err(Error::Oracle("Newton iteration for α₀ did not converge".into()))
}

/// v_q(γ_i − γ_j) for the roots of g_r^− (or g_r^+ when `plus`), q ≠ r,
/// q | AB, normalized over ℚ_q. The roots are γ_j = ζ^j α₀ + ζ^(−j) β₀ with
/// α₀^r = (A − B) + 2√(−AB), β₀ = c²/α₀, and γ_r = −2c.
pub fn hensel_tower_oracle_cminus(
    r: u32,
    big_a: &BigInt,
    big_b: &BigInt,
    c: &BigInt,
    q: u64,
    plus: bool,
) -> Result<PairwiseMatrix> {
    check_cpm(r, big_a, big_b, c)?;
    check_odd_prime(q)?;
    if q == r as u64 {
        return Err(Error::Oracle("the tower oracle needs q ≠ r".into()));
    }
    let ab = big_a * big_b;
    if vq(&ab, q) == Some(0) {
        return Err(Error::Oracle(format!("{q} does not divide AB")));
    }
    let q_divides_a = vq(big_a, q) != Some(0);
    let n = r as usize + plus as usize;
    let mut prec = START_PRECISION;
    loop {
        let (ring, zeta) = UnramifiedRing::cyclotomic(q, r, prec)?;
        let (tower, s) = Tower::adjoin_sqrt(ring, &-&ab)?;
        let u = tower.add(&tower.from_int(&(big_a - big_b)), &tower.scale(&s, &BigInt::from(2)));
        let x0 = tower.from_int(&if q_divides_a { -c.clone() } else { c.clone() });
        let alpha = rth_root(&tower, &u, &x0, r)?;
        let beta = tower.scale(&tower.inv(&alpha)?, &(c * c));
        let z = tower.embed(&zeta);
        let zpow: Vec<TowerElem> = (0..r as u64).map(|k| tower.pow(&z, k)).collect();
        let rr = r as usize;
        let mut roots: Vec<TowerElem> = (0..rr)
            .map(|j| tower.add(&tower.mul(&zpow[j], &alpha), &tower.mul(&zpow[(rr - j) % rr], &beta)))
            .collect();
        if plus {
            roots.push(tower.from_int(&(c * -2)));
        }
        let half = ExtRat::frac(prec as i64, 2);
        let m = fill(n, |i, j| {
            let v = tower.val(&tower.sub(&roots[i], &roots[j]))?;
            (v < half).then_some(v)
        });
        if let Some(m) = m {
            return Ok(PairwiseMatrix { prime: q, good_reduction: false, matrix: m });
        }
        if prec >= MAX_PRECISION {
            return Err(Error::PrecisionExhausted(prec));
        }
        prec *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::{eval_at, f_r, g_minus};
    use crate::oracles::multiset::{diff_multiset_oracle, ValMultiset};

    fn int(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn norm_valuations() {
        let one_minus_zeta = &CycElt::one(5) - &CycElt::zeta_pow(5, 1);
        assert_eq!(ramified_norm_valuation(&one_minus_zeta), ExtRat::frac(1, 4));
        assert_eq!(ramified_norm_valuation(&CycElt::from_int(7, int(49))), ExtRat::int(2));
        assert_eq!(ramified_norm_valuation(&CycElt::zero(5)), ExtRat::Infinity);
        let g = cr_roots(5, &int(2), &int(3));
        assert_eq!(ramified_norm_valuation(&(&g[0] - &g[1])), ExtRat::frac(1, 2));
    }

    #[test]
    fn roots_are_roots() {
        let f = f_r(7, &int(3), &int(-5)).unwrap();
        for g in cr_roots(7, &int(3), &int(-5)) {
            assert!(eval_at(&f, &g).is_zero());
        }
    }

    #[test]
    fn cr_twins_off_r() {
        let pm = pairwise_matrix_oracle_cr(5, &int(1), &int(2), 3).unwrap();
        assert!(!pm.good_reduction);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j {
                    ExtRat::Infinity
                } else if (i + j) % 5 == 0 {
                    ExtRat::int(1)
                } else {
                    ExtRat::zero()
                };
                assert_eq!(pm.matrix[i][j], expect, "({i}, {j})");
            }
        }
    }

    #[test]
    fn cr_at_r_divisible() {
        let pm = pairwise_matrix_oracle_cr(5, &int(2), &int(3), 5).unwrap();
        for j in 1..5 {
            assert_eq!(pm.matrix[0][j], ExtRat::frac(1, 2));
            assert_eq!(pm.matrix[j][5 - j], ExtRat::frac(5, 4));
        }
    }

    #[test]
    fn cr_good_prime() {
        let pm = pairwise_matrix_oracle_cr(5, &int(1), &int(2), 7).unwrap();
        assert!(pm.good_reduction);
        assert_eq!(ValMultiset::from_matrix(&pm.matrix).get(&ExtRat::zero()), 20);
    }

    #[test]
    fn cr_hensel_agrees_with_multiset() {
        for (a, b, q) in [(1, 2, 11), (3, 4, 3), (1, 8, 3), (5, -3, 11), (7, 2, 31)] {
            let pm = pairwise_matrix_oracle_cr(5, &int(a), &int(b), q).unwrap();
            let ms = diff_multiset_oracle(&f_r(5, &int(a), &int(b)).unwrap(), q).unwrap();
            assert_eq!(ValMultiset::from_matrix(&pm.matrix), ms, "a={a} b={b} q={q}");
        }
    }

    #[test]
    fn cminus_tower_against_multiset() {
        // 118 = 2·59, 125 = 5³, 118 + 125 = 3⁵.
        let pm = hensel_tower_oracle_cminus(5, &int(118), &int(125), &int(3), 59, true).unwrap();
        assert_eq!(pm.matrix[0][5], ExtRat::int(1));
        let halves = (1..5).filter(|&j| pm.matrix[j][5 - j] == ExtRat::frac(1, 2)).count();
        assert_eq!(halves, 4);
        for (big_a, c, q) in [(118i64, 3i64, 59u64), (7, 3, 7), (1, 2, 31), (81, 4, 3), (3, 4, 3)] {
            let big_b = c.pow(5) - big_a;
            let g = g_minus(5, &int(big_a), &int(big_b), &int(c)).unwrap();
            let pm = hensel_tower_oracle_cminus(5, &int(big_a), &int(big_b), &int(c), q, false).unwrap();
            let ms = diff_multiset_oracle(&g, q).unwrap();
            assert_eq!(ValMultiset::from_matrix(&pm.matrix), ms, "A={big_a} c={c} q={q}");
        }
    }

    #[test]
    fn cminus_rejects_bad_input() {
        assert!(hensel_tower_oracle_cminus(5, &int(118), &int(125), &int(3), 5, false).is_err());
        assert!(hensel_tower_oracle_cminus(5, &int(118), &int(125), &int(3), 7, false).is_err());
        assert!(hensel_tower_oracle_cminus(5, &int(118), &int(124), &int(3), 59, false).is_err());
    }
}
