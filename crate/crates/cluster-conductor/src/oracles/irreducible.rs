//! Irreducibility of g_r^− over ℚ_r when r ∤ AB. The polynomial is
//! irreducible exactly when u = (A − B) + 2√(−AB) is not an r-th power in
//! ℚ_r(√(−AB)), an unramified extension of degree 1 or 2.

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use super::unramified::{UnramifiedRing, UrElt};
use crate::error::{Error, Result};
use crate::valuation::vq;

/// The ring ℤ_r[√(−AB)] mod r^prec together with u.
fn u_in_ring(r: u32, big_a: &BigInt, big_b: &BigInt, prec: u32) -> Result<(UnramifiedRing, UrElt)> {
    let q = r as u64;
    let ab = big_a * big_b;
    let base = UnramifiedRing::new(q, prec, vec![BigInt::zero(), BigInt::from(1)])?;
    let d = base.from_int(&-&ab);
    let (ring, s) = match base.sqrt(&d)? {
        Some(root) => (base, root),
        None => {
            let ring = UnramifiedRing::new(q, prec, vec![ab.clone(), BigInt::zero(), BigInt::from(1)])?;
            let t = ring.t();
            (ring, t)
        }
    };
    let u = ring.add(&ring.from_int(&(big_a - big_b)), &ring.scale(&s, &BigInt::from(2)));
    Ok((ring, u))
}

/// True when g_r^− is irreducible over ℚ_r. Requires r ∤ AB; for r | AB
/// the polynomial is always reducible and the caller must branch.
pub fn is_grminus_irreducible(r: u32, big_a: &BigInt, big_b: &BigInt, c: &BigInt) -> Result<bool> {
    crate::cyclotomic::check_cyclotomic_r(r)?;
    let q = r as u64;
    let ab = big_a * big_b;
    match vq(&ab, q) {
        None => return Err(Error::InvalidParams("AB = 0".into())),
        Some(v) if v > 0 => {
            return Err(Error::Unsupported("r divides AB; g_r^− is reducible there".into()))
        }
        _ => {}
    }
    let vc = vq(c, q).ok_or_else(|| Error::InvalidParams("c = 0".into()))?;
    // N(u) = c^(2r), so v(u) ≤ 2r·v(c).
    let prec = (2 * r as u64 * vc + 4) as u32;
    let (ring, u) = u_in_ring(r, big_a, big_b, prec)?;
    let k = ring.val(&u).expect("u is nonzero");
    if k % q != 0 {
        return Ok(true);
    }
    let rk = BigInt::from(q).pow(k as u32);
    let unit = ring.from_coeffs(u.0.iter().map(|x| x / &rk).collect());
    let e: BigUint = ring.residue_size() - 1u32;
    let w = ring.sub(&ring.pow(&unit, &e), &ring.one());
    Ok(ring.val(&w).map_or(false, |v| v < 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::g_minus;
    use crate::poly::IntPoly;

    fn int(n: i64) -> BigInt {
        BigInt::from(n)
    }

    /// Does the integer polynomial g have a root in ℤ_r? Digit-by-digit
    /// search keeping residues x mod r^k with v(g(x)) ≥ k, certified by
    /// v(g(x)) > 2 v(g′(x)).
    fn has_zr_root(g: &IntPoly, r: u64) -> bool {
        let dg = g.derivative();
        let rb = BigInt::from(r);
        let mut cands = vec![BigInt::zero()];
        let mut modk = BigInt::from(1);
        for _ in 0..60 {
            let mut next = Vec::new();
            for x in &cands {
                for d in 0..r {
                    let y = x + &modk * d;
                    let vy = vq(&g.eval(&y), r);
                    let Some(vg) = vy else { return true };
                    if let Some(vd) = vq(&dg.eval(&y), r) {
                        if vg > 2 * vd {
                            return true;
                        }
                    }
                    if vg as u128 >= 1 + vq(&modk, r).unwrap() as u128 {
                        next.push(y);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            assert!(next.len() < 10_000, "candidate set exploded");
            cands = next;
            modk *= &rb;
        }
        panic!("undecided");
    }

    /// Brute force over the residue ring mod r²: is the unit part of u
    /// congruent to some x^r?
    fn rth_power_brute(r: u32, big_a: &BigInt, big_b: &BigInt) -> bool {
        let (ring, u) = u_in_ring(r, big_a, big_b, 2).unwrap();
        assert!(ring.is_unit(&u));
        let n = (r as u64).pow(2);
        let deg = ring.degree();
        let total = n.pow(deg as u32);
        (0..total).any(|idx| {
            let coeffs: Vec<BigInt> = (0..deg).map(|i| BigInt::from((idx / n.pow(i as u32)) % n)).collect();
            let x = ring.from_coeffs(coeffs);
            ring.pow_u64(&x, r as u64) == u
        })
    }

    #[test]
    fn agrees_with_root_search() {
        let mut seen = [false, false];
        for (r, c) in [(5u32, 2i64), (5, 3), (5, 4), (7, 2), (7, 3)] {
            let cr = c.pow(r);
            for big_a in 1..cr.min(400) {
                let big_b = cr - big_a;
                if num_integer::Integer::gcd(&big_a, &big_b) != 1 || (big_a * big_b) % r as i64 == 0 {
                    continue;
                }
                let (a, b, cc) = (int(big_a), int(big_b), int(c));
                let irr = is_grminus_irreducible(r, &a, &b, &cc).unwrap();
                let g = g_minus(r, &a, &b, &cc).unwrap();
                assert_eq!(irr, !has_zr_root(&g, r as u64), "r={r} A={big_a} c={c}");
                seen[irr as usize] = true;
            }
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn agrees_with_brute_force_mod_r_squared() {
        for big_a in 1..242i64 {
            let big_b = 243 - big_a;
            if num_integer::Integer::gcd(&big_a, &big_b) != 1 || (big_a * big_b) % 5 == 0 {
                continue;
            }
            let (a, b) = (int(big_a), int(big_b));
            let irr = is_grminus_irreducible(5, &a, &b, &int(3)).unwrap();
            assert_eq!(irr, !rth_power_brute(5, &a, &b), "A={big_a}");
        }
    }

    #[test]
    fn forced_rth_power_is_reducible() {
        // u = (3 + 4i)^5 = −237 − 3116i gives A − B = −237, AB = 1558², c² = 3² + 4².
        let (a, b, c) = (int(1444), int(1681), int(5));
        assert!(!is_grminus_irreducible(5, &a, &b, &c).unwrap());
        let g = g_minus(5, &a, &b, &c).unwrap();
        assert!(g.eval(&int(6)).is_zero());
    }

    #[test]
    fn r_dividing_ab_is_rejected() {
        assert!(is_grminus_irreducible(5, &int(118), &int(125), &int(3)).is_err());
    }
}
