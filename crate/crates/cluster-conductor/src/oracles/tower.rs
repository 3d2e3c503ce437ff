//! One quadratic step s² = D over an unramified ring.

use num_bigint::BigInt;
use num_traits::One;

use super::unramified::{UnramifiedRing, UrElt};
use crate::error::{Error, Result};
use crate::valuation::{vq, ExtRat};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TowerShape {
    /// D is a square in the base; every element has y = 0.
    Folded,
    /// s² = unit non-square.
    Unramified,
    /// s² = q · unit.
    Ramified,
}

#[derive(Clone, Debug)]
pub struct Tower {
    base: UnramifiedRing,
    d: UrElt,
    shape: TowerShape,
}

/// x + y·s.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerElem {
    pub x: UrElt,
    pub y: UrElt,
}

impl Tower {
    /// Builds the tower adjoining √D and returns it with √D itself. D is
    /// written q^(2k)·D″ with D″ a unit or q times a unit; when D″ is a
    /// square in the base the tower folds.
    pub fn adjoin_sqrt(base: UnramifiedRing, big_d: &BigInt) -> Result<(Tower, TowerElem)> {
        let q = base.q();
        let v = vq(big_d, q).ok_or_else(|| Error::Oracle("cannot adjoin √0".into()))?;
        let k = v / 2;
        let qk = BigInt::from(q).pow(k as u32);
        let d2 = big_d / (&qk * &qk);
        let d_elt = base.from_int(&d2);
        let zero = base.zero();
        if v % 2 == 1 {
            let tower = Tower { base, d: d_elt, shape: TowerShape::Ramified };
            let s = TowerElem { x: zero, y: tower.base.from_int(&qk) };
            return Ok((tower, s));
        }
        match base.sqrt(&d_elt)? {
            Some(root) => {
                let x = base.scale(&root, &qk);
                let tower = Tower { base, d: d_elt, shape: TowerShape::Folded };
                Ok((tower, TowerElem { x, y: zero }))
            }
            None => {
                let tower = Tower { base, d: d_elt, shape: TowerShape::Unramified };
                let s = TowerElem { x: zero, y: tower.base.from_int(&qk) };
                Ok((tower, s))
            }
        }
    }

    pub fn base(&self) -> &UnramifiedRing {
        &self.base
    }

    pub fn shape(&self) -> TowerShape {
        self.shape
    }

    pub fn embed(&self, x: &UrElt) -> TowerElem {
        TowerElem { x: x.clone(), y: self.base.zero() }
    }

    pub fn from_int(&self, n: &BigInt) -> TowerElem {
        self.embed(&self.base.from_int(n))
    }

    pub fn add(&self, a: &TowerElem, b: &TowerElem) -> TowerElem {
        TowerElem { x: self.base.add(&a.x, &b.x), y: self.base.add(&a.y, &b.y) }
    }

    pub fn sub(&self, a: &TowerElem, b: &TowerElem) -> TowerElem {
        TowerElem { x: self.base.sub(&a.x, &b.x), y: self.base.sub(&a.y, &b.y) }
    }

    pub fn mul(&self, a: &TowerElem, b: &TowerElem) -> TowerElem {
        let r = &self.base;
        let yy = r.mul(&r.mul(&a.y, &b.y), &self.d);
        TowerElem {
            x: r.add(&r.mul(&a.x, &b.x), &yy),
            y: r.add(&r.mul(&a.x, &b.y), &r.mul(&a.y, &b.x)),
        }
    }

    pub fn scale(&self, a: &TowerElem, k: &BigInt) -> TowerElem {
        TowerElem { x: self.base.scale(&a.x, k), y: self.base.scale(&a.y, k) }
    }

    pub fn pow(&self, a: &TowerElem, mut e: u64) -> TowerElem {
        let mut base = a.clone();
        let mut acc = self.from_int(&BigInt::one());
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Inverse of a unit via (x − ys)/(x² − y²D).
    pub fn inv(&self, a: &TowerElem) -> Result<TowerElem> {
        let r = &self.base;
        let norm = r.sub(&r.mul(&a.x, &a.x), &r.mul(&r.mul(&a.y, &a.y), &self.d));
        let ni = r.inv(&norm)?;
        Ok(TowerElem { x: r.mul(&a.x, &ni), y: r.neg(&r.mul(&a.y, &ni)) })
    }

    /// Valuation normalized so that v(q) = 1; `None` when both coordinates
    /// vanish at the working precision.
    pub fn val(&self, a: &TowerElem) -> Option<ExtRat> {
        let vx = self.base.val(&a.x).map(|v| ExtRat::int(v as i64));
        let vy = self.base.val(&a.y).map(|v| match self.shape {
            TowerShape::Ramified => ExtRat::frac(2 * v as i64 + 1, 2),
            _ => ExtRat::int(v as i64),
        });
        match (vx, vy) {
            (None, None) => None,
            (Some(v), None) | (None, Some(v)) => Some(v),
            (Some(a), Some(b)) => Some(a.min(b)),
        }
    }

    pub fn is_zero(&self, a: &TowerElem) -> bool {
        self.base.is_zero(&a.x) && self.base.is_zero(&a.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn base(q: u64, prec: u32) -> UnramifiedRing {
        UnramifiedRing::new(q, prec, vec![int(0), int(1)]).unwrap()
    }

    #[test]
    fn shapes() {
        // 2 is a square mod 7, 3 is not.
        assert_eq!(Tower::adjoin_sqrt(base(7, 12), &int(2 * 49)).unwrap().0.shape(), TowerShape::Folded);
        assert_eq!(Tower::adjoin_sqrt(base(7, 12), &int(3)).unwrap().0.shape(), TowerShape::Unramified);
        assert_eq!(Tower::adjoin_sqrt(base(7, 12), &int(3 * 7)).unwrap().0.shape(), TowerShape::Ramified);
    }

    #[test]
    fn sqrt_squares_back() {
        for d in [2i64 * 49, 3, 21, -7 * 343, 5 * 7 * 7] {
            let (t, s) = Tower::adjoin_sqrt(base(7, 16), &int(d)).unwrap();
            assert_eq!(t.mul(&s, &s), t.from_int(&int(d)), "d = {d}");
        }
    }

    #[test]
    fn ramified_valuations() {
        let (t, s) = Tower::adjoin_sqrt(base(5, 16), &int(10)).unwrap();
        assert_eq!(t.val(&s), Some(ExtRat::frac(1, 2)));
        let x = t.add(&s, &t.from_int(&int(25)));
        assert_eq!(t.val(&x), Some(ExtRat::frac(1, 2)));
        let y = t.add(&t.scale(&s, &int(5)), &t.from_int(&int(25)));
        assert_eq!(t.val(&y), Some(ExtRat::frac(3, 2)));
        let u = t.add(&s, &t.from_int(&int(1)));
        let ui = t.inv(&u).unwrap();
        assert_eq!(t.mul(&u, &ui), t.from_int(&int(1)));
    }
}
