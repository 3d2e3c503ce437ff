//! Conductor exponents from decorated cluster pictures.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterId, ClusterPicture, DecoratedPicture};
use crate::error::{Error, Result};
use crate::valuation::{val2, ExtRat};

/// Field data of one Galois orbit of roots: v(Δ_{K(γ)/K}), [K(γ):K] and
/// the residue degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WildOrbitData {
    pub disc_val: ExtRat,
    pub degree: u64,
    pub residue_degree: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Semistable,
    General,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Semistable => "SEMISTABLE",
            Method::General => "GENERAL",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConductorBreakdown {
    pub tame: u64,
    pub wild: u64,
    pub total: u64,
    pub method: Method,
}

/// Which part of the semistability criterion fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Unstable {
    RamificationIndex(u64),
    NotInvariant(usize),
    NonIntegralDepth(usize),
    OddNu(usize),
}

impl fmt::Display for Unstable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unstable::RamificationIndex(e) => write!(f, "splitting field has ramification index {e} > 2"),
            Unstable::NotInvariant(i) => write!(f, "proper cluster #{i} is moved by inertia"),
            Unstable::NonIntegralDepth(i) => write!(f, "principal cluster #{i} has non-integral depth"),
            Unstable::OddNu(i) => write!(f, "principal cluster #{i} has ν outside 2ℤ"),
        }
    }
}

/// Semistability verdict; empty `reasons` means semistable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Semistability {
    pub reasons: Vec<Unstable>,
}

impl Semistability {
    pub fn holds(&self) -> bool {
        self.reasons.is_empty()
    }
}

pub fn is_semistable(dec: &DecoratedPicture, splitting_ram_index: u64) -> Semistability {
    let pic = dec.picture();
    let mut reasons = Vec::new();
    if splitting_ram_index > 2 {
        reasons.push(Unstable::RamificationIndex(splitting_ram_index));
    }
    for i in 0..pic.nodes().len() {
        if !dec.is_invariant(ClusterId::Node(i)) {
            reasons.push(Unstable::NotInvariant(i));
        }
    }
    for i in 0..pic.nodes().len() {
        if !pic.classify(i).principal {
            continue;
        }
        if !pic.node(i).depth.is_integer() {
            reasons.push(Unstable::NonIntegralDepth(i));
        }
        let (_, nu) = pic.lambda_nu(ClusterId::Node(i)).expect("proper cluster");
        if !nu.half().is_integer() {
            reasons.push(Unstable::OddNu(i));
        }
    }
    Semistability { reasons }
}

/// |A| − [𝓡 übereven], A the even non-übereven clusters other than 𝓡.
pub fn conductor_semistable(dec: &DecoratedPicture, splitting_ram_index: u64) -> Result<u64> {
    let verdict = is_semistable(dec, splitting_ram_index);
    if let Some(why) = verdict.reasons.first() {
        return Err(Error::Conductor(format!("semistable formula on an unstable curve: {why}")));
    }
    let pic = dec.picture();
    let a = (1..pic.nodes().len())
        .filter(|&i| {
            let f = pic.classify(i);
            f.even && !f.ubereven
        })
        .count() as u64;
    if pic.classify(ClusterPicture::TOP).ubereven {
        a.checked_sub(1).ok_or_else(|| Error::Conductor("übereven top cluster with empty A".into()))
    } else {
        Ok(a)
    }
}

/// ξ(a) = max(−v₂(index·a), 0) for finite nonzero a.
pub fn xi(index: u64, a: &ExtRat) -> Result<u64> {
    if index == 0 {
        return Err(Error::Conductor("index must be positive".into()));
    }
    let v = val2(&a.scale(index))?;
    Ok((-v).max(0) as u64)
}

/// ξ extended by ξ(0) = 0, the limit of max(−v₂(x), 0) as x → 0.
fn xi_ext(index: u64, a: &ExtRat) -> Result<u64> {
    if a.is_zero() {
        Ok(0)
    } else {
        xi(index, a)
    }
}

/// U and V of the general tame formula.
pub fn u_v_sets(dec: &DecoratedPicture) -> Result<(BTreeSet<ClusterId>, BTreeSet<ClusterId>)> {
    let pic = dec.picture();
    let mut u = BTreeSet::new();
    let mut v = BTreeSet::new();
    for c in pic.all_clusters() {
        if c != ClusterId::Node(ClusterPicture::TOP) && pic.size(c) % 2 == 1 {
            let p = pic.parent(c).expect("non-top cluster");
            let pid = ClusterId::Node(p);
            let idx = dec.index(pid);
            let (lam, _) = pic.lambda_nu(pid)?;
            if xi_ext(idx, &lam)? <= xi_ext(idx, &pic.node(p).depth)? {
                u.insert(c);
            }
        }
        if let ClusterId::Node(i) = c {
            if !pic.classify(i).ubereven {
                let (lam, _) = pic.lambda_nu(c)?;
                if xi_ext(dec.index(c), &lam)? == 0 {
                    v.insert(c);
                }
            }
        }
    }
    Ok((u, v))
}

/// 2g − #(U/I) + #(V/I) + [|𝓡| and v(c) even].
pub fn tame_conductor_general(dec: &DecoratedPicture) -> Result<u64> {
    let pic = dec.picture();
    let (u, v) = u_v_sets(dec)?;
    let lead = pic
        .leading_val()
        .to_integer()
        .ok_or_else(|| Error::Conductor(format!("leading valuation {} is not an integer", pic.leading_val())))?;
    let parity = (pic.n_roots() % 2 == 0 && lead.is_even()) as i64;
    let n = 2 * pic.genus() as i64 - dec.count_orbits(&u) as i64 + dec.count_orbits(&v) as i64 + parity;
    u64::try_from(n).map_err(|_| Error::Conductor(format!("negative tame conductor {n}")))
}

/// Σ over orbits of v(Δ) − [K(γ):K] + f.
pub fn wild_conductor(orbits: &[WildOrbitData]) -> Result<u64> {
    let mut total = 0u64;
    for o in orbits {
        if o.degree == 0 || o.residue_degree == 0 || o.degree % o.residue_degree != 0 {
            return Err(Error::Conductor(format!("inconsistent orbit degrees {} / {}", o.degree, o.residue_degree)));
        }
        let d = o
            .disc_val
            .to_integer()
            .and_then(|d| d.to_i64())
            .ok_or_else(|| Error::Conductor(format!("discriminant valuation {} is not an integer", o.disc_val)))?;
        let c = d - o.degree as i64 + o.residue_degree as i64;
        if c < 0 {
            return Err(Error::Conductor(format!("negative wild contribution {c}")));
        }
        total += c as u64;
    }
    Ok(total)
}

/// Wild conductor after a tame base change of ramification index e.
pub fn wild_base_change(wild: u64, e: u64) -> u64 {
    wild * e
}

/// 2·total/(r − 1), the conductor of the attached λ-adic representation.
pub fn rep_conductor_from_curve(total: u64, r: u32) -> Result<u64> {
    let den = (r as u64).saturating_sub(1);
    if den == 0 || (2 * total) % den != 0 {
        return Err(Error::Conductor(format!("2·{total}/({r} − 1) is not an integer")));
    }
    Ok(2 * total / den)
}

/// Full conductor: the semistable formula when the criterion holds,
/// otherwise the general tame formula plus `wild_scale` times the wild sum
/// of the orbit data (`wild_scale` > 1 records a tame base change).
pub fn conductor(
    dec: &DecoratedPicture,
    splitting_ram_index: u64,
    orbits: &[WildOrbitData],
    wild_scale: u64,
) -> Result<ConductorBreakdown> {
    let wild = wild_base_change(wild_conductor(orbits)?, wild_scale);
    if dec.action().tame && wild != 0 {
        return Err(Error::Conductor("tame splitting field with a nonzero wild part".into()));
    }
    if is_semistable(dec, splitting_ram_index).holds() {
        let tame = conductor_semistable(dec, splitting_ram_index)?;
        return Ok(ConductorBreakdown { tame, wild: 0, total: tame, method: Method::Semistable });
    }
    let tame = tame_conductor_general(dec)?;
    Ok(ConductorBreakdown { tame, wild, total: tame + wild, method: Method::General })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{attach_inertia, InertiaAction};

    fn e(s: &str) -> ExtRat {
        s.parse().unwrap()
    }

    fn g_pow(r: usize, g: usize) -> Vec<usize> {
        (0..r).map(|j| j * g % r).collect()
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi(1, &e("5/8")).unwrap(), 3);
        assert_eq!(xi(2, &e("1/2")).unwrap(), 0);
        assert_eq!(xi(2, &e("5/4")).unwrap(), 1);
        assert!(xi(1, &e("0")).is_err());
        assert!(xi(1, &ExtRat::Infinity).is_err());
    }

    #[test]
    fn semistable_twins() {
        let p = ClusterPicture::parse("(g0 (g1 g4)_1 (g2 g3)_1)_0").unwrap();
        let dec = attach_inertia(&p, &InertiaAction::trivial()).unwrap();
        assert!(is_semistable(&dec, 1).holds());
        assert_eq!(conductor_semistable(&dec, 1).unwrap(), 2);
        assert_eq!(tame_conductor_general(&dec).unwrap(), 2);
        let b = conductor(&dec, 1, &[], 1).unwrap();
        assert_eq!((b.total, b.method), (2, Method::Semistable));
        assert!(!is_semistable(&dec, 4).holds());

        let single = ClusterPicture::parse("(g0 g1 g2)_0").unwrap();
        let dec = attach_inertia(&single, &InertiaAction::trivial()).unwrap();
        assert_eq!(conductor_semistable(&dec, 1).unwrap(), 0);
    }

    #[test]
    fn cr_at_r_general_formula() {
        // 5 ∤ a^5 + b^5: one cluster of depth 1/4, inertia j ↦ 2j.
        let p = ClusterPicture::parse("(g0 g1 g2 g3 g4)_1/4").unwrap();
        let dec = attach_inertia(&p, &InertiaAction::new(vec![g_pow(5, 2)], true)).unwrap();
        let (u, v) = u_v_sets(&dec).unwrap();
        assert!(u.is_empty() && v.is_empty());
        assert_eq!(tame_conductor_general(&dec).unwrap(), 4);
        assert!(conductor_semistable(&dec, 4).is_err());

        // 5 | a^5 + b^5.
        // Parsed labels are numbered by appearance, so build by index here.
        let p = ClusterPicture::from_clusters(
            5,
            &[((0..5).collect(), e("1/2")), (vec![1, 4], e("5/4")), (vec![2, 3], e("5/4"))],
            e("0"),
        )
        .unwrap();
        let dec = attach_inertia(&p, &InertiaAction::new(vec![g_pow(5, 2)], true)).unwrap();
        let (u, v) = u_v_sets(&dec).unwrap();
        assert_eq!((dec.count_orbits(&u), dec.count_orbits(&v)), (1, 1));
        assert_eq!(tame_conductor_general(&dec).unwrap(), 4);
    }

    #[test]
    fn wild_parts() {
        let irr = WildOrbitData { disc_val: e("5"), degree: 5, residue_degree: 1 };
        assert_eq!(wild_conductor(&[irr.clone()]).unwrap(), 1);
        assert_eq!(wild_conductor(&[]).unwrap(), 0);
        let tame = WildOrbitData { disc_val: e("3"), degree: 4, residue_degree: 1 };
        assert_eq!(wild_conductor(&[tame]).unwrap(), 0);
        let bad = WildOrbitData { disc_val: e("1"), degree: 5, residue_degree: 1 };
        assert!(wild_conductor(&[bad]).is_err());
        assert_eq!(wild_base_change(1, 2), 2);
        assert_eq!(wild_base_change(0, 7), 0);
    }

    #[test]
    fn rep_conductor() {
        assert_eq!(rep_conductor_from_curve(4, 5).unwrap(), 2);
        assert_eq!(rep_conductor_from_curve(3, 7).unwrap(), 1);
        assert_eq!(rep_conductor_from_curve(9, 7).unwrap(), 3);
        assert!(rep_conductor_from_curve(5, 7).is_err());
    }

    #[test]
    fn tame_flag_forbids_wild() {
        let p = ClusterPicture::parse("(g0 g1 g2)_0").unwrap();
        let dec = attach_inertia(&p, &InertiaAction::trivial()).unwrap();
        let irr = WildOrbitData { disc_val: e("3"), degree: 3, residue_degree: 1 };
        assert!(conductor(&dec, 1, &[irr], 1).is_err());
    }

    #[test]
    fn leading_val_parity() {
        let p = ClusterPicture::parse("((g0 g1)_1 (g2 g3)_1)_0").unwrap();
        let dec0 = attach_inertia(&p, &InertiaAction::trivial()).unwrap();
        assert_eq!(tame_conductor_general(&dec0).unwrap(), 1);
        assert_eq!(conductor_semistable(&dec0, 1).unwrap(), 1);
        let dec1 = attach_inertia(&p.with_leading_val(e("1")), &InertiaAction::trivial()).unwrap();
        assert_eq!(tame_conductor_general(&dec1).unwrap(), 2);
        let dec_half = attach_inertia(&p.with_leading_val(e("1/2")), &InertiaAction::trivial()).unwrap();
        assert!(tame_conductor_general(&dec_half).is_err());
    }
}
