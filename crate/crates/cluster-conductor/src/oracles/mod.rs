//! Independent checks on cluster pictures: a resultant/Newton-polygon
//! multiset, exact cyclotomic norms at r, Hensel-lifted roots elsewhere, and
//! the r-th-power test deciding irreducibility of g_r^− over ℚ_r.

pub mod fq;
pub mod irreducible;
pub mod multiset;
pub mod pairwise;
pub mod tower;
pub mod unramified;

pub use irreducible::is_grminus_irreducible;
pub use multiset::{diff_multiset_oracle, diff_poly, multiset_from_diff_poly, newton_slopes, ValMultiset};
pub use pairwise::{
    cr_roots, hensel_tower_oracle_cminus, pairwise_matrix_oracle_cr, ramified_norm_valuation, PairwiseMatrix,
};
pub use tower::{Tower, TowerElem, TowerShape};
pub use unramified::{UnramifiedRing, UrElt};
