//! Cluster pictures and conductor exponents of hyperelliptic curves over
//! local fields of odd residue characteristic, with closed forms for the
//! Frey families attached to x^r + y^r = z^p and x^p + y^p = z^r.

pub mod cluster;
pub mod conductor;
pub mod cyclotomic;
pub mod error;
pub mod families;
pub mod oracles;
pub mod poly;
pub mod valuation;

pub use error::{Error, Result};
pub use valuation::{ExtRat, PrimePlace};
