//! Curve backend. Everything else in the crate consumes group elements
//! through these aliases, so swapping the pairing engine is local to this
//! file.

use ark_bls12_381::Bls12_381;
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::Group;
use std::sync::OnceLock;

/// Scalars modulo the group order `p`.
pub type Scalar = ark_bls12_381::Fr;
/// Element of the first source group.
pub type G1Point = ark_bls12_381::G1Projective;
/// Element of the second source group.
pub type G2Point = ark_bls12_381::G2Projective;
/// Element of the target group.
pub type GtPoint = PairingOutput<Bls12_381>;

pub fn g1_generator() -> G1Point {
    G1Point::generator()
}

pub fn g2_generator() -> G2Point {
    G2Point::generator()
}

/// `ê(g1, g2)`, cached after the first evaluation.
pub fn gt_generator() -> GtPoint {
    static GT: OnceLock<GtPoint> = OnceLock::new();
    *GT.get_or_init(|| Bls12_381::pairing(g1_generator(), g2_generator()))
}

pub(crate) fn raw_pairing(a: G1Point, b: G2Point) -> GtPoint {
    Bls12_381::pairing(a, b)
}

pub(crate) fn raw_multi_pairing(lhs: &[G1Point], rhs: &[G2Point]) -> GtPoint {
    Bls12_381::multi_pairing(lhs.iter().copied(), rhs.iter().copied())
}
