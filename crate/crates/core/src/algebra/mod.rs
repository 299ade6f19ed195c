//! Bilinear-group arithmetic, structured-matrix sampling, hashing oracles
//! and the element-wise exponentiation primitives underlying every other
//! module.
//!
//! All operations are pure functions of their inputs (plus an injected RNG);
//! values are immutable after construction and safe to share across threads.

mod curve;
pub mod encode;
mod matrix;
pub mod meter;

pub use curve::{g1_generator, g2_generator, gt_generator, G1Point, G2Point, GtPoint, Scalar};
pub use matrix::{inner_product, G1Matrix, G2Matrix, GtMatrix, Matrix, ScalarMatrix};

use ark_ec::hashing::curve_maps::wb::WBMap;
use ark_ec::hashing::map_to_curve_hasher::MapToCurveBasedHasher;
use ark_ec::hashing::HashToCurve;
use ark_ec::short_weierstrass::Projective;
use ark_ec::Group;
use ark_ff::{Field, PrimeField, UniformRand};
use ark_std::Zero;
use blake2::{Blake2b512, Digest};
use rand::{CryptoRng, RngCore};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("dimension mismatch in {context}")]
    DimensionMismatch { context: &'static str },
    #[error("invalid encoding for {context}")]
    InvalidEncoding { context: &'static str },
    #[error("identity element not allowed in {context}")]
    IdentityInput { context: &'static str },
    #[error("parameter out of range in {context}")]
    OutOfRange { context: &'static str },
}

// Fixed ASCII context tags keep the three oracles (and the content-address
// digest in the storage module) mutually domain-separated.
const COMMIT_TAG: &[u8] = b"datagov/v1/commit";
const MASK_TAG: &[u8] = b"datagov/v1/mask";
const HASH_TO_G2_DST: &[u8] = b"datagov/v1/BLS12381G2_XMD:SHA-256_SSWU_RO";

/// `ê(a, b)`.
pub fn pairing(a: &G1Point, b: &G2Point) -> GtPoint {
    curve::raw_pairing(*a, *b)
}

/// `∏_t ê(u_t, w_t)` evaluated as a single product of pairings.
pub fn vector_pairing(u: &[G1Point], w: &[G2Point]) -> Result<GtPoint, AlgebraError> {
    if u.len() != w.len() || u.is_empty() {
        return Err(AlgebraError::DimensionMismatch {
            context: "vector_pairing",
        });
    }
    meter::bump_vector_pairings();
    Ok(curve::raw_multi_pairing(u, w))
}

/// Entry-wise power: `B[i,j] = A[i,j]^{s[i,j]}`.
pub fn power_multi<G: Group<ScalarField = Scalar>>(
    a: &Matrix<G>,
    s: &ScalarMatrix,
) -> Result<Matrix<G>, AlgebraError> {
    if a.dims() != s.dims() {
        return Err(AlgebraError::DimensionMismatch {
            context: "power_multi",
        });
    }
    a.zip_map(s, |p, e| *p * *e)
}

/// `[i,j] = g^{M[i,j]}`.
pub fn matrix_exp_base<G: Group<ScalarField = Scalar>>(g: G, m: &ScalarMatrix) -> Matrix<G> {
    m.map(|e| g * *e)
}

/// `result[i] = ∏_j GM[i,j]^{s_j}`: the group encoding of row `i` of `M·s`.
pub fn multi_exp_matvec<G: Group<ScalarField = Scalar>>(
    gm: &Matrix<G>,
    s: &[Scalar],
) -> Result<Vec<G>, AlgebraError> {
    if gm.cols() != s.len() {
        return Err(AlgebraError::DimensionMismatch {
            context: "multi_exp_matvec",
        });
    }
    meter::bump_vector_multi_exps();
    Ok((0..gm.rows())
        .map(|i| {
            gm.row(i)
                .iter()
                .zip(s)
                .fold(G::zero(), |acc, (base, e)| acc + *base * *e)
        })
        .collect())
}

/// Single multi-exponentiation `∏_t bases[t]^{s_t}`.
pub fn multi_exp_vec<G: Group<ScalarField = Scalar>>(
    bases: &[G],
    s: &[Scalar],
) -> Result<G, AlgebraError> {
    if bases.len() != s.len() || bases.is_empty() {
        return Err(AlgebraError::DimensionMismatch {
            context: "multi_exp_vec",
        });
    }
    meter::bump_vector_multi_exps();
    Ok(bases
        .iter()
        .zip(s)
        .fold(G::zero(), |acc, (base, e)| acc + *base * *e))
}

/// `true` iff `ê(p1.0, p2.1) == ê(p1.1, p2.0)`, i.e. both pairs share an
/// exponent. Identity inputs are outside the relation's domain and rejected.
pub fn same_ratio(p1: (&G1Point, &G1Point), p2: (&G2Point, &G2Point)) -> bool {
    if p1.0.is_zero() || p1.1.is_zero() || p2.0.is_zero() || p2.1.is_zero() {
        return false;
    }
    pairing(p1.0, p2.1) == pairing(p1.1, p2.0)
}

/// Entry-wise ratio check for matrix pairs. Unlike [`same_ratio`], entries
/// with identity powers are admitted: structured matrices carry zero
/// exponents off the diagonal, and those entries stay at the identity
/// through every chained power map.
pub fn same_ratio_matrix(p1: (&G1Matrix, &G1Matrix), p2: (&G2Matrix, &G2Matrix)) -> bool {
    if p1.0.dims() != p1.1.dims() || p2.0.dims() != p2.1.dims() || p1.0.dims() != p2.0.dims() {
        return false;
    }
    for i in 0..p1.0.rows() {
        for j in 0..p1.0.cols() {
            let lhs = pairing(p1.0.get(i, j), p2.1.get(i, j));
            let rhs = pairing(p1.1.get(i, j), p2.0.get(i, j));
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}

fn hash_to_scalar(tag: &[u8], data: &[u8]) -> Scalar {
    let mut hasher = Blake2b512::new();
    hasher.update((tag.len() as u16).to_be_bytes());
    hasher.update(tag);
    hasher.update(data);
    let digest = hasher.finalize();
    Scalar::from_be_bytes_mod_order(&digest)
}

/// Deterministic map from byte-strings to `Z_p^*`.
pub fn commit_hash(data: &[u8]) -> Scalar {
    let mut ctr: u8 = 0;
    loop {
        let mut input = Vec::with_capacity(data.len() + 1);
        input.extend_from_slice(data);
        input.push(ctr);
        let s = hash_to_scalar(COMMIT_TAG, &input);
        if !s.is_zero() {
            return s;
        }
        ctr = ctr.wrapping_add(1);
    }
}

/// Deterministic point in G2 with unknown discrete log. `index` selects one
/// of the `k+1` components assembling `g2^h`, and must be in `[1, k+1]`.
pub fn hash_to_g2(domain: &[u8], gid: &[u8], c: &G1Point, index: usize) -> G2Point {
    let hasher = MapToCurveBasedHasher::<
        Projective<ark_bls12_381::g2::Config>,
        ark_ff::field_hashers::DefaultFieldHasher<sha2::Sha256, 128>,
        WBMap<ark_bls12_381::g2::Config>,
    >::new(HASH_TO_G2_DST)
    .expect("static DST is valid");
    let mut msg = Vec::new();
    msg.extend_from_slice(&(domain.len() as u16).to_be_bytes());
    msg.extend_from_slice(domain);
    msg.extend_from_slice(&(gid.len() as u16).to_be_bytes());
    msg.extend_from_slice(gid);
    msg.extend_from_slice(&encode::encode_g1(c));
    msg.extend_from_slice(&(index as u16).to_be_bytes());
    hasher.hash(&msg).expect("hash-to-curve is total").into()
}

/// Deterministic vector in `Z_p^{len}` bound to a shared G2 secret, a user
/// identifier and a vector commitment.
pub fn mask_oracle(shared: &G2Point, gid: &[u8], c: &G1Point, len: usize) -> Vec<Scalar> {
    let mut prefix = Vec::new();
    prefix.extend_from_slice(&encode::encode_g2(shared));
    prefix.extend_from_slice(&(gid.len() as u16).to_be_bytes());
    prefix.extend_from_slice(gid);
    prefix.extend_from_slice(&encode::encode_g1(c));
    (0..len)
        .map(|t| {
            let mut input = prefix.clone();
            input.extend_from_slice(&(t as u16).to_be_bytes());
            hash_to_scalar(MASK_TAG, &input)
        })
        .collect()
}

/// Samples the structured matrix of the linear-assumption family together
/// with its orthogonal vector: `A` is `(k+1)×k` with random nonzero diagonal
/// and an all-ones bottom row, `a_perp = (a_1^{-1},...,a_k^{-1},-1)`, and
/// `Aᵀ·a_perp = 0`.
pub fn sample_lin_matrix<R: RngCore + CryptoRng>(
    k: usize,
    rng: &mut R,
) -> Result<(ScalarMatrix, Vec<Scalar>), AlgebraError> {
    if k == 0 {
        return Err(AlgebraError::OutOfRange {
            context: "sample_lin_matrix",
        });
    }
    let mut diag = Vec::with_capacity(k);
    for _ in 0..k {
        diag.push(loop {
            let s = Scalar::rand(rng);
            if !s.is_zero() {
                break s;
            }
        });
    }
    let a = lin_matrix_from_diagonal(&diag);
    let mut a_perp: Vec<Scalar> = diag
        .iter()
        .map(|d| d.inverse().expect("diagonal entries are nonzero"))
        .collect();
    a_perp.push(-Scalar::ONE);
    Ok((a, a_perp))
}

/// Builds the `(k+1)×k` structured matrix from a diagonal.
pub fn lin_matrix_from_diagonal(diag: &[Scalar]) -> ScalarMatrix {
    let k = diag.len();
    Matrix::from_fn(k + 1, k, |i, j| {
        if i == k {
            Scalar::ONE
        } else if i == j {
            diag[j]
        } else {
            Scalar::zero()
        }
    })
}
