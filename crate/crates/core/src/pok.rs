//! s-pair construction, commitments to ceremony secrets, and Schnorr-style
//! non-interactive proofs of knowledge of s-pair exponents.
//!
//! Three proof shapes cover the protocol's statements:
//!
//! * [`ScalarPoK`] — the base sigma protocol `π = (R, u)` for a scalar
//!   exponent on a single pair.
//! * [`EntryPoKs`] — a matrix secret over plain-generator bases, proven by
//!   one scalar proof per entry sharing one context string.
//! * [`LinearPoK`] — knowledge of a matrix witness behind a linear power
//!   map `base ↦ g^{Wᵀ·dlog(base)}`. Authority key images `g^{XᵀA}` and
//!   `g^{τᵀA}` are published as pairs over the composite base `g^A`, whose
//!   entries are not entry-wise powers of the base, so the proof commits to
//!   the whole map. With a `1×1` witness this degenerates to [`ScalarPoK`].

use crate::algebra::{
    commit_hash, encode, matrix_exp_base, same_ratio, same_ratio_matrix, G1Point, G2Point, Matrix,
    Scalar, ScalarMatrix,
};
use ark_ec::Group;
use ark_ff::UniformRand;
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use ark_std::Zero;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PokError {
    #[error("s-pair shapes do not match")]
    ShapeMismatch,
    #[error("zero secret not allowed for this pair")]
    ZeroSecret,
    #[error("base contains the identity element")]
    IdentityBase,
    #[error("secret is inconsistent with the pair; refusing to prove")]
    InconsistentSecret,
}

/// A pair `(base, power)` with `power = base^s` entry-wise, in one source
/// group. Scalars are the `1×1` case.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SPair<G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize> {
    pub base: Matrix<G>,
    pub power: Matrix<G>,
}

pub type G1SPair = SPair<G1Point>;
pub type G2SPair = SPair<G2Point>;

impl<G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize> SPair<G> {
    /// Scalar s-pair over a single base; secrets live in `Z_p^*`.
    pub fn scalar(base: G, s: Scalar) -> Result<Self, PokError> {
        if base.is_zero() {
            return Err(PokError::IdentityBase);
        }
        if s.is_zero() {
            return Err(PokError::ZeroSecret);
        }
        Ok(SPair {
            base: Matrix::filled(1, 1, base),
            power: Matrix::filled(1, 1, base * s),
        })
    }

    /// Entry-wise s-pair over a constant generator base. Zero entries are
    /// allowed: structured matrices carry them by construction.
    pub fn entrywise(generator: G, s: &ScalarMatrix) -> Result<Self, PokError> {
        if generator.is_zero() {
            return Err(PokError::IdentityBase);
        }
        Ok(SPair {
            base: Matrix::filled(s.rows(), s.cols(), generator),
            power: matrix_exp_base(generator, s),
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.base.dims()
    }

    pub fn is_scalar(&self) -> bool {
        self.dims() == (1, 1)
    }

    /// Canonical bytes: base then power.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = encode::canonical_bytes(&self.base);
        out.extend_from_slice(&encode::canonical_bytes(&self.power));
        out
    }
}

/// Matching s-pairs for the same exponent in both source groups.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct DualSPair {
    pub g1: G1SPair,
    pub g2: G2SPair,
}

impl DualSPair {
    pub fn generate(s: &ScalarMatrix) -> Result<Self, PokError> {
        Ok(DualSPair {
            g1: SPair::entrywise(crate::algebra::g1_generator(), s)?,
            g2: SPair::entrywise(crate::algebra::g2_generator(), s)?,
        })
    }

    pub fn generate_scalar(s: Scalar) -> Result<Self, PokError> {
        Ok(DualSPair {
            g1: SPair::scalar(crate::algebra::g1_generator(), s)?,
            g2: SPair::scalar(crate::algebra::g2_generator(), s)?,
        })
    }

    /// Cross-group ratio check certifying both sides share an exponent.
    /// Scalar pairs go through the strict relation; matrix pairs admit the
    /// structural identity entries.
    pub fn same_ratio_ok(&self) -> bool {
        if self.g1.dims() != self.g2.dims() {
            return false;
        }
        if self.g1.is_scalar() {
            same_ratio(
                (self.g1.base.get(0, 0), self.g1.power.get(0, 0)),
                (self.g2.base.get(0, 0), self.g2.power.get(0, 0)),
            )
        } else {
            same_ratio_matrix(
                (&self.g1.base, &self.g1.power),
                (&self.g2.base, &self.g2.power),
            )
        }
    }

    /// Bytes hashed by the commit phase: `rp_s || rp_s²`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.g1.to_bytes();
        out.extend_from_slice(&self.g2.to_bytes());
        out
    }
}

/// `π = (R, u)`: commitment `R = base^α`, response `u = α + c·s`.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ScalarPoK<G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize> {
    #[serde(with = "encode::serde_canonical")]
    pub big_r: G,
    #[serde(with = "encode::serde_canonical")]
    pub u: Scalar,
}

impl<G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize> ScalarPoK<G> {
    pub const WIRE_VERSION: u8 = 1;

    /// Proof wire format: version byte || `R` (compressed point) || `u`
    /// (fixed-width scalar).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![Self::WIRE_VERSION];
        out.extend_from_slice(&encode::canonical_bytes(&self.big_r));
        out.extend_from_slice(&encode::encode_scalar(&self.u));
        out
    }
}

/// One scalar proof per matrix entry, row-major, sharing one context.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EntryPoKs<G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize> {
    pub entries: Matrix<ScalarPoK<G>>,
}

/// Commitment matrix plus scalar response matrix for a linear power map.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearPoK<G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize> {
    pub big_r: Matrix<G>,
    pub u: ScalarMatrix,
}

fn challenge(r_bytes: &[u8], context: &[u8]) -> Scalar {
    let mut input = Vec::with_capacity(r_bytes.len() + context.len());
    input.extend_from_slice(r_bytes);
    input.extend_from_slice(context);
    commit_hash(&input)
}

fn prove_single<G, R>(
    base: &G,
    power: &G,
    s: &Scalar,
    context: &[u8],
    rng: &mut R,
) -> Result<ScalarPoK<G>, PokError>
where
    G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize,
    R: RngCore + CryptoRng,
{
    if *base * *s != *power {
        return Err(PokError::InconsistentSecret);
    }
    let alpha = loop {
        let a = Scalar::rand(rng);
        if !a.is_zero() {
            break a;
        }
    };
    let big_r = *base * alpha;
    let c = challenge(&encode::canonical_bytes(&big_r), context);
    Ok(ScalarPoK {
        big_r,
        u: alpha + c * s,
    })
}

fn verify_single<G>(base: &G, power: &G, proof: &ScalarPoK<G>, context: &[u8]) -> bool
where
    G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize,
{
    let c = challenge(&encode::canonical_bytes(&proof.big_r), context);
    *base * proof.u == proof.big_r + *power * c
}

/// Proof of knowledge of a scalar s-pair exponent.
pub fn nizk_prove<G, R>(
    rp: &SPair<G>,
    s: &Scalar,
    context: &[u8],
    rng: &mut R,
) -> Result<ScalarPoK<G>, PokError>
where
    G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize,
    R: RngCore + CryptoRng,
{
    if !rp.is_scalar() {
        return Err(PokError::ShapeMismatch);
    }
    prove_single(rp.base.get(0, 0), rp.power.get(0, 0), s, context, rng)
}

pub fn nizk_verify<G>(rp: &SPair<G>, proof: &ScalarPoK<G>, context: &[u8]) -> bool
where
    G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize,
{
    rp.is_scalar() && verify_single(rp.base.get(0, 0), rp.power.get(0, 0), proof, context)
}

/// Proof of knowledge of a matrix secret behind an entry-wise s-pair.
pub fn nizk_prove_entrywise<G, R>(
    rp: &SPair<G>,
    s: &ScalarMatrix,
    context: &[u8],
    rng: &mut R,
) -> Result<EntryPoKs<G>, PokError>
where
    G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize,
    R: RngCore + CryptoRng,
{
    if rp.dims() != s.dims() {
        return Err(PokError::ShapeMismatch);
    }
    let mut proofs = Vec::with_capacity(s.rows() * s.cols());
    for i in 0..s.rows() {
        for j in 0..s.cols() {
            proofs.push(prove_single(
                rp.base.get(i, j),
                rp.power.get(i, j),
                s.get(i, j),
                context,
                rng,
            )?);
        }
    }
    Ok(EntryPoKs {
        entries: Matrix::from_entries(s.rows(), s.cols(), proofs)
            .map_err(|_| PokError::ShapeMismatch)?,
    })
}

pub fn nizk_verify_entrywise<G>(rp: &SPair<G>, proofs: &EntryPoKs<G>, context: &[u8]) -> bool
where
    G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize,
{
    if rp.dims() != proofs.entries.dims() {
        return false;
    }
    for i in 0..rp.base.rows() {
        for j in 0..rp.base.cols() {
            if !verify_single(
                rp.base.get(i, j),
                rp.power.get(i, j),
                proofs.entries.get(i, j),
                context,
            ) {
                return false;
            }
        }
    }
    true
}

/// `out[i,j] = ∏_t base[t,j]^{w[t,i]}`: the group image of `Wᵀ·M` when
/// `base = g^M`. Authority key images are derived from the composite public
/// base this way.
pub fn apply_transpose_map<G: Group<ScalarField = Scalar>>(
    base: &Matrix<G>,
    w: &ScalarMatrix,
) -> Result<Matrix<G>, PokError> {
    if w.rows() != base.rows() {
        return Err(PokError::ShapeMismatch);
    }
    Ok(Matrix::from_fn(w.cols(), base.cols(), |i, j| {
        (0..w.rows()).fold(G::zero(), |acc, t| acc + *base.get(t, j) * *w.get(t, i))
    }))
}

/// Proof of knowledge of the matrix witness `w` behind
/// `rp.power = g^{wᵀ·dlog(rp.base)}`.
pub fn nizk_prove_linear<G, R>(
    rp: &SPair<G>,
    w: &ScalarMatrix,
    context: &[u8],
    rng: &mut R,
) -> Result<LinearPoK<G>, PokError>
where
    G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize,
    R: RngCore + CryptoRng,
{
    if apply_transpose_map(&rp.base, w)? != rp.power {
        return Err(PokError::InconsistentSecret);
    }
    let alpha = ScalarMatrix::rand(w.rows(), w.cols(), rng);
    let big_r = apply_transpose_map(&rp.base, &alpha)?;
    let c = challenge(&encode::canonical_bytes(&big_r), context);
    let u = alpha.add(&w.scale(c)).map_err(|_| PokError::ShapeMismatch)?;
    Ok(LinearPoK { big_r, u })
}

pub fn nizk_verify_linear<G>(rp: &SPair<G>, proof: &LinearPoK<G>, context: &[u8]) -> bool
where
    G: Group<ScalarField = Scalar> + CanonicalSerialize + CanonicalDeserialize,
{
    if proof.u.rows() != rp.base.rows() {
        return false;
    }
    let lhs = match apply_transpose_map(&rp.base, &proof.u) {
        Ok(m) => m,
        Err(_) => return false,
    };
    if lhs.dims() != rp.power.dims() || proof.big_r.dims() != rp.power.dims() {
        return false;
    }
    let c = challenge(&encode::canonical_bytes(&proof.big_r), context);
    let rhs = match proof.big_r.zip_map(&rp.power, |r, p| *r + *p * c) {
        Ok(m) => m,
        Err(_) => return false,
    };
    lhs == rhs
}

/// Digest of one committed element's serialized pairs: `h_s`.
pub fn element_digest(bytes: &[u8]) -> Scalar {
    commit_hash(bytes)
}

/// Overall transcript commitment over per-element digests in declared order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct CommitDigest(#[serde(with = "encode::serde_canonical")] pub Scalar);

pub fn overall_digest(per_element: &[Scalar]) -> CommitDigest {
    let mut input = Vec::with_capacity(per_element.len() * 33);
    for h in per_element {
        input.extend_from_slice(&encode::encode_scalar(h));
    }
    CommitDigest(commit_hash(&input))
}

/// Commits an ordered list of serialized elements; returns the per-element
/// digests and the overall commitment.
pub fn commit_transcript(items: &[Vec<u8>]) -> (Vec<Scalar>, CommitDigest) {
    let digests: Vec<Scalar> = items.iter().map(|b| element_digest(b)).collect();
    let overall = overall_digest(&digests);
    (digests, overall)
}

/// Challenge context for an element: `h || h_s`.
pub fn pok_context(h: &CommitDigest, h_s: &Scalar) -> Vec<u8> {
    let mut out = encode::encode_scalar(&h.0);
    out.extend_from_slice(&encode::encode_scalar(h_s));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{g1_generator, g2_generator};
    use ark_ff::Field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(0x90c)
    }

    #[test]
    fn spair_construction_rules() {
        let mut rng = rng();
        let s = Scalar::rand(&mut rng);
        let rp = G1SPair::scalar(g1_generator(), s).unwrap();
        assert_eq!(*rp.power.get(0, 0), g1_generator() * s);
        let one = G1SPair::scalar(g1_generator(), Scalar::ONE).unwrap();
        assert_eq!(one.power, one.base);
        assert_eq!(
            G1SPair::scalar(g1_generator(), Scalar::zero()),
            Err(PokError::ZeroSecret)
        );
        let m = ScalarMatrix::rand(3, 2, &mut rng);
        let rp = G1SPair::entrywise(g1_generator(), &m).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(*rp.power.get(i, j), *rp.base.get(i, j) * *m.get(i, j));
            }
        }
    }

    #[test]
    fn dual_pair_same_ratio() {
        let mut rng = rng();
        let s = Scalar::rand(&mut rng);
        let dual = DualSPair::generate_scalar(s).unwrap();
        assert!(dual.same_ratio_ok());
        let mut bad = dual.clone();
        bad.g2 = G2SPair::scalar(g2_generator(), s + Scalar::ONE).unwrap();
        assert!(!bad.same_ratio_ok());
        // matrix duals including structural zeros
        let (a, _) = crate::algebra::sample_lin_matrix(2, &mut rng).unwrap();
        let dual = DualSPair::generate(&a).unwrap();
        assert!(dual.same_ratio_ok());
    }

    #[test]
    fn scalar_pok_round_trip() {
        let mut rng = rng();
        let s = Scalar::rand(&mut rng);
        let rp = G1SPair::scalar(g1_generator(), s).unwrap();
        let proof = nizk_prove(&rp, &s, b"ctx", &mut rng).unwrap();
        assert!(nizk_verify(&rp, &proof, b"ctx"));
        // tampered response
        let mut bad = proof.clone();
        bad.u += Scalar::ONE;
        assert!(!nizk_verify(&rp, &bad, b"ctx"));
        // wrong context
        assert!(!nizk_verify(&rp, &proof, b"other"));
        // transplanted to a different pair
        let rp2 = G1SPair::scalar(g1_generator(), s + Scalar::ONE).unwrap();
        assert!(!nizk_verify(&rp2, &proof, b"ctx"));
    }

    #[test]
    fn scalar_pok_in_g2() {
        let mut rng = rng();
        let sigma = Scalar::rand(&mut rng);
        let rp = G2SPair::scalar(g2_generator(), sigma).unwrap();
        let proof = nizk_prove(&rp, &sigma, b"ctx", &mut rng).unwrap();
        assert!(nizk_verify(&rp, &proof, b"ctx"));
    }

    #[test]
    fn proving_with_wrong_secret_refused() {
        let mut rng = rng();
        let s = Scalar::rand(&mut rng);
        let rp = G1SPair::scalar(g1_generator(), s).unwrap();
        let wrong = s + Scalar::ONE;
        assert_eq!(
            nizk_prove(&rp, &wrong, b"ctx", &mut rng),
            Err(PokError::InconsistentSecret)
        );
    }

    #[test]
    fn fresh_randomness_per_proof() {
        let mut rng = rng();
        let s = Scalar::rand(&mut rng);
        let rp = G1SPair::scalar(g1_generator(), s).unwrap();
        let p1 = nizk_prove(&rp, &s, b"ctx", &mut rng).unwrap();
        let p2 = nizk_prove(&rp, &s, b"ctx", &mut rng).unwrap();
        assert_ne!(p1.big_r, p2.big_r);
    }

    #[test]
    fn entrywise_pok_round_trip() {
        let mut rng = rng();
        let (a, _) = crate::algebra::sample_lin_matrix(2, &mut rng).unwrap();
        let rp = G1SPair::entrywise(g1_generator(), &a).unwrap();
        let proofs = nizk_prove_entrywise(&rp, &a, b"ctx", &mut rng).unwrap();
        assert!(nizk_verify_entrywise(&rp, &proofs, b"ctx"));
        assert!(!nizk_verify_entrywise(&rp, &proofs, b"other"));
        // entry proofs moved to other positions must not verify
        let swapped = Matrix::from_fn(3, 2, |i, j| proofs.entries.get(2 - i, 1 - j).clone());
        let tampered = EntryPoKs { entries: swapped };
        assert!(!nizk_verify_entrywise(&rp, &tampered, b"ctx"));
    }

    #[test]
    fn linear_pok_round_trip() {
        let mut rng = rng();
        // base = g1^A for a known A fixture
        let (a, _) = crate::algebra::sample_lin_matrix(2, &mut rng).unwrap();
        let base = matrix_exp_base(g1_generator(), &a);
        let x = ScalarMatrix::rand(3, 3, &mut rng);
        let power = apply_transpose_map(&base, &x).unwrap();
        // exponent-side oracle: power == g1^{XᵀA}
        let expected = matrix_exp_base(g1_generator(), &x.transpose().matmul(&a).unwrap());
        assert_eq!(power, expected);
        let rp = SPair {
            base: base.clone(),
            power: power.clone(),
        };
        let proof = nizk_prove_linear(&rp, &x, b"ctx", &mut rng).unwrap();
        assert!(nizk_verify_linear(&rp, &proof, b"ctx"));
        assert!(!nizk_verify_linear(&rp, &proof, b"other"));
        // forged power under the same base
        let forged = SPair {
            base,
            power: apply_transpose_map(&rp.base, &ScalarMatrix::rand(3, 3, &mut rng)).unwrap(),
        };
        assert!(!nizk_verify_linear(&forged, &proof, b"ctx"));
    }

    #[test]
    fn linear_pok_vector_witness() {
        let mut rng = rng();
        let (a, _) = crate::algebra::sample_lin_matrix(2, &mut rng).unwrap();
        let base = matrix_exp_base(g1_generator(), &a);
        let tau = ScalarMatrix::rand(3, 1, &mut rng);
        let power = apply_transpose_map(&base, &tau).unwrap();
        assert_eq!(power.dims(), (1, 2));
        let rp = SPair { base, power };
        let proof = nizk_prove_linear(&rp, &tau, b"ctx", &mut rng).unwrap();
        assert!(nizk_verify_linear(&rp, &proof, b"ctx"));
    }

    #[test]
    fn completeness_many_trials() {
        let mut rng = rng();
        for i in 0..1000u32 {
            let s = Scalar::rand(&mut rng);
            if s.is_zero() {
                continue;
            }
            let ctx = i.to_be_bytes();
            let rp = G1SPair::scalar(g1_generator(), s).unwrap();
            let proof = nizk_prove(&rp, &s, &ctx, &mut rng).unwrap();
            assert!(nizk_verify(&rp, &proof, &ctx));
        }
    }

    #[test]
    fn random_proofs_never_verify() {
        let mut rng = rng();
        let s = Scalar::rand(&mut rng);
        let rp = G1SPair::scalar(g1_generator(), s).unwrap();
        for _ in 0..10_000 {
            let forged = ScalarPoK {
                big_r: g1_generator() * Scalar::rand(&mut rng),
                u: Scalar::rand(&mut rng),
            };
            assert!(!nizk_verify(&rp, &forged, b"ctx"));
        }
    }

    #[test]
    fn commit_digests_are_order_sensitive() {
        let items = vec![b"alpha".to_vec(), b"beta".to_vec()];
        let (digests, overall) = commit_transcript(&items);
        assert_eq!(digests.len(), 2);
        let swapped = vec![b"beta".to_vec(), b"alpha".to_vec()];
        let (_, overall_swapped) = commit_transcript(&swapped);
        assert_ne!(overall, overall_swapped);
        // single element: overall == COMMIT over just h_s
        let (ds, single) = commit_transcript(std::slice::from_ref(&items[0]));
        assert_eq!(single, overall_digest(&ds));
    }

    #[test]
    fn reveal_bit_flip_changes_digest() {
        let mut rng = rng();
        let s = Scalar::rand(&mut rng);
        let dual = DualSPair::generate_scalar(s).unwrap();
        let (digests, _) = commit_transcript(&[dual.to_bytes()]);
        let mut flipped = dual.to_bytes();
        flipped[10] ^= 1;
        let (digests2, _) = commit_transcript(&[flipped]);
        assert_ne!(digests[0], digests2[0]);
    }
}
