//! Decentralized inner-product predicate encryption: slot key generation,
//! masking terms, attribute-key issuance, policy encoding, encryption and
//! decryption.
//!
//! The attribute universe is laid out as `L = l + 1` slots. Each slot is one
//! coordinate of the attribute/policy vectors and carries its own secret
//! tuple `(X, τ, σ)`; an authority owning several attributes operates one
//! slot per attribute, and the trust authority operates the last slot alone.

use crate::algebra::{
    encode, g2_generator, hash_to_g2, mask_oracle, multi_exp_matvec, multi_exp_vec, G1Matrix,
    G1Point, G2Point, GtPoint, Matrix, Scalar, ScalarMatrix,
};
use crate::pok::apply_transpose_map;
use crate::vc::VcCommitment;
use ark_ff::{Field, UniformRand};
use ark_std::Zero;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Domain string binding the slot-key hash oracle.
const H_DOMAIN: &[u8] = b"datagov/v1/key-hash";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AbeError {
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
    #[error("slot index out of range")]
    SlotOutOfRange,
    #[error("own public image does not match the provided secret")]
    InconsistentSlotKey,
    #[error("the trust slot only issues keys for a set attribute")]
    TrustSlotRefusal,
    #[error("policy references a slot outside the attribute range")]
    PolicyOutOfRange,
    #[error("ephemeral vector must be nonzero")]
    DegenerateRandomness,
    #[error("key parts must cover every slot exactly once")]
    IncompleteKey,
    #[error("invalid ciphertext encoding")]
    BadCiphertext,
}

/// Global parameters `{g1, g2, g1^A, g1^{UᵀA}}` with the dimensions fixed by
/// the linear-assumption parameter `k` and the slot count `L`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub k: usize,
    pub slots: usize,
    pub a_pub: G1Matrix,
    pub ua_pub: G1Matrix,
}

impl SystemParams {
    pub fn new(k: usize, slots: usize, a_pub: G1Matrix, ua_pub: G1Matrix) -> Result<Self, AbeError> {
        if a_pub.dims() != (k + 1, k) || ua_pub.dims() != (k + 1, k) || k == 0 || slots < 1 {
            return Err(AbeError::Dimension("system parameters"));
        }
        Ok(SystemParams {
            k,
            slots,
            a_pub,
            ua_pub,
        })
    }

    /// Test-fixture constructor from explicit exponents.
    pub fn from_exponents(
        k: usize,
        slots: usize,
        a: &ScalarMatrix,
        ua: &ScalarMatrix,
    ) -> Result<Self, AbeError> {
        let g1 = crate::algebra::g1_generator();
        SystemParams::new(
            k,
            slots,
            crate::algebra::matrix_exp_base(g1, a),
            crate::algebra::matrix_exp_base(g1, ua),
        )
    }
}

/// Per-slot secret tuple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSecret {
    pub x: ScalarMatrix,
    #[serde(with = "encode::serde_canonical")]
    pub tau: Vec<Scalar>,
    #[serde(with = "encode::serde_canonical")]
    pub sigma: Scalar,
}

/// Per-slot public key `{g1^{XᵀA}, ê(g1,g2)^{τᵀA}, g2^σ}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotPublic {
    pub xa_pub: G1Matrix,
    #[serde(with = "encode::serde_canonical")]
    pub taua_pub: Vec<GtPoint>,
    #[serde(with = "encode::serde_canonical")]
    pub y: G2Point,
}

/// G1-side image `g1^{τᵀA}`, published during authority setup; the GT
/// component of the public key is its pairing with `g2`.
pub fn tau_image(params: &SystemParams, tau: &[Scalar]) -> Result<G1Matrix, AbeError> {
    if tau.len() != params.k + 1 {
        return Err(AbeError::Dimension("tau"));
    }
    let tau_col = Matrix::from_entries(params.k + 1, 1, tau.to_vec())
        .map_err(|_| AbeError::Dimension("tau"))?;
    apply_transpose_map(&params.a_pub, &tau_col).map_err(|_| AbeError::Dimension("tau image"))
}

/// Derives the public key for one slot from its secret.
pub fn slot_public(params: &SystemParams, secret: &SlotSecret) -> Result<SlotPublic, AbeError> {
    if secret.x.dims() != (params.k + 1, params.k + 1) {
        return Err(AbeError::Dimension("slot secret X"));
    }
    let xa_pub =
        apply_transpose_map(&params.a_pub, &secret.x).map_err(|_| AbeError::Dimension("XᵀA"))?;
    let tau_img = tau_image(params, &secret.tau)?;
    let g2 = g2_generator();
    let taua_pub: Vec<GtPoint> = (0..params.k)
        .map(|j| crate::algebra::pairing(tau_img.get(0, j), &g2))
        .collect();
    Ok(SlotPublic {
        xa_pub,
        taua_pub,
        y: g2 * secret.sigma,
    })
}

/// Samples a fresh slot key pair.
pub fn slot_keygen<R: RngCore + CryptoRng>(
    params: &SystemParams,
    rng: &mut R,
) -> Result<(SlotPublic, SlotSecret), AbeError> {
    let secret = SlotSecret {
        x: ScalarMatrix::rand(params.k + 1, params.k + 1, rng),
        tau: (0..params.k + 1).map(|_| Scalar::rand(rng)).collect(),
        sigma: loop {
            let s = Scalar::rand(rng);
            if !s.is_zero() {
                break s;
            }
        },
    };
    let public = slot_public(params, &secret)?;
    Ok((public, secret))
}

/// Attribute vector: `{0,1}` entries with the trust slot always set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeVector {
    v: Vec<bool>,
}

impl AttributeVector {
    /// `attrs[i]` says whether slot `i < L-1` is held; the trust slot is
    /// appended automatically.
    pub fn new(attrs: &[bool]) -> Self {
        let mut v = attrs.to_vec();
        v.push(true);
        AttributeVector { v }
    }

    pub fn from_set(held: &BTreeSet<usize>, slots: usize) -> Result<Self, AbeError> {
        if held.iter().any(|&i| i + 1 >= slots) {
            return Err(AbeError::SlotOutOfRange);
        }
        let attrs: Vec<bool> = (0..slots - 1).map(|i| held.contains(&i)).collect();
        Ok(AttributeVector::new(&attrs))
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn get(&self, slot: usize) -> bool {
        self.v[slot]
    }

    pub fn as_scalars(&self) -> Vec<Scalar> {
        self.v
            .iter()
            .map(|&b| if b { Scalar::ONE } else { Scalar::zero() })
            .collect()
    }
}

/// Policy vector; both encodings satisfy `Σ_i x_i = 0`, so the inner product
/// with a complete attribute vector vanishes exactly when every required
/// slot is held.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyVector {
    #[serde(with = "encode::serde_canonical")]
    x: Vec<Scalar>,
}

impl PolicyVector {
    pub fn from_scalars(x: Vec<Scalar>) -> Result<Self, AbeError> {
        let sum: Scalar = x.iter().sum();
        if !sum.is_zero() {
            return Err(AbeError::PolicyOutOfRange);
        }
        Ok(PolicyVector { x })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn coefficients(&self) -> &[Scalar] {
        &self.x
    }

    pub fn inner_product(&self, v: &AttributeVector) -> Result<Scalar, AbeError> {
        if v.len() != self.x.len() {
            return Err(AbeError::Dimension("inner product"));
        }
        Ok(crate::algebra::inner_product(&self.x, &v.as_scalars())
            .expect("lengths checked above"))
    }
}

/// Policy encoding mode. The naive form exists solely for the attack
/// reproductions and stays behind an explicitly insecure name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyMode {
    Randomized,
    NaiveInsecureDemo,
}

/// Encodes a conjunction over `required` slot indices (the trust slot is
/// implicit). An empty requirement yields the all-zero vector, decryptable
/// by every registered holder.
pub fn encode_policy<R: RngCore + CryptoRng>(
    required: &BTreeSet<usize>,
    slots: usize,
    mode: PolicyMode,
    rng: &mut R,
) -> Result<PolicyVector, AbeError> {
    if slots < 1 {
        return Err(AbeError::Dimension("slots"));
    }
    if required.iter().any(|&i| i + 1 >= slots) {
        return Err(AbeError::PolicyOutOfRange);
    }
    let mut x = vec![Scalar::zero(); slots];
    let mut sum = Scalar::zero();
    for &i in required {
        let r = match mode {
            PolicyMode::Randomized => loop {
                let r = Scalar::rand(rng);
                if !r.is_zero() {
                    break r;
                }
            },
            PolicyMode::NaiveInsecureDemo => Scalar::ONE,
        };
        x[i] = r;
        sum += r;
    }
    x[slots - 1] = -sum;
    PolicyVector::from_scalars(x)
}

/// `g2^h` with `h = H(GID, C)`: one hash-to-curve output per component.
pub fn derive_h(gid: &[u8], c: &VcCommitment, k: usize) -> Vec<G2Point> {
    (1..=k + 1)
        .map(|idx| hash_to_g2(H_DOMAIN, gid, &c.c, idx))
        .collect()
}

/// Masking vector for one slot: pairwise shared-secret oracle outputs,
/// positive below the slot and negative above it, so the sum over all slots
/// cancels componentwise.
pub fn masking(
    slot: usize,
    sigma: &Scalar,
    all_y: &[G2Point],
    gid: &[u8],
    c: &VcCommitment,
    k: usize,
) -> Result<Vec<Scalar>, AbeError> {
    if slot >= all_y.len() {
        return Err(AbeError::SlotOutOfRange);
    }
    if all_y[slot] != g2_generator() * *sigma {
        return Err(AbeError::InconsistentSlotKey);
    }
    let mut mu = vec![Scalar::zero(); k + 1];
    for (j, y) in all_y.iter().enumerate() {
        if j == slot {
            continue;
        }
        let shared = *y * *sigma;
        let parts = mask_oracle(&shared, gid, &c.c, k + 1);
        for (t, part) in parts.into_iter().enumerate() {
            if j < slot {
                mu[t] += part;
            } else {
                mu[t] -= part;
            }
        }
    }
    Ok(mu)
}

/// Whether a slot is an ordinary attribute slot or the trust slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotRole {
    Attribute,
    Trust,
}

/// One slot's contribution to a user key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPart {
    #[serde(with = "encode::serde_canonical")]
    pub k: Vec<G2Point>,
    pub slot: usize,
}

/// `K = g2^{τ - v·X·h + μ}`, computed from the public `g2^h` components so
/// the issuer never needs the scalar `h`.
pub fn issue_key_part(
    secret: &SlotSecret,
    slot: usize,
    role: SlotRole,
    v: bool,
    h_pub: &[G2Point],
    mu: &[Scalar],
) -> Result<KeyPart, AbeError> {
    let dim = secret.tau.len();
    if h_pub.len() != dim || mu.len() != dim || secret.x.dims() != (dim, dim) {
        return Err(AbeError::Dimension("key part"));
    }
    if role == SlotRole::Trust && !v {
        return Err(AbeError::TrustSlotRefusal);
    }
    let g2 = g2_generator();
    let mut k_vec = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut entry = g2 * secret.tau[i] + g2 * mu[i];
        if v {
            let xh = (0..dim).fold(G2Point::zero(), |acc, t| {
                acc + h_pub[t] * *secret.x.get(i, t)
            });
            entry -= xh;
        }
        k_vec.push(entry);
    }
    Ok(KeyPart { k: k_vec, slot })
}

/// Ciphertext `(ct_0, {ct_i}, ct')`. Receiver-agnostic: no identifier or
/// commitment appears in it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbeCiphertext {
    #[serde(with = "encode::serde_canonical")]
    pub ct0: Vec<G1Point>,
    pub cts: Vec<CtSlot>,
    #[serde(with = "encode::serde_canonical")]
    pub ct_prime: GtPoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtSlot(
    #[serde(with = "encode::serde_canonical")] pub Vec<G1Point>,
);

impl AbeCiphertext {
    const WIRE_VERSION: u8 = 1;

    /// Versioned wire format: header `(version, k, L)` then length-prefixed
    /// canonical encodings.
    pub fn to_bytes(&self) -> Vec<u8> {
        let k = self.ct0.len() - 1;
        let mut out = vec![Self::WIRE_VERSION];
        out.extend_from_slice(&(k as u16).to_be_bytes());
        out.extend_from_slice(&(self.cts.len() as u16).to_be_bytes());
        for p in &self.ct0 {
            out.extend_from_slice(&encode::encode_g1(p));
        }
        for slot in &self.cts {
            for p in &slot.0 {
                out.extend_from_slice(&encode::encode_g1(p));
            }
        }
        out.extend_from_slice(&encode::encode_gt(&self.ct_prime));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AbeError> {
        const G1_WIDTH: usize = 1 + encode::G1_LEN;
        if bytes.len() < 5 || bytes[0] != Self::WIRE_VERSION {
            return Err(AbeError::BadCiphertext);
        }
        let k = u16::from_be_bytes([bytes[1], bytes[2]]) as usize;
        let slots = u16::from_be_bytes([bytes[3], bytes[4]]) as usize;
        let expected = 5 + (k + 1) * G1_WIDTH * (slots + 1) + 1 + encode::GT_LEN;
        if bytes.len() != expected || k == 0 || slots == 0 {
            return Err(AbeError::BadCiphertext);
        }
        let mut offset = 5;
        let read_vec = |count: usize, offset: &mut usize| -> Result<Vec<G1Point>, AbeError> {
            let mut v = Vec::with_capacity(count);
            for _ in 0..count {
                let p = encode::decode_g1(&bytes[*offset..*offset + G1_WIDTH])
                    .map_err(|_| AbeError::BadCiphertext)?;
                *offset += G1_WIDTH;
                v.push(p);
            }
            Ok(v)
        };
        let ct0 = read_vec(k + 1, &mut offset)?;
        let mut cts = Vec::with_capacity(slots);
        for _ in 0..slots {
            cts.push(CtSlot(read_vec(k + 1, &mut offset)?));
        }
        let ct_prime =
            encode::decode_gt(&bytes[offset..]).map_err(|_| AbeError::BadCiphertext)?;
        Ok(AbeCiphertext { ct0, cts, ct_prime })
    }
}

/// Encryption with caller-provided ephemeral vector; `encrypt` samples it.
///
/// Cost model: one vector multi-exponentiation for `ct_0`, one per slot for
/// `ct_i` (over the concatenation of `g1^{UᵀA}` scaled into the slot
/// coefficient and the slot's `g1^{XᵀA}`), and one GT multi-exponentiation
/// per slot for `ct'` — `2L + 1` in total.
pub fn encrypt_with_randomness(
    params: &SystemParams,
    slot_pubs: &[SlotPublic],
    policy: &PolicyVector,
    payload: &GtPoint,
    s: &[Scalar],
) -> Result<AbeCiphertext, AbeError> {
    let slots = slot_pubs.len();
    if policy.len() != slots || slots == 0 {
        return Err(AbeError::Dimension("policy/slot count"));
    }
    if s.len() != params.k || s.iter().all(|e| e.is_zero()) {
        return Err(AbeError::DegenerateRandomness);
    }
    let ct0 = multi_exp_matvec(&params.a_pub, s).map_err(|_| AbeError::Dimension("ct0"))?;
    let mut cts = Vec::with_capacity(slots);
    for (i, pk) in slot_pubs.iter().enumerate() {
        if pk.xa_pub.dims() != (params.k + 1, params.k) {
            return Err(AbeError::Dimension("slot public key"));
        }
        let x_i = policy.coefficients()[i];
        // One multi-exponentiation over 2k columns:
        // ct_i = (g1^{UᵀA})^{x_i·s} ⊙ (g1^{XᵀA})^{s}
        let combined = Matrix::from_fn(params.k + 1, 2 * params.k, |r, c| {
            if c < params.k {
                *params.ua_pub.get(r, c)
            } else {
                *pk.xa_pub.get(r, c - params.k)
            }
        });
        let mut exps: Vec<Scalar> = s.iter().map(|e| *e * x_i).collect();
        exps.extend_from_slice(s);
        cts.push(CtSlot(
            multi_exp_matvec(&combined, &exps).map_err(|_| AbeError::Dimension("ct_i"))?,
        ));
    }
    let mut ct_prime = *payload;
    for pk in slot_pubs {
        if pk.taua_pub.len() != params.k {
            return Err(AbeError::Dimension("taua_pub"));
        }
        ct_prime += multi_exp_vec(&pk.taua_pub, s).map_err(|_| AbeError::Dimension("ct'"))?;
    }
    Ok(AbeCiphertext { ct0, cts, ct_prime })
}

pub fn encrypt<R: RngCore + CryptoRng>(
    params: &SystemParams,
    slot_pubs: &[SlotPublic],
    policy: &PolicyVector,
    payload: &GtPoint,
    rng: &mut R,
) -> Result<AbeCiphertext, AbeError> {
    let s: Vec<Scalar> = loop {
        let candidate: Vec<Scalar> = (0..params.k).map(|_| Scalar::rand(rng)).collect();
        if !candidate.iter().all(|e| e.is_zero()) {
            break candidate;
        }
    };
    encrypt_with_randomness(params, slot_pubs, policy, payload, &s)
}

/// Recovers `ct' / (ê(ct_0, ∏ K_j) · ê(∏ ct_i^{v_i}, g2^h))`. Equals the
/// payload exactly when `⟨x, v⟩ = 0` and all key parts are honest and bound
/// to one `(GID, C)`.
///
/// Cost model: two vector pairing evaluations; the `v`-selected ciphertext
/// and key aggregations are plain additions because `v` is a bit vector.
pub fn decrypt(
    key_parts: &[KeyPart],
    v: &AttributeVector,
    h_pub: &[G2Point],
    ct: &AbeCiphertext,
) -> Result<GtPoint, AbeError> {
    let slots = ct.cts.len();
    if v.len() != slots || key_parts.len() != slots {
        return Err(AbeError::Dimension("decrypt shapes"));
    }
    let dim = ct.ct0.len();
    if h_pub.len() != dim {
        return Err(AbeError::Dimension("h components"));
    }
    let mut seen = vec![false; slots];
    for part in key_parts {
        if part.slot >= slots || seen[part.slot] || part.k.len() != dim {
            return Err(AbeError::IncompleteKey);
        }
        seen[part.slot] = true;
    }
    let mut key_sum = vec![G2Point::zero(); dim];
    for part in key_parts {
        for (acc, component) in key_sum.iter_mut().zip(&part.k) {
            *acc += component;
        }
    }
    let mut ct_acc = vec![G1Point::zero(); dim];
    for (i, slot_ct) in ct.cts.iter().enumerate() {
        if slot_ct.0.len() != dim {
            return Err(AbeError::BadCiphertext);
        }
        if v.get(i) {
            for (acc, component) in ct_acc.iter_mut().zip(&slot_ct.0) {
                *acc += component;
            }
        }
    }
    let blind = crate::algebra::vector_pairing(&ct.ct0, &key_sum)
        .map_err(|_| AbeError::Dimension("pairing"))?
        + crate::algebra::vector_pairing(&ct_acc, h_pub)
            .map_err(|_| AbeError::Dimension("pairing"))?;
    Ok(ct.ct_prime - blind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{g1_generator, gt_generator, sample_lin_matrix};
    use crate::vc::VcCommitment;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(0xabe)
    }

    fn fixture(k: usize, slots: usize, rng: &mut ChaCha20Rng) -> (SystemParams, ScalarMatrix, ScalarMatrix) {
        let (a, _) = sample_lin_matrix(k, rng).unwrap();
        let u = ScalarMatrix::rand(k + 1, k + 1, rng);
        let ua = u.transpose().matmul(&a).unwrap();
        (
            SystemParams::from_exponents(k, slots, &a, &ua).unwrap(),
            a,
            ua,
        )
    }

    fn commitment(rng: &mut ChaCha20Rng) -> VcCommitment {
        VcCommitment {
            c: g1_generator() * Scalar::rand(rng),
        }
    }

    struct System {
        params: SystemParams,
        publics: Vec<SlotPublic>,
        secrets: Vec<SlotSecret>,
    }

    fn build_system(k: usize, slots: usize, rng: &mut ChaCha20Rng) -> System {
        let (params, _, _) = fixture(k, slots, rng);
        let mut publics = Vec::new();
        let mut secrets = Vec::new();
        for _ in 0..slots {
            let (pk, sk) = slot_keygen(&params, rng).unwrap();
            publics.push(pk);
            secrets.push(sk);
        }
        System {
            params,
            publics,
            secrets,
        }
    }

    fn issue_all(
        sys: &System,
        v: &AttributeVector,
        gid: &[u8],
        c: &VcCommitment,
    ) -> (Vec<KeyPart>, Vec<G2Point>) {
        let all_y: Vec<G2Point> = sys.publics.iter().map(|p| p.y).collect();
        let h_pub = derive_h(gid, c, sys.params.k);
        let slots = sys.publics.len();
        let parts: Vec<KeyPart> = (0..slots)
            .map(|slot| {
                let mu = masking(slot, &sys.secrets[slot].sigma, &all_y, gid, c, sys.params.k)
                    .unwrap();
                let role = if slot == slots - 1 {
                    SlotRole::Trust
                } else {
                    SlotRole::Attribute
                };
                issue_key_part(&sys.secrets[slot], slot, role, v.get(slot), &h_pub, &mu).unwrap()
            })
            .collect();
        (parts, h_pub)
    }

    #[test]
    fn slot_keygen_matches_exponent_oracle() {
        let mut rng = rng();
        let (params, a, _) = fixture(2, 4, &mut rng);
        let (pk, sk) = slot_keygen(&params, &mut rng).unwrap();
        let expected_xa = crate::algebra::matrix_exp_base(
            g1_generator(),
            &sk.x.transpose().matmul(&a).unwrap(),
        );
        assert_eq!(pk.xa_pub, expected_xa);
        let tau_a = Matrix::from_entries(1, 3, sk.tau.clone())
            .unwrap()
            .matmul(&a)
            .unwrap();
        for j in 0..2 {
            assert_eq!(pk.taua_pub[j], gt_generator() * *tau_a.get(0, j));
        }
        assert_eq!(pk.y, g2_generator() * sk.sigma);
        // two calls produce independent keys
        let (pk2, _) = slot_keygen(&params, &mut rng).unwrap();
        assert_ne!(pk.xa_pub, pk2.xa_pub);
    }

    #[test]
    fn zero_secret_fixture_gives_identity_publics() {
        let mut rng = rng();
        let (params, _, _) = fixture(2, 3, &mut rng);
        let sk = SlotSecret {
            x: ScalarMatrix::zeros(3, 3),
            tau: vec![Scalar::zero(); 3],
            sigma: Scalar::ONE,
        };
        let pk = slot_public(&params, &sk).unwrap();
        assert!(pk.xa_pub.entries().iter().all(|p| p.is_zero()));
        assert!(pk.taua_pub.iter().all(|t| t.is_zero()));
    }

    #[test]
    fn derive_h_binds_gid_and_commitment() {
        let mut rng = rng();
        let c1 = commitment(&mut rng);
        let c2 = commitment(&mut rng);
        let h1 = derive_h(b"gid", &c1, 2);
        assert_eq!(h1, derive_h(b"gid", &c1, 2));
        assert_eq!(h1.len(), 3);
        assert_ne!(h1, derive_h(b"other", &c1, 2));
        assert_ne!(h1, derive_h(b"gid", &c2, 2));
    }

    #[test]
    fn masking_pairwise_cancellation() {
        let mut rng = rng();
        let k = 2;
        let c = commitment(&mut rng);
        for slots in 1..=8usize {
            let sigmas: Vec<Scalar> = (0..slots).map(|_| Scalar::rand(&mut rng)).collect();
            let ys: Vec<G2Point> = sigmas.iter().map(|s| g2_generator() * *s).collect();
            let mut sum = vec![Scalar::zero(); k + 1];
            for slot in 0..slots {
                let mu = masking(slot, &sigmas[slot], &ys, b"gid", &c, k).unwrap();
                for (acc, m) in sum.iter_mut().zip(&mu) {
                    *acc += m;
                }
            }
            assert!(sum.iter().all(|s| s.is_zero()), "slots = {slots}");
            if slots == 1 {
                let mu = masking(0, &sigmas[0], &ys, b"gid", &c, k).unwrap();
                assert!(mu.iter().all(|m| m.is_zero()));
            }
        }
    }

    #[test]
    fn masking_two_slots_mirror() {
        let mut rng = rng();
        let c = commitment(&mut rng);
        let s0 = Scalar::rand(&mut rng);
        let s1 = Scalar::rand(&mut rng);
        let ys = vec![g2_generator() * s0, g2_generator() * s1];
        let mu0 = masking(0, &s0, &ys, b"gid", &c, 2).unwrap();
        let mu1 = masking(1, &s1, &ys, b"gid", &c, 2).unwrap();
        for (a, b) in mu0.iter().zip(&mu1) {
            assert_eq!(*a + b, Scalar::zero());
        }
    }

    #[test]
    fn masking_refuses_inconsistent_y() {
        let mut rng = rng();
        let c = commitment(&mut rng);
        let sigma = Scalar::rand(&mut rng);
        let ys = vec![g2_generator() * (sigma + Scalar::ONE), g2_generator()];
        assert_eq!(
            masking(0, &sigma, &ys, b"gid", &c, 2),
            Err(AbeError::InconsistentSlotKey)
        );
    }

    #[test]
    fn issue_key_part_zero_attribute_drops_x_term() {
        let mut rng = rng();
        let sys = build_system(2, 3, &mut rng);
        let c = commitment(&mut rng);
        let h_pub = derive_h(b"gid", &c, 2);
        let mu = vec![Scalar::zero(); 3];
        let part = issue_key_part(
            &sys.secrets[0],
            0,
            SlotRole::Attribute,
            false,
            &h_pub,
            &mu,
        )
        .unwrap();
        for (i, component) in part.k.iter().enumerate() {
            assert_eq!(*component, g2_generator() * sys.secrets[0].tau[i]);
        }
        // zero X fixture: key independent of v
        let zero_x = SlotSecret {
            x: ScalarMatrix::zeros(3, 3),
            tau: sys.secrets[0].tau.clone(),
            sigma: sys.secrets[0].sigma,
        };
        let with_v = issue_key_part(&zero_x, 0, SlotRole::Attribute, true, &h_pub, &mu).unwrap();
        let without_v =
            issue_key_part(&zero_x, 0, SlotRole::Attribute, false, &h_pub, &mu).unwrap();
        assert_eq!(with_v.k, without_v.k);
    }

    #[test]
    fn trust_slot_requires_set_attribute() {
        let mut rng = rng();
        let sys = build_system(2, 3, &mut rng);
        let c = commitment(&mut rng);
        let h_pub = derive_h(b"gid", &c, 2);
        let mu = vec![Scalar::zero(); 3];
        assert_eq!(
            issue_key_part(&sys.secrets[2], 2, SlotRole::Trust, false, &h_pub, &mu),
            Err(AbeError::TrustSlotRefusal)
        );
        assert!(issue_key_part(&sys.secrets[2], 2, SlotRole::Trust, true, &h_pub, &mu).is_ok());
    }

    #[test]
    fn policy_encoding_naive_fixture() {
        let mut rng = rng();
        let required: BTreeSet<usize> = [0, 1].into_iter().collect();
        let x = encode_policy(&required, 6, PolicyMode::NaiveInsecureDemo, &mut rng).unwrap();
        let expected = [
            Scalar::ONE,
            Scalar::ONE,
            Scalar::zero(),
            Scalar::zero(),
            Scalar::zero(),
            -Scalar::from(2u64),
        ];
        assert_eq!(x.coefficients(), &expected[..]);
        let v = AttributeVector::new(&[true, true, false, true, false]);
        assert!(x.inner_product(&v).unwrap().is_zero());
    }

    #[test]
    fn corrupt_value_probe_beats_naive_but_not_randomized() {
        // A corrupted authority issues v_0 = 2 instead of a bit. Together
        // with the mandatory trust entry the inner product with the naive
        // encoding vanishes, while a randomized encoding stays nonzero with
        // overwhelming probability.
        let mut rng = rng();
        let required: BTreeSet<usize> = [0, 1].into_iter().collect();
        let probe = vec![
            Scalar::from(2u64),
            Scalar::zero(),
            Scalar::zero(),
            Scalar::zero(),
            Scalar::zero(),
            Scalar::ONE,
        ];
        let naive = encode_policy(&required, 6, PolicyMode::NaiveInsecureDemo, &mut rng).unwrap();
        let naive_ip =
            crate::algebra::inner_product(naive.coefficients(), &probe).unwrap();
        assert!(naive_ip.is_zero());
        for _ in 0..20 {
            let randomized =
                encode_policy(&required, 6, PolicyMode::Randomized, &mut rng).unwrap();
            let ip = crate::algebra::inner_product(randomized.coefficients(), &probe).unwrap();
            assert!(!ip.is_zero());
        }
    }

    #[test]
    fn policy_missing_attribute_nonzero_product() {
        let mut rng = rng();
        let required: BTreeSet<usize> = [0, 3].into_iter().collect();
        let x = encode_policy(&required, 6, PolicyMode::Randomized, &mut rng).unwrap();
        let holding = AttributeVector::new(&[true, false, false, true, false]);
        assert!(x.inner_product(&holding).unwrap().is_zero());
        let missing = AttributeVector::new(&[true, false, false, false, false]);
        assert!(!x.inner_product(&missing).unwrap().is_zero());
    }

    #[test]
    fn empty_policy_allows_everyone() {
        let mut rng = rng();
        let x = encode_policy(&BTreeSet::new(), 4, PolicyMode::Randomized, &mut rng).unwrap();
        assert!(x.coefficients().iter().all(|e| e.is_zero()));
        let v = AttributeVector::new(&[false, false, false]);
        assert!(x.inner_product(&v).unwrap().is_zero());
    }

    #[test]
    fn policy_out_of_range_rejected() {
        let mut rng = rng();
        let required: BTreeSet<usize> = [5].into_iter().collect();
        assert_eq!(
            encode_policy(&required, 6, PolicyMode::Randomized, &mut rng),
            Err(AbeError::PolicyOutOfRange)
        );
    }

    #[test]
    fn encrypt_rejects_degenerate_randomness() {
        let mut rng = rng();
        let sys = build_system(2, 3, &mut rng);
        let required = BTreeSet::new();
        let x = encode_policy(&required, 3, PolicyMode::Randomized, &mut rng).unwrap();
        let payload = gt_generator() * Scalar::rand(&mut rng);
        let zero = vec![Scalar::zero(); 2];
        assert_eq!(
            encrypt_with_randomness(&sys.params, &sys.publics, &x, &payload, &zero),
            Err(AbeError::DegenerateRandomness)
        );
    }

    #[test]
    fn all_zero_policy_ciphertext_shape() {
        let mut rng = rng();
        let sys = build_system(2, 3, &mut rng);
        let x = encode_policy(&BTreeSet::new(), 3, PolicyMode::Randomized, &mut rng).unwrap();
        let payload = gt_generator() * Scalar::rand(&mut rng);
        let s = vec![Scalar::rand(&mut rng), Scalar::rand(&mut rng)];
        let ct = encrypt_with_randomness(&sys.params, &sys.publics, &x, &payload, &s).unwrap();
        // with x_i = 0, ct_i = g1^{XᵀAs} only
        for (i, slot_ct) in ct.cts.iter().enumerate() {
            let expected = multi_exp_matvec(&sys.publics[i].xa_pub, &s).unwrap();
            assert_eq!(slot_ct.0, expected);
        }
    }

    #[test]
    fn decrypt_round_trip_and_intermediate_identity() {
        let mut rng = rng();
        let sys = build_system(2, 4, &mut rng);
        let required: BTreeSet<usize> = [1].into_iter().collect();
        let x = encode_policy(&required, 4, PolicyMode::Randomized, &mut rng).unwrap();
        let v = AttributeVector::new(&[false, true, true]);
        assert!(x.inner_product(&v).unwrap().is_zero());
        let c = commitment(&mut rng);
        let (parts, h_pub) = issue_all(&sys, &v, b"gid", &c);
        let payload = gt_generator() * Scalar::rand(&mut rng);
        let s = vec![Scalar::rand(&mut rng), Scalar::rand(&mut rng)];
        let ct = encrypt_with_randomness(&sys.params, &sys.publics, &x, &payload, &s).unwrap();
        let recovered = decrypt(&parts, &v, &h_pub, &ct).unwrap();
        assert_eq!(recovered, payload);
        // intermediate identity: the blinding factor equals ê(g1,g2)^{τᵀAs}
        // recomputed from the encryptor-side fixture
        let blind = ct.ct_prime - recovered;
        let mut expected = GtPoint::zero();
        for pk in &sys.publics {
            expected += multi_exp_vec(&pk.taua_pub, &s).unwrap();
        }
        assert_eq!(blind, expected);
    }

    #[test]
    fn decrypt_many_random_instances() {
        let mut rng = rng();
        for trial in 0..20 {
            let slots = 3 + (trial % 3);
            let sys = build_system(2, slots, &mut rng);
            let mut required = BTreeSet::new();
            required.insert(trial % (slots - 1));
            let x = encode_policy(&required, slots, PolicyMode::Randomized, &mut rng).unwrap();
            let attrs: Vec<bool> = (0..slots - 1).map(|i| required.contains(&i)).collect();
            let v = AttributeVector::new(&attrs);
            let c = commitment(&mut rng);
            let (parts, h_pub) = issue_all(&sys, &v, b"gid", &c);
            let payload = gt_generator() * Scalar::rand(&mut rng);
            let ct = encrypt(&sys.params, &sys.publics, &x, &payload, &mut rng).unwrap();
            assert_eq!(decrypt(&parts, &v, &h_pub, &ct).unwrap(), payload);
        }
    }

    #[test]
    fn decrypt_fails_without_required_attribute() {
        let mut rng = rng();
        for _ in 0..20 {
            let sys = build_system(2, 4, &mut rng);
            let required: BTreeSet<usize> = [0, 2].into_iter().collect();
            let x = encode_policy(&required, 4, PolicyMode::Randomized, &mut rng).unwrap();
            let v = AttributeVector::new(&[true, false, false]);
            assert!(!x.inner_product(&v).unwrap().is_zero());
            let c = commitment(&mut rng);
            let (parts, h_pub) = issue_all(&sys, &v, b"gid", &c);
            let payload = gt_generator() * Scalar::rand(&mut rng);
            let ct = encrypt(&sys.params, &sys.publics, &x, &payload, &mut rng).unwrap();
            assert_ne!(decrypt(&parts, &v, &h_pub, &ct).unwrap(), payload);
        }
    }

    #[test]
    fn mixed_identity_key_parts_fail() {
        let mut rng = rng();
        for _ in 0..10 {
            let sys = build_system(2, 4, &mut rng);
            let required: BTreeSet<usize> = [0, 1].into_iter().collect();
            let x = encode_policy(&required, 4, PolicyMode::Randomized, &mut rng).unwrap();
            // user 1 holds attribute 0, user 2 holds attribute 1; the union
            // satisfies the policy but the masking terms no longer cancel.
            let v1 = AttributeVector::new(&[true, false, false]);
            let v2 = AttributeVector::new(&[false, true, false]);
            let union = AttributeVector::new(&[true, true, false]);
            let c1 = commitment(&mut rng);
            let c2 = commitment(&mut rng);
            let (parts1, h1) = issue_all(&sys, &v1, b"gid-one", &c1);
            let (parts2, _) = issue_all(&sys, &v2, b"gid-two", &c2);
            let mixed: Vec<KeyPart> = parts1
                .iter()
                .enumerate()
                .map(|(slot, p)| {
                    if slot == 1 {
                        parts2[slot].clone()
                    } else {
                        p.clone()
                    }
                })
                .collect();
            let payload = gt_generator() * Scalar::rand(&mut rng);
            let ct = encrypt(&sys.params, &sys.publics, &x, &payload, &mut rng).unwrap();
            assert_ne!(decrypt(&mixed, &union, &h1, &ct).unwrap(), payload);
        }
    }

    #[test]
    fn operation_counts_match_cost_model() {
        let mut rng = rng();
        for &slots in &[3usize, 6, 9] {
            let sys = build_system(2, slots, &mut rng);
            let required: BTreeSet<usize> = [0].into_iter().collect();
            let x = encode_policy(&required, slots, PolicyMode::Randomized, &mut rng).unwrap();
            let payload = gt_generator() * Scalar::rand(&mut rng);
            let (ct, counts) = crate::algebra::meter::measure(|| {
                encrypt(&sys.params, &sys.publics, &x, &payload, &mut rng).unwrap()
            });
            assert_eq!(counts.vector_multi_exps as usize, 2 * slots + 1);
            assert_eq!(counts.vector_pairings, 0);
            let attrs: Vec<bool> = (0..slots - 1).map(|i| required.contains(&i)).collect();
            let v = AttributeVector::new(&attrs);
            let c = commitment(&mut rng);
            let (parts, h_pub) = issue_all(&sys, &v, b"gid", &c);
            let (out, counts) =
                crate::algebra::meter::measure(|| decrypt(&parts, &v, &h_pub, &ct).unwrap());
            assert_eq!(out, payload);
            assert_eq!(counts.vector_pairings, 2);
            assert_eq!(counts.vector_multi_exps, 0);
        }
    }

    #[test]
    fn ciphertext_wire_round_trip() {
        let mut rng = rng();
        let sys = build_system(2, 3, &mut rng);
        let x = encode_policy(&BTreeSet::new(), 3, PolicyMode::Randomized, &mut rng).unwrap();
        let payload = gt_generator() * Scalar::rand(&mut rng);
        let ct = encrypt(&sys.params, &sys.publics, &x, &payload, &mut rng).unwrap();
        let bytes = ct.to_bytes();
        let back = AbeCiphertext::from_bytes(&bytes).unwrap();
        assert_eq!(ct, back);
        assert!(AbeCiphertext::from_bytes(&bytes[1..]).is_err());
        let mut tampered = bytes.clone();
        let last = tampered.len() - 1;
        tampered[last] ^= 1;
        assert!(AbeCiphertext::from_bytes(&tampered).is_err());
    }
}
