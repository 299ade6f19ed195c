//! Executable adversaries: the rogue-key attack against aggregate slot keys
//! and the ephemeral-vector inference attack against centrally generated
//! parameters, each paired with the mitigation the full pipeline enforces.
//!
//! Both attacks run against configurably weakened systems; the companion
//! assertions show the default configuration blocks them.

use crate::abe::{AbeCiphertext, AttributeVector, KeyPart, SlotPublic, SystemParams};
use crate::algebra::{
    g2_generator, vector_pairing, G1Point, G2Point, GtPoint, Matrix, Scalar,
};
use crate::ledger::{AuthProofs, AuthReveal, Ledger, Rejection, SlotProofs, SlotSkPairs, TxContext};
use crate::pok::{G2SPair, LinearPoK, SPair};
use ark_ff::{Field, UniformRand};
use ark_std::Zero;
use rand::{CryptoRng, RngCore};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AttackError {
    #[error("attack requires at least one honest slot key")]
    NoHonestKeys,
    #[error("shape mismatch in adversarial computation")]
    ShapeMismatch,
}

/// A forged slot public key whose first component is the entrywise inverse
/// of the product of all honest non-trust slot keys. The adversary knows its
/// own `τ` and `σ`, but no discrete log behind the forged component.
#[derive(Clone, Debug)]
pub struct RogueSlotPublic {
    pub public: SlotPublic,
    pub tau: Vec<Scalar>,
    pub sigma: Scalar,
}

/// Builds the rogue key from the honest non-trust slot publics. Only group
/// operations are used: no discrete logarithm of any honest key is needed.
pub fn rogue_key_forge<R: RngCore + CryptoRng>(
    params: &SystemParams,
    honest_non_trust: &[SlotPublic],
    rng: &mut R,
) -> Result<RogueSlotPublic, AttackError> {
    let first = honest_non_trust.first().ok_or(AttackError::NoHonestKeys)?;
    let (rows, cols) = first.xa_pub.dims();
    let mut sum = Matrix::<G1Point>::identities(rows, cols);
    for pk in honest_non_trust {
        if pk.xa_pub.dims() != (rows, cols) {
            return Err(AttackError::ShapeMismatch);
        }
        sum = sum
            .add_entrywise(&pk.xa_pub)
            .map_err(|_| AttackError::ShapeMismatch)?;
    }
    let forged_xa = sum.map(|p| -*p);
    // fresh known secrets for the components the attack actually uses
    let tau: Vec<Scalar> = (0..params.k + 1).map(|_| Scalar::rand(rng)).collect();
    let sigma = loop {
        let s = Scalar::rand(rng);
        if !s.is_zero() {
            break s;
        }
    };
    let tau_img = crate::abe::tau_image(params, &tau).map_err(|_| AttackError::ShapeMismatch)?;
    let taua_pub: Vec<GtPoint> = (0..params.k)
        .map(|j| crate::algebra::pairing(tau_img.get(0, j), &g2_generator()))
        .collect();
    Ok(RogueSlotPublic {
        public: SlotPublic {
            xa_pub: forged_xa,
            taua_pub,
            y: g2_generator() * sigma,
        },
        tau,
        sigma,
    })
}

/// The colluding user's decryption: standard recovery under the trust-only
/// attribute vector, then cancellation of the residual policy term using the
/// product of all non-trust ciphertext components.
///
/// With the rogue key registered, `Σ XᵀA` over non-trust slots vanishes, so
/// the product equals the policy residual with opposite sign under either
/// policy encoding, and the payload comes back exactly.
pub fn rogue_key_decrypt(
    ct: &AbeCiphertext,
    colluder_parts: &[KeyPart],
    v_trust_only: &AttributeVector,
    h_pub: &[G2Point],
) -> Result<GtPoint, AttackError> {
    let slots = ct.cts.len();
    let dim = ct.ct0.len();
    if colluder_parts.len() != slots || v_trust_only.len() != slots || h_pub.len() != dim {
        return Err(AttackError::ShapeMismatch);
    }
    // standard decryption residual under v' = (0, ..., 0, 1)
    let mut key_sum = vec![G2Point::zero(); dim];
    for part in colluder_parts {
        for (acc, component) in key_sum.iter_mut().zip(&part.k) {
            *acc += component;
        }
    }
    let trust_ct = &ct.cts[slots - 1].0;
    let blind = vector_pairing(&ct.ct0, &key_sum).map_err(|_| AttackError::ShapeMismatch)?
        + vector_pairing(trust_ct, h_pub).map_err(|_| AttackError::ShapeMismatch)?;
    let residual_payload = ct.ct_prime - blind;
    // attacking component ω = ∏ non-trust ct_i
    let mut omega = vec![G1Point::zero(); dim];
    for slot_ct in &ct.cts[..slots - 1] {
        if slot_ct.0.len() != dim {
            return Err(AttackError::ShapeMismatch);
        }
        for (acc, component) in omega.iter_mut().zip(&slot_ct.0) {
            *acc += component;
        }
    }
    let correction = vector_pairing(&omega, h_pub).map_err(|_| AttackError::ShapeMismatch)?;
    Ok(residual_payload - correction)
}

/// The rogue authority's registration attempt: honest proofs for the
/// components it knows, and a proof for the forged key component produced
/// without the witness (random response). The default pipeline rejects it.
pub fn rogue_registration_attempt<R: RngCore + CryptoRng>(
    ledger: &mut Ledger,
    ctx: TxContext,
    params: &SystemParams,
    rogue: &RogueSlotPublic,
    z: Scalar,
    alpha_z: Scalar,
    rng: &mut R,
) -> Result<(), Rejection> {
    let k = params.k;
    let tau_col = Matrix::from_entries(k + 1, 1, rogue.tau.clone()).expect("tau length");
    let tau_power =
        crate::pok::apply_transpose_map(&params.a_pub, &tau_col).expect("consistent dims");
    let reveal = AuthReveal {
        sk: vec![SlotSkPairs {
            x_pair: SPair {
                base: params.a_pub.clone(),
                power: rogue.public.xa_pub.clone(),
            },
            tau_pair: SPair {
                base: params.a_pub.clone(),
                power: tau_power.clone(),
            },
            sigma_pair: G2SPair::scalar(g2_generator(), rogue.sigma).expect("nonzero sigma"),
        }],
        vc: crate::ledger::AuthVcElements {
            z: crate::pok::DualSPair::generate_scalar(z).expect("nonzero"),
            alpha_z: crate::pok::DualSPair::generate_scalar(alpha_z).expect("nonzero"),
            alpha_z_z: crate::pok::DualSPair::generate_scalar(alpha_z * z).expect("nonzero"),
        },
    };
    let (_, digest) = reveal.digest();
    ledger.sc_auth_commit(ctx, digest)?;
    ledger.sc_auth_reveal(ctx, reveal.clone())?;

    let bytes = reveal.element_bytes();
    let digests: Vec<Scalar> = bytes.iter().map(|b| crate::pok::element_digest(b)).collect();
    let ctx_for = |i: usize| crate::pok::pok_context(&digest, &digests[i]);
    // no witness exists for the forged component; the best available move is
    // a random-response proof
    let fake_x = LinearPoK {
        big_r: crate::pok::apply_transpose_map(
            &params.a_pub,
            &crate::algebra::ScalarMatrix::rand(k + 1, k + 1, rng),
        )
        .expect("consistent dims"),
        u: crate::algebra::ScalarMatrix::rand(k + 1, k + 1, rng),
    };
    let tau_proof = crate::pok::nizk_prove_linear(
        &SPair {
            base: params.a_pub.clone(),
            power: tau_power,
        },
        &tau_col,
        &ctx_for(1),
        rng,
    )
    .expect("honest tau proof");
    let sigma_proof = crate::pok::nizk_prove(
        &reveal.sk[0].sigma_pair,
        &rogue.sigma,
        &ctx_for(2),
        rng,
    )
    .expect("honest sigma proof");
    let proofs = AuthProofs {
        sk: vec![SlotProofs {
            x: fake_x,
            tau: tau_proof,
            sigma: sigma_proof,
        }],
        z: crate::pok::nizk_prove(&reveal.vc.z.g1, &z, &ctx_for(3), rng).expect("honest z"),
        alpha_z: crate::pok::nizk_prove(&reveal.vc.alpha_z.g1, &alpha_z, &ctx_for(4), rng)
            .expect("honest alpha_z"),
        alpha_z_z: crate::pok::nizk_prove(
            &reveal.vc.alpha_z_z.g1,
            &(alpha_z * z),
            &ctx_for(5),
            rng,
        )
        .expect("honest alpha_z·z"),
    };
    ledger.sc_auth_prove(ctx, proofs)
}

/// The exposed structured-matrix diagonal, the witness of the inference
/// attack.
#[derive(Clone, Debug)]
pub struct InferenceWitness {
    pub diagonal: Vec<Scalar>,
}

/// Recovers `g1^{s}` from `ct_0 = g1^{As}` using the diagonal witness:
/// component `i` of `ct_0` is `g1^{a_i s_i}`, so raising it to `a_i^{-1}`
/// strips the parameter.
pub fn infer_secret_vector(
    ct0: &[G1Point],
    witness: &InferenceWitness,
) -> Result<Vec<G1Point>, AttackError> {
    let k = witness.diagonal.len();
    if ct0.len() != k + 1 {
        return Err(AttackError::ShapeMismatch);
    }
    witness
        .diagonal
        .iter()
        .zip(ct0)
        .map(|(a, c)| {
            a.inverse()
                .map(|inv| *c * inv)
                .ok_or(AttackError::ShapeMismatch)
        })
        .collect()
}

/// Verdict record printed by the attack demos.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct AttackVerdict {
    pub attack: String,
    pub configuration: String,
    pub success: bool,
    pub elapsed_ms: u128,
}

/// Outcome of one rogue-key demonstration run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RogueKeyReport {
    /// Whether the forged registration made it through the prove stage.
    pub registration_accepted: bool,
    /// Whether the colluder recovered the payload (only meaningful when the
    /// registration was accepted).
    pub payload_recovered: bool,
}

/// Runs the full rogue-key scenario against a fresh simulated ledger: an
/// honest four-authority system where the last attribute authority registers
/// the forged aggregate key, waits for everyone else, and then colludes with
/// an attribute-less user.
///
/// With proof checks disabled the forged registration lands and the payload
/// comes back exactly; on the default configuration the registration is
/// rejected at the prove stage.
pub fn run_rogue_key_demo<R: RngCore + CryptoRng>(
    insecure_no_pok: bool,
    rng: &mut R,
) -> Result<RogueKeyReport, crate::ceremony::CeremonyError> {
    use crate::abe::{encode_policy, encrypt, AttributeVector, PolicyMode};
    use crate::algebra::gt_generator;
    use crate::ceremony::{
        assemble_authority_outputs, run_trusted_setup, AuthContribution, AuthoritySpec,
        SetupBehavior, SetupContribution, SetupParticipant,
    };
    use crate::ledger::{Address, LedgerConfig};
    use std::collections::BTreeSet;

    let k = 2;
    let slots = 6;
    let roster = [
        AuthoritySpec {
            address: Address::from_label("demo-aa-1"),
            name: "demo-aa-1".into(),
            attributes: vec!["alpha".into(), "beta".into()],
            is_trust: false,
        },
        AuthoritySpec {
            address: Address::from_label("demo-aa-2"),
            name: "demo-aa-2".into(),
            attributes: vec!["gamma".into(), "delta".into()],
            is_trust: false,
        },
        AuthoritySpec {
            address: Address::from_label("demo-rogue"),
            name: "demo-rogue".into(),
            attributes: vec!["epsilon".into()],
            is_trust: false,
        },
        AuthoritySpec {
            address: Address::from_label("demo-trust"),
            name: "demo-trust".into(),
            attributes: vec![],
            is_trust: true,
        },
    ];
    let mut ledger = Ledger::new(LedgerConfig {
        aa_list: roster.iter().map(|r| r.address).collect(),
        sys_windows: (100, 200, 300),
        auth_windows: (400, 500, 600),
        insecure_no_pok,
    });
    let participants: Vec<SetupParticipant> = roster
        .iter()
        .map(|spec| {
            Ok(SetupParticipant {
                address: spec.address,
                contribution: SetupContribution::generate(k, rng)?,
                behavior: SetupBehavior::Honest,
            })
        })
        .collect::<Result<_, crate::ceremony::CeremonyError>>()?;
    let setup = run_trusted_setup(&mut ledger, &participants, slots, true, rng)?;
    let params = setup.params;

    // honest authorities publish first; the rogue holds back
    ledger.deploy_auth().map_err(demo_reject)?;
    ledger.advance_clock(400);
    let mut honest_contribs: Vec<(usize, AuthContribution)> = Vec::new();
    for (i, spec) in roster.iter().enumerate() {
        if i == 2 {
            continue;
        }
        let owned = if spec.is_trust { 1 } else { spec.attributes.len() };
        let contribution = AuthContribution::generate(&params, owned, rng)?;
        let ctx = ledger.context(spec.address, 0);
        ledger.sc_auth_commit(ctx, contribution.digest).map_err(demo_reject)?;
        ledger
            .sc_auth_reveal(ctx, contribution.reveal.clone())
            .map_err(demo_reject)?;
        honest_contribs.push((i, contribution));
    }
    // the rogue now sees every honest reveal: forge against the four honest
    // attribute slots and attempt registration
    let honest_publics: Vec<SlotPublic> = honest_contribs
        .iter()
        .filter(|(i, _)| *i != 3)
        .flat_map(|(_, c)| c.slot_publics())
        .collect();
    let rogue = rogue_key_forge(&params, &honest_publics, rng)
        .map_err(|_| crate::ceremony::CeremonyError::RosterInvalid("forgery failed"))?;
    let rogue_z = loop {
        let z = Scalar::rand(rng);
        if !z.is_zero() {
            break z;
        }
    };
    let rogue_alpha_z = loop {
        let z = Scalar::rand(rng);
        if !z.is_zero() {
            break z;
        }
    };
    let rogue_ctx = ledger.context(roster[2].address, 0);
    let registration =
        rogue_registration_attempt(&mut ledger, rogue_ctx, &params, &rogue, rogue_z, rogue_alpha_z, rng);
    let registration_accepted = registration.is_ok();

    if !registration_accepted {
        return Ok(RogueKeyReport {
            registration_accepted,
            payload_recovered: false,
        });
    }

    // complete the pipeline: honest proves, then cross terms from everyone
    ledger.advance_clock(500);
    for (i, contribution) in &honest_contribs {
        let ctx = ledger.context(roster[*i].address, 0);
        ledger
            .sc_auth_prove(ctx, contribution.proofs(rng)?)
            .map_err(demo_reject)?;
    }
    ledger.advance_clock(600);
    let all_reveals: std::collections::BTreeMap<Address, crate::ledger::AuthReveal> = ledger
        .auth
        .verified
        .iter()
        .map(|(a, r)| (*a, r.clone()))
        .collect();
    for (i, spec) in roster.iter().enumerate() {
        let partners: std::collections::BTreeMap<Address, crate::ledger::AuthReveal> = all_reveals
            .iter()
            .filter(|(a, _)| **a != spec.address)
            .map(|(a, r)| (*a, r.clone()))
            .collect();
        let (z, alpha_z) = if i == 2 {
            (rogue_z, rogue_alpha_z)
        } else {
            let c = &honest_contribs.iter().find(|(j, _)| j == &i).unwrap().1;
            (c.z, c.alpha_z)
        };
        let shim = ShimContribution { z, alpha_z };
        let bundle = shim.cross_terms(&partners);
        let size = if spec.is_trust {
            1
        } else {
            spec.attributes.len() as u32
        };
        let ctx = ledger.context(spec.address, 0);
        ledger
            .sc_auth_generate(ctx, bundle, size)
            .map_err(demo_reject)?;
    }
    let (_vc_params, slot_publics, mapping) = assemble_authority_outputs(&ledger, &roster)?;

    // encrypt a payload under a two-attribute policy
    let required: BTreeSet<usize> = [0, 1].into_iter().collect();
    let policy = encode_policy(&required, slots, PolicyMode::Randomized, rng)?;
    let payload = gt_generator() * Scalar::rand(rng);
    let ct = encrypt(&params, &slot_publics, &policy, &payload, rng)?;

    // the colluding user registers with no attributes at all
    ledger.advance_clock(700);
    let colluder = Address::from_label("demo-colluder");
    let reg_ctx = ledger.context(colluder, 1_000_001);
    let gid = ledger.sc_reg_register(reg_ctx).map_err(demo_reject)?;
    let commitment = crate::vc::VcCommitment {
        c: crate::algebra::g1_generator() * Scalar::rand(rng),
    };
    let h_pub = crate::abe::derive_h(gid.as_bytes(), &commitment, k);
    let all_y: Vec<G2Point> = slot_publics.iter().map(|p| p.y).collect();
    let mut parts = Vec::with_capacity(slots);
    for (i, spec) in roster.iter().enumerate() {
        let row_slots: std::ops::Range<usize> = mapping
            .rows
            .iter()
            .find(|r| r.address == spec.address)
            .map(|r| r.slot_start..r.slot_end)
            .expect("roster rows present");
        for slot in row_slots {
            if i == 2 {
                // the rogue issues its own zero-attribute part from its known
                // secrets
                let mu = crate::abe::masking(
                    slot,
                    &rogue.sigma,
                    &all_y,
                    gid.as_bytes(),
                    &commitment,
                    k,
                )?;
                let g2 = g2_generator();
                let part = KeyPart {
                    k: rogue
                        .tau
                        .iter()
                        .zip(&mu)
                        .map(|(t, m)| g2 * *t + g2 * *m)
                        .collect(),
                    slot,
                };
                parts.push(part);
            } else {
                let c = &honest_contribs.iter().find(|(j, _)| j == &i).unwrap().1;
                let offset = slot
                    - mapping
                        .rows
                        .iter()
                        .find(|r| r.address == spec.address)
                        .unwrap()
                        .slot_start;
                let secret = &c.slot_secrets[offset];
                let role = if spec.is_trust {
                    crate::abe::SlotRole::Trust
                } else {
                    crate::abe::SlotRole::Attribute
                };
                let mu = crate::abe::masking(
                    slot,
                    &secret.sigma,
                    &all_y,
                    gid.as_bytes(),
                    &commitment,
                    k,
                )?;
                parts.push(crate::abe::issue_key_part(
                    secret,
                    slot,
                    role,
                    spec.is_trust,
                    &h_pub,
                    &mu,
                )?);
            }
        }
    }
    let v = AttributeVector::new(&vec![false; slots - 1]);
    let recovered = rogue_key_decrypt(&ct, &parts, &v, &h_pub)
        .map_err(|_| crate::ceremony::CeremonyError::RosterInvalid("attack computation failed"))?;
    Ok(RogueKeyReport {
        registration_accepted,
        payload_recovered: recovered == payload,
    })
}

fn demo_reject(reason: Rejection) -> crate::ceremony::CeremonyError {
    crate::ceremony::CeremonyError::Rejected {
        participant: crate::ledger::Address([0u8; 20]),
        stage: "rogue-key demo",
        reason,
    }
}

/// Minimal stand-in with just the scalars needed to publish cross terms.
struct ShimContribution {
    z: Scalar,
    alpha_z: Scalar,
}

impl ShimContribution {
    fn cross_terms(
        &self,
        partners: &std::collections::BTreeMap<crate::ledger::Address, crate::ledger::AuthReveal>,
    ) -> crate::ledger::CrossTermBundle {
        use crate::ledger::Pt;
        let mut o = std::collections::BTreeMap::new();
        let mut theta = std::collections::BTreeMap::new();
        let mut o_prime = std::collections::BTreeMap::new();
        for (addr, reveal) in partners {
            o.insert(*addr, Pt(*reveal.vc.z.g1.power.get(0, 0) * self.z));
            theta.insert(
                *addr,
                Pt(*reveal.vc.alpha_z.g1.power.get(0, 0) * self.alpha_z),
            );
            o_prime.insert(
                *addr,
                Pt(*reveal.vc.alpha_z_z.g1.power.get(0, 0) * (self.alpha_z * self.z)),
            );
        }
        crate::ledger::CrossTermBundle { o, theta, o_prime }
    }
}

/// Outcome of the inference demonstration: how many of `trials` ephemeral
/// vectors the witness recovered exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InferenceReport {
    pub trials: usize,
    pub matches: usize,
}

/// Runs the inference scenario: parameters produced by `participants`
/// contributors, an adversary holding all but the last contribution (all of
/// them when there is a single contributor, i.e. a central setup).
pub fn run_inference_demo<R: RngCore + CryptoRng>(
    participants: usize,
    trials: usize,
    rng: &mut R,
) -> Result<InferenceReport, crate::ceremony::CeremonyError> {
    use crate::algebra::{g1_generator, matrix_exp_base, multi_exp_matvec, sample_lin_matrix};

    let k = 2;
    let contribs: Vec<crate::algebra::ScalarMatrix> = (0..participants.max(1))
        .map(|_| Ok(sample_lin_matrix(k, rng)?.0))
        .collect::<Result<_, crate::ceremony::CeremonyError>>()?;
    let composite = contribs
        .iter()
        .skip(1)
        .fold(contribs[0].clone(), |acc, c| {
            acc.hadamard(c).expect("same dims")
        });
    let a_pub = matrix_exp_base(g1_generator(), &composite);
    // the witness covers every contribution except the last withheld one;
    // a single contributor means the generator itself is the adversary
    let witness_span = if contribs.len() == 1 {
        contribs.len()
    } else {
        contribs.len() - 1
    };
    let diagonal: Vec<Scalar> = (0..k)
        .map(|i| {
            contribs[..witness_span]
                .iter()
                .map(|c| *c.get(i, i))
                .product()
        })
        .collect();
    let witness = InferenceWitness { diagonal };
    let mut matches = 0;
    for _ in 0..trials {
        let s: Vec<Scalar> = (0..k).map(|_| Scalar::rand(rng)).collect();
        let ct0 = multi_exp_matvec(&a_pub, &s).expect("dims fixed");
        let guess = infer_secret_vector(&ct0, &witness)
            .map_err(|_| crate::ceremony::CeremonyError::RosterInvalid("bad witness"))?;
        let truth: Vec<G1Point> = s.iter().map(|e| g1_generator() * *e).collect();
        if guess == truth {
            matches += 1;
        }
    }
    Ok(InferenceReport { trials, matches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abe::{
        derive_h, encode_policy, encrypt_with_randomness, issue_key_part, masking, slot_keygen,
        PolicyMode, SlotRole, SlotSecret,
    };
    use crate::algebra::{
        g1_generator, gt_generator, matrix_exp_base, multi_exp_matvec, sample_lin_matrix,
        ScalarMatrix,
    };
    use crate::vc::VcCommitment;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::BTreeSet;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(0xa77ac)
    }

    struct RoguedSystem {
        params: SystemParams,
        publics: Vec<SlotPublic>,
        honest_secrets: Vec<SlotSecret>,
        rogue: RogueSlotPublic,
        rogue_slot: usize,
    }

    /// Builds a 6-slot system where the last non-trust slot is the rogue.
    fn rogued_system(rng: &mut ChaCha20Rng) -> RoguedSystem {
        let k = 2;
        let slots = 6;
        let (a, _) = sample_lin_matrix(k, rng).unwrap();
        let u = ScalarMatrix::rand(k + 1, k + 1, rng);
        let ua = u.transpose().matmul(&a).unwrap();
        let params = SystemParams::from_exponents(k, slots, &a, &ua).unwrap();
        let mut publics = Vec::new();
        let mut honest_secrets = Vec::new();
        for _ in 0..slots - 2 {
            let (pk, sk) = slot_keygen(&params, rng).unwrap();
            publics.push(pk);
            honest_secrets.push(sk);
        }
        let rogue = rogue_key_forge(&params, &publics, rng).unwrap();
        let rogue_slot = slots - 2;
        publics.push(rogue.public.clone());
        let (trust_pk, trust_sk) = slot_keygen(&params, rng).unwrap();
        publics.push(trust_pk);
        honest_secrets.push(trust_sk);
        RoguedSystem {
            params,
            publics,
            honest_secrets,
            rogue,
            rogue_slot,
        }
    }

    #[test]
    fn forged_key_cancels_honest_product() {
        let mut rng = rng();
        let sys = rogued_system(&mut rng);
        // product over all non-trust slots including the rogue is identity
        let dims = sys.publics[0].xa_pub.dims();
        let mut sum = Matrix::<G1Point>::identities(dims.0, dims.1);
        for pk in &sys.publics[..sys.publics.len() - 1] {
            sum = sum.add_entrywise(&pk.xa_pub).unwrap();
        }
        assert!(sum.entries().iter().all(|p| p.is_zero()));
        // single honest slot: forgery is its entrywise inverse
        let single = rogue_key_forge(&sys.params, &sys.publics[..1], &mut rng).unwrap();
        for (f, h) in single
            .public
            .xa_pub
            .entries()
            .iter()
            .zip(sys.publics[0].xa_pub.entries())
        {
            assert_eq!(*f, -*h);
        }
    }

    fn run_rogue_decryption(
        sys: &RoguedSystem,
        mode: PolicyMode,
        rng: &mut ChaCha20Rng,
    ) -> (GtPoint, GtPoint) {
        let slots = sys.publics.len();
        let required: BTreeSet<usize> = [0, 1].into_iter().collect();
        let policy = encode_policy(&required, slots, mode, rng).unwrap();
        let payload = gt_generator() * Scalar::rand(rng);
        let s = vec![Scalar::rand(rng), Scalar::rand(rng)];
        let ct = encrypt_with_randomness(&sys.params, &sys.publics, &policy, &payload, &s).unwrap();

        // colluding user: all-zero attributes, trust slot only
        let v = AttributeVector::new(&vec![false; slots - 1]);
        let c = VcCommitment {
            c: g1_generator() * Scalar::rand(rng),
        };
        let gid = b"colluder";
        let h_pub = derive_h(gid, &c, sys.params.k);
        let all_y: Vec<G2Point> = sys.publics.iter().map(|p| p.y).collect();
        let mut parts = Vec::with_capacity(slots);
        for slot in 0..slots {
            let (sigma, secret) = if slot == sys.rogue_slot {
                (sys.rogue.sigma, None)
            } else if slot == slots - 1 {
                (sys.honest_secrets.last().unwrap().sigma, Some(sys.honest_secrets.last().unwrap()))
            } else {
                (sys.honest_secrets[slot].sigma, Some(&sys.honest_secrets[slot]))
            };
            let mu = masking(slot, &sigma, &all_y, gid, &c, sys.params.k).unwrap();
            let part = match secret {
                Some(secret) => {
                    let role = if slot == slots - 1 {
                        SlotRole::Trust
                    } else {
                        SlotRole::Attribute
                    };
                    issue_key_part(secret, slot, role, slot == slots - 1, &h_pub, &mu).unwrap()
                }
                None => {
                    // rogue issues its own part for v = 0 with known τ and μ
                    let g2 = g2_generator();
                    let k: Vec<G2Point> = sys
                        .rogue
                        .tau
                        .iter()
                        .zip(&mu)
                        .map(|(t, m)| g2 * *t + g2 * *m)
                        .collect();
                    KeyPart { k, slot }
                }
            };
            parts.push(part);
        }
        let recovered = rogue_key_decrypt(&ct, &parts, &v, &h_pub).unwrap();
        (recovered, payload)
    }

    #[test]
    fn rogue_decryption_recovers_payload_under_both_encodings() {
        let mut rng = rng();
        let sys = rogued_system(&mut rng);
        for mode in [PolicyMode::NaiveInsecureDemo, PolicyMode::Randomized] {
            let (recovered, payload) = run_rogue_decryption(&sys, mode, &mut rng);
            assert_eq!(recovered, payload, "mode {mode:?}");
        }
    }

    #[test]
    fn rogue_decryption_fails_against_honest_keys() {
        let mut rng = rng();
        // same shape, but the "rogue" slot holds an honest fresh key
        let k = 2;
        let slots = 6;
        let (a, _) = sample_lin_matrix(k, &mut rng).unwrap();
        let u = ScalarMatrix::rand(k + 1, k + 1, &mut rng);
        let ua = u.transpose().matmul(&a).unwrap();
        let params = SystemParams::from_exponents(k, slots, &a, &ua).unwrap();
        let mut publics = Vec::new();
        let mut secrets = Vec::new();
        for _ in 0..slots {
            let (pk, sk) = slot_keygen(&params, &mut rng).unwrap();
            publics.push(pk);
            secrets.push(sk);
        }
        let required: BTreeSet<usize> = [0, 1].into_iter().collect();
        let policy = encode_policy(&required, slots, PolicyMode::Randomized, &mut rng).unwrap();
        let payload = gt_generator() * Scalar::rand(&mut rng);
        let s = vec![Scalar::rand(&mut rng), Scalar::rand(&mut rng)];
        let ct = encrypt_with_randomness(&params, &publics, &policy, &payload, &s).unwrap();
        let v = AttributeVector::new(&vec![false; slots - 1]);
        let c = VcCommitment {
            c: g1_generator() * Scalar::rand(&mut rng),
        };
        let gid = b"control";
        let h_pub = derive_h(gid, &c, k);
        let all_y: Vec<G2Point> = publics.iter().map(|p| p.y).collect();
        let parts: Vec<KeyPart> = (0..slots)
            .map(|slot| {
                let mu = masking(slot, &secrets[slot].sigma, &all_y, gid, &c, k).unwrap();
                let role = if slot == slots - 1 {
                    SlotRole::Trust
                } else {
                    SlotRole::Attribute
                };
                issue_key_part(&secrets[slot], slot, role, slot == slots - 1, &h_pub, &mu).unwrap()
            })
            .collect();
        let recovered = rogue_key_decrypt(&ct, &parts, &v, &h_pub).unwrap();
        assert_ne!(recovered, payload);
    }

    #[test]
    fn infer_recovers_ephemeral_vector_with_full_witness() {
        let mut rng = rng();
        let k = 2;
        let (a, _) = sample_lin_matrix(k, &mut rng).unwrap();
        let diagonal: Vec<Scalar> = (0..k).map(|i| *a.get(i, i)).collect();
        let a_pub = matrix_exp_base(g1_generator(), &a);
        let s = vec![Scalar::rand(&mut rng), Scalar::rand(&mut rng)];
        let ct0 = multi_exp_matvec(&a_pub, &s).unwrap();
        let witness = InferenceWitness { diagonal };
        let recovered = infer_secret_vector(&ct0, &witness).unwrap();
        for (g, e) in recovered.iter().zip(&s) {
            assert_eq!(*g, g1_generator() * *e);
        }
        // last coordinate carries the exponent sum
        let sum: Scalar = s.iter().sum();
        assert_eq!(ct0[k], g1_generator() * sum);
    }

    #[test]
    fn withheld_contribution_blocks_inference() {
        let mut rng = rng();
        let k = 2;
        // composite diagonal from three contributions
        let contribs: Vec<ScalarMatrix> = (0..3)
            .map(|_| sample_lin_matrix(k, &mut rng).unwrap().0)
            .collect();
        let composite = contribs
            .iter()
            .skip(1)
            .fold(contribs[0].clone(), |acc, c| acc.hadamard(c).unwrap());
        let a_pub = matrix_exp_base(g1_generator(), &composite);
        let mut misses = 0;
        for _ in 0..100 {
            let s = vec![Scalar::rand(&mut rng), Scalar::rand(&mut rng)];
            let ct0 = multi_exp_matvec(&a_pub, &s).unwrap();
            // adversary holds contributions 0 and 1, not 2
            let known: Vec<Scalar> = (0..k)
                .map(|i| *contribs[0].get(i, i) * contribs[1].get(i, i))
                .collect();
            let guess = infer_secret_vector(&ct0, &InferenceWitness { diagonal: known }).unwrap();
            let truth: Vec<G1Point> = s.iter().map(|e| g1_generator() * *e).collect();
            if guess != truth {
                misses += 1;
            }
        }
        assert_eq!(misses, 100);
    }
}
