//! Participant-side logic and orchestration for the trusted setup and
//! authority setup: secret sampling, commit/reveal/prove transcript
//! production, chain contributions, and assembly of the system parameters,
//! vector-commitment parameters, slot public keys and the
//! address→authority→attribute mapping table.
//!
//! Ceremony transcripts are persisted as self-describing binary sections so
//! parameter assembly can be re-verified offline from the file alone.

use crate::abe::{SlotPublic, SlotSecret, SystemParams};
use crate::algebra::{
    encode, g1_generator, g2_generator, power_multi, AlgebraError, G1Point, Matrix, Scalar,
    ScalarMatrix,
};
use crate::ledger::{
    Address, AuthProofs, AuthReveal, AuthVcElements, ChainTriple, CrossTermBundle, Ledger,
    LedgerConfig, Pt, Rejection, SetupElements, SetupProofs, SlotProofs, SlotSkPairs, TxContext,
};
use crate::pok::{
    apply_transpose_map, nizk_prove, nizk_prove_entrywise, nizk_prove_linear, pok_context,
    CommitDigest, DualSPair, G2SPair, PokError, SPair,
};
use crate::vc::{VcError, VcParams};
use ark_ff::UniformRand;
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize, Compress, SerializationError, Valid, Validate};
use ark_std::Zero;
use blake2::{Blake2s256, Digest};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CeremonyError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Pok(#[from] PokError),
    #[error(transparent)]
    Vc(#[from] VcError),
    #[error("abe error: {0}")]
    Abe(#[from] crate::abe::AbeError),
    #[error("{stage} rejected for {participant}: {reason}")]
    Rejected {
        participant: Address,
        stage: &'static str,
        reason: Rejection,
    },
    #[error("no valid chain head; the ceremony produced no parameters")]
    NoValidChain,
    #[error("invalid roster: {0}")]
    RosterInvalid(&'static str),
    #[error("ceremony windows conflict with the ledger clock")]
    WindowsPassed,
    #[error("attribute {0} is not in the mapping table")]
    UnknownAttribute(String),
    #[error("malformed transcript: {0}")]
    TranscriptMalformed(&'static str),
    #[error("transcript verification failed: {0}")]
    TranscriptMismatch(String),
}

// ---- trusted-setup contributions -------------------------------------------

/// The secret elements a participant samples for the trusted setup.
#[derive(Clone, Debug)]
pub struct SetupSecrets {
    pub a: ScalarMatrix,
    pub u: ScalarMatrix,
    pub alpha_a: Scalar,
    pub alpha_u: Scalar,
}

/// One participant's full trusted-setup contribution: secrets, their s-pair
/// duals in both groups, and the overall commitment digest.
#[derive(Clone, Debug)]
pub struct SetupContribution {
    pub secrets: SetupSecrets,
    pub elements: SetupElements,
    pub digest: CommitDigest,
}

fn rand_nonzero<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    loop {
        let s = Scalar::rand(rng);
        if !s.is_zero() {
            return s;
        }
    }
}

impl SetupContribution {
    /// Samples a fresh contribution: a structured `A`, a dense nonzero
    /// second-round matrix of the same shape, and their blinding scalars.
    pub fn generate<R: RngCore + CryptoRng>(k: usize, rng: &mut R) -> Result<Self, CeremonyError> {
        let (a, _) = crate::algebra::sample_lin_matrix(k, rng)?;
        let u = ScalarMatrix::rand_nonzero(k + 1, k, rng);
        let alpha_a = rand_nonzero(rng);
        let alpha_u = rand_nonzero(rng);
        let secrets = SetupSecrets {
            a,
            u,
            alpha_a,
            alpha_u,
        };
        let elements = SetupElements {
            a: DualSPair::generate(&secrets.a)?,
            u: DualSPair::generate(&secrets.u)?,
            alpha_a: DualSPair::generate_scalar(secrets.alpha_a)?,
            alpha_u: DualSPair::generate_scalar(secrets.alpha_u)?,
            alpha_a_a: DualSPair::generate(&secrets.a.scale(secrets.alpha_a))?,
            alpha_u_u: DualSPair::generate(&secrets.u.scale(secrets.alpha_u))?,
        };
        let (_, digest) = elements.digest();
        Ok(SetupContribution {
            secrets,
            elements,
            digest,
        })
    }

    pub fn k(&self) -> usize {
        self.secrets.a.cols()
    }

    /// Proofs of knowledge for all six elements, bound to `h || h_s`.
    pub fn proofs<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Result<SetupProofs, CeremonyError> {
        let bytes = self.elements.element_bytes();
        let digests: Vec<Scalar> = bytes.iter().map(|b| crate::pok::element_digest(b)).collect();
        let ctx = |i: usize| pok_context(&self.digest, &digests[i]);
        let alpha_a_mat = Matrix::filled(1, 1, self.secrets.alpha_a);
        let alpha_u_mat = Matrix::filled(1, 1, self.secrets.alpha_u);
        Ok(SetupProofs {
            a: nizk_prove_entrywise(&self.elements.a.g1, &self.secrets.a, &ctx(0), rng)?,
            u: nizk_prove_entrywise(&self.elements.u.g1, &self.secrets.u, &ctx(1), rng)?,
            alpha_a: nizk_prove_entrywise(&self.elements.alpha_a.g1, &alpha_a_mat, &ctx(2), rng)?,
            alpha_u: nizk_prove_entrywise(&self.elements.alpha_u.g1, &alpha_u_mat, &ctx(3), rng)?,
            alpha_a_a: nizk_prove_entrywise(
                &self.elements.alpha_a_a.g1,
                &self.secrets.a.scale(self.secrets.alpha_a),
                &ctx(4),
                rng,
            )?,
            alpha_u_u: nizk_prove_entrywise(
                &self.elements.alpha_u_u.g1,
                &self.secrets.u.scale(self.secrets.alpha_u),
                &ctx(5),
                rng,
            )?,
        })
    }

    /// The participant's chain triple for one round: published verbatim by
    /// the first contributor, otherwise the entry-wise power of the previous
    /// head by this participant's secrets.
    pub fn chain_triple(
        &self,
        round: SetupRound,
        prev: Option<&ChainTriple>,
    ) -> Result<ChainTriple, CeremonyError> {
        let (matrix, alpha, pair, scaled_pair) = match round {
            SetupRound::Compute => (
                &self.secrets.a,
                self.secrets.alpha_a,
                &self.elements.a,
                &self.elements.alpha_a_a,
            ),
            SetupRound::Generate => (
                &self.secrets.u,
                self.secrets.alpha_u,
                &self.elements.u,
                &self.elements.alpha_u_u,
            ),
        };
        Ok(match prev {
            None => ChainTriple {
                head: pair.g1.power.clone(),
                theta: g1_generator() * alpha,
                head_prime: scaled_pair.g1.power.clone(),
            },
            Some(prev) => ChainTriple {
                head: power_multi(&prev.head, matrix)?,
                theta: prev.theta * alpha,
                head_prime: power_multi(&prev.head_prime, &matrix.scale(alpha))?,
            },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetupRound {
    Compute,
    Generate,
}

// ---- trusted-setup driver ---------------------------------------------------

/// How a participant behaves during the chain rounds; the dishonest variants
/// exist for the robustness and attack suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetupBehavior {
    Honest,
    /// Submits a chain triple inconsistent with its verified s-pairs.
    TamperCompute,
    /// Goes silent after proving: contributes to no chain.
    AbsentFromChain,
}

pub struct SetupParticipant {
    pub address: Address,
    pub contribution: SetupContribution,
    pub behavior: SetupBehavior,
}

impl SetupParticipant {
    pub fn honest<R: RngCore + CryptoRng>(
        label: &str,
        k: usize,
        rng: &mut R,
    ) -> Result<Self, CeremonyError> {
        Ok(SetupParticipant {
            address: Address::from_label(label),
            contribution: SetupContribution::generate(k, rng)?,
            behavior: SetupBehavior::Honest,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageOutcome {
    pub participant: Address,
    pub stage: &'static str,
    pub accepted: bool,
    pub detail: Option<String>,
}

pub type TimedTx = (u64, TranscriptTx);

#[derive(Debug)]
pub struct SetupRunResult {
    pub params: SystemParams,
    pub outcomes: Vec<StageOutcome>,
    pub txs: Vec<TimedTx>,
}

fn push_outcome(
    outcomes: &mut Vec<StageOutcome>,
    participant: Address,
    stage: &'static str,
    result: &Result<(), Rejection>,
) {
    outcomes.push(StageOutcome {
        participant,
        stage,
        accepted: result.is_ok(),
        detail: result.as_ref().err().map(|e| e.to_string()),
    });
}

fn require_ok(
    strict: bool,
    participant: Address,
    stage: &'static str,
    result: Result<(), Rejection>,
) -> Result<(), CeremonyError> {
    match result {
        Ok(()) => Ok(()),
        Err(reason) if strict => Err(CeremonyError::Rejected {
            participant,
            stage,
            reason,
        }),
        Err(_) => Ok(()),
    }
}

/// Drives commit → reveal → prove → compute → generate through the system
/// contract and assembles the global parameters from the final chain heads.
///
/// In strict mode any rejected transaction aborts with the offending
/// participant identified; otherwise the ceremony completes with the
/// remaining contributors' chain.
pub fn run_trusted_setup<R: RngCore + CryptoRng>(
    ledger: &mut Ledger,
    participants: &[SetupParticipant],
    slots: usize,
    strict: bool,
    rng: &mut R,
) -> Result<SetupRunResult, CeremonyError> {
    if participants.is_empty() {
        return Err(CeremonyError::RosterInvalid("no participants"));
    }
    let k = participants[0].contribution.k();
    if participants.iter().any(|p| p.contribution.k() != k) {
        return Err(CeremonyError::RosterInvalid("mixed k parameters"));
    }
    let (ddl1, ddl2, ddl3) = (ledger.sys.ddl1, ledger.sys.ddl2, ledger.sys.ddl3);
    if ledger.clock() > ddl1 {
        return Err(CeremonyError::WindowsPassed);
    }
    let mut outcomes = Vec::new();
    let mut txs: Vec<TimedTx> = Vec::new();

    ledger.advance_clock(ddl1);
    for p in participants {
        let ctx = ledger.context(p.address, 0);
        let result = ledger.sc_sys_commit(ctx, p.contribution.digest);
        txs.push((
            ctx.timestamp,
            TranscriptTx::SysCommit {
                sender: p.address,
                h: p.contribution.digest,
            },
        ));
        push_outcome(&mut outcomes, p.address, "commit", &result);
        require_ok(strict, p.address, "commit", result)?;

        let result = ledger.sc_sys_reveal(ctx, p.contribution.elements.clone());
        txs.push((
            ctx.timestamp,
            TranscriptTx::SysReveal {
                sender: p.address,
                elements: p.contribution.elements.clone(),
            },
        ));
        push_outcome(&mut outcomes, p.address, "reveal", &result);
        require_ok(strict, p.address, "reveal", result)?;
    }

    ledger.advance_clock(ddl2);
    for p in participants {
        let proofs = p.contribution.proofs(rng)?;
        let ctx = ledger.context(p.address, 0);
        let result = ledger.sc_sys_prove(ctx, proofs.clone());
        txs.push((
            ctx.timestamp,
            TranscriptTx::SysProve {
                sender: p.address,
                proofs,
            },
        ));
        push_outcome(&mut outcomes, p.address, "prove", &result);
        require_ok(strict, p.address, "prove", result)?;
    }

    ledger.advance_clock(ddl3);
    for round in [SetupRound::Compute, SetupRound::Generate] {
        for p in participants {
            if p.behavior == SetupBehavior::AbsentFromChain {
                continue;
            }
            let prev = match round {
                SetupRound::Compute => ledger.sys.v_chain.clone(),
                SetupRound::Generate => ledger.sys.w_chain.clone(),
            };
            let mut triple = p.contribution.chain_triple(round, prev.as_ref())?;
            if p.behavior == SetupBehavior::TamperCompute {
                // substitute a head inconsistent with the verified s-pairs
                let fresh = ScalarMatrix::rand_nonzero(k + 1, k, rng);
                triple.head = match prev.as_ref() {
                    Some(prev) => power_multi(&prev.head, &fresh)?,
                    None => crate::algebra::matrix_exp_base(g1_generator(), &fresh),
                };
            }
            let ctx = ledger.context(p.address, 0);
            let (stage, result) = match round {
                SetupRound::Compute => (
                    "compute",
                    ledger.sc_sys_compute(ctx, triple.clone()),
                ),
                SetupRound::Generate => (
                    "generate",
                    ledger.sc_sys_generate(ctx, triple.clone()),
                ),
            };
            txs.push((
                ctx.timestamp,
                match round {
                    SetupRound::Compute => TranscriptTx::SysCompute {
                        sender: p.address,
                        triple,
                    },
                    SetupRound::Generate => TranscriptTx::SysGenerate {
                        sender: p.address,
                        triple,
                    },
                },
            ));
            push_outcome(&mut outcomes, p.address, stage, &result);
            require_ok(strict, p.address, stage, result)?;
        }
    }

    let params = params_from_chains(ledger, k, slots)?;
    Ok(SetupRunResult {
        params,
        outcomes,
        txs,
    })
}

fn params_from_chains(ledger: &Ledger, k: usize, slots: usize) -> Result<SystemParams, CeremonyError> {
    let v = ledger.sys.v_chain.as_ref().ok_or(CeremonyError::NoValidChain)?;
    let w = ledger.sys.w_chain.as_ref().ok_or(CeremonyError::NoValidChain)?;
    Ok(SystemParams::new(
        k,
        slots,
        v.head.clone(),
        w.head.clone(),
    )?)
}

// ---- authority setup --------------------------------------------------------

/// Roster entry: one authority, its attribute names in slot order, and
/// whether it is the trust authority (no attributes, owns the last slot).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthoritySpec {
    pub address: Address,
    pub name: String,
    pub attributes: Vec<String>,
    pub is_trust: bool,
}

/// An authority's full setup contribution: the vector-commitment secrets,
/// one slot secret per owned slot, and the reveal payload they map to.
#[derive(Clone, Debug)]
pub struct AuthContribution {
    pub z: Scalar,
    pub alpha_z: Scalar,
    pub slot_secrets: Vec<SlotSecret>,
    pub reveal: AuthReveal,
    pub digest: CommitDigest,
}

impl AuthContribution {
    pub fn generate<R: RngCore + CryptoRng>(
        params: &SystemParams,
        owned_slots: usize,
        rng: &mut R,
    ) -> Result<Self, CeremonyError> {
        let k = params.k;
        let z = rand_nonzero(rng);
        let alpha_z = rand_nonzero(rng);
        let mut slot_secrets = Vec::with_capacity(owned_slots);
        let mut sk_pairs = Vec::with_capacity(owned_slots);
        for _ in 0..owned_slots {
            let secret = SlotSecret {
                x: ScalarMatrix::rand(k + 1, k + 1, rng),
                tau: (0..k + 1).map(|_| Scalar::rand(rng)).collect(),
                sigma: rand_nonzero(rng),
            };
            let x_power = apply_transpose_map(&params.a_pub, &secret.x)?;
            let tau_col = Matrix::from_entries(k + 1, 1, secret.tau.clone())
                .expect("tau has k+1 entries");
            let tau_power = apply_transpose_map(&params.a_pub, &tau_col)?;
            sk_pairs.push(SlotSkPairs {
                x_pair: SPair {
                    base: params.a_pub.clone(),
                    power: x_power,
                },
                tau_pair: SPair {
                    base: params.a_pub.clone(),
                    power: tau_power,
                },
                sigma_pair: G2SPair::scalar(g2_generator(), secret.sigma)?,
            });
            slot_secrets.push(secret);
        }
        let reveal = AuthReveal {
            sk: sk_pairs,
            vc: AuthVcElements {
                z: DualSPair::generate_scalar(z)?,
                alpha_z: DualSPair::generate_scalar(alpha_z)?,
                alpha_z_z: DualSPair::generate_scalar(alpha_z * z)?,
            },
        };
        let (_, digest) = reveal.digest();
        Ok(AuthContribution {
            z,
            alpha_z,
            slot_secrets,
            reveal,
            digest,
        })
    }

    pub fn proofs<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Result<AuthProofs, CeremonyError> {
        let bytes = self.reveal.element_bytes();
        let digests: Vec<Scalar> = bytes.iter().map(|b| crate::pok::element_digest(b)).collect();
        let ctx = |i: usize| pok_context(&self.digest, &digests[i]);
        let mut sk = Vec::with_capacity(self.slot_secrets.len());
        for (i, (secret, pairs)) in self
            .slot_secrets
            .iter()
            .zip(&self.reveal.sk)
            .enumerate()
        {
            let base = 3 * i;
            let tau_col = Matrix::from_entries(secret.tau.len(), 1, secret.tau.clone())
                .expect("tau has k+1 entries");
            sk.push(SlotProofs {
                x: nizk_prove_linear(&pairs.x_pair, &secret.x, &ctx(base), rng)?,
                tau: nizk_prove_linear(&pairs.tau_pair, &tau_col, &ctx(base + 1), rng)?,
                sigma: nizk_prove(&pairs.sigma_pair, &secret.sigma, &ctx(base + 2), rng)?,
            });
        }
        let vc_base = 3 * self.slot_secrets.len();
        Ok(AuthProofs {
            sk,
            z: nizk_prove(&self.reveal.vc.z.g1, &self.z, &ctx(vc_base), rng)?,
            alpha_z: nizk_prove(&self.reveal.vc.alpha_z.g1, &self.alpha_z, &ctx(vc_base + 1), rng)?,
            alpha_z_z: nizk_prove(
                &self.reveal.vc.alpha_z_z.g1,
                &(self.alpha_z * self.z),
                &ctx(vc_base + 2),
                rng,
            )?,
        })
    }

    /// Cross terms against every partner's verified images: `o_j^{z_i}`,
    /// `θ_j^{α_{z_i}}` and `o'_j^{α_{z_i} z_i}`.
    pub fn cross_terms(&self, partners: &BTreeMap<Address, AuthReveal>) -> CrossTermBundle {
        let mut o = BTreeMap::new();
        let mut theta = BTreeMap::new();
        let mut o_prime = BTreeMap::new();
        for (addr, reveal) in partners {
            let o_j = *reveal.vc.z.g1.power.get(0, 0);
            let theta_j = *reveal.vc.alpha_z.g1.power.get(0, 0);
            let scaled_j = *reveal.vc.alpha_z_z.g1.power.get(0, 0);
            o.insert(*addr, Pt(o_j * self.z));
            theta.insert(*addr, Pt(theta_j * self.alpha_z));
            o_prime.insert(*addr, Pt(scaled_j * (self.alpha_z * self.z)));
        }
        CrossTermBundle { o, theta, o_prime }
    }

    pub fn slot_publics(&self) -> Vec<SlotPublic> {
        self.reveal
            .sk
            .iter()
            .map(|pairs| SlotPublic {
                xa_pub: pairs.x_pair.power.clone(),
                taua_pub: (0..pairs.tau_pair.power.cols())
                    .map(|j| {
                        crate::algebra::pairing(pairs.tau_pair.power.get(0, j), &g2_generator())
                    })
                    .collect(),
                y: *pairs.sigma_pair.power.get(0, 0),
            })
            .collect()
    }
}

/// One row of the address→authority→attributes mapping table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRow {
    pub address: Address,
    pub authority_index: u32,
    pub slot_start: usize,
    pub slot_end: usize,
    pub attributes: Vec<String>,
    pub is_trust: bool,
}

/// Mapping table: slot ranges partition the attribute slots `[0, l)` and the
/// trust authority owns slot `l` alone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingTable {
    pub rows: Vec<MappingRow>,
    pub attribute_count: usize,
}

impl MappingTable {
    pub fn slots(&self) -> usize {
        self.attribute_count + 1
    }

    pub fn slot_of(&self, attribute: &str) -> Option<usize> {
        for row in &self.rows {
            if let Some(pos) = row.attributes.iter().position(|a| a == attribute) {
                return Some(row.slot_start + pos);
            }
        }
        None
    }

    pub fn owner_of_slot(&self, slot: usize) -> Option<&MappingRow> {
        self.rows
            .iter()
            .find(|r| slot >= r.slot_start && slot < r.slot_end)
    }

    pub fn trust_row(&self) -> &MappingRow {
        self.rows
            .iter()
            .find(|r| r.is_trust)
            .expect("mapping tables always carry a trust row")
    }

    pub fn validate(&self) -> Result<(), CeremonyError> {
        let mut covered = vec![false; self.attribute_count];
        for row in &self.rows {
            if row.is_trust {
                if row.slot_start != self.attribute_count
                    || row.slot_end != self.attribute_count + 1
                    || !row.attributes.is_empty()
                {
                    return Err(CeremonyError::RosterInvalid("trust row malformed"));
                }
                continue;
            }
            if row.slot_end - row.slot_start != row.attributes.len() {
                return Err(CeremonyError::RosterInvalid("row width mismatch"));
            }
            for slot in row.slot_start..row.slot_end {
                if slot >= self.attribute_count || covered[slot] {
                    return Err(CeremonyError::RosterInvalid("slot ranges overlap"));
                }
                covered[slot] = true;
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(CeremonyError::RosterInvalid("slot ranges leave gaps"));
        }
        Ok(())
    }
}

/// Builds the attribute vector from per-authority acknowledged sets. Absent
/// authorities contribute all-unset slices; the trust slot is always set.
pub fn assemble_user_attribute_vector(
    table: &MappingTable,
    issued: &BTreeMap<Address, BTreeSet<String>>,
) -> Result<crate::abe::AttributeVector, CeremonyError> {
    for (addr, names) in issued {
        let row = table
            .rows
            .iter()
            .find(|r| r.address == *addr)
            .ok_or(CeremonyError::RosterInvalid("issuer not in table"))?;
        for name in names {
            if !row.attributes.iter().any(|a| a == name) {
                return Err(CeremonyError::UnknownAttribute(name.clone()));
            }
        }
    }
    let mut bits = vec![false; table.attribute_count];
    for row in &table.rows {
        if row.is_trust {
            continue;
        }
        if let Some(names) = issued.get(&row.address) {
            for (pos, attr) in row.attributes.iter().enumerate() {
                if names.contains(attr) {
                    bits[row.slot_start + pos] = true;
                }
            }
        }
    }
    Ok(crate::abe::AttributeVector::new(&bits))
}

/// Per-authority bit-slices for the vector commitment, in mapping order;
/// the trust slice is the single set bit.
pub fn user_slices(
    table: &MappingTable,
    issued: &BTreeMap<Address, BTreeSet<String>>,
) -> Vec<String> {
    table
        .rows
        .iter()
        .map(|row| {
            if row.is_trust {
                "1".to_string()
            } else {
                row.attributes
                    .iter()
                    .map(|attr| {
                        let held = issued
                            .get(&row.address)
                            .map(|names| names.contains(attr))
                            .unwrap_or(false);
                        if held {
                            '1'
                        } else {
                            '0'
                        }
                    })
                    .collect()
            }
        })
        .collect()
}

/// Secrets an authority keeps after setup, needed to issue keys. The
/// vector-commitment exponent is not retained: the published parameters
/// carry everything verification needs.
pub struct AuthorityRecord {
    pub spec: AuthoritySpec,
    pub slot_start: usize,
    pub slot_end: usize,
    pub slot_secrets: Vec<SlotSecret>,
}

pub struct AuthSetupResult {
    pub vc_params: VcParams,
    pub slot_publics: Vec<SlotPublic>,
    pub mapping: MappingTable,
    pub authorities: Vec<AuthorityRecord>,
    pub txs: Vec<TimedTx>,
}

fn validate_roster(roster: &[AuthoritySpec], slots: usize) -> Result<usize, CeremonyError> {
    if roster.len() < 2 {
        return Err(CeremonyError::RosterInvalid(
            "need at least one attribute authority plus the trust authority",
        ));
    }
    let trust_count = roster.iter().filter(|a| a.is_trust).count();
    if trust_count != 1 || !roster.last().unwrap().is_trust {
        return Err(CeremonyError::RosterInvalid(
            "exactly one trust authority, listed last",
        ));
    }
    let mut seen_addr = BTreeSet::new();
    let mut seen_attr = BTreeSet::new();
    let mut total = 0usize;
    for spec in roster {
        if !seen_addr.insert(spec.address) {
            return Err(CeremonyError::RosterInvalid("duplicate address"));
        }
        if spec.is_trust {
            if !spec.attributes.is_empty() {
                return Err(CeremonyError::RosterInvalid("trust authority owns no attributes"));
            }
            continue;
        }
        if spec.attributes.is_empty() {
            return Err(CeremonyError::RosterInvalid("authority without attributes"));
        }
        for attr in &spec.attributes {
            if !seen_attr.insert(attr.clone()) {
                return Err(CeremonyError::RosterInvalid("duplicate attribute name"));
            }
        }
        total += spec.attributes.len();
    }
    if total + 1 != slots {
        return Err(CeremonyError::RosterInvalid(
            "slot count must equal attribute count plus one",
        ));
    }
    Ok(total)
}

/// Runs the commit→reveal→prove→generate pipeline for every authority,
/// assembling the vector-commitment parameters, the per-slot public keys
/// and the mapping table.
pub fn run_authority_setup<R: RngCore + CryptoRng>(
    ledger: &mut Ledger,
    params: &SystemParams,
    roster: &[AuthoritySpec],
    rng: &mut R,
) -> Result<AuthSetupResult, CeremonyError> {
    let attribute_count = validate_roster(roster, params.slots)?;
    let (ddl1, ddl2, ddl3) = (ledger.auth.ddl1, ledger.auth.ddl2, ledger.auth.ddl3);
    if ledger.clock() > ddl1 {
        return Err(CeremonyError::WindowsPassed);
    }
    let mut txs: Vec<TimedTx> = Vec::new();

    let reject = |participant: Address, stage: &'static str| {
        move |reason: Rejection| CeremonyError::Rejected {
            participant,
            stage,
            reason,
        }
    };

    ledger.deploy_auth().map_err(reject(roster[0].address, "deploy"))?;
    txs.push((ledger.clock(), TranscriptTx::DeployAuth));

    let mut contributions: Vec<AuthContribution> = Vec::with_capacity(roster.len());
    ledger.advance_clock(ddl1);
    for spec in roster {
        let owned = if spec.is_trust { 1 } else { spec.attributes.len() };
        let contribution = AuthContribution::generate(params, owned, rng)?;
        let ctx = ledger.context(spec.address, 0);
        ledger
            .sc_auth_commit(ctx, contribution.digest)
            .map_err(reject(spec.address, "commit"))?;
        txs.push((
            ctx.timestamp,
            TranscriptTx::AuthCommit {
                sender: spec.address,
                h: contribution.digest,
            },
        ));
        ledger
            .sc_auth_reveal(ctx, contribution.reveal.clone())
            .map_err(reject(spec.address, "reveal"))?;
        txs.push((
            ctx.timestamp,
            TranscriptTx::AuthReveal {
                sender: spec.address,
                reveal: contribution.reveal.clone(),
            },
        ));
        contributions.push(contribution);
    }

    ledger.advance_clock(ddl2);
    for (spec, contribution) in roster.iter().zip(&contributions) {
        let proofs = contribution.proofs(rng)?;
        let ctx = ledger.context(spec.address, 0);
        ledger
            .sc_auth_prove(ctx, proofs.clone())
            .map_err(reject(spec.address, "prove"))?;
        txs.push((
            ctx.timestamp,
            TranscriptTx::AuthProve {
                sender: spec.address,
                proofs,
            },
        ));
    }

    ledger.advance_clock(ddl3);
    for (spec, contribution) in roster.iter().zip(&contributions) {
        let partners: BTreeMap<Address, AuthReveal> = ledger
            .auth
            .verified
            .iter()
            .filter(|(addr, _)| **addr != spec.address)
            .map(|(addr, reveal)| (*addr, reveal.clone()))
            .collect();
        let bundle = contribution.cross_terms(&partners);
        let size = if spec.is_trust {
            1
        } else {
            spec.attributes.len() as u32
        };
        let ctx = ledger.context(spec.address, 0);
        ledger
            .sc_auth_generate(ctx, bundle.clone(), size)
            .map_err(reject(spec.address, "generate"))?;
        txs.push((
            ctx.timestamp,
            TranscriptTx::AuthGenerate {
                sender: spec.address,
                bundle,
                attribute_size: size,
            },
        ));
    }

    let (vc_params, slot_publics, mapping) = assemble_authority_outputs(ledger, roster)?;
    let mut authorities = Vec::with_capacity(roster.len());
    let mut slot_cursor = 0usize;
    for (spec, contribution) in roster.iter().zip(contributions) {
        let width = if spec.is_trust { 1 } else { spec.attributes.len() };
        authorities.push(AuthorityRecord {
            spec: spec.clone(),
            slot_start: slot_cursor,
            slot_end: slot_cursor + width,
            slot_secrets: contribution.slot_secrets,
        });
        slot_cursor += width;
    }
    debug_assert_eq!(slot_cursor, attribute_count + 1);
    Ok(AuthSetupResult {
        vc_params,
        slot_publics,
        mapping,
        authorities,
        txs,
    })
}

/// Reconstructs the public outputs of the authority setup from contract
/// state alone (also used when re-verifying transcripts).
pub fn assemble_authority_outputs(
    ledger: &Ledger,
    roster: &[AuthoritySpec],
) -> Result<(VcParams, Vec<SlotPublic>, MappingTable), CeremonyError> {
    let mut o = Vec::with_capacity(roster.len());
    let mut z_pub = Vec::with_capacity(roster.len());
    let mut o_cross = BTreeMap::new();
    let mut slot_publics = Vec::new();
    let mut rows = Vec::with_capacity(roster.len());
    let mut slot_cursor = 0usize;
    let index_of: BTreeMap<Address, usize> = roster
        .iter()
        .enumerate()
        .map(|(i, spec)| (spec.address, i))
        .collect();
    for (i, spec) in roster.iter().enumerate() {
        let reveal = ledger
            .auth
            .verified
            .get(&spec.address)
            .ok_or(CeremonyError::RosterInvalid("authority not verified"))?;
        o.push(*reveal.vc.z.g1.power.get(0, 0));
        z_pub.push(*reveal.vc.z.g2.power.get(0, 0));
        let bundle = ledger
            .auth
            .verified_o
            .get(&spec.address)
            .ok_or(CeremonyError::RosterInvalid("authority published no cross terms"))?;
        for (partner, point) in &bundle.o {
            let j = *index_of
                .get(partner)
                .ok_or(CeremonyError::RosterInvalid("cross term for unknown partner"))?;
            o_cross.insert((i, j), point.0);
        }
        let declared = ledger
            .auth
            .attribute_size
            .get(&spec.address)
            .copied()
            .unwrap_or(0) as usize;
        let width = if spec.is_trust { 1 } else { spec.attributes.len() };
        if declared != width {
            return Err(CeremonyError::RosterInvalid(
                "declared attribute size disagrees with roster",
            ));
        }
        let contribution_publics: Vec<SlotPublic> = reveal
            .sk
            .iter()
            .map(|pairs| SlotPublic {
                xa_pub: pairs.x_pair.power.clone(),
                taua_pub: (0..pairs.tau_pair.power.cols())
                    .map(|j| {
                        crate::algebra::pairing(pairs.tau_pair.power.get(0, j), &g2_generator())
                    })
                    .collect(),
                y: *pairs.sigma_pair.power.get(0, 0),
            })
            .collect();
        if contribution_publics.len() != width {
            return Err(CeremonyError::RosterInvalid("slot count mismatch in reveal"));
        }
        slot_publics.extend(contribution_publics);
        rows.push(MappingRow {
            address: spec.address,
            authority_index: (i + 1) as u32,
            slot_start: slot_cursor,
            slot_end: slot_cursor + width,
            attributes: spec.attributes.clone(),
            is_trust: spec.is_trust,
        });
        slot_cursor += width;
    }
    let mapping = MappingTable {
        rows,
        attribute_count: slot_cursor - 1,
    };
    mapping.validate()?;
    let vc_params = VcParams { o, o_cross, z_pub };
    vc_params.validate()?;
    Ok((vc_params, slot_publics, mapping))
}

// ---- user key issuance --------------------------------------------------------

/// Everything a data user walks away with after key generation.
pub struct IssuedUserKey {
    pub commitment: crate::vc::VcCommitment,
    pub key_parts: Vec<crate::abe::KeyPart>,
    pub v: crate::abe::AttributeVector,
    pub h_pub: Vec<crate::algebra::G2Point>,
}

/// Runs the key-generation exchange between a user and every authority.
///
/// The user commits to its per-authority attribute slices and opens one
/// position to each authority; an authority only issues key parts after the
/// opening verifies against the slice it actually acknowledged. Channels are
/// direct in-process calls here.
#[allow(clippy::too_many_arguments)]
pub fn issue_user_key<R: RngCore + CryptoRng>(
    params: &SystemParams,
    vc_params: &VcParams,
    mapping: &MappingTable,
    authorities: &[AuthorityRecord],
    slot_publics: &[SlotPublic],
    gid: &crate::ledger::Gid,
    issued: &BTreeMap<Address, BTreeSet<String>>,
    rng: &mut R,
) -> Result<IssuedUserKey, CeremonyError> {
    use crate::abe::{derive_h, issue_key_part, masking, SlotRole};
    use crate::vc::{vc_commit, vc_message, vc_open, vc_verify};

    let v = assemble_user_attribute_vector(mapping, issued)?;
    let slices = user_slices(mapping, issued);
    if slices.len() != authorities.len() || slot_publics.len() != mapping.slots() {
        return Err(CeremonyError::RosterInvalid("authority records incomplete"));
    }
    // user side: per-authority committed values and the commitment
    let nonces: Vec<Scalar> = (0..slices.len()).map(|_| rand_nonzero(rng)).collect();
    let msgs: Vec<crate::vc::VcMessage> = slices
        .iter()
        .zip(&nonces)
        .map(|(bits, nonce)| vc_message(bits, nonce))
        .collect();
    let commitment = vc_commit(vc_params, &msgs)?;
    let h_pub = derive_h(gid.as_bytes(), &commitment, params.k);
    let all_y: Vec<crate::algebra::G2Point> = slot_publics.iter().map(|p| p.y).collect();

    let mut key_parts = Vec::with_capacity(mapping.slots());
    for (position, record) in authorities.iter().enumerate() {
        let opening = vc_open(vc_params, &msgs, position, nonces[position])?;
        // authority side: recompute the committed value from the slice it
        // acknowledged and verify the opening before issuing anything
        let own_view = user_slices(mapping, issued)[position].clone();
        let recomputed = vc_message(&own_view, &opening.nonce);
        if !vc_verify(vc_params, &commitment, &recomputed, position, &opening) {
            return Err(CeremonyError::RosterInvalid("opening failed verification"));
        }
        for (offset, secret) in record.slot_secrets.iter().enumerate() {
            let slot = record.slot_start + offset;
            let role = if record.spec.is_trust {
                SlotRole::Trust
            } else {
                SlotRole::Attribute
            };
            let mu = masking(
                slot,
                &secret.sigma,
                &all_y,
                gid.as_bytes(),
                &commitment,
                params.k,
            )?;
            key_parts.push(issue_key_part(secret, slot, role, v.get(slot), &h_pub, &mu)?);
        }
    }
    Ok(IssuedUserKey {
        commitment,
        key_parts,
        v,
        h_pub,
    })
}

// ---- transcripts ------------------------------------------------------------

/// Everything needed to replay a ceremony against a fresh ledger.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize)]
pub struct TranscriptHeader {
    pub k: u32,
    pub slots: u32,
    pub aa_list: Vec<Address>,
    pub sys_windows: (u64, u64, u64),
    pub auth_windows: (u64, u64, u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum TranscriptTx {
    SysCommit { sender: Address, h: CommitDigest },
    SysReveal { sender: Address, elements: SetupElements },
    SysProve { sender: Address, proofs: SetupProofs },
    SysCompute { sender: Address, triple: ChainTriple },
    SysGenerate { sender: Address, triple: ChainTriple },
    DeployAuth,
    AuthCommit { sender: Address, h: CommitDigest },
    AuthReveal { sender: Address, reveal: AuthReveal },
    AuthProve { sender: Address, proofs: AuthProofs },
    AuthGenerate {
        sender: Address,
        bundle: CrossTermBundle,
        attribute_size: u32,
    },
}

impl TranscriptTx {
    fn tag(&self) -> u8 {
        match self {
            TranscriptTx::SysCommit { .. } => 1,
            TranscriptTx::SysReveal { .. } => 2,
            TranscriptTx::SysProve { .. } => 3,
            TranscriptTx::SysCompute { .. } => 4,
            TranscriptTx::SysGenerate { .. } => 5,
            TranscriptTx::DeployAuth => 6,
            TranscriptTx::AuthCommit { .. } => 7,
            TranscriptTx::AuthReveal { .. } => 8,
            TranscriptTx::AuthProve { .. } => 9,
            TranscriptTx::AuthGenerate { .. } => 10,
        }
    }
}

fn serialize_cross(bundle: &CrossTermBundle, out: &mut Vec<u8>) -> Result<(), SerializationError> {
    for map in [&bundle.o, &bundle.theta, &bundle.o_prime] {
        (map.len() as u32).serialize_compressed(&mut *out)?;
        for (addr, point) in map {
            addr.serialize_compressed(&mut *out)?;
            point.0.serialize_compressed(&mut *out)?;
        }
    }
    Ok(())
}

fn deserialize_cross(reader: &mut &[u8]) -> Result<CrossTermBundle, SerializationError> {
    let mut maps = Vec::with_capacity(3);
    for _ in 0..3 {
        let len = u32::deserialize_compressed(&mut *reader)? as usize;
        if len > 4096 {
            return Err(SerializationError::InvalidData);
        }
        let mut map = BTreeMap::new();
        for _ in 0..len {
            let addr = Address::deserialize_compressed(&mut *reader)?;
            let point = G1Point::deserialize_compressed(&mut *reader)?;
            map.insert(addr, Pt(point));
        }
        maps.push(map);
    }
    let o_prime = maps.pop().expect("three maps");
    let theta = maps.pop().expect("three maps");
    let o = maps.pop().expect("three maps");
    Ok(CrossTermBundle { o, theta, o_prime })
}

impl CanonicalSerialize for TranscriptTx {
    fn serialize_with_mode<W: std::io::Write>(
        &self,
        mut writer: W,
        _compress: Compress,
    ) -> Result<(), SerializationError> {
        let mut body = vec![self.tag()];
        match self {
            TranscriptTx::SysCommit { sender, h } | TranscriptTx::AuthCommit { sender, h } => {
                sender.serialize_compressed(&mut body)?;
                h.serialize_compressed(&mut body)?;
            }
            TranscriptTx::SysReveal { sender, elements } => {
                sender.serialize_compressed(&mut body)?;
                elements.serialize_compressed(&mut body)?;
            }
            TranscriptTx::SysProve { sender, proofs } => {
                sender.serialize_compressed(&mut body)?;
                proofs.serialize_compressed(&mut body)?;
            }
            TranscriptTx::SysCompute { sender, triple }
            | TranscriptTx::SysGenerate { sender, triple } => {
                sender.serialize_compressed(&mut body)?;
                triple.serialize_compressed(&mut body)?;
            }
            TranscriptTx::DeployAuth => {}
            TranscriptTx::AuthReveal { sender, reveal } => {
                sender.serialize_compressed(&mut body)?;
                reveal.serialize_compressed(&mut body)?;
            }
            TranscriptTx::AuthProve { sender, proofs } => {
                sender.serialize_compressed(&mut body)?;
                proofs.serialize_compressed(&mut body)?;
            }
            TranscriptTx::AuthGenerate {
                sender,
                bundle,
                attribute_size,
            } => {
                sender.serialize_compressed(&mut body)?;
                serialize_cross(bundle, &mut body)?;
                attribute_size.serialize_compressed(&mut body)?;
            }
        }
        writer.write_all(&body)?;
        Ok(())
    }

    fn serialized_size(&self, _compress: Compress) -> usize {
        let mut buf = Vec::new();
        self.serialize_compressed(&mut buf).expect("vec write");
        buf.len()
    }
}

impl Valid for TranscriptTx {
    fn check(&self) -> Result<(), SerializationError> {
        Ok(())
    }
}

impl CanonicalDeserialize for TranscriptTx {
    fn deserialize_with_mode<R: std::io::Read>(
        mut reader: R,
        _compress: Compress,
        _validate: Validate,
    ) -> Result<Self, SerializationError> {
        let mut tag = [0u8; 1];
        reader.read_exact(&mut tag)?;
        let mut rest = Vec::new();
        reader.read_to_end(&mut rest)?;
        let mut slice: &[u8] = &rest;
        let tx = match tag[0] {
            1 | 7 => {
                let sender = Address::deserialize_compressed(&mut slice)?;
                let h = CommitDigest::deserialize_compressed(&mut slice)?;
                if tag[0] == 1 {
                    TranscriptTx::SysCommit { sender, h }
                } else {
                    TranscriptTx::AuthCommit { sender, h }
                }
            }
            2 => TranscriptTx::SysReveal {
                sender: Address::deserialize_compressed(&mut slice)?,
                elements: SetupElements::deserialize_compressed(&mut slice)?,
            },
            3 => TranscriptTx::SysProve {
                sender: Address::deserialize_compressed(&mut slice)?,
                proofs: SetupProofs::deserialize_compressed(&mut slice)?,
            },
            4 => TranscriptTx::SysCompute {
                sender: Address::deserialize_compressed(&mut slice)?,
                triple: ChainTriple::deserialize_compressed(&mut slice)?,
            },
            5 => TranscriptTx::SysGenerate {
                sender: Address::deserialize_compressed(&mut slice)?,
                triple: ChainTriple::deserialize_compressed(&mut slice)?,
            },
            6 => TranscriptTx::DeployAuth,
            8 => TranscriptTx::AuthReveal {
                sender: Address::deserialize_compressed(&mut slice)?,
                reveal: AuthReveal::deserialize_compressed(&mut slice)?,
            },
            9 => TranscriptTx::AuthProve {
                sender: Address::deserialize_compressed(&mut slice)?,
                proofs: AuthProofs::deserialize_compressed(&mut slice)?,
            },
            10 => {
                let sender = Address::deserialize_compressed(&mut slice)?;
                let bundle = deserialize_cross(&mut slice)?;
                let attribute_size = u32::deserialize_compressed(&mut slice)?;
                TranscriptTx::AuthGenerate {
                    sender,
                    bundle,
                    attribute_size,
                }
            }
            _ => return Err(SerializationError::InvalidData),
        };
        if !slice.is_empty() {
            return Err(SerializationError::InvalidData);
        }
        Ok(tx)
    }
}

const TRANSCRIPT_MAGIC: &[u8; 4] = b"DGTX";
const TRANSCRIPT_VERSION: u8 = 1;
const SECTION_HEADER: u8 = 0x01;
const SECTION_TX: u8 = 0x02;
const SECTION_FOOTER: u8 = 0xff;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub txs: Vec<TimedTx>,
    pub final_state_hash: [u8; 32],
    pub params_digest: [u8; 32],
}

/// Digest pinning the assembled global parameters.
pub fn params_digest(params: &SystemParams) -> [u8; 32] {
    let mut hasher = Blake2s256::new();
    hasher.update(b"datagov/v1/params");
    hasher.update((params.k as u32).to_be_bytes());
    hasher.update((params.slots as u32).to_be_bytes());
    hasher.update(encode::canonical_bytes(&params.a_pub));
    hasher.update(encode::canonical_bytes(&params.ua_pub));
    let mut out = [0u8; 32];
    out.copy_from_slice(&hasher.finalize());
    out
}

impl Transcript {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(TRANSCRIPT_MAGIC);
        out.push(TRANSCRIPT_VERSION);
        let push_section = |kind: u8, payload: &[u8], out: &mut Vec<u8>| {
            out.push(kind);
            out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
            out.extend_from_slice(payload);
        };
        push_section(
            SECTION_HEADER,
            &encode::canonical_bytes(&self.header),
            &mut out,
        );
        for (ts, tx) in &self.txs {
            let mut payload = Vec::new();
            payload.extend_from_slice(&ts.to_be_bytes());
            payload.extend_from_slice(&encode::canonical_bytes(tx));
            push_section(SECTION_TX, &payload, &mut out);
        }
        let mut footer = Vec::new();
        footer.extend_from_slice(&self.final_state_hash);
        footer.extend_from_slice(&self.params_digest);
        push_section(SECTION_FOOTER, &footer, &mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CeremonyError> {
        let malformed = CeremonyError::TranscriptMalformed;
        if bytes.len() < 5 || &bytes[..4] != TRANSCRIPT_MAGIC {
            return Err(malformed("bad magic"));
        }
        if bytes[4] != TRANSCRIPT_VERSION {
            return Err(malformed("unsupported version"));
        }
        let mut offset = 5usize;
        let mut header: Option<TranscriptHeader> = None;
        let mut txs = Vec::new();
        let mut footer: Option<([u8; 32], [u8; 32])> = None;
        while offset < bytes.len() {
            if offset + 5 > bytes.len() {
                return Err(malformed("truncated section header"));
            }
            let kind = bytes[offset];
            let len = u32::from_be_bytes(bytes[offset + 1..offset + 5].try_into().unwrap()) as usize;
            offset += 5;
            if offset + len > bytes.len() {
                return Err(malformed("truncated section payload"));
            }
            let payload = &bytes[offset..offset + len];
            offset += len;
            match kind {
                SECTION_HEADER => {
                    header = Some(
                        TranscriptHeader::deserialize_compressed(payload)
                            .map_err(|_| malformed("bad header"))?,
                    );
                }
                SECTION_TX => {
                    if payload.len() < 8 {
                        return Err(malformed("short tx section"));
                    }
                    let ts = u64::from_be_bytes(payload[..8].try_into().unwrap());
                    let tx = TranscriptTx::deserialize_compressed(&payload[8..])
                        .map_err(|_| malformed("bad tx payload"))?;
                    txs.push((ts, tx));
                }
                SECTION_FOOTER => {
                    if payload.len() != 64 {
                        return Err(malformed("bad footer length"));
                    }
                    let mut state = [0u8; 32];
                    state.copy_from_slice(&payload[..32]);
                    let mut params = [0u8; 32];
                    params.copy_from_slice(&payload[32..]);
                    footer = Some((state, params));
                }
                _ => return Err(malformed("unknown section kind")),
            }
        }
        let header = header.ok_or(malformed("missing header"))?;
        let (final_state_hash, params_digest) = footer.ok_or(malformed("missing footer"))?;
        Ok(Transcript {
            header,
            txs,
            final_state_hash,
            params_digest,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptReport {
    pub participants: usize,
    pub transactions: usize,
    pub k: usize,
    pub slots: usize,
    pub params_digest_hex: String,
}

fn apply_transcript_tx(ledger: &mut Ledger, ts: u64, tx: &TranscriptTx) -> Result<(), Rejection> {
    let ctx = |sender: Address| TxContext {
        sender,
        value: 0,
        timestamp: ts,
    };
    match tx {
        TranscriptTx::SysCommit { sender, h } => ledger.sc_sys_commit(ctx(*sender), *h),
        TranscriptTx::SysReveal { sender, elements } => {
            ledger.sc_sys_reveal(ctx(*sender), elements.clone())
        }
        TranscriptTx::SysProve { sender, proofs } => {
            ledger.sc_sys_prove(ctx(*sender), proofs.clone())
        }
        TranscriptTx::SysCompute { sender, triple } => {
            ledger.sc_sys_compute(ctx(*sender), triple.clone())
        }
        TranscriptTx::SysGenerate { sender, triple } => {
            ledger.sc_sys_generate(ctx(*sender), triple.clone())
        }
        TranscriptTx::DeployAuth => ledger.deploy_auth(),
        TranscriptTx::AuthCommit { sender, h } => ledger.sc_auth_commit(ctx(*sender), *h),
        TranscriptTx::AuthReveal { sender, reveal } => {
            ledger.sc_auth_reveal(ctx(*sender), reveal.clone())
        }
        TranscriptTx::AuthProve { sender, proofs } => {
            ledger.sc_auth_prove(ctx(*sender), proofs.clone())
        }
        TranscriptTx::AuthGenerate {
            sender,
            bundle,
            attribute_size,
        } => ledger.sc_auth_generate(ctx(*sender), bundle.clone(), *attribute_size),
    }
}

/// Replays a transcript against a fresh ledger, re-running every contract
/// check, and confirms the recorded state and parameter digests.
pub fn verify_transcript(bytes: &[u8]) -> Result<TranscriptReport, CeremonyError> {
    let transcript = Transcript::from_bytes(bytes)?;
    let header = &transcript.header;
    let mut ledger = Ledger::new(LedgerConfig {
        aa_list: header.aa_list.iter().copied().collect(),
        sys_windows: header.sys_windows,
        auth_windows: header.auth_windows,
        insecure_no_pok: false,
    });
    let mut last_ts = 0u64;
    for (i, (ts, tx)) in transcript.txs.iter().enumerate() {
        if *ts < last_ts {
            return Err(CeremonyError::TranscriptMalformed("timestamps regress"));
        }
        last_ts = *ts;
        ledger.advance_clock(*ts);
        apply_transcript_tx(&mut ledger, *ts, tx).map_err(|reason| {
            CeremonyError::TranscriptMismatch(format!("transaction {i} rejected: {reason}"))
        })?;
    }
    if ledger.state_hash() != transcript.final_state_hash {
        return Err(CeremonyError::TranscriptMismatch(
            "final state hash disagrees".into(),
        ));
    }
    let params = params_from_chains(&ledger, header.k as usize, header.slots as usize)?;
    if params_digest(&params) != transcript.params_digest {
        return Err(CeremonyError::TranscriptMismatch(
            "parameter digest disagrees".into(),
        ));
    }
    Ok(TranscriptReport {
        participants: header.aa_list.len(),
        transactions: transcript.txs.len(),
        k: header.k as usize,
        slots: header.slots as usize,
        params_digest_hex: hex::encode(transcript.params_digest),
    })
}

/// Builds a transcript from a completed ceremony run.
pub fn build_transcript(
    ledger: &Ledger,
    k: usize,
    slots: usize,
    txs: Vec<TimedTx>,
) -> Result<Transcript, CeremonyError> {
    let params = params_from_chains(ledger, k, slots)?;
    Ok(Transcript {
        header: TranscriptHeader {
            k: k as u32,
            slots: slots as u32,
            aa_list: ledger.sys.aa_list.iter().copied().collect(),
            sys_windows: (ledger.sys.ddl1, ledger.sys.ddl2, ledger.sys.ddl3),
            auth_windows: (ledger.auth.ddl1, ledger.auth.ddl2, ledger.auth.ddl3),
        },
        txs,
        final_state_hash: ledger.state_hash(),
        params_digest: params_digest(&params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ark_ff::Field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(0xce4e)
    }

    fn fresh_ledger(addresses: &[Address]) -> Ledger {
        Ledger::new(LedgerConfig {
            aa_list: addresses.iter().copied().collect(),
            sys_windows: (100, 200, 300),
            auth_windows: (400, 500, 600),
            insecure_no_pok: false,
        })
    }

    fn honest_participants(n: usize, k: usize, rng: &mut ChaCha20Rng) -> Vec<SetupParticipant> {
        (0..n)
            .map(|i| SetupParticipant::honest(&format!("aa-{i}"), k, rng).unwrap())
            .collect()
    }

    #[test]
    fn contribution_digest_recomputes_from_duals() {
        let mut rng = rng();
        let contribution = SetupContribution::generate(1, &mut rng).unwrap();
        assert_eq!(contribution.secrets.a.dims(), (2, 1));
        assert_eq!(*contribution.secrets.a.get(1, 0), Scalar::ONE);
        let (_, recomputed) = contribution.elements.digest();
        assert_eq!(recomputed, contribution.digest);
        let other = SetupContribution::generate(1, &mut rng).unwrap();
        assert_ne!(other.digest, contribution.digest);
        assert_ne!(other.secrets.a, contribution.secrets.a);
    }

    #[test]
    fn single_participant_reduces_to_central_setup() {
        let mut rng = rng();
        let participants = honest_participants(1, 2, &mut rng);
        let mut ledger = fresh_ledger(&[participants[0].address]);
        let result = run_trusted_setup(&mut ledger, &participants, 4, true, &mut rng).unwrap();
        let c = &participants[0].contribution;
        assert_eq!(
            result.params.a_pub,
            crate::algebra::matrix_exp_base(g1_generator(), &c.secrets.a)
        );
        assert_eq!(
            result.params.ua_pub,
            crate::algebra::matrix_exp_base(g1_generator(), &c.secrets.u)
        );
    }

    #[test]
    fn three_participant_composite_matches_exponent_oracle() {
        let mut rng = rng();
        let participants = honest_participants(3, 2, &mut rng);
        let addresses: Vec<Address> = participants.iter().map(|p| p.address).collect();
        let mut ledger = fresh_ledger(&addresses);
        let result = run_trusted_setup(&mut ledger, &participants, 4, true, &mut rng).unwrap();
        let mut a = participants[0].contribution.secrets.a.clone();
        let mut u = participants[0].contribution.secrets.u.clone();
        for p in &participants[1..] {
            a = a.hadamard(&p.contribution.secrets.a).unwrap();
            u = u.hadamard(&p.contribution.secrets.u).unwrap();
        }
        assert_eq!(
            result.params.a_pub,
            crate::algebra::matrix_exp_base(g1_generator(), &a)
        );
        assert_eq!(
            result.params.ua_pub,
            crate::algebra::matrix_exp_base(g1_generator(), &u)
        );
        // composite keeps the structured shape
        for i in 0..2 {
            for j in 0..2 {
                if i != j {
                    assert!(result.params.a_pub.get(i, j).is_zero());
                }
            }
        }
        for j in 0..2 {
            assert_eq!(*result.params.a_pub.get(2, j), g1_generator());
        }
    }

    #[test]
    fn tampered_compute_is_rejected_and_ceremony_completes() {
        let mut rng = rng();
        let mut participants = honest_participants(3, 2, &mut rng);
        participants[1].behavior = SetupBehavior::TamperCompute;
        let addresses: Vec<Address> = participants.iter().map(|p| p.address).collect();
        let mut ledger = fresh_ledger(&addresses);
        let result = run_trusted_setup(&mut ledger, &participants, 4, false, &mut rng).unwrap();
        let rejected: Vec<_> = result
            .outcomes
            .iter()
            .filter(|o| !o.accepted)
            .collect();
        assert!(!rejected.is_empty());
        assert!(rejected.iter().all(|o| o.participant == addresses[1]));
        // composite equals the two honest contributions
        let a = participants[0]
            .contribution
            .secrets
            .a
            .hadamard(&participants[2].contribution.secrets.a)
            .unwrap();
        assert_eq!(
            result.params.a_pub,
            crate::algebra::matrix_exp_base(g1_generator(), &a)
        );
        // strict mode aborts identifying the offender
        let mut ledger2 = fresh_ledger(&addresses);
        let err = run_trusted_setup(&mut ledger2, &participants, 4, true, &mut rng).unwrap_err();
        match err {
            CeremonyError::Rejected { participant, .. } => assert_eq!(participant, addresses[1]),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn absent_participant_ceremony_still_completes() {
        // a contributor that proves but never extends the chains leaves the
        // remaining participants' composite in place
        let mut rng = rng();
        let mut participants = honest_participants(3, 2, &mut rng);
        participants[2].behavior = SetupBehavior::AbsentFromChain;
        let addresses: Vec<Address> = participants.iter().map(|p| p.address).collect();
        let mut ledger = fresh_ledger(&addresses);
        let result = run_trusted_setup(&mut ledger, &participants, 4, true, &mut rng).unwrap();
        let a = participants[0]
            .contribution
            .secrets
            .a
            .hadamard(&participants[1].contribution.secrets.a)
            .unwrap();
        assert_eq!(
            result.params.a_pub,
            crate::algebra::matrix_exp_base(g1_generator(), &a)
        );
        assert!(result.outcomes.iter().all(|o| o.accepted));
    }

    #[test]
    fn withholding_one_contribution_blocks_reconstruction() {
        // an adversary holding all but one contribution cannot reproduce the
        // composite diagonal
        let mut rng = rng();
        let participants = honest_participants(3, 2, &mut rng);
        let addresses: Vec<Address> = participants.iter().map(|p| p.address).collect();
        let mut ledger = fresh_ledger(&addresses);
        let result = run_trusted_setup(&mut ledger, &participants, 4, true, &mut rng).unwrap();
        let known = participants[0]
            .contribution
            .secrets
            .a
            .hadamard(&participants[1].contribution.secrets.a)
            .unwrap();
        assert_ne!(
            result.params.a_pub,
            crate::algebra::matrix_exp_base(g1_generator(), &known)
        );
    }

    fn table_iv_roster() -> Vec<AuthoritySpec> {
        vec![
            AuthoritySpec {
                address: Address::from_label("aa-1"),
                name: "aa-1".into(),
                attributes: vec!["entry".into(), "mid".into(), "senior".into()],
                is_trust: false,
            },
            AuthoritySpec {
                address: Address::from_label("aa-2"),
                name: "aa-2".into(),
                attributes: vec!["agent".into(), "manager".into()],
                is_trust: false,
            },
            AuthoritySpec {
                address: Address::from_label("trust"),
                name: "trust".into(),
                attributes: vec![],
                is_trust: true,
            },
        ]
    }

    fn full_ceremony(
        rng: &mut ChaCha20Rng,
    ) -> (Ledger, SystemParams, AuthSetupResult, Vec<SetupParticipant>) {
        let roster = table_iv_roster();
        let addresses: Vec<Address> = roster.iter().map(|r| r.address).collect();
        let participants: Vec<SetupParticipant> = addresses
            .iter()
            .map(|addr| SetupParticipant {
                address: *addr,
                contribution: SetupContribution::generate(2, rng).unwrap(),
                behavior: SetupBehavior::Honest,
            })
            .collect();
        let mut ledger = fresh_ledger(&addresses);
        let setup = run_trusted_setup(&mut ledger, &participants, 6, true, rng).unwrap();
        let auth = run_authority_setup(&mut ledger, &setup.params, &roster, rng).unwrap();
        (ledger, setup.params, auth, participants)
    }

    #[test]
    fn authority_setup_assembles_table_iv_layout() {
        let mut rng = rng();
        let (ledger, _params, auth, _) = full_ceremony(&mut rng);
        assert_eq!(auth.mapping.attribute_count, 5);
        assert_eq!(auth.mapping.slots(), 6);
        assert_eq!(auth.mapping.rows.len(), 3);
        assert_eq!(auth.mapping.slot_of("entry"), Some(0));
        assert_eq!(auth.mapping.slot_of("manager"), Some(4));
        assert_eq!(auth.mapping.trust_row().slot_start, 5);
        assert_eq!(auth.slot_publics.len(), 6);
        // n = 2 + trust: 3 o-values and 6 ordered cross terms
        assert_eq!(auth.vc_params.positions(), 3);
        assert_eq!(auth.vc_params.o_cross.len(), 6);
        auth.vc_params.validate().unwrap();
        // indices assigned in arrival order
        assert_eq!(ledger.auth.index.len(), 3);
        assert_eq!(
            ledger.auth.index[&Address::from_label("trust")],
            3,
            "trust authority proves last"
        );
        // attribute sizes recorded on the ledger
        assert_eq!(ledger.auth.attribute_size[&Address::from_label("aa-1")], 3);
        assert_eq!(ledger.auth.attribute_size[&Address::from_label("aa-2")], 2);
    }

    #[test]
    fn attribute_vector_assembly_follows_the_table() {
        let mut rng = rng();
        let (_ledger, _params, auth, _) = full_ceremony(&mut rng);
        let mut issued = BTreeMap::new();
        issued.insert(
            Address::from_label("aa-1"),
            ["entry".to_string()].into_iter().collect::<BTreeSet<_>>(),
        );
        issued.insert(
            Address::from_label("aa-2"),
            ["agent".to_string()].into_iter().collect::<BTreeSet<_>>(),
        );
        let v = assemble_user_attribute_vector(&auth.mapping, &issued).unwrap();
        let expected = [true, false, false, true, false, true];
        for (slot, want) in expected.iter().enumerate() {
            assert_eq!(v.get(slot), *want, "slot {slot}");
        }
        // empty issuance: only the trust slot
        let v = assemble_user_attribute_vector(&auth.mapping, &BTreeMap::new()).unwrap();
        assert!((0..5).all(|slot| !v.get(slot)));
        assert!(v.get(5));
        // unknown attribute rejected
        let mut bad = BTreeMap::new();
        bad.insert(
            Address::from_label("aa-1"),
            ["ceo".to_string()].into_iter().collect::<BTreeSet<_>>(),
        );
        assert!(matches!(
            assemble_user_attribute_vector(&auth.mapping, &bad),
            Err(CeremonyError::UnknownAttribute(_))
        ));
        let slices = user_slices(&auth.mapping, &issued);
        assert_eq!(slices, vec!["100".to_string(), "10".into(), "1".into()]);
    }

    #[test]
    fn forged_cross_term_rejected() {
        let mut rng = rng();
        let roster = table_iv_roster();
        let addresses: Vec<Address> = roster.iter().map(|r| r.address).collect();
        let participants = honest_participants(3, 2, &mut rng)
            .into_iter()
            .zip(&addresses)
            .map(|(mut p, addr)| {
                p.address = *addr;
                p
            })
            .collect::<Vec<_>>();
        let mut ledger = fresh_ledger(&addresses);
        let setup = run_trusted_setup(&mut ledger, &participants, 6, true, &mut rng).unwrap();
        // run AU stages by hand up to generate, then forge one cross term
        ledger.deploy_auth().unwrap();
        ledger.advance_clock(400);
        let mut contributions = Vec::new();
        for spec in &roster {
            let owned = if spec.is_trust { 1 } else { spec.attributes.len() };
            let c = AuthContribution::generate(&setup.params, owned, &mut rng).unwrap();
            let ctx = ledger.context(spec.address, 0);
            ledger.sc_auth_commit(ctx, c.digest).unwrap();
            ledger.sc_auth_reveal(ctx, c.reveal.clone()).unwrap();
            contributions.push(c);
        }
        ledger.advance_clock(500);
        for (spec, c) in roster.iter().zip(&contributions) {
            let ctx = ledger.context(spec.address, 0);
            ledger.sc_auth_prove(ctx, c.proofs(&mut rng).unwrap()).unwrap();
        }
        ledger.advance_clock(600);
        let partners: BTreeMap<Address, AuthReveal> = ledger
            .auth
            .verified
            .iter()
            .filter(|(a, _)| **a != roster[0].address)
            .map(|(a, r)| (*a, r.clone()))
            .collect();
        let mut bundle = contributions[0].cross_terms(&partners);
        let victim = roster[1].address;
        // wrong exponent on one cross term
        let forged = bundle.o[&victim].0 * Scalar::from(3u64);
        bundle.o.insert(victim, Pt(forged));
        let ctx = ledger.context(roster[0].address, 0);
        assert!(matches!(
            ledger.sc_auth_generate(ctx, bundle, 3),
            Err(Rejection::ChainCheckFailed { .. })
        ));
    }

    #[test]
    fn transcript_round_trip_and_verification() {
        let mut rng = rng();
        let roster = table_iv_roster();
        let addresses: Vec<Address> = roster.iter().map(|r| r.address).collect();
        let participants: Vec<SetupParticipant> = addresses
            .iter()
            .map(|addr| SetupParticipant {
                address: *addr,
                contribution: SetupContribution::generate(2, &mut rng).unwrap(),
                behavior: SetupBehavior::Honest,
            })
            .collect();
        let mut ledger = fresh_ledger(&addresses);
        let setup = run_trusted_setup(&mut ledger, &participants, 6, true, &mut rng).unwrap();
        let auth = run_authority_setup(&mut ledger, &setup.params, &roster, &mut rng).unwrap();
        let mut txs = setup.txs;
        txs.extend(auth.txs);
        let transcript = build_transcript(&ledger, 2, 6, txs).unwrap();
        let bytes = transcript.to_bytes();
        let parsed = Transcript::from_bytes(&bytes).unwrap();
        assert_eq!(parsed, transcript);
        let report = verify_transcript(&bytes).unwrap();
        assert_eq!(report.k, 2);
        assert_eq!(report.slots, 6);
        assert_eq!(report.participants, 3);
        // flipping any byte in a section payload breaks verification
        let mut tampered = bytes.clone();
        let idx = tampered.len() / 2;
        tampered[idx] ^= 1;
        assert!(verify_transcript(&tampered).is_err());
    }

    #[test]
    fn issued_user_key_decrypts_end_to_end() {
        let mut rng = rng();
        let (mut ledger, params, auth, _) = full_ceremony(&mut rng);
        // register a user and issue keys for {entry, agent}
        let user = Address::from_label("du-1");
        ledger.advance_clock(700);
        let ctx = ledger.context(user, 1_000_001);
        let gid = ledger.sc_reg_register(ctx).unwrap();
        let mut issued = BTreeMap::new();
        issued.insert(
            Address::from_label("aa-1"),
            ["entry".to_string()].into_iter().collect::<BTreeSet<_>>(),
        );
        issued.insert(
            Address::from_label("aa-2"),
            ["agent".to_string()].into_iter().collect::<BTreeSet<_>>(),
        );
        let key = issue_user_key(
            &params,
            &auth.vc_params,
            &auth.mapping,
            &auth.authorities,
            &auth.slot_publics,
            &gid,
            &issued,
            &mut rng,
        )
        .unwrap();
        assert_eq!(key.key_parts.len(), 6);
        // encrypt requiring exactly those attributes
        let required: BTreeSet<usize> = [
            auth.mapping.slot_of("entry").unwrap(),
            auth.mapping.slot_of("agent").unwrap(),
        ]
        .into_iter()
        .collect();
        let policy = crate::abe::encode_policy(
            &required,
            auth.mapping.slots(),
            crate::abe::PolicyMode::Randomized,
            &mut rng,
        )
        .unwrap();
        let payload = crate::algebra::gt_generator() * Scalar::rand(&mut rng);
        let ct =
            crate::abe::encrypt(&params, &auth.slot_publics, &policy, &payload, &mut rng).unwrap();
        let recovered = crate::abe::decrypt(&key.key_parts, &key.v, &key.h_pub, &ct).unwrap();
        assert_eq!(recovered, payload);
        // a user missing one attribute cannot recover the payload
        let mut partial = issued.clone();
        partial.remove(&Address::from_label("aa-2"));
        let weaker = issue_user_key(
            &params,
            &auth.vc_params,
            &auth.mapping,
            &auth.authorities,
            &auth.slot_publics,
            &gid,
            &partial,
            &mut rng,
        )
        .unwrap();
        let wrong =
            crate::abe::decrypt(&weaker.key_parts, &weaker.v, &weaker.h_pub, &ct).unwrap();
        assert_ne!(wrong, payload);
    }

    #[test]
    fn mapping_partition_is_validated() {
        let table = MappingTable {
            rows: vec![
                MappingRow {
                    address: Address::from_label("a"),
                    authority_index: 1,
                    slot_start: 0,
                    slot_end: 2,
                    attributes: vec!["x".into(), "y".into()],
                    is_trust: false,
                },
                MappingRow {
                    address: Address::from_label("t"),
                    authority_index: 2,
                    slot_start: 2,
                    slot_end: 3,
                    attributes: vec![],
                    is_trust: true,
                },
            ],
            attribute_count: 2,
        };
        table.validate().unwrap();
        let mut overlapping = table.clone();
        overlapping.rows[0].slot_start = 1;
        overlapping.rows[0].slot_end = 3;
        assert!(overlapping.validate().is_err());
    }
}
