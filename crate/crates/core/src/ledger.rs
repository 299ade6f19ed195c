//! Deterministic in-process simulation of the governance layer: accounts, a
//! controllable block clock, events, and the five contracts (`SC_sys`,
//! `SC_auth`, `SC_reg`, `SC_log` plus the `SC_util` helpers the others call
//! into).
//!
//! Transactions are applied in a total order by one driver. Every rejected
//! call leaves state untouched; every call is recorded in a replayable
//! trace. Deadlines accept inclusively: a call at exactly the deadline
//! passes, one second past it is rejected.
//!
//! The `SC_util` operations map onto EVM precompiles for a future on-chain
//! port: point addition (0x06) and scalar multiplication (0x07) inside the
//! proof check, the pairing product (0x08) behind the ratio check, and the
//! hash (0x09) behind digest recomputation. Only the in-process simulation
//! is implemented here.

use crate::algebra::{
    commit_hash, encode, same_ratio, same_ratio_matrix, G1Matrix, G1Point, Scalar,
};
use crate::pok::{
    nizk_verify_entrywise, nizk_verify_linear, pok_context, CommitDigest,
    DualSPair, EntryPoKs, G1SPair, G2SPair, LinearPoK, ScalarPoK,
};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use blake2::{Blake2s256, Digest};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// 20-byte account identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, CanonicalSerialize, CanonicalDeserialize)]
pub struct Address(pub [u8; 20]);

impl Address {
    /// Deterministic address from a label; the simulation has no key pairs.
    pub fn from_label(label: &str) -> Self {
        let mut hasher = Blake2s256::new();
        hasher.update(b"datagov/v1/address");
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut bytes = [0u8; 20];
        bytes.copy_from_slice(&digest[..20]);
        Address(bytes)
    }

    pub fn to_hex(self) -> String {
        hex::encode(self.0)
    }
}

impl std::fmt::Display for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <String as Deserialize>::deserialize(deserializer)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 20] = bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("address must be 20 bytes"))?;
        Ok(Address(arr))
    }
}

/// Global identifier: hash of the user's ledger address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gid(#[serde(with = "hex::serde")] pub [u8; 32]);

impl Gid {
    pub fn from_address(addr: &Address) -> Self {
        let scalar = commit_hash(&addr.0);
        let enc = encode::encode_scalar(&scalar);
        let mut bytes = [0u8; 32];
        bytes.copy_from_slice(&enc[1..]);
        Gid(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

/// Transaction context: who calls, with how much value, at what block time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxContext {
    pub sender: Address,
    pub value: u64,
    pub timestamp: u64,
}

#[derive(Clone, Debug, Error, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rejection {
    #[error("sender is not on the authorized list")]
    NotAuthorized,
    #[error("call to {entry} outside its time window")]
    OutsideWindow { entry: &'static str },
    #[error("timestamp went backwards")]
    ClockRegression,
    #[error("no commitment recorded for sender")]
    NoCommitment,
    #[error("already revealed")]
    AlreadyRevealed,
    #[error("revealed elements do not match the committed digest")]
    DigestMismatch,
    #[error("no unverified elements pending for sender")]
    NothingToProve,
    #[error("cross-group ratio check failed for element {element}")]
    SameRatioFailed { element: &'static str },
    #[error("proof of knowledge failed for element {element}")]
    ProofFailed { element: &'static str },
    #[error("sender has no verified elements")]
    NoVerifiedElements,
    #[error("chain consistency check {check} failed")]
    ChainCheckFailed { check: &'static str },
    #[error("sender already extended this chain")]
    AlreadyExtended,
    #[error("authority contract not deployed")]
    NotDeployed,
    #[error("key image base does not match the system parameters")]
    WrongKeyBase,
    #[error("cross terms must cover every other verified authority")]
    IncompletePartnerSet,
    #[error("claimed attribute size is invalid")]
    BadAttributeSize,
    #[error("registration fee too low")]
    FeeTooLow,
    #[error("log index out of range")]
    InvalidIndex,
}

/// The six trusted-setup elements in their fixed transcript order.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct SetupElements {
    pub a: DualSPair,
    pub u: DualSPair,
    pub alpha_a: DualSPair,
    pub alpha_u: DualSPair,
    pub alpha_a_a: DualSPair,
    pub alpha_u_u: DualSPair,
}

impl SetupElements {
    pub const NAMES: [&'static str; 6] = ["A", "U", "alpha_A", "alpha_U", "alpha_A*A", "alpha_U*U"];

    pub fn items(&self) -> [&DualSPair; 6] {
        [
            &self.a,
            &self.u,
            &self.alpha_a,
            &self.alpha_u,
            &self.alpha_a_a,
            &self.alpha_u_u,
        ]
    }

    pub fn element_bytes(&self) -> Vec<Vec<u8>> {
        self.items().iter().map(|p| p.to_bytes()).collect()
    }

    pub fn digest(&self) -> (Vec<Scalar>, CommitDigest) {
        crate::pok::commit_transcript(&self.element_bytes())
    }
}

/// Proofs for [`SetupElements`], same order; scalars are `1×1`.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct SetupProofs {
    #[serde(bound = "")]
    pub a: EntryPoKs<G1Point>,
    #[serde(bound = "")]
    pub u: EntryPoKs<G1Point>,
    #[serde(bound = "")]
    pub alpha_a: EntryPoKs<G1Point>,
    #[serde(bound = "")]
    pub alpha_u: EntryPoKs<G1Point>,
    #[serde(bound = "")]
    pub alpha_a_a: EntryPoKs<G1Point>,
    #[serde(bound = "")]
    pub alpha_u_u: EntryPoKs<G1Point>,
}

impl SetupProofs {
    pub fn items(&self) -> [&EntryPoKs<G1Point>; 6] {
        [
            &self.a,
            &self.u,
            &self.alpha_a,
            &self.alpha_u,
            &self.alpha_a_a,
            &self.alpha_u_u,
        ]
    }
}

/// One head of a contribution chain: `(V, θ, V')` or `(W, θ, W')`.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct ChainTriple {
    pub head: G1Matrix,
    #[serde(with = "encode::serde_canonical")]
    pub theta: G1Point,
    pub head_prime: G1Matrix,
}

/// Trusted-setup contract state.
#[derive(Debug, Serialize, Deserialize)]
pub struct SysState {
    pub aa_list: BTreeSet<Address>,
    pub ddl1: u64,
    pub ddl2: u64,
    pub ddl3: u64,
    pub h_collector: BTreeMap<Address, Sc>,
    pub unverified_elements: BTreeMap<Address, SetupElements>,
    pub verified_elements: BTreeMap<Address, SetupElements>,
    pub v_chain: Option<ChainTriple>,
    pub w_chain: Option<ChainTriple>,
    pub v_extended: BTreeSet<Address>,
    pub w_extended: BTreeSet<Address>,
}

/// Scalar wrapper so contract maps serialize through the canonical encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sc(#[serde(with = "encode::serde_canonical")] pub Scalar);

/// The vector-commitment elements of an authority contribution.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct AuthVcElements {
    pub z: DualSPair,
    pub alpha_z: DualSPair,
    pub alpha_z_z: DualSPair,
}

/// Per-slot secret-key images: `(g1^A, g1^{XᵀA})`, `(g1^A, g1^{τᵀA})` and
/// `(g2, g2^σ)`.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct SlotSkPairs {
    #[serde(bound = "")]
    pub x_pair: G1SPair,
    #[serde(bound = "")]
    pub tau_pair: G1SPair,
    #[serde(bound = "")]
    pub sigma_pair: G2SPair,
}

/// Reveal payload for the authority pipeline: secret-key images first, then
/// the vector-commitment duals, matching the commitment order.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct AuthReveal {
    pub sk: Vec<SlotSkPairs>,
    pub vc: AuthVcElements,
}

impl AuthReveal {
    pub fn element_bytes(&self) -> Vec<Vec<u8>> {
        let mut items = Vec::with_capacity(self.sk.len() * 3 + 3);
        for slot in &self.sk {
            items.push(slot.x_pair.to_bytes());
            items.push(slot.tau_pair.to_bytes());
            items.push(slot.sigma_pair.to_bytes());
        }
        items.push(self.vc.z.to_bytes());
        items.push(self.vc.alpha_z.to_bytes());
        items.push(self.vc.alpha_z_z.to_bytes());
        items
    }

    pub fn digest(&self) -> (Vec<Scalar>, CommitDigest) {
        crate::pok::commit_transcript(&self.element_bytes())
    }
}

/// Proofs for one slot's key images.
#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct SlotProofs {
    #[serde(bound = "")]
    pub x: LinearPoK<G1Point>,
    #[serde(bound = "")]
    pub tau: LinearPoK<G1Point>,
    #[serde(bound = "")]
    pub sigma: ScalarPoK<crate::algebra::G2Point>,
}

#[derive(Clone, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct AuthProofs {
    #[serde(bound = "")]
    pub sk: Vec<SlotProofs>,
    #[serde(bound = "")]
    pub z: ScalarPoK<G1Point>,
    #[serde(bound = "")]
    pub alpha_z: ScalarPoK<G1Point>,
    #[serde(bound = "")]
    pub alpha_z_z: ScalarPoK<G1Point>,
}

/// Cross terms published during the final authority stage, keyed by partner.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTermBundle {
    pub o: BTreeMap<Address, Pt>,
    pub theta: BTreeMap<Address, Pt>,
    pub o_prime: BTreeMap<Address, Pt>,
}

/// G1 wrapper for canonically serialized map values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pt(#[serde(with = "encode::serde_canonical")] pub G1Point);

/// Authority-setup contract state.
#[derive(Debug, Serialize, Deserialize)]
pub struct AuthState {
    pub ddl1: u64,
    pub ddl2: u64,
    pub ddl3: u64,
    /// Snapshot of the composite `g1^A`; doubles as the deployment marker.
    pub a_pub: Option<G1Matrix>,
    pub h_collector: BTreeMap<Address, Sc>,
    pub unverified: BTreeMap<Address, AuthReveal>,
    pub verified: BTreeMap<Address, AuthReveal>,
    pub counter: u32,
    pub index: BTreeMap<Address, u32>,
    pub verified_o: BTreeMap<Address, CrossTermBundle>,
    pub attribute_size: BTreeMap<Address, u32>,
}

/// Registration contract state.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct RegState {
    pub collector: BTreeMap<Address, Gid>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    #[serde(with = "hex::serde")]
    pub ct: Vec<u8>,
    pub kw: Option<String>,
}

/// Append-only metadata log.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct LogState {
    pub entries: Vec<LogEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub sender: Address,
    pub function: String,
    pub accepted: bool,
    pub reason: Option<String>,
    #[serde(with = "hex::serde")]
    pub state_hash: Vec<u8>,
}

/// Construction parameters for a fresh ledger.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LedgerConfig {
    pub aa_list: BTreeSet<Address>,
    pub sys_windows: (u64, u64, u64),
    pub auth_windows: (u64, u64, u64),
    /// Skips every proof-of-knowledge check in the prove stages. Only the
    /// attack demonstrations construct a ledger this way.
    pub insecure_no_pok: bool,
}

type LogSubscriber = Box<dyn FnMut(u64, &LogEntry) + Send>;

/// The whole simulated chain: all contract states, the block clock, the
/// transaction trace and the event subscribers.
#[derive(Serialize, Deserialize)]
pub struct Ledger {
    pub sys: SysState,
    pub auth: AuthState,
    pub reg: RegState,
    pub log: LogState,
    pub insecure_no_pok: bool,
    clock: u64,
    last_applied: u64,
    trace: Vec<TraceRecord>,
    #[serde(skip)]
    subscribers: Vec<LogSubscriber>,
}

impl std::fmt::Debug for Ledger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ledger")
            .field("clock", &self.clock)
            .field("trace_len", &self.trace.len())
            .finish()
    }
}

impl Ledger {
    pub fn new(config: LedgerConfig) -> Self {
        Ledger {
            sys: SysState {
                aa_list: config.aa_list,
                ddl1: config.sys_windows.0,
                ddl2: config.sys_windows.1,
                ddl3: config.sys_windows.2,
                h_collector: BTreeMap::new(),
                unverified_elements: BTreeMap::new(),
                verified_elements: BTreeMap::new(),
                v_chain: None,
                w_chain: None,
                v_extended: BTreeSet::new(),
                w_extended: BTreeSet::new(),
            },
            auth: AuthState {
                ddl1: config.auth_windows.0,
                ddl2: config.auth_windows.1,
                ddl3: config.auth_windows.2,
                a_pub: None,
                h_collector: BTreeMap::new(),
                unverified: BTreeMap::new(),
                verified: BTreeMap::new(),
                counter: 0,
                index: BTreeMap::new(),
                verified_o: BTreeMap::new(),
                attribute_size: BTreeMap::new(),
            },
            reg: RegState::default(),
            log: LogState::default(),
            insecure_no_pok: config.insecure_no_pok,
            clock: 0,
            last_applied: 0,
            trace: Vec::new(),
            subscribers: Vec::new(),
        }
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// The block clock only moves forward, driven explicitly.
    pub fn advance_clock(&mut self, to: u64) {
        assert!(to >= self.clock, "block clock cannot go backwards");
        self.clock = to;
    }

    pub fn context(&self, sender: Address, value: u64) -> TxContext {
        TxContext {
            sender,
            value,
            timestamp: self.clock,
        }
    }

    pub fn subscribe_log(&mut self, subscriber: LogSubscriber) {
        self.subscribers.push(subscriber);
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Newline-delimited trace export: sender, function, verdict, state hash.
    pub fn trace_lines(&self) -> String {
        self.trace
            .iter()
            .map(|r| {
                format!(
                    "0x{} {} {} 0x{}",
                    r.sender.to_hex(),
                    r.function,
                    if r.accepted {
                        "accept".to_string()
                    } else {
                        format!("reject:{}", r.reason.as_deref().unwrap_or("unknown"))
                    },
                    hex::encode(&r.state_hash)
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Digest of all contract states in a fixed order.
    pub fn state_hash(&self) -> [u8; 32] {
        let mut hasher = Blake2s256::new();
        hasher.update(b"datagov/v1/state");
        let mut buf = Vec::new();
        let mut put = |bytes: &[u8]| {
            buf.extend_from_slice(&(bytes.len() as u64).to_be_bytes());
            buf.extend_from_slice(bytes);
        };
        for addr in &self.sys.aa_list {
            put(&addr.0);
        }
        for (addr, h) in &self.sys.h_collector {
            put(&addr.0);
            put(&encode::encode_scalar(&h.0));
        }
        for (addr, elems) in &self.sys.unverified_elements {
            put(&addr.0);
            put(&encode::canonical_bytes(elems));
        }
        for (addr, elems) in &self.sys.verified_elements {
            put(&addr.0);
            put(&encode::canonical_bytes(elems));
        }
        for chain in [&self.sys.v_chain, &self.sys.w_chain] {
            match chain {
                Some(triple) => put(&encode::canonical_bytes(triple)),
                None => put(b"empty"),
            }
        }
        if let Some(a_pub) = &self.auth.a_pub {
            put(&encode::canonical_bytes(a_pub));
        }
        for (addr, h) in &self.auth.h_collector {
            put(&addr.0);
            put(&encode::encode_scalar(&h.0));
        }
        for (addr, reveal) in &self.auth.unverified {
            put(&addr.0);
            put(&encode::canonical_bytes(reveal));
        }
        for (addr, reveal) in &self.auth.verified {
            put(&addr.0);
            put(&encode::canonical_bytes(reveal));
        }
        put(&self.auth.counter.to_be_bytes());
        for (addr, idx) in &self.auth.index {
            put(&addr.0);
            put(&idx.to_be_bytes());
        }
        for (addr, bundle) in &self.auth.verified_o {
            put(&addr.0);
            for map in [&bundle.o, &bundle.theta, &bundle.o_prime] {
                for (partner, point) in map {
                    put(&partner.0);
                    put(&encode::encode_g1(&point.0));
                }
            }
        }
        for (addr, l) in &self.auth.attribute_size {
            put(&addr.0);
            put(&l.to_be_bytes());
        }
        for (addr, gid) in &self.reg.collector {
            put(&addr.0);
            put(gid.as_bytes());
        }
        for entry in &self.log.entries {
            put(&entry.ct);
            put(entry.kw.as_deref().unwrap_or("").as_bytes());
        }
        hasher.update(&buf);
        let digest = hasher.finalize();
        let mut out = [0u8; 32];
        out.copy_from_slice(&digest);
        out
    }

    fn record(&mut self, function: &'static str, ctx: &TxContext, result: &Result<(), Rejection>) {
        if result.is_ok() {
            self.last_applied = self.last_applied.max(ctx.timestamp);
        }
        let state_hash = self.state_hash().to_vec();
        self.trace.push(TraceRecord {
            sender: ctx.sender,
            function: function.to_string(),
            accepted: result.is_ok(),
            reason: result.as_ref().err().map(|e| e.to_string()),
            state_hash,
        });
    }

    fn check_clock(&self, ctx: &TxContext) -> Result<(), Rejection> {
        if ctx.timestamp < self.last_applied {
            return Err(Rejection::ClockRegression);
        }
        Ok(())
    }

    // ---- SC_sys -----------------------------------------------------------

    pub fn sc_sys_commit(&mut self, ctx: TxContext, h: CommitDigest) -> Result<(), Rejection> {
        let result = self.sys_commit_inner(&ctx, h);
        self.record("sc_sys.commit", &ctx, &result);
        result
    }

    fn sys_commit_inner(&mut self, ctx: &TxContext, h: CommitDigest) -> Result<(), Rejection> {
        self.check_clock(ctx)?;
        if !self.sys.aa_list.contains(&ctx.sender) {
            return Err(Rejection::NotAuthorized);
        }
        if ctx.timestamp > self.sys.ddl1 {
            return Err(Rejection::OutsideWindow {
                entry: "sc_sys.commit",
            });
        }
        // first submission wins; duplicates are silently ignored
        self.sys.h_collector.entry(ctx.sender).or_insert(Sc(h.0));
        Ok(())
    }

    pub fn sc_sys_reveal(
        &mut self,
        ctx: TxContext,
        elements: SetupElements,
    ) -> Result<(), Rejection> {
        let result = self.sys_reveal_inner(&ctx, elements);
        self.record("sc_sys.reveal", &ctx, &result);
        result
    }

    fn sys_reveal_inner(
        &mut self,
        ctx: &TxContext,
        elements: SetupElements,
    ) -> Result<(), Rejection> {
        self.check_clock(ctx)?;
        let committed = self
            .sys
            .h_collector
            .get(&ctx.sender)
            .ok_or(Rejection::NoCommitment)?;
        if ctx.timestamp > self.sys.ddl1 {
            return Err(Rejection::OutsideWindow {
                entry: "sc_sys.reveal",
            });
        }
        let (_, recomputed) = elements.digest();
        if recomputed.0 != committed.0 {
            return Err(Rejection::DigestMismatch);
        }
        // first reveal wins, matching the commit semantics
        self.sys
            .unverified_elements
            .entry(ctx.sender)
            .or_insert(elements);
        Ok(())
    }

    pub fn sc_sys_prove(&mut self, ctx: TxContext, proofs: SetupProofs) -> Result<(), Rejection> {
        let result = self.sys_prove_inner(&ctx, proofs);
        self.record("sc_sys.prove", &ctx, &result);
        result
    }

    fn sys_prove_inner(&mut self, ctx: &TxContext, proofs: SetupProofs) -> Result<(), Rejection> {
        self.check_clock(ctx)?;
        if ctx.timestamp < self.sys.ddl1 || ctx.timestamp > self.sys.ddl2 {
            return Err(Rejection::OutsideWindow {
                entry: "sc_sys.prove",
            });
        }
        let elements = self
            .sys
            .unverified_elements
            .get(&ctx.sender)
            .ok_or(Rejection::NothingToProve)?;
        let committed = self
            .sys
            .h_collector
            .get(&ctx.sender)
            .ok_or(Rejection::NoCommitment)?;
        let h = CommitDigest(committed.0);
        let element_bytes = elements.element_bytes();
        for (((pair, proof), bytes), name) in elements
            .items()
            .iter()
            .zip(proofs.items().iter())
            .zip(element_bytes.iter())
            .zip(SetupElements::NAMES.iter())
        {
            if !pair.same_ratio_ok() {
                return Err(Rejection::SameRatioFailed { element: name });
            }
            if !self.insecure_no_pok {
                let h_s = crate::pok::element_digest(bytes);
                let context = pok_context(&h, &h_s);
                if !nizk_verify_entrywise(&pair.g1, proof, &context) {
                    return Err(Rejection::ProofFailed { element: name });
                }
            }
        }
        let elements = self
            .sys
            .unverified_elements
            .remove(&ctx.sender)
            .expect("presence checked above");
        self.sys.verified_elements.insert(ctx.sender, elements);
        Ok(())
    }

    pub fn sc_sys_compute(&mut self, ctx: TxContext, triple: ChainTriple) -> Result<(), Rejection> {
        let result = self.sys_chain_inner(&ctx, triple, ChainKind::V);
        self.record("sc_sys.compute", &ctx, &result);
        result
    }

    pub fn sc_sys_generate(
        &mut self,
        ctx: TxContext,
        triple: ChainTriple,
    ) -> Result<(), Rejection> {
        let result = self.sys_chain_inner(&ctx, triple, ChainKind::W);
        self.record("sc_sys.generate", &ctx, &result);
        result
    }

    fn sys_chain_inner(
        &mut self,
        ctx: &TxContext,
        triple: ChainTriple,
        kind: ChainKind,
    ) -> Result<(), Rejection> {
        self.check_clock(ctx)?;
        let entry = match kind {
            ChainKind::V => "sc_sys.compute",
            ChainKind::W => "sc_sys.generate",
        };
        if ctx.timestamp < self.sys.ddl2 || ctx.timestamp > self.sys.ddl3 {
            return Err(Rejection::OutsideWindow { entry });
        }
        if self.sys.unverified_elements.contains_key(&ctx.sender) {
            return Err(Rejection::NothingToProve);
        }
        let elements = self
            .sys
            .verified_elements
            .get(&ctx.sender)
            .ok_or(Rejection::NoVerifiedElements)?;
        let extended = match kind {
            ChainKind::V => &self.sys.v_extended,
            ChainKind::W => &self.sys.w_extended,
        };
        if extended.contains(&ctx.sender) {
            return Err(Rejection::AlreadyExtended);
        }
        let (base_pair, alpha_pair, scaled_pair) = match kind {
            ChainKind::V => (&elements.a, &elements.alpha_a, &elements.alpha_a_a),
            ChainKind::W => (&elements.u, &elements.alpha_u, &elements.alpha_u_u),
        };
        let chain = match kind {
            ChainKind::V => &self.sys.v_chain,
            ChainKind::W => &self.sys.w_chain,
        };
        if let Some(current) = chain {
            // each incoming triple must be a proper multiple of the head,
            // certified against the caller's own verified s-pairs
            if !same_ratio_matrix(
                (&current.head, &triple.head),
                (&base_pair.g2.base, &base_pair.g2.power),
            ) {
                return Err(Rejection::ChainCheckFailed { check: "head" });
            }
            if !same_ratio(
                (&current.theta, &triple.theta),
                (
                    alpha_pair.g2.base.get(0, 0),
                    alpha_pair.g2.power.get(0, 0),
                ),
            ) {
                return Err(Rejection::ChainCheckFailed { check: "theta" });
            }
            if !same_ratio_matrix(
                (&current.head_prime, &triple.head_prime),
                (&scaled_pair.g2.base, &scaled_pair.g2.power),
            ) {
                return Err(Rejection::ChainCheckFailed { check: "head_prime" });
            }
        } else if triple.head.dims() != base_pair.g1.base.dims()
            || triple.head_prime.dims() != scaled_pair.g1.base.dims()
        {
            return Err(Rejection::ChainCheckFailed { check: "dimensions" });
        }
        match kind {
            ChainKind::V => {
                self.sys.v_chain = Some(triple);
                self.sys.v_extended.insert(ctx.sender);
            }
            ChainKind::W => {
                self.sys.w_chain = Some(triple);
                self.sys.w_extended.insert(ctx.sender);
            }
        }
        Ok(())
    }

    // ---- SC_auth ----------------------------------------------------------

    /// Deploys the authority contract, snapshotting the finished `g1^A`
    /// chain head as the base for key-image validation.
    pub fn deploy_auth(&mut self) -> Result<(), Rejection> {
        let head = self
            .sys
            .v_chain
            .as_ref()
            .ok_or(Rejection::NotDeployed)?
            .head
            .clone();
        self.auth.a_pub = Some(head);
        Ok(())
    }

    pub fn sc_auth_commit(&mut self, ctx: TxContext, h: CommitDigest) -> Result<(), Rejection> {
        let result = self.auth_commit_inner(&ctx, h);
        self.record("sc_auth.commit", &ctx, &result);
        result
    }

    fn auth_commit_inner(&mut self, ctx: &TxContext, h: CommitDigest) -> Result<(), Rejection> {
        self.check_clock(ctx)?;
        if self.auth.a_pub.is_none() {
            return Err(Rejection::NotDeployed);
        }
        if !self.sys.aa_list.contains(&ctx.sender) {
            return Err(Rejection::NotAuthorized);
        }
        if ctx.timestamp > self.auth.ddl1 {
            return Err(Rejection::OutsideWindow {
                entry: "sc_auth.commit",
            });
        }
        self.auth.h_collector.entry(ctx.sender).or_insert(Sc(h.0));
        Ok(())
    }

    pub fn sc_auth_reveal(&mut self, ctx: TxContext, reveal: AuthReveal) -> Result<(), Rejection> {
        let result = self.auth_reveal_inner(&ctx, reveal);
        self.record("sc_auth.reveal", &ctx, &result);
        result
    }

    fn auth_reveal_inner(&mut self, ctx: &TxContext, reveal: AuthReveal) -> Result<(), Rejection> {
        self.check_clock(ctx)?;
        let committed = self
            .auth
            .h_collector
            .get(&ctx.sender)
            .ok_or(Rejection::NoCommitment)?;
        if ctx.timestamp > self.auth.ddl1 {
            return Err(Rejection::OutsideWindow {
                entry: "sc_auth.reveal",
            });
        }
        if self.auth.unverified.contains_key(&ctx.sender) {
            return Err(Rejection::AlreadyRevealed);
        }
        let (_, recomputed) = reveal.digest();
        if recomputed.0 != committed.0 {
            return Err(Rejection::DigestMismatch);
        }
        self.auth.unverified.insert(ctx.sender, reveal);
        Ok(())
    }

    pub fn sc_auth_prove(&mut self, ctx: TxContext, proofs: AuthProofs) -> Result<(), Rejection> {
        let result = self.auth_prove_inner(&ctx, proofs);
        self.record("sc_auth.prove", &ctx, &result);
        result
    }

    fn auth_prove_inner(&mut self, ctx: &TxContext, proofs: AuthProofs) -> Result<(), Rejection> {
        self.check_clock(ctx)?;
        if ctx.timestamp < self.auth.ddl1 || ctx.timestamp > self.auth.ddl2 {
            return Err(Rejection::OutsideWindow {
                entry: "sc_auth.prove",
            });
        }
        let reveal = self
            .auth
            .unverified
            .get(&ctx.sender)
            .ok_or(Rejection::NothingToProve)?;
        if proofs.sk.len() != reveal.sk.len() {
            return Err(Rejection::ProofFailed { element: "slots" });
        }
        let committed = self
            .auth
            .h_collector
            .get(&ctx.sender)
            .ok_or(Rejection::NoCommitment)?;
        let h = CommitDigest(committed.0);
        let a_pub = self.auth.a_pub.as_ref().ok_or(Rejection::NotDeployed)?;

        let vc_items: [(&DualSPair, &ScalarPoK<G1Point>, &'static str); 3] = [
            (&reveal.vc.z, &proofs.z, "z"),
            (&reveal.vc.alpha_z, &proofs.alpha_z, "alpha_z"),
            (&reveal.vc.alpha_z_z, &proofs.alpha_z_z, "alpha_z*z"),
        ];
        for (pair, _, name) in &vc_items {
            if !pair.same_ratio_ok() {
                return Err(Rejection::SameRatioFailed { element: name });
            }
        }
        if !self.insecure_no_pok {
            let element_bytes = reveal.element_bytes();
            let mut iter = element_bytes.iter();
            for (slot, slot_proofs) in reveal.sk.iter().zip(&proofs.sk) {
                // key images must be anchored to the ceremony base
                if slot.x_pair.base != *a_pub || slot.tau_pair.base != *a_pub {
                    return Err(Rejection::WrongKeyBase);
                }
                let x_bytes = iter.next().expect("sk items present");
                let ctx_x = pok_context(&h, &crate::pok::element_digest(x_bytes));
                if !nizk_verify_linear(&slot.x_pair, &slot_proofs.x, &ctx_x) {
                    return Err(Rejection::ProofFailed { element: "X" });
                }
                let tau_bytes = iter.next().expect("sk items present");
                let ctx_tau = pok_context(&h, &crate::pok::element_digest(tau_bytes));
                if !nizk_verify_linear(&slot.tau_pair, &slot_proofs.tau, &ctx_tau) {
                    return Err(Rejection::ProofFailed { element: "tau" });
                }
                let sigma_bytes = iter.next().expect("sk items present");
                let ctx_sigma = pok_context(&h, &crate::pok::element_digest(sigma_bytes));
                if !crate::pok::nizk_verify(&slot.sigma_pair, &slot_proofs.sigma, &ctx_sigma) {
                    return Err(Rejection::ProofFailed { element: "sigma" });
                }
            }
            for ((pair, proof, name), bytes) in vc_items.iter().zip(iter) {
                let context = pok_context(&h, &crate::pok::element_digest(bytes));
                if !crate::pok::nizk_verify(&pair.g1, proof, &context) {
                    return Err(Rejection::ProofFailed { element: name });
                }
            }
        }
        let reveal = self
            .auth
            .unverified
            .remove(&ctx.sender)
            .expect("presence checked above");
        self.auth.verified.insert(ctx.sender, reveal);
        self.auth.counter += 1;
        self.auth.index.insert(ctx.sender, self.auth.counter);
        Ok(())
    }

    pub fn sc_auth_generate(
        &mut self,
        ctx: TxContext,
        bundle: CrossTermBundle,
        attribute_size: u32,
    ) -> Result<(), Rejection> {
        let result = self.auth_generate_inner(&ctx, bundle, attribute_size);
        self.record("sc_auth.generate", &ctx, &result);
        result
    }

    fn auth_generate_inner(
        &mut self,
        ctx: &TxContext,
        bundle: CrossTermBundle,
        attribute_size: u32,
    ) -> Result<(), Rejection> {
        self.check_clock(ctx)?;
        if !self.sys.aa_list.contains(&ctx.sender) {
            return Err(Rejection::NotAuthorized);
        }
        if ctx.timestamp > self.auth.ddl3 {
            return Err(Rejection::OutsideWindow {
                entry: "sc_auth.generate",
            });
        }
        if attribute_size == 0 {
            return Err(Rejection::BadAttributeSize);
        }
        let own = self
            .auth
            .verified
            .get(&ctx.sender)
            .ok_or(Rejection::NoVerifiedElements)?;
        let partners: BTreeSet<Address> = self
            .auth
            .verified
            .keys()
            .filter(|a| **a != ctx.sender)
            .copied()
            .collect();
        let provided: BTreeSet<Address> = bundle.o.keys().copied().collect();
        if provided != partners
            || bundle.theta.keys().copied().collect::<BTreeSet<_>>() != partners
            || bundle.o_prime.keys().copied().collect::<BTreeSet<_>>() != partners
        {
            return Err(Rejection::IncompletePartnerSet);
        }
        let my_z = (&own.vc.z.g2.base, &own.vc.z.g2.power);
        let my_alpha = (&own.vc.alpha_z.g2.base, &own.vc.alpha_z.g2.power);
        let my_scaled = (&own.vc.alpha_z_z.g2.base, &own.vc.alpha_z_z.g2.power);
        for partner in &partners {
            let theirs = &self.auth.verified[partner];
            let o_j = theirs.vc.z.g1.power.get(0, 0);
            let theta_j = theirs.vc.alpha_z.g1.power.get(0, 0);
            let scaled_j = theirs.vc.alpha_z_z.g1.power.get(0, 0);
            if !same_ratio((o_j, &bundle.o[partner].0), (my_z.0.get(0, 0), my_z.1.get(0, 0))) {
                return Err(Rejection::ChainCheckFailed { check: "o" });
            }
            if !same_ratio(
                (theta_j, &bundle.theta[partner].0),
                (my_alpha.0.get(0, 0), my_alpha.1.get(0, 0)),
            ) {
                return Err(Rejection::ChainCheckFailed { check: "theta_o" });
            }
            if !same_ratio(
                (scaled_j, &bundle.o_prime[partner].0),
                (my_scaled.0.get(0, 0), my_scaled.1.get(0, 0)),
            ) {
                return Err(Rejection::ChainCheckFailed { check: "o_prime" });
            }
        }
        self.auth.verified_o.insert(ctx.sender, bundle);
        self.auth.attribute_size.insert(ctx.sender, attribute_size);
        Ok(())
    }

    // ---- SC_reg -----------------------------------------------------------

    pub fn sc_reg_register(&mut self, ctx: TxContext) -> Result<Gid, Rejection> {
        let result = self.reg_register_inner(&ctx);
        let unit = result.as_ref().map(|_| ()).map_err(|e| e.clone());
        self.record("sc_reg.user_register", &ctx, &unit);
        result
    }

    fn reg_register_inner(&mut self, ctx: &TxContext) -> Result<Gid, Rejection> {
        self.check_clock(ctx)?;
        if ctx.value <= 1_000_000 {
            return Err(Rejection::FeeTooLow);
        }
        let gid = Gid::from_address(&ctx.sender);
        self.reg.collector.insert(ctx.sender, gid);
        Ok(gid)
    }

    // ---- SC_log -----------------------------------------------------------

    pub fn sc_log_append(
        &mut self,
        ctx: TxContext,
        ct: Vec<u8>,
        kw: Option<String>,
    ) -> Result<u64, Rejection> {
        let check = self.check_clock(&ctx);
        if let Err(e) = &check {
            let failed: Result<(), Rejection> = Err(e.clone());
            self.record("sc_log.log", &ctx, &failed);
            return Err(e.clone());
        }
        let entry = LogEntry { ct, kw };
        self.log.entries.push(entry);
        let index = (self.log.entries.len() - 1) as u64;
        let ok: Result<(), Rejection> = Ok(());
        self.record("sc_log.log", &ctx, &ok);
        let entry = self.log.entries.last().expect("just pushed").clone();
        for subscriber in &mut self.subscribers {
            subscriber(index, &entry);
        }
        Ok(index)
    }

    /// `get(-1)` returns the whole log; a valid index returns one entry.
    pub fn sc_log_get(&self, index: i64) -> Result<Vec<LogEntry>, Rejection> {
        if index == -1 {
            return Ok(self.log.entries.clone());
        }
        let idx = usize::try_from(index).map_err(|_| Rejection::InvalidIndex)?;
        self.log
            .entries
            .get(idx)
            .map(|e| vec![e.clone()])
            .ok_or(Rejection::InvalidIndex)
    }

    // ---- SC_util ----------------------------------------------------------
    // Thin delegates; the contracts above call the same primitives.

    pub fn util_hash(data: &[u8]) -> Scalar {
        commit_hash(data)
    }

    pub fn util_same_ratio(
        p1: (&G1Point, &G1Point),
        p2: (&crate::algebra::G2Point, &crate::algebra::G2Point),
    ) -> bool {
        same_ratio(p1, p2)
    }

    pub fn util_check_pok(
        rp: &G1SPair,
        proof: &ScalarPoK<G1Point>,
        context: &[u8],
    ) -> bool {
        crate::pok::nizk_verify(rp, proof, context)
    }
}

#[derive(Clone, Copy)]
enum ChainKind {
    V,
    W,
}
