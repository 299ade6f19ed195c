//! Content-addressed storage with an in-memory implementation, authenticated
//! symmetric encryption, and the KEM/DEM bridge mapping metadata into the
//! predicate-encryption payload space.
//!
//! Files are never encrypted under the slot keys directly. A fresh symmetric
//! key encrypts the file; the key and the content address travel in a small
//! metadata record sealed under a random target-group element carried by the
//! predicate ciphertext. A wrong-policy decryption yields a uniform group
//! element, so the authentication tag fails instead of returning garbage.

use crate::abe::{
    decrypt, encode_policy, encrypt, AbeCiphertext, AbeError, AttributeVector, KeyPart,
    PolicyMode, PolicyVector, SlotPublic, SystemParams,
};
use crate::algebra::{encode, gt_generator, G2Point, GtPoint, Scalar};
use crate::ledger::{Address, Ledger, Rejection};
use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Nonce};
use ark_ff::UniformRand;
use ark_std::Zero;
use blake2::{Blake2s256, Digest};
use rand::{CryptoRng, RngCore};
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::sync::RwLock;
use thiserror::Error;

const CAS_TAG: &[u8] = b"datagov/v1/cas";
const KEM_TAG: &[u8] = b"datagov/v1/kem";
const NONCE_LEN: usize = 12;
const KEY_LEN: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StorageError {
    #[error("content not found")]
    NotFound,
    #[error("authentication failure")]
    AuthFailure,
    #[error("policy not satisfied")]
    PolicyDenied,
    #[error("malformed payload: {0}")]
    Malformed(&'static str),
    #[error("encryption error: {0}")]
    Abe(#[from] AbeError),
    #[error("ledger rejection: {0}")]
    Ledger(#[from] Rejection),
}

/// 32-byte digest addressing stored bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentHash(pub [u8; 32]);

impl ContentHash {
    pub fn digest(bytes: &[u8]) -> Self {
        let mut hasher = Blake2s256::new();
        hasher.update(CAS_TAG);
        hasher.update(bytes);
        let mut out = [0u8; 32];
        out.copy_from_slice(&hasher.finalize());
        ContentHash(out)
    }

    pub fn to_hex(self) -> String {
        hex::encode(self.0)
    }
}

/// Content-addressed store: bytes retrievable by their digest.
pub trait ContentStore {
    fn put(&self, bytes: &[u8]) -> ContentHash;
    fn get(&self, hash: &ContentHash) -> Result<Vec<u8>, StorageError>;
    fn has(&self, hash: &ContentHash) -> bool;
}

/// In-memory store; safe for concurrent readers with serialized writers.
#[derive(Debug, Default)]
pub struct MemoryStore {
    blocks: RwLock<BTreeMap<[u8; 32], Vec<u8>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn blocks(&self) -> Vec<(ContentHash, Vec<u8>)> {
        self.blocks
            .read()
            .expect("store lock")
            .iter()
            .map(|(k, v)| (ContentHash(*k), v.clone()))
            .collect()
    }

    pub fn insert_raw(&self, hash: ContentHash, bytes: Vec<u8>) {
        self.blocks.write().expect("store lock").insert(hash.0, bytes);
    }
}

impl ContentStore for MemoryStore {
    fn put(&self, bytes: &[u8]) -> ContentHash {
        let hash = ContentHash::digest(bytes);
        self.blocks
            .write()
            .expect("store lock")
            .entry(hash.0)
            .or_insert_with(|| bytes.to_vec());
        hash
    }

    fn get(&self, hash: &ContentHash) -> Result<Vec<u8>, StorageError> {
        self.blocks
            .read()
            .expect("store lock")
            .get(&hash.0)
            .cloned()
            .ok_or(StorageError::NotFound)
    }

    fn has(&self, hash: &ContentHash) -> bool {
        self.blocks.read().expect("store lock").contains_key(&hash.0)
    }
}

/// Authenticated encryption with a fresh 96-bit nonce; output is
/// `nonce || ciphertext+tag`.
pub fn dem_encrypt<R: RngCore + CryptoRng>(
    key: &[u8; KEY_LEN],
    plaintext: &[u8],
    rng: &mut R,
) -> Vec<u8> {
    let cipher = Aes256Gcm::new(key.into());
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let mut out = nonce.to_vec();
    let ct = cipher
        .encrypt(
            Nonce::from_slice(&nonce),
            Payload {
                msg: plaintext,
                aad: &[],
            },
        )
        .expect("aes-gcm encryption is infallible for in-memory buffers");
    out.extend_from_slice(&ct);
    out
}

pub fn dem_decrypt(key: &[u8; KEY_LEN], blob: &[u8]) -> Result<Vec<u8>, StorageError> {
    if blob.len() < NONCE_LEN + 16 {
        return Err(StorageError::Malformed("dem blob too short"));
    }
    let cipher = Aes256Gcm::new(key.into());
    let (nonce, ct) = blob.split_at(NONCE_LEN);
    cipher
        .decrypt(Nonce::from_slice(nonce), Payload { msg: ct, aad: &[] })
        .map_err(|_| StorageError::AuthFailure)
}

/// Metadata sealed for receivers: the file key and the content address.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metadata {
    pub ak: [u8; KEY_LEN],
    pub loc: ContentHash,
}

impl Metadata {
    const VERSION: u8 = 1;
    const WIRE_LEN: usize = 1 + KEY_LEN + 32;

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::WIRE_LEN);
        out.push(Self::VERSION);
        out.extend_from_slice(&self.ak);
        out.extend_from_slice(&self.loc.0);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StorageError> {
        if bytes.len() != Self::WIRE_LEN || bytes[0] != Self::VERSION {
            return Err(StorageError::Malformed("metadata"));
        }
        let mut ak = [0u8; KEY_LEN];
        ak.copy_from_slice(&bytes[1..1 + KEY_LEN]);
        let mut loc = [0u8; 32];
        loc.copy_from_slice(&bytes[1 + KEY_LEN..]);
        Ok(Metadata {
            ak,
            loc: ContentHash(loc),
        })
    }
}

/// Derives the metadata encryption key from the encapsulated group element.
pub fn kem_key(element: &GtPoint) -> [u8; KEY_LEN] {
    let mut hasher = Blake2s256::new();
    hasher.update(KEM_TAG);
    hasher.update(encode::encode_gt(element));
    let mut out = [0u8; KEY_LEN];
    out.copy_from_slice(&hasher.finalize());
    out
}

/// Predicate ciphertext carrying the key encapsulation, plus the sealed
/// metadata blob.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SealedMetadata {
    pub abe_ct: AbeCiphertext,
    pub dem: Vec<u8>,
}

impl SealedMetadata {
    const VERSION: u8 = 1;

    /// Wire format: version byte || u32 length || predicate ciphertext || dem blob.
    pub fn to_bytes(&self) -> Vec<u8> {
        let abe = self.abe_ct.to_bytes();
        let mut out = Vec::with_capacity(5 + abe.len() + self.dem.len());
        out.push(Self::VERSION);
        out.extend_from_slice(&(abe.len() as u32).to_be_bytes());
        out.extend_from_slice(&abe);
        out.extend_from_slice(&self.dem);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StorageError> {
        if bytes.len() < 5 || bytes[0] != Self::VERSION {
            return Err(StorageError::Malformed("sealed metadata header"));
        }
        let abe_len = u32::from_be_bytes(bytes[1..5].try_into().unwrap()) as usize;
        if bytes.len() < 5 + abe_len {
            return Err(StorageError::Malformed("sealed metadata length"));
        }
        let abe_ct = AbeCiphertext::from_bytes(&bytes[5..5 + abe_len])
            .map_err(|_| StorageError::Malformed("predicate ciphertext"))?;
        Ok(SealedMetadata {
            abe_ct,
            dem: bytes[5 + abe_len..].to_vec(),
        })
    }
}

/// Read handles over the public system state, as a sharer sees it.
pub struct SystemHandles<'a> {
    pub params: &'a SystemParams,
    pub slot_pubs: &'a [SlotPublic],
    pub mode: PolicyMode,
}

/// Everything a user holds after key generation.
pub struct UserKeyMaterial {
    pub key_parts: Vec<KeyPart>,
    pub v: AttributeVector,
    pub h_pub: Vec<G2Point>,
}

/// Encrypts and stores a file, seals its metadata under the given policy and
/// appends the sealed record to the on-ledger log. Returns the log index.
#[allow(clippy::too_many_arguments)]
pub fn share_file<S: ContentStore, R: RngCore + CryptoRng>(
    store: &S,
    ledger: &mut Ledger,
    sender: Address,
    handles: &SystemHandles<'_>,
    required: &BTreeSet<usize>,
    file: &[u8],
    keyword: Option<&str>,
    rng: &mut R,
) -> Result<u64, StorageError> {
    let policy = encode_policy(required, handles.params.slots, handles.mode, rng)?;
    let entry = seal_file(store, handles, &policy, file, rng)?;
    let ctx = ledger.context(sender, 0);
    let index = ledger.sc_log_append(ctx, entry.to_bytes(), keyword.map(|s| s.to_string()))?;
    Ok(index)
}

/// The storage-side half of [`share_file`], without the ledger append.
pub fn seal_file<S: ContentStore, R: RngCore + CryptoRng>(
    store: &S,
    handles: &SystemHandles<'_>,
    policy: &PolicyVector,
    file: &[u8],
    rng: &mut R,
) -> Result<SealedMetadata, StorageError> {
    let mut ak = [0u8; KEY_LEN];
    rng.fill_bytes(&mut ak);
    let ct_file = dem_encrypt(&ak, file, rng);
    let loc = store.put(&ct_file);
    let metadata = Metadata { ak, loc };
    // encapsulate a random target-group element and seal the metadata under
    // the key derived from it
    let r = loop {
        let r = Scalar::rand(rng);
        if !r.is_zero() {
            break r;
        }
    };
    let kem_element = gt_generator() * r;
    let abe_ct = encrypt(handles.params, handles.slot_pubs, policy, &kem_element, rng)?;
    let dem = dem_encrypt(&kem_key(&kem_element), &metadata.to_bytes(), rng);
    Ok(SealedMetadata { abe_ct, dem })
}

/// Recovers a file from a sealed log entry. A policy the user's attributes
/// do not satisfy surfaces as [`StorageError::PolicyDenied`]; it never
/// produces garbage bytes.
pub fn retrieve_file<S: ContentStore>(
    store: &S,
    entry_bytes: &[u8],
    user: &UserKeyMaterial,
) -> Result<Vec<u8>, StorageError> {
    let sealed = SealedMetadata::from_bytes(entry_bytes)?;
    let kem_element = decrypt(&user.key_parts, &user.v, &user.h_pub, &sealed.abe_ct)?;
    let metadata_bytes = dem_decrypt(&kem_key(&kem_element), &sealed.dem)
        .map_err(|_| StorageError::PolicyDenied)?;
    let metadata = Metadata::from_bytes(&metadata_bytes)?;
    let ct_file = store.get(&metadata.loc)?;
    dem_decrypt(&metadata.ak, &ct_file)
}
