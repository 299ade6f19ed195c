//! Policy-hiding multi-authority attribute-based data sharing.
//!
//! This crate implements a complete data-governance stack on top of a
//! deterministic in-process ledger simulation:
//!
//! * [`algebra`] — bilinear-group arithmetic over BLS12-381, structured
//!   matrix sampling and the hashing oracles every other module builds on.
//! * [`pok`] — s-pairs, commit/reveal digests and Schnorr-style
//!   non-interactive proofs of knowledge.
//! * [`vc`] — position-binding vector commitments that hide a user's full
//!   attribute vector from individual authorities.
//! * [`abe`] — the decentralized inner-product predicate encryption core:
//!   slot keys, masking terms, policy encoding, encryption and decryption.
//! * [`ledger`] — the five governance contracts (`SC_sys`, `SC_auth`,
//!   `SC_reg`, `SC_log`, `SC_util`) as a deterministic state machine with a
//!   controllable block clock.
//! * [`ceremony`] — participant-side logic for the multi-party trusted
//!   setup and authority setup, plus transcript persistence.
//! * [`storage`] — a content-addressed store with the KEM/DEM bridge used
//!   for hybrid encrypted file sharing.
//! * [`attacks`] — executable adversaries for the rogue-key and
//!   secret-vector-inference attacks together with their mitigations.

pub mod abe;
pub mod algebra;
pub mod attacks;
pub mod ceremony;
pub mod ledger;
pub mod pok;
pub mod storage;
pub mod vc;

pub use algebra::{G1Point, G2Point, GtPoint, Scalar};
