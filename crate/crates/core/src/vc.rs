//! Position-binding vector commitments. A data user commits to the
//! per-authority attribute slices and opens a single position to each
//! authority, so no authority sees the full attribute vector.

use crate::algebra::{
    commit_hash, encode, g2_generator, pairing, same_ratio, G1Point, G2Point, Scalar,
};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use ark_std::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VcError {
    #[error("message count does not match parameter size")]
    LengthMismatch,
    #[error("position {0} out of range")]
    IndexOutOfRange(usize),
    #[error("parameters are inconsistent: {0}")]
    BadParams(&'static str),
}

/// Global parameters: `o_i = g1^{z_i}`, cross terms `o_{i,j} = g1^{z_i z_j}`
/// for `i ≠ j`, and the verifier-side images `g2^{z_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcParams {
    #[serde(with = "encode::serde_canonical")]
    pub o: Vec<G1Point>,
    #[serde(with = "serde_cross")]
    pub o_cross: BTreeMap<(usize, usize), G1Point>,
    #[serde(with = "encode::serde_canonical")]
    pub z_pub: Vec<G2Point>,
}

mod serde_cross {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(usize, usize), G1Point>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let rows: Vec<(u64, u64, String)> = map
            .iter()
            .map(|((i, j), p)| (*i as u64, *j as u64, hex::encode(encode::encode_g1(p))))
            .collect();
        serde::Serialize::serialize(&rows, serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<(usize, usize), G1Point>, D::Error> {
        let rows: Vec<(u64, u64, String)> = serde::Deserialize::deserialize(deserializer)?;
        let mut map = BTreeMap::new();
        for (i, j, hex_point) in rows {
            let bytes = hex::decode(&hex_point).map_err(serde::de::Error::custom)?;
            let p = encode::decode_g1(&bytes).map_err(serde::de::Error::custom)?;
            map.insert((i as usize, j as usize), p);
        }
        Ok(map)
    }
}

impl VcParams {
    pub fn positions(&self) -> usize {
        self.o.len()
    }

    /// Checks cross-term symmetry and the pairing relation tying every cross
    /// term to its publisher's z-image.
    pub fn validate(&self) -> Result<(), VcError> {
        let n = self.o.len();
        if self.z_pub.len() != n {
            return Err(VcError::BadParams("z image count"));
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let cross = self
                    .o_cross
                    .get(&(i, j))
                    .ok_or(VcError::BadParams("missing cross term"))?;
                let twin = self
                    .o_cross
                    .get(&(j, i))
                    .ok_or(VcError::BadParams("missing cross term"))?;
                if cross != twin {
                    return Err(VcError::BadParams("asymmetric cross terms"));
                }
                if !same_ratio((&self.o[j], cross), (&g2_generator(), &self.z_pub[i])) {
                    return Err(VcError::BadParams("cross term fails ratio check"));
                }
            }
        }
        Ok(())
    }

    fn cross(&self, i: usize, j: usize) -> Result<&G1Point, VcError> {
        self.o_cross
            .get(&(i, j))
            .ok_or(VcError::BadParams("missing cross term"))
    }
}

/// Committed value for one authority slice: `m = COMMIT(bits || nonce)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize)]
pub struct VcMessage {
    pub m: Scalar,
}

/// `bits` is the authority-local attribute slice in mapping-table order,
/// most-significant attribute first, `'1'` meaning possessed.
pub fn vc_message(bits: &str, nonce: &Scalar) -> VcMessage {
    debug_assert!(bits.bytes().all(|b| b == b'0' || b == b'1'));
    let mut input = bits.as_bytes().to_vec();
    input.extend_from_slice(&encode::encode_scalar(nonce));
    VcMessage {
        m: commit_hash(&input),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct VcCommitment {
    #[serde(with = "encode::serde_canonical")]
    pub c: G1Point,
}

/// `C = ∏_i o_i^{m_i}`.
pub fn vc_commit(params: &VcParams, msgs: &[VcMessage]) -> Result<VcCommitment, VcError> {
    if msgs.len() != params.positions() {
        return Err(VcError::LengthMismatch);
    }
    let c = params
        .o
        .iter()
        .zip(msgs)
        .fold(G1Point::zero(), |acc, (o, msg)| acc + *o * msg.m);
    Ok(VcCommitment { c })
}

/// Opening for one position, carried to the authority together with the
/// nonce so it can recompute the committed value from the slice it issued.
#[derive(Clone, Copy, Debug, PartialEq, Eq, CanonicalSerialize, CanonicalDeserialize, Serialize, Deserialize)]
pub struct VcOpening {
    #[serde(with = "encode::serde_canonical")]
    pub op: G1Point,
    pub position: usize,
    #[serde(with = "encode::serde_canonical")]
    pub nonce: Scalar,
}

/// `op_i = ∏_{j≠i} o_{i,j}^{m_j}`.
pub fn vc_open(
    params: &VcParams,
    msgs: &[VcMessage],
    position: usize,
    nonce: Scalar,
) -> Result<VcOpening, VcError> {
    if msgs.len() != params.positions() {
        return Err(VcError::LengthMismatch);
    }
    if position >= params.positions() {
        return Err(VcError::IndexOutOfRange(position));
    }
    let mut op = G1Point::zero();
    for (j, msg) in msgs.iter().enumerate() {
        if j == position {
            continue;
        }
        op += *params.cross(position, j)? * msg.m;
    }
    Ok(VcOpening {
        op,
        position,
        nonce,
    })
}

/// Pairing check `ê(C / o_i^{m'}, g2^{z_i}) == ê(op, g2)` with the
/// verifier-side recomputed message `m'`.
pub fn vc_verify(
    params: &VcParams,
    c: &VcCommitment,
    m: &VcMessage,
    position: usize,
    op: &VcOpening,
) -> bool {
    if position >= params.positions() || op.position != position {
        return false;
    }
    let stripped = c.c - params.o[position] * m.m;
    pairing(&stripped, &params.z_pub[position]) == pairing(&op.op, &g2_generator())
}

/// Test-fixture parameter generation from explicit exponents. Production
/// parameters come out of the authority-setup ceremony instead.
pub fn params_from_exponents(z: &[Scalar]) -> VcParams {
    let g1 = crate::algebra::g1_generator();
    let g2 = g2_generator();
    let n = z.len();
    let mut o_cross = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                o_cross.insert((i, j), g1 * (z[i] * z[j]));
            }
        }
    }
    VcParams {
        o: z.iter().map(|zi| g1 * *zi).collect(),
        o_cross,
        z_pub: z.iter().map(|zi| g2 * *zi).collect(),
    }
}
