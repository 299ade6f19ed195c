//! Canonical byte encodings: compressed points, fixed-width big-endian
//! scalars, each prefixed with a one-byte format tag. Commitments and proof
//! challenges hash these encodings, so they are fixed for the whole
//! repository.

use super::curve::{G1Point, G2Point, GtPoint, Scalar};
use super::AlgebraError;
use ark_ec::CurveGroup;
use ark_ff::{BigInteger, PrimeField};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};

pub const TAG_SCALAR: u8 = 0x01;
pub const TAG_G1: u8 = 0x02;
pub const TAG_G2: u8 = 0x03;
pub const TAG_GT: u8 = 0x04;

pub const SCALAR_LEN: usize = 32;
pub const G1_LEN: usize = 48;
pub const G2_LEN: usize = 96;
pub const GT_LEN: usize = 576;

pub fn encode_scalar(s: &Scalar) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + SCALAR_LEN);
    out.push(TAG_SCALAR);
    out.extend_from_slice(&s.into_bigint().to_bytes_be());
    out
}

pub fn decode_scalar(bytes: &[u8]) -> Result<Scalar, AlgebraError> {
    if bytes.len() != 1 + SCALAR_LEN || bytes[0] != TAG_SCALAR {
        return Err(AlgebraError::InvalidEncoding { context: "scalar" });
    }
    let mut le = bytes[1..].to_vec();
    le.reverse();
    let big = <Scalar as PrimeField>::BigInt::deserialize_uncompressed(&le[..])
        .map_err(|_| AlgebraError::InvalidEncoding { context: "scalar" })?;
    Scalar::from_bigint(big).ok_or(AlgebraError::InvalidEncoding { context: "scalar" })
}

pub fn encode_g1(p: &G1Point) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + G1_LEN);
    out.push(TAG_G1);
    p.into_affine()
        .serialize_compressed(&mut out)
        .expect("infallible write to Vec");
    out
}

pub fn decode_g1(bytes: &[u8]) -> Result<G1Point, AlgebraError> {
    if bytes.len() != 1 + G1_LEN || bytes[0] != TAG_G1 {
        return Err(AlgebraError::InvalidEncoding { context: "g1" });
    }
    let affine = ark_bls12_381::G1Affine::deserialize_compressed(&bytes[1..])
        .map_err(|_| AlgebraError::InvalidEncoding { context: "g1" })?;
    Ok(affine.into())
}

pub fn encode_g2(p: &G2Point) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + G2_LEN);
    out.push(TAG_G2);
    p.into_affine()
        .serialize_compressed(&mut out)
        .expect("infallible write to Vec");
    out
}

pub fn decode_g2(bytes: &[u8]) -> Result<G2Point, AlgebraError> {
    if bytes.len() != 1 + G2_LEN || bytes[0] != TAG_G2 {
        return Err(AlgebraError::InvalidEncoding { context: "g2" });
    }
    let affine = ark_bls12_381::G2Affine::deserialize_compressed(&bytes[1..])
        .map_err(|_| AlgebraError::InvalidEncoding { context: "g2" })?;
    Ok(affine.into())
}

pub fn encode_gt(p: &GtPoint) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + GT_LEN);
    out.push(TAG_GT);
    p.serialize_compressed(&mut out)
        .expect("infallible write to Vec");
    out
}

pub fn decode_gt(bytes: &[u8]) -> Result<GtPoint, AlgebraError> {
    if bytes.len() != 1 + GT_LEN || bytes[0] != TAG_GT {
        return Err(AlgebraError::InvalidEncoding { context: "gt" });
    }
    GtPoint::deserialize_compressed(&bytes[1..])
        .map_err(|_| AlgebraError::InvalidEncoding { context: "gt" })
}

/// Canonical bytes for anything ark-serializable; used when hashing
/// composites (matrices, s-pairs, transcripts).
pub fn canonical_bytes<T: CanonicalSerialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    value
        .serialize_compressed(&mut out)
        .expect("infallible write to Vec");
    out
}

/// serde adapter for fields holding ark types: hex of the canonical bytes.
pub mod serde_canonical {
    use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: CanonicalSerialize, S: Serializer>(
        value: &T,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let mut bytes = Vec::new();
        value
            .serialize_compressed(&mut bytes)
            .map_err(serde::ser::Error::custom)?;
        serializer.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, T: CanonicalDeserialize, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<T, D::Error> {
        let s = String::deserialize(deserializer)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        T::deserialize_compressed(&bytes[..]).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ark_ec::Group;
    use ark_ff::UniformRand;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn encodings_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = Scalar::rand(&mut rng);
        assert_eq!(decode_scalar(&encode_scalar(&s)).unwrap(), s);
        let p1 = G1Point::generator() * s;
        assert_eq!(decode_g1(&encode_g1(&p1)).unwrap(), p1);
        let p2 = G2Point::generator() * s;
        assert_eq!(decode_g2(&encode_g2(&p2)).unwrap(), p2);
        let t = super::super::curve::gt_generator() * s;
        assert_eq!(decode_gt(&encode_gt(&t)).unwrap(), t);
    }

    #[test]
    fn wrong_tag_rejected() {
        let s = Scalar::from(5u64);
        let mut bytes = encode_scalar(&s);
        bytes[0] = TAG_G1;
        assert!(decode_scalar(&bytes).is_err());
    }

    #[test]
    fn non_canonical_scalar_rejected() {
        // p - 1 is fine, p itself is out of range.
        let mut bytes = vec![TAG_SCALAR];
        bytes.extend_from_slice(&[0xff; 32]);
        assert!(decode_scalar(&bytes).is_err());
    }

    #[test]
    fn garbage_point_rejected() {
        let mut bytes = vec![TAG_G1];
        bytes.extend_from_slice(&[0x07; 48]);
        assert!(decode_g1(&bytes).is_err());
    }
}
