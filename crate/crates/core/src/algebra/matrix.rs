//! Dense row-major matrices over scalars or group elements.

use super::curve::{G1Point, G2Point, GtPoint, Scalar};
use super::AlgebraError;
use ark_ec::Group;
use ark_ff::UniformRand;
use ark_serialize::{
    CanonicalDeserialize, CanonicalSerialize, Compress, SerializationError, Valid, Validate,
};
use ark_std::Zero;
use rand::{CryptoRng, RngCore};

/// A dense `rows × cols` matrix in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

pub type ScalarMatrix = Matrix<Scalar>;
pub type G1Matrix = Matrix<G1Point>;
pub type G2Matrix = Matrix<G2Point>;
pub type GtMatrix = Matrix<GtPoint>;

impl<T> Matrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Matrix { rows, cols, entries }
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self, AlgebraError> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(AlgebraError::DimensionMismatch {
                context: "matrix construction",
            });
        }
        Ok(Matrix { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn zip_map<U, V>(
        &self,
        other: &Matrix<U>,
        mut f: impl FnMut(&T, &U) -> V,
    ) -> Result<Matrix<V>, AlgebraError> {
        if self.dims() != other.dims() {
            return Err(AlgebraError::DimensionMismatch { context: "zip_map" });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(other.entries.iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }
}

impl<T: Clone> Matrix<T> {
    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix::from_fn(rows, cols, |_, _| value.clone())
    }
}

impl ScalarMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::filled(rows, cols, Scalar::zero())
    }

    pub fn rand<R: RngCore + CryptoRng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Matrix::from_fn(rows, cols, |_, _| Scalar::rand(rng))
    }

    /// Uniform matrix with every entry in `Z_p^*`.
    pub fn rand_nonzero<R: RngCore + CryptoRng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Matrix::from_fn(rows, cols, |_, _| loop {
            let s = Scalar::rand(rng);
            if !s.is_zero() {
                break s;
            }
        })
    }

    pub fn matmul(&self, other: &ScalarMatrix) -> Result<ScalarMatrix, AlgebraError> {
        if self.cols != other.rows {
            return Err(AlgebraError::DimensionMismatch { context: "matmul" });
        }
        Ok(Matrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols)
                .map(|t| *self.get(i, t) * other.get(t, j))
                .sum()
        }))
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Result<Vec<Scalar>, AlgebraError> {
        if self.cols != v.len() {
            return Err(AlgebraError::DimensionMismatch { context: "mul_vec" });
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| *self.get(i, j) * v[j]).sum())
            .collect())
    }

    pub fn scale(&self, s: Scalar) -> ScalarMatrix {
        self.map(|e| *e * s)
    }

    pub fn add(&self, other: &ScalarMatrix) -> Result<ScalarMatrix, AlgebraError> {
        self.zip_map(other, |a, b| *a + *b)
    }

    /// Entrywise product; the exponent-side mirror of chained power maps.
    pub fn hadamard(&self, other: &ScalarMatrix) -> Result<ScalarMatrix, AlgebraError> {
        self.zip_map(other, |a, b| *a * *b)
    }
}

impl<G: Group<ScalarField = Scalar>> Matrix<G> {
    pub fn identities(rows: usize, cols: usize) -> Self {
        Matrix::filled(rows, cols, G::zero())
    }

    pub fn add_entrywise(&self, other: &Matrix<G>) -> Result<Matrix<G>, AlgebraError> {
        self.zip_map(other, |a, b| *a + *b)
    }
}

pub fn inner_product(a: &[Scalar], b: &[Scalar]) -> Result<Scalar, AlgebraError> {
    if a.len() != b.len() {
        return Err(AlgebraError::DimensionMismatch {
            context: "inner_product",
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| *x * y).sum())
}

impl<T: CanonicalSerialize> CanonicalSerialize for Matrix<T> {
    fn serialize_with_mode<W: std::io::Write>(
        &self,
        mut writer: W,
        compress: Compress,
    ) -> Result<(), SerializationError> {
        (self.rows as u32).serialize_with_mode(&mut writer, compress)?;
        (self.cols as u32).serialize_with_mode(&mut writer, compress)?;
        for e in &self.entries {
            e.serialize_with_mode(&mut writer, compress)?;
        }
        Ok(())
    }

    fn serialized_size(&self, compress: Compress) -> usize {
        8 + self
            .entries
            .iter()
            .map(|e| e.serialized_size(compress))
            .sum::<usize>()
    }
}

impl<T: CanonicalSerialize + CanonicalDeserialize> Valid for Matrix<T> {
    fn check(&self) -> Result<(), SerializationError> {
        for e in &self.entries {
            e.check()?;
        }
        Ok(())
    }
}

impl<T: CanonicalSerialize + CanonicalDeserialize> CanonicalDeserialize for Matrix<T> {
    fn deserialize_with_mode<R: std::io::Read>(
        mut reader: R,
        compress: Compress,
        validate: Validate,
    ) -> Result<Self, SerializationError> {
        let rows = u32::deserialize_with_mode(&mut reader, compress, validate)? as usize;
        let cols = u32::deserialize_with_mode(&mut reader, compress, validate)? as usize;
        if rows == 0 || cols == 0 || rows.saturating_mul(cols) > (1 << 20) {
            return Err(SerializationError::InvalidData);
        }
        let mut entries = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            entries.push(T::deserialize_with_mode(&mut reader, compress, validate)?);
        }
        Ok(Matrix { rows, cols, entries })
    }
}

impl<T: CanonicalSerialize + CanonicalDeserialize> serde::Serialize for Matrix<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut bytes = Vec::new();
        CanonicalSerialize::serialize_compressed(self, &mut bytes)
            .map_err(serde::ser::Error::custom)?;
        serializer.serialize_str(&hex::encode(bytes))
    }
}

impl<'de, T: CanonicalSerialize + CanonicalDeserialize> serde::Deserialize<'de> for Matrix<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(deserializer)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        CanonicalDeserialize::deserialize_compressed(&bytes[..]).map_err(serde::de::Error::custom)
    }
}
