use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Rng;

/// Flat vector of model weights, gradients, masks or inputs.
///
/// Always non-empty and finite. Binary form: `u32` LE dimension followed by
/// `dim` IEEE-754 `f64` LE values (4 + 8·dim bytes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParamVector(Vec<f64>);

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        ParamVector::new(values)
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(v: ParamVector) -> Self {
        v.0
    }
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("ParamVector must have dim >= 1"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite value {} at coordinate {i}",
                values[i]
            )));
        }
        Ok(ParamVector(values))
    }

    /// Builds a vector the caller knows to be finite and non-empty.
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        ParamVector(values)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        ParamVector::new(vec![0.0; dim])
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        ParamVector::new((0..dim).map(f).collect())
    }

    /// Coordinates drawn i.i.d. uniform on `[lo, hi)`.
    pub fn random_uniform(dim: usize, lo: f64, hi: f64, rng: &mut Rng) -> Result<Self> {
        ParamVector::new((0..dim).map(|_| rng.uniform(lo, hi)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    fn check_dim(&self, other: &ParamVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &ParamVector) -> Result<ParamVector> {
        self.check_dim(other)?;
        ParamVector::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        self.check_dim(other)?;
        ParamVector::new(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> Result<ParamVector> {
        ParamVector::new(self.0.iter().map(|a| a * s).collect())
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &ParamVector) -> Result<ParamVector> {
        self.check_dim(other)?;
        ParamVector::new(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + s * b)
                .collect(),
        )
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn norm_l2(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn distance(&self, other: &ParamVector) -> Result<f64> {
        Ok(self.sub(other)?.norm_l2())
    }

    pub fn max_abs_diff(&self, other: &ParamVector) -> Result<f64> {
        Ok(self.sub(other)?.norm_inf())
    }

    /// Clamps every coordinate to `[-bound, bound]`.
    pub fn clip(&self, bound: f64) -> ParamVector {
        ParamVector::from_vec(self.0.iter().map(|a| a.clamp(-bound, bound)).collect())
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 8 * self.dim());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        for v in &self.0 {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<ParamVector> {
        if bytes.len() < 4 {
            return Err(Error::Decode("ParamVector: missing dim header".into()));
        }
        let dim = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        if bytes.len() != 4 + 8 * dim {
            return Err(Error::Decode(format!(
                "ParamVector: expected {} bytes for dim {dim}, got {}",
                4 + 8 * dim,
                bytes.len()
            )));
        }
        let values = bytes[4..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        ParamVector::new(values)
    }
}

/// Coordinate-wise arithmetic mean.
pub fn vec_mean(vs: &[ParamVector]) -> Result<ParamVector> {
    let first = vs
        .first()
        .ok_or_else(|| Error::param("vec_mean of an empty sequence"))?;
    let mut acc = vec![0.0; first.dim()];
    for v in vs {
        first.check_dim(v)?;
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += x;
        }
    }
    let n = vs.len() as f64;
    ParamVector::new(acc.into_iter().map(|a| a / n).collect())
}

/// Coordinate-wise sum.
pub fn vec_sum(vs: &[ParamVector]) -> Result<ParamVector> {
    let first = vs
        .first()
        .ok_or_else(|| Error::param("vec_sum of an empty sequence"))?;
    let mut acc = vec![0.0; first.dim()];
    for v in vs {
        first.check_dim(v)?;
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += x;
        }
    }
    ParamVector::new(acc)
}

/// A mask with coordinates i.i.d. uniform on `[-alpha, alpha)`.
///
/// `alpha == 0` yields the exact zero vector.
pub fn uniform_mask(dim: usize, alpha: f64, rng: &mut Rng) -> Result<ParamVector> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    if dim == 0 {
        return Err(Error::param("mask dim must be >= 1"));
    }
    if alpha == 0.0 {
        return ParamVector::zeros(dim);
    }
    ParamVector::random_uniform(dim, -alpha, alpha, rng)
}
