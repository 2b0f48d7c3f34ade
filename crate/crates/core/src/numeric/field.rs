//! Fixed-point encoding of real vectors into a prime field.
//!
//! A real `v` is scaled by `2^f`, rounded to the nearest integer and reduced
//! modulo `p`; negative integers map to `p - |x|`. Residues above `p/2`
//! decode as negative. As long as every summand satisfies
//! `|round(v·2^f)| < p / (2·n_max)`, a sum of up to `n_max` encodings never
//! wraps, so field addition mirrors real addition up to quantization.
//!
//! Binary form of a [`FieldVector`]: `u64` LE modulus, `u32` LE fraction
//! bits, `u32` LE dimension, then `dim` residues as `u64` LE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ParamVector;

/// The Mersenne prime `2^61 - 1`.
pub const MERSENNE_61: u64 = (1u64 << 61) - 1;

/// Default number of fractional bits.
pub const DEFAULT_FRAC_BITS: u32 = 24;

/// Default maximum number of summands the encoding must tolerate.
pub const DEFAULT_MAX_SUMMANDS: u64 = 10_000;

/// Magnitude to which protocol clients clip weights before encoding.
pub const CLIP_BOUND: f64 = 32.0;

#[inline]
pub fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % p as u128) as u64
}

#[inline]
pub fn sub_mod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        (p - b) + a
    }
}

#[inline]
pub fn neg_mod(a: u64, p: u64) -> u64 {
    if a == 0 {
        0
    } else {
        p - a
    }
}

#[inline]
pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Multiplicative inverse modulo a prime `p` (Fermat). `a` must be nonzero mod `p`.
pub fn inv_mod(a: u64, p: u64) -> Result<u64> {
    if a % p == 0 {
        return Err(Error::param("zero has no inverse"));
    }
    Ok(pow_mod(a, p - 2, p))
}

/// Residues modulo `modulus` carrying fixed-point values with `frac_bits`
/// fractional bits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldVector {
    #[serde(with = "crate::serde_dec::u64_vec")]
    residues: Vec<u64>,
    #[serde(with = "crate::serde_dec::u64_str")]
    modulus: u64,
    frac_bits: u32,
}

impl FieldVector {
    pub fn new(residues: Vec<u64>, modulus: u64, frac_bits: u32) -> Result<Self> {
        if !(2..(1u64 << 63)).contains(&modulus) {
            return Err(Error::param(format!("unsupported modulus {modulus}")));
        }
        if residues.is_empty() {
            return Err(Error::param("FieldVector must have dim >= 1"));
        }
        if let Some(i) = residues.iter().position(|&r| r >= modulus) {
            return Err(Error::param(format!(
                "residue {} at {i} is not below modulus {modulus}",
                residues[i]
            )));
        }
        Ok(FieldVector {
            residues,
            modulus,
            frac_bits,
        })
    }

    pub fn zeros(dim: usize, modulus: u64, frac_bits: u32) -> Result<Self> {
        FieldVector::new(vec![0; dim], modulus, frac_bits)
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn dim(&self) -> usize {
        self.residues.len()
    }

    fn check(&self, other: &FieldVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        if self.modulus != other.modulus || self.frac_bits != other.frac_bits {
            return Err(Error::param("field vectors use different encodings"));
        }
        Ok(())
    }

    fn zip_with(&self, other: &FieldVector, f: impl Fn(u64, u64, u64) -> u64) -> Result<Self> {
        self.check(other)?;
        let p = self.modulus;
        Ok(FieldVector {
            residues: self
                .residues
                .iter()
                .zip(&other.residues)
                .map(|(&a, &b)| f(a, b, p))
                .collect(),
            modulus: p,
            frac_bits: self.frac_bits,
        })
    }

    pub fn add(&self, other: &FieldVector) -> Result<Self> {
        self.zip_with(other, add_mod)
    }

    pub fn sub(&self, other: &FieldVector) -> Result<Self> {
        self.zip_with(other, sub_mod)
    }

    pub fn neg(&self) -> Self {
        let p = self.modulus;
        FieldVector {
            residues: self.residues.iter().map(|&a| neg_mod(a, p)).collect(),
            modulus: p,
            frac_bits: self.frac_bits,
        }
    }

    pub fn add_assign(&mut self, other: &FieldVector) -> Result<()> {
        self.check(other)?;
        let p = self.modulus;
        for (a, &b) in self.residues.iter_mut().zip(&other.residues) {
            *a = add_mod(*a, b, p);
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &FieldVector) -> Result<()> {
        self.check(other)?;
        let p = self.modulus;
        for (a, &b) in self.residues.iter_mut().zip(&other.residues) {
            *a = sub_mod(*a, b, p);
        }
        Ok(())
    }

    /// Field sum of a non-empty sequence.
    pub fn sum<'a>(vs: impl IntoIterator<Item = &'a FieldVector>) -> Result<FieldVector> {
        let mut it = vs.into_iter();
        let mut acc = it
            .next()
            .ok_or_else(|| Error::param("sum of an empty sequence"))?
            .clone();
        for v in it {
            acc.add_assign(v)?;
        }
        Ok(acc)
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.dim());
        out.extend_from_slice(&self.modulus.to_le_bytes());
        out.extend_from_slice(&self.frac_bits.to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        for r in &self.residues {
            out.extend_from_slice(&r.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<FieldVector> {
        if bytes.len() < 16 {
            return Err(Error::Decode("FieldVector: truncated header".into()));
        }
        let modulus = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
        let frac_bits = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        if bytes.len() != 16 + 8 * dim {
            return Err(Error::Decode(format!(
                "FieldVector: expected {} bytes, got {}",
                16 + 8 * dim,
                bytes.len()
            )));
        }
        let residues = bytes[16..]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        FieldVector::new(residues, modulus, frac_bits)
    }
}

/// Encoding parameters shared by every party of a protocol run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointCodec {
    pub modulus: u64,
    pub frac_bits: u32,
    pub max_summands: u64,
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        FixedPointCodec {
            modulus: MERSENNE_61,
            frac_bits: DEFAULT_FRAC_BITS,
            max_summands: DEFAULT_MAX_SUMMANDS,
        }
    }
}

impl FixedPointCodec {
    pub fn new(modulus: u64, frac_bits: u32, max_summands: u64) -> Result<Self> {
        if !(2..(1u64 << 63)).contains(&modulus) {
            return Err(Error::param(format!("unsupported modulus {modulus}")));
        }
        if frac_bits > 52 {
            return Err(Error::param("frac_bits must be <= 52"));
        }
        if max_summands == 0 {
            return Err(Error::param("max_summands must be >= 1"));
        }
        Ok(FixedPointCodec {
            modulus,
            frac_bits,
            max_summands,
        })
    }

    pub fn with_frac_bits(frac_bits: u32) -> Result<Self> {
        FixedPointCodec::new(MERSENNE_61, frac_bits, DEFAULT_MAX_SUMMANDS)
    }

    fn scale(&self) -> f64 {
        (1u64 << self.frac_bits) as f64
    }

    /// Largest integer magnitude (exclusive) a single encoded coordinate may take.
    pub fn integer_bound(&self) -> u64 {
        self.modulus / (2 * self.max_summands)
    }

    /// Largest real magnitude (exclusive) a single coordinate may take.
    pub fn value_bound(&self) -> f64 {
        self.integer_bound() as f64 / self.scale()
    }

    pub fn encode(&self, v: &ParamVector) -> Result<FieldVector> {
        let scale = self.scale();
        let bound = self.integer_bound();
        let p = self.modulus;
        let mut residues = Vec::with_capacity(v.dim());
        for (i, &x) in v.iter().enumerate() {
            let scaled = (x * scale).round();
            if scaled.abs() >= bound as f64 {
                return Err(Error::Range {
                    index: i,
                    value: x,
                    bound: self.value_bound(),
                });
            }
            let mag = scaled.abs() as u64;
            residues.push(if scaled < 0.0 { neg_mod(mag, p) } else { mag });
        }
        Ok(FieldVector {
            residues,
            modulus: p,
            frac_bits: self.frac_bits,
        })
    }

    pub fn decode(&self, fv: &FieldVector) -> ParamVector {
        decode_fixed(fv)
    }

    /// Clips to [`CLIP_BOUND`] (or the codec's own bound, if tighter), then encodes.
    pub fn encode_clipped(&self, v: &ParamVector) -> Result<FieldVector> {
        let bound = CLIP_BOUND.min(self.value_bound() * 0.999_999);
        self.encode(&v.clip(bound))
    }
}

/// Encodes with the default summand budget.
pub fn encode_fixed(v: &ParamVector, frac_bits: u32, modulus: u64) -> Result<FieldVector> {
    FixedPointCodec::new(modulus, frac_bits, DEFAULT_MAX_SUMMANDS)?.encode(v)
}

pub fn decode_fixed(fv: &FieldVector) -> ParamVector {
    let p = fv.modulus;
    let half = p / 2;
    let scale = (1u64 << fv.frac_bits) as f64;
    ParamVector::from_vec(
        fv.residues
            .iter()
            .map(|&r| {
                if r > half {
                    -((p - r) as f64) / scale
                } else {
                    r as f64 / scale
                }
            })
            .collect(),
    )
}
