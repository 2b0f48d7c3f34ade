use serde::{Deserialize, Serialize};

use crate::crypto::is_prime_u64;
use crate::error::{Error, Result};
use crate::numeric::{add_mod, inv_mod, mul_mod, sub_mod, Rng, MERSENNE_61};

/// Upper bound on polynomials enumerated by [`Shamir::consistent_secrets`].
pub const MAX_SCAN_POLYNOMIALS: u64 = 50_000_000;

/// One evaluation `ρ(index)` of a sharing polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShamirShare {
    pub index: u64,
    #[serde(with = "crate::serde_dec::u64_str")]
    pub value: u64,
    pub threshold: usize,
    pub total: usize,
}

/// `(k, n)` threshold sharing over the prime field `Z_q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shamir {
    pub q: u64,
}

impl Default for Shamir {
    fn default() -> Self {
        Shamir { q: MERSENNE_61 }
    }
}

impl Shamir {
    pub fn new(q: u64) -> Result<Self> {
        if !is_prime_u64(q) || q >= 1 << 63 {
            return Err(Error::param(format!(
                "sharing modulus {q} is not a supported prime"
            )));
        }
        Ok(Shamir { q })
    }

    /// Evaluates a random degree-`k − 1` polynomial with `ρ(0) = secret` at
    /// `1..=n`.
    pub fn split(
        &self,
        secret: u64,
        k: usize,
        n: usize,
        rng: &mut Rng,
    ) -> Result<Vec<ShamirShare>> {
        if secret >= self.q {
            return Err(Error::param("secret must be a field element"));
        }
        if k == 0 || k > n {
            return Err(Error::param(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        if n as u64 >= self.q {
            return Err(Error::param("n must be below the field size"));
        }
        let mut coeffs = Vec::with_capacity(k);
        coeffs.push(secret);
        for _ in 1..k {
            coeffs.push(rng.below(self.q));
        }
        Ok((1..=n as u64)
            .map(|x| ShamirShare {
                index: x,
                value: self.eval(&coeffs, x),
                threshold: k,
                total: n,
            })
            .collect())
    }

    fn eval(&self, coeffs: &[u64], x: u64) -> u64 {
        coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| add_mod(mul_mod(acc, x, self.q), c, self.q))
    }

    /// Lagrange interpolation at zero from the first `k` shares.
    pub fn reconstruct(&self, shares: &[ShamirShare]) -> Result<u64> {
        let first = shares.first().ok_or(Error::Threshold {
            needed: 1,
            available: 0,
        })?;
        let k = first.threshold;
        for (i, s) in shares.iter().enumerate() {
            if s.index == 0 || s.index >= self.q {
                return Err(Error::param(format!(
                    "share index {} out of range",
                    s.index
                )));
            }
            if shares[..i].iter().any(|t| t.index == s.index) {
                return Err(Error::param(format!("duplicate share index {}", s.index)));
            }
        }
        if shares.len() < k {
            return Err(Error::Threshold {
                needed: k,
                available: shares.len(),
            });
        }
        let used = &shares[..k];
        let q = self.q;
        let mut acc = 0;
        for (i, si) in used.iter().enumerate() {
            let mut num = 1;
            let mut den = 1;
            for (j, sj) in used.iter().enumerate() {
                if i != j {
                    num = mul_mod(num, sj.index % q, q);
                    den = mul_mod(den, sub_mod(sj.index % q, si.index % q, q), q);
                }
            }
            let basis = mul_mod(num, inv_mod(den, q)?, q);
            acc = add_mod(acc, mul_mod(si.value, basis, q), q);
        }
        Ok(acc)
    }

    /// For each candidate secret, whether some degree-`k − 1` polynomial with
    /// that constant term passes through every given share. Enumerates all
    /// `q^(k−1)` higher-order coefficient tuples, so it is meant for toy
    /// fields only.
    pub fn consistent_secrets(
        &self,
        shares: &[ShamirShare],
        k: usize,
        candidates: impl IntoIterator<Item = u64>,
    ) -> Result<Vec<u64>> {
        if k == 0 {
            return Err(Error::param("k must be >= 1"));
        }
        let per_secret = (self.q as u128).pow(k as u32 - 1);
        let candidates: Vec<u64> = candidates.into_iter().collect();
        if per_secret * candidates.len() as u128 > MAX_SCAN_POLYNOMIALS as u128 {
            return Err(Error::param("exhaustive scan too large for this field"));
        }
        let mut out = Vec::new();
        let mut coeffs = vec![0u64; k];
        for &s in &candidates {
            coeffs[0] = s % self.q;
            coeffs[1..].iter_mut().for_each(|c| *c = 0);
            let mut found = false;
            'scan: loop {
                if shares
                    .iter()
                    .all(|sh| self.eval(&coeffs, sh.index) == sh.value)
                {
                    found = true;
                    break;
                }
                for c in coeffs[1..].iter_mut() {
                    *c += 1;
                    if *c < self.q {
                        continue 'scan;
                    }
                    *c = 0;
                }
                break;
            }
            if found {
                out.push(s);
            }
        }
        Ok(out)
    }
}

/// Splits over the default field `2^61 − 1`.
pub fn shamir_split(secret: u64, k: usize, n: usize, rng: &mut Rng) -> Result<Vec<ShamirShare>> {
    Shamir::default().split(secret, k, n, rng)
}

/// Reconstructs over the default field `2^61 − 1`.
pub fn shamir_reconstruct(shares: &[ShamirShare]) -> Result<u64> {
    Shamir::default().reconstruct(shares)
}
