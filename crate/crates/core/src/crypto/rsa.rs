use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::crypto::modexp;
use crate::error::{Error, Result};

/// Textbook RSA keys. Used only to show the multiplicative homomorphism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsaKeys {
    #[serde(with = "crate::serde_dec::biguint")]
    pub n: BigUint,
    #[serde(with = "crate::serde_dec::biguint")]
    pub e: BigUint,
    #[serde(with = "crate::serde_dec::biguint")]
    pub d: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomomorphismDemo {
    /// `enc(m1) · enc(m2) mod n`
    #[serde(with = "crate::serde_dec::biguint")]
    pub lhs: BigUint,
    /// `enc(m1 · m2)`
    #[serde(with = "crate::serde_dec::biguint")]
    pub rhs: BigUint,
    pub equal: bool,
}

fn gcd(a: &BigUint, b: &BigUint) -> BigUint {
    let (mut a, mut b) = (a.clone(), b.clone());
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

impl RsaKeys {
    /// Keys from primes `p ≠ q` and public exponent `e`, with
    /// `d = e⁻¹ mod lcm(p − 1, q − 1)`.
    pub fn from_primes(p: u64, q: u64, e: u64) -> Result<Self> {
        if p == q || !crate::crypto::is_prime_u64(p) || !crate::crypto::is_prime_u64(q) {
            return Err(Error::param("p and q must be distinct primes"));
        }
        let (pb, qb) = (BigUint::from(p - 1), BigUint::from(q - 1));
        let lambda = &pb * &qb / gcd(&pb, &qb);
        let e = BigUint::from(e);
        let d = e
            .modinv(&lambda)
            .ok_or_else(|| Error::param("e is not invertible modulo λ(n)"))?;
        Ok(RsaKeys {
            n: BigUint::from(p) * BigUint::from(q),
            e,
            d,
        })
    }

    /// `p = 61`, `q = 53`, `e = 17`.
    pub fn textbook() -> Self {
        RsaKeys::from_primes(61, 53, 17).expect("constant keys")
    }

    pub fn encrypt(&self, m: &BigUint) -> Result<BigUint> {
        if *m >= self.n {
            return Err(Error::param("message must be below the modulus"));
        }
        modexp(m, &self.e, &self.n)
    }

    pub fn decrypt(&self, c: &BigUint) -> Result<BigUint> {
        modexp(c, &self.d, &self.n)
    }
}

/// Compares `enc(m1)·enc(m2) mod n` with `enc(m1·m2)`.
pub fn rsa_homomorphism_demo(m1: u64, m2: u64, keys: &RsaKeys) -> Result<HomomorphismDemo> {
    let prod = BigUint::from(m1) * BigUint::from(m2);
    if prod >= keys.n {
        return Err(Error::param(format!(
            "m1·m2 = {prod} overflows the modulus {}",
            keys.n
        )));
    }
    let lhs = keys.encrypt(&BigUint::from(m1))? * keys.encrypt(&BigUint::from(m2))? % &keys.n;
    let rhs = keys.encrypt(&prod)?;
    let equal = lhs == rhs;
    Ok(HomomorphismDemo { lhs, rhs, equal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;

    #[test]
    fn textbook_product() {
        let k = RsaKeys::textbook();
        assert_eq!(k.n, BigUint::from(3233u32));
        let demo = rsa_homomorphism_demo(2, 3, &k).unwrap();
        assert!(demo.equal);
        assert_eq!(demo.lhs, BigUint::from(824u32));
        assert_eq!(
            k.encrypt(&BigUint::from(2u32)).unwrap(),
            BigUint::from(1752u32)
        );
        assert_eq!(
            k.encrypt(&BigUint::from(3u32)).unwrap(),
            BigUint::from(1211u32)
        );
    }

    #[test]
    fn identity_factor() {
        let k = RsaKeys::textbook();
        let demo = rsa_homomorphism_demo(7, 1, &k).unwrap();
        assert_eq!(demo.lhs, k.encrypt(&BigUint::from(7u32)).unwrap());
    }

    #[test]
    fn overflow_rejected() {
        assert!(rsa_homomorphism_demo(100, 40, &RsaKeys::textbook()).is_err());
    }

    #[test]
    fn decrypt_inverts_encrypt() {
        let k = RsaKeys::textbook();
        let mut rng = Rng::new(4);
        for _ in 0..100 {
            let m = BigUint::from(rng.below(3233));
            assert_eq!(k.decrypt(&k.encrypt(&m).unwrap()).unwrap(), m);
        }
    }
}
