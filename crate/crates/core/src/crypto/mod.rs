//! Modular-arithmetic primitives: modular exponentiation, Diffie-Hellman,
//! Shamir secret sharing, PRG mask expansion, Schnorr signatures and a
//! textbook-RSA homomorphism demonstration.
//!
//! Everything here is simulation grade. Nothing is constant-time and no
//! claim of side-channel resistance is made.

mod dh;
mod prg;
mod rsa;
mod schnorr;
mod shamir;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::pow_mod;

pub use dh::{dh_shared_secret, DhParams, KeyPair};
pub use prg::{prg_expand, prg_expand_with, seed_from_secret};
pub use rsa::{rsa_homomorphism_demo, HomomorphismDemo, RsaKeys};
pub use schnorr::{sign, verify, Signature};
pub use shamir::{shamir_reconstruct, shamir_split, Shamir, ShamirShare, MAX_SCAN_POLYNOMIALS};

/// `base^exp mod modulus` by left-to-right square-and-multiply.
pub fn modexp(base: &BigUint, exp: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if *modulus < BigUint::from(2u32) {
        return Err(Error::param("modulus must be >= 2"));
    }
    if let (Some(b), Some(e), Some(m)) = (to_u64(base), to_u64(exp), to_u64(modulus)) {
        return Ok(BigUint::from(pow_mod(b, e, m)));
    }
    let base = base % modulus;
    let mut acc = BigUint::one();
    for i in (0..exp.bits()).rev() {
        acc = &acc * &acc % modulus;
        if exp.bit(i) {
            acc = &acc * &base % modulus;
        }
    }
    Ok(acc % modulus)
}

fn to_u64(x: &BigUint) -> Option<u64> {
    let d = x.to_u64_digits();
    match d.len() {
        0 => Some(0),
        1 => Some(d[0]),
        _ => None,
    }
}

/// Big-endian bytes without leading zeros; zero encodes as a single `0x00`.
pub fn biguint_bytes(x: &BigUint) -> Vec<u8> {
    if x.is_zero() {
        vec![0]
    } else {
        x.to_bytes_be()
    }
}

/// SHA-256 over the concatenation of length-prefixed (`u32` BE) parts.
pub fn hash_parts(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u32).to_be_bytes());
        h.update(p);
    }
    h.finalize().into()
}

/// [`hash_parts`] read as a big-endian integer reduced modulo `m`.
pub fn hash_to_int(parts: &[&[u8]], m: &BigUint) -> BigUint {
    BigUint::from_bytes_be(&hash_parts(parts)) % m
}

/// [`hash_parts`] reduced into `[0, q)` for a `u64` modulus.
pub fn hash_to_u64(parts: &[&[u8]], q: u64) -> u64 {
    let d = hash_parts(parts);
    let wide = u128::from_be_bytes(d[..16].try_into().unwrap());
    (wide % q as u128) as u64
}

/// Deterministic Miller-Rabin for `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = crate::numeric::mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;

    fn b(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn naive(base: u64, exp: u64, m: u64) -> u64 {
        let mut acc = 1u128 % m as u128;
        for _ in 0..exp {
            acc = acc * base as u128 % m as u128;
        }
        acc as u64
    }

    #[test]
    fn modexp_examples() {
        assert_eq!(modexp(&b(2), &b(10), &b(1000)).unwrap(), b(24));
        assert_eq!(modexp(&b(12345), &b(0), &b(77)).unwrap(), b(1));
        assert_eq!(modexp(&b(5), &b(15), &b(23)).unwrap(), b(naive(5, 15, 23)));
        assert!(modexp(&b(3), &b(3), &b(1)).is_err());
    }

    #[test]
    fn modexp_matches_naive_and_library() {
        let mut rng = Rng::new(1);
        for _ in 0..200 {
            let m = 2 + rng.below(10_000);
            let base = rng.below(1 << 40);
            let e = rng.below(300);
            assert_eq!(
                modexp(&b(base), &b(e), &b(m)).unwrap(),
                b(naive(base, e, m))
            );
        }
        let p = DhParams::rfc3526_2048().p;
        for _ in 0..5 {
            let mut bytes = [0u8; 40];
            rng.fill_bytes(&mut bytes);
            let x = BigUint::from_bytes_be(&bytes);
            let e = BigUint::from_bytes_be(&bytes[..24]);
            assert_eq!(modexp(&x, &e, &p).unwrap(), x.modpow(&e, &p));
        }
    }

    #[test]
    fn primality() {
        assert!(is_prime_u64(23));
        assert!(is_prime_u64(crate::numeric::MERSENNE_61));
        assert!(is_prime_u64(18_446_744_073_709_550_147));
        assert!(!is_prime_u64(3233));
        assert!(!is_prime_u64(1));
    }

    #[test]
    fn hash_is_length_prefixed() {
        assert_ne!(hash_parts(&[b"ab", b"c"]), hash_parts(&[b"a", b"bc"]));
    }
}
