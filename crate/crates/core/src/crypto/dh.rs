use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::crypto::modexp;
use crate::error::{Error, Result};
use crate::numeric::{Rng, MERSENNE_61};

const RFC3526_2048_HEX: &str = "\
FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74\
020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437\
4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED\
EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05\
98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB\
9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B\
E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718\
3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

/// A multiplicative group modulo a prime `p` with generator `g` of order `order`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhParams {
    #[serde(with = "crate::serde_dec::biguint")]
    pub p: BigUint,
    #[serde(with = "crate::serde_dec::biguint")]
    pub g: BigUint,
    #[serde(with = "crate::serde_dec::biguint")]
    pub order: BigUint,
}

impl Default for DhParams {
    fn default() -> Self {
        DhParams::rfc3526_2048()
    }
}

impl DhParams {
    /// The 2048-bit MODP group of RFC 3526, `g = 2` generating the subgroup
    /// of order `(p − 1)/2`.
    pub fn rfc3526_2048() -> Self {
        let p = BigUint::parse_bytes(RFC3526_2048_HEX.as_bytes(), 16).expect("constant");
        let order = (&p - 1u32) >> 1;
        DhParams {
            p,
            g: BigUint::from(2u32),
            order,
        }
    }

    /// `p = 23`, `g = 5` (a primitive root, order 22).
    pub fn toy_23() -> Self {
        DhParams {
            p: BigUint::from(23u32),
            g: BigUint::from(5u32),
            order: BigUint::from(22u32),
        }
    }

    /// The safe prime `p = 2^64 − 1469` with `g = 4` generating the subgroup of
    /// prime order `(p − 1)/2`. Fast enough for protocol runs with dozens of
    /// clients.
    pub fn safe_prime_64() -> Self {
        let p = 18_446_744_073_709_550_147u64;
        DhParams {
            p: BigUint::from(p),
            g: BigUint::from(4u32),
            order: BigUint::from((p - 1) / 2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let one = BigUint::one();
        if self.p < BigUint::from(3u32) {
            return Err(Error::param("group prime must be >= 3"));
        }
        if self.g <= one || self.g >= self.p {
            return Err(Error::param("generator must satisfy 1 < g < p"));
        }
        if modexp(&self.g, &self.order, &self.p)? != one {
            return Err(Error::param("g^order != 1"));
        }
        Ok(())
    }

    /// Largest secret key drawn by [`KeyPair::generate`]. Keys stay below the
    /// sharing prime `2^61 − 1` so they can be Shamir-shared directly.
    pub fn max_secret(&self) -> u64 {
        let cap = MERSENNE_61 - 1;
        let p_minus_2 = &self.p - 2u32;
        match p_minus_2.to_u64_digits().as_slice() {
            [v] if *v < cap => *v,
            _ => cap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    #[serde(with = "crate::serde_dec::u64_str")]
    pub sk: u64,
    #[serde(with = "crate::serde_dec::biguint")]
    pub pk: BigUint,
}

impl KeyPair {
    pub fn from_secret(sk: u64, params: &DhParams) -> Result<Self> {
        if sk == 0 {
            return Err(Error::param("secret key must be >= 1"));
        }
        Ok(KeyPair {
            sk,
            pk: modexp(&params.g, &BigUint::from(sk), &params.p)?,
        })
    }

    /// Secret key uniform in `[1, params.max_secret()]`.
    pub fn generate(params: &DhParams, rng: &mut Rng) -> Result<Self> {
        let sk = 1 + rng.below(params.max_secret());
        KeyPair::from_secret(sk, params)
    }
}

/// `their_pk^sk mod p`.
pub fn dh_shared_secret(my: &KeyPair, their_pk: &BigUint, params: &DhParams) -> Result<BigUint> {
    if *their_pk <= BigUint::one() || *their_pk >= params.p {
        return Err(Error::Protocol(format!(
            "public key {their_pk} outside (1, p)"
        )));
    }
    modexp(their_pk, &BigUint::from(my.sk), &params.p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;
    use proptest::prelude::*;

    #[test]
    fn toy_exchange_derives_two() {
        let params = DhParams::toy_23();
        let a = KeyPair::from_secret(6, &params).unwrap();
        let b = KeyPair::from_secret(15, &params).unwrap();
        assert_eq!(a.pk, BigUint::from(8u32));
        assert_eq!(b.pk, BigUint::from(19u32));
        let ab = dh_shared_secret(&a, &b.pk, &params).unwrap();
        let ba = dh_shared_secret(&b, &a.pk, &params).unwrap();
        assert_eq!(ab, BigUint::from(2u32));
        assert_eq!(ab, ba);
    }

    #[test]
    fn same_secret_is_symmetric() {
        let params = DhParams::toy_23();
        let a = KeyPair::from_secret(9, &params).unwrap();
        assert_eq!(
            dh_shared_secret(&a, &a.pk, &params).unwrap(),
            dh_shared_secret(&a.clone(), &a.pk, &params).unwrap()
        );
    }

    #[test]
    fn rfc_group_symmetry() {
        let params = DhParams::rfc3526_2048();
        params.validate().unwrap();
        let mut rng = Rng::new(99);
        for _ in 0..1000 {
            let a = KeyPair::generate(&params, &mut rng).unwrap();
            let b = KeyPair::generate(&params, &mut rng).unwrap();
            assert_eq!(
                dh_shared_secret(&a, &b.pk, &params).unwrap(),
                dh_shared_secret(&b, &a.pk, &params).unwrap()
            );
        }
    }

    #[test]
    fn rejects_degenerate_public_keys() {
        let params = DhParams::toy_23();
        let a = KeyPair::from_secret(3, &params).unwrap();
        for bad in [0u32, 1, 23, 40] {
            assert!(matches!(
                dh_shared_secret(&a, &BigUint::from(bad), &params),
                Err(Error::Protocol(_))
            ));
        }
    }

    #[test]
    fn bundled_groups_validate() {
        DhParams::toy_23().validate().unwrap();
        DhParams::safe_prime_64().validate().unwrap();
        assert_eq!(DhParams::rfc3526_2048().p.bits(), 2048);
        assert_eq!(DhParams::toy_23().max_secret(), 21);
    }

    proptest! {
        #[test]
        fn symmetry_in_the_64_bit_group(a in 1u64..(1u64 << 61) - 2, b in 1u64..(1u64 << 61) - 2) {
            let params = DhParams::safe_prime_64();
            let ka = KeyPair::from_secret(a, &params).unwrap();
            let kb = KeyPair::from_secret(b, &params).unwrap();
            prop_assert_eq!(
                dh_shared_secret(&ka, &kb.pk, &params).unwrap(),
                dh_shared_secret(&kb, &ka.pk, &params).unwrap()
            );
        }
    }
}
