use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::crypto::{biguint_bytes, hash_to_int, modexp, DhParams, KeyPair};
use crate::error::Result;

/// Schnorr signature `(R, s)` over a [`DhParams`] group.
///
/// Signing: `k = H("nonce" ‖ sk ‖ m) mod order` (nonzero), `R = g^k`,
/// `e = H(R ‖ pk ‖ m) mod order`, `s = k + e·sk mod order`.
/// Verification accepts iff `g^s == R · pk^e (mod p)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    #[serde(with = "crate::serde_dec::biguint")]
    pub commitment: BigUint,
    #[serde(with = "crate::serde_dec::biguint")]
    pub response: BigUint,
}

fn challenge(r: &BigUint, pk: &BigUint, msg: &[u8], params: &DhParams) -> BigUint {
    hash_to_int(
        &[
            b"fedmask/schnorr/v1",
            &biguint_bytes(r),
            &biguint_bytes(pk),
            msg,
        ],
        &params.order,
    )
}

pub fn sign(msg: &[u8], key: &KeyPair, params: &DhParams) -> Result<Signature> {
    let mut k = hash_to_int(
        &[b"fedmask/schnorr-nonce/v1", &key.sk.to_be_bytes(), msg],
        &params.order,
    );
    if k.is_zero() {
        k = BigUint::from(1u32);
    }
    let r = modexp(&params.g, &k, &params.p)?;
    let e = challenge(&r, &key.pk, msg, params);
    let s = (k + e * BigUint::from(key.sk)) % &params.order;
    Ok(Signature {
        commitment: r,
        response: s,
    })
}

/// False for any malformed or non-verifying signature.
pub fn verify(msg: &[u8], sig: &Signature, pk: &BigUint, params: &DhParams) -> bool {
    if sig.commitment.is_zero() || sig.commitment >= params.p || sig.response >= params.order {
        return false;
    }
    if pk.is_zero() || *pk >= params.p {
        return false;
    }
    let e = challenge(&sig.commitment, pk, msg, params);
    let (Ok(lhs), Ok(pe)) = (
        modexp(&params.g, &sig.response, &params.p),
        modexp(pk, &e, &params.p),
    ) else {
        return false;
    };
    lhs == (&sig.commitment * pe) % &params.p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;

    #[test]
    fn round_trip_random_messages() {
        let params = DhParams::safe_prime_64();
        let mut rng = Rng::new(1);
        let key = KeyPair::generate(&params, &mut rng).unwrap();
        for _ in 0..100 {
            let mut m = vec![0u8; 1 + rng.below(64) as usize];
            rng.fill_bytes(&mut m);
            assert!(verify(
                &m,
                &sign(&m, &key, &params).unwrap(),
                &key.pk,
                &params
            ));
        }
    }

    #[test]
    fn rfc_group_round_trip() {
        let params = DhParams::rfc3526_2048();
        let key = KeyPair::generate(&params, &mut Rng::new(2)).unwrap();
        let sig = sign(b"participants", &key, &params).unwrap();
        assert!(verify(b"participants", &sig, &key.pk, &params));
    }

    #[test]
    fn tampering_fails() {
        let params = DhParams::safe_prime_64();
        let mut rng = Rng::new(3);
        let key = KeyPair::generate(&params, &mut rng).unwrap();
        let other = KeyPair::generate(&params, &mut rng).unwrap();
        let msg = b"hello world".to_vec();
        let sig = sign(&msg, &key, &params).unwrap();
        let mut flipped = msg.clone();
        flipped[0] ^= 1;
        assert!(!verify(&flipped, &sig, &key.pk, &params));
        assert!(!verify(&msg, &sig, &other.pk, &params));
        let bad = Signature {
            commitment: params.p.clone(),
            response: sig.response.clone(),
        };
        assert!(!verify(&msg, &bad, &key.pk, &params));
    }
}
