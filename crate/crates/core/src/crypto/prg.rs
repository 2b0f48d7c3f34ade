use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::crypto::{biguint_bytes, hash_parts};
use crate::numeric::{FieldVector, FixedPointCodec};

const PRG_DOMAIN: &[u8] = b"fedmask/prg/v1";

/// Expands `seed` into `dim` uniform residues of the codec's field.
///
/// The ChaCha20 key is `SHA-256(len‖"fedmask/prg/v1" ‖ len‖seed_be)` (see
/// [`hash_parts`]); residues come from successive `u64` outputs masked to the
/// modulus bit length and rejected when not below the modulus.
pub fn prg_expand(seed: &BigUint, dim: usize, codec: &FixedPointCodec) -> FieldVector {
    prg_expand_with(&[], seed, dim, codec)
}

/// [`prg_expand`] with an extra domain-separation label.
pub fn prg_expand_with(
    label: &[u8],
    seed: &BigUint,
    dim: usize,
    codec: &FixedPointCodec,
) -> FieldVector {
    let key = hash_parts(&[PRG_DOMAIN, label, &biguint_bytes(seed)]);
    let mut rng = ChaCha20Rng::from_seed(key);
    let p = codec.modulus;
    let mask = u64::MAX >> p.leading_zeros();
    let residues = (0..dim)
        .map(|_| loop {
            let x = rng.next_u64() & mask;
            if x < p {
                break x;
            }
        })
        .collect();
    FieldVector::new(residues, p, codec.frac_bits).expect("residues below modulus")
}

/// Hashes a group element into a PRG seed under a purpose label.
pub fn seed_from_secret(label: &[u8], secret: &BigUint) -> BigUint {
    BigUint::from_bytes_be(&hash_parts(&[
        b"fedmask/seed/v1",
        label,
        &biguint_bytes(secret),
    ]))
}
