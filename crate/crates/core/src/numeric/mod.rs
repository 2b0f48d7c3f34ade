//! Parameter vectors, seeded randomness, uniform masks, and the fixed-point
//! prime-field codec shared by every other module.

mod field;
mod rng;
mod vector;

pub use field::{
    add_mod, decode_fixed, encode_fixed, inv_mod, mul_mod, neg_mod, pow_mod, sub_mod, FieldVector,
    FixedPointCodec, CLIP_BOUND, DEFAULT_FRAC_BITS, DEFAULT_MAX_SUMMANDS, MERSENNE_61,
};
pub use rng::Rng;
pub use vector::{uniform_mask, vec_mean, vec_sum, ParamVector};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn field_round_trip_within_quantum(
            vals in proptest::collection::vec(-32.0f64..32.0, 1..16),
            f in prop::sample::select(vec![16u32, 24, 32]),
        ) {
            let v = ParamVector::new(vals).unwrap();
            let codec = FixedPointCodec::with_frac_bits(f).unwrap();
            let back = codec.decode(&codec.encode(&v).unwrap());
            prop_assert!(back.max_abs_diff(&v).unwrap() <= 2f64.powi(-(f as i32)));
        }

        #[test]
        fn masks_identical_per_seed(seed in any::<u64>(), dim in 1usize..64, alpha in 0.0f64..=1.0) {
            let a = uniform_mask(dim, alpha, &mut Rng::new(seed)).unwrap();
            let b = uniform_mask(dim, alpha, &mut Rng::new(seed)).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.norm_inf() <= alpha);
        }
    }
}
