//! Deterministic bounded noise standing in for inexact amplitude estimates.

use crate::clifford::sr_negative;
use crate::numerics::C64;
use crate::rng::derive_key;

fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The perturbation `e` with `|e| ≤ bound` used at `address`.
pub fn perturbation(bound: f64, address: u64, seed: u64) -> C64 {
    if bound == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let k1 = derive_key(seed, "perturb-radius", address);
    let k2 = derive_key(seed, "perturb-angle", address);
    let r = bound * unit_interval(k1);
    C64::from_polar(r, std::f64::consts::TAU * unit_interval(k2))
}

/// `sr(value + e)`, `true` meaning −1.
pub fn perturbed_sign(value: C64, bound: f64, address: u64, seed: u64) -> bool {
    sr_negative(value + perturbation(bound, address, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_bound_is_exact() {
        for (v, neg) in [
            (C64::new(0.3, 1.0), false),
            (C64::new(-1e-300, 0.0), true),
            (C64::new(0.0, -2.0), false),
        ] {
            for seed in 0..20 {
                assert_eq!(perturbed_sign(v, 0.0, seed * 7, seed), neg);
            }
        }
    }

    #[test]
    fn zero_real_part_takes_both_signs_across_seeds() {
        let v = C64::new(0.0, 0.5);
        let negs = (0..200).filter(|&s| perturbed_sign(v, 1e-3, 42, s)).count();
        assert!(negs > 0 && negs < 200);
        assert_eq!(
            perturbed_sign(v, 1e-3, 42, 9),
            perturbed_sign(v, 1e-3, 42, 9)
        );
    }

    proptest! {
        #[test]
        fn noise_is_bounded(bound in 0.0f64..10.0, addr in any::<u64>(), seed in any::<u64>()) {
            prop_assert!(perturbation(bound, addr, seed).norm() <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn large_real_part_is_stable(re in 1e-6f64..1.0, im in -1.0f64..1.0, neg in any::<bool>(), addr in any::<u64>(), seed in any::<u64>()) {
            let v = C64::new(if neg { -re } else { re }, im);
            let bound = re * 0.999;
            prop_assert_eq!(perturbed_sign(v, bound, addr, seed), neg);
        }
    }
}
