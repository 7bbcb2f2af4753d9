//! Dense single-qubit gates and register bookkeeping shared by the executors.

use rayon::prelude::*;

use crate::numerics::C64;

/// Real 2×2 gate `[[a, b], [c, d]]`.
pub type Gate = [f64; 4];

pub const HADAMARD: Gate = {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [h, h, h, -h]
};

/// Applies `g` to qubit `q` of an `nq`-qubit vector (qubit 0 most significant).
pub fn apply_1q(v: &mut [C64], nq: usize, q: usize, g: Gate) {
    debug_assert_eq!(v.len(), 1 << nq);
    let stride = 1usize << (nq - 1 - q);
    let pair = |chunk: &mut [C64]| {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = x * g[0] + y * g[1];
            *b = x * g[2] + y * g[3];
        }
    };
    if v.len() >= 1 << 14 {
        v.par_chunks_mut(2 * stride).for_each(pair);
    } else {
        v.chunks_mut(2 * stride).for_each(pair);
    }
}

pub fn transpose(g: Gate) -> Gate {
    [g[0], g[2], g[1], g[3]]
}

/// Rotation taking `|0>` to `(|0> + r|1>)/√(1+r²)`.
pub fn ratio_gate(r: f64) -> Gate {
    let c = 1.0 / (1.0 + r * r).sqrt();
    let s = r * c;
    [c, -s, s, c]
}

/// Gates whose tensor product takes `|0^bits>` to the normalized
/// `Σ_k ratio^k |k>`: qubit `q` carries `ratio^{2^{bits-1-q}}`.
pub fn geometric_prep(ratio: f64, bits: usize) -> Vec<Gate> {
    (0..bits)
        .map(|q| ratio_gate(ratio.powf((1u64 << (bits - 1 - q)) as f64)))
        .collect()
}

/// Applies `gates[i]` to qubit `first + i`.
pub fn apply_product(v: &mut [C64], nq: usize, first: usize, gates: &[Gate], adjoint: bool) {
    for (i, g) in gates.iter().enumerate() {
        apply_1q(v, nq, first + i, if adjoint { transpose(*g) } else { *g });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{diff_norm, PureState};

    #[test]
    fn geometric_prep_matches_closed_form() {
        let ratio: f64 = 0.9;
        let bits = 4;
        let mut v = PureState::basis(bits, 0).into_amps();
        apply_product(&mut v, bits, 0, &geometric_prep(ratio, bits), false);
        let norm = (0..16).map(|k| ratio.powi(2 * k)).sum::<f64>().sqrt();
        let want: Vec<C64> = (0..16)
            .map(|k| C64::new(ratio.powi(k) / norm, 0.0))
            .collect();
        assert!(diff_norm(&v, &want) < 1e-14);
        apply_product(&mut v, bits, 0, &geometric_prep(ratio, bits), true);
        assert!(diff_norm(&v, PureState::basis(bits, 0).amps()) < 1e-14);
    }

    #[test]
    fn hadamard_on_middle_qubit() {
        let mut v = PureState::basis(3, 0).into_amps();
        apply_1q(&mut v, 3, 1, HADAMARD);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0].re - h).abs() < 1e-15 && (v[2].re - h).abs() < 1e-15);
    }
}
