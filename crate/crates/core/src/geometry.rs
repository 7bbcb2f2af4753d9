//! Sphere measures, cap fractions around pure states, and the counting
//! bound for circuits that cover the state sphere.
//!
//! An `n`-qubit pure state is a point of the unit sphere `S_{m-1}` in `R^m`,
//! `m = 2^{n+1}`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{haar_from_rng, trace_distance_pure, PureState};
use crate::rng::substream;

/// Qubit constant in the circuit count `(g · (c·s)^a)^s`.
pub const DEFAULT_QUBIT_CONSTANT: f64 = 3.0;

const CHUNK: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometryQuery {
    n: usize,
    epsilon: f64,
}

impl GeometryQuery {
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::OutOfRange {
                what: "cap radius",
                detail: format!("{epsilon} not in [0, 1]"),
            });
        }
        if n > 20 {
            return Err(Error::OutOfRange {
                what: "qubit count",
                detail: format!("{n}"),
            });
        }
        Ok(Self { n, epsilon })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Real dimension `2^{n+1}`.
    pub fn m(&self) -> usize {
        2 << self.n
    }
}

/// Surface measure of the unit sphere `S_d ⊂ R^{d+1}`.
pub fn sphere_measure(d: usize) -> f64 {
    let (mut even, mut odd) = (2.0, 2.0 * std::f64::consts::PI);
    if d == 0 {
        return even;
    }
    for k in 2..=d {
        if k % 2 == 0 {
            even = 2.0 * std::f64::consts::PI * even / (k - 1) as f64;
        } else {
            odd = 2.0 * std::f64::consts::PI * odd / (k - 1) as f64;
        }
    }
    if d.is_multiple_of(2) {
        even
    } else {
        odd
    }
}

/// Fraction of the sphere within trace distance `ε` of a fixed pure state:
/// `ε^{m−2}`.
pub fn cap_fraction(q: &GeometryQuery) -> f64 {
    q.epsilon.powi(q.m() as i32 - 2)
}

/// Fraction of `trials` Haar-random states within trace distance `ε` of
/// `|0…0>`.
pub fn monte_carlo_cap(q: &GeometryQuery, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::OutOfRange {
            what: "trial count",
            detail: "0".into(),
        });
    }
    let center = PureState::basis(q.n, 0);
    let hits: Result<Vec<usize>> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, "cap-trials", c as u64);
            let count = CHUNK.min(trials - c * CHUNK);
            let mut hits = 0;
            for _ in 0..count {
                let s = haar_from_rng(q.n, &mut rng);
                if trace_distance_pure(&s, &center)? <= q.epsilon {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect();
    Ok(hits?.iter().sum::<usize>() as f64 / trials as f64)
}

/// Binomial standard error of a Monte-Carlo estimate of probability `p`.
pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// `μ_d` estimated as `(d+1)` times the ball volume in `R^{d+1}`, the latter
/// by rejection sampling in the cube.
pub fn sphere_measure_monte_carlo(d: usize, trials: usize, seed: u64) -> f64 {
    let dim = d + 1;
    let inside: usize = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, "ball-volume", c as u64);
            let count = CHUNK.min(trials - c * CHUNK);
            (0..count)
                .filter(|_| {
                    (0..dim)
                        .map(|_| rng.random_range(-1.0f64..1.0).powi(2))
                        .sum::<f64>()
                        <= 1.0
                })
                .count()
        })
        .sum();
    let volume = inside as f64 / trials as f64 * 2f64.powi(dim as i32);
    dim as f64 * volume
}

/// `log₂` of (circuit count × covered fraction per circuit):
/// `s·log₂(g·(c·s)^a) + ((m−2)/2)·log₂ ε`. Negative means circuits of size
/// `s` cannot cover every state to within `ε`.
pub fn coverage_deficit(
    n: usize,
    epsilon: f64,
    s: usize,
    gate_set_size: usize,
    max_arity: usize,
) -> Result<f64> {
    coverage_deficit_with(
        n,
        epsilon,
        s,
        gate_set_size,
        max_arity,
        DEFAULT_QUBIT_CONSTANT,
    )
}

pub fn coverage_deficit_with(
    n: usize,
    epsilon: f64,
    s: usize,
    gate_set_size: usize,
    max_arity: usize,
    qubit_constant: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 0.25) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            detail: format!("{epsilon} not in (0, 1/4]"),
        });
    }
    if gate_set_size == 0 || max_arity == 0 || !(qubit_constant > 0.0) {
        return Err(Error::OutOfRange {
            what: "count parameters",
            detail: format!("g = {gate_set_size}, a = {max_arity}, c = {qubit_constant}"),
        });
    }
    let q = GeometryQuery::new(n, epsilon)?;
    let count = if s == 0 {
        0.0
    } else {
        let s = s as f64;
        s * ((gate_set_size as f64).log2() + max_arity as f64 * (qubit_constant * s).log2())
    };
    Ok(count + (q.m() - 2) as f64 / 2.0 * epsilon.log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_measures() {
        let want = [
            2.0,
            2.0 * PI,
            4.0 * PI,
            2.0 * PI * PI,
            8.0 * PI * PI / 3.0,
            PI.powi(3),
        ];
        for (d, w) in want.iter().enumerate() {
            assert!((sphere_measure(d) - w).abs() < 1e-12, "d = {d}");
        }
    }

    #[test]
    fn cap_examples() {
        assert_eq!(cap_fraction(&GeometryQuery::new(1, 1.0).unwrap()), 1.0);
        assert_eq!(cap_fraction(&GeometryQuery::new(1, 0.0).unwrap()), 0.0);
        assert_eq!(cap_fraction(&GeometryQuery::new(1, 0.5).unwrap()), 0.25);
        assert!(GeometryQuery::new(1, 1.5).is_err());
    }

    #[test]
    fn monte_carlo_whole_sphere_and_small_cap() {
        let q = GeometryQuery::new(2, 1.0).unwrap();
        assert_eq!(monte_carlo_cap(&q, 1000, 1).unwrap(), 1.0);
        let q = GeometryQuery::new(1, 0.5).unwrap();
        let p = monte_carlo_cap(&q, 100_000, 2).unwrap();
        assert!((p - 0.25).abs() < 4.0 * binomial_sigma(0.25, 100_000));
        assert_eq!(p, monte_carlo_cap(&q, 100_000, 2).unwrap());
    }

    #[test]
    fn measure_matches_ball_volume() {
        for d in 0..=5 {
            let est = sphere_measure_monte_carlo(d, 2_000_000, d as u64);
            assert!(
                (est / sphere_measure(d) - 1.0).abs() < 0.01,
                "d = {d}: {est}"
            );
        }
    }

    #[test]
    fn deficit_reference_value() {
        // 50-digit evaluation of the same formula
        let v = coverage_deficit(10, 0.25, 100, 3, 3).unwrap();
        assert!((v - 581.141_857_220_88).abs() < 1e-9);
        assert!(v > 0.0);
        assert!(coverage_deficit(2, 0.3, 1, 3, 3).is_err());
        assert!(coverage_deficit(1, 0.1, 0, 3, 3).unwrap() < 0.0);
    }

    proptest! {
        #[test]
        fn deficit_monotone_in_s(n in 1usize..8, eps in 0.01f64..0.25, s in 0usize..500) {
            let a = coverage_deficit(n, eps, s, 3, 3).unwrap();
            let b = coverage_deficit(n, eps, s + 1, 3, 3).unwrap();
            prop_assert!(b > a);
        }
    }

    #[test]
    fn deficit_limits() {
        let lo = coverage_deficit(12, 0.1, 0, 2, 2).unwrap();
        let hi = coverage_deficit(12, 0.1, 1_000_000, 2, 2).unwrap();
        assert!(lo < -1e3 && hi > 1e6);
    }
}
