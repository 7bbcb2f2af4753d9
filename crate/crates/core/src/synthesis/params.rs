use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ALPHA: f64 = crate::clifford::ALPHA;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Clifford,
    Hash,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Clifford => "clifford",
            Strategy::Hash => "hash",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthesisParams {
    pub n: usize,
    pub epsilon: f64,
    pub strategy: Strategy,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t: usize,
    #[serde(rename = "T")]
    pub big_t: usize,
    /// `0.01 β^{2T}`, the tolerance of the perturbed sign mode.
    pub delta_fp: f64,
    /// Set when `t` was overridden; the ε guarantee no longer applies.
    pub t_overridden: bool,
}

pub fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    Ok(())
}

fn from_rates(n: usize, epsilon: f64, strategy: Strategy, alpha: f64, t: usize) -> SynthesisParams {
    let beta = (1.0 - alpha * alpha).sqrt();
    let big_t = 1usize << t;
    SynthesisParams {
        n,
        epsilon,
        strategy,
        alpha,
        beta,
        gamma: (1.0 - beta) / alpha,
        t,
        big_t,
        delta_fp: 0.01 * beta.powf(2.0 * big_t as f64),
        t_overridden: false,
    }
}

/// Parameters for the Clifford strategy: `t = ⌈log₂ log₂(1/ε)⌉ + 7`.
pub fn derive_params(n: usize, epsilon: f64) -> Result<SynthesisParams> {
    check_epsilon(epsilon)?;
    let t = ((1.0 / epsilon).log2().log2().ceil() as i64).max(0) as usize + 7;
    Ok(from_rates(n, epsilon, Strategy::Clifford, ALPHA, t))
}

/// `H_m = Σ_{j ≤ m} 1/j`.
pub fn harmonic(m: u64) -> f64 {
    (1..=m).rev().map(|j| 1.0 / j as f64).sum()
}

/// Guaranteed normalized overlap of one hash step: the better of the two
/// real tracks holds at least `1/√2` of the residual, and a hash state
/// reaches `μ/(2√2) ≥ 1/(2√2 √H_{2^n})` of that track.
pub fn hash_alpha(n: usize) -> f64 {
    1.0 / (4.0 * harmonic(1u64 << n).sqrt())
}

/// Parameters for the hash strategy: `T` is the smallest power of two with
/// `β^T ≤ 0.01 ε` for the hash contraction rate.
pub fn derive_hash_params(n: usize, epsilon: f64) -> Result<SynthesisParams> {
    check_epsilon(epsilon)?;
    let alpha = hash_alpha(n);
    let beta = (1.0 - alpha * alpha).sqrt();
    let needed = (0.01 * epsilon).ln() / beta.ln();
    let t = (needed.log2().ceil() as i64).max(1) as usize;
    Ok(from_rates(n, epsilon, Strategy::Hash, alpha, t))
}

pub fn params_for(n: usize, epsilon: f64, strategy: Strategy) -> Result<SynthesisParams> {
    match strategy {
        Strategy::Clifford => derive_params(n, epsilon),
        Strategy::Hash => derive_hash_params(n, epsilon),
    }
}

impl SynthesisParams {
    /// Replaces `t` (and `T`, `δ`). Used for small cross-validation runs.
    pub fn with_t(&self, t: usize) -> Result<SynthesisParams> {
        if t == 0 || t > 20 {
            return Err(Error::OutOfRange {
                what: "t override",
                detail: format!("{t} not in 1..=20"),
            });
        }
        let mut p = from_rates(self.n, self.epsilon, self.strategy, self.alpha, t);
        p.t_overridden = true;
        Ok(p)
    }

    /// `2^{-n/2} · δ`, the amplitude-estimate error bound of the perturbed mode.
    pub fn default_perturbation_bound(&self) -> f64 {
        self.delta_fp / ((1u64 << self.n) as f64).sqrt()
    }

    /// `β^T`.
    pub fn beta_t(&self) -> f64 {
        self.beta.powf(self.big_t as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_examples() {
        let p = derive_params(3, 0.01).unwrap();
        assert_eq!((p.t, p.big_t), (10, 1024));
        let p = derive_params(3, 0.25).unwrap();
        assert_eq!((p.t, p.big_t), (8, 256));
        assert_eq!(derive_params(1, 0.1).unwrap().t, 9);
    }

    #[test]
    fn constants() {
        let p = derive_params(2, 0.1).unwrap();
        assert!((p.alpha * p.alpha + p.beta * p.beta - 1.0).abs() < 1e-15);
        assert!(p.gamma > 0.18 && p.gamma < 0.1808);
        assert!((p.gamma - 0.1807).abs() < 1e-4);
        assert!((p.delta_fp - 0.01 * p.beta.powi(2 * p.big_t as i32)).abs() < 1e-300);
    }

    #[test]
    fn epsilon_range() {
        for e in [0.0, 0.5, 0.7, -0.1, f64::NAN] {
            assert!(matches!(
                derive_params(2, e),
                Err(Error::EpsilonOutOfRange(_))
            ));
        }
        assert!(derive_params(2, 0.499).is_ok());
    }

    #[test]
    fn beta_t_below_hundredth_epsilon() {
        for &e in &[0.49, 0.3, 0.1, 0.01, 1e-4, 1e-8] {
            let p = derive_params(2, e).unwrap();
            assert!(p.beta_t() <= 0.01 * e, "eps {e}");
            for n in 1..8 {
                let h = derive_hash_params(n, e).unwrap();
                assert!(h.beta_t() <= 0.01 * e);
                // minimal power of two
                assert!(h.beta.powf((h.big_t / 2) as f64) > 0.01 * e || h.t == 1);
            }
        }
    }

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
    }
}
