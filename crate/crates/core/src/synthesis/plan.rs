//! The residual iteration `η_{k+1} = η_k − α β^k φ_k`.

use serde::{Deserialize, Serialize};

use super::hash::{hash_state_for, phase_value, HashState, DEFAULT_HASH_TRIALS};
use super::params::{Strategy, SynthesisParams};
use super::perturb::{perturbation, perturbed_sign};
use crate::clifford::{
    self, column_overlaps, signed_state, sr_negative, trial_clifford, CliffordDesc, SignPattern,
};
use crate::error::{Error, Result};
use crate::numerics::{PureState, C64};
use crate::rng::derive_key;

pub const TAG_CLIFFORD: u8 = 0x01;
pub const TAG_HASH: u8 = 0x02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Exact,
    Perturbed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlanMode {
    Exact,
    /// Signs are taken of `value + e` with `|e| ≤ bound`, seeded noise.
    Perturbed {
        bound: f64,
        seed: u64,
    },
}

impl PlanMode {
    /// Perturbed mode at the bound `2^{-n/2} · 0.01 β^{2T}`.
    pub fn default_perturbed(params: &SynthesisParams, seed: u64) -> Self {
        PlanMode::Perturbed {
            bound: params.default_perturbation_bound(),
            seed,
        }
    }

    pub fn kind(&self) -> ModeKind {
        match self {
            PlanMode::Exact => ModeKind::Exact,
            PlanMode::Perturbed { .. } => ModeKind::Perturbed,
        }
    }

    fn bound(&self) -> f64 {
        match *self {
            PlanMode::Exact => 0.0,
            PlanMode::Perturbed { bound, .. } => bound,
        }
    }

    fn noise_seed(&self) -> u64 {
        match *self {
            PlanMode::Exact => 0,
            PlanMode::Perturbed { seed, .. } => seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepPayload {
    Clifford {
        desc: CliffordDesc,
        signs: SignPattern,
    },
    Hash(HashState),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanStep {
    pub payload: StepPayload,
    /// `α β^j`.
    pub coefficient: f64,
    /// 1 or i.
    pub phase: C64,
    /// `Re <η_j|φ_j> / ‖η_j‖` (0 when the residual vanished).
    pub overlap: f64,
}

impl PlanStep {
    pub fn is_clifford(&self) -> bool {
        matches!(self.payload, StepPayload::Clifford { .. })
    }

    /// `φ_j`, including its phase.
    pub fn state(&self) -> PureState {
        let s = match &self.payload {
            StepPayload::Clifford { desc, signs } => signed_state(desc, signs),
            StepPayload::Hash(h) => h.state(),
        };
        if self.phase == C64::new(1.0, 0.0) {
            s
        } else {
            s.scaled(self.phase)
        }
    }

    /// Row `j` of the oracle sign table: the sign of basis input `x` for
    /// Clifford steps, the sign at output `x` for hash steps.
    pub fn sign_row(&self, n: usize) -> Vec<bool> {
        match &self.payload {
            StepPayload::Clifford { signs, .. } => signs.bits().to_vec(),
            StepPayload::Hash(h) => {
                let mut row = vec![false; 1 << n];
                for (&x, &neg) in h.support().iter().zip(h.signs()) {
                    row[x as usize] = neg;
                }
                row
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match &self.payload {
            StepPayload::Clifford { desc, .. } => {
                let mut b = vec![TAG_CLIFFORD];
                b.extend(desc.to_bytes());
                b
            }
            StepPayload::Hash(h) => {
                let mut b = vec![TAG_HASH];
                b.extend(h.to_bytes());
                b.push(u8::from(self.phase.im != 0.0));
                b
            }
        }
    }
}

/// Longest serialized step for the strategy; `z` reserves this much per step.
pub fn max_step_len(n: usize, strategy: Strategy) -> usize {
    match strategy {
        Strategy::Clifford => 1 + CliffordDesc::encoded_len(n),
        Strategy::Hash => 2 + HashState::encoded_len(n, n),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisPlan {
    pub psi: PureState,
    pub params: SynthesisParams,
    pub mode: PlanMode,
    pub seed: u64,
    pub steps: Vec<PlanStep>,
    /// `‖η_k‖` for `k = 0..=T`.
    pub residual_norms: Vec<f64>,
    /// `‖ψ − Σ_j c_j φ_j‖`, recomputed from the steps.
    pub direct_residual: f64,
    pub z: Vec<u8>,
}

impl SynthesisPlan {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn residual_t(&self) -> f64 {
        *self.residual_norms.last().expect("at least one entry")
    }

    /// Concatenated step descriptions without padding.
    pub fn desc_section(&self) -> Vec<u8> {
        self.steps.iter().flat_map(|s| s.to_bytes()).collect()
    }
}

pub fn build_plan(
    psi: &PureState,
    params: &SynthesisParams,
    mode: PlanMode,
    seed: u64,
) -> Result<SynthesisPlan> {
    build_plan_with(psi, params, mode, seed, clifford::DEFAULT_MAX_TRIALS)
}

pub fn build_plan_with(
    psi: &PureState,
    params: &SynthesisParams,
    mode: PlanMode,
    seed: u64,
    max_trials: usize,
) -> Result<SynthesisPlan> {
    if psi.n() != params.n {
        return Err(Error::DimensionMismatch {
            expected: 1 << params.n,
            found: psi.dim(),
        });
    }
    let nrm = psi.norm();
    if nrm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(Error::OutOfRange {
            what: "target norm",
            detail: format!("{nrm}"),
        });
    }
    if let PlanMode::Perturbed { bound, .. } = mode {
        if !(bound >= 0.0) {
            return Err(Error::OutOfRange {
                what: "perturbation bound",
                detail: format!("{bound}"),
            });
        }
    }

    let n = params.n;
    let mut eta = psi.clone();
    let mut steps = Vec::with_capacity(params.big_t);
    let mut residual_norms = Vec::with_capacity(params.big_t + 1);
    residual_norms.push(eta.norm());
    let mut beta_j = 1.0;
    for j in 0..params.big_t {
        let step_seed = derive_key(seed, "plan-step", j as u64);
        let coefficient = params.alpha * beta_j;
        let step = match params.strategy {
            Strategy::Clifford => {
                clifford_step(&eta, params, mode, j, step_seed, max_trials, coefficient)?
            }
            Strategy::Hash => hash_step(&eta, params, mode, j, step_seed, coefficient)?,
        };
        eta.sub_scaled(C64::new(coefficient, 0.0), &step.state());
        residual_norms.push(eta.norm());
        steps.push(step);
        beta_j *= params.beta;
    }

    let mut direct = psi.clone();
    for s in &steps {
        direct.sub_scaled(C64::new(s.coefficient, 0.0), &s.state());
    }

    let mut z: Vec<u8> = steps.iter().flat_map(|s| s.to_bytes()).collect();
    z.resize(params.big_t * max_step_len(n, params.strategy), 0);

    Ok(SynthesisPlan {
        psi: psi.clone(),
        params: params.clone(),
        mode,
        seed,
        steps,
        residual_norms,
        direct_residual: direct.norm(),
        z,
    })
}

fn clifford_step(
    eta: &PureState,
    params: &SynthesisParams,
    mode: PlanMode,
    j: usize,
    step_seed: u64,
    max_trials: usize,
    coefficient: f64,
) -> Result<PlanStep> {
    let n = params.n;
    let dim = 1usize << n;
    let nrm = eta.norm();
    let scale = (1.0 / dim as f64).sqrt();
    let bound = mode.bound();
    let noise: Vec<C64> = (0..dim)
        .map(|x| perturbation(bound, (j * dim + x) as u64, mode.noise_seed()))
        .collect();
    // with |e| ≤ 2^{-n/2} δ the achievable overlap drops by at most 2δ
    let threshold = params.alpha - 2.0 * bound / scale;

    if nrm == 0.0 {
        let desc = CliffordDesc::identity(n);
        let signs = SignPattern::new(n, vec![false; dim])?;
        return Ok(PlanStep {
            payload: StepPayload::Clifford { desc, signs },
            coefficient,
            phase: C64::new(1.0, 0.0),
            overlap: 0.0,
        });
    }
    for trial in 0..max_trials {
        let desc = trial_clifford(n, step_seed, trial);
        let w = column_overlaps(eta.amps(), &desc);
        let bits: Vec<bool> = w
            .iter()
            .zip(&noise)
            .map(|(&v, &e)| sr_negative(v + e))
            .collect();
        let ov = w
            .iter()
            .zip(&bits)
            .map(|(v, &neg)| if neg { -v.re } else { v.re })
            .sum::<f64>()
            * scale
            / nrm;
        if ov >= threshold {
            let signs = SignPattern::new(n, bits)?;
            return Ok(PlanStep {
                payload: StepPayload::Clifford { desc, signs },
                coefficient,
                phase: C64::new(1.0, 0.0),
                overlap: ov,
            });
        }
    }
    Err(Error::SearchExhausted {
        what: "Clifford overlap",
        trials: max_trials,
    })
}

fn hash_step(
    eta: &PureState,
    params: &SynthesisParams,
    mode: PlanMode,
    j: usize,
    step_seed: u64,
    coefficient: f64,
) -> Result<PlanStep> {
    let n = params.n;
    let nrm = eta.norm();
    if nrm == 0.0 {
        let mut v = vec![0.0; 1 << n];
        v[0] = 1.0;
        let (h, _) = hash_state_for(&v, 1, step_seed)?;
        return Ok(PlanStep {
            payload: StepPayload::Hash(h),
            coefficient,
            phase: C64::new(1.0, 0.0),
            overlap: 0.0,
        });
    }
    let re = eta.real_parts();
    let im = eta.imag_parts();
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let imaginary = sq(&im) > sq(&re);
    let track = if imaginary { im } else { re };
    let (mut h, _mu) = hash_state_for(&track, DEFAULT_HASH_TRIALS, step_seed)?;
    if let PlanMode::Perturbed { bound, seed } = mode {
        let dim = 1u64 << n;
        let signs = h
            .support()
            .iter()
            .map(|&x| {
                perturbed_sign(
                    C64::new(track[x as usize], 0.0),
                    bound,
                    j as u64 * dim + x,
                    seed,
                )
            })
            .collect();
        h = h.with_signs(signs);
    }
    let phase = phase_value(imaginary);
    let step = PlanStep {
        payload: StepPayload::Hash(h),
        coefficient,
        phase,
        overlap: 0.0,
    };
    let overlap = eta.inner(&step.state())?.re / nrm;
    Ok(PlanStep { overlap, ..step })
}
