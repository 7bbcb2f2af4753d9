//! Simulators for the one-, ten- and four-query synthesis circuits and the
//! postselected circuit they are built from.
//!
//! Oracle calls are counted per merged layer: queries made in parallel on
//! disjoint registers count once.

pub mod branch;
pub mod dense;
pub mod four_query;
pub mod gates;
pub mod one_query;
pub mod postselect;
pub mod prep;
pub mod ten_query;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DensityMatrix, PureState};
use crate::rng::derive_key;
use crate::synthesis::{
    build_plan, params_for, plan_to_oracle, ModeKind, OracleSpec, PlanMode, Strategy, SynthesisPlan,
};

pub use branch::{BranchState, Factor};
pub use dense::{DenseSim, Register};
pub use four_query::{run_four_query, Evaluator};
pub use one_query::{first_success_dense, first_success_mixture, run_one_query};
pub use postselect::{run_postselect, validate_z_register, ZValidation};
pub use prep::{HouseholderPrep, PostselectCircuit, StatePrep, MAX_QUBITS};
pub use ten_query::run_ten_query;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Postselect,
    OneQuery,
    TenQuery,
    FourQuery,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Postselect => "postselect",
            Algorithm::OneQuery => "one-query",
            Algorithm::TenQuery => "ten-query",
            Algorithm::FourQuery => "four-query",
        }
    }

    pub fn query_count(self) -> usize {
        match self {
            Algorithm::Postselect | Algorithm::OneQuery => 1,
            Algorithm::TenQuery => 10,
            Algorithm::FourQuery => 4,
        }
    }

    /// Whether the output is a reduced (mixed) state rather than a pure one.
    pub fn mixed_output(self) -> bool {
        self == Algorithm::OneQuery
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Merged oracle layers in the order they were applied.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryLedger {
    layers: Vec<String>,
}

impl QueryLedger {
    pub fn record(&mut self, label: impl Into<String>) {
        self.layers.push(label.into());
    }

    pub fn count(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[String] {
        &self.layers
    }
}

#[derive(Clone, Debug)]
pub enum Output {
    /// Full simulated register.
    Pure(PureState),
    /// The `n`-qubit output register.
    Reduced(DensityMatrix),
    /// Branch form of the full register, too large to expand.
    Branches(BranchState),
}

#[derive(Clone, Debug, Serialize)]
pub struct ExecutionReport {
    pub algorithm: Algorithm,
    pub strategy: Strategy,
    pub mode: ModeKind,
    pub n: usize,
    pub epsilon: f64,
    /// Parameters of the inner postselected circuit.
    pub t: usize,
    #[serde(rename = "T")]
    pub big_t: usize,
    pub s: Option<usize>,
    pub query_count: usize,
    pub ledger: QueryLedger,
    pub success_amplitude: Option<f64>,
    pub error_2norm: Option<f64>,
    pub error_trace: Option<f64>,
    #[serde(rename = "residual_T")]
    pub residual_t: f64,
    pub ideal: bool,
    /// Set when `s` or `t` was overridden; the ε guarantee is void.
    pub overridden: bool,
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(skip)]
    pub output: Output,
}

/// `√2 · k · deviation`: the error after substituting an imperfect
/// sub-circuit that is queried `k` times.
pub fn substitution_bound(k: usize, deviation: f64) -> f64 {
    std::f64::consts::SQRT_2 * k as f64 * deviation
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub strategy: Strategy,
    pub mode: ModeKind,
    pub seed: u64,
    pub t_override: Option<usize>,
    pub s_override: Option<usize>,
    /// Replace the postselected circuit by an exact preparation of its
    /// ideal output (ten- and four-query only).
    pub ideal: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Clifford,
            mode: ModeKind::Exact,
            seed: 0,
            t_override: None,
            s_override: None,
            ideal: false,
        }
    }
}

impl RunOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn overridden(&self) -> bool {
        self.t_override.is_some() || self.s_override.is_some()
    }
}

/// Plan, oracle and circuit for `psi` at accuracy `epsilon`.
pub fn prepare_inner(
    psi: &PureState,
    epsilon: f64,
    opts: &RunOptions,
) -> Result<(SynthesisPlan, OracleSpec)> {
    let mut params = params_for(psi.n(), epsilon, opts.strategy)?;
    if let Some(t) = opts.t_override {
        params = params.with_t(t)?;
    }
    if params.t + params.n + 1 > MAX_QUBITS {
        return Err(Error::RegisterTooLarge {
            qubits: params.t + params.n + 1,
            limit: MAX_QUBITS,
        });
    }
    let mode = match opts.mode {
        ModeKind::Exact => PlanMode::Exact,
        ModeKind::Perturbed => {
            PlanMode::default_perturbed(&params, derive_key(opts.seed, "sign-noise", 0))
        }
    };
    let plan = build_plan(psi, &params, mode, derive_key(opts.seed, "plan", 0))?;
    let oracle = plan_to_oracle(&plan);
    Ok((plan, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_bound_examples() {
        assert_eq!(substitution_bound(5, 0.0), 0.0);
        let eps = 0.1;
        assert!(
            (substitution_bound(10, eps / (9.0 * 2f64.sqrt())) - 10.0 * eps / 9.0).abs() < 1e-15
        );
        let s = 256;
        let dev = eps / (2f64.sqrt() * 8.0 * s as f64);
        assert!((substitution_bound(4 * s, dev) - eps / 2.0).abs() < 1e-15);
    }

    #[test]
    fn query_counts() {
        let counts: Vec<usize> = [
            Algorithm::Postselect,
            Algorithm::OneQuery,
            Algorithm::TenQuery,
            Algorithm::FourQuery,
        ]
        .iter()
        .map(|a| a.query_count())
        .collect();
        assert_eq!(counts, vec![1, 1, 10, 4]);
    }
}
