//! Experiment configs and their execution.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::executors::{
    prepare_inner, run_four_query, run_one_query, run_postselect, run_ten_query, Algorithm,
    Evaluator, ExecutionReport, RunOptions,
};
use crate::numerics::{haar_random_state, norm2, PureState, C64};
use crate::synthesis::params::check_epsilon;
use crate::synthesis::{ModeKind, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedTarget {
    Ghz,
    W,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Target {
    Haar {
        seed: u64,
    },
    /// Amplitudes as `[re, im]` pairs.
    Explicit(Vec<[f64; 2]>),
    Named(NamedTarget),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Report file name without extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    /// Oracle file name for `oracle export`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
}

fn default_evaluator() -> Evaluator {
    Evaluator::Structured
}

fn default_strategy() -> Strategy {
    Strategy::Clifford
}

fn default_mode() -> ModeKind {
    ModeKind::Exact
}

fn default_target() -> Target {
    Target::Haar { seed: 0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub epsilon: f64,
    pub algorithm: Algorithm,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default = "default_mode")]
    pub mode: ModeKind,
    #[serde(default = "default_target")]
    pub target: Target,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub overrides: Overrides,
    /// Exact stand-in for the postselected circuit (ten- and four-query).
    #[serde(default)]
    pub ideal: bool,
    #[serde(default = "default_evaluator")]
    pub evaluator: Evaluator,
    #[serde(default)]
    pub output: OutputPaths,
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(parse_error)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.n == 0 || self.n > 12 {
            return Err(Error::Config(format!("n = {} not in 1..=12", self.n)));
        }
        if let Target::Explicit(a) = &self.target {
            if a.len() != 1 << self.n {
                return Err(Error::Config(format!(
                    "explicit target has {} amplitudes, n = {} needs {}",
                    a.len(),
                    self.n,
                    1 << self.n
                )));
            }
        }
        Ok(())
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            strategy: self.strategy,
            mode: self.mode,
            seed: self.seed,
            t_override: self.overrides.t,
            s_override: self.overrides.s,
            ideal: self.ideal,
        }
    }

    /// The target state, and a warning if explicit amplitudes were rescaled.
    pub fn target_state(&self) -> Result<(PureState, Option<String>)> {
        let n = self.n;
        let d = 1usize << n;
        let amps: Vec<C64> = match &self.target {
            Target::Haar { seed } => return Ok((haar_random_state(n, *seed), None)),
            Target::Explicit(a) => a.iter().map(|&[re, im]| C64::new(re, im)).collect(),
            Target::Named(NamedTarget::Uniform) => return Ok((PureState::plus(n), None)),
            Target::Named(NamedTarget::Ghz) => {
                let mut v = vec![C64::new(0.0, 0.0); d];
                v[0] = C64::new(1.0, 0.0);
                v[d - 1] = C64::new(1.0, 0.0);
                v
            }
            Target::Named(NamedTarget::W) => (0..d)
                .map(|x| {
                    C64::new(
                        if (x as u64).count_ones() == 1 {
                            1.0
                        } else {
                            0.0
                        },
                        0.0,
                    )
                })
                .collect(),
        };
        let nrm = norm2(&amps);
        if nrm == 0.0 {
            return Err(Error::Config("target has zero norm".into()));
        }
        let warning = match &self.target {
            Target::Explicit(_) if (nrm - 1.0).abs() > 1e-6 => {
                Some(format!("explicit target renormalized from norm {nrm}"))
            }
            _ => None,
        };
        Ok((
            PureState::new(n, amps.iter().map(|a| a / nrm).collect())?,
            warning,
        ))
    }
}

pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub report: ExecutionReport,
    pub wall_ms: f64,
    pub warnings: Vec<String>,
}

pub fn run_config(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let (psi, warning) = config.target_state()?;
    let opts = config.options();
    let start = Instant::now();
    let report = match config.algorithm {
        Algorithm::Postselect => {
            let (plan, oracle) = prepare_inner(&psi, config.epsilon, &opts)?;
            run_postselect(&plan, &oracle)?
        }
        Algorithm::OneQuery => run_one_query(&psi, config.epsilon, &opts)?,
        Algorithm::TenQuery => run_ten_query(&psi, config.epsilon, &opts)?,
        Algorithm::FourQuery => run_four_query(&psi, config.epsilon, config.evaluator, &opts)?,
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut warnings: Vec<String> = warning.into_iter().collect();
    if report.overridden {
        warnings.push("parameter overrides in effect; the epsilon guarantee does not apply".into());
    }
    Ok(RunOutcome {
        config: config.clone(),
        report,
        wall_ms,
        warnings,
    })
}

/// `{"base": {...}, "grid": {"key": [values...]}}`, expanded as a
/// cartesian product in key order.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: Value,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<Value>>,
}

impl SweepConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(parse_error)
    }

    pub fn expand(&self) -> Result<Vec<ExperimentConfig>> {
        let mut docs = vec![self.base.clone()];
        for (key, values) in &self.grid {
            if values.is_empty() {
                return Err(Error::Config(format!("grid key {key} has no values")));
            }
            let mut next = Vec::with_capacity(docs.len() * values.len());
            for d in &docs {
                for v in values {
                    let mut d = d.clone();
                    let obj = d
                        .as_object_mut()
                        .ok_or_else(|| Error::Config("sweep base must be an object".into()))?;
                    obj.insert(key.clone(), v.clone());
                    next.push(d);
                }
            }
            docs = next;
        }
        docs.into_iter()
            .map(|d| {
                let c: ExperimentConfig = serde_json::from_value(d).map_err(parse_error)?;
                c.validate()?;
                Ok(c)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"n": 2, "epsilon": 0.1, "algorithm": "postselect", "target": {"haar": {"seed": 4}}, "seed": 9}"#;

    #[test]
    fn parses_defaults_and_rejects_unknown_keys() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(c.strategy, Strategy::Clifford);
        assert_eq!(c.mode, ModeKind::Exact);
        assert!(ExperimentConfig::from_json(
            r#"{"n": 2, "epsilon": 0.1, "algorithm": "postselect", "sead": 1}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"n": 2, "epsilon": 0.1, "algorithm": "five-query"}"#
        )
        .is_err());
        let e =
            ExperimentConfig::from_json(r#"{"n": 2, "epsilon": 0.7, "algorithm": "postselect"}"#)
                .unwrap_err();
        assert!(e.to_string().contains("(0, 1/2)"));
    }

    #[test]
    fn named_and_explicit_targets() {
        let mut c = ExperimentConfig::from_json(BASE).unwrap();
        c.target = Target::Named(NamedTarget::W);
        let (w, warn) = c.target_state().unwrap();
        assert!(warn.is_none());
        assert!((w.amps()[1].re - 0.5f64.sqrt()).abs() < 1e-15);
        c.target = Target::Explicit(vec![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
        let (e, warn) = c.target_state().unwrap();
        assert!(warn.is_some());
        assert!((e.norm() - 1.0).abs() < 1e-15);
        c.target = Target::Explicit(vec![[1.0, 0.0]]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn round_trip_reruns_identically() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        let again = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
        let (a, b) = (run_config(&c).unwrap(), run_config(&again).unwrap());
        assert_eq!(a.report.error_2norm, b.report.error_2norm);
        assert_eq!(a.report.success_amplitude, b.report.success_amplitude);
    }

    #[test]
    fn sweep_expansion() {
        let s: SweepConfig = serde_json::from_str(&format!(
            r#"{{"base": {BASE}, "grid": {{"n": [1, 2], "algorithm": ["postselect", "one-query", "ten-query"]}}}}"#
        ))
        .unwrap();
        let cs = s.expand().unwrap();
        assert_eq!(cs.len(), 6);
        assert_eq!(cs[0].algorithm, Algorithm::Postselect);
        assert_eq!(cs[0].n, 1);
        assert_eq!(cs[1].n, 2);
        let bad: SweepConfig =
            serde_json::from_str(&format!(r#"{{"base": {BASE}, "grid": {{"nn": [1]}}}}"#)).unwrap();
        assert!(bad.expand().is_err());
    }
}
