//! Amplitude amplification of `A^f` with the success amplitude first lowered
//! to `sin(π/18)`, so four rounds land exactly on the target.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::gates::{apply_1q, ratio_gate, transpose, Gate};
use super::postselect::{ideal_output, simulate};
use super::prep::{HouseholderPrep, StatePrep, MAX_QUBITS};
use super::{
    prepare_inner, substitution_bound, Algorithm, ExecutionReport, Output, QueryLedger, RunOptions,
};
use crate::error::{Error, Result};
use crate::numerics::{diff_norm, norm2, PureState, C64, ONE, ZERO};
use crate::synthesis::params::{check_epsilon, params_for};

/// Gate with `G|0> = a|0> + √(1−a²)|1>`.
pub(crate) fn amplitude_gate(a: f64) -> Gate {
    ratio_gate((1.0 - a * a).max(0.0).sqrt() / a)
}

/// `W = G ⊗ prep` on `(anc, rest)` with the ancilla most significant.
pub(crate) struct AncillaPrep<'a> {
    pub g: Gate,
    pub prep: &'a dyn StatePrep,
}

impl AncillaPrep<'_> {
    pub fn qubits(&self) -> usize {
        1 + self.prep.qubits()
    }

    pub fn apply(&self, v: &mut [C64]) {
        let (lo, hi) = v.split_at_mut(v.len() / 2);
        self.prep.apply(lo);
        self.prep.apply(hi);
        apply_1q(v, self.qubits(), 0, self.g);
    }

    pub fn apply_adjoint(&self, v: &mut [C64]) {
        apply_1q(v, self.qubits(), 0, transpose(self.g));
        let (lo, hi) = v.split_at_mut(v.len() / 2);
        self.prep.apply_adjoint(lo);
        self.prep.apply_adjoint(hi);
    }

    /// `W(2|0><0| − I)W†`.
    pub fn reflect_about_output(&self, v: &mut [C64]) {
        self.apply_adjoint(v);
        v.iter_mut().skip(1).for_each(|a| *a = -*a);
        self.apply(v);
    }
}

pub fn run_ten_query(psi: &PureState, epsilon: f64, opts: &RunOptions) -> Result<ExecutionReport> {
    check_epsilon(epsilon)?;
    let n = psi.n();
    let gamma = params_for(n, epsilon, opts.strategy)?.gamma;
    let a = (PI / 18.0).sin() / gamma;
    if a > 1.0 {
        return Err(Error::Config(format!(
            "ten-query needs gamma > sin(pi/18) = {:.4}, strategy {} has gamma = {gamma:.4}",
            (PI / 18.0).sin(),
            opts.strategy.as_str()
        )));
    }
    let inner_eps = epsilon / (9.0 * 2f64.sqrt());
    let (plan, oracle) = prepare_inner(psi, inner_eps, opts)?;
    let t = plan.params.t;
    if 1 + t + n > MAX_QUBITS {
        return Err(Error::RegisterTooLarge {
            qubits: 1 + t + n,
            limit: MAX_QUBITS,
        });
    }
    let (circuit, phi, inner) = simulate(&plan, &oracle)?;
    let ideal_prep;
    let prep: &dyn StatePrep = if opts.ideal {
        ideal_prep = HouseholderPrep::new(&ideal_output(&phi, psi.amps(), gamma))?;
        &ideal_prep
    } else {
        &circuit
    };
    let w = AncillaPrep {
        g: amplitude_gate(a),
        prep,
    };

    let mut ledger = QueryLedger::default();
    let mut drift: f64 = 0.0;
    let d = 1usize << n;
    let mut v = vec![ZERO; 1 << w.qubits()];
    v[0] = ONE;
    w.apply(&mut v);
    ledger.record("prepare theta");
    drift = drift.max((norm2(&v) - 1.0).abs());
    for round in 0..4 {
        v[..d].iter_mut().for_each(|x| *x = -*x);
        w.reflect_about_output(&mut v);
        ledger.record(format!("reflection {round}: W^dagger"));
        ledger.record(format!("reflection {round}: W"));
        drift = drift.max((norm2(&v) - 1.0).abs());
    }
    ledger.record("uncompute z");

    let mut target = vec![ZERO; v.len()];
    target[..d].copy_from_slice(psi.amps());
    let err = diff_norm(&v, &target);
    let dev = if opts.ideal {
        0.0
    } else {
        inner.error_2norm.unwrap_or(f64::NAN)
    };

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("inner_epsilon".into(), inner_eps);
    diagnostics.insert("prep_deviation".into(), dev);
    diagnostics.insert(
        "substitution_bound".into(),
        substitution_bound(ledger.count(), dev),
    );
    diagnostics.insert(
        "substitution_budget".into(),
        substitution_bound(ledger.count(), inner_eps),
    );
    diagnostics.insert("norm_drift".into(), drift);
    diagnostics.insert("success_amplitude_in".into(), norm2(&phi[..d]));
    Ok(ExecutionReport {
        algorithm: Algorithm::TenQuery,
        strategy: opts.strategy,
        mode: opts.mode,
        n,
        epsilon,
        t,
        big_t: plan.params.big_t,
        s: None,
        query_count: ledger.count(),
        ledger,
        success_amplitude: None,
        error_2norm: Some(err),
        error_trace: None,
        residual_t: plan.residual_t(),
        ideal: opts.ideal,
        overridden: opts.overridden(),
        diagnostics,
        output: Output::Pure(PureState::new(1 + t + n, v)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::haar_random_state;
    use crate::synthesis::Strategy;

    #[test]
    fn ideal_substitution_is_exact() {
        let psi = haar_random_state(2, 5);
        let opts = RunOptions {
            ideal: true,
            ..RunOptions::with_seed(5)
        };
        let r = run_ten_query(&psi, 0.1, &opts).unwrap();
        assert!(r.error_2norm.unwrap() < 1e-9, "{:?}", r.error_2norm);
        assert_eq!(r.query_count, 10);
    }

    #[test]
    fn real_run_within_epsilon_and_substitution_bound() {
        let psi = haar_random_state(2, 6);
        let r = run_ten_query(&psi, 0.1, &RunOptions::with_seed(6)).unwrap();
        let e = r.error_2norm.unwrap();
        assert!(e <= 0.1);
        assert!(e <= r.diagnostics["substitution_bound"] + 1e-12);
        assert!(e <= substitution_bound(10, 0.1 / (9.0 * 2f64.sqrt())));
        assert!(r.diagnostics["norm_drift"] < 1e-9);
    }

    #[test]
    fn hash_gamma_too_small() {
        let psi = haar_random_state(2, 6);
        let opts = RunOptions {
            strategy: Strategy::Hash,
            ..RunOptions::default()
        };
        assert!(matches!(
            run_ten_query(&psi, 0.1, &opts),
            Err(Error::Config(_))
        ));
    }
}
