//! The postselected one-query circuit `A^f`.

use std::collections::BTreeMap;

use super::prep::{PostselectCircuit, StatePrep};
use super::{Algorithm, ExecutionReport, Output, QueryLedger};
use crate::error::{Error, Result};
use crate::numerics::{diff_norm, norm2, PureState, C64, ZERO};
use crate::synthesis::{parse_step_descriptions, OracleSpec, SynthesisPlan};

/// `γ|0^t>ψ + √(1−γ²)τ` where `τ` is the normalized `A ≠ 0` part of `phi`.
pub(crate) fn ideal_output(phi: &[C64], psi: &[C64], gamma: f64) -> Vec<C64> {
    let d = psi.len();
    let rest = norm2(&phi[d..]);
    let c = (1.0 - gamma * gamma).sqrt();
    let mut out = Vec::with_capacity(phi.len());
    out.extend(psi.iter().map(|a| a * gamma));
    out.extend(
        phi[d..]
            .iter()
            .map(|a| if rest > 0.0 { a * (c / rest) } else { ZERO }),
    );
    out
}

fn check_consistent(plan: &SynthesisPlan, oracle: &OracleSpec) -> Result<()> {
    let n = plan.n();
    if oracle.n() != n || oracle.t() != plan.params.t || oracle.big_t() != plan.steps.len() {
        return Err(Error::OracleMismatch(format!(
            "oracle has n={} t={} T={}, plan has n={n} t={} T={}",
            oracle.n(),
            oracle.t(),
            oracle.big_t(),
            plan.params.t,
            plan.steps.len()
        )));
    }
    for (j, s) in plan.steps.iter().enumerate() {
        if oracle.sign_row(j) != s.sign_row(n) {
            return Err(Error::OracleMismatch(format!(
                "sign table differs at step {j}"
            )));
        }
    }
    Ok(())
}

/// The description query: `z` read bit by bit from the oracle.
fn query_description(oracle: &OracleSpec, len: usize) -> Result<Vec<u8>> {
    let sel = 1u64 << (oracle.total_input_bits() - 1);
    let mut z = vec![0u8; len];
    for i in 0..8 * len {
        if oracle.query(sel | i as u64)? {
            z[i / 8] ^= 1 << (i % 8);
        }
    }
    Ok(z)
}

fn sign_rows_by_query(oracle: &OracleSpec) -> Result<Vec<Vec<bool>>> {
    let dim = 1u64 << oracle.n();
    (0..oracle.big_t() as u64)
        .map(|j| (0..dim).map(|x| oracle.query(j * dim + x)).collect())
        .collect()
}

/// Runs `A^f` and returns the circuit, its output and the report.
pub(crate) fn simulate(
    plan: &SynthesisPlan,
    oracle: &OracleSpec,
) -> Result<(PostselectCircuit, Vec<C64>, ExecutionReport)> {
    check_consistent(plan, oracle)?;
    let n = plan.n();
    let z = query_description(oracle, plan.z.len())?;
    if z != plan.z {
        return Err(Error::OracleMismatch(
            "description register differs from the plan's z".into(),
        ));
    }
    let steps = parse_step_descriptions(n, plan.steps.len(), &z)?;
    let rows: Vec<Vec<bool>> = (0..oracle.big_t()).map(|j| oracle.sign_row(j)).collect();
    let circuit = PostselectCircuit::from_parts(n, plan.params.t, &steps, &rows)?;
    let phi = circuit.output();

    let gamma = plan.params.gamma;
    let d = 1usize << n;
    let theta = &phi[..d];
    let success = norm2(theta);
    let ideal = ideal_output(&phi, plan.psi.amps(), gamma);
    let err = diff_norm(&phi, &ideal);

    let mut ledger = QueryLedger::default();
    ledger.record("phase and description");
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("gamma".into(), gamma);
    diagnostics.insert("beta_T".into(), plan.params.beta_t());
    diagnostics.insert("state_norm".into(), norm2(&phi));
    diagnostics.insert("z_bytes".into(), z.len() as f64);
    let report = ExecutionReport {
        algorithm: Algorithm::Postselect,
        strategy: plan.params.strategy,
        mode: plan.mode.kind(),
        n,
        epsilon: plan.params.epsilon,
        t: plan.params.t,
        big_t: plan.params.big_t,
        s: None,
        query_count: ledger.count(),
        ledger,
        success_amplitude: Some(success),
        error_2norm: Some(err),
        error_trace: None,
        residual_t: plan.residual_t(),
        ideal: false,
        overridden: plan.params.t_overridden,
        diagnostics,
        output: Output::Pure(PureState::new(n + plan.params.t, phi.clone())?),
    };
    Ok((circuit, phi, report))
}

/// Simulates `A^f|0…0>` on `t + n` qubits with `z` tracked classically.
pub fn run_postselect(plan: &SynthesisPlan, oracle: &OracleSpec) -> Result<ExecutionReport> {
    Ok(simulate(plan, oracle)?.2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZValidation {
    /// Distinct description-register values carrying amplitude.
    pub keys: usize,
    /// Largest off-diagonal entry of the reduced state on the `z` register.
    pub off_diagonal: f64,
    /// Weight of the plan's `z` in that reduced state.
    pub weight_on_z: f64,
    /// Distance between the `AB` state attached to `z` and the classical run.
    pub state_difference: f64,
}

/// Reruns `A^f` with the description register kept as a superposition over
/// byte strings, for small instances.
pub fn validate_z_register(plan: &SynthesisPlan, oracle: &OracleSpec) -> Result<ZValidation> {
    if plan.params.t + plan.n() > 12 || plan.z.len() > 1 << 16 {
        return Err(Error::RegisterTooLarge {
            qubits: plan.params.t + plan.n() + 8 * plan.z.len(),
            limit: 12,
        });
    }
    let (circuit, phi, _) = simulate(plan, oracle)?;
    let n = plan.n();
    let mut v = vec![ZERO; phi.len()];
    v[0] = C64::new(1.0, 0.0);
    circuit.apply_front(&mut v);

    let mut reg: BTreeMap<Vec<u8>, Vec<C64>> = BTreeMap::new();
    reg.insert(vec![0u8; plan.z.len()], v);
    let desc = query_description(oracle, plan.z.len())?;
    reg = reg
        .into_iter()
        .map(|(c, v)| (c.iter().zip(&desc).map(|(a, b)| a ^ b).collect(), v))
        .collect();

    let rows = sign_rows_by_query(oracle)?;
    for (c, v) in reg.iter_mut() {
        let steps = parse_step_descriptions(n, plan.steps.len(), c)?;
        let cc = PostselectCircuit::from_parts(n, plan.params.t, &steps, &rows)?;
        cc.apply_blocks(v);
        cc.apply_back(v);
    }

    let entries: Vec<(&Vec<u8>, &Vec<C64>)> = reg.iter().collect();
    let mut off: f64 = 0.0;
    for (i, a) in entries.iter().enumerate() {
        for b in &entries[i + 1..] {
            let ov: C64 = a.1.iter().zip(b.1.iter()).map(|(x, y)| x * y.conj()).sum();
            off = off.max(ov.norm());
        }
    }
    let (weight, diff) = match reg.get(&plan.z) {
        Some(v) => (norm2(v).powi(2), diff_norm(v, &phi)),
        None => (0.0, f64::INFINITY),
    };
    Ok(ZValidation {
        keys: reg.len(),
        off_diagonal: off,
        weight_on_z: weight,
        state_difference: diff,
    })
}
