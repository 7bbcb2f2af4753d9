//! `s` parallel copies of `A^f` and first-success selection.

use std::collections::BTreeMap;

use super::dense::{DenseSim, Register};
use super::postselect::simulate;
use super::{prepare_inner, Algorithm, ExecutionReport, Output, QueryLedger, RunOptions};
use crate::error::{Error, Result};
use crate::numerics::{
    norm2, partial_trace_keep_first, trace_distance_mixed, DensityMatrix, PureState, C64, ONE, ZERO,
};
use crate::synthesis::params::{check_epsilon, params_for};

/// `⌈2 ln(2/ε) / γ²⌉`.
pub fn repetitions(epsilon: f64, gamma: f64) -> usize {
    (2.0 * (2.0 / epsilon).ln() / (gamma * gamma)).ceil() as usize
}

/// Output register after selecting the first copy whose `A` register reads
/// `0^t`, or `|0^n>` if none does. Each copy is a `t + n`-qubit vector with
/// `A` most significant.
pub fn first_success_mixture(copies: &[&[C64]], n: usize) -> Result<DensityMatrix> {
    let d = 1usize << n;
    let mut fail = 1.0;
    let mut terms: Vec<(f64, &[C64])> = Vec::with_capacity(copies.len() + 1);
    for c in copies {
        if c.len() < d || !c.len().is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: c.len(),
            });
        }
        let theta = &c[..d];
        terms.push((fail, theta));
        fail *= (1.0 - norm2(theta).powi(2)).max(0.0);
    }
    let mut e0 = vec![ZERO; d];
    e0[0] = ONE;
    terms.push((fail, &e0));
    DensityMatrix::mixture(n, &terms)
}

/// The same selection carried out on the full `n + s(t + n)`-qubit register.
pub fn first_success_dense(copies: &[&[C64]], n: usize, t: usize) -> Result<DensityMatrix> {
    let w = t + n;
    if copies.iter().any(|c| c.len() != 1 << w) {
        return Err(Error::DimensionMismatch {
            expected: 1 << w,
            found: copies[0].len(),
        });
    }
    let mut sim = DenseSim::new(n + copies.len() * w)?;
    let out = Register::new(0, n);
    let regs: Vec<(Register, Register)> = (0..copies.len())
        .map(|k| (Register::new(n + k * w, t), Register::new(n + k * w + t, n)))
        .collect();
    for (k, c) in copies.iter().enumerate() {
        sim.apply_local(Register::new(n + k * w, w), None, |buf| {
            let a = buf[0];
            buf.iter_mut().zip(c.iter()).for_each(|(b, x)| *b = a * x);
        });
    }
    let view = sim.clone();
    sim.permute(
        |idx| match regs.iter().find(|(a, _)| view.field(idx, *a) == 0) {
            Some(&(_, b)) => {
                let (o, x) = (view.field(idx, out), view.field(idx, b));
                view.with_field(view.with_field(idx, out, x), b, o)
            }
            None => idx,
        },
    )?;
    let q = sim.qubits();
    partial_trace_keep_first(&PureState::new(q, sim.into_state())?, n)
}

/// Reduced output of the one-query circuit, composed analytically from a
/// single simulated copy.
pub fn run_one_query(psi: &PureState, epsilon: f64, opts: &RunOptions) -> Result<ExecutionReport> {
    check_epsilon(epsilon)?;
    let n = psi.n();
    let gamma = params_for(n, epsilon, opts.strategy)?.gamma;
    let s = match opts.s_override {
        Some(0) => return Err(Error::Config("s override must be positive".into())),
        Some(s) => s,
        None => repetitions(epsilon, gamma),
    };
    let (plan, oracle) = prepare_inner(psi, epsilon / (2.0 * s as f64), opts)?;
    let (_, phi, inner) = simulate(&plan, &oracle)?;
    let copies = vec![phi.as_slice(); s];
    let rho = first_success_mixture(&copies, n)?;
    let err = trace_distance_mixed(&rho, &psi.outer())?;

    let p0 = norm2(&phi[..1 << n]).powi(2);
    let mut ledger = QueryLedger::default();
    ledger.record(format!("{s} copies of A^f, merged"));
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert(
        "copy_error_2norm".into(),
        inner.error_2norm.unwrap_or(f64::NAN),
    );
    diagnostics.insert("copy_success_probability".into(), p0);
    diagnostics.insert("all_fail_probability".into(), (1.0 - p0).powi(s as i32));
    diagnostics.insert("trace".into(), rho.trace().re);
    Ok(ExecutionReport {
        algorithm: Algorithm::OneQuery,
        strategy: opts.strategy,
        mode: opts.mode,
        n,
        epsilon,
        t: plan.params.t,
        big_t: plan.params.big_t,
        s: Some(s),
        query_count: ledger.count(),
        ledger,
        success_amplitude: None,
        error_2norm: None,
        error_trace: Some(err),
        residual_t: plan.residual_t(),
        ideal: false,
        overridden: opts.overridden(),
        diagnostics,
        output: Output::Reduced(rho),
    })
}
