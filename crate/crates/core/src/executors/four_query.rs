//! The clean four-query circuit: `s` copies of `A^f`, select the first
//! success into `K`, swap it out, undo every copy, then `L†` on `K`.
//!
//! Registers, most significant first: `K` (log s), `O` (n), then per copy
//! `(anc, A, B)` with `1 + t + n` qubits.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::branch::{BranchState, Factor};
use super::dense::{DenseSim, Register};
use super::gates::{apply_product, geometric_prep};
use super::postselect::{ideal_output, simulate};
use super::prep::{HouseholderPrep, PostselectCircuit, StatePrep};
use super::ten_query::{amplitude_gate, AncillaPrep};
use super::{
    prepare_inner, substitution_bound, Algorithm, ExecutionReport, Output, QueryLedger, RunOptions,
};
use crate::error::{Error, Result};
use crate::numerics::{diff_norm, norm2, PureState, C64, ONE, ZERO};
use crate::synthesis::params::{check_epsilon, params_for};
use crate::synthesis::SynthesisPlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluator {
    Structured,
    Dense,
}

/// Smallest power of two `≥ ln(4/ε) / ln(1/δ)`.
pub fn repetitions(epsilon: f64, delta: f64) -> usize {
    let x = (4.0 / epsilon).ln() / (1.0 / delta).ln();
    (x.ceil().max(1.0) as usize).next_power_of_two()
}

/// `U^f = (2θ − I) · R · W` with `R` negating `anc = 0, A ≠ 0`.
struct Uf<'a> {
    w: AncillaPrep<'a>,
    n: usize,
    t: usize,
}

impl Uf<'_> {
    fn flip_good(&self, v: &mut [C64]) {
        v[1 << self.n..1 << (self.t + self.n)]
            .iter_mut()
            .for_each(|a| *a = -*a);
    }

    #[cfg(test)]
    fn apply(&self, v: &mut [C64]) {
        self.w.apply(v);
        self.flip_good(v);
        self.w.reflect_about_output(v);
    }

    fn apply_adjoint(&self, v: &mut [C64]) {
        self.w.reflect_about_output(v);
        self.flip_good(v);
        self.w.apply_adjoint(v);
    }
}

fn pad(v: &[C64]) -> Vec<C64> {
    let mut out = v.to_vec();
    out.resize(2 * v.len(), ZERO);
    out
}

/// Everything the evaluators need about one copy.
#[derive(Clone)]
struct Copy {
    n: usize,
    t: usize,
    s: usize,
    gamma: f64,
    delta: f64,
    /// Deviation of the copy state from its ideal form.
    deviation: f64,
    psi: Vec<C64>,
    phi: Vec<C64>,
    /// `A = 0` and `A ≠ 0` parts of `phi`.
    success: Vec<C64>,
    fail: Vec<C64>,
    ideal_phi: Vec<C64>,
}

fn split(phi: &[C64], n: usize) -> (Vec<C64>, Vec<C64>) {
    let d = 1usize << n;
    let mut success = phi.to_vec();
    let mut fail = phi.to_vec();
    success[d..].iter_mut().for_each(|a| *a = ZERO);
    fail[..d].iter_mut().for_each(|a| *a = ZERO);
    (success, fail)
}

fn with_prep<T>(
    copy: &Copy,
    circuit: &PostselectCircuit,
    ideal: bool,
    f: impl FnOnce(&dyn StatePrep) -> Result<T>,
) -> Result<T> {
    if ideal {
        f(&HouseholderPrep::new(&copy.ideal_phi)?)
    } else {
        f(circuit)
    }
}

fn line7_target(c: &Copy, qubits: &[usize]) -> Result<BranchState> {
    let rest = norm2(&c.fail);
    let tau = Factor::dense(pad(&c.fail.iter().map(|a| a / rest).collect::<Vec<_>>()));
    let mut good = vec![ZERO; 2 << (c.t + c.n)];
    good[..c.psi.len()].copy_from_slice(&c.psi);
    let good = Factor::dense(good);
    let phi = Factor::dense(pad(&c.ideal_phi));
    let mut st = BranchState::new(qubits.to_vec());
    let mut w = c.gamma;
    for k in 0..c.s {
        let mut f = vec![Factor::Basis(k), Factor::Basis(0)];
        f.extend(std::iter::repeat_n(tau.clone(), k));
        f.push(good.clone());
        f.extend(std::iter::repeat_n(phi.clone(), c.s - k - 1));
        st.push(C64::new(w, 0.0), f)?;
        w *= c.delta;
    }
    Ok(st)
}

fn final_target(c: &Copy, qubits: &[usize]) -> Result<BranchState> {
    let norm = (1.0 - c.delta.powi(2 * c.s as i32)).sqrt();
    let psi = Factor::dense(c.psi.clone());
    let mut st = BranchState::new(qubits.to_vec());
    let mut w = c.gamma / norm;
    for k in 0..c.s {
        let mut f = vec![Factor::Basis(k), psi.clone()];
        f.extend(std::iter::repeat_n(Factor::Basis(0), c.s));
        st.push(C64::new(w, 0.0), f)?;
        w *= c.delta;
    }
    Ok(st)
}

struct Structured {
    line3_norm: f64,
    line7: BranchState,
    line16: BranchState,
}

fn structured(c: &Copy, prep: &dyn StatePrep) -> Result<Structured> {
    let (n, t, s) = (c.n, c.t, c.s);
    let kq = s.trailing_zeros() as usize;
    let mut qubits = vec![kq, n];
    qubits.extend(std::iter::repeat_n(1 + t + n, s));

    let (phi, success, fail) = (&c.phi, &c.success, &c.fail);

    // lines 1–3: s copies of A^f|0>
    let line3_norm = norm2(phi).powi(s as i32);

    // lines 4–7: K holds the first success; the all-fail branch leaves K = 0
    let phi_f = Factor::dense(pad(phi));
    let succ_f = Factor::dense(pad(success));
    let fail_f = Factor::dense(pad(fail));
    let mut line7 = BranchState::new(qubits.clone());
    for k in 0..s {
        let mut f = vec![Factor::Basis(k), Factor::Basis(0)];
        f.extend(std::iter::repeat_n(fail_f.clone(), k));
        f.push(succ_f.clone());
        f.extend(std::iter::repeat_n(phi_f.clone(), s - k - 1));
        line7.push(ONE, f)?;
    }
    let mut junk = vec![Factor::Basis(0), Factor::Basis(0)];
    junk.extend(std::iter::repeat_n(fail_f.clone(), s));
    line7.push(ONE, junk)?;

    // lines 8–16: swap B_k into O, U^f† on earlier copies, A^f† on later ones
    let uf = Uf {
        w: AncillaPrep {
            g: amplitude_gate(0.5 / c.delta),
            prep,
        },
        n,
        t,
    };
    let mut uf_fail = pad(fail);
    uf.apply_adjoint(&mut uf_fail);
    let undo = |v: &[C64]| {
        let mut u = v.to_vec();
        prep.apply_adjoint(&mut u);
        Factor::dense(pad(&u))
    };
    let ad_phi = undo(phi);
    let ad_fail = undo(fail);
    let uf_fail = Factor::dense(uf_fail);
    let theta = Factor::dense(phi[..1 << n].to_vec());

    let mut line16 = BranchState::new(qubits.clone());
    for k in 0..s {
        let mut f = vec![Factor::Basis(k), theta.clone()];
        f.extend(std::iter::repeat_n(uf_fail.clone(), k));
        f.push(Factor::Basis(0));
        f.extend(std::iter::repeat_n(ad_phi.clone(), s - k - 1));
        line16.push(ONE, f)?;
    }
    // all-fail branch: copy 0's B goes to O, so split it by the value of A_0
    let d = 1usize << n;
    for a in 1..1usize << t {
        let block = &fail[a * d..(a + 1) * d];
        if block.iter().all(|x| *x == ZERO) {
            continue;
        }
        let mut f = vec![
            Factor::Basis(0),
            Factor::Dense(Arc::new(block.to_vec())),
            Factor::Basis(a * d),
        ];
        f.extend(std::iter::repeat_n(ad_fail.clone(), s - 1));
        line16.push(ONE, f)?;
    }
    Ok(Structured {
        line3_norm,
        line7,
        line16,
    })
}

/// Dense Ψ₁₆ for tiny overrides.
fn dense_line16(c: &Copy, prep: &dyn StatePrep) -> Result<Vec<C64>> {
    let (n, t, s) = (c.n, c.t, c.s);
    let kq = s.trailing_zeros() as usize;
    let w = 1 + t + n;
    let mut sim = DenseSim::new(kq + n + s * w)?;
    let kreg = Register::new(0, kq);
    let out = Register::new(kq, n);
    let copy = |j: usize| Register::new(kq + n + j * w, w);
    let areg = |j: usize| Register::new(kq + n + j * w + 1, t);
    let breg = |j: usize| Register::new(kq + n + j * w + 1 + t, n);
    let ab = |j: usize| Register::new(kq + n + j * w + 1, t + n);

    for j in 0..s {
        sim.apply_local(ab(j), None, |v| prep.apply(v));
    }
    let view = sim.clone();
    sim.permute(
        |idx| match (0..s).find(|&j| view.field(idx, areg(j)) == 0) {
            Some(k) => view.with_field(idx, kreg, view.field(idx, kreg) ^ k),
            None => idx,
        },
    )?;
    let view = sim.clone();
    sim.permute(|idx| {
        let k = view.field(idx, kreg);
        let (o, b) = (view.field(idx, out), view.field(idx, breg(k)));
        view.with_field(view.with_field(idx, out, b), breg(k), o)
    })?;
    let uf = Uf {
        w: AncillaPrep {
            g: amplitude_gate(0.5 / c.delta),
            prep,
        },
        n,
        t,
    };
    for k in 0..s {
        for j in 0..s {
            if j < k {
                sim.apply_local(copy(j), Some((kreg, k)), |v| uf.apply_adjoint(v));
            } else if j > k {
                sim.apply_local(ab(j), Some((kreg, k)), |v| prep.apply_adjoint(v));
            }
        }
    }
    Ok(sim.into_state())
}

/// Applies `L†` on `K` to an expanded state.
fn undo_l(v: &mut [C64], c: &Copy) {
    let kq = c.s.trailing_zeros() as usize;
    let total = v.len().trailing_zeros() as usize;
    apply_product(v, total, 0, &geometric_prep(c.delta, kq), true);
}

fn final_error_dense(v: &[C64], c: &Copy) -> f64 {
    let mut target = vec![ZERO; v.len()];
    let shift = v.len().trailing_zeros() as usize - c.n - c.s.trailing_zeros() as usize;
    for (x, a) in c.psi.iter().enumerate() {
        target[x << shift] = *a;
    }
    diff_norm(v, &target)
}

fn build_copy(
    psi: &PureState,
    epsilon: f64,
    opts: &RunOptions,
) -> Result<(Copy, SynthesisPlan, PostselectCircuit)> {
    let n = psi.n();
    let gamma = params_for(n, epsilon, opts.strategy)?.gamma;
    let delta = (1.0 - gamma * gamma).sqrt();
    if 0.5 / delta > 1.0 {
        return Err(Error::Config(format!(
            "four-query needs delta >= 1/2, got {delta}"
        )));
    }
    let s = match opts.s_override {
        Some(s) if s == 0 || !s.is_power_of_two() => {
            return Err(Error::Config(format!(
                "s override must be a power of two, got {s}"
            )))
        }
        Some(s) => s,
        None => repetitions(epsilon, delta),
    };
    let inner_eps = epsilon / (2f64.sqrt() * 8.0 * s as f64);
    let (plan, oracle) = prepare_inner(psi, inner_eps, opts)?;
    let (circuit, phi, inner) = simulate(&plan, &oracle)?;
    let (success, fail) = split(&phi, n);
    let ideal_phi = ideal_output(&phi, psi.amps(), gamma);
    let copy = Copy {
        n,
        t: plan.params.t,
        s,
        gamma,
        delta,
        deviation: inner.error_2norm.unwrap_or(f64::NAN),
        psi: psi.amps().to_vec(),
        phi,
        success,
        fail,
        ideal_phi,
    };
    Ok((copy, plan, circuit))
}

pub fn run_four_query(
    psi: &PureState,
    epsilon: f64,
    evaluator: Evaluator,
    opts: &RunOptions,
) -> Result<ExecutionReport> {
    check_epsilon(epsilon)?;
    let (c, plan, circuit) = build_copy(psi, epsilon, opts)?;
    let mut diagnostics = BTreeMap::new();
    let mut ledger = QueryLedger::default();
    ledger.record(format!("{} copies of A^f, merged", c.s));
    ledger.record("W^dagger in U^f^dagger (j < k), A^f^dagger (j > k), uncompute z_k");
    ledger.record("W in U^f^dagger (j < k)");
    ledger.record("W^dagger in U^f^dagger (j < k)");

    // the ideal sub-mode runs every line on the exact copy state
    let c = if opts.ideal {
        let (success, fail) = split(&c.ideal_phi, c.n);
        Copy {
            phi: c.ideal_phi.clone(),
            success,
            fail,
            ..c
        }
    } else {
        c
    };
    let st = with_prep(&c, &circuit, opts.ideal, |p| structured(&c, p))?;
    let qubits = st.line16.register_qubits().to_vec();

    let target7 = line7_target(&c, &qubits)?;
    diagnostics.insert("line7_distance".into(), st.line7.distance(&target7)?);
    diagnostics.insert("delta_s".into(), c.delta.powi(c.s as i32));
    let target16 = final_target(&c, &qubits)?;
    let err = st.line16.distance(&target16)?;
    let drift = [st.line3_norm, st.line7.norm(), st.line16.norm()]
        .iter()
        .map(|x| (x - 1.0).abs())
        .fold(0.0, f64::max);
    diagnostics.insert("norm_drift".into(), drift);
    diagnostics.insert("branches".into(), st.line16.len() as f64);
    let dev = if opts.ideal { 0.0 } else { c.deviation };
    diagnostics.insert("prep_deviation".into(), dev);
    diagnostics.insert(
        "substitution_bound".into(),
        substitution_bound(4 * c.s, dev),
    );
    diagnostics.insert(
        "inner_epsilon".into(),
        epsilon / (2f64.sqrt() * 8.0 * c.s as f64),
    );

    let mut error = err;
    let mut output = Output::Branches(st.line16.clone());
    if evaluator == Evaluator::Dense {
        let mut dense = with_prep(&c, &circuit, opts.ideal, |p| dense_line16(&c, p))?;
        let mut expanded = st.line16.expand()?;
        undo_l(&mut dense, &c);
        undo_l(&mut expanded, &c);
        diagnostics.insert("structured_vs_dense".into(), diff_norm(&dense, &expanded));
        error = final_error_dense(&dense, &c);
        let q = dense.len().trailing_zeros() as usize;
        output = Output::Pure(PureState::new(q, dense)?);
    }

    Ok(ExecutionReport {
        algorithm: Algorithm::FourQuery,
        strategy: opts.strategy,
        mode: opts.mode,
        n: c.n,
        epsilon,
        t: c.t,
        big_t: plan.params.big_t,
        s: Some(c.s),
        query_count: ledger.count(),
        ledger,
        success_amplitude: None,
        error_2norm: Some(error),
        error_trace: None,
        residual_t: plan.residual_t(),
        ideal: opts.ideal,
        overridden: opts.overridden(),
        diagnostics,
        output,
    })
}
