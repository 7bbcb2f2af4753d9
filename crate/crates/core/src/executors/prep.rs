//! The one-query circuit `A^f` on registers `A` (t qubits) and `B` (n qubits),
//! and an exact stand-in with the same output form.

use rayon::prelude::*;

use super::gates::{apply_1q, apply_product, geometric_prep, Gate, HADAMARD};
use crate::clifford::{apply_in_place, apply_inverse_in_place, CliffordDesc};
use crate::error::{Error, Result};
use crate::numerics::{norm2, C64};
use crate::synthesis::hash::phase_value;
use crate::synthesis::params::{hash_alpha, ALPHA};
use crate::synthesis::{OracleSpec, ParsedStep};

/// Largest register the dense executors simulate, in qubits.
pub const MAX_QUBITS: usize = 24;

/// A unitary on `qubits()` qubits meant to be applied to `|0…0>`.
pub trait StatePrep: Sync {
    fn qubits(&self) -> usize;
    fn apply(&self, v: &mut [C64]);
    fn apply_adjoint(&self, v: &mut [C64]);

    fn output(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); 1 << self.qubits()];
        v[0] = C64::new(1.0, 0.0);
        self.apply(&mut v);
        v
    }
}

#[derive(Clone, Debug)]
enum Block {
    /// `C_j · diag(signs)`.
    Clifford {
        desc: CliffordDesc,
        signs: Vec<bool>,
    },
    /// `phase · diag(signs) · Π · (I ⊗ H^{n-k})`.
    Hash {
        k: usize,
        perm: Vec<u32>,
        inv_perm: Vec<u32>,
        signs: Vec<bool>,
        phase: C64,
    },
}

fn apply_signs(v: &mut [C64], signs: &[bool]) {
    for (a, &neg) in v.iter_mut().zip(signs) {
        if neg {
            *a = -*a;
        }
    }
}

fn permute(v: &mut [C64], map: &[u32]) {
    let old = v.to_vec();
    for (i, a) in old.into_iter().enumerate() {
        v[map[i] as usize] = a;
    }
}

impl Block {
    fn apply(&self, v: &mut [C64], n: usize) {
        match self {
            Block::Clifford { desc, signs } => {
                apply_signs(v, signs);
                apply_in_place(desc, v);
            }
            Block::Hash {
                k,
                perm,
                signs,
                phase,
                ..
            } => {
                for q in *k..n {
                    apply_1q(v, n, q, HADAMARD);
                }
                permute(v, perm);
                apply_signs(v, signs);
                v.iter_mut().for_each(|a| *a *= phase);
            }
        }
    }

    fn apply_adjoint(&self, v: &mut [C64], n: usize) {
        match self {
            Block::Clifford { desc, signs } => {
                apply_inverse_in_place(desc, v);
                apply_signs(v, signs);
            }
            Block::Hash {
                k,
                inv_perm,
                signs,
                phase,
                ..
            } => {
                let c = phase.conj();
                v.iter_mut().for_each(|a| *a *= c);
                apply_signs(v, signs);
                permute(v, inv_perm);
                for q in *k..n {
                    apply_1q(v, n, q, HADAMARD);
                }
            }
        }
    }
}

/// The permutation sending `(y, 0^{n-k})` to `support[y]` and every other
/// input, in increasing order, to the remaining outputs in increasing order.
fn hash_permutation(n: usize, k: usize, support: &[u64]) -> Vec<u32> {
    let dim = 1usize << n;
    let mut perm = vec![u32::MAX; dim];
    let mut used = vec![false; dim];
    for (y, &x) in support.iter().enumerate() {
        perm[y << (n - k)] = x as u32;
        used[x as usize] = true;
    }
    let mut free = (0..dim).filter(|&x| !used[x]);
    for p in perm.iter_mut().filter(|p| **p == u32::MAX) {
        *p = free.next().expect("counts agree") as u32;
    }
    perm
}

/// `A^f`: `L ⊗ H^n`, the phase query, the controlled step unitaries, `L† ⊗ I`.
#[derive(Clone, Debug)]
pub struct PostselectCircuit {
    n: usize,
    t: usize,
    beta: f64,
    l_gates: Vec<Gate>,
    blocks: Vec<Block>,
}

impl PostselectCircuit {
    /// Builds the circuit from parsed step descriptions and the sign table.
    pub fn from_parts(
        n: usize,
        t: usize,
        steps: &[ParsedStep],
        sign_rows: &[Vec<bool>],
    ) -> Result<Self> {
        if steps.len() != 1 << t || sign_rows.len() != steps.len() {
            return Err(Error::DimensionMismatch {
                expected: 1 << t,
                found: steps.len(),
            });
        }
        if t + n > MAX_QUBITS {
            return Err(Error::RegisterTooLarge {
                qubits: t + n,
                limit: MAX_QUBITS,
            });
        }
        let hash = matches!(steps[0], ParsedStep::Hash { .. });
        if steps
            .iter()
            .any(|s| matches!(s, ParsedStep::Hash { .. }) != hash)
        {
            return Err(Error::OracleMismatch("mixed step kinds".into()));
        }
        let alpha = if hash { hash_alpha(n) } else { ALPHA };
        let beta = (1.0 - alpha * alpha).sqrt();
        let blocks = steps
            .iter()
            .zip(sign_rows)
            .map(|(s, row)| match s {
                ParsedStep::Clifford(desc) => Block::Clifford {
                    desc: desc.clone(),
                    signs: row.clone(),
                },
                ParsedStep::Hash { state, imaginary } => {
                    let perm = hash_permutation(n, state.k(), state.support());
                    let mut inv_perm = vec![0u32; perm.len()];
                    for (i, &p) in perm.iter().enumerate() {
                        inv_perm[p as usize] = i as u32;
                    }
                    Block::Hash {
                        k: state.k(),
                        perm,
                        inv_perm,
                        signs: row.clone(),
                        phase: phase_value(*imaginary),
                    }
                }
            })
            .collect();
        Ok(Self {
            n,
            t,
            beta,
            l_gates: geometric_prep(beta.sqrt(), t),
            blocks,
        })
    }

    pub fn from_oracle(oracle: &OracleSpec) -> Result<Self> {
        let rows: Vec<Vec<bool>> = (0..oracle.big_t()).map(|j| oracle.sign_row(j)).collect();
        Self::from_parts(oracle.n(), oracle.t(), &oracle.parse_steps()?, &rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl PostselectCircuit {
    /// `L ⊗ H^n`.
    pub(crate) fn apply_front(&self, v: &mut [C64]) {
        let nq = self.t + self.n;
        apply_product(v, nq, 0, &self.l_gates, false);
        for q in self.t..nq {
            apply_1q(v, nq, q, HADAMARD);
        }
    }

    /// The phase query and the controlled step unitaries, block-wise on `j`.
    pub(crate) fn apply_blocks(&self, v: &mut [C64]) {
        let n = self.n;
        v.par_chunks_mut(1 << n)
            .zip(self.blocks.par_iter())
            .with_min_len(64)
            .for_each(|(slice, b)| b.apply(slice, n));
    }

    /// `L† ⊗ I`.
    pub(crate) fn apply_back(&self, v: &mut [C64]) {
        apply_product(v, self.t + self.n, 0, &self.l_gates, true);
    }
}

impl StatePrep for PostselectCircuit {
    fn qubits(&self) -> usize {
        self.t + self.n
    }

    fn apply(&self, v: &mut [C64]) {
        self.apply_front(v);
        self.apply_blocks(v);
        self.apply_back(v);
    }

    fn apply_adjoint(&self, v: &mut [C64]) {
        let (n, t) = (self.n, self.t);
        let nq = t + n;
        apply_product(v, nq, 0, &self.l_gates, false);
        v.par_chunks_mut(1 << n)
            .zip(self.blocks.par_iter())
            .with_min_len(64)
            .for_each(|(slice, b)| b.apply_adjoint(slice, n));
        for q in t..nq {
            apply_1q(v, nq, q, HADAMARD);
        }
        apply_product(v, nq, 0, &self.l_gates, true);
    }
}

/// A unitary with `U|0> = target`: a phase on `|0>` followed by a
/// Householder reflection.
#[derive(Clone, Debug)]
pub struct HouseholderPrep {
    qubits: usize,
    phase: C64,
    w: Vec<C64>,
}

impl HouseholderPrep {
    pub fn new(target: &[C64]) -> Result<Self> {
        let len = target.len();
        if !len.is_power_of_two() {
            return Err(Error::OutOfRange {
                what: "amplitude count",
                detail: format!("{len}"),
            });
        }
        let nrm = norm2(target);
        if (nrm - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange {
                what: "target norm",
                detail: format!("{nrm}"),
            });
        }
        let phase = if target[0].norm() > 0.0 {
            target[0] / target[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut w: Vec<C64> = target.iter().map(|a| -a).collect();
        w[0] += phase;
        let wn = norm2(&w);
        if wn > 0.0 {
            w.iter_mut().for_each(|a| *a /= wn);
        }
        Ok(Self {
            qubits: len.trailing_zeros() as usize,
            phase,
            w,
        })
    }

    fn reflect(&self, v: &mut [C64]) {
        let c: C64 = self.w.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
        if c != C64::new(0.0, 0.0) {
            for (a, b) in v.iter_mut().zip(&self.w) {
                *a -= 2.0 * c * b;
            }
        }
    }
}

impl StatePrep for HouseholderPrep {
    fn qubits(&self) -> usize {
        self.qubits
    }

    fn apply(&self, v: &mut [C64]) {
        v[0] *= self.phase;
        self.reflect(v);
    }

    fn apply_adjoint(&self, v: &mut [C64]) {
        self.reflect(v);
        v[0] *= self.phase.conj();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{diff_norm, haar_random_state, inner, PureState};
    use crate::synthesis::{
        build_plan, derive_hash_params, derive_params, plan_to_oracle, PlanMode,
    };

    fn check_unitary(p: &dyn StatePrep, seed: u64) {
        let v = haar_random_state(p.qubits(), seed).into_amps();
        let u = haar_random_state(p.qubits(), seed + 1).into_amps();
        let (mut pv, mut pu) = (v.clone(), u.clone());
        p.apply(&mut pv);
        p.apply(&mut pu);
        assert!((inner(&pv, &pu) - inner(&v, &u)).norm() < 1e-12);
        p.apply_adjoint(&mut pv);
        assert!(diff_norm(&pv, &v) < 1e-12);
    }

    #[test]
    fn householder_prepares_target() {
        for seed in 0..5 {
            let target = haar_random_state(4, seed).into_amps();
            let h = HouseholderPrep::new(&target).unwrap();
            assert!(diff_norm(&h.output(), &target) < 1e-13);
            check_unitary(&h, seed);
        }
        let e0 = PureState::basis(2, 0).into_amps();
        assert!(diff_norm(&HouseholderPrep::new(&e0).unwrap().output(), &e0) < 1e-15);
    }

    #[test]
    fn circuit_is_unitary_and_success_branch_matches_theory() {
        let psi = haar_random_state(2, 3);
        for params in [
            derive_params(2, 0.25).unwrap(),
            derive_hash_params(2, 0.25).unwrap(),
        ] {
            let plan = build_plan(&psi, &params, PlanMode::Exact, 1).unwrap();
            let c = PostselectCircuit::from_oracle(&plan_to_oracle(&plan)).unwrap();
            check_unitary(&c, 9);
            let phi = c.output();
            // θ = γ(ψ − η_T)/(1 − β^T)
            let mut eta_t = psi.clone();
            for s in &plan.steps {
                eta_t.sub_scaled(C64::new(s.coefficient, 0.0), &s.state());
            }
            let k = params.gamma / (1.0 - params.beta_t());
            let theory: Vec<C64> = psi
                .amps()
                .iter()
                .zip(eta_t.amps())
                .map(|(a, b)| (a - b) * k)
                .collect();
            assert!(diff_norm(&phi[..4], &theory) < 1e-12);
        }
    }

    #[test]
    fn hash_permutation_is_bijective() {
        let p = hash_permutation(3, 1, &[5, 2]);
        assert_eq!(p[0], 5);
        assert_eq!(p[4], 2);
        let mut sorted = p.clone();
        sorted.sort();
        assert_eq!(sorted, (0..8).collect::<Vec<u32>>());
    }
}
