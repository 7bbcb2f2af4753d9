//! A plain state-vector simulator over named bit ranges, used to cross-check
//! the structured evaluators on tiny instances.

use super::prep::MAX_QUBITS;
use crate::error::{Error, Result};
use crate::numerics::{C64, ONE, ZERO};

/// Qubits `first..first + bits` of the register (qubit 0 most significant).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Register {
    pub first: usize,
    pub bits: usize,
}

impl Register {
    pub fn new(first: usize, bits: usize) -> Self {
        Self { first, bits }
    }

    pub fn end(&self) -> usize {
        self.first + self.bits
    }
}

#[derive(Clone, Debug)]
pub struct DenseSim {
    qubits: usize,
    v: Vec<C64>,
}

impl DenseSim {
    /// `|0…0>` on `qubits` qubits.
    pub fn new(qubits: usize) -> Result<Self> {
        if qubits > MAX_QUBITS {
            return Err(Error::RegisterTooLarge {
                qubits,
                limit: MAX_QUBITS,
            });
        }
        let mut v = vec![ZERO; 1 << qubits];
        v[0] = ONE;
        Ok(Self { qubits, v })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn state(&self) -> &[C64] {
        &self.v
    }

    pub fn into_state(self) -> Vec<C64> {
        self.v
    }

    fn shift(&self, r: Register) -> usize {
        self.qubits - r.end()
    }

    /// Value of register `r` in basis index `idx`.
    pub fn field(&self, idx: usize, r: Register) -> usize {
        (idx >> self.shift(r)) & ((1 << r.bits) - 1)
    }

    /// `idx` with register `r` set to `val`.
    pub fn with_field(&self, idx: usize, r: Register, val: usize) -> usize {
        let sh = self.shift(r);
        (idx & !(((1 << r.bits) - 1) << sh)) | (val << sh)
    }

    /// Applies `op` to the sub-vector of register `r`, optionally only where
    /// register `ctrl.0` holds `ctrl.1`.
    pub fn apply_local(
        &mut self,
        r: Register,
        ctrl: Option<(Register, usize)>,
        op: impl Fn(&mut [C64]),
    ) {
        let d = 1usize << r.bits;
        let mut buf = vec![ZERO; d];
        for base in 0..self.v.len() {
            if self.field(base, r) != 0 {
                continue;
            }
            if let Some((c, val)) = ctrl {
                if self.field(base, c) != val {
                    continue;
                }
            }
            for (i, b) in buf.iter_mut().enumerate() {
                *b = self.v[self.with_field(base, r, i)];
            }
            op(&mut buf);
            for (i, b) in buf.iter().enumerate() {
                let idx = self.with_field(base, r, i);
                self.v[idx] = *b;
            }
        }
    }

    /// Moves the amplitude at each basis index `i` to `f(i)`; `f` must be a
    /// bijection.
    pub fn permute(&mut self, f: impl Fn(usize) -> usize) -> Result<()> {
        let mut out = vec![ZERO; self.v.len()];
        let mut hit = vec![false; self.v.len()];
        for (i, a) in self.v.iter().enumerate() {
            let j = f(i);
            if j >= out.len() || hit[j] {
                return Err(Error::OutOfRange {
                    what: "basis permutation",
                    detail: format!("{i} -> {j}"),
                });
            }
            hit[j] = true;
            out[j] = *a;
        }
        self.v = out;
        Ok(())
    }
}
