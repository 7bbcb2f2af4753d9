//! States written as sums of per-register product branches.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::prep::MAX_QUBITS;
use crate::error::{Error, Result};
use crate::numerics::{C64, ONE, ZERO};

/// One register's state inside a branch.
#[derive(Clone, Debug)]
pub enum Factor {
    Basis(usize),
    /// Shared so repeated factors cost one inner product.
    Dense(Arc<Vec<C64>>),
}

impl Factor {
    pub fn dense(v: Vec<C64>) -> Self {
        Factor::Dense(Arc::new(v))
    }

    fn amp(&self, i: usize) -> C64 {
        match self {
            Factor::Basis(b) => {
                if *b == i {
                    ONE
                } else {
                    ZERO
                }
            }
            Factor::Dense(v) => v[i],
        }
    }
}

type Cache = HashMap<(usize, usize), C64>;

/// `<a|b>`, with dense-dense products cached by allocation.
fn factor_inner(a: &Factor, b: &Factor, cache: &mut Cache) -> C64 {
    match (a, b) {
        (Factor::Basis(i), Factor::Basis(j)) => {
            if i == j {
                ONE
            } else {
                ZERO
            }
        }
        (Factor::Basis(i), Factor::Dense(v)) => v[*i],
        (Factor::Dense(v), Factor::Basis(j)) => v[*j].conj(),
        (Factor::Dense(u), Factor::Dense(v)) => {
            let key = (Arc::as_ptr(u) as usize, Arc::as_ptr(v) as usize);
            *cache
                .entry(key)
                .or_insert_with(|| u.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum())
        }
    }
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub weight: C64,
    pub factors: Vec<Factor>,
}

/// `Σ_b w_b ⊗_r f_{b,r}` over registers of fixed sizes (register 0 most
/// significant when expanded).
#[derive(Clone, Debug)]
pub struct BranchState {
    qubits: Vec<usize>,
    branches: Vec<Branch>,
}

impl BranchState {
    pub fn new(qubits: Vec<usize>) -> Self {
        Self {
            qubits,
            branches: Vec::new(),
        }
    }

    pub fn register_qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn total_qubits(&self) -> usize {
        self.qubits.iter().sum()
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn push(&mut self, weight: C64, factors: Vec<Factor>) -> Result<()> {
        if factors.len() != self.qubits.len() {
            return Err(Error::DimensionMismatch {
                expected: self.qubits.len(),
                found: factors.len(),
            });
        }
        for (f, &q) in factors.iter().zip(&self.qubits) {
            let ok = match f {
                Factor::Basis(i) => *i < 1 << q,
                Factor::Dense(v) => v.len() == 1 << q,
            };
            if !ok {
                return Err(Error::DimensionMismatch {
                    expected: 1 << q,
                    found: 0,
                });
            }
        }
        self.branches.push(Branch { weight, factors });
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &BranchState) -> Result<C64> {
        if self.qubits != other.qubits {
            return Err(Error::DimensionMismatch {
                expected: self.total_qubits(),
                found: other.total_qubits(),
            });
        }
        let parts: Vec<C64> = self
            .branches
            .par_iter()
            .map_init(Cache::new, |cache, a| {
                let mut acc = ZERO;
                for b in &other.branches {
                    let mut prod = a.weight.conj() * b.weight;
                    for (fa, fb) in a.factors.iter().zip(&b.factors) {
                        if prod == ZERO {
                            break;
                        }
                        prod *= factor_inner(fa, fb, cache);
                    }
                    acc += prod;
                }
                acc
            })
            .collect();
        Ok(parts.into_iter().sum())
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).expect("same shape").re.max(0.0).sqrt()
    }

    /// `‖self − other‖` from the three inner products.
    pub fn distance(&self, other: &BranchState) -> Result<f64> {
        let aa = self.inner(self)?.re;
        let bb = other.inner(other)?.re;
        let ab = self.inner(other)?.re;
        Ok((aa + bb - 2.0 * ab).max(0.0).sqrt())
    }

    /// The full state vector.
    pub fn expand(&self) -> Result<Vec<C64>> {
        let total = self.total_qubits();
        if total > MAX_QUBITS {
            return Err(Error::RegisterTooLarge {
                qubits: total,
                limit: MAX_QUBITS,
            });
        }
        let mut out = vec![ZERO; 1 << total];
        for b in &self.branches {
            let mut v = vec![b.weight];
            for (f, &q) in b.factors.iter().zip(&self.qubits) {
                let d = 1usize << q;
                let mut next = Vec::with_capacity(v.len() * d);
                for a in &v {
                    next.extend((0..d).map(|i| a * f.amp(i)));
                }
                v = next;
            }
            out.iter_mut().zip(&v).for_each(|(o, x)| *o += x);
        }
        Ok(out)
    }
}
