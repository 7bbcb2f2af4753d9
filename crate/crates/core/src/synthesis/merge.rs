//! Merging parallel phase queries into a single query.

use crate::error::{Error, Result};

/// A boolean function on `arity` input bits, as a table indexed by the input
/// read as a big-endian integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    arity: usize,
    bits: Vec<bool>,
}

impl TruthTable {
    pub fn new(arity: usize, bits: Vec<bool>) -> Result<Self> {
        if arity > 30 || bits.len() != 1 << arity {
            return Err(Error::DimensionMismatch {
                expected: 1 << arity.min(30),
                found: bits.len(),
            });
        }
        Ok(Self { arity, bits })
    }

    pub fn from_fn(arity: usize, f: impl Fn(u64) -> bool) -> Self {
        Self {
            arity,
            bits: (0..1u64 << arity).map(f).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, x: u64) -> bool {
        self.bits[x as usize]
    }
}

/// `F(x⁽¹⁾, …, x⁽ᵏ⁾) = f₁(x⁽¹⁾) ⊕ … ⊕ f_k(x⁽ᵏ⁾)`, with `x⁽¹⁾` in the most
/// significant input bits. A phase query to `F` equals the parallel phase
/// queries to every `f_j`.
pub fn merge_phase_oracles(fs: &[TruthTable], arities: &[usize]) -> Result<TruthTable> {
    if fs.len() != arities.len() {
        return Err(Error::DimensionMismatch {
            expected: fs.len(),
            found: arities.len(),
        });
    }
    for (f, &a) in fs.iter().zip(arities) {
        if f.arity != a {
            return Err(Error::DimensionMismatch {
                expected: a,
                found: f.arity,
            });
        }
    }
    let total: usize = arities.iter().sum();
    if total > 30 {
        return Err(Error::OutOfRange {
            what: "merged arity",
            detail: format!("{total} > 30"),
        });
    }
    Ok(TruthTable::from_fn(total, |x| {
        let mut shift = total;
        let mut acc = false;
        for f in fs {
            shift -= f.arity;
            acc ^= f.eval((x >> shift) & ((1u64 << f.arity) - 1));
        }
        acc
    }))
}
