//! Hash states: uniform-magnitude signed states over a support of size `2^k`
//! on which a `k × n` GF(2) matrix is injective.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::f2linalg::{BitWriter, F2Matrix};
use crate::numerics::{PureState, C64};
use crate::rng;

pub const DEFAULT_HASH_TRIALS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashState {
    n: usize,
    k: usize,
    a: F2Matrix,
    /// `support[y]` is the unique support element with `A x = y`.
    support: Vec<u64>,
    /// Sign bits aligned with `support`; `true` means −1.
    signs: Vec<bool>,
}

impl HashState {
    pub fn new(n: usize, a: F2Matrix, support: Vec<u64>, signs: Vec<bool>) -> Result<Self> {
        let k = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.cols(),
            });
        }
        if support.len() != 1 << k || signs.len() != 1 << k {
            return Err(Error::DimensionMismatch {
                expected: 1 << k,
                found: support.len().min(signs.len()),
            });
        }
        for (y, &x) in support.iter().enumerate() {
            if x >> n != 0 {
                return Err(Error::Format(format!("support index {x} exceeds 2^{n}")));
            }
            if a.apply_unchecked(x) != y as u64 {
                return Err(Error::Format(format!(
                    "support element {x} does not hash to {y}"
                )));
            }
        }
        Ok(Self {
            n,
            k,
            a,
            support,
            signs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &F2Matrix {
        &self.a
    }

    pub fn support(&self) -> &[u64] {
        &self.support
    }

    pub fn signs(&self) -> &[bool] {
        &self.signs
    }

    /// All images `A x` over the support are distinct.
    pub fn is_injective(&self) -> bool {
        let imgs: HashSet<u64> = self
            .support
            .iter()
            .map(|&x| self.a.apply_unchecked(x))
            .collect();
        imgs.len() == self.support.len()
    }

    /// Real amplitudes of the state.
    pub fn amplitudes(&self) -> Vec<f64> {
        let a = (1.0 / (1u64 << self.k) as f64).sqrt();
        let mut v = vec![0.0; 1 << self.n];
        for (&x, &neg) in self.support.iter().zip(&self.signs) {
            v[x as usize] = if neg { -a } else { a };
        }
        v
    }

    pub fn state(&self) -> PureState {
        PureState::from_real(self.n, &self.amplitudes()).expect("dimension fixed")
    }

    /// Overwrites the signs; used by the perturbed mode.
    pub(crate) fn with_signs(mut self, signs: Vec<bool>) -> Self {
        assert_eq!(signs.len(), self.signs.len());
        self.signs = signs;
        self
    }

    /// `k` as one byte, `A`, the support as `2^k` u64 LE, then the sign bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.k as u8];
        out.extend(self.a.to_bytes());
        for &x in &self.support {
            out.extend(x.to_le_bytes());
        }
        let mut w = BitWriter::default();
        self.signs.iter().for_each(|&b| w.push(b));
        out.extend(w.finish());
        out
    }

    pub fn encoded_len(n: usize, k: usize) -> usize {
        1 + 4 + (k * n).div_ceil(8) + 8 * (1 << k) + (1usize << k).div_ceil(8)
    }

    pub fn from_bytes(n: usize, bytes: &[u8]) -> Result<(Self, usize)> {
        let trunc = || Error::Format("truncated hash step".into());
        let k = *bytes.first().ok_or_else(trunc)? as usize;
        if k > n {
            return Err(Error::Format(format!("hash width {k} exceeds n = {n}")));
        }
        let (a, used) = F2Matrix::from_bytes(&bytes[1..])?;
        if a.rows() != k {
            return Err(Error::Format("hash matrix height disagrees with k".into()));
        }
        let mut pos = 1 + used;
        let mut support = Vec::with_capacity(1 << k);
        for _ in 0..1usize << k {
            let b = bytes.get(pos..pos + 8).ok_or_else(trunc)?;
            support.push(u64::from_le_bytes(b.try_into().unwrap()));
            pos += 8;
        }
        let nb = (1usize << k).div_ceil(8);
        let b = bytes.get(pos..pos + nb).ok_or_else(trunc)?;
        let signs = (0..1usize << k)
            .map(|i| (b[i / 8] >> (i % 8)) & 1 == 1)
            .collect();
        pos += nb;
        Ok((Self::new(n, a, support, signs)?, pos))
    }
}

fn image_size(a: &F2Matrix, s: &[u64]) -> usize {
    s.iter()
        .map(|&x| a.apply_unchecked(x))
        .collect::<HashSet<_>>()
        .len()
}

/// Samples full-rank `k × n` matrices until the image of `s` has more than
/// `2^{k-1}` elements.
pub fn find_hash_matrix(
    s: &[u64],
    k: usize,
    n: usize,
    max_trials: usize,
    seed: u64,
) -> Result<F2Matrix> {
    if s.len() != 1 << k || k > n {
        return Err(Error::DimensionMismatch {
            expected: 1 << k,
            found: s.len(),
        });
    }
    if k == 0 {
        return Ok(F2Matrix::zeros(0, n));
    }
    for trial in 0..max_trials {
        let a = F2Matrix::random_full_rank(
            k,
            n,
            &mut rng::substream(seed, "hash-matrix", trial as u64),
        );
        if 2 * image_size(&a, s) > 1 << k {
            return Ok(a);
        }
    }
    Err(Error::SearchExhausted {
        what: "hash matrix",
        trials: max_trials,
    })
}

/// Indices sorted by decreasing magnitude, ties by increasing index.
fn magnitude_order(psi: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..psi.len()).collect();
    idx.sort_by(|&a, &b| psi[b].abs().total_cmp(&psi[a].abs()).then(a.cmp(&b)));
    idx
}

/// `μ = max_j β_j √j` over the sorted magnitudes and its first maximizer `j`
/// (1-based).
pub fn mu_of(psi: &[f64]) -> (f64, usize) {
    let order = magnitude_order(psi);
    let mut best = (f64::NEG_INFINITY, 1);
    for (i, &x) in order.iter().enumerate() {
        let v = psi[x].abs() * ((i + 1) as f64).sqrt();
        if v > best.0 {
            best = (v, i + 1);
        }
    }
    best
}

/// A hash state with large overlap with the real vector `psi` (normalized
/// internally), together with `μ` of the normalized vector.
pub fn hash_state_for(psi: &[f64], max_trials: usize, seed: u64) -> Result<(HashState, f64)> {
    let dim = psi.len();
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::OutOfRange {
            what: "amplitude count",
            detail: format!("{dim}"),
        });
    }
    let n = dim.trailing_zeros() as usize;
    let nrm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let unit: Vec<f64> = psi.iter().map(|x| x / nrm).collect();
    let (mu, jstar) = mu_of(&unit);
    let k = (usize::BITS - 1 - jstar.leading_zeros()) as usize;
    let order = magnitude_order(&unit);
    let s: Vec<u64> = order[..1 << k].iter().map(|&x| x as u64).collect();
    let a = find_hash_matrix(&s, k, n, max_trials, seed)?;

    // f(y): first x in S with Ax = y, else the first x overall
    let mut from_s: Vec<Option<u64>> = vec![None; 1 << k];
    let mut sorted_s = s.clone();
    sorted_s.sort_unstable();
    for &x in &sorted_s {
        let y = a.apply_unchecked(x) as usize;
        from_s[y].get_or_insert(x);
    }
    let mut any: Vec<Option<u64>> = vec![None; 1 << k];
    let mut missing = from_s.iter().filter(|v| v.is_none()).count();
    let mut x = 0u64;
    while missing > 0 && (x as usize) < dim {
        let y = a.apply_unchecked(x) as usize;
        if from_s[y].is_none() && any[y].is_none() {
            any[y] = Some(x);
            missing -= 1;
        }
        x += 1;
    }
    let support: Vec<u64> = (0..1usize << k)
        .map(|y| from_s[y].or(any[y]).expect("full-rank A is onto"))
        .collect();
    let signs = support.iter().map(|&x| unit[x as usize] < 0.0).collect();
    Ok((HashState::new(n, a, support, signs)?, mu))
}

/// `<φ|ψ>` for a hash state and a real vector.
pub fn real_overlap(h: &HashState, psi: &[f64]) -> f64 {
    h.amplitudes().iter().zip(psi).map(|(a, b)| a * b).sum()
}

/// Phase of a hash step: `false` is 1, `true` is i.
pub fn phase_value(imaginary: bool) -> C64 {
    if imaginary {
        C64::new(0.0, 1.0)
    } else {
        C64::new(1.0, 0.0)
    }
}
