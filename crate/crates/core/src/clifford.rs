//! Clifford unitaries in the 11-round canonical form H-C-P-C-P-C-H-P-C-P-C,
//! applied densely, together with sign-pattern states and the overlap search.
//!
//! The described unitary is `R₀ R₁ … R₁₀` with `rounds[0]` leftmost, so when
//! acting on a vector `rounds[10]` is applied first.
//!
//! `random_clifford` samples every round independently and uniformly over its
//! own parameter space. That is *not* the uniform distribution over the
//! Clifford group; the overlap search never relies on the distribution, since
//! every certificate it returns carries its own verified overlap.

use rand::Rng;

use crate::error::{Error, Result};
use crate::f2linalg::{BitWriter, F2Matrix};
use crate::numerics::{CMatrix, PureState, C64};
use crate::rng;

/// Overlap threshold of the sign-pattern search.
pub const ALPHA: f64 = 0.35;
pub const DEFAULT_MAX_TRIALS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundKind {
    H,
    C,
    P,
}

pub const PATTERN: [RoundKind; 11] = {
    use RoundKind::*;
    [H, C, P, C, P, C, H, P, C, P, C]
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Round {
    /// Qubits receiving a Hadamard.
    H(Vec<bool>),
    /// Power of S per qubit, each in 0..4.
    P(Vec<u8>),
    /// Basis permutation `|x> -> |Mx>`, stored with its inverse.
    C { m: F2Matrix, m_inv: F2Matrix },
}

impl Round {
    pub fn kind(&self) -> RoundKind {
        match self {
            Round::H(_) => RoundKind::H,
            Round::P(_) => RoundKind::P,
            Round::C { .. } => RoundKind::C,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordDesc {
    n: usize,
    rounds: Vec<Round>,
}

/// `sr(c)`: +1 when `Re(c) ≥ 0`, else −1. Returned as a bool, `true` meaning −1.
#[inline]
pub fn sr_negative(c: C64) -> bool {
    c.re < 0.0
}

pub fn sr(c: C64) -> i8 {
    if sr_negative(c) {
        -1
    } else {
        1
    }
}

/// `2^n` sign bits, `true` meaning phase −1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignPattern {
    n: usize,
    bits: Vec<bool>,
}

impl SignPattern {
    pub fn new(n: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: bits.len(),
            });
        }
        Ok(Self { n, bits })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_negative(&self, x: usize) -> bool {
        self.bits[x]
    }
}

impl CliffordDesc {
    pub fn new(n: usize, rounds: Vec<Round>) -> Result<Self> {
        if rounds.len() != PATTERN.len() {
            return Err(Error::DimensionMismatch {
                expected: PATTERN.len(),
                found: rounds.len(),
            });
        }
        for (i, (r, k)) in rounds.iter().zip(PATTERN).enumerate() {
            if r.kind() != k {
                return Err(Error::Format(format!(
                    "round {i} is {:?}, expected {k:?}",
                    r.kind()
                )));
            }
            let ok = match r {
                Round::H(b) => b.len() == n,
                Round::P(d) => d.len() == n && d.iter().all(|&x| x < 4),
                Round::C { m, m_inv } => {
                    m.rows() == n
                        && m.cols() == n
                        && m.mul(m_inv)
                            .map(|p| p == F2Matrix::identity(n))
                            .unwrap_or(false)
                }
            };
            if !ok {
                return Err(Error::Format(format!("round {i} is malformed for n = {n}")));
            }
        }
        Ok(Self { n, rounds })
    }

    pub fn identity(n: usize) -> Self {
        let rounds = PATTERN
            .iter()
            .map(|k| match k {
                RoundKind::H => Round::H(vec![false; n]),
                RoundKind::P => Round::P(vec![0; n]),
                RoundKind::C => Round::C {
                    m: F2Matrix::identity(n),
                    m_inv: F2Matrix::identity(n),
                },
            })
            .collect();
        Self { n, rounds }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let rounds = PATTERN
            .iter()
            .map(|k| match k {
                RoundKind::H => Round::H((0..n).map(|_| rng.random::<bool>()).collect()),
                RoundKind::P => Round::P((0..n).map(|_| rng.random_range(0..4u8)).collect()),
                RoundKind::C => {
                    let m = F2Matrix::random_invertible(n, rng);
                    let m_inv = m.inverse().expect("sampled matrix is invertible");
                    Round::C { m, m_inv }
                }
            })
            .collect();
        Self { n, rounds }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    /// 11 rounds in order. H: n bits; P: n two-bit digits; C: M then M⁻¹ in
    /// the GF(2) matrix format. Bit fields are packed LSB first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.rounds {
            match r {
                Round::H(bits) => {
                    let mut w = BitWriter::default();
                    bits.iter().for_each(|&b| w.push(b));
                    out.extend(w.finish());
                }
                Round::P(digits) => {
                    let mut w = BitWriter::default();
                    digits.iter().for_each(|&d| w.push_bits(d as u64, 2));
                    out.extend(w.finish());
                }
                Round::C { m, m_inv } => {
                    out.extend(m.to_bytes());
                    out.extend(m_inv.to_bytes());
                }
            }
        }
        out
    }

    /// Serialized size for `n` qubits.
    pub fn encoded_len(n: usize) -> usize {
        let mat = 4 + (n * n).div_ceil(8);
        2 * n.div_ceil(8) + 4 * (2 * n).div_ceil(8) + 5 * 2 * mat
    }

    pub fn from_bytes(n: usize, bytes: &[u8]) -> Result<(Self, usize)> {
        let mut pos = 0;
        fn take<'a>(bytes: &'a [u8], pos: &mut usize, len: usize) -> Result<&'a [u8]> {
            let s = bytes
                .get(*pos..*pos + len)
                .ok_or_else(|| Error::Format("truncated Clifford description".into()))?;
            *pos += len;
            Ok(s)
        }
        let mut rounds = Vec::with_capacity(11);
        for k in PATTERN {
            rounds.push(match k {
                RoundKind::H => {
                    let b = take(bytes, &mut pos, n.div_ceil(8))?;
                    Round::H((0..n).map(|i| (b[i / 8] >> (i % 8)) & 1 == 1).collect())
                }
                RoundKind::P => {
                    let b = take(bytes, &mut pos, (2 * n).div_ceil(8))?;
                    Round::P((0..n).map(|i| (b[2 * i / 8] >> (2 * i % 8)) & 3).collect())
                }
                RoundKind::C => {
                    let (m, used) = F2Matrix::from_bytes(&bytes[pos..])?;
                    pos += used;
                    let (m_inv, used) = F2Matrix::from_bytes(&bytes[pos..])?;
                    pos += used;
                    Round::C { m, m_inv }
                }
            });
        }
        Ok((Self::new(n, rounds)?, pos))
    }
}

pub fn random_clifford(n: usize, seed: u64) -> CliffordDesc {
    CliffordDesc::random(n, &mut rng::substream(seed, "clifford", n as u64))
}

fn hadamard(v: &mut [C64], n: usize, q: usize) {
    let stride = 1usize << (n - 1 - q);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut base = 0;
    while base < v.len() {
        for i in base..base + stride {
            let (a, b) = (v[i], v[i + stride]);
            v[i] = (a + b) * h;
            v[i + stride] = (a - b) * h;
        }
        base += 2 * stride;
    }
}

fn phase_power(v: &mut [C64], n: usize, q: usize, power: u8) {
    let f = match power % 4 {
        0 => return,
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    let bit = 1usize << (n - 1 - q);
    for (x, a) in v.iter_mut().enumerate() {
        if x & bit != 0 {
            *a *= f;
        }
    }
}

fn permute(v: &mut [C64], m: &F2Matrix, scratch: &mut Vec<C64>) {
    scratch.clear();
    scratch.resize(v.len(), C64::new(0.0, 0.0));
    for (x, a) in v.iter().enumerate() {
        scratch[m.apply_unchecked(x as u64) as usize] = *a;
    }
    v.copy_from_slice(scratch);
}

fn apply_round(r: &Round, v: &mut [C64], n: usize, inverse: bool, scratch: &mut Vec<C64>) {
    match r {
        Round::H(bits) => {
            for (q, &b) in bits.iter().enumerate() {
                if b {
                    hadamard(v, n, q);
                }
            }
        }
        Round::P(d) => {
            for (q, &p) in d.iter().enumerate() {
                phase_power(v, n, q, if inverse { (4 - p) % 4 } else { p });
            }
        }
        Round::C { m, m_inv } => permute(v, if inverse { m_inv } else { m }, scratch),
    }
}

/// Applies the described unitary in place on a raw amplitude slice of length `2^n`.
pub fn apply_in_place(d: &CliffordDesc, v: &mut [C64]) {
    debug_assert_eq!(v.len(), 1 << d.n);
    let mut scratch = Vec::new();
    for r in d.rounds.iter().rev() {
        apply_round(r, v, d.n, false, &mut scratch);
    }
}

/// Applies the inverse unitary: rounds in reverse with P digits negated mod 4
/// and `M⁻¹` in place of `M`.
pub fn apply_inverse_in_place(d: &CliffordDesc, v: &mut [C64]) {
    debug_assert_eq!(v.len(), 1 << d.n);
    let mut scratch = Vec::new();
    for r in d.rounds.iter() {
        apply_round(r, v, d.n, true, &mut scratch);
    }
}

pub fn apply(d: &CliffordDesc, v: &PureState) -> Result<PureState> {
    check_dim(d, v)?;
    let mut out = v.clone();
    apply_in_place(d, out.amps_mut());
    Ok(out)
}

pub fn apply_inverse(d: &CliffordDesc, v: &PureState) -> Result<PureState> {
    check_dim(d, v)?;
    let mut out = v.clone();
    apply_inverse_in_place(d, out.amps_mut());
    Ok(out)
}

fn check_dim(d: &CliffordDesc, v: &PureState) -> Result<()> {
    if d.n != v.n() {
        return Err(Error::DimensionMismatch {
            expected: 1 << d.n,
            found: v.dim(),
        });
    }
    Ok(())
}

/// Dense matrix of the described unitary, for `n ≤ 3`.
pub fn to_matrix(d: &CliffordDesc) -> Result<CMatrix> {
    if d.n > 3 {
        return Err(Error::OutOfRange {
            what: "qubit count",
            detail: format!("{} > 3", d.n),
        });
    }
    let dim = 1usize << d.n;
    let mut m = CMatrix::zeros(dim);
    for x in 0..dim {
        let col = apply(d, &PureState::basis(d.n, x))?;
        for (y, a) in col.amps().iter().enumerate() {
            m.set(y, x, *a);
        }
    }
    Ok(m)
}

/// Column overlaps `w_x = <η|C|x>`, computed as the conjugate of `C†η`.
pub fn column_overlaps(eta: &[C64], d: &CliffordDesc) -> Vec<C64> {
    let mut w = eta.to_vec();
    apply_inverse_in_place(d, &mut w);
    for a in &mut w {
        *a = a.conj();
    }
    w
}

/// `C · 2^{-n/2} Σ_x s_x |x>` for the given sign table.
pub fn signed_state(d: &CliffordDesc, signs: &SignPattern) -> PureState {
    let a = (1.0 / (1u64 << d.n) as f64).sqrt();
    let mut v: Vec<C64> = signs
        .bits
        .iter()
        .map(|&neg| C64::new(if neg { -a } else { a }, 0.0))
        .collect();
    apply_in_place(d, &mut v);
    PureState::new(d.n, v).expect("dimension fixed by descriptor")
}

/// The sign-pattern state `p_{η,C}` and its sign table `sr(<η|C|x>)`.
pub fn sign_pattern_state(eta: &PureState, d: &CliffordDesc) -> Result<(PureState, SignPattern)> {
    check_dim(d, eta)?;
    let w = column_overlaps(eta.amps(), d);
    let signs = SignPattern {
        n: d.n,
        bits: w.iter().map(|&c| sr_negative(c)).collect(),
    };
    Ok((signed_state(d, &signs), signs))
}

/// `Re <η|p_{η,C}> = 2^{-n/2} Σ_x |Re w_x|` for unnormalized `η`.
pub fn sign_pattern_overlap(eta: &[C64], d: &CliffordDesc) -> f64 {
    let scale = (1.0 / (1u64 << d.n) as f64).sqrt();
    column_overlaps(eta, d)
        .iter()
        .map(|w| w.re.abs())
        .sum::<f64>()
        * scale
}

/// Searches for a Clifford whose sign-pattern state has normalized real
/// overlap at least `alpha` with `eta`.
///
/// Trial 0 is the identity description; trial `i ≥ 1` is a random Clifford
/// drawn from the substream `(seed, i)`. Returns the first success and its
/// overlap `Re <η/‖η‖ | p_{η,C}>`.
pub fn find_overlap_clifford(
    eta: &PureState,
    alpha: f64,
    max_trials: usize,
    seed: u64,
) -> Result<(CliffordDesc, f64)> {
    let nrm = eta.norm();
    if nrm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let n = eta.n();
    for trial in 0..max_trials {
        let d = trial_clifford(n, seed, trial);
        let ov = sign_pattern_overlap(eta.amps(), &d) / nrm;
        if ov >= alpha {
            return Ok((d, ov));
        }
    }
    Err(Error::SearchExhausted {
        what: "Clifford overlap",
        trials: max_trials,
    })
}

/// Candidate `trial` of the overlap search.
pub fn trial_clifford(n: usize, seed: u64, trial: usize) -> CliffordDesc {
    if trial == 0 {
        CliffordDesc::identity(n)
    } else {
        CliffordDesc::random(n, &mut rng::substream(seed, "clifford-trial", trial as u64))
    }
}
