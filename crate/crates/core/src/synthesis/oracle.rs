//! The classical oracle as a bit-addressable truth table, and its file format.
//!
//! Layout: `"OSYN1"`, then `n`, `t`, `T` as u32 LE, the sign section
//! (`T·2^n` bits, LSB first, bit `j·2^n + x` is the step-`j` sign at `x`), the
//! description length as u64 LE, then the step descriptions. A Clifford step
//! is tag `0x01` followed by its round description; a hash step is tag `0x02`,
//! the hash state, and a phase byte (0 for 1, 1 for i).

use std::path::Path;

use super::hash::HashState;
use super::plan::{SynthesisPlan, TAG_CLIFFORD, TAG_HASH};
use crate::clifford::CliffordDesc;
use crate::error::{Error, Result};
use crate::f2linalg::{read_bit, BitWriter};

pub const MAGIC: &[u8; 5] = b"OSYN1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleSpec {
    n: usize,
    t: usize,
    big_t: usize,
    sign_section: Vec<u8>,
    desc_section: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParsedStep {
    Clifford(CliffordDesc),
    Hash { state: HashState, imaginary: bool },
}

/// Parses `big_t` step descriptions from `bytes`; anything after them must
/// be zero padding.
pub fn parse_step_descriptions(n: usize, big_t: usize, bytes: &[u8]) -> Result<Vec<ParsedStep>> {
    let mut steps = Vec::with_capacity(big_t);
    let mut pos = 0;
    while steps.len() < big_t {
        let tag = *bytes.get(pos).ok_or_else(|| {
            Error::Format(format!("{} step descriptions for T = {big_t}", steps.len()))
        })?;
        match tag {
            TAG_CLIFFORD => {
                let (c, used) = CliffordDesc::from_bytes(n, &bytes[pos + 1..])?;
                steps.push(ParsedStep::Clifford(c));
                pos += 1 + used;
            }
            TAG_HASH => {
                let (h, used) = HashState::from_bytes(n, &bytes[pos + 1..])?;
                let ph = *bytes
                    .get(pos + 1 + used)
                    .ok_or_else(|| Error::Format("missing phase byte".into()))?;
                if ph > 1 {
                    return Err(Error::Format(format!("bad phase byte {ph}")));
                }
                steps.push(ParsedStep::Hash {
                    state: h,
                    imaginary: ph == 1,
                });
                pos += 2 + used;
            }
            tag => {
                return Err(Error::Format(format!(
                    "unknown step tag {tag:#04x} at byte {pos}"
                )))
            }
        }
    }
    if bytes[pos..].iter().any(|&b| b != 0) {
        return Err(Error::Format(
            "trailing data after the last step description".into(),
        ));
    }
    Ok(steps)
}

pub fn plan_to_oracle(plan: &SynthesisPlan) -> OracleSpec {
    let n = plan.n();
    let mut w = BitWriter::default();
    for s in &plan.steps {
        s.sign_row(n).into_iter().for_each(|b| w.push(b));
    }
    OracleSpec {
        n,
        t: plan.params.t,
        big_t: plan.params.big_t,
        sign_section: w.finish(),
        desc_section: plan.desc_section(),
    }
}

impl OracleSpec {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn big_t(&self) -> usize {
        self.big_t
    }

    pub fn desc_section(&self) -> &[u8] {
        &self.desc_section
    }

    pub fn sign_section(&self) -> &[u8] {
        &self.sign_section
    }

    /// Sign of step `j` at basis index `x`; `true` means −1.
    pub fn sign_bit(&self, j: usize, x: usize) -> bool {
        read_bit(&self.sign_section, (j << self.n) + x)
    }

    pub fn sign_row(&self, j: usize) -> Vec<bool> {
        (0..1usize << self.n).map(|x| self.sign_bit(j, x)).collect()
    }

    /// One selector bit, then either a `(t+n)`-bit sign address or a
    /// description bit index.
    pub fn total_input_bits(&self) -> usize {
        let desc_bits = 8 * self.desc_section.len() as u64;
        let desc_width = if desc_bits <= 1 {
            0
        } else {
            64 - (desc_bits - 1).leading_zeros() as usize
        };
        1 + (self.t + self.n).max(desc_width)
    }

    /// Evaluates `f`. Description bits past the end read as 0, which makes
    /// the description query return `z` zero padded.
    pub fn query(&self, input: u64) -> Result<bool> {
        let w = self.total_input_bits();
        if w < 64 && input >> w != 0 {
            return Err(Error::OutOfRange {
                what: "oracle input",
                detail: format!("{input} >= 2^{w}"),
            });
        }
        let low = input & ((1u64 << (w - 1)) - 1);
        if input >> (w - 1) & 1 == 0 {
            if low >= (self.big_t << self.n) as u64 {
                return Ok(false);
            }
            Ok(read_bit(&self.sign_section, low as usize))
        } else if low < 8 * self.desc_section.len() as u64 {
            Ok(read_bit(&self.desc_section, low as usize))
        } else {
            Ok(false)
        }
    }

    /// The description register content, padded with zero bytes to `len`.
    pub fn z(&self, len: usize) -> Vec<u8> {
        let mut z = self.desc_section.clone();
        z.resize(len.max(z.len()), 0);
        z
    }

    pub fn parse_steps(&self) -> Result<Vec<ParsedStep>> {
        parse_step_descriptions(self.n, self.big_t, &self.desc_section)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out =
            Vec::with_capacity(5 + 12 + self.sign_section.len() + 8 + self.desc_section.len());
        out.extend(MAGIC);
        out.extend((self.n as u32).to_le_bytes());
        out.extend((self.t as u32).to_le_bytes());
        out.extend((self.big_t as u32).to_le_bytes());
        out.extend(&self.sign_section);
        out.extend((self.desc_section.len() as u64).to_le_bytes());
        out.extend(&self.desc_section);
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < 17 || &b[..5] != MAGIC {
            return Err(Error::Format("missing OSYN1 header".into()));
        }
        let u32_at = |p: usize| u32::from_le_bytes(b[p..p + 4].try_into().unwrap()) as usize;
        let (n, t, big_t) = (u32_at(5), u32_at(9), u32_at(13));
        if n > 30 || t > 30 || big_t != 1 << t {
            return Err(Error::Format(format!(
                "inconsistent header n={n} t={t} T={big_t}"
            )));
        }
        let sign_len = (big_t << n).div_ceil(8);
        let mut pos = 17;
        let sign_section = b
            .get(pos..pos + sign_len)
            .ok_or_else(|| Error::Format("truncated sign section".into()))?
            .to_vec();
        pos += sign_len;
        let len_bytes = b
            .get(pos..pos + 8)
            .ok_or_else(|| Error::Format("truncated length".into()))?;
        let desc_len = u64::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
        pos += 8;
        if b.len() != pos + desc_len {
            return Err(Error::Format(format!(
                "description section is {} bytes, header says {desc_len}",
                b.len() - pos
            )));
        }
        Ok(Self {
            n,
            t,
            big_t,
            sign_section,
            desc_section: b[pos..].to_vec(),
        })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
