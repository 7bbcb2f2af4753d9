//! Dense matrices over GF(2), one `u64` word per row (at most 64 columns).

use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct F2Matrix {
    rows: usize,
    cols: usize,
    // bit c of data[r] is entry (r, c)
    data: Vec<u64>,
}

fn col_mask(cols: usize) -> u64 {
    if cols == 64 {
        u64::MAX
    } else {
        (1u64 << cols) - 1
    }
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(
            rows <= MAX_DIM && cols <= MAX_DIM,
            "F2Matrix limited to 64x64"
        );
        Self {
            rows,
            cols,
            data: vec![0; rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i] = 1 << i;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.len() > MAX_DIM || cols > MAX_DIM {
            return Err(Error::OutOfRange {
                what: "matrix size",
                detail: "above 64".into(),
            });
        }
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            for (c, &b) in row.iter().enumerate() {
                m.set(r, c, b & 1 == 1);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r] >> c) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        if v {
            self.data[r] |= 1 << c;
        } else {
            self.data[r] &= !(1 << c);
        }
    }

    pub fn row_word(&self, r: usize) -> u64 {
        self.data[r]
    }

    pub fn mul(&self, other: &F2Matrix) -> Result<F2Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = F2Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let mut acc = 0u64;
            let mut w = self.data[r];
            while w != 0 {
                let k = w.trailing_zeros() as usize;
                acc ^= other.data[k];
                w &= w - 1;
            }
            out.data[r] = acc;
        }
        Ok(out)
    }

    /// Multiplies by a column vector packed with bit `c` = component `c`.
    pub fn mul_word(&self, v: u64) -> u64 {
        let mut out = 0u64;
        for (r, row) in self.data.iter().enumerate() {
            out |= (((row & v).count_ones() & 1) as u64) << r;
        }
        out
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.data.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            let bit = 1u64 << c;
            let Some(p) = (rank..rows.len()).find(|&r| rows[r] & bit != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank];
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && *row & bit != 0 {
                    *row ^= pivot;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<F2Matrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = F2Matrix::identity(n).data;
        for c in 0..n {
            let bit = 1u64 << c;
            let p = (c..n)
                .find(|&r| a[r] & bit != 0)
                .ok_or(Error::SingularMatrix)?;
            a.swap(c, p);
            inv.swap(c, p);
            for r in 0..n {
                if r != c && a[r] & bit != 0 {
                    a[r] ^= a[c];
                    inv[r] ^= inv[c];
                }
            }
        }
        Ok(F2Matrix {
            rows: n,
            cols: n,
            data: inv,
        })
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mask = col_mask(cols);
        let mut m = Self::zeros(rows, cols);
        for w in &mut m.data {
            *w = rng.random::<u64>() & mask;
        }
        m
    }

    /// Uniform over full-row-rank `rows × cols` matrices, by rejection.
    pub fn random_full_rank<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        assert!(rows <= cols);
        loop {
            let m = Self::random(rows, cols, rng);
            if m.rank() == rows {
                return m;
            }
        }
    }

    /// Uniform over GL_n(F₂), by rejection.
    pub fn random_invertible<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::random_full_rank(n, n, rng)
    }

    /// Image of basis index `x` (a `cols`-bit string, qubit 0 most
    /// significant) as a `rows`-bit basis index.
    pub fn apply_to_index(&self, x: u64) -> Result<u64> {
        if self.cols < 64 && x >> self.cols != 0 {
            return Err(Error::OutOfRange {
                what: "basis index",
                detail: format!("{x} >= 2^{}", self.cols),
            });
        }
        Ok(self.apply_unchecked(x))
    }

    #[inline]
    pub(crate) fn apply_unchecked(&self, x: u64) -> u64 {
        let v = index_to_word(x, self.cols);
        word_to_index(self.mul_word(v), self.rows)
    }

    /// rows, cols as u16 LE, then row-major bits, 8 per byte, LSB first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + (self.rows * self.cols).div_ceil(8));
        out.extend((self.rows as u16).to_le_bytes());
        out.extend((self.cols as u16).to_le_bytes());
        let mut bits = BitWriter::default();
        for r in 0..self.rows {
            for c in 0..self.cols {
                bits.push(self.get(r, c));
            }
        }
        out.extend(bits.finish());
        out
    }

    /// Parses one matrix from the front of `bytes`, returning it and the number
    /// of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(F2Matrix, usize)> {
        if bytes.len() < 4 {
            return Err(Error::Format("truncated matrix header".into()));
        }
        let rows = u16::from_le_bytes([bytes[0], bytes[1]]) as usize;
        let cols = u16::from_le_bytes([bytes[2], bytes[3]]) as usize;
        if rows > MAX_DIM || cols > MAX_DIM {
            return Err(Error::Format(format!("matrix {rows}x{cols} exceeds 64x64")));
        }
        let nbytes = (rows * cols).div_ceil(8);
        let body = bytes
            .get(4..4 + nbytes)
            .ok_or_else(|| Error::Format("truncated matrix body".into()))?;
        let mut m = F2Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                m.set(r, c, (body[i / 8] >> (i % 8)) & 1 == 1);
            }
        }
        Ok((m, 4 + nbytes))
    }
}

/// Basis index (qubit 0 most significant) to a bit-vector word (bit q = qubit q).
#[inline]
pub(crate) fn index_to_word(x: u64, nbits: usize) -> u64 {
    if nbits == 0 {
        return 0;
    }
    x.reverse_bits() >> (64 - nbits)
}

#[inline]
pub(crate) fn word_to_index(w: u64, nbits: usize) -> u64 {
    index_to_word(w, nbits)
}

/// LSB-first bit packer shared by the binary formats.
#[derive(Default)]
pub(crate) struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub(crate) fn push(&mut self, b: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if b {
            *self.bytes.last_mut().unwrap() |= 1 << (self.len % 8);
        }
        self.len += 1;
    }

    pub(crate) fn push_bits(&mut self, value: u64, count: usize) {
        for i in 0..count {
            self.push((value >> i) & 1 == 1);
        }
    }

    pub(crate) fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

pub(crate) fn read_bit(bytes: &[u8], i: usize) -> bool {
    (bytes[i / 8] >> (i % 8)) & 1 == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::{HashMap, HashSet};

    fn naive_mul(a: &F2Matrix, b: &F2Matrix) -> F2Matrix {
        let mut out = F2Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = false;
                for k in 0..a.cols() {
                    acc ^= a.get(i, k) & b.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    // number of distinct vectors in the row span, by enumerating all combinations
    fn span_rank(m: &F2Matrix) -> usize {
        let mut span = HashSet::new();
        for mask in 0u64..(1 << m.rows()) {
            let mut v = 0u64;
            for r in 0..m.rows() {
                if mask >> r & 1 == 1 {
                    v ^= m.row_word(r);
                }
            }
            span.insert(v);
        }
        span.len().trailing_zeros() as usize
    }

    #[test]
    fn mul_examples() {
        let i3 = F2Matrix::identity(3);
        assert_eq!(i3.mul(&i3).unwrap(), i3);
        let mut r = substream(1, "t", 0);
        let m = F2Matrix::random_invertible(5, &mut r);
        assert_eq!(m.mul(&m.inverse().unwrap()).unwrap(), F2Matrix::identity(5));
        for _ in 0..20 {
            let a = F2Matrix::random(4, 4, &mut r);
            let b = F2Matrix::random(4, 4, &mut r);
            assert_eq!(a.mul(&b).unwrap(), naive_mul(&a, &b));
        }
        assert!(F2Matrix::zeros(2, 3).mul(&F2Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(F2Matrix::zeros(3, 3).rank(), 0);
        assert_eq!(F2Matrix::identity(4).rank(), 4);
        let mut r = substream(2, "t", 0);
        for _ in 0..50 {
            let m = F2Matrix::random(5, 8, &mut r);
            assert_eq!(m.rank(), span_rank(&m));
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(
            F2Matrix::identity(4).inverse().unwrap(),
            F2Matrix::identity(4)
        );
        let m = F2Matrix::from_rows(&[vec![1, 1], vec![0, 1]]).unwrap();
        assert_eq!(m.inverse().unwrap(), m);
        let mut r = substream(3, "t", 0);
        let m = F2Matrix::random_invertible(6, &mut r);
        assert_eq!(m.mul(&m.inverse().unwrap()).unwrap(), F2Matrix::identity(6));
        assert!(matches!(
            F2Matrix::zeros(2, 2).inverse(),
            Err(Error::SingularMatrix)
        ));
    }

    #[test]
    fn random_invertible_n1_is_one() {
        let mut r = substream(4, "t", 0);
        assert_eq!(
            F2Matrix::random_invertible(1, &mut r),
            F2Matrix::identity(1)
        );
    }

    #[test]
    fn random_invertible_uniform_over_gl2() {
        // |GL_2(F_2)| = (4-1)(4-2) = 6
        let mut all = HashSet::new();
        for bits in 0u8..16 {
            let m = F2Matrix::from_rows(&[
                vec![bits & 1, bits >> 1 & 1],
                vec![bits >> 2 & 1, bits >> 3 & 1],
            ])
            .unwrap();
            if m.rank() == 2 {
                all.insert(m);
            }
        }
        assert_eq!(all.len(), 6);
        let mut r = substream(5, "t", 0);
        let mut counts: HashMap<F2Matrix, usize> = HashMap::new();
        let trials = 10_000;
        for _ in 0..trials {
            *counts
                .entry(F2Matrix::random_invertible(2, &mut r))
                .or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for (m, c) in counts {
            assert!(all.contains(&m));
            assert!((c as f64 / trials as f64 - 1.0 / 6.0).abs() < 0.02);
        }
    }

    #[test]
    fn apply_to_index_examples() {
        assert_eq!(F2Matrix::identity(3).apply_to_index(5).unwrap(), 5);
        // M (1,0)^T = (1,0)^T: index 0b10 maps to itself
        let m = F2Matrix::from_rows(&[vec![1, 1], vec![0, 1]]).unwrap();
        assert_eq!(m.apply_to_index(0b10).unwrap(), 0b10);
        // (0,1) -> (1,1)
        assert_eq!(m.apply_to_index(0b01).unwrap(), 0b11);
        assert_eq!(m.apply_to_index(0).unwrap(), 0);
        assert!(m.apply_to_index(4).is_err());
    }

    #[test]
    fn serialization_layout() {
        let m = F2Matrix::from_rows(&[vec![1, 0, 1], vec![0, 1, 1]]).unwrap();
        // bits row-major: 1,0,1,0,1,1 -> 0b110101
        assert_eq!(m.to_bytes(), vec![2, 0, 3, 0, 0b0011_0101]);
        let (back, used) = F2Matrix::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        assert_eq!(used, 5);
        assert!(F2Matrix::from_bytes(&[2, 0, 3]).is_err());
    }

    proptest! {
        #[test]
        fn apply_respects_composition(seed in any::<u64>(), x in 0u64..64) {
            let mut r = substream(seed, "prop", 0);
            let a = F2Matrix::random(6, 6, &mut r);
            let b = F2Matrix::random(6, 6, &mut r);
            let ab = a.mul(&b).unwrap();
            prop_assert_eq!(ab.apply_to_index(x).unwrap(),
                a.apply_to_index(b.apply_to_index(x).unwrap()).unwrap());
        }

        #[test]
        fn rank_invariant_under_row_shuffle(seed in any::<u64>()) {
            let mut r = substream(seed, "prop", 1);
            let m = F2Matrix::random(6, 9, &mut r);
            let mut perm: Vec<usize> = (0..6).collect();
            for i in (1..6).rev() {
                perm.swap(i, r.random_range(0..=i));
            }
            let mut shuffled = F2Matrix::zeros(6, 9);
            for (i, &p) in perm.iter().enumerate() {
                shuffled.data[i] = m.data[p];
            }
            prop_assert_eq!(m.rank(), shuffled.rank());
        }

        #[test]
        fn serialization_round_trips(seed in any::<u64>(), rows in 0usize..10, cols in 1usize..12) {
            let mut r = substream(seed, "prop", 2);
            let m = F2Matrix::random(rows, cols, &mut r);
            let (back, used) = F2Matrix::from_bytes(&m.to_bytes()).unwrap();
            prop_assert_eq!(used, m.to_bytes().len());
            prop_assert_eq!(back, m);
        }
    }
}
