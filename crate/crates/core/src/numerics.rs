//! Dense complex state vectors and density matrices.
//!
//! Basis index convention: `amps[x]` is the amplitude of the basis string `x`
//! read as a big-endian integer, so qubit 0 is the most significant bit.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance on the squared norm of a "normalized" state.
pub const NORM_TOL: f64 = 1e-9;

const JACOBI_THRESHOLD: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Euclidean norm of an amplitude slice.
pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn diff_norm(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// A vector of `2^n` amplitudes. Used both for normalized states and for the
/// unnormalized residual vectors of the synthesis loop.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n: usize,
    amps: Vec<C64>,
}

impl PureState {
    pub fn new(n: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: amps.len(),
            });
        }
        Ok(Self { n, amps })
    }

    /// Builds a state from amplitudes whose length must be a power of two.
    pub fn from_amps(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::OutOfRange {
                what: "amplitude count",
                detail: format!("{len} is not a power of two"),
            });
        }
        Ok(Self {
            n: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn from_real(n: usize, re: &[f64]) -> Result<Self> {
        Self::new(n, re.iter().map(|&r| C64::new(r, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            amps: vec![ZERO; 1 << n],
        }
    }

    pub fn basis(n: usize, x: usize) -> Self {
        let mut s = Self::zeros(n);
        s.amps[x] = ONE;
        s
    }

    /// `|+>^{⊗n}`.
    pub fn plus(n: usize) -> Self {
        let a = C64::new((1u64 << n) as f64, 0.0).sqrt().inv();
        Self {
            n,
            amps: vec![a; 1 << n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.amps)
    }

    pub fn is_normalized(&self) -> bool {
        (self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let nrm = self.norm();
        if nrm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(C64::new(1.0 / nrm, 0.0)))
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            n: self.n,
            amps: self.amps.iter().map(|a| a * c).collect(),
        }
    }

    /// `self -= c * other`.
    pub fn sub_scaled(&mut self, c: C64, other: &PureState) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a -= c * b;
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.check_same(other)?;
        Ok(inner(&self.amps, &other.amps))
    }

    /// `self ⊗ other`, with `self` on the leading (most significant) qubits.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        PureState {
            n: self.n + other.n,
            amps,
        }
    }

    pub fn outer(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.re).collect()
    }

    pub fn imag_parts(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.im).collect()
    }

    fn check_same(&self, other: &PureState) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend(r);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.data[i * self.dim + j] * v[j])
                    .sum()
            })
            .collect()
    }

    pub fn adjoint(&self) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }
}

/// Density matrix on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(n: usize, m: CMatrix) -> Result<Self> {
        if m.dim() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: m.dim(),
            });
        }
        Ok(Self { n, m })
    }

    pub fn from_pure(v: &PureState) -> Self {
        let d = v.dim();
        let mut m = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.data[i * d + j] = v.amps[i] * v.amps[j].conj();
            }
        }
        Self { n: v.n, m }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        let mut m = CMatrix::identity(d);
        for a in &mut m.data {
            *a /= d as f64;
        }
        Self { n, m }
    }

    /// `Σ_k w_k |v_k><v_k|` for (unnormalized) vectors `v_k`.
    pub fn mixture(n: usize, terms: &[(f64, &[C64])]) -> Result<Self> {
        let d = 1usize << n;
        let mut m = CMatrix::zeros(d);
        for (w, v) in terms {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
            for i in 0..d {
                for j in 0..d {
                    m.data[i * d + j] += v[i] * v[j].conj() * *w;
                }
            }
        }
        Ok(Self { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m.get(i, j)
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Entrywise perturbation, used to model finite-precision descriptions.
    pub fn map_entries(&self, mut f: impl FnMut(usize, usize, C64) -> C64) -> Self {
        let d = self.dim();
        let mut m = self.m.clone();
        for i in 0..d {
            for j in 0..d {
                m.data[i * d + j] = f(i, j, self.m.data[i * d + j]);
            }
        }
        Self { n: self.n, m }
    }

    /// `<ψ|ρ|ψ>` (real part).
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        let rv = self.m.mul_vec(psi.amps());
        Ok(inner(psi.amps(), &rv).re)
    }

    pub fn is_valid(&self) -> Result<bool> {
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > 1e-9 {
                    return Ok(false);
                }
            }
        }
        if (self.trace().re - 1.0).abs() > 1e-9 {
            return Ok(false);
        }
        Ok(hermitian_eigenvalues(&self.m)?.iter().all(|&e| e >= -1e-8))
    }
}

/// `√(1 − |<a|b>|²)` for normalized pure states.
pub fn trace_distance_pure(a: &PureState, b: &PureState) -> Result<f64> {
    let ov = a.inner(b)?.norm_sqr();
    Ok((1.0 - ov).max(0.0).sqrt().min(1.0))
}

/// `½ ‖a − b‖₁`, via the spectrum of the Hermitian difference.
pub fn trace_distance_mixed(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let eig = hermitian_eigenvalues(&a.m.sub(&b.m))?;
    Ok(0.5 * eig.iter().map(|e| e.abs()).sum::<f64>())
}

/// Reduced density matrix on the first `keep` qubits of `state`.
pub fn partial_trace_keep_first(state: &PureState, keep: usize) -> Result<DensityMatrix> {
    if keep > state.n {
        return Err(Error::OutOfRange {
            what: "kept qubit count",
            detail: format!("{keep} > {}", state.n),
        });
    }
    let dk = 1usize << keep;
    let dr = 1usize << (state.n - keep);
    let mut m = CMatrix::zeros(dk);
    for i in 0..dk {
        let ri = &state.amps[i * dr..(i + 1) * dr];
        for j in i..dk {
            let rj = &state.amps[j * dr..(j + 1) * dr];
            let v: C64 = ri.iter().zip(rj).map(|(x, y)| x * y.conj()).sum();
            m.data[i * dk + j] = v;
            m.data[j * dk + i] = v.conj();
        }
    }
    Ok(DensityMatrix { n: keep, m })
}

/// Extracts a pure-state description from a finite-precision description of a
/// rank-1 density matrix.
///
/// `delta_in` is the entrywise precision of `rho`. The column used is the
/// lexicographically first `y` with `rho[y][y] ≥ ¾·2^{-n}`, and the output is
/// `rho[·][y] / √rho[y][y]`.
pub fn purify_rank1(rho: &DensityMatrix, delta_in: f64) -> Result<PureState> {
    let d = rho.dim();
    let scale = 1.0 / d as f64;
    if !(0.0..=0.25 * scale).contains(&delta_in) {
        return Err(Error::OutOfRange {
            what: "input precision",
            detail: format!("{delta_in:e} exceeds 1/4 * 2^-n = {:e}", 0.25 * scale),
        });
    }
    let y = (0..d)
        .find(|&y| rho.get(y, y).re >= 0.75 * scale)
        .ok_or(Error::NotRankOne)?;
    let norm = rho.get(y, y).re.sqrt();
    PureState::new(rho.n, (0..d).map(|x| rho.get(x, y) / norm).collect())
}

/// Entrywise error bound on [`purify_rank1`]'s output when its input carries
/// precision `delta`.
pub fn purify_error_bound(n: usize, delta: f64) -> f64 {
    let d = (1u64 << n) as f64;
    2.0 * delta.sqrt() / (0.125 / (d * d)).sqrt()
}

/// Haar-random pure state: normalized vector of i.i.d. complex Gaussians.
pub fn haar_random_state(n: usize, seed: u64) -> PureState {
    haar_from_rng(n, &mut rng::substream(seed, "haar", n as u64))
}

pub fn haar_from_rng<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> PureState {
    loop {
        let amps: Vec<C64> = (0..1usize << n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re, im)
            })
            .collect();
        let nrm = norm2(&amps);
        if nrm > 0.0 {
            return PureState {
                n,
                amps: amps.into_iter().map(|a| a / nrm).collect(),
            };
        }
    }
}

/// Haar-random real state (real Gaussian entries, normalized).
pub fn random_real_state<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..1usize << n)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 0.0 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// The matrix `H = A + iB` is embedded as the real symmetric
/// `[[A, -B], [B, A]]`, whose spectrum is that of `H` with every eigenvalue
/// doubled; cyclic Jacobi sweeps diagonalize the embedding.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    let d = h.dim;
    let n = 2 * d;
    let mut a = vec![0.0f64; n * n];
    for i in 0..d {
        for j in 0..d {
            let z = h.get(i, j);
            // Symmetrize so tiny non-Hermitian noise does not bias the result.
            let zt = h.get(j, i).conj();
            let (re, im) = (0.5 * (z.re + zt.re), 0.5 * (z.im + zt.im));
            a[i * n + j] = re;
            a[(i + d) * n + (j + d)] = re;
            a[i * n + (j + d)] = -im;
            a[(i + d) * n + j] = im;
        }
    }
    let mut eig = jacobi_symmetric(&mut a, n)?;
    eig.sort_by(|x, y| x.total_cmp(y));
    Ok(eig.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

fn jacobi_symmetric(a: &mut [f64], n: usize) -> Result<Vec<f64>> {
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_THRESHOLD * frob.max(1.0);
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    loop {
        let o = off(a);
        if o <= threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off: o });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i * n + i]).collect())
}
