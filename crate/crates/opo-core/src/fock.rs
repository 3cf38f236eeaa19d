//! Truncated Fock-space oracle: multimode density matrices, the matrix-free
//! Liouvillian of the coupled-oscillator master equation, fixed-step RK4
//! propagation, conditioning primitives, displaced-parity Wigner evaluation,
//! and operator moments.
//!
//! Everything here is deliberately independent of the Gaussian layer: the
//! two routes are compared against each other across the crate.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::linalg::expm;
use crate::phase_space::{GaussianWignerState, SystemParams};
use crate::{OpoError, Result};

const DEFAULT_DIM_CAP: usize = 2048;

/// Per-mode photon-number truncation; a cutoff of `c` keeps levels 0..=c.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    cutoffs: Vec<usize>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
    cap: usize,
}

impl FockBasis {
    pub fn new(cutoffs: &[usize]) -> Result<Self> {
        Self::with_cap(cutoffs, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(cutoffs: &[usize], cap: usize) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(OpoError::InvalidParams("basis needs at least one mode".into()));
        }
        if cutoffs.iter().any(|&c| c < 1) {
            return Err(OpoError::InvalidParams("every cutoff must be >= 1".into()));
        }
        let dims: Vec<usize> = cutoffs.iter().map(|c| c + 1).collect();
        let dim: usize = dims.iter().product();
        if dim > cap {
            return Err(OpoError::DimensionCap { dim, cap });
        }
        // Row-major strides, last mode fastest.
        let n = dims.len();
        let mut strides = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(Self { cutoffs: cutoffs.to_vec(), dims, strides, dim, cap })
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn stride(&self, mode: usize) -> usize {
        self.strides[mode]
    }

    /// Photon level of `mode` inside the flat index.
    #[inline]
    pub fn level(&self, flat: usize, mode: usize) -> usize {
        (flat / self.strides[mode]) % self.dims[mode]
    }

    /// Per-mode level lookup tables, `tables[mode][flat]`.
    fn level_tables(&self) -> Vec<Vec<u16>> {
        (0..self.n_modes())
            .map(|k| (0..self.dim).map(|f| self.level(f, k) as u16).collect())
            .collect()
    }
}

/// A creation or annihilation letter acting on one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// One letter of an operator word: `(mode, ladder)`.
pub type OpLetter = (usize, Ladder);

/// Truncated multimode density matrix, row-major `dim × dim` complex.
/// Blocks produced by conditioning are stored unnormalized, so the trace is
/// meaningful data rather than always 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    basis: FockBasis,
    data: Vec<Complex64>,
}

impl FockDensityMatrix {
    pub fn zeros(basis: FockBasis) -> Self {
        let d = basis.dim();
        Self { basis, data: vec![Complex64::ZERO; d * d] }
    }

    pub fn vacuum(basis: FockBasis) -> Self {
        let mut rho = Self::zeros(basis);
        rho.data[0] = Complex64::ONE;
        rho
    }

    /// Product of diagonal single-mode distributions (e.g. thermal states).
    /// The truncated tail is *not* renormalized.
    pub fn from_diagonal_product(basis: FockBasis, pmfs: &[Vec<f64>]) -> Result<Self> {
        if pmfs.len() != basis.n_modes() {
            return Err(OpoError::InvalidParams("one pmf per mode required".into()));
        }
        for (k, pmf) in pmfs.iter().enumerate() {
            if pmf.len() != basis.dims()[k] {
                return Err(OpoError::InvalidParams(format!("pmf {k} length must match mode dimension")));
            }
        }
        let d = basis.dim();
        let mut rho = Self::zeros(basis);
        for f in 0..d {
            let mut w = 1.0;
            for (k, pmf) in pmfs.iter().enumerate() {
                w *= pmf[rho.basis.level(f, k)];
            }
            rho.data[f * d + f] = Complex64::new(w, 0.0);
        }
        Ok(rho)
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.data[n * self.basis.dim() + m]
    }

    #[inline]
    pub fn set(&mut self, n: usize, m: usize, v: Complex64) {
        let d = self.basis.dim();
        self.data[n * d + m] = v;
    }

    pub fn trace(&self) -> Complex64 {
        let d = self.basis.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Rescale so the trace is 1.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace().re;
        if t <= 0.0 || !t.is_finite() {
            return Err(OpoError::InvalidState(format!("cannot normalize trace {t}")));
        }
        let mut out = self.clone();
        out.scale(1.0 / t);
        Ok(out)
    }

    /// self ← self + s·other (same basis required).
    pub fn add_assign_scaled(&mut self, other: &Self, s: Complex64) -> Result<()> {
        if self.basis != other.basis {
            return Err(OpoError::InvalidParams("add requires identical bases".into()));
        }
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
        Ok(())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let d = self.basis.dim();
        let mut out = Self::zeros(self.basis.clone());
        for n in 0..d {
            for m in 0..d {
                out.data[m * d + n] = self.data[n * d + m].conj();
            }
        }
        out
    }

    /// Largest |ρ − ρ†| entry.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.basis.dim();
        let mut worst = 0.0f64;
        for n in 0..d {
            for m in n..d {
                let dev = (self.data[n * d + m] - self.data[m * d + n].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// ρ ← (ρ + ρ†)/2.
    pub fn resymmetrize(&mut self) {
        let d = self.basis.dim();
        for n in 0..d {
            for m in n..d {
                let avg = (self.data[n * d + m] + self.data[m * d + n].conj()) * 0.5;
                self.data[n * d + m] = avg;
                self.data[m * d + n] = avg.conj();
            }
        }
    }

    /// Smallest eigenvalue of the Hermitian part, via the real symmetric
    /// embedding [[Re, −Im], [Im, Re]]. On-demand check only.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.basis.dim();
        let mut big = nalgebra::DMatrix::<f64>::zeros(2 * d, 2 * d);
        for n in 0..d {
            for m in 0..d {
                let v = (self.data[n * d + m] + self.data[m * d + n].conj()) * 0.5;
                big[(n, m)] = v.re;
                big[(n + d, m + d)] = v.re;
                big[(n + d, m)] = v.im;
                big[(n, m + d)] = -v.im;
            }
        }
        big.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Tensor product, `self`'s modes first.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut cutoffs = self.basis.cutoffs().to_vec();
        cutoffs.extend_from_slice(other.basis.cutoffs());
        let basis = FockBasis::with_cap(&cutoffs, self.basis.cap.max(other.basis.cap))?;
        let (da, db) = (self.basis.dim(), other.basis.dim());
        let d = basis.dim();
        let mut out = Self::zeros(basis);
        for na in 0..da {
            for ma in 0..da {
                let va = self.data[na * da + ma];
                if va == Complex64::ZERO {
                    continue;
                }
                for nb in 0..db {
                    let row = (na * db + nb) * d + ma * db;
                    let brow = nb * db;
                    for mb in 0..db {
                        out.data[row + mb] = va * other.data[brow + mb];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Trace out all modes not listed; `keep` must be strictly ascending.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let nm = self.basis.n_modes();
        if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= nm) {
            return Err(OpoError::InvalidParams("keep must be a strictly ascending subset of modes".into()));
        }
        let cutoffs: Vec<usize> = keep.iter().map(|&k| self.basis.cutoffs()[k]).collect();
        let new_basis = FockBasis::with_cap(&cutoffs, self.basis.cap)?;
        let traced: Vec<usize> = (0..nm).filter(|k| !keep.contains(k)).collect();
        let d = self.basis.dim();
        let nd = new_basis.dim();
        let mut out = Self::zeros(new_basis);
        for n in 0..d {
            for m in 0..d {
                if traced.iter().any(|&k| self.basis.level(n, k) != self.basis.level(m, k)) {
                    continue;
                }
                let v = self.data[n * d + m];
                if v == Complex64::ZERO {
                    continue;
                }
                let mut nn = 0usize;
                let mut mm = 0usize;
                for (i, &k) in keep.iter().enumerate() {
                    nn += self.basis.level(n, k) * out.basis.strides[i];
                    mm += self.basis.level(m, k) * out.basis.strides[i];
                }
                out.data[nn * nd + mm] += v;
            }
        }
        Ok(out)
    }

    /// The conditioning primitive ⟨bra|ρ|ket⟩ on one mode: an (unnormalized)
    /// operator on the remaining modes.
    pub fn slice_mode(&self, mode: usize, bra_level: usize, ket_level: usize) -> Result<Self> {
        let nm = self.basis.n_modes();
        if mode >= nm || nm < 2 {
            return Err(OpoError::InvalidParams("slice_mode needs a valid mode on a multimode state".into()));
        }
        if bra_level >= self.basis.dims()[mode] || ket_level >= self.basis.dims()[mode] {
            return Err(OpoError::InvalidParams("slice level beyond cutoff".into()));
        }
        let cutoffs: Vec<usize> = (0..nm).filter(|&k| k != mode).map(|k| self.basis.cutoffs()[k]).collect();
        let new_basis = FockBasis::with_cap(&cutoffs, self.basis.cap)?;
        let d = self.basis.dim();
        let nd = new_basis.dim();
        let mut out = Self::zeros(new_basis);
        for n in 0..d {
            if self.basis.level(n, mode) != bra_level {
                continue;
            }
            for m in 0..d {
                if self.basis.level(m, mode) != ket_level {
                    continue;
                }
                let mut nn = 0usize;
                let mut mm = 0usize;
                let mut i = 0usize;
                for k in 0..nm {
                    if k == mode {
                        continue;
                    }
                    nn += self.basis.level(n, k) * out.basis.strides[i];
                    mm += self.basis.level(m, k) * out.basis.strides[i];
                    i += 1;
                }
                out.data[nn * nd + mm] = self.data[n * d + m];
            }
        }
        Ok(out)
    }

    /// ⟨φ|ρ|φ⟩ on one mode for an arbitrary ket; unnormalized result.
    pub fn project_mode(&self, mode: usize, ket: &[Complex64]) -> Result<Self> {
        let dm = self.basis.dims()[mode];
        if ket.len() != dm {
            return Err(OpoError::InvalidParams(format!("ket length {} != mode dimension {dm}", ket.len())));
        }
        let mut acc: Option<Self> = None;
        for (l, cl) in ket.iter().enumerate() {
            if *cl == Complex64::ZERO {
                continue;
            }
            for (lp, clp) in ket.iter().enumerate() {
                if *clp == Complex64::ZERO {
                    continue;
                }
                let mut term = self.slice_mode(mode, l, lp)?;
                let w = cl.conj() * clp;
                for v in &mut term.data {
                    *v *= w;
                }
                acc = Some(match acc {
                    None => term,
                    Some(mut a) => {
                        for (x, y) in a.data.iter_mut().zip(term.data.iter()) {
                            *x += *y;
                        }
                        a
                    }
                });
            }
        }
        acc.ok_or_else(|| OpoError::InvalidParams("ket is zero".into()))
    }

    /// Zero-pad to larger cutoffs. Deliberate growth: the dimension cap is
    /// raised to whatever the requested cutoffs need.
    pub fn embed(&self, new_cutoffs: &[usize]) -> Result<Self> {
        let nm = self.basis.n_modes();
        if new_cutoffs.len() != nm || new_cutoffs.iter().zip(self.basis.cutoffs()).any(|(&n, &o)| n < o) {
            return Err(OpoError::InvalidParams("embed requires cutoffs >= current per mode".into()));
        }
        let needed: usize = new_cutoffs.iter().map(|c| c + 1).product();
        let new_basis = FockBasis::with_cap(new_cutoffs, self.basis.cap.max(needed))?;
        let d = self.basis.dim();
        let nd = new_basis.dim();
        let mut out = Self::zeros(new_basis);
        for n in 0..d {
            let nn: usize = (0..nm).map(|k| self.basis.level(n, k) * out.basis.strides[k]).sum();
            for m in 0..d {
                let v = self.data[n * d + m];
                if v == Complex64::ZERO {
                    continue;
                }
                let mm: usize = (0..nm).map(|k| self.basis.level(m, k) * out.basis.strides[k]).sum();
                out.data[nn * nd + mm] = v;
            }
        }
        Ok(out)
    }

    /// Drop levels beyond the new cutoffs; returns the state and the
    /// discarded diagonal weight.
    pub fn truncate(&self, new_cutoffs: &[usize]) -> Result<(Self, f64)> {
        let nm = self.basis.n_modes();
        if new_cutoffs.len() != nm || new_cutoffs.iter().zip(self.basis.cutoffs()).any(|(&n, &o)| n > o) {
            return Err(OpoError::InvalidParams("truncate requires cutoffs <= current per mode".into()));
        }
        let new_basis = FockBasis::with_cap(new_cutoffs, self.basis.cap)?;
        let d = self.basis.dim();
        let nd = new_basis.dim();
        let mut out = Self::zeros(new_basis);
        let mut dropped = 0.0;
        for n in 0..d {
            let keep_n = (0..nm).all(|k| self.basis.level(n, k) < out.basis.dims[k]);
            if !keep_n {
                dropped += self.data[n * d + n].re;
                continue;
            }
            let nn: usize = (0..nm).map(|k| self.basis.level(n, k) * out.basis.strides[k]).sum();
            for m in 0..d {
                if (0..nm).all(|k| self.basis.level(m, k) < out.basis.dims[k]) {
                    let mm: usize = (0..nm).map(|k| self.basis.level(m, k) * out.basis.strides[k]).sum();
                    out.data[nn * nd + mm] = self.data[n * d + m];
                }
            }
        }
        Ok((out, dropped))
    }

    /// Right-multiply by a ladder operator: ρ ← ρ·a or ρ·a†.
    fn right_mul_ladder(&self, letter: OpLetter) -> Self {
        let (mode, kind) = letter;
        let d = self.basis.dim();
        let s = self.basis.strides[mode];
        let dm = self.basis.dims[mode];
        let mut out = Self::zeros(self.basis.clone());
        for n in 0..d {
            let row = n * d;
            for m in 0..d {
                let lm = self.basis.level(m, mode);
                match kind {
                    // (ρ a)_{n,m} = √(m_k) ρ_{n, m − e_k}
                    Ladder::Annihilate => {
                        if lm >= 1 {
                            out.data[row + m] = self.data[row + m - s] * (lm as f64).sqrt();
                        }
                    }
                    // (ρ a†)_{n,m} = √(m_k + 1) ρ_{n, m + e_k}
                    Ladder::Create => {
                        if lm + 1 < dm {
                            out.data[row + m] = self.data[row + m + s] * ((lm + 1) as f64).sqrt();
                        }
                    }
                }
            }
        }
        out
    }

    /// Apply a real unitary to the joint space of two modes: ρ → UρUᵀ.
    /// `u` is (dᵢ·dⱼ)×(dᵢ·dⱼ) over pair index p = nᵢ·dⱼ + nⱼ.
    fn apply_pair_unitary(&self, mode_i: usize, mode_j: usize, u: &nalgebra::DMatrix<f64>) -> Result<Self> {
        let nm = self.basis.n_modes();
        if mode_i >= nm || mode_j >= nm || mode_i == mode_j {
            return Err(OpoError::InvalidParams("pair unitary needs two distinct valid modes".into()));
        }
        let (di, dj) = (self.basis.dims[mode_i], self.basis.dims[mode_j]);
        let pd = di * dj;
        if u.nrows() != pd || u.ncols() != pd {
            return Err(OpoError::InvalidParams(format!("unitary must be {pd}x{pd}")));
        }
        let d = self.basis.dim();
        let (si, sj) = (self.basis.strides[mode_i], self.basis.strides[mode_j]);

        // Flat offsets of each pair index, and the base indices where both
        // pair modes sit at level zero.
        let offsets: Vec<usize> = (0..pd).map(|p| (p / dj) * si + (p % dj) * sj).collect();
        let bases: Vec<usize> = (0..d)
            .filter(|&f| self.basis.level(f, mode_i) == 0 && self.basis.level(f, mode_j) == 0)
            .collect();

        let uc = u.map(|x| Complex64::new(x, 0.0));
        let mut out = Self::zeros(self.basis.clone());
        let mut block = nalgebra::DMatrix::<Complex64>::zeros(pd, pd);
        for &br in &bases {
            for &bc in &bases {
                for p in 0..pd {
                    let row = (br + offsets[p]) * d + bc;
                    for q in 0..pd {
                        block[(p, q)] = self.data[row + offsets[q]];
                    }
                }
                let rotated = &uc * &block * uc.transpose();
                for p in 0..pd {
                    let row = (br + offsets[p]) * d + bc;
                    for q in 0..pd {
                        out.data[row + offsets[q]] = rotated[(p, q)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Balanced two-mode mix: slot `mode_i` becomes d₊ = (aᵢ + aⱼ)/√2 and
    /// slot `mode_j` becomes d₋ = (aᵢ − aⱼ)/√2. Exactly unitary on the
    /// truncated space; ideal on every complete total-photon-number block,
    /// so callers should embed first if the top levels carry weight.
    pub fn apply_balanced_mix(&self, mode_i: usize, mode_j: usize) -> Result<Self> {
        let (di, dj) = (self.basis.dims[mode_i], self.basis.dims[mode_j]);
        let u = balanced_mix_matrix(di, dj);
        self.apply_pair_unitary(mode_i, mode_j, &u)
    }

    /// Two-mode squeezer exp(s(aᵢ†aⱼ† − aᵢaⱼ)) on the truncated space.
    pub fn apply_two_mode_squeeze(&self, mode_i: usize, mode_j: usize, s: f64) -> Result<Self> {
        let (di, dj) = (self.basis.dims[mode_i], self.basis.dims[mode_j]);
        let u = two_mode_squeeze_matrix(di, dj, s);
        self.apply_pair_unitary(mode_i, mode_j, &u)
    }

    /// Single-mode squeezer exp((s/2)(a†² − a²)) on the truncated space.
    pub fn apply_single_mode_squeeze(&self, _mode: usize, s: f64) -> Result<Self> {
        let nm = self.basis.n_modes();
        if nm == 1 {
            // Degenerate case of the pair machinery: build directly.
            let dm = self.basis.dims[0];
            let u = single_mode_squeeze_matrix(dm, s);
            let uc = u.map(|x| Complex64::new(x, 0.0));
            let d = self.basis.dim();
            let mut block = nalgebra::DMatrix::<Complex64>::zeros(d, d);
            for n in 0..d {
                for m in 0..d {
                    block[(n, m)] = self.data[n * d + m];
                }
            }
            let rotated = &uc * &block * uc.transpose();
            let mut out = Self::zeros(self.basis.clone());
            for n in 0..d {
                for m in 0..d {
                    out.data[n * d + m] = rotated[(n, m)];
                }
            }
            return Ok(out);
        }
        Err(OpoError::InvalidParams("single-mode squeeze implemented for single-mode states".into()))
    }

    /// Photon addition a†ρa on one mode (unnormalized). Valid for any ρ:
    /// built as ((ρa)†a)†.
    pub fn photon_added(&self, mode: usize) -> Result<Self> {
        if mode >= self.basis.n_modes() {
            return Err(OpoError::InvalidParams(format!("mode {mode} out of range")));
        }
        let rho_a = self.right_mul_ladder((mode, Ladder::Annihilate));
        let adag_rhodag_a = rho_a.dagger().right_mul_ladder((mode, Ladder::Annihilate));
        Ok(adag_rhodag_a.dagger())
    }

    /// Ordered-product expectation Tr[ρ·w₁·w₂·…] for a word of up to four
    /// ladder letters.
    pub fn moment(&self, word: &[OpLetter]) -> Result<Complex64> {
        if word.len() > 4 {
            return Err(OpoError::InvalidParams("moment words are limited to length 4".into()));
        }
        for &(mode, _) in word {
            if mode >= self.basis.n_modes() {
                return Err(OpoError::InvalidParams(format!("mode {mode} out of range")));
            }
        }
        let mut m = self.clone();
        for &letter in word {
            m = m.right_mul_ladder(letter);
        }
        Ok(m.trace())
    }

    /// Photon-number distribution of one mode: the diagonal of the reduced
    /// density matrix. Sums to the trace of ρ.
    pub fn photon_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        let nm = self.basis.n_modes();
        if mode >= nm {
            return Err(OpoError::InvalidParams(format!("mode {mode} out of range")));
        }
        let d = self.basis.dim();
        let mut pmf = vec![0.0; self.basis.dims[mode]];
        for n in 0..d {
            pmf[self.basis.level(n, mode)] += self.data[n * d + n].re;
        }
        Ok(pmf)
    }

    /// First and second Wigner-ordered quadrature moments, in the global
    /// (x₁, y₁, x₂, y₂, …) ordering: the mean vector and the symmetrized
    /// covariance, directly comparable with [`GaussianWignerState`].
    pub fn quadrature_moments(&self) -> Result<(nalgebra::DVector<f64>, nalgebra::DMatrix<f64>)> {
        let nm = self.basis.n_modes();
        let dim = 2 * nm;
        let half = Complex64::new(0.5, 0.0);
        let halfi = Complex64::new(0.0, -0.5); // coefficient pair for y
        // x_k = ½ a_k + ½ a_k†,  y_k = −(i/2) a_k + (i/2) a_k†.
        let coeff = |q: usize, which: usize| -> Complex64 {
            match (q, which) {
                (0, 0) => half,          // x, annihilate
                (0, 1) => half,          // x, create
                (1, 0) => halfi,         // y, annihilate
                (1, 1) => -halfi,        // y, create
                _ => unreachable!(),
            }
        };
        let letter = |mode: usize, which: usize| -> OpLetter {
            (mode, if which == 0 { Ladder::Annihilate } else { Ladder::Create })
        };

        let mut mean = nalgebra::DVector::<f64>::zeros(dim);
        for mode in 0..nm {
            for q in 0..2 {
                let mut v = Complex64::ZERO;
                for w in 0..2 {
                    v += coeff(q, w) * self.moment(&[letter(mode, w)])?;
                }
                mean[2 * mode + q] = v.re;
            }
        }

        let mut cov = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let (mi, qi) = (i / 2, i % 2);
                let (mj, qj) = (j / 2, j % 2);
                let mut sym = Complex64::ZERO;
                for wi in 0..2 {
                    for wj in 0..2 {
                        let c = coeff(qi, wi) * coeff(qj, wj);
                        let forward = self.moment(&[letter(mi, wi), letter(mj, wj)])?;
                        let backward = self.moment(&[letter(mj, wj), letter(mi, wi)])?;
                        sym += c * (forward + backward) * 0.5;
                    }
                }
                let centered = sym.re - mean[i] * mean[j];
                cov[(i, j)] = centered;
                cov[(j, i)] = centered;
            }
        }
        Ok((mean, cov))
    }

    /// Wigner function of a single-mode state at phase-space points
    /// (x, y), via the displaced-parity identity
    /// W(α) = (2/π) Tr[ρ D(2α) Π].
    pub fn wigner_single(&self, points: &[(f64, f64)]) -> Result<Vec<f64>> {
        if self.basis.n_modes() != 1 {
            return Err(OpoError::InvalidParams("wigner_single needs a single-mode state".into()));
        }
        let d = self.basis.dim();
        let mut out = Vec::with_capacity(points.len());
        for &(x, y) in points {
            let kernel = parity_displacement_kernel(d, Complex64::new(2.0 * x, 2.0 * y));
            let mut w = Complex64::ZERO;
            for n in 0..d {
                for m in 0..d {
                    w += self.data[n * d + m] * kernel[m * d + n];
                }
            }
            out.push(w.re * std::f64::consts::FRAC_2_PI);
        }
        Ok(out)
    }

    /// Two-mode Wigner function at points (x_a, y_a, x_b, y_b).
    pub fn wigner_two(&self, points: &[[f64; 4]]) -> Result<Vec<f64>> {
        if self.basis.n_modes() != 2 {
            return Err(OpoError::InvalidParams("wigner_two needs a two-mode state".into()));
        }
        let (da, db) = (self.basis.dims[0], self.basis.dims[1]);
        let d = self.basis.dim();
        let mut out = Vec::with_capacity(points.len());
        for &[xa, ya, xb, yb] in points {
            let ka = parity_displacement_kernel(da, Complex64::new(2.0 * xa, 2.0 * ya));
            let kb = parity_displacement_kernel(db, Complex64::new(2.0 * xb, 2.0 * yb));
            let mut w = Complex64::ZERO;
            for n in 0..d {
                let (na, nb) = (n / db, n % db);
                for m in 0..d {
                    let (ma, mb) = (m / db, m % db);
                    w += self.data[n * d + m] * ka[ma * da + na] * kb[mb * db + nb];
                }
            }
            out.push(w.re * std::f64::consts::FRAC_2_PI * std::f64::consts::FRAC_2_PI);
        }
        Ok(out)
    }

    /// Binary dump: one JSON header line (cutoffs and dimension), then
    /// row-major little-endian (re, im) f64 pairs.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let cutoffs = self
            .basis
            .cutoffs()
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(
            w,
            "{{\"format\":\"fock-rho complex128 le row-major\",\"cutoffs\":[{}],\"dim\":{}}}",
            cutoffs,
            self.basis.dim()
        )?;
        for v in &self.data {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Read a dump produced by [`FockDensityMatrix::write_dump`].
    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut header = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            r.read_exact(&mut byte).map_err(|e| OpoError::Io(e.to_string()))?;
            if byte[0] == b'\n' {
                break;
            }
            header.push(byte[0]);
            if header.len() > 4096 {
                return Err(OpoError::Io("dump header too long".into()));
            }
        }
        let header = String::from_utf8(header).map_err(|e| OpoError::Io(e.to_string()))?;
        let cutoffs = parse_cutoffs_from_header(&header)?;
        let basis = FockBasis::new(&cutoffs)?;
        let d = basis.dim();
        let mut data = Vec::with_capacity(d * d);
        let mut buf = [0u8; 16];
        for _ in 0..d * d {
            r.read_exact(&mut buf).map_err(|e| OpoError::Io(e.to_string()))?;
            let re = f64::from_le_bytes(buf[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..16].try_into().unwrap());
            data.push(Complex64::new(re, im));
        }
        Ok(Self { basis, data })
    }
}

/// Minimal header field extraction; the header is machine-written.
fn parse_cutoffs_from_header(header: &str) -> Result<Vec<usize>> {
    let start = header
        .find("\"cutoffs\":[")
        .ok_or_else(|| OpoError::Io("dump header missing cutoffs".into()))?
        + "\"cutoffs\":[".len();
    let end = header[start..]
        .find(']')
        .ok_or_else(|| OpoError::Io("dump header malformed".into()))?
        + start;
    header[start..end]
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| OpoError::Io(format!("bad cutoff in dump header: {e}")))
        })
        .collect()
}

/// Matrix elements ⟨m|D(β)|n⟩(−1)ⁿ of the displaced parity, as a flat
/// d×d row-major kernel (index m·d + n). Uses the associated-Laguerre
/// closed form of the displacement matrix elements.
fn parity_displacement_kernel(d: usize, beta: Complex64) -> Vec<Complex64> {
    let x = beta.norm_sqr();
    let gauss = (-0.5 * x).exp();
    // laguerre[k][a] = L_k^(a)(x) for k + a < d.
    let mut laguerre = vec![vec![0.0f64; d]; d];
    for a in 0..d {
        laguerre[0][a] = 1.0;
        if d > 1 {
            laguerre[1][a] = 1.0 + a as f64 - x;
        }
        for k in 1..d - 1 {
            let kf = k as f64;
            let af = a as f64;
            laguerre[k + 1][a] =
                ((2.0 * kf + 1.0 + af - x) * laguerre[k][a] - (kf + af) * laguerre[k - 1][a]) / (kf + 1.0);
        }
    }
    let mut kernel = vec![Complex64::ZERO; d * d];
    for m in 0..d {
        for n in 0..d {
            let (lo, hi) = if m >= n { (n, m) } else { (m, n) };
            let a = hi - lo;
            // √(lo!/hi!) = ∏_{k=lo+1..hi} 1/√k
            let mut ratio = 1.0;
            for k in lo + 1..=hi {
                ratio /= (k as f64).sqrt();
            }
            let base = if m >= n { beta } else { -beta.conj() };
            let mut phase = Complex64::ONE;
            for _ in 0..a {
                phase *= base;
            }
            let val = phase * (ratio * gauss * laguerre[lo][a]);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            kernel[m * d + n] = val * sign;
        }
    }
    kernel
}

/// Pair-space unitary of the balanced mix: exp((π/4)(a†b − ab†)) followed
/// by the parity flip (−1)^{n_b}, so that slot a carries (a+b)/√2 and slot
/// b carries (a−b)/√2. The generator conserves nₐ + n_b, so the
/// exponential is built per total-photon-number block.
fn balanced_mix_matrix(di: usize, dj: usize) -> nalgebra::DMatrix<f64> {
    let pd = di * dj;
    let theta = std::f64::consts::FRAC_PI_4;
    let mut u = nalgebra::DMatrix::<f64>::zeros(pd, pd);
    for total in 0..=(di - 1 + dj - 1) {
        // Members |na, total−na⟩ admissible under both cutoffs.
        let na_min = total.saturating_sub(dj - 1);
        let na_max = total.min(di - 1);
        let k = na_max - na_min + 1;
        let mut gen = nalgebra::DMatrix::<f64>::zeros(k, k);
        for (idx, na) in (na_min..=na_max).enumerate() {
            let nb = total - na;
            // a†b |na, nb⟩ = √((na+1)·nb) |na+1, nb−1⟩.
            if na < na_max {
                gen[(idx + 1, idx)] += theta * (((na + 1) * nb) as f64).sqrt();
                gen[(idx, idx + 1)] -= theta * (((na + 1) * nb) as f64).sqrt();
            }
        }
        let ub = expm(&gen);
        for (row, na_r) in (na_min..=na_max).enumerate() {
            let p = na_r * dj + (total - na_r);
            for (col, na_c) in (na_min..=na_max).enumerate() {
                let q = na_c * dj + (total - na_c);
                u[(p, q)] = ub[(row, col)];
            }
        }
    }
    // Parity flip on mode b: row phases (−1)^{n_b}.
    for na in 0..di {
        for nb in (1..dj).step_by(2) {
            let p = na * dj + nb;
            for q in 0..pd {
                u[(p, q)] = -u[(p, q)];
            }
        }
    }
    u
}

fn two_mode_squeeze_matrix(di: usize, dj: usize, s: f64) -> nalgebra::DMatrix<f64> {
    let pd = di * dj;
    let mut gen = nalgebra::DMatrix::<f64>::zeros(pd, pd);
    for na in 0..di {
        for nb in 0..dj {
            let p = na * dj + nb;
            if na + 1 < di && nb + 1 < dj {
                let q = (na + 1) * dj + (nb + 1);
                gen[(q, p)] += s * (((na + 1) * (nb + 1)) as f64).sqrt();
            }
            if na >= 1 && nb >= 1 {
                let q = (na - 1) * dj + (nb - 1);
                gen[(q, p)] -= s * ((na * nb) as f64).sqrt();
            }
        }
    }
    expm(&gen)
}

fn single_mode_squeeze_matrix(dm: usize, s: f64) -> nalgebra::DMatrix<f64> {
    let mut gen = nalgebra::DMatrix::<f64>::zeros(dm, dm);
    for n in 0..dm {
        if n + 2 < dm {
            gen[(n + 2, n)] += 0.5 * s * (((n + 1) * (n + 2)) as f64).sqrt();
        }
        if n >= 2 {
            gen[(n - 2, n)] -= 0.5 * s * ((n * (n - 1)) as f64).sqrt();
        }
    }
    expm(&gen)
}

/// Matrix-free Lindblad generator: pairwise parametric couplings
/// χ(aᵢ†aⱼ† − aᵢaⱼ) plus per-mode damping κ(2aρa† − a†aρ − ρa†a).
/// Applied entry-by-entry as neighbor gathers; no superoperator matrix is
/// ever formed.
pub struct Liouvillian {
    basis: FockBasis,
    couplings: Vec<(usize, usize, f64)>,
    damping: Vec<f64>,
    levels: Vec<Vec<u16>>,
    sqrt_table: Vec<f64>,
}

impl Liouvillian {
    pub fn new(basis: FockBasis, couplings: Vec<(usize, usize, f64)>, damping: Vec<f64>) -> Result<Self> {
        let nm = basis.n_modes();
        if damping.len() != nm {
            return Err(OpoError::InvalidParams("one damping rate per mode required".into()));
        }
        if damping.iter().any(|&k| k < 0.0 || !k.is_finite()) {
            return Err(OpoError::InvalidParams("damping rates must be finite and >= 0".into()));
        }
        for &(i, j, chi) in &couplings {
            if i >= nm || j >= nm || i == j || !chi.is_finite() {
                return Err(OpoError::InvalidParams("coupling must link two distinct valid modes".into()));
            }
        }
        let levels = basis.level_tables();
        let max_dim = basis.dims().iter().copied().max().unwrap_or(1);
        let sqrt_table: Vec<f64> = (0..=max_dim).map(|l| (l as f64).sqrt()).collect();
        Ok(Self { basis, couplings, damping, levels, sqrt_table })
    }

    /// The three-mode generator of the coupled system: χ₁ links modes
    /// (1, 2), χ₂ links (2, 3), and modes 2, 3 are damped at κ₂, κ₃. The
    /// trigger mode 1 is a traveling wave and has no damping.
    pub fn three_mode(p: &SystemParams, basis: FockBasis) -> Result<Self> {
        if basis.n_modes() != 3 {
            return Err(OpoError::InvalidParams("three_mode needs a 3-mode basis".into()));
        }
        let couplings = vec![(0, 1, p.chi1()), (1, 2, p.chi2())];
        let damping = vec![0.0, p.kappa2(), p.kappa3()];
        Self::new(basis, couplings, damping)
    }

    /// The decoupled oscillator on modes (2, 3) alone.
    pub fn opo_two_mode(p: &SystemParams, basis: FockBasis) -> Result<Self> {
        if basis.n_modes() != 2 {
            return Err(OpoError::InvalidParams("opo_two_mode needs a 2-mode basis".into()));
        }
        let couplings = vec![(0, 1, p.chi2())];
        let damping = vec![p.kappa2(), p.kappa3()];
        Self::new(basis, couplings, damping)
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    /// Largest rate in the generator; the RK4 step bound is 0.05 divided
    /// by this.
    pub fn max_rate(&self) -> f64 {
        let chi_max = self.couplings.iter().map(|&(_, _, c)| c.abs()).fold(0.0, f64::max);
        let kap_max = self.damping.iter().cloned().fold(0.0, f64::max);
        chi_max.max(kap_max)
    }

    /// Step size safely inside the RK4 stability region. The generator's
    /// spectral radius grows with the cutoffs (the damping superoperator
    /// reaches −κ(n+m) ≈ −2κc and the couplings ≈ 2χ(c+1)), so the naive
    /// 0.05/max-rate bound is not enough at large cutoffs.
    pub fn suggested_dt(&self) -> f64 {
        let mut scale = 0.0;
        for (k, &kappa) in self.damping.iter().enumerate() {
            scale += 2.0 * kappa * self.basis.cutoffs()[k] as f64;
        }
        for &(i, j, chi) in &self.couplings {
            let top = (self.basis.dims()[i] as f64 * self.basis.dims()[j] as f64).sqrt();
            scale += 2.0 * chi.abs() * top;
        }
        let rate = self.max_rate();
        let spec_bound = if rate > 0.0 { 0.05 / rate } else { f64::INFINITY };
        if scale <= 0.0 {
            return spec_bound.min(0.05);
        }
        (1.6 / scale).min(spec_bound)
    }

    /// out ← L(ρ).
    pub fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.basis.dim();
        debug_assert_eq!(rho.len(), d * d);
        debug_assert_eq!(out.len(), d * d);
        out.fill(Complex64::ZERO);

        for &(i, j, chi) in &self.couplings {
            if chi == 0.0 {
                continue;
            }
            let (si, sj) = (self.basis.strides[i], self.basis.strides[j]);
            let (di, dj) = (self.basis.dims[i], self.basis.dims[j]);
            let s_sum = si + sj;
            let (li, lj) = (&self.levels[i], &self.levels[j]);
            let sq = &self.sqrt_table;
            for n in 0..d {
                let (ni, nj) = (li[n] as usize, lj[n] as usize);
                let row = n * d;
                // χ(a_i†a_j†ρ − a_ia_jρ) gathers over the row index.
                let down = if ni >= 1 && nj >= 1 { chi * sq[ni] * sq[nj] } else { 0.0 };
                let up = if ni + 1 < di && nj + 1 < dj { chi * sq[ni + 1] * sq[nj + 1] } else { 0.0 };
                for m in 0..d {
                    let mut acc = Complex64::ZERO;
                    if down != 0.0 {
                        acc += rho[(n - s_sum) * d + m] * down;
                    }
                    if up != 0.0 {
                        acc -= rho[(n + s_sum) * d + m] * up;
                    }
                    // χ(ρa_ia_j − ρa_i†a_j†) gathers over the column index.
                    let (mi, mj) = (li[m] as usize, lj[m] as usize);
                    if mi >= 1 && mj >= 1 {
                        acc += rho[row + m - s_sum] * (chi * sq[mi] * sq[mj]);
                    }
                    if mi + 1 < di && mj + 1 < dj {
                        acc -= rho[row + m + s_sum] * (chi * sq[mi + 1] * sq[mj + 1]);
                    }
                    out[row + m] += acc;
                }
            }
        }

        for (k, &kappa) in self.damping.iter().enumerate() {
            if kappa == 0.0 {
                continue;
            }
            let sk = self.basis.strides[k];
            let dk = self.basis.dims[k];
            let lk = &self.levels[k];
            let sq = &self.sqrt_table;
            for n in 0..d {
                let nk = lk[n] as usize;
                let row = n * d;
                for m in 0..d {
                    let mk = lk[m] as usize;
                    // κ(2 a ρ a† − a†a ρ − ρ a†a)
                    let mut acc = rho[row + m] * (-kappa * (nk + mk) as f64);
                    if nk + 1 < dk && mk + 1 < dk {
                        acc += rho[(n + sk) * d + m + sk] * (2.0 * kappa * sq[nk + 1] * sq[mk + 1]);
                    }
                    out[row + m] += acc;
                }
            }
        }
    }
}

/// Fixed-step RK4 propagation of ρ under the Liouvillian, re-symmetrizing
/// after every step. Requires dt ≤ 0.05/max_rate for stability of the
/// explicit scheme; fails with `TraceDrift` if normalization degrades
/// beyond 1e-6 over the run.
pub fn evolve_rho(rho0: &FockDensityMatrix, lv: &Liouvillian, t: f64, dt: f64) -> Result<FockDensityMatrix> {
    if rho0.basis() != lv.basis() {
        return Err(OpoError::InvalidParams("state and Liouvillian bases differ".into()));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(OpoError::InvalidParams(format!("time {t} must be finite and >= 0")));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(OpoError::InvalidParams(format!("dt {dt} must be finite and > 0")));
    }
    let rate = lv.max_rate();
    if rate > 0.0 {
        let bound = 0.05 / rate;
        if dt > bound * (1.0 + 1e-12) {
            return Err(OpoError::InvalidTimeStep { dt, bound });
        }
    }

    let trace0 = rho0.trace().re;
    let n = rho0.data.len();
    let mut rho = rho0.clone();
    let mut k1 = vec![Complex64::ZERO; n];
    let mut k2 = vec![Complex64::ZERO; n];
    let mut k3 = vec![Complex64::ZERO; n];
    let mut k4 = vec![Complex64::ZERO; n];
    let mut stage = vec![Complex64::ZERO; n];

    let steps = (t / dt).ceil() as usize;
    let mut remaining = t;
    for _ in 0..steps {
        let h = dt.min(remaining);
        remaining -= h;

        lv.apply(&rho.data, &mut k1);
        for i in 0..n {
            stage[i] = rho.data[i] + k1[i] * (0.5 * h);
        }
        lv.apply(&stage, &mut k2);
        for i in 0..n {
            stage[i] = rho.data[i] + k2[i] * (0.5 * h);
        }
        lv.apply(&stage, &mut k3);
        for i in 0..n {
            stage[i] = rho.data[i] + k3[i] * h;
        }
        lv.apply(&stage, &mut k4);
        let w = h / 6.0;
        for i in 0..n {
            rho.data[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
        rho.resymmetrize();
    }

    let drift = (rho.trace().re - trace0).abs();
    // Written so NaN (a blown-up integration) also lands in the error arm.
    if !(drift <= 1e-6) {
        return Err(OpoError::TraceDrift { drift, expected: trace0 });
    }
    Ok(rho)
}

/// Tolerances of the Gaussian → Fock construction.
const GAUSSIAN_PATTERN_TOL: f64 = 1e-10;
const GAUSSIAN_VERIFY_TOL: f64 = 1.5e-3;
const TRUNCATION_TRACE_FLOOR: f64 = 0.999;

/// Represent a supported Gaussian state in the truncated Fock basis.
///
/// Two shapes are supported: products of thermal/vacuum modes (diagonal
/// geometric weights), and the two-mode below-threshold equilibrium. The
/// latter is built self-consistently by evolving vacuum under the
/// oscillator Liouvillian to stationarity, then verified against the
/// requested covariance; this keeps the oracle independent of the Gaussian
/// layer's formulas.
pub fn gaussian_to_rho(s: &GaussianWignerState, basis: FockBasis) -> Result<FockDensityMatrix> {
    let nm = s.n_modes();
    if basis.n_modes() != nm {
        return Err(OpoError::InvalidParams("basis mode count must match the state".into()));
    }
    if s.mean().iter().any(|&v| v.abs() > GAUSSIAN_PATTERN_TOL) {
        return Err(OpoError::InvalidState("only zero-mean Gaussian states are representable here".into()));
    }

    let cov = s.cov();
    let scale = cov.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let off_diag_max = {
        let mut worst = 0.0f64;
        for i in 0..2 * nm {
            for j in 0..2 * nm {
                if i != j {
                    worst = worst.max(cov[(i, j)].abs());
                }
            }
        }
        worst
    };

    if off_diag_max <= GAUSSIAN_PATTERN_TOL * scale.max(1.0) {
        // Product of thermal modes.
        let mut pmfs = Vec::with_capacity(nm);
        for k in 0..nm {
            let vx = cov[(2 * k, 2 * k)];
            let vy = cov[(2 * k + 1, 2 * k + 1)];
            if (vx - vy).abs() > GAUSSIAN_PATTERN_TOL * scale.max(1.0) {
                return Err(OpoError::InvalidState(format!("mode {k} is not thermal (x/y variances differ)")));
            }
            let nbar = (4.0 * vx - 1.0) / 2.0;
            if nbar < -1e-9 {
                return Err(OpoError::InvalidState(format!("mode {k} variance below vacuum")));
            }
            pmfs.push(thermal_weights(nbar.max(0.0), basis.dims()[k]));
        }
        let rho = FockDensityMatrix::from_diagonal_product(basis, &pmfs)?;
        let tr = rho.trace().re;
        if tr < TRUNCATION_TRACE_FLOOR {
            return Err(OpoError::TruncationLeak(tr));
        }
        return Ok(rho);
    }

    if nm == 2 {
        // Below-threshold equilibrium pattern: equal variances v on all
        // four quadratures, cov(x₂,x₃) = +c, cov(y₂,y₃) = −c, rest zero.
        let v = cov[(0, 0)];
        let c = cov[(0, 2)];
        let mut expect = nalgebra::DMatrix::<f64>::zeros(4, 4);
        for i in 0..4 {
            expect[(i, i)] = v;
        }
        expect[(0, 2)] = c;
        expect[(2, 0)] = c;
        expect[(1, 3)] = -c;
        expect[(3, 1)] = -c;
        let dev = (cov - &expect).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if dev > GAUSSIAN_PATTERN_TOL * scale.max(1.0) {
            return Err(OpoError::InvalidState(
                "two-mode covariance is not the below-threshold equilibrium pattern".into(),
            ));
        }
        let r = c / v;
        if !(0.0..1.0).contains(&r) {
            return Err(OpoError::RequiresBelowThreshold(r));
        }
        let rho = opo_equilibrium_rho(r, basis)?;

        // Verify the oracle state reproduces the requested covariance.
        let (_, rho_cov) = rho.quadrature_moments()?;
        let err = (&rho_cov - cov).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if err > GAUSSIAN_VERIFY_TOL {
            return Err(OpoError::TruncationLeak(1.0 - err));
        }
        return Ok(rho);
    }

    Err(OpoError::InvalidState("unsupported Gaussian structure for Fock representation".into()))
}

/// Geometric thermal weights (N̄/(N̄+1))ⁿ/(N̄+1), truncated without
/// renormalization.
pub fn thermal_weights(nbar: f64, dim: usize) -> Vec<f64> {
    if nbar <= 0.0 {
        let mut w = vec![0.0; dim];
        w[0] = 1.0;
        return w;
    }
    let q = nbar / (1.0 + nbar);
    let mut w = Vec::with_capacity(dim);
    let mut cur = 1.0 / (1.0 + nbar);
    for _ in 0..dim {
        w.push(cur);
        cur *= q;
    }
    w
}

/// Stationary oscillator state at ratio r, grown from vacuum under the
/// two-mode Liouvillian (κ = 1, χ₂ = r) until the covariance relaxes.
fn opo_equilibrium_rho(r: f64, basis: FockBasis) -> Result<FockDensityMatrix> {
    let p = SystemParams::symmetric(0.0, r, 1.0)?;
    let lv = Liouvillian::opo_two_mode(&p, basis.clone())?;
    let rho0 = FockDensityMatrix::vacuum(basis);
    // Covariance relaxes at rate 2(κ − χ₂); aim for an e^{−18} residual.
    let horizon = 9.0 / (1.0 - r);
    let dt = lv.suggested_dt();
    evolve_rho(&rho0, &lv, horizon, dt)
}

/// Convenience: the three-mode initial condition |0⟩⟨0|₁ ⊗ ρ_eq(2,3).
pub fn initial_three_mode_rho(p: &SystemParams, basis: &FockBasis) -> Result<FockDensityMatrix> {
    if basis.n_modes() != 3 {
        return Err(OpoError::InvalidParams("three-mode basis required".into()));
    }
    let r = p.ratio();
    if !(0.0..1.0).contains(&r) {
        return Err(OpoError::AboveThreshold {
            chi2_sq: p.chi2() * p.chi2(),
            kappa_prod: p.kappa2() * p.kappa3(),
        });
    }
    let sub_basis = FockBasis::with_cap(&basis.cutoffs()[1..], basis.cap)?;
    let rho23 = if r == 0.0 {
        FockDensityMatrix::vacuum(sub_basis)
    } else {
        let eq = GaussianWignerState::opo_equilibrium(r)?;
        gaussian_to_rho(&eq, sub_basis)?
    };
    let vac1 = FockDensityMatrix::vacuum(FockBasis::with_cap(&basis.cutoffs()[..1], basis.cap)?);
    vac1.tensor(&rho23)
}
