//! Phase-space and parameter types shared by every other module: system
//! parameters, Gaussian Wigner states, standard-state constructors, moment
//! extraction, marginalization, and the linear-optics mode transforms.
//!
//! Conventions: quadratures `a = x + i y`, `[x, y] = i/2`, vacuum variance
//! 1/4 per quadrature, phase-space ordering `(x₁, y₁, x₂, y₂, …)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{OpoError, Result};

/// Couplings and cavity decay rates of the coupled parametric oscillator.
///
/// `chi1` couples the trigger mode to mode 2, `chi2` couples modes 2 and 3
/// inside the cavities; `kappa2`, `kappa3` are the amplitude decay rates of
/// the cavity modes (photon number decays at twice these rates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    chi1: f64,
    chi2: f64,
    kappa2: f64,
    kappa3: f64,
}

impl SystemParams {
    /// Validate and construct. Rejects non-finite or negative rates and
    /// non-positive decay rates. Being above threshold is *not* an error
    /// here; query [`SystemParams::above_threshold`].
    pub fn new(chi1: f64, chi2: f64, kappa2: f64, kappa3: f64) -> Result<Self> {
        for (name, v) in [("chi1", chi1), ("chi2", chi2), ("kappa2", kappa2), ("kappa3", kappa3)] {
            if !v.is_finite() {
                return Err(OpoError::InvalidParams(format!("{name} = {v} is not finite")));
            }
            if v < 0.0 {
                return Err(OpoError::InvalidParams(format!("{name} = {v} is negative")));
            }
        }
        if kappa2 <= 0.0 || kappa3 <= 0.0 {
            return Err(OpoError::InvalidParams(format!(
                "decay rates must be strictly positive (kappa2 = {kappa2}, kappa3 = {kappa3})"
            )));
        }
        Ok(Self { chi1, chi2, kappa2, kappa3 })
    }

    /// Equal-damping constructor, the configuration used throughout the
    /// small-time analysis.
    pub fn symmetric(chi1: f64, chi2: f64, kappa: f64) -> Result<Self> {
        Self::new(chi1, chi2, kappa, kappa)
    }

    /// Choose χ₂ so the below-threshold steady state holds `nbar` photons
    /// per cavity mode: χ₂² = 2N̄κ²/(2N̄ + 1).
    pub fn symmetric_with_nbar(chi1: f64, nbar: f64, kappa: f64) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(OpoError::InvalidParams(format!("nbar = {nbar} must be finite and >= 0")));
        }
        let chi2 = kappa * (2.0 * nbar / (2.0 * nbar + 1.0)).sqrt();
        Self::new(chi1, chi2, kappa, kappa)
    }

    pub fn chi1(&self) -> f64 {
        self.chi1
    }

    pub fn chi2(&self) -> f64 {
        self.chi2
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    pub fn kappa3(&self) -> f64 {
        self.kappa3
    }

    /// Threshold ratio r = χ₂/√(κ₂κ₃); r < 1 below threshold.
    pub fn ratio(&self) -> f64 {
        self.chi2 / (self.kappa2 * self.kappa3).sqrt()
    }

    /// True when χ₂² > κ₂κ₃ (the oscillator alone is unstable).
    pub fn above_threshold(&self) -> bool {
        self.chi2 * self.chi2 > self.kappa2 * self.kappa3
    }

    /// Steady-state mean photon number N̄ = χ₂²/(2(κ₂κ₃ − χ₂²)) of each
    /// cavity mode below threshold.
    pub fn steady_nbar(&self) -> Result<f64> {
        let kp = self.kappa2 * self.kappa3;
        let c2 = self.chi2 * self.chi2;
        if c2 >= kp {
            return Err(OpoError::AboveThreshold { chi2_sq: c2, kappa_prod: kp });
        }
        Ok(c2 / (2.0 * (kp - c2)))
    }
}

/// Propagation direction of one of the six optical modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    K1,
    K2,
    K3,
}

/// Polarization label. `E`/`O` are the crystal output basis; `Plus45`/
/// `Minus45` exist after the 45° rotation and `DPlus`/`DMinus` after the
/// d± beam-splitter combination of the two +45° cavity modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    E,
    O,
    Plus45,
    Minus45,
    DPlus,
    DMinus,
}

/// Label for one optical mode: direction and polarization basis element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeLabel {
    pub direction: Direction,
    pub polarization: Polarization,
}

impl std::fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let d = match self.direction {
            Direction::K1 => "1",
            Direction::K2 => "2",
            Direction::K3 => "3",
        };
        let p = match self.polarization {
            Polarization::E => "e",
            Polarization::O => "o",
            Polarization::Plus45 => "+45",
            Polarization::Minus45 => "-45",
            Polarization::DPlus => "d+",
            Polarization::DMinus => "d-",
        };
        write!(f, "{d}{p}")
    }
}

/// Normalized amplitudes (α, β) of the state α|0⟩ + β|1⟩ onto which the
/// second conditional measurement projects the d₋ mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexAmplitudePair {
    alpha: Complex64,
    beta: Complex64,
}

impl ComplexAmplitudePair {
    /// Requires |α|² + |β|² = 1 within 1e-12.
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(OpoError::InvalidParams(format!(
                "|alpha|^2 + |beta|^2 = {norm} is not 1"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Rescale an arbitrary non-zero pair to unit norm.
    pub fn normalized(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(OpoError::InvalidParams("(alpha, beta) must be non-zero and finite".into()));
        }
        Ok(Self { alpha: alpha / norm, beta: beta / norm })
    }

    /// Projection onto |0⟩ (α = 1, β = 0).
    pub fn vacuum_projection() -> Self {
        Self { alpha: Complex64::new(1.0, 0.0), beta: Complex64::new(0.0, 0.0) }
    }

    /// Projection onto |1⟩ (α = 0, β = 1).
    pub fn one_photon_projection() -> Self {
        Self { alpha: Complex64::new(0.0, 0.0), beta: Complex64::new(1.0, 0.0) }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }
}

/// Tolerances of the Gaussian-state validity checks.
const SYMMETRY_REL_TOL: f64 = 1e-12;
const SYMPLECTIC_EIG_SLACK: f64 = 1e-9;
const TRANSFORM_TOL: f64 = 1e-10;

/// Mean vector and covariance matrix of a multimode Gaussian Wigner
/// function, ordering `(x₁, y₁, x₂, y₂, …)`. Vacuum is mean 0, cov I/4.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWignerState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianWignerState {
    /// Validates symmetry (1e-12 relative) and the uncertainty bound: every
    /// symplectic eigenvalue of the covariance must be ≥ 1/4 − 1e-9.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(OpoError::InvalidState(format!("phase-space dimension {dim} must be even and non-zero")));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(OpoError::InvalidState(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().any(|x| !x.is_finite()) || cov.iter().any(|x| !x.is_finite()) {
            return Err(OpoError::InvalidState("non-finite entry".into()));
        }
        let scale = cov.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(0.25);
        let asym = (&cov - cov.transpose()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if asym > SYMMETRY_REL_TOL * scale {
            return Err(OpoError::InvalidState(format!("covariance asymmetry {asym} exceeds tolerance")));
        }
        let state = Self { mean, cov };
        let nu_min = state.symplectic_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if nu_min < 0.25 - SYMPLECTIC_EIG_SLACK {
            return Err(OpoError::InvalidState(format!(
                "minimal symplectic eigenvalue {nu_min} violates the uncertainty bound 1/4"
            )));
        }
        Ok(state)
    }

    /// n-mode vacuum: mean 0, cov I/4 (Wigner (2/π)ⁿ exp(−2|z|²)).
    pub fn vacuum(n_modes: usize) -> Self {
        assert!(n_modes > 0, "vacuum requires at least one mode");
        Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.25,
        }
    }

    /// Product of identical thermal modes, variance (2N̄+1)/4 per quadrature.
    pub fn thermal(nbar: f64, n_modes: usize) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(OpoError::InvalidParams(format!("nbar = {nbar} must be finite and >= 0")));
        }
        assert!(n_modes > 0, "thermal requires at least one mode");
        let v = (2.0 * nbar + 1.0) * 0.25;
        Ok(Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * v,
        })
    }

    /// Two-mode equilibrium of the oscillator below threshold at ratio
    /// r = χ₂/κ, ordered (mode 2, mode 3): variance 1/(4(1−r²)) per
    /// quadrature, x₂x₃ covariance +r/(4(1−r²)), y₂y₃ covariance
    /// −r/(4(1−r²)). This is the inverse of the quadratic form with x-sector
    /// coupling −r and y-sector coupling +r.
    pub fn opo_equilibrium(r: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(OpoError::RequiresBelowThreshold(r));
        }
        let v = 1.0 / (4.0 * (1.0 - r * r));
        let c = r * v;
        let mut cov = DMatrix::zeros(4, 4);
        cov[(0, 0)] = v;
        cov[(1, 1)] = v;
        cov[(2, 2)] = v;
        cov[(3, 3)] = v;
        cov[(0, 2)] = c;
        cov[(2, 0)] = c;
        cov[(1, 3)] = -c;
        cov[(3, 1)] = -c;
        Ok(Self { mean: DVector::zeros(4), cov })
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Symplectic eigenvalues: moduli of the eigenvalues of JΣ, one per
    /// mode, where J is the block-diagonal symplectic form for the
    /// (x, y)-interleaved ordering.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let n = self.n_modes();
        let dim = 2 * n;
        let mut j = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..n {
            j[(2 * k, 2 * k + 1)] = 1.0;
            j[(2 * k + 1, 2 * k)] = -1.0;
        }
        let js = j * &self.cov;
        let eigs = js.complex_eigenvalues();
        // Eigenvalues come in ±iν pairs; collect the n largest moduli-dedup.
        let mut mods: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Pairs are adjacent after sorting; take one of each.
        (0..n).map(|k| 0.5 * (mods[2 * k] + mods[2 * k + 1])).collect()
    }

    /// Purity Tr ρ² = (1/4)ⁿ / √(det Σ).
    pub fn purity(&self) -> Result<f64> {
        let det = self.cov.determinant();
        if det <= 0.0 {
            return Err(OpoError::SingularCovariance(det));
        }
        Ok(0.25f64.powi(self.n_modes() as i32) / det.sqrt())
    }

    /// Mean photon number of one mode: ⟨x²⟩ + ⟨y²⟩ − 1/2 with the mean's
    /// contribution included.
    pub fn mean_photon_number(&self, mode: usize) -> f64 {
        assert!(mode < self.n_modes(), "mode index out of range");
        let ix = 2 * mode;
        let iy = 2 * mode + 1;
        self.cov[(ix, ix)] + self.cov[(iy, iy)] + self.mean[ix] * self.mean[ix] + self.mean[iy] * self.mean[iy] - 0.5
    }

    /// Total mean photon number over all modes.
    pub fn total_photon_number(&self) -> f64 {
        (0..self.n_modes()).map(|m| self.mean_photon_number(m)).sum()
    }

    /// Keep the listed modes (in the order given), integrating the rest out:
    /// sub-block extraction of mean and covariance.
    pub fn marginalize(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(OpoError::InvalidParams("marginalize requires a non-empty mode set".into()));
        }
        for &m in keep {
            if m >= self.n_modes() {
                return Err(OpoError::InvalidParams(format!("mode {m} out of range")));
            }
        }
        let dim = 2 * keep.len();
        let mut mean = DVector::zeros(dim);
        let mut cov = DMatrix::zeros(dim, dim);
        for (a, &ma) in keep.iter().enumerate() {
            for q in 0..2 {
                mean[2 * a + q] = self.mean[2 * ma + q];
            }
            for (b, &mb) in keep.iter().enumerate() {
                for qa in 0..2 {
                    for qb in 0..2 {
                        cov[(2 * a + qa, 2 * b + qb)] = self.cov[(2 * ma + qa, 2 * mb + qb)];
                    }
                }
            }
        }
        Self::new(mean, cov)
    }

    /// Direct sum with another state (this state's modes first).
    pub fn direct_sum(&self, other: &Self) -> Self {
        let d1 = self.mean.len();
        let d2 = other.mean.len();
        let mut mean = DVector::zeros(d1 + d2);
        let mut cov = DMatrix::zeros(d1 + d2, d1 + d2);
        mean.rows_mut(0, d1).copy_from(&self.mean);
        mean.rows_mut(d1, d2).copy_from(&other.mean);
        cov.view_mut((0, 0), (d1, d1)).copy_from(&self.cov);
        cov.view_mut((d1, d1), (d2, d2)).copy_from(&other.cov);
        Self { mean, cov }
    }

    /// Apply a linear-optics transform: mean → T·mean, cov → T·cov·Tᵀ.
    pub fn apply_mode_transform(&self, t: &ModeTransform) -> Result<Self> {
        let matrix = t.matrix(self.n_modes())?;
        let mean = &matrix * &self.mean;
        let cov = &matrix * &self.cov * matrix.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        Self::new(mean, cov)
    }
}

/// Linear-optics mode transforms in phase space.
#[derive(Debug, Clone)]
pub enum ModeTransform {
    /// 45° polarization rotation of the pair (e, o):
    /// a₊₄₅ = (a_e + a_o)/√2 lands on `mode_e`'s slot, a₋₄₅ = (a_e − a_o)/√2
    /// on `mode_o`'s slot.
    Rot45 { mode_e: usize, mode_o: usize },
    /// d± combination of two +45° modes: d₊ = (a + b)/√2 on `mode_a`'s
    /// slot, d₋ = (a − b)/√2 on `mode_b`'s slot. Same phase-space matrix as
    /// [`ModeTransform::Rot45`]; the distinction is which physical basis the
    /// slots then carry.
    Dpm { mode_a: usize, mode_b: usize },
    /// Phase shift a → e^{iφ} a on one mode.
    Phase { mode: usize, angle: f64 },
    /// Arbitrary orthogonal symplectic matrix on the full phase space.
    Orthogonal(DMatrix<f64>),
}

impl ModeTransform {
    /// The 2n×2n phase-space matrix. Checks orthogonality and the
    /// symplectic condition within 1e-10 for the general variant.
    pub fn matrix(&self, n_modes: usize) -> Result<DMatrix<f64>> {
        let dim = 2 * n_modes;
        match self {
            ModeTransform::Rot45 { mode_e: a, mode_o: b } | ModeTransform::Dpm { mode_a: a, mode_b: b } => {
                let (a, b) = (*a, *b);
                if a >= n_modes || b >= n_modes || a == b {
                    return Err(OpoError::InvalidParams(format!(
                        "mode pair ({a}, {b}) invalid for {n_modes} modes"
                    )));
                }
                let mut m = DMatrix::identity(dim, dim);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                for q in 0..2 {
                    let (ia, ib) = (2 * a + q, 2 * b + q);
                    m[(ia, ia)] = s;
                    m[(ia, ib)] = s;
                    m[(ib, ia)] = s;
                    m[(ib, ib)] = -s;
                }
                Ok(m)
            }
            ModeTransform::Phase { mode, angle } => {
                if *mode >= n_modes {
                    return Err(OpoError::InvalidParams(format!("mode {mode} out of range")));
                }
                let mut m = DMatrix::identity(dim, dim);
                let (ix, iy) = (2 * mode, 2 * mode + 1);
                let (sin, cos) = angle.sin_cos();
                m[(ix, ix)] = cos;
                m[(ix, iy)] = -sin;
                m[(iy, ix)] = sin;
                m[(iy, iy)] = cos;
                Ok(m)
            }
            ModeTransform::Orthogonal(m) => {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(OpoError::InvalidParams(format!(
                        "transform is {}x{}, state needs {dim}x{dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                let ortho_dev = (m.transpose() * m - DMatrix::identity(dim, dim))
                    .iter()
                    .fold(0.0f64, |acc, x| acc.max(x.abs()));
                let mut j = DMatrix::<f64>::zeros(dim, dim);
                for k in 0..n_modes {
                    j[(2 * k, 2 * k + 1)] = 1.0;
                    j[(2 * k + 1, 2 * k)] = -1.0;
                }
                let symp_dev = (m * &j * m.transpose() - &j).iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
                let dev = ortho_dev.max(symp_dev);
                if dev > TRANSFORM_TOL {
                    return Err(OpoError::NonSymplectic(dev));
                }
                Ok(m.clone())
            }
        }
    }
}

/// Wigner function of the form (quadratic polynomial in z) × Gaussian:
/// W(z) = (zᵀ P z + qᵀ z + c) · G(z) with G the normalized Gaussian Wigner
/// of `gaussian`. This is the shape of the conditioned d₊ states.
#[derive(Debug, Clone)]
pub struct QuadraticWignerForm {
    pub gaussian: GaussianWignerState,
    pub poly_quadratic: DMatrix<f64>,
    pub poly_linear: DVector<f64>,
    pub poly_const: f64,
}

impl QuadraticWignerForm {
    pub fn new(
        gaussian: GaussianWignerState,
        poly_quadratic: DMatrix<f64>,
        poly_linear: DVector<f64>,
        poly_const: f64,
    ) -> Result<Self> {
        let dim = gaussian.mean().len();
        if poly_quadratic.nrows() != dim || poly_quadratic.ncols() != dim || poly_linear.len() != dim {
            return Err(OpoError::InvalidState("polynomial dimensions do not match the Gaussian".into()));
        }
        let asym = (&poly_quadratic - poly_quadratic.transpose())
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        if asym > 1e-12 {
            return Err(OpoError::InvalidState(format!("polynomial matrix asymmetry {asym}")));
        }
        Ok(Self { gaussian, poly_quadratic, poly_linear, poly_const })
    }

    /// Density of the normalized Gaussian factor at z.
    fn gaussian_density(&self, z: &DVector<f64>) -> f64 {
        let n = self.gaussian.n_modes();
        let dz = z - self.gaussian.mean();
        let inv = self
            .gaussian
            .cov()
            .clone()
            .cholesky()
            .expect("valid Gaussian covariance is positive definite");
        let quad = dz.dot(&inv.solve(&dz));
        let det = self.gaussian.cov().determinant();
        (2.0 * std::f64::consts::PI).powi(-(n as i32)) / det.sqrt() * (-0.5 * quad).exp()
    }

    /// Evaluate W(z).
    pub fn evaluate(&self, z: &DVector<f64>) -> f64 {
        let poly = z.dot(&(&self.poly_quadratic * z)) + self.poly_linear.dot(z) + self.poly_const;
        poly * self.gaussian_density(z)
    }

    /// The exact integral ∫ W dz = tr(PΣ) + μᵀPμ + qᵀμ + c.
    pub fn integral(&self) -> f64 {
        let mu = self.gaussian.mean();
        let sigma = self.gaussian.cov();
        let tr = (&self.poly_quadratic * sigma).trace();
        tr + mu.dot(&(&self.poly_quadratic * mu)) + self.poly_linear.dot(mu) + self.poly_const
    }

    /// Rescale the polynomial so the form integrates to 1.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.integral();
        if total == 0.0 || !total.is_finite() {
            return Err(OpoError::InvalidState(format!("form integrates to {total}")));
        }
        Ok(Self {
            gaussian: self.gaussian.clone(),
            poly_quadratic: &self.poly_quadratic / total,
            poly_linear: &self.poly_linear / total,
            poly_const: self.poly_const / total,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn params_all_couplings_off_is_valid() {
        let p = SystemParams::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(p.ratio(), 0.0);
        assert!(!p.above_threshold());
    }

    #[test]
    fn params_from_nbar_half_gives_ratio_inv_sqrt2() {
        // κ²/χ₂² = 1 + 1/(2N̄) with N̄ = 1/2 gives κ = √2 χ₂.
        let chi2 = 6e8;
        let kappa = chi2 * (1.0f64 + 1.0 / (2.0 * 0.5)).sqrt();
        let p = SystemParams::symmetric(0.0, chi2, kappa).unwrap();
        assert_relative_eq!(p.ratio(), SQRT_HALF, max_relative = 1e-14);
        // And the nbar-driven constructor inverts back.
        let q = SystemParams::symmetric_with_nbar(0.0, 0.5, kappa).unwrap();
        assert_relative_eq!(q.chi2(), chi2, max_relative = 1e-12);
    }

    #[test]
    fn params_above_threshold_is_flag_not_error() {
        let p = SystemParams::new(0.0, 1.2, 1.0, 1.0).unwrap();
        assert!(p.above_threshold());
        assert!(matches!(p.steady_nbar(), Err(OpoError::AboveThreshold { .. })));
    }

    #[test]
    fn params_reject_negative_and_nan() {
        assert!(SystemParams::new(-0.1, 0.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(0.0, f64::NAN, 1.0, 1.0).is_err());
        assert!(SystemParams::new(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn vacuum_covariance_is_quarter_identity() {
        let v = GaussianWignerState::vacuum(1);
        assert_relative_eq!(v.cov()[(0, 0)], 0.25);
        assert_relative_eq!(v.cov()[(1, 1)], 0.25);
        assert_abs_diff_eq!(v.cov()[(0, 1)], 0.0);
        assert_relative_eq!(v.purity().unwrap(), 1.0, max_relative = 1e-14);
        assert_abs_diff_eq!(v.mean_photon_number(0), 0.0);
    }

    #[test]
    fn thermal_half_has_variance_half_and_purity_half() {
        let t = GaussianWignerState::thermal(0.5, 1).unwrap();
        assert_relative_eq!(t.cov()[(0, 0)], 0.5);
        assert_relative_eq!(t.purity().unwrap(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(t.mean_photon_number(0), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn opo_equilibrium_moments_and_purity() {
        let r = SQRT_HALF;
        let s = GaussianWignerState::opo_equilibrium(r).unwrap();
        // ⟨a₂a₃⟩ = ⟨x₂x₃⟩ − ⟨y₂y₃⟩ = 2·r/(4(1−r²)) = r/(2(1−r²)) = 1/√2 at r = 1/√2.
        let a2a3 = s.cov()[(0, 2)] - s.cov()[(1, 3)];
        assert_relative_eq!(a2a3, SQRT_HALF, max_relative = 1e-12);
        // N̄ = r²/(2(1−r²)) = 0.5.
        assert_relative_eq!(s.mean_photon_number(0), 0.5, max_relative = 1e-12);
        assert_relative_eq!(s.mean_photon_number(1), 0.5, max_relative = 1e-12);
        // Purity 1 − r².
        assert_relative_eq!(s.purity().unwrap(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn opo_purity_identity_across_ratios() {
        for r in [0.0, 0.3, SQRT_HALF, 0.95] {
            let s = GaussianWignerState::opo_equilibrium(r).unwrap();
            assert_abs_diff_eq!(s.purity().unwrap() + r * r, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn opo_equilibrium_rejects_at_threshold() {
        assert!(matches!(
            GaussianWignerState::opo_equilibrium(1.0),
            Err(OpoError::RequiresBelowThreshold(_))
        ));
    }

    #[test]
    fn marginal_of_opo_is_thermal() {
        let r = 0.6f64;
        let s = GaussianWignerState::opo_equilibrium(r).unwrap();
        let nbar = r * r / (2.0 * (1.0 - r * r));
        for mode in [0usize, 1] {
            let m = s.marginalize(&[mode]).unwrap();
            let expect = GaussianWignerState::thermal(nbar, 1).unwrap();
            assert_relative_eq!(m.cov(), expect.cov(), max_relative = 1e-12);
        }
    }

    #[test]
    fn marginalize_all_modes_is_identity() {
        let s = GaussianWignerState::opo_equilibrium(0.4).unwrap();
        let m = s.marginalize(&[0, 1]).unwrap();
        assert_eq!(m.cov(), s.cov());
        assert_eq!(m.mean(), s.mean());
    }

    #[test]
    fn marginalize_vacuum_three_modes() {
        let v = GaussianWignerState::vacuum(3);
        let m = v.marginalize(&[1]).unwrap();
        assert_eq!(m.n_modes(), 1);
        assert_relative_eq!(m.cov(), GaussianWignerState::vacuum(1).cov(), max_relative = 1e-15);
    }

    #[test]
    fn rot45_on_vacuum_is_vacuum() {
        let v = GaussianWignerState::vacuum(2);
        let t = ModeTransform::Rot45 { mode_e: 0, mode_o: 1 };
        let w = v.apply_mode_transform(&t).unwrap();
        assert_relative_eq!(w.cov(), v.cov(), epsilon = 1e-14);
    }

    #[test]
    fn balanced_mix_is_involution() {
        let s = GaussianWignerState::opo_equilibrium(0.7).unwrap();
        let t = ModeTransform::Dpm { mode_a: 0, mode_b: 1 };
        let twice = s.apply_mode_transform(&t).unwrap().apply_mode_transform(&t).unwrap();
        assert_relative_eq!(twice.cov(), s.cov(), epsilon = 1e-13);
    }

    #[test]
    fn dpm_diagonalizes_opo_equilibrium() {
        // d± of the equilibrium: product of single-mode squeezed thermal
        // states, x variances (1/4)/(1∓r), y variances (1/4)/(1±r).
        let r = 0.6;
        let s = GaussianWignerState::opo_equilibrium(r).unwrap();
        let d = s.apply_mode_transform(&ModeTransform::Dpm { mode_a: 0, mode_b: 1 }).unwrap();
        let c = d.cov();
        assert_relative_eq!(c[(0, 0)], 0.25 / (1.0 - r), max_relative = 1e-12); // x_{d+}
        assert_relative_eq!(c[(1, 1)], 0.25 / (1.0 + r), max_relative = 1e-12); // y_{d+}
        assert_relative_eq!(c[(2, 2)], 0.25 / (1.0 + r), max_relative = 1e-12); // x_{d-}
        assert_relative_eq!(c[(3, 3)], 0.25 / (1.0 - r), max_relative = 1e-12); // y_{d-}
        // Off-diagonal blocks vanish: the two d modes factorize.
        assert_abs_diff_eq!(c[(0, 2)], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(c[(1, 3)], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn phase_transform_preserves_photon_number() {
        let s = GaussianWignerState::thermal(0.8, 1).unwrap();
        let p = s.apply_mode_transform(&ModeTransform::Phase { mode: 0, angle: 1.1 }).unwrap();
        assert_relative_eq!(p.mean_photon_number(0), 0.8, max_relative = 1e-12);
    }

    #[test]
    fn non_symplectic_orthogonal_is_rejected() {
        // x↔y swap on one mode is orthogonal but anti-symplectic.
        let mut m = DMatrix::<f64>::identity(2, 2);
        m[(0, 0)] = 0.0;
        m[(1, 1)] = 0.0;
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        let s = GaussianWignerState::vacuum(1);
        let res = s.apply_mode_transform(&ModeTransform::Orthogonal(m));
        assert!(matches!(res, Err(OpoError::NonSymplectic(_))));
    }

    #[test]
    fn symplectic_eigenvalues_of_vacuum_and_thermal() {
        let v = GaussianWignerState::vacuum(2);
        for nu in v.symplectic_eigenvalues() {
            assert_relative_eq!(nu, 0.25, max_relative = 1e-12);
        }
        let t = GaussianWignerState::thermal(1.0, 1).unwrap();
        assert_relative_eq!(t.symplectic_eigenvalues()[0], 0.75, max_relative = 1e-12);
    }

    #[test]
    fn invalid_covariance_below_vacuum_is_rejected() {
        let mean = DVector::zeros(2);
        let cov = DMatrix::identity(2, 2) * 0.2; // below vacuum noise
        assert!(GaussianWignerState::new(mean, cov).is_err());
    }

    #[test]
    fn quadratic_form_integral_and_normalization() {
        // (4x² + 4y²) × vacuum Gaussian: photon-added-like form,
        // exact integral = tr(PΣ) = 4·(1/4)·2·... = 2·4·0.25 = 2.
        let g = GaussianWignerState::vacuum(1);
        let p = DMatrix::identity(2, 2) * 4.0;
        let form = QuadraticWignerForm::new(g, p, DVector::zeros(2), 0.0).unwrap();
        assert_relative_eq!(form.integral(), 2.0, max_relative = 1e-13);
        let normed = form.normalized().unwrap();
        assert_relative_eq!(normed.integral(), 1.0, max_relative = 1e-13);

        // Quadrature cross-check of the normalized integral on a grid.
        let mut total = 0.0;
        let n = 201;
        let h = 12.0 / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                let x = -6.0 + i as f64 * h;
                let y = -6.0 + j as f64 * h;
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 } * if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                total += w * normed.evaluate(&nalgebra::dvector![x, y]);
            }
        }
        total *= h * h;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn standard_states_are_bit_deterministic() {
        let a = GaussianWignerState::opo_equilibrium(0.7).unwrap();
        let b = GaussianWignerState::opo_equilibrium(0.7).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            GaussianWignerState::thermal(0.37, 2).unwrap(),
            GaussianWignerState::thermal(0.37, 2).unwrap()
        );
    }

    #[test]
    fn complex_amplitude_pair_normalization() {
        let a = Complex64::new(3.0, 0.0);
        let b = Complex64::new(0.0, 4.0);
        let p = ComplexAmplitudePair::normalized(a, b).unwrap();
        assert_relative_eq!(p.alpha().norm_sqr() + p.beta().norm_sqr(), 1.0, max_relative = 1e-14);
        assert!(ComplexAmplitudePair::new(a, b).is_err());
    }

    #[test]
    fn mode_label_display() {
        let l = ModeLabel { direction: Direction::K2, polarization: Polarization::Plus45 };
        assert_eq!(l.to_string(), "2+45");
    }
}
