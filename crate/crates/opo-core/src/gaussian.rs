//! Gaussian Wigner dynamics of the coupled oscillator: drift/diffusion
//! matrices of the Fokker–Planck equation, matrix propagators, noise
//! covariances, time evolution, steady states, and stability/threshold
//! diagnostics.
//!
//! The three-mode problem lives in the 6-dimensional phase space
//! `(x₁, y₁, x₂, y₂, x₃, y₃)`; with the trigger crystal off the oscillator
//! decouples to the 4-dimensional `(x₂, y₂, x₃, y₃)` problem.

use nalgebra::{Complex, DMatrix};

use crate::linalg::{expm, lyapunov_ode, solve_lyapunov};
use crate::phase_space::{GaussianWignerState, SystemParams};
use crate::{OpoError, Result};

/// Which phase-space configuration the drift acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftConfig {
    /// All three modes, 6-dimensional phase space.
    Full6,
    /// Modes 2 and 3 only (trigger crystal off), 4-dimensional.
    Opo4,
}

/// Drift matrix γ and diagonal diffusion matrix D of the Fokker–Planck
/// equation ∂W/∂t = γᵢⱼ ∂ᵢ(zⱼW) + Dᵢⱼ ∂ᵢ∂ⱼW.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiffusion {
    pub gamma: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
}

impl DriftDiffusion {
    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    /// Block direct sum; used for joint evolution of decoupled groups.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (d1, d2) = (self.dim(), other.dim());
        let mut gamma = DMatrix::zeros(d1 + d2, d1 + d2);
        let mut diffusion = DMatrix::zeros(d1 + d2, d1 + d2);
        gamma.view_mut((0, 0), (d1, d1)).copy_from(&self.gamma);
        gamma.view_mut((d1, d1), (d2, d2)).copy_from(&other.gamma);
        diffusion.view_mut((0, 0), (d1, d1)).copy_from(&self.diffusion);
        diffusion.view_mut((d1, d1), (d2, d2)).copy_from(&other.diffusion);
        Self { gamma, diffusion }
    }
}

/// Drift eigenvalues and threshold diagnostics.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Spectrum of γ including multiplicities (6 values for Full6, 4 for
    /// Opo4; every eigenvalue is doubly degenerate by the x/y symmetry).
    pub eigenvalues: Vec<Complex<f64>>,
    /// All real parts > −1e-12.
    pub stable: bool,
    /// κ₂κ₃ − χ₂², positive below the oscillator threshold.
    pub threshold_margin: f64,
}

/// Build γ and D for the chosen configuration.
///
/// Full6 layout (rows/cols x₁,y₁,x₂,y₂,x₃,y₃):
///
/// ```text
///      ⎛  0    0  −χ₁   0    0    0 ⎞
///      ⎜  0    0    0   χ₁   0    0 ⎟
///  γ = ⎜ −χ₁   0   κ₂   0  −χ₂   0 ⎟      D = diag(0, 0, κ₂/4, κ₂/4, κ₃/4, κ₃/4)
///      ⎜  0   χ₁   0   κ₂   0   χ₂ ⎟
///      ⎜  0    0  −χ₂   0   κ₃   0 ⎟
///      ⎝  0    0    0   χ₂   0   κ₃ ⎠
/// ```
///
/// Opo4 drops mode 1 (and χ₁) and sets D = diag(κ₂/4, κ₂/4, κ₃/4, κ₃/4).
pub fn build_drift_diffusion(p: &SystemParams, config: DriftConfig) -> DriftDiffusion {
    let (chi1, chi2, k2, k3) = (p.chi1(), p.chi2(), p.kappa2(), p.kappa3());
    match config {
        DriftConfig::Full6 => {
            let mut g = DMatrix::zeros(6, 6);
            g[(0, 2)] = -chi1;
            g[(2, 0)] = -chi1;
            g[(1, 3)] = chi1;
            g[(3, 1)] = chi1;
            g[(2, 2)] = k2;
            g[(3, 3)] = k2;
            g[(2, 4)] = -chi2;
            g[(4, 2)] = -chi2;
            g[(3, 5)] = chi2;
            g[(5, 3)] = chi2;
            g[(4, 4)] = k3;
            g[(5, 5)] = k3;
            let d = DMatrix::from_diagonal(&nalgebra::dvector![
                0.0,
                0.0,
                k2 / 4.0,
                k2 / 4.0,
                k3 / 4.0,
                k3 / 4.0
            ]);
            DriftDiffusion { gamma: g, diffusion: d }
        }
        DriftConfig::Opo4 => {
            let mut g = DMatrix::zeros(4, 4);
            g[(0, 0)] = k2;
            g[(1, 1)] = k2;
            g[(0, 2)] = -chi2;
            g[(2, 0)] = -chi2;
            g[(1, 3)] = chi2;
            g[(3, 1)] = chi2;
            g[(2, 2)] = k3;
            g[(3, 3)] = k3;
            let d = DMatrix::from_diagonal(&nalgebra::dvector![k2 / 4.0, k2 / 4.0, k3 / 4.0, k3 / 4.0]);
            DriftDiffusion { gamma: g, diffusion: d }
        }
    }
}

/// Propagator G(t) = exp(−γt) by scaling-and-squaring.
pub fn propagator(dd: &DriftDiffusion, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(OpoError::InvalidParams(format!("time {t} must be finite and >= 0")));
    }
    Ok(expm(&(-&dd.gamma * t)))
}

/// Evolution horizon: a finite time or the stationary limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvolutionTime {
    Finite(f64),
    SteadyState,
}

/// Accumulated noise covariance σ(t) = 2∫₀ᵗ G(τ) D Gᵀ(τ) dτ, computed by
/// integrating σ' = 2D − γσ − σγᵀ with embedded error control (absolute
/// tolerance 1e-12). The stationary sentinel solves the Lyapunov equation
/// directly and requires a stable drift.
pub fn noise_covariance(dd: &DriftDiffusion, t: EvolutionTime) -> Result<DMatrix<f64>> {
    match t {
        EvolutionTime::Finite(t) => {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(OpoError::InvalidParams(format!("time {t} must be finite and >= 0")));
            }
            Ok(lyapunov_ode(&dd.gamma, &dd.diffusion, t, 1e-12))
        }
        EvolutionTime::SteadyState => {
            let min_re = drift_eigenvalues(dd).into_iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            if min_re <= 0.0 {
                return Err(OpoError::UnstableAtInfinity(min_re));
            }
            solve_lyapunov(&dd.gamma, &(&dd.diffusion * 2.0))
        }
    }
}

/// Evolve a Gaussian state under the given drift/diffusion:
/// mean → G(t)·mean, cov → G(t)·cov·Gᵀ(t) + σ(t).
pub fn evolve_with(s0: &GaussianWignerState, dd: &DriftDiffusion, t: f64) -> Result<GaussianWignerState> {
    if s0.mean().len() != dd.dim() {
        return Err(OpoError::InvalidParams(format!(
            "state dimension {} does not match drift dimension {}",
            s0.mean().len(),
            dd.dim()
        )));
    }
    let g = propagator(dd, t)?;
    let sigma = noise_covariance(dd, EvolutionTime::Finite(t))?;
    let mean = &g * s0.mean();
    let cov = &g * s0.cov() * g.transpose() + sigma;
    let cov = (&cov + cov.transpose()) * 0.5;
    GaussianWignerState::new(mean, cov)
}

/// Evolve, choosing Full6 or Opo4 from the state dimension. Above-threshold
/// parameters are fine here for finite times; only the steady state refuses
/// them.
pub fn evolve(s0: &GaussianWignerState, p: &SystemParams, t: f64) -> Result<GaussianWignerState> {
    let config = match s0.n_modes() {
        3 => DriftConfig::Full6,
        2 => DriftConfig::Opo4,
        n => {
            return Err(OpoError::InvalidParams(format!(
                "evolve expects a 2- or 3-mode state, got {n} modes"
            )))
        }
    };
    evolve_with(s0, &build_drift_diffusion(p, config), t)
}

/// Below-threshold equilibrium of the oscillator (χ₁ = 0 configuration):
/// the stationary covariance σ(∞) on modes 2 and 3 plus the per-mode mean
/// photon number N̄. For κ₂ = κ₃ = κ this is χ₂²/(2(κ² − χ₂²)).
pub fn steady_state(p: &SystemParams) -> Result<(GaussianWignerState, f64)> {
    let kp = p.kappa2() * p.kappa3();
    let c2 = p.chi2() * p.chi2();
    if c2 >= kp {
        return Err(OpoError::AboveThreshold { chi2_sq: c2, kappa_prod: kp });
    }
    let dd = build_drift_diffusion(p, DriftConfig::Opo4);
    let sigma = noise_covariance(&dd, EvolutionTime::SteadyState)?;
    let state = GaussianWignerState::new(nalgebra::DVector::zeros(4), sigma)?;
    let nbar = state.mean_photon_number(0);
    Ok((state, nbar))
}

/// Eigenvalues of γ including the double degeneracy.
///
/// The drift never mixes x- and y-quadratures, so it splits into two
/// half-size blocks that are similar to each other (conjugation by an
/// alternating sign matrix flips the coupling signs). Each block eigenvalue
/// therefore appears twice in γ; computing the spectrum block-wise keeps
/// the degenerate pairs exact.
pub fn drift_eigenvalues(dd: &DriftDiffusion) -> Vec<Complex<f64>> {
    let n = dd.dim() / 2;
    let mut block = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            block[(i, j)] = dd.gamma[(2 * i, 2 * j)];
        }
    }
    let eigs = block.complex_eigenvalues();
    let mut out = Vec::with_capacity(2 * n);
    for e in eigs.iter() {
        out.push(*e);
        out.push(*e);
    }
    out.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    out
}

/// Stability diagnostics for the given configuration.
///
/// Opo4 eigenvalues are (κ₂+κ₃)/2 ± √(((κ₂−κ₃)/2)² + χ₂²), doubly
/// degenerate; the oscillator is stable iff χ₂² ≤ κ₂κ₃. With the trigger
/// crystal on (χ₁ ≠ 0), the distinct eigenvalues obey a cubic whose root
/// product is −κ₃χ₁², so at least one has negative real part and the full
/// system is always unstable.
pub fn stability(p: &SystemParams, config: DriftConfig) -> StabilityReport {
    let dd = build_drift_diffusion(p, config);
    let eigenvalues = drift_eigenvalues(&dd);
    let min_re = eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    StabilityReport {
        eigenvalues,
        stable: min_re > -1e-12,
        threshold_margin: p.kappa2() * p.kappa3() - p.chi2() * p.chi2(),
    }
}

/// Coefficients (a, b, c) of the distinct-eigenvalue cubic
/// λ³ + aλ² + bλ + c of the full 6-dimensional drift; the root product is
/// −c = −κ₃χ₁².
pub fn full6_cubic_coefficients(p: &SystemParams) -> (f64, f64, f64) {
    (
        -(p.kappa2() + p.kappa3()),
        p.kappa2() * p.kappa3() - p.chi1() * p.chi1() - p.chi2() * p.chi2(),
        p.kappa3() * p.chi1() * p.chi1(),
    )
}
