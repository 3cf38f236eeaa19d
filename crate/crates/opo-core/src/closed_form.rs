//! Closed-form results: the small-interaction-time block structure, the
//! shifted-thermal photon distribution, fringe/coherence formulas, the
//! conditioned d₊ Wigner function and its four-mode parent, the
//! parametric-amplifier reference state, and experimental parameter scales.
//!
//! These are the analytic half of every oracle-versus-formula comparison in
//! the crate; the Fock layer supplies the numerical half.

use num_complex::Complex64;

use crate::phase_space::{ComplexAmplitudePair, GaussianWignerState, QuadraticWignerForm};
use crate::{OpoError, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Threshold ratio r from the steady-state photon number: r² = 2N̄/(2N̄+1).
pub fn ratio_from_nbar(nbar: f64) -> f64 {
    (2.0 * nbar / (2.0 * nbar + 1.0)).sqrt()
}

/// Steady-state photon number from the threshold ratio: N̄ = r²/(2(1−r²)).
pub fn nbar_from_ratio(r: f64) -> f64 {
    r * r / (2.0 * (1.0 - r * r))
}

/// Dimensionless products defining the small-interaction-time regime.
/// The expansions below are second order in these products; they are
/// declared valid only while every product stays at or below 0.05.
#[derive(Debug, Clone, Copy)]
pub struct SmallTimeRegime {
    pub nbar: f64,
    pub chi1_t: f64,
    pub chi2_t: f64,
    pub kappa_t: f64,
}

impl SmallTimeRegime {
    pub fn validate(&self) -> Result<()> {
        if !(self.nbar >= 0.0) {
            return Err(OpoError::RegimeViolation(format!("nbar = {} must be >= 0", self.nbar)));
        }
        for (name, v) in [("chi1_t", self.chi1_t), ("chi2_t", self.chi2_t), ("kappa_t", self.kappa_t)] {
            if !(0.0..=0.05).contains(&v) {
                return Err(OpoError::RegimeViolation(format!(
                    "{name} = {v} outside the small-time validity bound 0.05"
                )));
            }
        }
        Ok(())
    }
}

/// Lowest-order structure of the conditional blocks: ρ⁽⁰⁾ ≈ ρ(0),
/// ρ⁽¹⁾ ∝ a₂†ρ(0)a₂, ρ⁽ⁱⁿᵗ⁾ ≈ χ₁t·a₂†ρ(0), with the traces and first
/// moments that the detection formulas are built on.
#[derive(Debug, Clone, Copy)]
pub struct SmallTimeBlocks {
    /// Tr ρ⁽¹⁾ = (χ₁t)²(N̄+1).
    pub trace1: f64,
    /// Tr ρ⁽⁰⁾ = 1 at this order.
    pub trace0: f64,
    /// Tr[ρ⁽ⁱⁿᵗ⁾a₂] = χ₁t(N̄+1).
    pub a2_int: f64,
    /// ⟨n₂⟩ on the normalized ρ⁽¹⁾: 2N̄+1.
    pub n2_rho1: f64,
    /// ⟨n₂⟩ on the normalized ρ⁽⁰⁾: N̄.
    pub n2_rho0: f64,
}

pub fn smalltime_blocks(regime: &SmallTimeRegime) -> Result<SmallTimeBlocks> {
    regime.validate()?;
    let nbar = regime.nbar;
    let xt = regime.chi1_t;
    Ok(SmallTimeBlocks {
        trace1: xt * xt * (nbar + 1.0),
        trace0: 1.0,
        a2_int: xt * (nbar + 1.0),
        n2_rho1: 2.0 * nbar + 1.0,
        n2_rho0: nbar,
    })
}

/// Thermal photon distribution (N̄/(1+N̄))ⁿ/(1+N̄).
pub fn thermal_pmf(nbar: f64, n: usize) -> f64 {
    if nbar <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (nbar / (1.0 + nbar)).powi(n as i32) / (1.0 + nbar)
}

/// Photon distribution of the one-photon-heralded mode:
/// n·(N̄/(1+N̄))ⁿ⁻¹/(1+N̄)², the "shifted" thermal distribution.
pub fn shifted_thermal_pmf(nbar: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let q = nbar / (1.0 + nbar);
    n as f64 * q.powi(n as i32 - 1) / ((1.0 + nbar) * (1.0 + nbar))
}

/// Small-time detection observables at analyzer phase φ.
#[derive(Debug, Clone, Copy)]
pub struct DetectionFormulas {
    /// ⟨c†c⟩ on the mixture: (1+3N̄)/2, φ-independent.
    pub mix_counts: f64,
    /// ⟨c†c⟩ on the cat: mixture + ((N̄+1)/2)·cos φ.
    pub cat_counts: f64,
    /// Fringe visibility (1+N̄)/(1+3N̄).
    pub visibility: f64,
    /// ⟨(c†c)²⟩ on the cat.
    pub cc2: f64,
    /// ⟨(d†d)²⟩ on the cat.
    pub dd2: f64,
    /// ⟨c†c·d†d⟩ = N̄(2N̄+1), φ-independent.
    pub ccdd: f64,
    /// Visibility of the ⟨(c†c)²⟩ fringes: (4N̄²+5N̄+1)/(8N̄²+7N̄+1).
    pub corr_visibility: f64,
    /// G⁽¹⁾(0) = ⟨c†c⟩ on the cat.
    pub g1: f64,
    /// G⁽²⁾(0) = ⟨c†c†cc⟩ = 2N̄[1+2N̄+(N̄+1)cos φ].
    pub g2: f64,
    /// G⁽²⁾ < (G⁽¹⁾)².
    pub subpoissonian: bool,
}

pub fn detection_formulas(nbar: f64, phi: f64) -> DetectionFormulas {
    let c = phi.cos();
    let mix_counts = (1.0 + 3.0 * nbar) / 2.0;
    let cat_counts = mix_counts + (nbar + 1.0) / 2.0 * c;
    let fringe = 4.0 * nbar * nbar + 5.0 * nbar + 1.0;
    let cc2 = (16.0 * nbar * nbar + 14.0 * nbar + 2.0 + 2.0 * c * fringe) / 4.0;
    let dd2 = (16.0 * nbar * nbar + 14.0 * nbar + 2.0 - 2.0 * c * fringe) / 4.0;
    let ccdd = nbar * (2.0 * nbar + 1.0);
    let g1 = cat_counts;
    let g2 = 2.0 * nbar * (1.0 + 2.0 * nbar + (nbar + 1.0) * c);
    DetectionFormulas {
        mix_counts,
        cat_counts,
        visibility: (1.0 + nbar) / (1.0 + 3.0 * nbar),
        cc2,
        dd2,
        ccdd,
        corr_visibility: fringe / (8.0 * nbar * nbar + 7.0 * nbar + 1.0),
        g1,
        g2,
        subpoissonian: g2 < g1 * g1,
    }
}

/// Unnormalized Wigner function of the conditioned d₊ mode after
/// projecting d₋ onto α|0⟩ + β|1⟩:
///
/// W(x, y) ∝ exp[−2(1−r)x² − 2(1+r)y²] · { A[x²(2−r)² + y²(2+r)² − 1]
///   + |β|² + 2(2−r)x·Re(α*β) + 2(2+r)y·Im(α*β) },
/// A = |α|² + |β|²r²/(4−r²).
///
/// At the origin this reduces to 2|β|²(2−r²)/(4−r²) − |α|².
pub fn dplus_wigner(r: f64, amps: &ComplexAmplitudePair, x: f64, y: f64) -> f64 {
    let a2 = amps.alpha().norm_sqr();
    let b2 = amps.beta().norm_sqr();
    let ab = amps.alpha().conj() * amps.beta();
    let big_a = a2 + b2 * r * r / (4.0 - r * r);
    let poly = big_a * (x * x * (2.0 - r) * (2.0 - r) + y * y * (2.0 + r) * (2.0 + r) - 1.0)
        + b2
        + 2.0 * (2.0 - r) * x * ab.re
        + 2.0 * (2.0 + r) * y * ab.im;
    poly * (-2.0 * (1.0 - r) * x * x - 2.0 * (1.0 + r) * y * y).exp()
}

/// The same Wigner function as a structured polynomial × Gaussian form
/// (suitable for normalization and marginals). The Gaussian factor has
/// variances 1/(4(1−r)) in x and 1/(4(1+r)) in y.
pub fn dplus_wigner_form(r: f64, amps: &ComplexAmplitudePair) -> Result<QuadraticWignerForm> {
    if !(0.0..1.0).contains(&r) {
        return Err(OpoError::RequiresBelowThreshold(r));
    }
    let a2 = amps.alpha().norm_sqr();
    let b2 = amps.beta().norm_sqr();
    let ab = amps.alpha().conj() * amps.beta();
    let big_a = a2 + b2 * r * r / (4.0 - r * r);

    let mut cov = nalgebra::DMatrix::<f64>::zeros(2, 2);
    cov[(0, 0)] = 1.0 / (4.0 * (1.0 - r));
    cov[(1, 1)] = 1.0 / (4.0 * (1.0 + r));
    let gaussian = GaussianWignerState::new(nalgebra::DVector::zeros(2), cov)?;

    let mut poly = nalgebra::DMatrix::<f64>::zeros(2, 2);
    poly[(0, 0)] = big_a * (2.0 - r) * (2.0 - r);
    poly[(1, 1)] = big_a * (2.0 + r) * (2.0 + r);
    let linear = nalgebra::dvector![2.0 * (2.0 - r) * ab.re, 2.0 * (2.0 + r) * ab.im];
    QuadraticWignerForm::new(gaussian, poly, linear, b2 - big_a)
}

/// Wigner function of the heralded two-mode state in the d± variables
/// (point ordering x₊, y₊, x₋, y₋), as a closed form valid at small
/// interaction times.
pub fn four_mode_wigner(r: f64, point: &[f64; 4]) -> f64 {
    let [xp, yp, xm, ym] = *point;
    let r2 = r * r;
    let pre = 4.0 / (std::f64::consts::PI * std::f64::consts::PI) * (1.0 - r2) * (1.0 - r2) / (2.0 - r2);
    let bracket = (xp * xp + ym * ym) * (2.0 - r) * (2.0 - r)
        + (yp * yp + xm * xm) * (2.0 + r) * (2.0 + r)
        - 2.0
        + 2.0 * (4.0 - r2) * (xp * xm + yp * ym);
    let gauss = (-2.0 * (1.0 - r) * (xp * xp + ym * ym) - 2.0 * (1.0 + r) * (xm * xm + yp * yp)).exp();
    pre * bracket * gauss
}

/// Value of the four-mode Wigner function at the origin,
/// −4/(π²(2N̄+1)(N̄+1)): negative for every N̄ and vanishing as N̄ → ∞.
pub fn four_mode_origin(nbar: f64) -> f64 {
    -4.0 / (std::f64::consts::PI * std::f64::consts::PI * (2.0 * nbar + 1.0) * (nbar + 1.0))
}

/// Fock expansion cutoff of the amplifier reference state.
pub const OPA_CUTOFF: usize = 20;

/// The cavity-free (single-pass amplifier) reference: after the d₋
/// conditional measurement the d₊ mode is left in
/// |ψᶜ⟩ ∝ α*·S(s)|1⟩ + (β*/cosh s)·S(s)|0⟩ with squeeze parameter
/// s = χ₂t (the unitary is exp((χ₂t/2)(d₊†² − d₊²))).
#[derive(Debug, Clone)]
pub struct OpaReference {
    /// Unnormalized Fock amplitudes, cutoff [`OPA_CUTOFF`].
    pub amplitudes: Vec<Complex64>,
    /// |α|² + |β|²/cosh²s, the exact squared norm of the unnormalized state.
    pub norm_sqr: f64,
}

impl OpaReference {
    /// Normalized photon-number distribution.
    pub fn photon_pmf(&self) -> Vec<f64> {
        let total: f64 = self.amplitudes.iter().map(|c| c.norm_sqr()).sum();
        self.amplitudes.iter().map(|c| c.norm_sqr() / total).collect()
    }
}

pub fn opa_reference(chi2_t: f64, amps: &ComplexAmplitudePair) -> Result<OpaReference> {
    if !(chi2_t >= 0.0) || !chi2_t.is_finite() {
        return Err(OpoError::InvalidParams(format!("chi2_t = {chi2_t} must be finite and >= 0")));
    }
    let dim = OPA_CUTOFF + 1;
    let sq0 = squeezed_vacuum_coeffs(chi2_t, dim);
    let sq1 = squeezed_one_coeffs(chi2_t, dim);
    let ca = amps.alpha().conj();
    let cb = amps.beta().conj() / chi2_t.cosh();
    let amplitudes: Vec<Complex64> = (0..dim).map(|n| ca * sq1[n] + cb * sq0[n]).collect();
    let norm_sqr = amps.alpha().norm_sqr() + amps.beta().norm_sqr() / (chi2_t.cosh() * chi2_t.cosh());
    Ok(OpaReference { amplitudes, norm_sqr })
}

/// Fock coefficients of the squeezed vacuum S(s)|0⟩ with
/// S(s) = exp((s/2)(a†² − a²)): even support, recurrence
/// c_{n+1} = tanh(s)·√(n/(n+1))·c_{n−1}, c₀ = sech^{1/2}(s).
pub fn squeezed_vacuum_coeffs(s: f64, dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    c[0] = 1.0 / s.cosh().sqrt();
    let t = s.tanh();
    for n in 1..dim.saturating_sub(1) {
        c[n + 1] = t * (n as f64 / (n + 1) as f64).sqrt() * c[n - 1];
    }
    c
}

/// Fock coefficients of the squeezed one-photon state S(s)|1⟩, obtained
/// exactly as (cosh(s)·a† − sinh(s)·a) S(s)|0⟩.
pub fn squeezed_one_coeffs(s: f64, dim: usize) -> Vec<f64> {
    let c0 = squeezed_vacuum_coeffs(s, dim + 1);
    let (ch, sh) = (s.cosh(), s.sinh());
    (0..dim)
        .map(|n| {
            let create = if n >= 1 { ch * (n as f64).sqrt() * c0[n - 1] } else { 0.0 };
            let annihilate = sh * ((n + 1) as f64).sqrt() * c0[n + 1];
            create - annihilate
        })
        .collect()
}

/// Physical parameter scales of the experiment: flight time through the
/// trigger crystal, damping from the target photon number, cavity quality
/// factor, and the dimensionless interaction products.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentScales {
    pub crystal_length: f64,
    pub refractive_index: f64,
    pub wavelength: f64,
    pub pump_power: f64,
    /// t = L·n/c.
    pub flight_time: f64,
    /// Q = 2πc/(λκ).
    pub q_factor: f64,
    pub kappa: f64,
    /// χ₂ = κ/√(1 + 1/(2N̄)).
    pub chi2: f64,
    pub nbar: f64,
    pub chi2_t: f64,
    pub kappa_t: f64,
}

pub fn experiment_scales(
    crystal_length: f64,
    refractive_index: f64,
    wavelength: f64,
    kappa: f64,
    nbar_target: f64,
    pump_power: f64,
) -> Result<ExperimentScales> {
    for (name, v) in [
        ("crystal_length", crystal_length),
        ("refractive_index", refractive_index),
        ("wavelength", wavelength),
        ("kappa", kappa),
        ("nbar_target", nbar_target),
        ("pump_power", pump_power),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(OpoError::InvalidParams(format!("{name} = {v} must be finite and > 0")));
        }
    }
    let flight_time = crystal_length * refractive_index / SPEED_OF_LIGHT;
    let chi2 = kappa / (1.0 + 1.0 / (2.0 * nbar_target)).sqrt();
    Ok(ExperimentScales {
        crystal_length,
        refractive_index,
        wavelength,
        pump_power,
        flight_time,
        q_factor: 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (wavelength * kappa),
        kappa,
        chi2,
        nbar: nbar_target,
        chi2_t: chi2 * flight_time,
        kappa_t: kappa * flight_time,
    })
}
