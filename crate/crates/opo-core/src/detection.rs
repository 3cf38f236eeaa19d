//! Detection diagnostics on the heralded states: photon-number
//! distributions, interference fringes and visibility at the analyzer
//! output ports, second-order correlators and coherence, and quadrature
//! marginals of Wigner functions.
//!
//! Observables on the four-mode cat are computed factor-wise from the
//! conditional blocks (the interference dyads contribute products of
//! single-group traces); nothing here materializes the joint state.

use num_complex::Complex64;

use crate::conditioning::{CatAssembly, CatKind, CrossTerm};
use crate::fock::{FockDensityMatrix, Ladder};
use crate::phase_space::QuadraticWignerForm;
use crate::{OpoError, Result};

/// Per-φ record of every detection diagnostic, ready for CSV emission.
#[derive(Debug, Clone)]
pub struct DetectionRecord {
    pub phi_grid: Vec<f64>,
    pub counts_c: Vec<f64>,
    pub counts_d: Vec<f64>,
    /// Visibility of counts_c over the grid.
    pub visibility: f64,
    /// ⟨(c†c)²⟩ per φ.
    pub cc2: Vec<f64>,
    /// ⟨(d†d)²⟩ per φ.
    pub dd2: Vec<f64>,
    /// ⟨c†c·d†d⟩ per φ.
    pub ccdd: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub subpoissonian: Vec<bool>,
}

impl DetectionRecord {
    /// CSV rows: phi, counts_c, counts_d, cc2, dd2, ccdd, g1, g2,
    /// subpoissonian.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W, fmt: impl Fn(f64) -> String) -> Result<()> {
        writeln!(w, "phi,counts_c,counts_d,cc2,dd2,ccdd,g1,g2,subpoissonian")?;
        for i in 0..self.phi_grid.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                fmt(self.phi_grid[i]),
                fmt(self.counts_c[i]),
                fmt(self.counts_d[i]),
                fmt(self.cc2[i]),
                fmt(self.dd2[i]),
                fmt(self.ccdd[i]),
                fmt(self.g1[i]),
                fmt(self.g2[i]),
                self.subpoissonian[i]
            )?;
        }
        Ok(())
    }
}

/// Uniform φ grid on [0, 2π), the default being 32 points.
pub fn phi_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| k as f64 / points as f64 * std::f64::consts::TAU).collect()
}

// Operator words on the cat live on the direction-2 modes: a₂ₑ sits in
// block A (mode 0 of the (2e,3o) factor) and a₂ₒ in block B (mode 0 of the
// (2o,3e) factor). Products concatenate per-group words; cross-group
// letters commute.

/// The analyzer-port mode operators as sums of single letters:
/// c = (a₂ₒ + e^{iφ}a₂ₑ)/√2, d = (a₂ₒ − e^{iφ}a₂ₑ)/√2.
fn port_operator(phi: f64, sign: f64, dagger: bool) -> Vec<CrossTerm> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phase = Complex64::new(0.0, if dagger { -phi } else { phi }).exp() * sign;
    let ladder = if dagger { Ladder::Create } else { Ladder::Annihilate };
    vec![
        (Complex64::new(s, 0.0), vec![], vec![(0, ladder)]),           // a₂ₒ term
        (phase * s, vec![(0, ladder)], vec![]),                        // a₂ₑ term
    ]
}

/// Product of two operator sums: coefficients multiply, per-group words
/// concatenate in order.
fn operator_product(lhs: &[CrossTerm], rhs: &[CrossTerm]) -> Vec<CrossTerm> {
    let mut out = Vec::with_capacity(lhs.len() * rhs.len());
    for (cl, la, lb) in lhs {
        for (cr, ra, rb) in rhs {
            let mut wa = la.clone();
            wa.extend_from_slice(ra);
            let mut wb = lb.clone();
            wb.extend_from_slice(rb);
            out.push((cl * cr, wa, wb));
        }
    }
    out
}

fn number_operator(phi: f64, sign: f64) -> Vec<CrossTerm> {
    operator_product(&port_operator(phi, sign, true), &port_operator(phi, sign, false))
}

/// Photon-number distributions of the direction-2 mode: P_H from the
/// one-photon branch ρ⁽¹⁾, P_V from the zero-photon branch ρ⁽⁰⁾, and the
/// 45°-polarizer average P = (P_H + P_V)/2, entrywise.
pub fn photon_distributions(assembly: &CatAssembly) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let blocks = assembly.blocks();
    let mut p_h = blocks.rho1.partial_trace(&[0])?.photon_distribution(0)?;
    let mut p_v = blocks.rho0.partial_trace(&[0])?.photon_distribution(0)?;
    for v in &mut p_h {
        *v /= blocks.trace1;
    }
    for v in &mut p_v {
        *v /= blocks.trace0;
    }
    let p: Vec<f64> = p_h.iter().zip(&p_v).map(|(h, v)| 0.5 * (h + v)).collect();
    Ok((p_h, p_v, p))
}

/// Mean photon counts (⟨c†c⟩, ⟨d†d⟩) at the two analyzer ports.
pub fn interference_counts(assembly: &CatAssembly, phi: f64, kind: CatKind) -> Result<(f64, f64)> {
    let nc = assembly.expectation(&number_operator(phi, 1.0), kind)?;
    let nd = assembly.expectation(&number_operator(phi, -1.0), kind)?;
    Ok((nc.re, nd.re))
}

/// Fringe visibility (max − min)/(max + min) over a φ grid covering
/// [0, 2π) with at least 8 points.
pub fn fringe_visibility(counts: &[f64]) -> Result<f64> {
    if counts.len() < 8 {
        return Err(OpoError::InvalidParams(format!(
            "visibility needs at least 8 grid points, got {}",
            counts.len()
        )));
    }
    let max = counts.iter().cloned().fold(f64::MIN, f64::max);
    let min = counts.iter().cloned().fold(f64::MAX, f64::min);
    if max + min == 0.0 {
        return Err(OpoError::DegenerateCounts);
    }
    Ok((max - min) / (max + min))
}

/// Second-order correlators (⟨(c†c)²⟩, ⟨(d†d)²⟩, ⟨c†c·d†d⟩).
pub fn second_order_correlators(assembly: &CatAssembly, phi: f64, kind: CatKind) -> Result<(f64, f64, f64)> {
    let nc = number_operator(phi, 1.0);
    let nd = number_operator(phi, -1.0);
    let cc2 = assembly.expectation(&operator_product(&nc, &nc), kind)?.re;
    let dd2 = assembly.expectation(&operator_product(&nd, &nd), kind)?.re;
    let ccdd = assembly.expectation(&operator_product(&nc, &nd), kind)?.re;
    Ok((cc2, dd2, ccdd))
}

/// First- and second-order coherence of port c: G⁽¹⁾ = ⟨c†c⟩,
/// G⁽²⁾ = ⟨(c†c)²⟩ − ⟨c†c⟩, and the sub-Poissonian flag G⁽²⁾ < (G⁽¹⁾)².
pub fn coherence_g1_g2(assembly: &CatAssembly, phi: f64, kind: CatKind) -> Result<(f64, f64, bool)> {
    let nc = number_operator(phi, 1.0);
    let g1 = assembly.expectation(&nc, kind)?.re;
    let cc2 = assembly.expectation(&operator_product(&nc, &nc), kind)?.re;
    let g2 = cc2 - g1;
    Ok((g1, g2, g2 < g1 * g1))
}

/// Normal-ordered ⟨c†c†cc⟩, equal to G⁽²⁾ up to truncation error; kept as
/// an independent route for cross-checks.
pub fn g2_normal_ordered(assembly: &CatAssembly, phi: f64, kind: CatKind) -> Result<f64> {
    let cdag = port_operator(phi, 1.0, true);
    let c = port_operator(phi, 1.0, false);
    let word = operator_product(&operator_product(&cdag, &cdag), &operator_product(&c, &c));
    Ok(assembly.expectation(&word, kind)?.re)
}

/// All diagnostics over a φ grid.
pub fn detection_record(assembly: &CatAssembly, grid: &[f64], kind: CatKind) -> Result<DetectionRecord> {
    let mut rec = DetectionRecord {
        phi_grid: grid.to_vec(),
        counts_c: Vec::with_capacity(grid.len()),
        counts_d: Vec::with_capacity(grid.len()),
        visibility: 0.0,
        cc2: Vec::with_capacity(grid.len()),
        dd2: Vec::with_capacity(grid.len()),
        ccdd: Vec::with_capacity(grid.len()),
        g1: Vec::with_capacity(grid.len()),
        g2: Vec::with_capacity(grid.len()),
        subpoissonian: Vec::with_capacity(grid.len()),
    };
    for &phi in grid {
        let (nc, nd) = interference_counts(assembly, phi, kind)?;
        rec.counts_c.push(nc);
        rec.counts_d.push(nd);
        let (cc2, dd2, ccdd) = second_order_correlators(assembly, phi, kind)?;
        rec.cc2.push(cc2);
        rec.dd2.push(dd2);
        rec.ccdd.push(ccdd);
        let (g1, g2, flag) = coherence_g1_g2(assembly, phi, kind)?;
        rec.g1.push(g1);
        rec.g2.push(g2);
        rec.subpoissonian.push(flag);
    }
    rec.visibility = fringe_visibility(&rec.counts_c)?;
    Ok(rec)
}

/// Least-squares fit of counts(φ) to offset + amplitude·cos φ over the
/// grid; returns (offset, amplitude, max |residual|).
pub fn cosine_fit(grid: &[f64], counts: &[f64]) -> (f64, f64, f64) {
    let n = grid.len() as f64;
    let offset = counts.iter().sum::<f64>() / n;
    // Uniform grid on [0, 2π): cos projections are orthogonal.
    let amplitude = 2.0 * grid.iter().zip(counts).map(|(&p, &c)| c * p.cos()).sum::<f64>() / n;
    let residual = grid
        .iter()
        .zip(counts)
        .map(|(&p, &c)| (c - offset - amplitude * p.cos()).abs())
        .fold(0.0, f64::max);
    (offset, amplitude, residual)
}

/// Anything that can evaluate a single-mode Wigner function pointwise.
pub trait WignerSource {
    fn wigner(&self, x: f64, y: f64) -> f64;
}

impl WignerSource for QuadraticWignerForm {
    fn wigner(&self, x: f64, y: f64) -> f64 {
        self.evaluate(&nalgebra::dvector![x, y])
    }
}

/// Single-mode Fock state as a Wigner source.
pub struct FockWigner<'a>(pub &'a FockDensityMatrix);

impl WignerSource for FockWigner<'_> {
    fn wigner(&self, x: f64, y: f64) -> f64 {
        self.0.wigner_single(&[(x, y)]).expect("single-mode state")[0]
    }
}

/// Which quadrature axis the marginal is taken along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalAxis {
    X,
    Y,
}

/// Quadrature marginal of a single-mode Wigner function: integrates the
/// conjugate variable by adaptive Simpson over [−range, +range] at each
/// grid point. `range` should be ~3 + 2√N̄ for the states here.
pub fn quadrature_marginals(
    source: &dyn WignerSource,
    axis: MarginalAxis,
    grid: &[f64],
    range: f64,
) -> Vec<f64> {
    grid.iter()
        .map(|&q| {
            let f = |t: f64| match axis {
                MarginalAxis::X => source.wigner(q, t),
                MarginalAxis::Y => source.wigner(t, q),
            };
            adaptive_simpson(&f, -range, range, 1e-9, 24)
        })
        .collect()
}

/// Standard adaptive Simpson with tolerance halving on recursion.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, c, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    c: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + c);
    let rm = 0.5 * (c + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (c - a) / 6.0 * (fa + 4.0 * flm + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, c, lm, fa, fc, flm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, c, b, rm, fc, fb, frm, right, 0.5 * tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{detection_formulas, shifted_thermal_pmf, thermal_pmf};
    use crate::conditioning::{assemble_cat_and_mixture, conditional_blocks};
    use crate::fock::{evolve_rho, initial_three_mode_rho, FockBasis, FockDensityMatrix, Liouvillian};
    use crate::phase_space::{GaussianWignerState, SystemParams};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// The standard small-time heralded assembly: N̄ = 0.5, χ₁t = κt = 1e-3.
    fn standard_assembly() -> CatAssembly {
        let p = SystemParams::symmetric_with_nbar(1.0, 0.5, 1.0).unwrap();
        let basis = FockBasis::new(&[2, 10, 10]).unwrap();
        let rho0 = initial_three_mode_rho(&p, &basis).unwrap();
        let lv = Liouvillian::three_mode(&p, basis).unwrap();
        let rho = evolve_rho(&rho0, &lv, 1e-3, 2.5e-4).unwrap();
        assemble_cat_and_mixture(conditional_blocks(&rho).unwrap()).unwrap()
    }

    #[test]
    fn mixture_counts_flat_and_at_formula_value() {
        let assembly = standard_assembly();
        let grid = phi_grid(32);
        let mut counts = Vec::new();
        for &phi in &grid {
            let (nc, _) = interference_counts(&assembly, phi, CatKind::Mixture).unwrap();
            counts.push(nc);
        }
        let max = counts.iter().cloned().fold(f64::MIN, f64::max);
        let min = counts.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max - min < 1e-6, "mixture fringe amplitude {}", max - min);
        assert_relative_eq!(counts[0], 1.25, max_relative = 0.02);
    }

    #[test]
    fn cat_counts_and_visibility_match_formulas() {
        let assembly = standard_assembly();
        let grid = phi_grid(32);
        let rec = detection_record(&assembly, &grid, CatKind::Cat).unwrap();

        // Fit against offset + amplitude·cos φ.
        let (offset, amplitude, residual) = cosine_fit(&grid, &rec.counts_c);
        assert_relative_eq!(offset, 1.25, max_relative = 0.02);
        assert_relative_eq!(amplitude, 0.75, max_relative = 0.02);
        assert!(residual < 0.02 * amplitude, "residual {residual}");
        assert_abs_diff_eq!(rec.visibility, 0.6, epsilon = 0.01);

        // Port conservation: ⟨c†c⟩ + ⟨d†d⟩ is φ-independent.
        let sums: Vec<f64> = rec.counts_c.iter().zip(&rec.counts_d).map(|(c, d)| c + d).collect();
        let spread = sums.iter().cloned().fold(f64::MIN, f64::max) - sums.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-10, "port sum spread {spread}");
    }

    #[test]
    fn correlators_match_formulas() {
        let assembly = standard_assembly();
        for phi in [0.0, 1.0, std::f64::consts::PI] {
            let f = detection_formulas(0.5, phi);
            let (cc2, dd2, ccdd) = second_order_correlators(&assembly, phi, CatKind::Cat).unwrap();
            assert_relative_eq!(cc2, f.cc2, max_relative = 0.02);
            assert_relative_eq!(dd2, f.dd2, max_relative = 0.02);
            assert_relative_eq!(ccdd, f.ccdd, max_relative = 0.02);
        }
    }

    #[test]
    fn coherence_identities_and_flag() {
        let assembly = standard_assembly();
        for phi in [0.0, 0.7, 2.4] {
            let (g1, g2, _) = coherence_g1_g2(&assembly, phi, CatKind::Cat).unwrap();
            let (cc2, _, _) = second_order_correlators(&assembly, phi, CatKind::Cat).unwrap();
            // Definition chain holds identically.
            assert_relative_eq!(g2, cc2 - g1, max_relative = 1e-10);
            // Independent normal-ordered route agrees to truncation error.
            let g2_no = g2_normal_ordered(&assembly, phi, CatKind::Cat).unwrap();
            assert_relative_eq!(g2, g2_no, max_relative = 1e-3);
        }
        let (g1, g2, flag) = coherence_g1_g2(&assembly, 0.0, CatKind::Cat).unwrap();
        assert_relative_eq!(g1, 2.0, max_relative = 0.02);
        assert_relative_eq!(g2, 3.5, max_relative = 0.02);
        assert!(flag, "N̄ = 0.5 at φ = 0 is subpoissonian (3.5 < 4)");
        let (_, _, flag_pi) = coherence_g1_g2(&assembly, std::f64::consts::PI, CatKind::Cat).unwrap();
        assert!(!flag_pi, "φ = π is never subpoissonian");
    }

    #[test]
    fn photon_distributions_match_shifted_thermal() {
        let assembly = standard_assembly();
        let (p_h, p_v, p) = photon_distributions(&assembly).unwrap();
        // P_H(0) vanishes at lowest order; the residue is a κt-scale effect.
        assert!(p_h[0] < 1e-3, "P_H(0) must nearly vanish, got {}", p_h[0]);
        assert_relative_eq!(p_h[1], shifted_thermal_pmf(0.5, 1), max_relative = 0.02);
        assert_relative_eq!(p_h[2], shifted_thermal_pmf(0.5, 2), max_relative = 0.02);
        assert_relative_eq!(p_v[0], thermal_pmf(0.5, 0), max_relative = 0.01);
        assert_relative_eq!(p_v[1], thermal_pmf(0.5, 1), max_relative = 0.01);
        // P = (P_H + P_V)/2 holds entrywise exactly.
        for i in 0..p.len() {
            assert_abs_diff_eq!(p[i], 0.5 * (p_h[i] + p_v[i]), epsilon = 1e-15);
        }
        let total: f64 = p.iter().sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-4);
    }

    #[test]
    fn visibility_guards() {
        assert!(matches!(fringe_visibility(&[1.0; 4]), Err(OpoError::InvalidParams(_))));
        assert!(matches!(fringe_visibility(&[0.0; 8]), Err(OpoError::DegenerateCounts)));
    }

    #[test]
    fn marginals_of_vacuum_are_gaussian() {
        let vac = FockDensityMatrix::vacuum(FockBasis::new(&[6]).unwrap());
        let source = FockWigner(&vac);
        let grid: Vec<f64> = (0..41).map(|k| -2.0 + k as f64 * 0.1).collect();
        let px = quadrature_marginals(&source, MarginalAxis::X, &grid, 4.0);
        // Variance 1/4 Gaussian density: √(2/π)·e^{−2x²}.
        for (q, val) in grid.iter().zip(&px) {
            let expect = (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * q * q).exp();
            assert_abs_diff_eq!(*val, expect, epsilon = 1e-6);
        }
        let total: f64 = px.windows(2).map(|w| 0.05 * (w[0] + w[1])).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn marginals_nonnegative_even_where_wigner_is_negative() {
        // Conditioned d₊ closed form at N̄ = 0.5, vacuum projection: W < 0
        // at the origin, yet both marginals are probability densities.
        let r = crate::closed_form::ratio_from_nbar(0.5);
        let amps = crate::phase_space::ComplexAmplitudePair::vacuum_projection();
        let form = crate::closed_form::dplus_wigner_form(r, &amps).unwrap().normalized().unwrap();
        assert!(form.wigner(0.0, 0.0) < 0.0);
        // The anti-squeezed x quadrature is wide; the grid must reach ±4.5
        // to capture the polynomial-weighted tails.
        let grid: Vec<f64> = (0..91).map(|k| -4.5 + k as f64 * 0.1).collect();
        let range = 3.0 + 2.0 * 0.5f64.sqrt();
        for axis in [MarginalAxis::X, MarginalAxis::Y] {
            let marg = quadrature_marginals(&form, axis, &grid, range);
            assert!(marg.iter().all(|&v| v >= -1e-9), "marginal dipped negative");
            let total: f64 = marg.windows(2).map(|w| 0.05 * (w[0] + w[1])).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 2e-3);
        }
    }

    #[test]
    fn px_peak_separation_grows_with_photon_number() {
        // The two P(x) peaks of the vacuum-projected d₊ state separate as
        // the initial photon number grows.
        let separation = |nbar: f64| -> f64 {
            let r = crate::closed_form::ratio_from_nbar(nbar);
            let amps = crate::phase_space::ComplexAmplitudePair::vacuum_projection();
            let form = crate::closed_form::dplus_wigner_form(r, &amps).unwrap().normalized().unwrap();
            let grid: Vec<f64> = (0..321).map(|k| -8.0 + k as f64 * 0.05).collect();
            let range = 3.0 + 2.0 * nbar.sqrt();
            let px = quadrature_marginals(&form, MarginalAxis::X, &grid, range);
            // Peak on the positive side; the distribution is symmetric.
            let (mut best_q, mut best_v) = (0.0, f64::MIN);
            for (q, v) in grid.iter().zip(&px) {
                if *q > 0.0 && *v > best_v {
                    best_v = *v;
                    best_q = *q;
                }
            }
            2.0 * best_q
        };
        let s_mid = separation(2.93);
        let s_big = separation(14.94);
        assert!(s_big > s_mid + 1.0, "separation {s_mid} -> {s_big} must grow with N");
    }

    #[test]
    fn gaussian_marginal_cross_check_against_state_variance() {
        // The d₊ Gaussian factor variances follow the dpm-transformed
        // equilibrium; integrate the thermal marginal and compare.
        let s = GaussianWignerState::thermal(0.5, 1).unwrap();
        let rho = crate::fock::gaussian_to_rho(&s, FockBasis::new(&[20]).unwrap()).unwrap();
        let source = FockWigner(&rho);
        let grid: Vec<f64> = (0..81).map(|k| -4.0 + k as f64 * 0.1).collect();
        let px = quadrature_marginals(&source, MarginalAxis::X, &grid, 5.0);
        let mean_sq: f64 = grid.iter().zip(&px).map(|(q, p)| q * q * p * 0.1).sum();
        assert_abs_diff_eq!(mean_sq, 0.5, epsilon = 5e-3);
    }
}
