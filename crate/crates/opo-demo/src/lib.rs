//! Browser demo bindings: the closed-form side of the simulator exposed to
//! a static page. Three interactive views, all parameterized by the
//! steady-state photon number N̄ and the d₋ projection amplitudes:
//!
//! - the conditioned d₊ Wigner function on a square grid, with its
//!   quadrature marginals P(x) and P(y);
//! - interference fringes, coherence, and visibilities versus the
//!   analyzer phase φ;
//! - photon-number distributions of the heralded branches.
//!
//! Everything here is plain `f64` math from `opo-core`, so the same
//! functions compile and run natively for the unit tests below.

use wasm_bindgen::prelude::wasm_bindgen;

use num_complex::Complex64;
use opo_core::closed_form::{
    detection_formulas, dplus_wigner_form, four_mode_origin, ratio_from_nbar, shifted_thermal_pmf,
    thermal_pmf,
};
use opo_core::detection::{quadrature_marginals, MarginalAxis, WignerSource};
use opo_core::phase_space::ComplexAmplitudePair;

fn amplitudes(beta_weight: f64, beta_phase: f64) -> ComplexAmplitudePair {
    let w = beta_weight.clamp(0.0, 1.0);
    let alpha = Complex64::new((1.0 - w).sqrt(), 0.0);
    let beta = Complex64::from_polar(w.sqrt(), beta_phase);
    ComplexAmplitudePair::new(alpha, beta).expect("unit amplitudes by construction")
}

/// Normalized Wigner function W(x, y) of the conditioned d₊ mode on an
/// n×n grid over [−extent, extent]², row-major with x as the row.
/// `beta_weight` is |β|² of the d₋ projection and `beta_phase` its phase.
#[wasm_bindgen]
pub fn wigner_grid(nbar: f64, beta_weight: f64, beta_phase: f64, extent: f64, n: usize) -> Vec<f64> {
    let r = ratio_from_nbar(nbar.max(0.0));
    let form = dplus_wigner_form(r, &amplitudes(beta_weight, beta_phase))
        .and_then(|f| f.normalized())
        .expect("below-threshold form");
    let step = 2.0 * extent / (n.max(2) - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let x = -extent + i as f64 * step;
        for j in 0..n {
            let y = -extent + j as f64 * step;
            out.push(form.wigner(x, y));
        }
    }
    out
}

/// Quadrature marginals of the same state: P(x) for the first n values,
/// P(y) for the second n, on the grid [−extent, extent].
#[wasm_bindgen]
pub fn wigner_marginals(nbar: f64, beta_weight: f64, beta_phase: f64, extent: f64, n: usize) -> Vec<f64> {
    let r = ratio_from_nbar(nbar.max(0.0));
    let form = dplus_wigner_form(r, &amplitudes(beta_weight, beta_phase))
        .and_then(|f| f.normalized())
        .expect("below-threshold form");
    let step = 2.0 * extent / (n.max(2) - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| -extent + i as f64 * step).collect();
    let range = 3.0 + 2.0 * nbar.max(0.0).sqrt();
    let mut out = quadrature_marginals(&form, MarginalAxis::X, &grid, range);
    out.extend(quadrature_marginals(&form, MarginalAxis::Y, &grid, range));
    out
}

/// Wigner value at the origin (normalized form) and the four-mode origin
/// law −4/(π²(2N̄+1)(N̄+1)), packed as [w_origin, four_mode_origin].
#[wasm_bindgen]
pub fn wigner_origin_info(nbar: f64, beta_weight: f64, beta_phase: f64) -> Vec<f64> {
    let r = ratio_from_nbar(nbar.max(0.0));
    let form = dplus_wigner_form(r, &amplitudes(beta_weight, beta_phase))
        .and_then(|f| f.normalized())
        .expect("below-threshold form");
    vec![form.wigner(0.0, 0.0), four_mode_origin(nbar)]
}

/// Detection curves versus the analyzer phase: n rows of
/// [phi, cat_counts, mix_counts, g1, g2, cc2], flattened row-major.
#[wasm_bindgen]
pub fn detection_curves(nbar: f64, n_phi: usize) -> Vec<f64> {
    let n = n_phi.max(8);
    let mut out = Vec::with_capacity(6 * n);
    for k in 0..n {
        let phi = k as f64 / (n - 1) as f64 * std::f64::consts::TAU;
        let f = detection_formulas(nbar, phi);
        out.extend_from_slice(&[phi, f.cat_counts, f.mix_counts, f.g1, f.g2, f.cc2]);
    }
    out
}

/// Scalar diagnostics: [visibility, corr_visibility, subpoissonian_at_0,
/// herald_trace1] for the given N̄ and χ₁t.
#[wasm_bindgen]
pub fn detection_summary(nbar: f64, chi1_t: f64) -> Vec<f64> {
    let f = detection_formulas(nbar, 0.0);
    vec![
        f.visibility,
        f.corr_visibility,
        if f.subpoissonian { 1.0 } else { 0.0 },
        chi1_t * chi1_t * (nbar + 1.0),
    ]
}

/// Photon-number distributions of the heralded branches up to `n_max`:
/// [P_H | P_V | P], each of length n_max + 1.
#[wasm_bindgen]
pub fn photon_distributions(nbar: f64, n_max: usize) -> Vec<f64> {
    let len = n_max + 1;
    let mut out = Vec::with_capacity(3 * len);
    for n in 0..len {
        out.push(shifted_thermal_pmf(nbar, n));
    }
    for n in 0..len {
        out.push(thermal_pmf(nbar, n));
    }
    for n in 0..len {
        out.push(0.5 * (shifted_thermal_pmf(nbar, n) + thermal_pmf(nbar, n)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wigner_grid_shows_negativity_for_vacuum_projection() {
        let n = 41;
        let grid = wigner_grid(0.5, 0.0, 0.0, 3.0, n);
        assert_eq!(grid.len(), n * n);
        let center = grid[(n / 2) * n + n / 2];
        assert!(center < 0.0, "origin value {center}");
        assert!(grid.iter().cloned().fold(f64::MIN, f64::max) > 0.0);
    }

    #[test]
    fn marginals_are_densities() {
        let n = 61;
        let extent = 4.0;
        let m = wigner_marginals(0.5, 0.0, 0.0, extent, n);
        assert_eq!(m.len(), 2 * n);
        let step = 2.0 * extent / (n - 1) as f64;
        for half in [&m[..n], &m[n..]] {
            assert!(half.iter().all(|&v| v >= -1e-9));
            let total: f64 = half.windows(2).map(|w| 0.5 * step * (w[0] + w[1])).sum();
            assert!((total - 1.0).abs() < 5e-3, "marginal integrates to {total}");
        }
    }

    #[test]
    fn origin_info_matches_formula() {
        let info = wigner_origin_info(0.5, 1.0, 0.0);
        // One-photon projection at r² = 0.5: positive origin.
        assert!(info[0] > 0.0);
        assert!((info[1] - four_mode_origin(0.5)).abs() < 1e-15);
    }

    #[test]
    fn detection_curves_layout_and_values() {
        let n = 16;
        let rows = detection_curves(0.5, n);
        assert_eq!(rows.len(), 6 * n);
        // First row is φ = 0: cat = 2.0, mix = 1.25.
        assert!((rows[1] - 2.0).abs() < 1e-12);
        assert!((rows[2] - 1.25).abs() < 1e-12);
        let summary = detection_summary(0.5, 1e-3);
        assert!((summary[0] - 0.6).abs() < 1e-12);
        assert!(summary[2] > 0.5, "N̄ = 0.5 is subpoissonian at φ = 0");
        assert!((summary[3] - 1.5e-6).abs() < 1e-18);
    }

    #[test]
    fn photon_distribution_blocks_sum_to_one() {
        let n_max = 60;
        let p = photon_distributions(0.5, n_max);
        assert_eq!(p.len(), 3 * (n_max + 1));
        for block in 0..3 {
            let total: f64 = p[block * (n_max + 1)..(block + 1) * (n_max + 1)].iter().sum();
            assert!((total - 1.0).abs() < 1e-9, "block {block} sums to {total}");
        }
        // P_H starts at zero, P_V at the thermal weight.
        assert_eq!(p[0], 0.0);
        assert!((p[n_max + 1] - 2.0 / 3.0).abs() < 1e-12);
    }
}
