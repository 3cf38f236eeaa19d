//! Dense matrix kernels shared by the Gaussian and Fock layers:
//! matrix exponential, Lyapunov solves, and an adaptive integrator
//! for the noise-covariance ODE.

use nalgebra::DMatrix;

use crate::{OpoError, Result};

/// Matrix exponential by scaling-and-squaring with Padé approximants
/// (Higham, SIAM J. Matrix Anal. Appl. 26, 1179 (2005)).
///
/// The drift matrices here are non-normal and nearly degenerate at
/// threshold, so eigendecomposition is not an option.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "expm requires a square matrix");
    let norm = one_norm(a);

    // Order thresholds θ_m from Higham 2005, Table 2.3.
    if norm < 1.495_585_217_958_292e-2 {
        return pade_eval(a, &PADE3);
    }
    if norm < 2.539_398_330_063_230e-1 {
        return pade_eval(a, &PADE5);
    }
    if norm < 9.504_178_996_162_932e-1 {
        return pade_eval(a, &PADE7);
    }
    if norm < 2.097_847_961_257_068 {
        return pade_eval(a, &PADE9);
    }

    let theta13 = 5.371_920_351_148_152;
    let mut squarings = 0u32;
    let mut scaled = a.clone();
    if norm > theta13 {
        squarings = (norm / theta13).log2().ceil().max(0.0) as u32;
        scaled /= 2f64.powi(squarings as i32);
    }
    let mut result = pade13_eval(&scaled);
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17_297_280.0, 8_648_640.0, 1_995_840.0, 277_200.0, 25_200.0, 1_512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Evaluate the (m,m) Padé approximant with coefficients `b`:
/// U odd powers, V even powers, result = (V − U)⁻¹(V + U).
fn pade_eval(a: &DMatrix<f64>, b: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    // Horner over even powers.
    let mut u_even = &id * b[1];
    let mut v = &id * b[0];
    let mut power = id.clone();
    for k in (2..b.len()).step_by(2) {
        power = &power * &a2;
        v += &power * b[k];
        if k + 1 < b.len() {
            u_even += &power * b[k + 1];
        }
    }
    let u = a * u_even;
    solve_dense(&(&v - &u), &(&v + &u))
}

fn pade13_eval(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let b = &PADE13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u = a * (&a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    solve_dense(&(&v - &u), &(&v + &u))
}

fn solve_dense(lhs: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    lhs.clone()
        .lu()
        .solve(rhs)
        .expect("Padé denominator must be invertible")
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solve the continuous Lyapunov equation γσ + σγᵀ = q by Kronecker
/// vectorization. Dimensions are at most 12 here, so a dense LU on the
/// n²×n² system is the whole story.
pub fn solve_lyapunov(gamma: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = gamma.nrows();
    assert_eq!(q.nrows(), n);
    assert_eq!(q.ncols(), n);
    let nn = n * n;
    // vec(γσ) = (I ⊗ γ) vec(σ), vec(σγᵀ) = (γ ⊗ I) vec(σ), column-major vec.
    let mut big = DMatrix::<f64>::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                // (I ⊗ γ): block-diagonal copies of γ.
                big[(j * n + i, j * n + k)] += gamma[(i, k)];
                // (γ ⊗ I): γ[j][k] scattering identity blocks.
                big[(j * n + i, k * n + i)] += gamma[(j, k)];
            }
        }
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(nn);
    for j in 0..n {
        for i in 0..n {
            rhs[j * n + i] = q[(i, j)];
        }
    }
    let sol = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| OpoError::InvalidParams("singular Lyapunov operator".into()))?;
    let mut sigma = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            sigma[(i, j)] = sol[j * n + i];
        }
    }
    // Symmetry is exact in the algebra; enforce it against roundoff.
    let sym = (&sigma + sigma.transpose()) * 0.5;
    Ok(sym)
}

/// Integrate σ' = 2D − γσ − σγᵀ, σ(0) = 0, up to time `t` with an embedded
/// Dormand–Prince 4(5) pair, absolute tolerance `tol` per entry. Valid for
/// any γ, stable or not.
pub fn lyapunov_ode(gamma: &DMatrix<f64>, diffusion: &DMatrix<f64>, t: f64, tol: f64) -> DMatrix<f64> {
    let n = gamma.nrows();
    let mut sigma = DMatrix::<f64>::zeros(n, n);
    if t == 0.0 {
        return sigma;
    }
    let rhs = |s: &DMatrix<f64>| -> DMatrix<f64> {
        let gs = gamma * s;
        diffusion * 2.0 - &gs - gs.transpose()
    };

    let mut time = 0.0;
    // Initial step from the drift scale.
    let scale = one_norm(gamma).max(1.0 / t);
    let mut h = (0.1 / scale).min(t);
    let mut k1 = rhs(&sigma);

    while time < t {
        if time + h > t {
            h = t - time;
        }
        let k2 = rhs(&(&sigma + &k1 * (h * A21)));
        let k3 = rhs(&(&sigma + &k1 * (h * A31) + &k2 * (h * A32)));
        let k4 = rhs(&(&sigma + &k1 * (h * A41) + &k2 * (h * A42) + &k3 * (h * A43)));
        let k5 = rhs(&(&sigma + &k1 * (h * A51) + &k2 * (h * A52) + &k3 * (h * A53) + &k4 * (h * A54)));
        let k6 = rhs(
            &(&sigma + &k1 * (h * A61) + &k2 * (h * A62) + &k3 * (h * A63) + &k4 * (h * A64) + &k5 * (h * A65)),
        );
        let y5 = &sigma + &k1 * (h * B1) + &k3 * (h * B3) + &k4 * (h * B4) + &k5 * (h * B5) + &k6 * (h * B6);
        let k7 = rhs(&y5);
        let err_mat = &k1 * (h * (B1 - B4TH1))
            + &k3 * (h * (B3 - B4TH3))
            + &k4 * (h * (B4 - B4TH4))
            + &k5 * (h * (B5 - B4TH5))
            + &k6 * (h * (B6 - B4TH6))
            + &k7 * (h * (0.0 - B4TH7));
        let err = err_mat.iter().fold(0.0f64, |m, x| m.max(x.abs()));

        if err <= tol || h <= 1e-14 * t {
            time += h;
            sigma = y5;
            k1 = k7; // FSAL
        }
        let factor = if err > 0.0 { 0.9 * (tol / err).powf(0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
    }
    (&sigma + sigma.transpose()) * 0.5
}

// Dormand–Prince coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const B4TH1: f64 = 5179.0 / 57600.0;
const B4TH3: f64 = 7571.0 / 16695.0;
const B4TH4: f64 = 393.0 / 640.0;
const B4TH5: f64 = -92097.0 / 339200.0;
const B4TH6: f64 = 187.0 / 2100.0;
const B4TH7: f64 = 1.0 / 40.0;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expm_zero_is_identity() {
        let z = DMatrix::<f64>::zeros(4, 4);
        let e = expm(&z);
        assert_relative_eq!(e, DMatrix::identity(4, 4), epsilon = 1e-15);
    }

    #[test]
    fn expm_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![-0.001, 2.0, -7.5]);
        let e = expm(&a);
        for (i, lam) in [-0.001f64, 2.0, -7.5].iter().enumerate() {
            assert_relative_eq!(e[(i, i)], lam.exp(), max_relative = 1e-13);
        }
        assert_relative_eq!(e[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn expm_hyperbolic_block() {
        // exp of [[0, χt], [χt, 0]] = [[cosh, sinh], [sinh, cosh]].
        let xt = 0.37;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, xt, xt, 0.0]);
        let e = expm(&a);
        assert_relative_eq!(e[(0, 0)], xt.cosh(), max_relative = 1e-13);
        assert_relative_eq!(e[(0, 1)], xt.sinh(), max_relative = 1e-13);
        assert_relative_eq!(e[(1, 0)], xt.sinh(), max_relative = 1e-13);
    }

    #[test]
    fn expm_large_norm_squares_correctly() {
        let a = DMatrix::from_row_slice(2, 2, &[-30.0, 4.0, 0.0, -10.0]);
        let e = expm(&a);
        // Triangular: e[(1,1)] = exp(-10), e[(0,0)] = exp(-30),
        // e[(0,1)] = 4 (exp(-10) - exp(-30)) / 20.
        assert_relative_eq!(e[(1, 1)], (-10.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(e[(0, 0)], (-30.0f64).exp(), max_relative = 1e-10);
        let expect01 = 4.0 * ((-10.0f64).exp() - (-30.0f64).exp()) / 20.0;
        assert_relative_eq!(e[(0, 1)], expect01, max_relative = 1e-12);
    }

    #[test]
    fn lyapunov_solve_matches_scalar() {
        // γ = κ, q = 2 D with D = κ/4: σ = 1/4.
        let gamma = DMatrix::from_element(1, 1, 0.7);
        let q = DMatrix::from_element(1, 1, 2.0 * 0.7 / 4.0);
        let s = solve_lyapunov(&gamma, &q).unwrap();
        assert_relative_eq!(s[(0, 0)], 0.25, max_relative = 1e-14);
    }

    #[test]
    fn lyapunov_ode_matches_scalar_closed_form() {
        // Single damped quadrature: σ(t) = (1 - e^{-2κt})/4.
        let kappa = 1.3;
        let gamma = DMatrix::from_element(1, 1, kappa);
        let d = DMatrix::from_element(1, 1, kappa / 4.0);
        for &t in &[0.0, 0.05, 0.9, 4.0] {
            let s = lyapunov_ode(&gamma, &d, t, 1e-12);
            let expect = (1.0 - (-2.0 * kappa * t).exp()) / 4.0;
            assert_relative_eq!(s[(0, 0)], expect, epsilon = 1e-11);
        }
    }

    #[test]
    fn lyapunov_ode_agrees_with_direct_quadrature() {
        // Independent route: Simpson quadrature of 2 G(τ) D Gᵀ(τ).
        let gamma = DMatrix::from_row_slice(2, 2, &[1.0, -0.6, -0.6, 1.2]);
        let d = DMatrix::from_diagonal(&nalgebra::dvector![0.25, 0.3]);
        let t = 0.8;
        let n = 400;
        let h = t / n as f64;
        let mut quad = DMatrix::<f64>::zeros(2, 2);
        for k in 0..=n {
            let tau = k as f64 * h;
            let g = expm(&(-&gamma * tau));
            let integrand = &g * &d * g.transpose() * 2.0;
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            quad += integrand * (w * h / 3.0);
        }
        let s = lyapunov_ode(&gamma, &d, t, 1e-12);
        assert_relative_eq!(s, quad, epsilon = 1e-9);
    }

    #[test]
    fn lyapunov_ode_reaches_lyapunov_fixed_point() {
        let gamma = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0]);
        let d = DMatrix::from_diagonal(&nalgebra::dvector![0.25, 0.25]);
        let s_inf = solve_lyapunov(&gamma, &(&d * 2.0)).unwrap();
        let s_late = lyapunov_ode(&gamma, &d, 40.0, 1e-12);
        assert_relative_eq!(s_late, s_inf, epsilon = 1e-9);
    }
}
