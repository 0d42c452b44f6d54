//! Quadrature and elimination references for the library's closed forms.

use crate::quad::{integrate, integrate_to_infinity, Tolerance};
use num_complex::Complex64;
use std::f64::consts::{LOG2_E, PI};

/// E₁(x) as `∫₀^∞ exp(-x·eʷ) dw`, the substitution `u = x·eʷ` of the
/// defining integral. The integrand is smooth and decays double-exponentially.
pub fn e1_by_quadrature(x: f64) -> f64 {
    assert!(x > 0.0);
    // Beyond x·eʷ = 800 the integrand is below f64 underflow.
    let upper = (800.0 / x).ln().max(1.0);
    let (v, _) = integrate(|w| (-x * w.exp()).exp(), 0.0, upper, Tolerance::relative(1e-14));
    v
}

/// `E log₂(1 + ρ·T)` for `T ~ Exp(1)`: the Rayleigh ergodic rate at SNR ρ.
pub fn rayleigh_rate_by_quadrature(rho: f64) -> f64 {
    let (v, _) = integrate_to_infinity(
        |t| (-t).exp() * (rho * t).ln_1p(),
        0.0,
        Tolerance::relative(1e-13),
    );
    v * LOG2_E
}

/// Entropy (bits) of `Y = G·X + Z` for a single symbol with i.i.d. complex
/// Gaussian `G`, `X`, `Z`. Radial symmetry reduces the plane integral to one
/// over `r = |y|²`; the density itself is an integral over `t = |x|²/σ_X²`.
pub fn entropy_y_scalar_gaussian(sigma_g2: f64, sigma_x2: f64, sigma_z2: f64) -> f64 {
    let gain = sigma_g2 * sigma_x2;
    let density = move |r: f64| -> f64 {
        let (v, _) = integrate_to_infinity(
            |t| {
                let var = sigma_z2 + gain * t;
                (-t - r / var).exp() / (PI * var)
            },
            0.0,
            Tolerance::relative(1e-12).with_abs(1e-300),
        );
        v
    };
    radial_entropy(density, sigma_z2 + gain, 1)
}

/// Entropy (bits, whole block) of `Y = g·X + Z` over `n` symbols sharing one
/// Rayleigh gain `g`, with i.i.d. complex Gaussian `X` and `Z`. Given `g` the
/// block is white with variance `σ_Z² + |g|²σ_X²`, so the density depends on
/// `|y|²` alone and is a single integral over `t = |g|²/σ_G²`.
pub fn entropy_y_coherent_gaussian(n: usize, sigma_g2: f64, sigma_x2: f64, sigma_z2: f64) -> f64 {
    let gain = sigma_g2 * sigma_x2;
    let nf = n as f64;
    let density = move |r: f64| -> f64 {
        let (v, _) = integrate_to_infinity(
            |t| {
                let var = sigma_z2 + gain * t;
                (-t - r / var - nf * (PI * var).ln()).exp()
            },
            0.0,
            Tolerance::relative(1e-12).with_abs(1e-300),
        );
        v
    };
    radial_entropy(density, nf * (sigma_z2 + gain), n)
}

/// Entropy (bits) of a single received symbol for a discrete input with
/// Rayleigh gain: a finite mixture of circular Gaussians in `y`.
pub fn entropy_y_scalar_discrete(
    points: &[Complex64],
    probs: &[f64],
    sigma_g2: f64,
    sigma_z2: f64,
) -> f64 {
    let comps: Vec<(f64, f64)> = points
        .iter()
        .zip(probs)
        .map(|(c, &p)| (p, sigma_z2 + sigma_g2 * c.norm_sqr()))
        .collect();
    let power: f64 = comps.iter().map(|(p, v)| p * v).sum();
    let density = move |r: f64| -> f64 {
        comps
            .iter()
            .map(|&(p, var)| p * (-r / var).exp() / (PI * var))
            .sum()
    };
    radial_entropy(density, power, 1)
}

// -∫ p log₂ p over ℂⁿ for a spherically symmetric density given as a
// function of r = |y|². The shell at r has measure πⁿ rⁿ⁻¹/(n-1)! dr.
fn radial_entropy<F: Fn(f64) -> f64>(density: F, scale: f64, n: usize) -> f64 {
    let ln_shell = n as f64 * PI.ln() - (1..n).map(|k| (k as f64).ln()).sum::<f64>();
    let (v, _) = integrate_to_infinity(
        |s| {
            let r = scale * s;
            let p = density(r);
            if p <= 0.0 {
                0.0
            } else {
                let shell = (ln_shell + (n as f64 - 1.0) * r.ln()).exp();
                -scale * shell * p * p.log2()
            }
        },
        0.0,
        Tolerance::relative(1e-11).with_abs(1e-12),
    );
    v
}

/// Determinant of a general complex square matrix (row-major) by Gaussian
/// elimination with partial pivoting.
pub fn complex_determinant(n: usize, entries: &[Complex64]) -> Complex64 {
    assert_eq!(entries.len(), n * n);
    let mut a = entries.to_vec();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .expect("nonempty");
        if a[pivot * n + col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for row in col + 1..n {
            let factor = a[row * n + col] / p;
            for k in col..n {
                let sub = factor * a[col * n + k];
                a[row * n + k] -= sub;
            }
        }
    }
    det
}
