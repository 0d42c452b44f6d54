//! Exponential integral and the closed-form Rayleigh rates.
//!
//! With `ρ = σ_G²σ_X²/σ_Z²`:
//!
//! - `R_s(ρ) = log₂(e)·e^{1/ρ}·E₁(1/ρ)`, the i.i.d. Gaussian rate with
//!   perfect receiver CSI, equal to `E log₂(1 + |G|²σ_X²/σ_Z²)`;
//! - `C₀(ρ) = log₂(1 + ρ)`;
//! - `Δ(ρ) = C₀ - R_s`, increasing to `γ·log₂ e` as `ρ → ∞`.

use crate::{Error, Result};
use std::f64::consts::LOG2_E;

/// Euler-Mascheroni constant, 0.57721566490153286061 (20 significant digits).
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const SERIES_CROSSOVER: f64 = 1.0;
const SERIES_TOL: f64 = 1e-16;
const CF_TOL: f64 = 1e-16;
const CF_MAX_ITER: usize = 10_000;

/// An SNR value `ρ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SnrPoint(f64);

impl SnrPoint {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0) || rho.is_nan() {
            return Err(Error::Domain(format!("SNR must be positive, got {rho}")));
        }
        Ok(Self(rho))
    }

    pub fn rho(&self) -> f64 {
        self.0
    }
}

/// `E₁(x) = ∫_x^∞ e^{-u}/u du` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_positive(x)?;
    Ok(if x <= SERIES_CROSSOVER {
        e1_series(x)
    } else {
        (-x).exp() * scaled_e1_continued_fraction(x)
    })
}

/// `e^x·E₁(x)`, which stays representable where `E₁` itself underflows.
pub fn scaled_exp_integral_e1(x: f64) -> Result<f64> {
    check_positive(x)?;
    Ok(if x <= SERIES_CROSSOVER {
        x.exp() * e1_series(x)
    } else {
        scaled_e1_continued_fraction(x)
    })
}

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("E1 needs x > 0, got {x}")))
    }
}

/// `-γ - ln x - Σ_{n≥1} (-x)ⁿ/(n!·n)`.
pub(crate) fn e1_series(x: f64) -> f64 {
    let lead = -EULER_GAMMA - x.ln();
    let mut sum = 0.0;
    // power = (-x)^n / n!
    let mut power = 1.0;
    for n in 1..200 {
        let nf = n as f64;
        power *= -x / nf;
        let term = power / nf;
        sum += term;
        if term.abs() < SERIES_TOL * (lead - sum).abs() {
            break;
        }
    }
    lead - sum
}

/// `e^x·E₁(x)` from the continued fraction
/// `1/(x+1-1/(x+3-4/(x+5-…)))`, evaluated with the modified Lentz method.
pub(crate) fn scaled_e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < CF_TOL {
            break;
        }
    }
    h
}

/// `R_s(ρ) = log₂(e)·e^{1/ρ}·E₁(1/ρ)` in bits per symbol.
pub fn rate_csi_gaussian(p: SnrPoint) -> f64 {
    LOG2_E * scaled_exp_integral_e1(1.0 / p.rho()).expect("1/ρ is positive")
}

/// `C₀(ρ) = log₂(1 + ρ)`.
pub fn awgn_capacity(p: SnrPoint) -> f64 {
    p.rho().ln_1p() * LOG2_E
}

/// `Δ(ρ) = C₀(ρ) - R_s(ρ)`.
pub fn delta(p: SnrPoint) -> f64 {
    awgn_capacity(p) - rate_csi_gaussian(p)
}

/// `lim_{ρ→∞} Δ(ρ) = γ·log₂ e ≈ 0.8327 bits`.
pub fn delta_limit() -> f64 {
    EULER_GAMMA * LOG2_E
}

/// Upper bound on `|Δ(ρ) - γ·log₂ e|` from splitting `Δ` into
/// `γ·e^{1/ρ}·log₂ e + log₂((1+ρ)/ρ^{e^{1/ρ}}) + e^{1/ρ}·log₂ e·Σ(-1)ⁿ/(ρⁿ n! n)`
/// and bounding the alternating sum by `e^{1/ρ} - 1`.
pub fn delta_limit_gap_bound(p: SnrPoint) -> f64 {
    let inv = 1.0 / p.rho();
    let growth = inv.exp_m1();
    let e_inv = inv.exp();
    let log_term = (p.rho().ln_1p() - e_inv * p.rho().ln()) * LOG2_E;
    EULER_GAMMA * LOG2_E * growth + log_term.abs() + e_inv * LOG2_E * growth
}

#[cfg(test)]
mod tests {
    use super::*;
    use gmfade_oracle::{e1_by_quadrature, rayleigh_rate_by_quadrature};

    fn snr(r: f64) -> SnrPoint {
        SnrPoint::new(r).unwrap()
    }

    #[test]
    fn e1_at_one() {
        let want = e1_by_quadrature(1.0);
        assert!((want - 0.219_383_93).abs() < 1e-8);
        assert!((exp_integral_e1(1.0).unwrap() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn e1_small_argument() {
        let x = 1e-8;
        assert!((exp_integral_e1(x).unwrap() - (-EULER_GAMMA - x.ln())).abs() <= 1e-7);
    }

    #[test]
    fn e1_large_argument() {
        let x = 1e3;
        let v = x * scaled_exp_integral_e1(x).unwrap();
        assert!((v - 1.0).abs() < 1e-3);
        // E₁ itself underflows here; the scaled form carries the value.
        assert_eq!(exp_integral_e1(1e3).unwrap(), 0.0);
    }

    #[test]
    fn e1_domain() {
        assert!(exp_integral_e1(0.0).is_err());
        assert!(exp_integral_e1(-1.0).is_err());
        assert!(scaled_exp_integral_e1(f64::NAN).is_err());
        assert!(SnrPoint::new(0.0).is_err());
        assert!(SnrPoint::new(-3.0).is_err());
    }

    #[test]
    fn branches_agree_on_crossover_interval() {
        for i in 0..=60 {
            let x = 0.5 + 1.5 * i as f64 / 60.0;
            let s = e1_series(x);
            let cf = (-x).exp() * scaled_e1_continued_fraction(x);
            assert!((s - cf).abs() < 1e-10 * s, "x={x}: {s} vs {cf}");
        }
    }

    #[test]
    fn e1_matches_quadrature_on_log_grid() {
        for i in 0..50 {
            let x = 1e-6 * (50.0f64 / 1e-6).powf(i as f64 / 49.0);
            let want = e1_by_quadrature(x);
            let got = exp_integral_e1(x).unwrap();
            assert!((got - want).abs() <= 1e-9 * want, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn rate_at_ten() {
        let want = rayleigh_rate_by_quadrature(10.0);
        let got = rate_csi_gaussian(snr(10.0));
        assert!((got - want).abs() < 1e-10);
        assert!((got - 2.907).abs() < 1e-3);
    }

    #[test]
    fn rate_below_awgn_and_vanishing() {
        let mut prev = 0.0;
        for k in -12..=12 {
            let p = snr(10f64.powf(k as f64 / 2.0));
            let rs = rate_csi_gaussian(p);
            assert!(rs < awgn_capacity(p));
            assert!(rs > prev);
            prev = rs;
        }
        assert!(rate_csi_gaussian(snr(1e-9)) < 2e-9);
    }

    #[test]
    fn awgn_values() {
        assert!((awgn_capacity(snr(1.0)) - 1.0).abs() < 1e-15);
        assert!((awgn_capacity(snr(3.0)) - 2.0).abs() < 1e-15);
        assert!((awgn_capacity(snr(10.0)) - 3.4594).abs() < 1e-4);
    }

    #[test]
    fn delta_values() {
        assert!(delta(snr(1e-6)) < 1e-11);
        assert!((delta(snr(10.0)) - 0.553).abs() < 1e-3);
        assert!((delta(snr(1e6)) - 0.832_746_2).abs() < 1e-3);
        assert!((delta(snr(1e4)) - delta_limit()).abs() < 2e-2);
    }

    #[test]
    fn delta_limit_value() {
        let v = delta_limit();
        assert!(v > 0.832_746 && v < 0.832_747, "{v}");
    }

    #[test]
    fn delta_increasing() {
        let mut prev = 0.0;
        for i in 0..=90 {
            let d = delta(snr(1e-3 * 10f64.powf(i as f64 / 10.0)));
            assert!(d > prev, "step {i}");
            prev = d;
        }
    }

    #[test]
    fn limit_gap_within_bound() {
        for rho in [1e2, 1e3, 1e4, 1e5, 1e6, 1e8] {
            let p = snr(rho);
            let gap = (delta(p) - delta_limit()).abs();
            assert!(gap <= delta_limit_gap_bound(p), "rho={rho}");
        }
        assert!(delta_limit_gap_bound(snr(1e6)) < 1e-3);
    }
}
