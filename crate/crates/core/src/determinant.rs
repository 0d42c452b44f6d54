//! `D_N = det(β·I + A_N)` by three independent routes, and the
//! channel-information integrand built on it.
//!
//! - [`det_direct`]: Cholesky factorization, accumulated in log space.
//! - [`det_closed_form`]: sum over all index subsets `s₁ < … < s_i` of
//!   `β^(N-i) · Π(1 - α^(2(s_{k+1}-s_k))) · Π|x_s|²`.
//! - [`det_recursive`]: the zero-run recursion over consecutive nonzero
//!   symbols, carried as ratios `D_j / D_{j-1}` so it never overflows.
//!
//! With `β = σ_Z²/σ_G²`, `det(I + (σ_G²/σ_Z²)·A_N) = D_N / β^N`.

use crate::channel_model::{alpha_powers, fill_shifted_a, ChannelSpec};
use crate::linalg::{cholesky_in_place, ln_det_from_factor};
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::LOG2_E;

/// Largest block the subset expansion accepts (2²⁰ subsets).
pub const CLOSED_FORM_MAX_N: usize = 20;

/// Arguments shared by the determinant routes.
#[derive(Debug, Clone, Copy)]
pub struct DetInputs<'a> {
    x: &'a [Complex64],
    alpha: f64,
    beta: f64,
}

impl<'a> DetInputs<'a> {
    pub fn new(x: &'a [Complex64], alpha: f64, beta: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidParameter("determinant needs N >= 1".into()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { x, alpha, beta })
    }

    pub fn from_spec(x: &'a [Complex64], spec: &ChannelSpec) -> Result<Self> {
        Self::new(x, spec.alpha(), spec.beta())
    }

    pub fn x(&self) -> &'a [Complex64] {
        self.x
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// A positive determinant held as its base-2 logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Determinant {
    pub log2: f64,
}

impl Determinant {
    pub fn from_log2(log2: f64) -> Self {
        Self { log2 }
    }

    pub fn value(&self) -> f64 {
        self.log2.exp2()
    }
}

/// Cholesky factorization of `β·I + A_N`.
pub fn det_direct(inputs: DetInputs<'_>) -> Result<Determinant> {
    let n = inputs.x.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    fill_shifted_a(inputs.x, &alpha_powers(inputs.alpha, n), 1.0, inputs.beta, &mut buf);
    cholesky_in_place(n, &mut buf)?;
    Ok(Determinant::from_log2(ln_det_from_factor(n, &buf) * LOG2_E))
}

/// Subset expansion, enumerated by bitmask. Every term is nonnegative.
pub fn det_closed_form(inputs: DetInputs<'_>) -> Result<Determinant> {
    let n = inputs.x.len();
    if n > CLOSED_FORM_MAX_N {
        return Err(Error::SizeCap {
            n,
            max: CLOSED_FORM_MAX_N,
        });
    }
    // Work with u_k = |x_k|²/β so that D_N = β^N · Σ_S Π u_s Π(1 - α^(2·gap)).
    let u: Vec<f64> = inputs.x.iter().map(|v| v.norm_sqr() / inputs.beta).collect();
    let alpha2 = inputs.alpha * inputs.alpha;
    let gap_factor: Vec<f64> = (0..n).map(|d| 1.0 - alpha2.powi(d as i32)).collect();

    let mut sum = 0.0;
    for mask in 0u32..(1u32 << n) {
        let mut term = 1.0;
        let mut prev: Option<usize> = None;
        let mut bits = mask;
        while bits != 0 {
            let s = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            term *= u[s];
            if let Some(p) = prev {
                term *= gap_factor[s - p];
            }
            if term == 0.0 {
                break;
            }
            prev = Some(s);
        }
        sum += term;
    }
    Ok(Determinant::from_log2(n as f64 * inputs.beta.log2() + sum.log2()))
}

/// The zero-run recursion.
///
/// Let `p < j` be the previous nonzero symbol and `k = j - p`. The leading
/// minors satisfy
///
/// ```text
/// D_j = β^k·D_p + (1-α^{2k})·β^{k-1}·|x_j|²·D_p
///       + (α^{2k}·|x_j|²/|x_p|²)·(β^k·D_p - β^{k+1}·D_{p-1})
/// ```
///
/// and a zero symbol contributes `D_j = β·D_{j-1}`. Dividing through by
/// `D_{j-1} = β^{k-1}·D_p` gives `R_j = D_j/D_{j-1} = β + |x_j|²·q_j` with
/// `q_j = (1-α^{2k}) + α^{2k}·β·q_p/R_p`, where `q_p = (R_p - β)/|x_p|²`
/// is carried forward instead of recomputed by a cancelling subtraction.
///
/// The first nonzero symbol gives `R = β + |x|²`. When the previous nonzero
/// symbol is `x_1` (the recursion needs `j ≥ k+2`), the two-endpoint form
/// `D_j = β^j + β^{j-1}(|x_1|²+|x_j|²) + β^{j-2}(1-α^{2(j-1)})|x_1|²|x_j|²`
/// is used directly.
pub fn det_recursive(inputs: DetInputs<'_>) -> Determinant {
    let beta = inputs.beta;
    let alpha2 = inputs.alpha * inputs.alpha;

    struct Pivot {
        index: usize,
        u: f64,
        ratio: f64,
        q: f64,
    }

    let mut log2_det = 0.0;
    let mut prev: Option<Pivot> = None;
    for (j, xj) in inputs.x.iter().enumerate() {
        let u = xj.norm_sqr();
        if u == 0.0 {
            log2_det += beta.log2();
            continue;
        }
        let (ratio, q) = match &prev {
            None => (beta + u, 1.0),
            Some(p) => {
                let k = (j - p.index) as i32;
                let decay = alpha2.powi(k);
                if p.index == 0 {
                    let u1 = p.u;
                    let ratio = (beta * beta + beta * (u1 + u) + (1.0 - decay) * u1 * u) / (beta + u1);
                    let q = (beta + (1.0 - decay) * u1) / (beta + u1);
                    (ratio, q)
                } else {
                    let q = (1.0 - decay) + decay * beta * p.q / p.ratio;
                    (beta + u * q, q)
                }
            }
        };
        log2_det += ratio.log2();
        prev = Some(Pivot {
            index: j,
            u,
            ratio,
            q,
        });
    }
    Determinant::from_log2(log2_det)
}

/// `log₂ det(I + (σ_G²/σ_Z²)·A_N)`, the channel information carried by one
/// input block.
pub fn channel_info_integrand(x: &[Complex64], spec: &ChannelSpec) -> Result<f64> {
    LogDetWorkspace::new(spec).channel_info(x)
}

/// Reusable buffers for evaluating [`channel_info_integrand`] many times.
#[derive(Debug, Clone)]
pub struct LogDetWorkspace {
    n: usize,
    snr_weight: f64,
    pows: Vec<f64>,
    buf: Vec<Complex64>,
}

impl LogDetWorkspace {
    pub fn new(spec: &ChannelSpec) -> Self {
        let n = spec.block_len();
        Self {
            n,
            snr_weight: spec.sigma_g2() / spec.sigma_z2(),
            pows: alpha_powers(spec.alpha(), n),
            buf: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn channel_info(&mut self, x: &[Complex64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        fill_shifted_a(x, &self.pows, self.snr_weight, 1.0, &mut self.buf);
        cholesky_in_place(self.n, &mut self.buf)?;
        Ok((ln_det_from_factor(self.n, &self.buf) * LOG2_E).max(0.0))
    }
}
