//! Sequential Monte Carlo estimates of `ln p(y)` along one block.
//!
//! Both filters return the log of an unbiased estimate of `p(y)`. Weights
//! are resampled systematically whenever the effective sample size falls
//! below half the particle count.

use crate::channel_model::{complex_normal, ChannelSpec, InputSpec};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `ln Σ exp(v)` without overflow. `values` must be nonempty.
pub(super) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Shared weight bookkeeping.
struct Weights {
    log_w: Vec<f64>,
    scratch: Vec<f64>,
    ancestors: Vec<usize>,
}

impl Weights {
    fn new(k: usize) -> Self {
        Self {
            log_w: vec![0.0; k],
            scratch: vec![0.0; k],
            ancestors: vec![0; k],
        }
    }

    /// Fills `ancestors` by systematic resampling and resets the weights if
    /// the effective sample size is below `K/2`.
    fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let k = self.log_w.len();
        let max = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for (w, lw) in self.scratch.iter_mut().zip(&self.log_w) {
            *w = (lw - max).exp();
            sum += *w;
            sum_sq += *w * *w;
        }
        if sum * sum >= 0.5 * k as f64 * sum_sq {
            return false;
        }
        let step = sum / k as f64;
        let mut target = rng.random::<f64>() * step;
        let (mut acc, mut src) = (self.scratch[0], 0);
        for slot in self.ancestors.iter_mut() {
            while acc < target && src + 1 < k {
                src += 1;
                acc += self.scratch[src];
            }
            *slot = src;
            target += step;
        }
        self.log_w.fill(0.0);
        true
    }
}

fn gather<T: Copy>(values: &mut [T], spare: &mut [T], ancestors: &[usize]) {
    for (dst, &a) in spare.iter_mut().zip(ancestors) {
        *dst = values[a];
    }
    values.copy_from_slice(spare);
}

/// Gain particles for Gaussian inputs: given `g_i`, `y_i ~ CN(0, σ_X²|g_i|² + σ_Z²)`.
struct GainFilter {
    sigma_x2: f64,
    gains: Vec<Complex64>,
    spare: Vec<Complex64>,
}

/// Symbol-path particles for discrete inputs. Given the path, the gains are
/// a linear Gaussian state, so each particle carries the Kalman mean and
/// variance of `g_i`. Each step draws the next symbol from its exact
/// conditional given the particle, which makes `N = 1` exact.
struct SymbolFilter {
    points: Vec<Complex64>,
    ln_probs: Vec<f64>,
    logs: Vec<f64>,
    mean: Vec<Complex64>,
    var: Vec<f64>,
    spare_mean: Vec<Complex64>,
    spare_var: Vec<f64>,
}

enum Kind {
    Gains(GainFilter),
    Symbols(SymbolFilter),
}

pub(super) struct BlockFilter {
    alpha: f64,
    sigma_g2: f64,
    sigma_z2: f64,
    weights: Weights,
    kind: Kind,
}

impl BlockFilter {
    /// `None` for fixed blocks, whose density is known exactly.
    pub fn new(input: &InputSpec, spec: &ChannelSpec, k: usize) -> Option<Self> {
        let kind = match input {
            InputSpec::IidGaussian { sigma_x2 } => Kind::Gains(GainFilter {
                sigma_x2: *sigma_x2,
                gains: vec![ZERO; k],
                spare: vec![ZERO; k],
            }),
            InputSpec::IidDiscrete { points, probs, .. } => Kind::Symbols(SymbolFilter {
                points: points.clone(),
                ln_probs: probs.iter().map(|p| p.ln()).collect(),
                logs: vec![0.0; points.len()],
                mean: vec![ZERO; k],
                var: vec![0.0; k],
                spare_mean: vec![ZERO; k],
                spare_var: vec![0.0; k],
            }),
            InputSpec::FixedBlock { .. } => return None,
        };
        Some(Self {
            alpha: spec.alpha(),
            sigma_g2: spec.sigma_g2(),
            sigma_z2: spec.sigma_z2(),
            weights: Weights::new(k),
            kind,
        })
    }

    pub fn ln_marginal<R: Rng + ?Sized>(&mut self, y: &[Complex64], rng: &mut R) -> f64 {
        let k = self.weights.log_w.len();
        self.weights.log_w.fill(0.0);
        let mut ln_total = (k as f64).ln();
        let mut ln_p = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            match &mut self.kind {
                Kind::Gains(f) => f.step(i, yi, self.alpha, self.sigma_g2, self.sigma_z2, &mut self.weights, rng),
                Kind::Symbols(f) => f.step(i, yi, self.alpha, self.sigma_g2, self.sigma_z2, &mut self.weights, rng),
            }
            let ln_new = log_sum_exp(&self.weights.log_w);
            ln_p += ln_new - ln_total;
            ln_total = ln_new;
            if i + 1 < y.len() && self.weights.resample(rng) {
                ln_total = (k as f64).ln();
                let a = &self.weights.ancestors;
                match &mut self.kind {
                    Kind::Gains(f) => gather(&mut f.gains, &mut f.spare, a),
                    Kind::Symbols(f) => {
                        gather(&mut f.mean, &mut f.spare_mean, a);
                        gather(&mut f.var, &mut f.spare_var, a);
                    }
                }
            }
        }
        ln_p
    }
}

impl GainFilter {
    #[allow(clippy::too_many_arguments)]
    fn step<R: Rng + ?Sized>(
        &mut self,
        i: usize,
        y: Complex64,
        alpha: f64,
        sigma_g2: f64,
        sigma_z2: f64,
        w: &mut Weights,
        rng: &mut R,
    ) {
        let innovation = (1.0 - alpha * alpha).sqrt();
        let (r, sx2) = (y.norm_sqr(), self.sigma_x2);
        for (g, lw) in self.gains.iter_mut().zip(w.log_w.iter_mut()) {
            if i == 0 {
                *g = complex_normal(rng, sigma_g2);
            } else if alpha != 1.0 {
                *g = *g * alpha + complex_normal(rng, sigma_g2) * innovation;
            }
            let v = sx2 * g.norm_sqr() + sigma_z2;
            *lw += -(PI * v).ln() - r / v;
        }
    }
}

impl SymbolFilter {
    #[allow(clippy::too_many_arguments)]
    fn step<R: Rng + ?Sized>(
        &mut self,
        i: usize,
        y: Complex64,
        alpha: f64,
        sigma_g2: f64,
        sigma_z2: f64,
        w: &mut Weights,
        rng: &mut R,
    ) {
        for j in 0..self.mean.len() {
            let (m, p) = match i {
                0 => (ZERO, sigma_g2),
                _ => (self.mean[j] * alpha, alpha * alpha * self.var[j] + (1.0 - alpha * alpha) * sigma_g2),
            };
            for ((slot, c), lp) in self.logs.iter_mut().zip(&self.points).zip(&self.ln_probs) {
                let s = c.norm_sqr() * p + sigma_z2;
                *slot = lp - (PI * s).ln() - (y - c * m).norm_sqr() / s;
            }
            let la = log_sum_exp(&self.logs);
            w.log_w[j] += la;

            // Draw the symbol from its conditional given y_i and this path.
            let mut u = rng.random::<f64>();
            let mut pick = self.points.len() - 1;
            for (idx, l) in self.logs.iter().enumerate() {
                u -= (l - la).exp();
                if u < 0.0 {
                    pick = idx;
                    break;
                }
            }
            let c = self.points[pick];
            let s = c.norm_sqr() * p + sigma_z2;
            let gain = c.conj() * (p / s);
            self.mean[j] = m + gain * (y - c * m);
            self.var[j] = p * sigma_z2 / s;
        }
    }
}
