//! Output entropies `h(Y)/N` and `h(Y|G)/N`.

use super::filter::{log_sum_exp, BlockFilter};
use super::{run_chunks, EntropyMethod, Estimate, EstimatorConfig, Quantity, RunningStats};
use crate::analytic::{rate_csi_gaussian, SnrPoint};
use crate::channel_model::{alpha_powers, complex_normal, fill_gains, fill_output, fill_shifted_a, ChannelSpec, InputSpec};
use crate::linalg::{cholesky_in_place, inv_quad_form, ln_det_from_factor};
use crate::streams::{derive_key, Role};
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::{LOG2_E, PI};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Scratch for evaluating `ln p(y|x)` with `p` the `CN(0, M_N(x))` density.
struct Conditional {
    n: usize,
    pows: Vec<f64>,
    sigma_g2: f64,
    sigma_z2: f64,
    m: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Conditional {
    fn new(spec: &ChannelSpec) -> Self {
        let n = spec.block_len();
        Self {
            n,
            pows: alpha_powers(spec.alpha(), n),
            sigma_g2: spec.sigma_g2(),
            sigma_z2: spec.sigma_z2(),
            m: vec![ZERO; n * n],
            scratch: vec![ZERO; n],
        }
    }

    /// Factors `M_N(x)` into the internal buffer.
    fn factor(&mut self, x: &[Complex64]) -> Result<f64> {
        fill_shifted_a(x, &self.pows, self.sigma_g2, self.sigma_z2, &mut self.m);
        cholesky_in_place(self.n, &mut self.m)?;
        Ok(ln_det_from_factor(self.n, &self.m))
    }

    /// `ln p(y|x)` for the most recently factored `x`.
    fn ln_density(&mut self, ln_det: f64, y: &[Complex64]) -> f64 {
        let q = inv_quad_form(self.n, &self.m, y, &mut self.scratch);
        -(self.n as f64) * PI.ln() - ln_det - q
    }

    fn ln_density_at(&mut self, x: &[Complex64], y: &[Complex64]) -> Result<f64> {
        let ln_det = self.factor(x)?;
        Ok(self.ln_density(ln_det, y))
    }
}

fn check_block_cap(spec: &ChannelSpec, cfg: &EstimatorConfig) -> Result<()> {
    if spec.block_len() > cfg.max_entropy_block_len {
        return Err(Error::BlockTooLong {
            n: spec.block_len(),
            max: cfg.max_entropy_block_len,
        });
    }
    Ok(())
}

/// Estimate of `h(Y)/N` in bits.
///
/// Each outer sample draws `x`, a gain block and noise to get `y`, then
/// estimates `ln p(y)` by the configured [`EntropyMethod`] with `K` inner
/// samples. Either way `p̂(y)` is unbiased, so `-log p̂(y)` overestimates
/// on average by an amount that shrinks with `K`. Fixed blocks use the
/// exact Gaussian density.
pub fn entropy_y(input: &InputSpec, spec: &ChannelSpec, cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.validate()?;
    check_block_cap(spec, cfg)?;
    let n = spec.block_len();
    let nf = n as f64;
    let sampler = input.sampler(n)?;
    let k = cfg.inner_samples;
    let ln_k = (k as f64).ln();
    let method = match sampler.is_fixed() {
        true => None,
        false => Some(cfg.entropy_method),
    };

    let stats = run_chunks(cfg, Quantity::EntropyY, |chunk| {
        let mut rx = chunk.rng(Role::Input);
        let mut rg = chunk.rng(Role::Gains);
        let mut rz = chunk.rng(Role::Noise);
        let mut ri = chunk.rng(Role::Inner);
        let mut cond = Conditional::new(spec);
        let mut filter = BlockFilter::new(input, spec, k);
        let (mut x, mut g, mut y) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
        let mut inner = vec![ZERO; n];
        let mut logs = vec![0.0; k];
        let mut stats = RunningStats::new();

        let fixed_ln_det = match method {
            None => {
                sampler.fill(&mut rx, &mut x);
                Some(cond.factor(&x)?)
            }
            Some(_) => None,
        };

        for _ in 0..chunk.len {
            sampler.fill(&mut rx, &mut x);
            fill_gains(spec, &mut rg, &mut g);
            fill_output(&x, &g, spec.sigma_z2(), &mut rz, &mut y);
            let ln_p = match (method, fixed_ln_det, filter.as_mut()) {
                (None, Some(ln_det), _) => cond.ln_density(ln_det, &y),
                (Some(EntropyMethod::ParticleFilter), _, Some(f)) => f.ln_marginal(&y, &mut ri),
                _ => {
                    for slot in logs.iter_mut() {
                        sampler.fill(&mut ri, &mut inner);
                        *slot = cond.ln_density_at(&inner, &y)?;
                    }
                    log_sum_exp(&logs) - ln_k
                }
            };
            stats.push(-ln_p * LOG2_E / nf);
        }
        Ok(stats)
    })?;
    Ok(Estimate::from_stats(&stats, Quantity::EntropyY))
}

/// `h(Y|G)/N` in bits, which equals `h(Y₁|G₁)` for i.i.d. inputs.
///
/// Gaussian inputs use the closed form `log₂(πeσ_Z²) + R_s(ρ)`. Discrete
/// inputs average the exact per-symbol constellation mixture
/// `-log₂ Σ_k p_k·p(y_i | g_i, c_k)` over `N` symbols per outer sample.
pub fn cond_entropy_y_given_g(input: &InputSpec, spec: &ChannelSpec, cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.validate()?;
    match input {
        InputSpec::IidGaussian { sigma_x2 } => {
            let rho = SnrPoint::new(spec.snr(*sigma_x2))?;
            Ok(Estimate::exact(
                spec.noise_entropy_per_symbol() + rate_csi_gaussian(rho),
                Quantity::CondEntropyYGivenG,
            ))
        }
        InputSpec::IidDiscrete { points, probs, .. } => discrete_cond_entropy(input, points, probs, spec, cfg),
        InputSpec::FixedBlock { .. } => Err(Error::UnsupportedInput(
            "h(Y|G) per-symbol reduction needs an i.i.d. input".into(),
        )),
    }
}

fn discrete_cond_entropy(
    input: &InputSpec,
    points: &[Complex64],
    probs: &[f64],
    spec: &ChannelSpec,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    let n = spec.block_len();
    let sampler = input.sampler(n)?;
    let s2 = spec.sigma_z2();
    let ln_norm = -(PI * s2).ln();
    let ln_probs: Vec<f64> = probs.iter().map(|p| p.ln()).collect();

    let stats = run_chunks(cfg, Quantity::CondEntropyYGivenG, |chunk| {
        let mut rx = chunk.rng(Role::Input);
        let mut rg = chunk.rng(Role::Gains);
        let mut rz = chunk.rng(Role::Noise);
        let (mut x, mut g, mut y) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
        let mut logs = vec![0.0; points.len()];
        let mut stats = RunningStats::new();
        for _ in 0..chunk.len {
            sampler.fill(&mut rx, &mut x);
            // Each G_i is marginally CN(0, σ_G²) whatever α is; drawing the
            // marginals keeps this estimate identical across an α grid.
            for gi in g.iter_mut() {
                *gi = complex_normal(&mut rg, spec.sigma_g2());
            }
            fill_output(&x, &g, s2, &mut rz, &mut y);
            let mut total = 0.0;
            for (yi, gi) in y.iter().zip(&g) {
                for ((slot, c), lp) in logs.iter_mut().zip(points).zip(&ln_probs) {
                    *slot = lp + ln_norm - (yi - gi * c).norm_sqr() / s2;
                }
                total -= log_sum_exp(&logs);
            }
            stats.push(total * LOG2_E / n as f64);
        }
        Ok(stats)
    })?;
    Ok(Estimate::from_stats(&stats, Quantity::CondEntropyYGivenG))
}

/// Result of re-running [`entropy_y`] with twice the inner samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCheck {
    pub base: Estimate,
    pub doubled: Estimate,
    /// `|base - doubled|` below three combined standard errors.
    pub converged: bool,
}

/// K-doubling diagnostic. The doubled run uses an independent stream family
/// so the two estimates can be compared with combined errors.
pub fn entropy_y_convergence(input: &InputSpec, spec: &ChannelSpec, cfg: &EstimatorConfig) -> Result<ConvergenceCheck> {
    let base = entropy_y(input, spec, cfg)?;
    let doubled_cfg = EstimatorConfig {
        inner_samples: cfg.inner_samples * 2,
        stream_key: derive_key(cfg.stream_key, &[0x2b]),
        ..*cfg
    };
    let doubled = entropy_y(input, spec, &doubled_cfg)?;
    let converged = base.agrees_with(&doubled, 3.0);
    Ok(ConvergenceCheck {
        base,
        doubled,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_model::ComplexBlock;
    use gmfade_oracle::{entropy_y_coherent_gaussian, entropy_y_scalar_discrete, entropy_y_scalar_gaussian};

    fn spec(alpha: f64, n: usize) -> ChannelSpec {
        ChannelSpec::new(alpha, 1.0, 1.0, n).unwrap()
    }

    #[test]
    fn zero_input_is_pure_noise() {
        let s = spec(0.3, 2);
        let zero = InputSpec::fixed_block(ComplexBlock::zeros(2));
        let est = entropy_y(&zero, &s, &EstimatorConfig::new(40_000, 1, 2)).unwrap();
        let want = s.noise_entropy_per_symbol();
        assert!((est.mean - want).abs() < 3.0 * est.std_error, "{est:?} vs {want}");
    }

    #[test]
    fn gaussian_entropy_below_white_bound() {
        let s = spec(0.0, 2);
        let input = InputSpec::iid_gaussian(1.0).unwrap();
        let est = entropy_y(&input, &s, &EstimatorConfig::new(20_000, 64, 4)).unwrap();
        let bound = (PI * std::f64::consts::E * 2.0).log2();
        assert!(est.mean <= bound + 3.0 * est.std_error, "{est:?} vs {bound}");
    }

    #[test]
    fn scalar_matches_quadrature() {
        let s = ChannelSpec::new(0.0, 1.0, 1.0, 1).unwrap();
        let cfg = EstimatorConfig::new(40_000, 256, 8);
        let g = InputSpec::iid_gaussian(10.0).unwrap();
        let est = entropy_y(&g, &s, &cfg).unwrap();
        let want = entropy_y_scalar_gaussian(1.0, 10.0, 1.0);
        assert!((est.mean - want).abs() < 3.0 * est.std_error + 1e-6, "{est:?} vs {want}");

        let q = InputSpec::qpsk(10.0).unwrap();
        let InputSpec::IidDiscrete { points, probs, .. } = &q else { unreachable!() };
        let want = entropy_y_scalar_discrete(points, probs, 1.0, 1.0);
        let est = entropy_y(&q, &s, &cfg).unwrap();
        assert!((est.mean - want).abs() < 3.0 * est.std_error + 1e-6, "{est:?} vs {want}");
    }

    #[test]
    fn coherent_block_matches_quadrature() {
        let input = InputSpec::iid_gaussian(10.0).unwrap();
        let est = entropy_y(&input, &spec(1.0, 4), &EstimatorConfig::new(20_000, 256, 21)).unwrap();
        let want = entropy_y_coherent_gaussian(4, 1.0, 10.0, 1.0) / 4.0;
        assert!((est.mean - want).abs() < 3.0 * est.std_error, "{est:?} vs {want}");
    }

    #[test]
    fn both_methods_agree_away_from_coherence() {
        let s = spec(0.5, 2);
        for input in [InputSpec::iid_gaussian(3.0).unwrap(), InputSpec::on_off(0.3, 3.0).unwrap()] {
            let cfg = EstimatorConfig::new(20_000, 256, 30);
            let a = entropy_y(&input, &s, &cfg).unwrap();
            let b = entropy_y(&input, &s, &cfg.with_entropy_method(EntropyMethod::InputMixture).with_seed(31)).unwrap();
            assert!(a.agrees_with(&b, 3.0), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn filter_resampling_keeps_estimate_finite() {
        // Long coherent-ish blocks at high SNR drive the weights degenerate.
        let input = InputSpec::qpsk(100.0).unwrap();
        let est = entropy_y(&input, &spec(0.99, 8), &EstimatorConfig::new(500, 64, 2)).unwrap();
        assert!(est.mean.is_finite() && est.std_error.is_finite());
        let bound = (PI * std::f64::consts::E * 101.0).log2();
        assert!(est.mean <= bound + 3.0 * est.std_error);
    }

    #[test]
    fn block_cap_enforced() {
        let input = InputSpec::iid_gaussian(1.0).unwrap();
        let err = entropy_y(&input, &spec(0.5, 9), &EstimatorConfig::new(10, 2, 0)).unwrap_err();
        assert!(matches!(err, Error::BlockTooLong { n: 9, max: 8 }));
    }

    #[test]
    fn gaussian_cond_entropy_closed_form() {
        let s = spec(0.4, 3);
        let input = InputSpec::iid_gaussian(10.0).unwrap();
        let est = cond_entropy_y_given_g(&input, &s, &EstimatorConfig::new(1, 1, 0)).unwrap();
        let want = s.noise_entropy_per_symbol() + rate_csi_gaussian(SnrPoint::new(10.0).unwrap());
        assert_eq!(est.mean, want);
        assert_eq!(est.n_samples, 0);
    }

    #[test]
    fn fixed_block_cond_entropy_rejected() {
        let input = InputSpec::fixed_block(ComplexBlock::zeros(2));
        let err = cond_entropy_y_given_g(&input, &spec(0.4, 2), &EstimatorConfig::new(1, 1, 0)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedInput(_)));
    }

    #[test]
    fn single_point_constellation() {
        let s = spec(0.5, 2);
        let cfg = EstimatorConfig::new(20_000, 1, 6);
        for amp in [1.0, 0.3, 0.01] {
            let input = InputSpec::iid_discrete(vec![Complex64::new(amp, 0.0)], vec![1.0], amp * amp).unwrap();
            let est = cond_entropy_y_given_g(&input, &s, &cfg).unwrap();
            // Single component: h = log₂(πeσ_Z²) in expectation, since y - g·c is pure noise.
            assert!((est.mean - s.noise_entropy_per_symbol()).abs() < 3.0 * est.std_error + 1e-12);
        }
    }

    #[test]
    fn qpsk_cond_entropy_alpha_free() {
        let input = InputSpec::qpsk(10.0).unwrap();
        let a = cond_entropy_y_given_g(&input, &spec(0.0, 4), &EstimatorConfig::new(20_000, 1, 1)).unwrap();
        let b = cond_entropy_y_given_g(&input, &spec(0.9, 4), &EstimatorConfig::new(20_000, 1, 2)).unwrap();
        assert!(a.agrees_with(&b, 3.0), "{a:?} {b:?}");
        let c = cond_entropy_y_given_g(&input, &spec(0.9, 4), &EstimatorConfig::new(20_000, 1, 1)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn doubling_inner_samples() {
        let s = ChannelSpec::new(0.0, 1.0, 1.0, 1).unwrap();
        let input = InputSpec::iid_gaussian(10.0).unwrap();
        let c = entropy_y_convergence(&input, &s, &EstimatorConfig::new(20_000, 128, 3)).unwrap();
        assert_eq!(c.doubled.n_samples, c.base.n_samples);
        assert!(c.converged, "{c:?}");
    }
}
