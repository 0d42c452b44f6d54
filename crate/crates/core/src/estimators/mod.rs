//! Monte Carlo estimators for the terms of
//! `I(X;Y) + I(G;X,Y) = h(Y) - h(Z)`, all per symbol and in bits.
//!
//! Work is split into chunks of `chunk_size` outer samples. Each chunk draws
//! from its own substreams (see [`crate::streams`]) and reduces to a
//! count/mean/M2 triple; the triples are merged in chunk order, so results
//! do not depend on the number of worker threads.
//!
//! `stream_key` selects the substream family. Grid points that share a key
//! reuse the same inputs, innovations and noise (common random numbers);
//! giving each grid point its own key makes them independent.

mod entropy;
mod filter;
mod stats;

pub use entropy::{
    cond_entropy_y_given_g, entropy_y, entropy_y_convergence, ConvergenceCheck,
};
pub use stats::RunningStats;

use crate::channel_model::{alpha_powers, fill_gains, fill_output, fill_shifted_a, ChannelSpec, InputSpec};
use crate::determinant::LogDetWorkspace;
use crate::linalg::{cholesky_in_place, inv_quad_form};
use crate::streams::{substream, Role, StreamRng};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default cap on `N` for the `h(Y)`-based estimators.
pub const DEFAULT_ENTROPY_BLOCK_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Outer draws `M` (input blocks, or joint input/channel draws).
    pub outer_samples: usize,
    /// Inner mixture draws `K` per density evaluation.
    pub inner_samples: usize,
    pub seed: u64,
    pub chunk_size: usize,
    #[serde(default)]
    pub stream_key: u64,
    #[serde(default = "default_cap")]
    pub max_entropy_block_len: usize,
    #[serde(default)]
    pub entropy_method: EntropyMethod,
}

/// How [`entropy_y`] evaluates the output density `p(y)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyMethod {
    /// `K`-particle filter along the block. Gaussian inputs carry gain
    /// particles and use the closed-form `p(y_i|g_i)`; discrete inputs carry
    /// symbol paths with a Kalman tracker for the gains.
    #[default]
    ParticleFilter,
    /// Average `p(y|x_k)` over `K` independent input blocks, each through a
    /// Cholesky factor of `M_N(x_k)`. Degrades badly as `α → 1`.
    InputMixture,
}

fn default_cap() -> usize {
    DEFAULT_ENTROPY_BLOCK_CAP
}

impl EstimatorConfig {
    pub fn new(outer_samples: usize, inner_samples: usize, seed: u64) -> Self {
        Self {
            outer_samples,
            inner_samples,
            seed,
            chunk_size: 4096,
            stream_key: 0,
            max_entropy_block_len: DEFAULT_ENTROPY_BLOCK_CAP,
            entropy_method: EntropyMethod::default(),
        }
    }

    pub fn with_entropy_method(mut self, method: EntropyMethod) -> Self {
        self.entropy_method = method;
        self
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn with_stream_key(mut self, key: u64) -> Self {
        self.stream_key = key;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_samples == 0 {
            return Err(Error::InvalidParameter("outer_samples must be at least 1".into()));
        }
        if self.inner_samples == 0 {
            return Err(Error::InvalidParameter("inner_samples must be at least 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidParameter("chunk_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// What an [`Estimate`] or result row measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `I(G;X,Y)/N`.
    ChannelInfo,
    /// `h(Y)/N`.
    EntropyY,
    /// `h(Y|G)/N`.
    CondEntropyYGivenG,
    /// `I(X;Y)/N`.
    UserInfo,
    /// `I(G;Y)/N`.
    GInfoY,
    /// `I(G;X|Y)/N = I(G;X,Y)/N - I(G;Y)/N`, a difference of estimates.
    GInfoXGivenY,
    /// `|y - g·x|²/(N·σ_Z²)`.
    QuadNoise,
    /// `yᴴ M_N⁻¹ y / N`.
    QuadOutput,
    /// `R_s = h(Y|G)/N - h(Z)/N`.
    RateCsi,
    /// `R_l = R_s - I(G;X,Y)/N`.
    RateLower,
    /// `R_l + Δ`.
    RateUpper,
    Delta,
    DeltaLimit,
    AwgnCapacity,
    /// `I(X;Y)/N - I(G;Y)/N`.
    UserMinusGInfo,
    /// Largest relative log-determinant error of the subset expansion.
    DetClosedFormError,
    /// Largest relative log-determinant error of the recursion.
    DetRecursiveError,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::ChannelInfo => "channel_info",
            Quantity::EntropyY => "entropy_y",
            Quantity::CondEntropyYGivenG => "cond_entropy_y_given_g",
            Quantity::UserInfo => "user_info",
            Quantity::GInfoY => "g_info_y",
            Quantity::GInfoXGivenY => "g_info_x_given_y",
            Quantity::QuadNoise => "quad_noise",
            Quantity::QuadOutput => "quad_output",
            Quantity::RateCsi => "rate_csi",
            Quantity::RateLower => "rate_lower",
            Quantity::RateUpper => "rate_upper",
            Quantity::Delta => "delta",
            Quantity::DeltaLimit => "delta_limit",
            Quantity::AwgnCapacity => "awgn_capacity",
            Quantity::UserMinusGInfo => "user_minus_g_info",
            Quantity::DetClosedFormError => "det_closed_form_error",
            Quantity::DetRecursiveError => "det_recursive_error",
        }
    }

    // Stable ids for substream derivation; never renumber.
    fn stream_id(&self) -> u64 {
        match self {
            Quantity::ChannelInfo => 1,
            Quantity::EntropyY => 2,
            Quantity::CondEntropyYGivenG => 3,
            Quantity::UserInfo => 4,
            Quantity::GInfoY => 5,
            Quantity::QuadNoise | Quantity::QuadOutput => 6,
            _ => 99,
        }
    }
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A Monte Carlo result in bits per symbol. `n_samples = 0` marks a value
/// computed in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub quantity: Quantity,
}

impl Estimate {
    pub fn exact(value: f64, quantity: Quantity) -> Self {
        Self {
            mean: value,
            std_error: 0.0,
            n_samples: 0,
            quantity,
        }
    }

    fn from_stats(stats: &RunningStats, quantity: Quantity) -> Self {
        Self {
            mean: stats.mean(),
            std_error: stats.std_error(),
            n_samples: stats.count(),
            quantity,
        }
    }

    /// `self - other` for independent estimates; errors add in quadrature.
    pub fn minus(&self, other: &Estimate, quantity: Quantity) -> Estimate {
        Estimate {
            mean: self.mean - other.mean,
            std_error: self.std_error.hypot(other.std_error),
            n_samples: self.n_samples.max(other.n_samples),
            quantity,
        }
    }

    pub fn offset(&self, shift: f64, quantity: Quantity) -> Estimate {
        Estimate {
            mean: self.mean + shift,
            quantity,
            ..*self
        }
    }

    /// Whether `|self - other| ≤ k` combined standard errors.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * self.std_error.hypot(other.std_error)
    }
}

/// Per-chunk draw context handed to estimator kernels.
pub(crate) struct Chunk {
    pub len: usize,
    seed: u64,
    quantity: u64,
    key: u64,
    index: u64,
}

impl Chunk {
    pub fn rng(&self, role: Role) -> StreamRng {
        substream(self.seed, self.quantity, self.key, self.index, role)
    }
}

/// Evaluates `kernel` on every chunk in parallel; results come back in
/// chunk order.
pub(crate) fn map_chunks<T, F>(cfg: &EstimatorConfig, quantity: Quantity, kernel: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Chunk) -> Result<T> + Sync,
{
    cfg.validate()?;
    let n_chunks = cfg.outer_samples.div_ceil(cfg.chunk_size);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * cfg.chunk_size;
            let chunk = Chunk {
                len: cfg.chunk_size.min(cfg.outer_samples - start),
                seed: cfg.seed,
                quantity: quantity.stream_id(),
                key: cfg.stream_key,
                index: c as u64,
            };
            kernel(&chunk)
        })
        .collect()
}

pub(crate) fn run_chunks<F>(cfg: &EstimatorConfig, quantity: Quantity, kernel: F) -> Result<RunningStats>
where
    F: Fn(&Chunk) -> Result<RunningStats> + Sync,
{
    let parts = map_chunks(cfg, quantity, kernel)?;
    Ok(parts.iter().fold(RunningStats::new(), |acc, s| acc.merge(s)))
}

/// `Î(G;X,Y)/N`: the mean of `log₂ det(I + (σ_G²/σ_Z²)·A_N(x))/N` over input draws.
pub fn estimate_channel_info(input: &InputSpec, spec: &ChannelSpec, cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.validate()?;
    let n = spec.block_len();
    let sampler = input.sampler(n)?;
    if let InputSpec::FixedBlock { x } = input {
        let v = LogDetWorkspace::new(spec).channel_info(x)? / n as f64;
        return Ok(Estimate {
            mean: v,
            std_error: 0.0,
            n_samples: cfg.outer_samples,
            quantity: Quantity::ChannelInfo,
        });
    }
    let stats = run_chunks(cfg, Quantity::ChannelInfo, |chunk| {
        let mut rng = chunk.rng(Role::Input);
        let mut ws = LogDetWorkspace::new(spec);
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        let mut stats = RunningStats::new();
        for _ in 0..chunk.len {
            sampler.fill(&mut rng, &mut x);
            stats.push(ws.channel_info(&x)? / n as f64);
        }
        Ok(stats)
    })?;
    Ok(Estimate::from_stats(&stats, Quantity::ChannelInfo))
}

/// `Î(X;Y)/N = ĥ(Y)/N - log₂(πeσ_Z²) - Î(G;X,Y)/N`.
pub fn estimate_user_info(input: &InputSpec, spec: &ChannelSpec, cfg: &EstimatorConfig) -> Result<Estimate> {
    let h = entropy_y(input, spec, cfg)?;
    let ci = estimate_channel_info(input, spec, cfg)?;
    Ok(user_info_from_parts(&h, &ci, spec))
}

pub fn user_info_from_parts(entropy_y: &Estimate, channel_info: &Estimate, spec: &ChannelSpec) -> Estimate {
    entropy_y
        .offset(-spec.noise_entropy_per_symbol(), Quantity::UserInfo)
        .minus(channel_info, Quantity::UserInfo)
}

pub fn estimate_entropy_y(input: &InputSpec, spec: &ChannelSpec, cfg: &EstimatorConfig) -> Result<Estimate> {
    entropy_y(input, spec, cfg)
}

pub fn estimate_cond_entropy_y_given_g(
    input: &InputSpec,
    spec: &ChannelSpec,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    cond_entropy_y_given_g(input, spec, cfg)
}

/// `Î(G;Y)/N = ĥ(Y)/N - ĥ(Y|G)/N`.
pub fn estimate_g_info_y(input: &InputSpec, spec: &ChannelSpec, cfg: &EstimatorConfig) -> Result<Estimate> {
    let hc = cond_entropy_y_given_g(input, spec, cfg)?;
    let h = entropy_y(input, spec, cfg)?;
    Ok(h.minus(&hc, Quantity::GInfoY))
}

/// `R_s = ĥ(Y|G)/N - log₂(πeσ_Z²)`, the rate with perfect receiver CSI.
pub fn estimate_rate_csi(input: &InputSpec, spec: &ChannelSpec, cfg: &EstimatorConfig) -> Result<Estimate> {
    let hc = cond_entropy_y_given_g(input, spec, cfg)?;
    Ok(hc.offset(-spec.noise_entropy_per_symbol(), Quantity::RateCsi))
}

/// Monte Carlo means of the two quadratic forms in the channel-information
/// integral; both target 1 per symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFormCheck {
    /// `|y - g·x|²/(N·σ_Z²)`.
    pub noise: Estimate,
    /// `yᴴ M_N(x)⁻¹ y / N`.
    pub output: Estimate,
}

pub fn sanity_quadratic_forms(
    input: &InputSpec,
    spec: &ChannelSpec,
    cfg: &EstimatorConfig,
) -> Result<QuadraticFormCheck> {
    cfg.validate()?;
    let n = spec.block_len();
    let sampler = input.sampler(n)?;
    let pows = alpha_powers(spec.alpha(), n);
    let nf = n as f64;
    let parts = map_chunks(cfg, Quantity::QuadNoise, |chunk| {
        let mut rx = chunk.rng(Role::Input);
        let mut rg = chunk.rng(Role::Gains);
        let mut rz = chunk.rng(Role::Noise);
        let zero = Complex64::new(0.0, 0.0);
        let (mut x, mut g, mut y, mut scratch) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
        let mut m = vec![zero; n * n];
        let (mut noise, mut output) = (RunningStats::new(), RunningStats::new());
        for _ in 0..chunk.len {
            sampler.fill(&mut rx, &mut x);
            fill_gains(spec, &mut rg, &mut g);
            fill_output(&x, &g, spec.sigma_z2(), &mut rz, &mut y);
            let resid: f64 = (0..n).map(|i| (y[i] - g[i] * x[i]).norm_sqr()).sum();
            noise.push(resid / (spec.sigma_z2() * nf));
            fill_shifted_a(&x, &pows, spec.sigma_g2(), spec.sigma_z2(), &mut m);
            cholesky_in_place(n, &mut m)?;
            output.push(inv_quad_form(n, &m, &y, &mut scratch) / nf);
        }
        Ok((noise, output))
    })?;
    let (noise, output) = parts
        .iter()
        .fold((RunningStats::new(), RunningStats::new()), |(a, b), (c, d)| (a.merge(c), b.merge(d)));
    Ok(QuadraticFormCheck {
        noise: Estimate::from_stats(&noise, Quantity::QuadNoise),
        output: Estimate::from_stats(&output, Quantity::QuadOutput),
    })
}
