//! Channel and input specifications, samplers, and the structured matrices
//! `A_N` and `M_N`.
//!
//! A block of `N` symbols passes through `y_i = g_i·x_i + z_i`. The gains are
//! a stationary Gauss-Markov sequence with `E[g_i ḡ_j] = σ_G²·α^|i-j|`, drawn
//! afresh for every block; noise is i.i.d. `CN(0, σ_Z²)`.
//!
//! `CN(0, σ²)` is sampled as independent real and imaginary parts with
//! variance `σ²/2` each.

use crate::linalg::HermitianMatrix;
use crate::{Error, Result};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::ops::Deref;

const PROB_SUM_TOL: f64 = 1e-12;

/// Coherence coefficient, gain and noise powers, and block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannelSpec")]
pub struct ChannelSpec {
    alpha: f64,
    sigma_g2: f64,
    sigma_z2: f64,
    block_len: usize,
}

#[derive(Deserialize)]
struct RawChannelSpec {
    alpha: f64,
    sigma_g2: f64,
    sigma_z2: f64,
    block_len: usize,
}

impl TryFrom<RawChannelSpec> for ChannelSpec {
    type Error = Error;

    fn try_from(raw: RawChannelSpec) -> Result<Self> {
        ChannelSpec::new(raw.alpha, raw.sigma_g2, raw.sigma_z2, raw.block_len)
    }
}

impl ChannelSpec {
    pub fn new(alpha: f64, sigma_g2: f64, sigma_z2: f64, block_len: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(sigma_g2 > 0.0 && sigma_g2.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma_g2 must be positive, got {sigma_g2}")));
        }
        if !(sigma_z2 > 0.0 && sigma_z2.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma_z2 must be positive, got {sigma_z2}")));
        }
        if block_len == 0 {
            return Err(Error::InvalidParameter("block_len must be at least 1".into()));
        }
        Ok(Self {
            alpha,
            sigma_g2,
            sigma_z2,
            block_len,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma_g2(&self) -> f64 {
        self.sigma_g2
    }

    pub fn sigma_z2(&self) -> f64 {
        self.sigma_z2
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// `σ_Z²/σ_G²`, the diagonal shift in `β·I + A_N`.
    pub fn beta(&self) -> f64 {
        self.sigma_z2 / self.sigma_g2
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.sigma_g2, self.sigma_z2, self.block_len)
    }

    pub fn with_block_len(self, block_len: usize) -> Result<Self> {
        Self::new(self.alpha, self.sigma_g2, self.sigma_z2, block_len)
    }

    /// `ρ = σ_G²·P/σ_Z²` for an input of average power `P`.
    pub fn snr(&self, input_power: f64) -> f64 {
        self.sigma_g2 * input_power / self.sigma_z2
    }

    /// `h(Z)/N = log₂(πe·σ_Z²)`, the entropy of one complex Gaussian noise symbol.
    pub fn noise_entropy_per_symbol(&self) -> f64 {
        (std::f64::consts::PI * std::f64::consts::E * self.sigma_z2).log2()
    }
}

/// A length-`N` vector of complex scalars: an input, gain, noise or output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexBlock(Vec<Complex64>);

impl ComplexBlock {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// `Σ|x_i|²`.
    pub fn energy(&self) -> f64 {
        self.0.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.energy() / self.0.len() as f64
        }
    }

    pub fn nonzero_count(&self) -> usize {
        self.0.iter().filter(|v| v.norm_sqr() > 0.0).count()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

impl Deref for ComplexBlock {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl From<Vec<Complex64>> for ComplexBlock {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

/// A fixed input-distribution family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInputSpec", into = "RawInputSpec")]
pub enum InputSpec {
    /// i.i.d. `CN(0, σ_X²)` symbols.
    IidGaussian { sigma_x2: f64 },
    /// i.i.d. symbols from a finite constellation. `sigma_x2` is the declared
    /// power budget; the constellation's average power may not exceed it.
    IidDiscrete {
        points: Vec<Complex64>,
        probs: Vec<f64>,
        sigma_x2: f64,
    },
    /// The same deterministic block every time.
    FixedBlock { x: ComplexBlock },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum RawInputSpec {
    IidGaussian {
        sigma_x2: f64,
    },
    IidDiscrete {
        points: Vec<Complex64>,
        probs: Vec<f64>,
        #[serde(default)]
        sigma_x2: Option<f64>,
    },
    Qpsk {
        sigma_x2: f64,
    },
    OnOff {
        p_on: f64,
        sigma_x2: f64,
    },
    FixedBlock {
        x: ComplexBlock,
    },
}

impl TryFrom<RawInputSpec> for InputSpec {
    type Error = Error;

    fn try_from(raw: RawInputSpec) -> Result<Self> {
        match raw {
            RawInputSpec::IidGaussian { sigma_x2 } => InputSpec::iid_gaussian(sigma_x2),
            RawInputSpec::IidDiscrete {
                points,
                probs,
                sigma_x2,
            } => {
                let budget = match sigma_x2 {
                    Some(b) => b,
                    None => points.iter().zip(&probs).map(|(c, p)| p * c.norm_sqr()).sum(),
                };
                InputSpec::iid_discrete(points, probs, budget)
            }
            RawInputSpec::Qpsk { sigma_x2 } => InputSpec::qpsk(sigma_x2),
            RawInputSpec::OnOff { p_on, sigma_x2 } => InputSpec::on_off(p_on, sigma_x2),
            RawInputSpec::FixedBlock { x } => Ok(InputSpec::fixed_block(x)),
        }
    }
}

impl From<InputSpec> for RawInputSpec {
    fn from(spec: InputSpec) -> Self {
        match spec {
            InputSpec::IidGaussian { sigma_x2 } => RawInputSpec::IidGaussian { sigma_x2 },
            InputSpec::IidDiscrete {
                points,
                probs,
                sigma_x2,
            } => RawInputSpec::IidDiscrete {
                points,
                probs,
                sigma_x2: Some(sigma_x2),
            },
            InputSpec::FixedBlock { x } => RawInputSpec::FixedBlock { x },
        }
    }
}

impl InputSpec {
    pub fn iid_gaussian(sigma_x2: f64) -> Result<Self> {
        if !(sigma_x2 > 0.0 && sigma_x2.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma_x2 must be positive, got {sigma_x2}")));
        }
        Ok(InputSpec::IidGaussian { sigma_x2 })
    }

    pub fn iid_discrete(points: Vec<Complex64>, probs: Vec<f64>, sigma_x2: f64) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::InvalidParameter(format!(
                "constellation needs matching nonempty points and probs ({} vs {})",
                points.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("negative or non-finite probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}, not 1")));
        }
        if points.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite constellation point".into()));
        }
        let power: f64 = points.iter().zip(&probs).map(|(c, p)| p * c.norm_sqr()).sum();
        if !(sigma_x2 >= 0.0) || power > sigma_x2 * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "constellation power {power} exceeds the budget {sigma_x2}"
            )));
        }
        Ok(InputSpec::IidDiscrete {
            points,
            probs,
            sigma_x2,
        })
    }

    /// Equiprobable QPSK at average power `sigma_x2`.
    pub fn qpsk(sigma_x2: f64) -> Result<Self> {
        if !(sigma_x2 > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma_x2 must be positive, got {sigma_x2}")));
        }
        let amp = sigma_x2.sqrt();
        let points = (0..4)
            .map(|k| {
                let phase = std::f64::consts::FRAC_PI_4 + k as f64 * std::f64::consts::FRAC_PI_2;
                Complex64::from_polar(amp, phase)
            })
            .collect();
        Self::iid_discrete(points, vec![0.25; 4], sigma_x2)
    }

    /// On-off keying: `0` with probability `1 - p_on`, otherwise a single
    /// amplitude chosen so the average power is `sigma_x2`.
    pub fn on_off(p_on: f64, sigma_x2: f64) -> Result<Self> {
        if !(p_on > 0.0 && p_on <= 1.0) {
            return Err(Error::InvalidParameter(format!("p_on must lie in (0, 1], got {p_on}")));
        }
        if !(sigma_x2 > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma_x2 must be positive, got {sigma_x2}")));
        }
        let amp = (sigma_x2 / p_on).sqrt();
        Self::iid_discrete(
            vec![Complex64::new(0.0, 0.0), Complex64::new(amp, 0.0)],
            vec![1.0 - p_on, p_on],
            sigma_x2,
        )
    }

    pub fn fixed_block(x: ComplexBlock) -> Self {
        InputSpec::FixedBlock { x }
    }

    /// Average symbol power `E|X_i|²`.
    pub fn power(&self) -> f64 {
        match self {
            InputSpec::IidGaussian { sigma_x2 } => *sigma_x2,
            InputSpec::IidDiscrete { points, probs, .. } => {
                points.iter().zip(probs).map(|(c, p)| p * c.norm_sqr()).sum()
            }
            InputSpec::FixedBlock { x } => x.mean_power(),
        }
    }

    pub fn is_iid(&self) -> bool {
        !matches!(self, InputSpec::FixedBlock { .. })
    }

    /// Short lowercase label used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            InputSpec::IidGaussian { .. } => "gaussian",
            InputSpec::IidDiscrete { .. } => "discrete",
            InputSpec::FixedBlock { .. } => "fixed",
        }
    }

    /// Rescales the symbols so the average power becomes `target`.
    pub fn scaled_to_power(&self, target: f64) -> Result<Self> {
        if !(target > 0.0 && target.is_finite()) {
            return Err(Error::InvalidParameter(format!("target power must be positive, got {target}")));
        }
        let current = self.power();
        if current <= 0.0 {
            return Err(Error::InvalidParameter("cannot rescale a zero-power input".into()));
        }
        let gain = (target / current).sqrt();
        Ok(match self {
            InputSpec::IidGaussian { .. } => InputSpec::IidGaussian { sigma_x2: target },
            InputSpec::IidDiscrete { points, probs, .. } => InputSpec::IidDiscrete {
                points: points.iter().map(|c| c * gain).collect(),
                probs: probs.clone(),
                sigma_x2: target,
            },
            InputSpec::FixedBlock { x } => InputSpec::FixedBlock {
                x: x.iter().map(|c| c * gain).collect::<Vec<_>>().into(),
            },
        })
    }

    /// Builds a reusable sampler for hot loops.
    pub fn sampler(&self, n: usize) -> Result<InputSampler<'_>> {
        Ok(match self {
            InputSpec::IidGaussian { sigma_x2 } => InputSampler::Gaussian { variance: *sigma_x2 },
            InputSpec::IidDiscrete { points, probs, .. } => InputSampler::Discrete {
                points,
                index: WeightedIndex::new(probs)
                    .map_err(|e| Error::InvalidParameter(format!("bad constellation weights: {e}")))?,
            },
            InputSpec::FixedBlock { x } => {
                if x.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        got: x.len(),
                    });
                }
                InputSampler::Fixed { x }
            }
        })
    }
}

/// Precomputed drawing state for an [`InputSpec`].
#[derive(Debug, Clone)]
pub enum InputSampler<'a> {
    Gaussian { variance: f64 },
    Discrete {
        points: &'a [Complex64],
        index: WeightedIndex<f64>,
    },
    Fixed { x: &'a ComplexBlock },
}

impl InputSampler<'_> {
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [Complex64]) {
        match self {
            InputSampler::Gaussian { variance } => {
                for v in out.iter_mut() {
                    *v = complex_normal(rng, *variance);
                }
            }
            InputSampler::Discrete { points, index } => {
                for v in out.iter_mut() {
                    *v = points[index.sample(rng)];
                }
            }
            InputSampler::Fixed { x } => out.copy_from_slice(x),
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, InputSampler::Fixed { .. })
    }
}

/// One draw of `CN(0, variance)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Fills `out` with one block of Gauss-Markov gains. At `α = 1` every entry
/// is the first draw and no innovations are consumed.
pub fn fill_gains<R: Rng + ?Sized>(spec: &ChannelSpec, rng: &mut R, out: &mut [Complex64]) {
    let Some((first, rest)) = out.split_first_mut() else {
        return;
    };
    *first = complex_normal(rng, spec.sigma_g2);
    if spec.alpha == 1.0 {
        rest.fill(*first);
        return;
    }
    let innovation = (1.0 - spec.alpha * spec.alpha).sqrt();
    let mut prev = *first;
    for g in rest {
        let w = complex_normal(rng, spec.sigma_g2);
        prev = prev * spec.alpha + w * innovation;
        *g = prev;
    }
}

pub fn sample_gains<R: Rng + ?Sized>(spec: &ChannelSpec, rng: &mut R) -> ComplexBlock {
    let mut g = vec![Complex64::new(0.0, 0.0); spec.block_len];
    fill_gains(spec, rng, &mut g);
    g.into()
}

/// `σ_G²·α^|i-j|`, the stationary gain covariance.
pub fn correlation_matrix(spec: &ChannelSpec) -> HermitianMatrix {
    let n = spec.block_len;
    let pows = alpha_powers(spec.alpha, n);
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            data.push(Complex64::new(spec.sigma_g2 * pows[i.abs_diff(j)], 0.0));
        }
    }
    HermitianMatrix::from_row_major(n, data)
}

/// `α^d` for `d = 0..n`, with `0⁰ = 1`.
pub fn alpha_powers(alpha: f64, n: usize) -> Vec<f64> {
    let mut pows = Vec::with_capacity(n);
    let mut p = 1.0;
    for _ in 0..n {
        pows.push(p);
        p *= alpha;
    }
    pows
}

/// Writes `shift·I + scale·A_N` into row-major `out`, where
/// `A_N = diag(x)·C·diag(x)ᴴ` and `C(i,j) = pows[|i-j|]`.
pub fn fill_shifted_a(x: &[Complex64], pows: &[f64], scale: f64, shift: f64, out: &mut [Complex64]) {
    let n = x.len();
    debug_assert!(pows.len() >= n && out.len() == n * n);
    for i in 0..n {
        let xi = x[i] * scale;
        for j in 0..i {
            let v = xi * x[j].conj() * pows[i - j];
            out[i * n + j] = v;
            out[j * n + i] = v.conj();
        }
        out[i * n + i] = Complex64::new(scale * x[i].norm_sqr() + shift, 0.0);
    }
}

/// `A_N(i,j) = α^|i-j|·x_i·x̄_j`.
pub fn build_a(x: &[Complex64], alpha: f64) -> HermitianMatrix {
    let n = x.len();
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    fill_shifted_a(x, &alpha_powers(alpha, n), 1.0, 0.0, &mut data);
    HermitianMatrix::from_row_major(n, data)
}

/// `M_N = σ_Z²·I + σ_G²·A_N`, the covariance of `Y` given `X = x`.
pub fn build_m(x: &[Complex64], spec: &ChannelSpec) -> Result<HermitianMatrix> {
    check_len(x, spec.block_len)?;
    let n = x.len();
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    fill_shifted_a(x, &alpha_powers(spec.alpha, n), spec.sigma_g2, spec.sigma_z2, &mut data);
    Ok(HermitianMatrix::from_row_major(n, data))
}

pub fn sample_input<R: Rng + ?Sized>(input: &InputSpec, n: usize, rng: &mut R) -> Result<ComplexBlock> {
    let sampler = input.sampler(n)?;
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    sampler.fill(rng, &mut x);
    Ok(x.into())
}

/// `y = g∘x + z` given gains, with noise drawn from `rng`.
pub fn fill_output<R: Rng + ?Sized>(
    x: &[Complex64],
    g: &[Complex64],
    sigma_z2: f64,
    rng: &mut R,
    y: &mut [Complex64],
) {
    for ((yi, xi), gi) in y.iter_mut().zip(x).zip(g) {
        *yi = gi * xi + complex_normal(rng, sigma_z2);
    }
}

/// Passes `x` through one independently drawn channel block. Returns the
/// output and the realized gains.
pub fn simulate_block<R: Rng + ?Sized>(
    x: &[Complex64],
    spec: &ChannelSpec,
    rng: &mut R,
) -> Result<(ComplexBlock, ComplexBlock)> {
    check_len(x, spec.block_len)?;
    let g = sample_gains(spec, rng);
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    fill_output(x, &g, spec.sigma_z2, rng, &mut y);
    Ok((y.into(), g))
}

fn check_len(x: &[Complex64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}
