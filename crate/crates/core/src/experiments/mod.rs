//! Config-driven experiments. Each run produces a [`SweepResult`], a flat
//! table with one row per grid point and quantity, in grid order.

mod output;

pub use output::{csv_string, emit_csv, emit_json, parse_json, read_csv, rows_json, write_csv, CSV_HEADER};

use crate::analytic::{awgn_capacity, delta, delta_limit, rate_csi_gaussian, SnrPoint};
use crate::channel_model::{complex_normal, ChannelSpec, ComplexBlock, InputSpec};
use crate::determinant::{det_closed_form, det_direct, det_recursive, DetInputs, CLOSED_FORM_MAX_N};
use crate::estimators::{
    cond_entropy_y_given_g, entropy_y, entropy_y_convergence, estimate_channel_info, sanity_quadratic_forms,
    user_info_from_parts, Estimate, EstimatorConfig, Quantity,
};
use crate::streams::{derive_key, stream};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DetVerify,
    SweepAlpha,
    SweepSnr,
    Conjecture,
    DeltaLimit,
    Theorem4,
    #[serde(rename = "sanity", alias = "sanity-appendix-i")]
    SanityAppendixI,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::DetVerify => "det-verify",
            Experiment::SweepAlpha => "sweep-alpha",
            Experiment::SweepSnr => "sweep-snr",
            Experiment::Conjecture => "conjecture",
            Experiment::DeltaLimit => "delta-limit",
            Experiment::Theorem4 => "theorem4",
            Experiment::SanityAppendixI => "sanity",
        }
    }

    fn needs_alpha_grid(&self) -> bool {
        !matches!(self, Experiment::DeltaLimit | Experiment::Theorem4)
    }
}

/// An input family with a report name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedInput {
    pub name: String,
    pub input: InputSpec,
}

/// Families compared by the conjecture experiment when none are configured.
pub fn default_families() -> Vec<NamedInput> {
    let named = |name: &str, input: Result<InputSpec>| NamedInput {
        name: name.into(),
        input: input.expect("preset families are valid"),
    };
    vec![
        named("gaussian", InputSpec::iid_gaussian(1.0)),
        named("qpsk", InputSpec::qpsk(1.0)),
        named("on-off", InputSpec::on_off(0.25, 1.0)),
    ]
}

fn default_input() -> InputSpec {
    InputSpec::iid_gaussian(1.0).expect("unit power is valid")
}

fn default_det_trials() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

/// One experiment, as read from a JSON config file.
///
/// `channel` is a template: its `alpha` is replaced by each `alpha_grid`
/// entry and its `block_len` by each `block_lens` entry (when given). Each
/// `rho_grid` entry is realized by rescaling the input to power
/// `ρ·σ_Z²/σ_G²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub channel: ChannelSpec,
    #[serde(default = "default_input")]
    pub input: InputSpec,
    /// Families for the conjecture experiment; empty means [`default_families`].
    #[serde(default)]
    pub families: Vec<NamedInput>,
    #[serde(default)]
    pub alpha_grid: Vec<f64>,
    #[serde(default)]
    pub rho_grid: Vec<f64>,
    #[serde(default)]
    pub block_lens: Vec<usize>,
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub json_path: Option<PathBuf>,
    #[serde(default)]
    pub common_random_numbers: bool,
    /// Random cases per grid point for `det-verify`.
    #[serde(default = "default_det_trials")]
    pub det_trials: usize,
    /// Run the K-doubling diagnostic on every `h(Y)` estimate.
    #[serde(default = "default_true")]
    pub convergence_check: bool,
}

impl ExperimentConfig {
    /// Desk-scale defaults: `N = 4`, `M = 2·10⁵`, `K = 512`, eleven `α`
    /// points on `[0, 1]` and `ρ ∈ {1, 10, 100}`.
    pub fn preset(experiment: Experiment, seed: u64) -> Self {
        let mut cfg = Self {
            experiment,
            channel: ChannelSpec::new(0.0, 1.0, 1.0, 4).expect("preset channel is valid"),
            input: default_input(),
            families: Vec::new(),
            alpha_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            rho_grid: vec![1.0, 10.0, 100.0],
            block_lens: Vec::new(),
            estimator: EstimatorConfig::new(200_000, 512, seed),
            output_path: None,
            json_path: None,
            common_random_numbers: false,
            det_trials: default_det_trials(),
            convergence_check: true,
        };
        match experiment {
            Experiment::DetVerify => cfg.block_lens = vec![1, 2, 3, 5, 8, 12],
            Experiment::DeltaLimit => cfg.rho_grid = vec![1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6],
            Experiment::Theorem4 => {
                cfg.block_lens = vec![1, 2];
                cfg.rho_grid = vec![1.0, 10.0];
                cfg.estimator.outer_samples = 100_000;
            }
            Experiment::SanityAppendixI => cfg.estimator.outer_samples = 100_000,
            Experiment::Conjecture => cfg.rho_grid = vec![10.0],
            _ => {}
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.experiment.needs_alpha_grid() {
            check_grid("alpha_grid", &self.alpha_grid, |a| (0.0..=1.0).contains(&a))?;
        }
        check_grid("rho_grid", &self.rho_grid, |r| r > 0.0 && r.is_finite())?;
        if !self.block_lens.is_empty() {
            let lens: Vec<f64> = self.block_lens.iter().map(|&n| n as f64).collect();
            check_grid("block_lens", &lens, |n| n >= 1.0)?;
        }
        if self.experiment == Experiment::DetVerify && self.det_trials == 0 {
            return bad("det_trials must be at least 1".into());
        }
        for named in &self.families {
            if named.name.is_empty() {
                return bad("family names must be nonempty".into());
            }
        }
        Ok(())
    }

    fn block_lens(&self) -> Vec<usize> {
        match self.block_lens.is_empty() {
            true => vec![self.channel.block_len()],
            false => self.block_lens.clone(),
        }
    }

    fn families(&self) -> Vec<NamedInput> {
        match self.families.is_empty() {
            true => default_families(),
            false => self.families.clone(),
        }
    }

    /// Estimator settings for grid point `index`: shared streams under
    /// common random numbers, independent ones otherwise.
    fn estimator_at(&self, index: u64) -> EstimatorConfig {
        let key = match self.common_random_numbers {
            true => self.estimator.stream_key,
            false => derive_key(self.estimator.stream_key, &[index]),
        };
        self.estimator.with_stream_key(key)
    }
}

fn check_grid(name: &str, grid: &[f64], in_domain: impl Fn(f64) -> bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} must be nonempty")));
    }
    if let Some(v) = grid.iter().find(|v| !in_domain(**v)) {
        return Err(Error::InvalidParameter(format!("{name} entry {v} is out of range")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(format!("{name} must be strictly ascending")));
    }
    Ok(())
}

/// One output line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub rho: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// A [`Quantity`] name, suffixed `@family` in conjecture tables.
    pub quantity: String,
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub converged: bool,
}

impl SweepRow {
    fn new(alpha: f64, rho: f64, n: usize, est: &Estimate, converged: bool) -> Self {
        Self {
            alpha,
            rho,
            n,
            quantity: est.quantity.as_str().to_string(),
            mean: est.mean,
            std_error: est.std_error,
            n_samples: est.n_samples,
            converged,
        }
    }

    fn tagged(mut self, family: Option<&str>) -> Self {
        if let Some(f) = family {
            self.quantity = format!("{}@{f}", self.quantity);
        }
        self
    }

    /// The quantity name without any family suffix.
    pub fn base_quantity(&self) -> &str {
        self.quantity.split('@').next().unwrap_or_default()
    }

    pub fn family(&self) -> Option<&str> {
        self.quantity.split_once('@').map(|(_, f)| f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    ConsistentMonotone,
    Inconclusive,
    ViolationCandidate,
}

impl VerdictKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictKind::ConsistentMonotone => "consistent-monotone",
            VerdictKind::Inconclusive => "inconclusive",
            VerdictKind::ViolationCandidate => "violation-candidate",
        }
    }
}

/// Monotonicity verdict for `Î(X;Y)/N` over the α grid of one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub family: String,
    pub rho: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub verdict: VerdictKind,
    /// Largest decrease `Î(α_i) - Î(α_j)` over `α_i < α_j` (0 if none).
    pub max_drop: f64,
    /// That decrease in combined standard errors.
    pub max_drop_sigmas: f64,
    pub alpha_from: f64,
    pub alpha_to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub experiment: Experiment,
    pub rows: Vec<SweepRow>,
    #[serde(default)]
    pub verdicts: Vec<Verdict>,
}

impl SweepResult {
    pub fn rows_for<'a>(&'a self, quantity: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.quantity == quantity)
    }
}

/// Runs the configured experiment and writes `output_path` (CSV) and
/// `json_path` when set.
pub fn run(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut result = SweepResult {
        experiment: config.experiment,
        rows: Vec::new(),
        verdicts: Vec::new(),
    };
    match config.experiment {
        Experiment::DetVerify => det_verify(config, &mut result.rows)?,
        Experiment::SweepAlpha => sweep(config, &config.input, None, true, 0, &mut result.rows)?,
        Experiment::SweepSnr => sweep(config, &config.input, None, false, 0, &mut result.rows)?,
        Experiment::Conjecture => conjecture(config, &mut result)?,
        Experiment::DeltaLimit => delta_table(config, &mut result.rows)?,
        Experiment::Theorem4 => theorem4(config, &mut result.rows)?,
        Experiment::SanityAppendixI => sanity(config, &mut result.rows)?,
    }
    if let Some(path) = &config.output_path {
        emit_csv(&result, path)?;
    }
    if let Some(path) = &config.json_path {
        emit_json(&result, path)?;
    }
    Ok(result)
}

fn input_at(input: &InputSpec, spec: &ChannelSpec, rho: f64) -> Result<InputSpec> {
    input.scaled_to_power(rho * spec.sigma_z2() / spec.sigma_g2())
}

/// Estimates at a single `(α, ρ, N)` point.
struct PointRows<'a> {
    alpha: f64,
    rho: f64,
    spec: ChannelSpec,
    input: InputSpec,
    cfg: EstimatorConfig,
    convergence_check: bool,
    family: Option<&'a str>,
}

impl PointRows<'_> {
    fn entropy(&self) -> Result<(Estimate, bool)> {
        if self.convergence_check {
            let c = entropy_y_convergence(&self.input, &self.spec, &self.cfg)?;
            Ok((c.base, c.converged))
        } else {
            Ok((entropy_y(&self.input, &self.spec, &self.cfg)?, false))
        }
    }

    fn push(&self, rows: &mut Vec<SweepRow>, est: &Estimate, converged: bool) {
        rows.push(SweepRow::new(self.alpha, self.rho, self.spec.block_len(), est, converged).tagged(self.family));
    }

    /// Channel information, the two rate bounds and, for short blocks, the
    /// `h(Y)`-based terms.
    fn sweep_rows(&self, rows: &mut Vec<SweepRow>) -> Result<()> {
        let ci = estimate_channel_info(&self.input, &self.spec, &self.cfg)?;
        self.push(rows, &ci, true);

        let cond = match self.input.is_iid() {
            true => Some(cond_entropy_y_given_g(&self.input, &self.spec, &self.cfg)?),
            false => None,
        };
        if let Some(hc) = &cond {
            let rs = hc.offset(-self.spec.noise_entropy_per_symbol(), Quantity::RateCsi);
            self.push(rows, &rs, true);
            self.push(rows, &rs.minus(&ci, Quantity::RateLower), true);
            // R_l + (C₀ - R_s) = C₀ - Î(G;X,Y)/N; for Gaussian inputs the gap is Δ(ρ).
            let c0 = awgn_capacity(SnrPoint::new(self.spec.snr(self.input.power()))?);
            let upper = Estimate {
                mean: c0 - ci.mean,
                quantity: Quantity::RateUpper,
                ..ci
            };
            self.push(rows, &upper, true);
        }

        if self.spec.block_len() > self.cfg.max_entropy_block_len {
            return Ok(());
        }
        let (h, converged) = self.entropy()?;
        self.push(rows, &h, converged);
        self.push(rows, &user_info_from_parts(&h, &ci, &self.spec), converged);
        if let Some(hc) = &cond {
            let gy = h.minus(hc, Quantity::GInfoY);
            self.push(rows, &gy, converged);
            self.push(rows, &ci.minus(&gy, Quantity::GInfoXGivenY), converged);
        }
        Ok(())
    }
}

fn sweep(
    config: &ExperimentConfig,
    input: &InputSpec,
    family: Option<&str>,
    rho_outer: bool,
    family_index: u64,
    rows: &mut Vec<SweepRow>,
) -> Result<()> {
    let mut index = 0u64;
    for n in config.block_lens() {
        let base = config.channel.with_block_len(n)?;
        let points: Vec<(f64, f64)> = match rho_outer {
            true => config
                .rho_grid
                .iter()
                .flat_map(|&r| config.alpha_grid.iter().map(move |&a| (a, r)))
                .collect(),
            false => config
                .alpha_grid
                .iter()
                .flat_map(|&a| config.rho_grid.iter().map(move |&r| (a, r)))
                .collect(),
        };
        for (alpha, rho) in points {
            let point = PointRows {
                alpha,
                rho,
                spec: base.with_alpha(alpha)?,
                input: input_at(input, &base, rho)?,
                cfg: config.estimator_at(derive_key(family_index, &[index])),
                convergence_check: config.convergence_check,
                family,
            };
            point.sweep_rows(rows)?;
            index += 1;
        }
    }
    Ok(())
}

fn conjecture(config: &ExperimentConfig, result: &mut SweepResult) -> Result<()> {
    for (i, named) in config.families().iter().enumerate() {
        let start = result.rows.len();
        sweep(config, &named.input, Some(&named.name), true, i as u64 + 1, &mut result.rows)?;
        let tag = format!("{}@{}", Quantity::UserInfo.as_str(), named.name);
        let rows: Vec<&SweepRow> = result.rows[start..].iter().filter(|r| r.quantity == tag).collect();
        for n in config.block_lens() {
            for &rho in &config.rho_grid {
                let series: Vec<&SweepRow> = rows.iter().copied().filter(|r| r.n == n && r.rho == rho).collect();
                if series.is_empty() {
                    continue;
                }
                result.verdicts.push(monotonicity_verdict(&named.name, rho, n, &series));
            }
        }
    }
    Ok(())
}

/// Three-valued verdict over all ordered pairs of the α series: a decrease
/// beyond three combined standard errors is a violation candidate, any
/// smaller decrease is inconclusive.
pub fn monotonicity_verdict(family: &str, rho: f64, n: usize, series: &[&SweepRow]) -> Verdict {
    let mut verdict = Verdict {
        family: family.into(),
        rho,
        n,
        verdict: VerdictKind::ConsistentMonotone,
        max_drop: 0.0,
        max_drop_sigmas: 0.0,
        alpha_from: f64::NAN,
        alpha_to: f64::NAN,
    };
    for (i, a) in series.iter().enumerate() {
        for b in &series[i + 1..] {
            let drop = a.mean - b.mean;
            if drop <= 0.0 {
                continue;
            }
            let se = a.std_error.hypot(b.std_error);
            let sigmas = if se > 0.0 { drop / se } else { f64::INFINITY };
            let kind = if sigmas > 3.0 {
                VerdictKind::ViolationCandidate
            } else {
                VerdictKind::Inconclusive
            };
            verdict.verdict = verdict.verdict.max(kind);
            if drop > verdict.max_drop {
                verdict.max_drop = drop;
                verdict.max_drop_sigmas = sigmas;
                verdict.alpha_from = a.alpha;
                verdict.alpha_to = b.alpha;
            }
        }
    }
    verdict
}

impl PartialOrd for VerdictKind {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VerdictKind {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

/// Relative log-determinant error, scaled so values near `log₂ D = 0` are
/// compared absolutely.
fn log_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

/// Random block for verification case `trial`: complex Gaussian entries
/// under a rotating zero pattern (none, all but one, random, all).
fn det_case<R: Rng>(rng: &mut R, n: usize, trial: usize) -> ComplexBlock {
    let mut x: Vec<_> = (0..n).map(|_| complex_normal(rng, 1.0)).collect();
    match trial % 4 {
        0 => {}
        1 => {
            let keep = rng.random_range(0..n);
            for (i, v) in x.iter_mut().enumerate() {
                if i != keep {
                    *v = Default::default();
                }
            }
        }
        2 => {
            for v in x.iter_mut() {
                if rng.random_bool(0.4) {
                    *v = Default::default();
                }
            }
        }
        _ => x.fill(Default::default()),
    }
    x.into()
}

fn det_verify(config: &ExperimentConfig, rows: &mut Vec<SweepRow>) -> Result<()> {
    for n in config.block_lens() {
        for (ai, &alpha) in config.alpha_grid.iter().enumerate() {
            for (ri, &rho) in config.rho_grid.iter().enumerate() {
                let beta = 1.0 / rho;
                let mut rng = stream(derive_key(
                    config.estimator.seed,
                    &[0xde7, n as u64, ai as u64, ri as u64],
                ));
                let (mut closed_err, mut rec_err) = (0.0f64, 0.0f64);
                for trial in 0..config.det_trials {
                    let x = det_case(&mut rng, n, trial);
                    let inputs = DetInputs::new(&x, alpha, beta)?;
                    let direct = det_direct(inputs)?.log2;
                    if n <= CLOSED_FORM_MAX_N {
                        closed_err = closed_err.max(log_error(det_closed_form(inputs)?.log2, direct));
                    }
                    rec_err = rec_err.max(log_error(det_recursive(inputs).log2, direct));
                }
                let mut push = |q: Quantity, err: f64| {
                    rows.push(SweepRow {
                        alpha,
                        rho,
                        n,
                        quantity: q.as_str().into(),
                        mean: err,
                        std_error: 0.0,
                        n_samples: config.det_trials,
                        converged: err <= 1e-10,
                    })
                };
                if n <= CLOSED_FORM_MAX_N {
                    push(Quantity::DetClosedFormError, closed_err);
                }
                push(Quantity::DetRecursiveError, rec_err);
            }
        }
    }
    Ok(())
}

fn delta_table(config: &ExperimentConfig, rows: &mut Vec<SweepRow>) -> Result<()> {
    let (alpha, n) = (config.channel.alpha(), config.channel.block_len());
    for &rho in &config.rho_grid {
        let p = SnrPoint::new(rho)?;
        for (q, v) in [
            (Quantity::RateCsi, rate_csi_gaussian(p)),
            (Quantity::AwgnCapacity, awgn_capacity(p)),
            (Quantity::Delta, delta(p)),
            (Quantity::DeltaLimit, delta_limit()),
        ] {
            rows.push(SweepRow::new(alpha, rho, n, &Estimate::exact(v, q), true));
        }
    }
    Ok(())
}

/// `Î(X;Y)/N` and `Î(G;Y)/N` at `α = 0` from independent `h(Y)` estimates,
/// and their difference.
fn theorem4(config: &ExperimentConfig, rows: &mut Vec<SweepRow>) -> Result<()> {
    let mut index = 0u64;
    for n in config.block_lens() {
        let spec = config.channel.with_block_len(n)?.with_alpha(0.0)?;
        for &rho in &config.rho_grid {
            let input = input_at(&config.input, &spec, rho)?;
            let point = |key: u64| PointRows {
                alpha: 0.0,
                rho,
                spec,
                input: input.clone(),
                cfg: config.estimator_at(derive_key(0x74, &[index, key])),
                convergence_check: config.convergence_check,
                family: None,
            };
            let user = point(0);
            let (h_user, conv_user) = user.entropy()?;
            let ci = estimate_channel_info(&input, &spec, &user.cfg)?;
            let ui = user_info_from_parts(&h_user, &ci, &spec);

            let g = point(1);
            let (h_g, conv_g) = g.entropy()?;
            let hc = cond_entropy_y_given_g(&input, &spec, &g.cfg)?;
            let gy = h_g.minus(&hc, Quantity::GInfoY);

            user.push(rows, &ui, conv_user);
            user.push(rows, &gy, conv_g);
            user.push(rows, &ui.minus(&gy, Quantity::UserMinusGInfo), conv_user && conv_g);
            index += 1;
        }
    }
    Ok(())
}

fn sanity(config: &ExperimentConfig, rows: &mut Vec<SweepRow>) -> Result<()> {
    let mut index = 0u64;
    for n in config.block_lens() {
        let base = config.channel.with_block_len(n)?;
        for &rho in &config.rho_grid {
            let input = input_at(&config.input, &base, rho)?;
            for &alpha in &config.alpha_grid {
                let spec = base.with_alpha(alpha)?;
                let q = sanity_quadratic_forms(&input, &spec, &config.estimator_at(index))?;
                rows.push(SweepRow::new(alpha, rho, n, &q.noise, true));
                rows.push(SweepRow::new(alpha, rho, n, &q.output, true));
                index += 1;
            }
        }
    }
    Ok(())
}
