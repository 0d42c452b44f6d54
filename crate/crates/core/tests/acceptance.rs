//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use gmfade::analytic::{delta, delta_limit, exp_integral_e1, rate_csi_gaussian, SnrPoint};
use gmfade::determinant::{det_closed_form, det_direct, det_recursive, DetInputs};
use gmfade::estimators::{
    entropy_y, estimate_channel_info, estimate_user_info, sanity_quadratic_forms, user_info_from_parts,
};
use gmfade::experiments::{self, csv_string, Experiment, ExperimentConfig, NamedInput, VerdictKind};
use gmfade::streams::stream;
use gmfade::{ChannelSpec, Complex64, EstimatorConfig, InputSpec};
use gmfade_oracle::{e1_by_quadrature, entropy_y_scalar_discrete, entropy_y_scalar_gaussian};
use rand::Rng;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

// Scalar output entropies at ρ = 10 (σ_G² = σ_Z² = 1), from 2-D quadrature of
// the exact mixture density.
const H_Y_SCALAR_GAUSSIAN: f64 = 6.382_273_657_260;
const H_Y_SCALAR_QPSK: f64 = 6.553_622_788_999;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_time(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    check(took < limit, format!("{detail}; {:.1}s of {}s", took.as_secs_f64(), limit.as_secs()))
}

fn log_rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

fn random_block<R: Rng>(rng: &mut R, n: usize, pattern: usize) -> Vec<Complex64> {
    let mut x: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
        .collect();
    match pattern % 4 {
        0 => {}
        1 => {
            let keep = rng.random_range(0..n);
            (0..n).filter(|&i| i != keep).for_each(|i| x[i] = Complex64::default());
        }
        2 => x.iter_mut().filter(|_| rng.random_bool(0.5)).for_each(|v| *v = Complex64::default()),
        _ => x.fill(Complex64::default()),
    }
    x
}

fn spec(alpha: f64, n: usize) -> ChannelSpec {
    ChannelSpec::new(alpha, 1.0, 1.0, n).unwrap()
}

fn gaussian(rho: f64) -> InputSpec {
    InputSpec::iid_gaussian(rho).unwrap()
}

fn determinant_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(101);
    let (mut worst_closed, mut worst_rec) = (0.0f64, 0.0f64);
    for case in 0..1000 {
        let n = rng.random_range(1..=12);
        let alpha = match case % 10 {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..1.0),
        };
        let beta = 10f64.powf(rng.random_range(-2.0..2.0));
        let x = random_block(&mut rng, n, case);
        let inp = DetInputs::new(&x, alpha, beta).unwrap();
        let direct = det_direct(inp).unwrap().log2;
        worst_closed = worst_closed.max(log_rel(det_closed_form(inp).unwrap().log2, direct));
        worst_rec = worst_rec.max(log_rel(det_recursive(inp).log2, direct));
    }
    let detail = format!("max rel err closed {worst_closed:.1e}, recursive {worst_rec:.1e}");
    if worst_closed > 1e-10 || worst_rec > 1e-10 {
        return Err(detail);
    }
    within_time(Duration::from_secs(30), start, detail)
}

fn monotone_in_alpha() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(202);
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let beta = 0.5;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut min_drop = f64::INFINITY;
    for _ in 0..200 {
        let n = rng.random_range(2..=12);
        let mut x = random_block(&mut rng, n, 2);
        // Force at least two nonzero symbols.
        let nonzero = x.iter().filter(|v| v.norm_sqr() > 0.0).count();
        for i in 0..(2usize.saturating_sub(nonzero)) {
            x[i] = Complex64::new(1.0, 0.5);
        }
        if x.iter().filter(|v| v.norm_sqr() > 0.0).count() < 2 {
            x[n - 1] = Complex64::new(-0.7, 1.0);
        }
        let d: Vec<f64> = grid
            .iter()
            .map(|&a| det_recursive(DetInputs::new(&x, a, beta).unwrap()).log2)
            .collect();
        for w in d.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
        min_drop = min_drop.min(d[0] - d[10]);
    }
    let mut worst_flat = 0.0f64;
    for case in 0..50 {
        let n = rng.random_range(1..=12);
        let x = random_block(&mut rng, n, if case % 2 == 0 { 1 } else { 3 });
        let d: Vec<f64> = grid
            .iter()
            .map(|&a| det_recursive(DetInputs::new(&x, a, beta).unwrap()).log2)
            .collect();
        worst_flat = d.iter().fold(worst_flat, |m, v| m.max((v - d[0]).abs()));
    }
    let detail = format!(
        "largest rise {worst_rise:.1e}, smallest end-to-end drop {min_drop:.2e}, \
         largest spread with <=1 nonzero {worst_flat:.1e}"
    );
    if worst_rise > 1e-12 || min_drop <= 1e-12 || worst_flat > 1e-12 {
        return Err(detail);
    }
    within_time(Duration::from_secs(10), start, detail)
}

fn closed_form_endpoints() -> Outcome {
    let mut rng = stream(303);
    let mut worst = 0.0f64;
    for case in 0..400 {
        let n = rng.random_range(1..=12);
        let beta = 10f64.powf(rng.random_range(-1.0..1.0));
        let x = random_block(&mut rng, n, case);
        let u: Vec<f64> = x.iter().map(|v| v.norm_sqr()).collect();
        let white: f64 = u.iter().map(|ui| (beta + ui).log2()).sum();
        let coherent = (n as f64 - 1.0) * beta.log2() + (beta + u.iter().sum::<f64>()).log2();
        for (alpha, want) in [(0.0, white), (1.0, coherent)] {
            let inp = DetInputs::new(&x, alpha, beta).unwrap();
            for got in [
                det_direct(inp).unwrap().log2,
                det_closed_form(inp).unwrap().log2,
                det_recursive(inp).log2,
            ] {
                // Relative error of D itself.
                worst = worst.max(((got - want) * std::f64::consts::LN_2).exp_m1().abs());
            }
        }
    }
    check(worst <= 1e-12, format!("max rel err on D {worst:.1e} over three routes"))
}

fn channel_info_closed_form() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for rho in [1.0, 10.0] {
        let est = estimate_channel_info(&gaussian(rho), &spec(0.0, 4), &EstimatorConfig::new(200_000, 1, 404)).unwrap();
        let want = rate_csi_gaussian(SnrPoint::new(rho).unwrap());
        let z = (est.mean - want) / est.std_error;
        ok &= z.abs() <= 3.0 && est.std_error < 5e-3;
        parts.push(format!("rho={rho}: {:.5} vs {want:.5} ({z:+.2} SE, SE {:.1e})", est.mean, est.std_error));
    }
    let detail = parts.join("; ");
    if !ok {
        return Err(detail);
    }
    within_time(Duration::from_secs(60), start, detail)
}

fn e1_against_quadrature() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let x = 1e-6 * (50.0f64 / 1e-6).powf(i as f64 / 49.0);
        let want = e1_by_quadrature(x);
        worst = worst.max((exp_integral_e1(x).unwrap() - want).abs() / want);
    }
    check(worst <= 1e-9, format!("max rel err {worst:.1e}"))
}

fn delta_limit_value() -> Outcome {
    let d = delta(SnrPoint::new(1e6).unwrap());
    let lim = delta_limit();
    let ok = (d - lim).abs() <= 1e-3 && lim > 0.832_746 && lim < 0.832_747 && (lim * 100.0).round() == 83.0;
    check(ok, format!("delta(1e6) = {d:.7}, limit {lim:.7}"))
}

fn theorem4_equality() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::preset(Experiment::Theorem4, 505);
    cfg.convergence_check = false;
    let res = experiments::run(&cfg).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for row in res.rows_for("user_minus_g_info") {
        let z = row.mean / row.std_error;
        ok &= z.abs() <= 3.0;
        parts.push(format!("N={} rho={}: {z:+.2} SE", row.n, row.rho));
    }
    ok &= parts.len() == 4;
    let detail = parts.join(", ");
    if !ok {
        return Err(detail);
    }
    within_time(Duration::from_secs(300), start, detail)
}

fn theorem1_identity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 0.5, 0.9] {
        let s = spec(alpha, 2);
        let input = gaussian(10.0);
        let cfg = |seed| EstimatorConfig::new(100_000, 256, seed);
        let ui = estimate_user_info(&input, &s, &cfg(601)).unwrap();
        let ci = estimate_channel_info(&input, &s, &cfg(602)).unwrap();
        let h = entropy_y(&input, &s, &cfg(603)).unwrap();
        let lhs = ui.mean + ci.mean;
        let rhs = h.mean - s.noise_entropy_per_symbol();
        let se = ui.std_error.hypot(ci.std_error).hypot(h.std_error);
        let z = (lhs - rhs) / se;

        // Same-sample version holds to rounding.
        let h_same = entropy_y(&input, &s, &cfg(603)).unwrap();
        let ci_same = estimate_channel_info(&input, &s, &cfg(603)).unwrap();
        let exact = user_info_from_parts(&h_same, &ci_same, &s).mean + ci_same.mean - rhs;

        ok &= z.abs() <= 3.0 && exact.abs() < 1e-12;
        parts.push(format!("alpha={alpha}: {z:+.2} SE"));
    }
    check(ok, parts.join(", "))
}

fn theorem5_sandwich() -> Outcome {
    let mut cfg = ExperimentConfig::preset(Experiment::SweepAlpha, 707);
    cfg.estimator = EstimatorConfig::new(20_000, 256, 707);
    cfg.common_random_numbers = true;
    cfg.convergence_check = false;
    let res = experiments::run(&cfg).map_err(|e| e.to_string())?;
    let find = |q: &str, alpha: f64, rho: f64| {
        res.rows_for(q)
            .find(|r| r.alpha == alpha && r.rho == rho)
            .cloned()
            .expect("row present")
    };
    let mut worst_low = f64::INFINITY;
    let mut worst_high = f64::INFINITY;
    let mut rows = 0;
    let mut monotone = true;
    for &rho in &cfg.rho_grid {
        let mut prev = f64::NEG_INFINITY;
        for &alpha in &cfg.alpha_grid {
            let ui = find("user_info", alpha, rho);
            let lower = find("rate_lower", alpha, rho);
            let upper = find("rate_upper", alpha, rho);
            let se_l = ui.std_error.hypot(lower.std_error);
            let se_u = ui.std_error.hypot(upper.std_error);
            worst_low = worst_low.min((ui.mean - lower.mean) / se_l + 3.0);
            worst_high = worst_high.min((upper.mean - ui.mean) / se_u + 3.0);
            monotone &= lower.mean >= prev - 1e-12;
            prev = lower.mean;
            rows += 1;
        }
    }
    let detail = format!(
        "{rows} rows; tightest lower margin {worst_low:.2} SE, upper margin {worst_high:.2} SE \
         (both must be >= 0); R_l non-decreasing: {monotone}"
    );
    check(worst_low >= 0.0 && worst_high >= 0.0 && monotone && rows == 33, detail)
}

fn quadratic_forms() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    for (i, alpha) in [0.0, 0.5, 0.9, 1.0].into_iter().enumerate() {
        for input in [gaussian(10.0), InputSpec::qpsk(10.0).unwrap()] {
            let q = sanity_quadratic_forms(&input, &spec(alpha, 4), &EstimatorConfig::new(100_000, 1, 800 + i as u64))
                .unwrap();
            for est in [q.noise, q.output] {
                let z = ((est.mean - 1.0) / est.std_error).abs();
                worst = worst.max(z);
                ok &= z <= 3.0;
            }
        }
    }
    check(ok, format!("largest deviation from 1 is {worst:.2} SE over 16 statistics"))
}

fn theorem3_trend() -> Outcome {
    let rho = 10.0;
    let mut prev = f64::INFINITY;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2, 4, 8, 16, 32] {
        let est = estimate_channel_info(&gaussian(rho), &spec(1.0, n), &EstimatorConfig::new(20_000, 1, 909)).unwrap();
        let bound = (1.0 + n as f64 * rho).log2() / n as f64;
        ok &= est.mean <= bound && est.mean < prev;
        prev = est.mean;
        parts.push(format!("N={n}: {:.4} <= {bound:.4}", est.mean));
    }
    check(ok, parts.join(", "))
}

fn scalar_entropy_oracle() -> Outcome {
    let s = spec(0.0, 1);
    let qpsk = InputSpec::qpsk(10.0).unwrap();
    let InputSpec::IidDiscrete { points, probs, .. } = &qpsk else {
        unreachable!()
    };
    let live_g = entropy_y_scalar_gaussian(1.0, 10.0, 1.0);
    let live_q = entropy_y_scalar_discrete(points, probs, 1.0, 1.0);
    if (live_g - H_Y_SCALAR_GAUSSIAN).abs() > 1e-9 || (live_q - H_Y_SCALAR_QPSK).abs() > 1e-9 {
        return Err(format!("oracle drifted: {live_g} / {live_q}"));
    }
    let cfg = EstimatorConfig::new(200_000, 512, 1212);
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, input, want) in [("gaussian", gaussian(10.0), live_g), ("qpsk", qpsk.clone(), live_q)] {
        let est = entropy_y(&input, &s, &cfg).unwrap();
        let gap = (est.mean - want).abs();
        ok &= gap <= 3.0 * est.std_error + 1e-6;
        parts.push(format!("{name}: {:.5} vs {want:.5} ({:.2} SE)", est.mean, gap / est.std_error));
    }
    check(ok, parts.join("; "))
}

fn conjecture_report() -> Outcome {
    let mut cfg = ExperimentConfig::preset(Experiment::Conjecture, 1313);
    cfg.estimator = EstimatorConfig::new(20_000, 256, 1313);
    cfg.rho_grid = vec![10.0];
    cfg.common_random_numbers = true;
    cfg.convergence_check = false;
    cfg.families = vec![
        NamedInput {
            name: "gaussian".into(),
            input: gaussian(1.0),
        },
        NamedInput {
            name: "qpsk".into(),
            input: InputSpec::qpsk(1.0).unwrap(),
        },
    ];
    let res = experiments::run(&cfg).map_err(|e| e.to_string())?;
    let summary: Vec<String> = res
        .verdicts
        .iter()
        .map(|v| format!("{}: {} (max drop {:.2} SE)", v.family, v.verdict.as_str(), v.max_drop_sigmas))
        .collect();
    let summary = summary.join(", ");
    if res.verdicts.iter().all(|v| v.verdict != VerdictKind::ViolationCandidate) {
        return check(res.verdicts.len() == 2, summary);
    }
    let again = experiments::run(&cfg).map_err(|e| e.to_string())?;
    let same = csv_string(&res.rows).unwrap() == csv_string(&again.rows).unwrap();
    check(same, format!("{summary}; violation candidate replayed byte-identically: {same}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("determinant oracle equivalence", determinant_oracle_equivalence),
        ("monotonicity in alpha", monotone_in_alpha),
        ("closed-form endpoints", closed_form_endpoints),
        ("channel information closed form", channel_info_closed_form),
        ("E1 correctness", e1_against_quadrature),
        ("delta limit", delta_limit_value),
        ("I(X;Y) = I(G;Y) at alpha = 0", theorem4_equality),
        ("decomposition identity", theorem1_identity),
        ("rate sandwich", theorem5_sandwich),
        ("quadratic-form sanity", quadratic_forms),
        ("coherent block-length trend", theorem3_trend),
        ("scalar entropy oracle", scalar_entropy_oracle),
        ("conjecture report", conjecture_report),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
