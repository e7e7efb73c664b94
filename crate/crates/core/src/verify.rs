//! Monte Carlo and quadrature checks of the bounds: empirical moments and
//! tails with confidence intervals, KS tests for the samplers, moment and
//! tail tightness bands with fitted constants, and the Latała sandwich.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::bounds::{k_of_t, k_of_t_threshold, moment_rate, tail_exponent};
use crate::error::{Error, Result};
use crate::model::WeightedSumProblem;
use crate::orlicz::{orlicz_norm_analytic, sequence_orlicz_norm, GboFunction, ZSurvival};
use crate::root::{bisect, expand_up, DEFAULT_MAX_ITER};
use crate::sampling::{role, sample_z, sample_zstar, substream};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
/// 95% two-sided normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Share of `Σ|x|^p` carried by the largest term above which a moment estimate is flagged.
pub const HEAVY_TAIL_TOP_WEIGHT: f64 = 0.5;

/// `(e−1)/(2e²)` and `e`.
pub const LATALA_LOWER: f64 = (std::f64::consts::E - 1.0) / (2.0 * std::f64::consts::E * std::f64::consts::E);
pub const LATALA_UPPER: f64 = std::f64::consts::E;

/// `‖Y‖_p = Γ(p/2 + 1)^{1/p}`.
pub fn y_moment_exact(p: f64) -> f64 {
    (ln_gamma(0.5 * p + 1.0) / p).exp()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (i, frac) = (h.floor() as usize, h - h.floor());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub p: f64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Largest single `|x|^p` divided by the total.
    pub top_weight: f64,
    pub heavy_tail_warning: bool,
}

/// `(mean |x|^p)^{1/p}` for each `p`, with 95% percentile-bootstrap intervals.
///
/// All orders share the same bootstrap resamples.
pub fn empirical_moments(xs: &[f64], ps: &[f64], seed: u64) -> Result<Vec<MomentEstimate>> {
    if xs.is_empty() {
        return Err(Error::invalid("sample is empty"));
    }
    if let Some(p) = ps.iter().find(|p| !p.is_finite() || **p < 1.0) {
        return Err(Error::domain(format!("moment order must be >= 1, got {p}")));
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("non-finite sample value {x}")));
    }
    let n = xs.len();
    let logs: Vec<f64> = xs.iter().map(|x| x.abs().ln()).collect();
    let k = ps.len();
    // w[j*k + r] = |x_j|^{p_r} / max_j |x_j|^{p_r}
    let mut shift = vec![f64::NEG_INFINITY; k];
    for &l in &logs {
        for (r, &p) in ps.iter().enumerate() {
            shift[r] = shift[r].max(p * l);
        }
    }
    let mut w = vec![0.0; n * k];
    for (j, &l) in logs.iter().enumerate() {
        for (r, &p) in ps.iter().enumerate() {
            w[j * k + r] = if shift[r] == f64::NEG_INFINITY { 0.0 } else { (p * l - shift[r]).exp() };
        }
    }
    let to_moment = |r: usize, sum: f64| -> f64 {
        if sum == 0.0 {
            0.0
        } else {
            ((shift[r] + (sum / n as f64).ln()) / ps[r]).exp()
        }
    };
    let mut totals = vec![0.0; k];
    for row in w.chunks_exact(k) {
        for (t, v) in totals.iter_mut().zip(row) {
            *t += v;
        }
    }
    let resampled: Vec<Vec<f64>> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, role::BOOTSTRAP, b as u64);
            let mut sums = vec![0.0; k];
            for _ in 0..n {
                let j = rng.random_range(0..n);
                for (s, v) in sums.iter_mut().zip(&w[j * k..(j + 1) * k]) {
                    *s += v;
                }
            }
            sums.iter().enumerate().map(|(r, &s)| to_moment(r, s)).collect()
        })
        .collect();
    Ok((0..k)
        .map(|r| {
            let mut boot: Vec<f64> = resampled.iter().map(|v| v[r]).collect();
            boot.sort_by(f64::total_cmp);
            let top_weight = if totals[r] > 0.0 { 1.0 / totals[r] } else { 0.0 };
            MomentEstimate {
                p: ps[r],
                estimate: to_moment(r, totals[r]),
                ci_lo: quantile_sorted(&boot, 0.025),
                ci_hi: quantile_sorted(&boot, 0.975),
                top_weight,
                heavy_tail_warning: top_weight > HEAVY_TAIL_TOP_WEIGHT,
            }
        })
        .collect())
}

pub fn empirical_moment(xs: &[f64], p: f64, seed: u64) -> Result<MomentEstimate> {
    Ok(empirical_moments(xs, &[p], seed)?[0])
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let phat = k / n;
    let denom = 1.0 + z * z / n;
    let center = (phat + z * z / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0.0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub t: f64,
    pub frequency: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub exceedances: usize,
}

/// Sorted magnitudes for repeated `Pr[|X| ≥ t]` queries.
#[derive(Debug, Clone)]
pub struct TailCounter {
    sorted: Vec<f64>,
}

impl TailCounter {
    pub fn new(xs: &[f64]) -> Self {
        let mut sorted: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
        sorted.sort_by(f64::total_cmp);
        TailCounter { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.sorted.last().copied().unwrap_or(0.0)
    }

    pub fn exceedances(&self, t: f64) -> usize {
        self.sorted.len() - self.sorted.partition_point(|&x| x < t)
    }

    pub fn estimate(&self, t: f64) -> TailEstimate {
        let k = self.exceedances(t);
        let n = self.sorted.len();
        let (ci_lo, ci_hi) = wilson_interval(k, n, Z95);
        TailEstimate { t, frequency: if n == 0 { 0.0 } else { k as f64 / n as f64 }, ci_lo, ci_hi, exceedances: k }
    }
}

/// Fraction of `|x| ≥ t` with a 95% Wilson interval.
pub fn empirical_tail(xs: &[f64], t: f64) -> Result<TailEstimate> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t must be nonnegative, got {t}")));
    }
    Ok(TailCounter::new(xs).estimate(t))
}

/// `sup_t |F_n(t) − F(t)|` for a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// `sup_t |F_n(t) − G_m(t)|`.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic KS critical value `√(−ln(level/2)/2)·√((n+m)/(nm))`; pass `m = None` for one sample.
pub fn ks_critical(level: f64, n: usize, m: Option<usize>) -> f64 {
    let c = (-(0.5 * level).ln() / 2.0).sqrt();
    match m {
        None => c / (n as f64).sqrt(),
        Some(m) => c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub alpha: f64,
    pub l: f64,
    pub count: usize,
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// One-sample KS of `|Z|` draws against `1 − exp(−min{t², (t/l)^α})` at level 1e−3.
pub fn ks_check_z(alpha: f64, l: f64, count: usize, seed: u64) -> Result<KsReport> {
    let batch = sample_z(alpha, l, count, seed)?;
    let survival = ZSurvival::new(alpha, l)?;
    let statistic = ks_one_sample(&batch.magnitudes(), |t| {
        -crate::orlicz::Survival::log_survival(&survival, t).exp_m1()
    });
    let critical = ks_critical(1e-3, count, None);
    Ok(KsReport { alpha, l, count, statistic, critical, pass: statistic < critical })
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    if var == 0.0 {
        return 0.0;
    }
    xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / var
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GboIntervalCheck {
    pub alpha: f64,
    pub l: f64,
    pub norm: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

pub const GBO_INTERVAL_SLACK: f64 = 1e-4;

/// `‖Z‖_{φ_{α,l}} ∈ [min{√2, 2^{1/α}}, max{√3, 3^{1/α}}]`.
pub fn gbo_interval_check(alpha: f64, l: f64) -> Result<GboIntervalCheck> {
    let sol = orlicz_norm_analytic(&ZSurvival::new(alpha, l)?, &GboFunction::new(alpha, l)?)?;
    let lower = 2f64.sqrt().min(2f64.powf(1.0 / alpha));
    let upper = 3f64.sqrt().max(3f64.powf(1.0 / alpha));
    let norm = sol.eta_star;
    let pass = norm >= lower - GBO_INTERVAL_SLACK && norm <= upper + GBO_INTERVAL_SLACK;
    Ok(GboIntervalCheck { alpha, l, norm, lower, upper, pass })
}

/// Per-grid comparison of empirical quantities with a rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessReport {
    pub grid: Vec<f64>,
    pub empirical: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub rate: Vec<f64>,
    pub ratio: Vec<f64>,
    pub fitted_constant_upper: f64,
    pub fitted_constant_lower: Option<f64>,
    /// `max ratio / min ratio`.
    pub band_ratio: f64,
    pub warnings: Vec<String>,
}

fn band(ratio: &[f64]) -> f64 {
    let max = ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratio.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// `‖Z*‖_p` (Monte Carlo) against `moment_rate(p)` at `c = 1`.
///
/// `fitted_constant_upper` is the largest ratio and `fitted_constant_lower` the smallest.
pub fn rosenthal_sandwich(problem: &WeightedSumProblem, p_grid: &[f64], reps: usize, seed: u64) -> Result<TightnessReport> {
    if p_grid.is_empty() {
        return Err(Error::invalid("p grid is empty"));
    }
    let mut warnings = Vec::new();
    if let Some(p) = p_grid.iter().find(|p| **p > 16.0) {
        warnings.push(format!("p = {p} is above 16; Monte Carlo moments are unreliable there"));
    }
    let q = problem.canonicalize();
    let sample = sample_zstar(&q, reps, seed)?;
    let moments = empirical_moments(&sample.values, p_grid, crate::sampling::child_seed(seed, role::BOOTSTRAP, 0))?;
    let mut report = TightnessReport {
        grid: p_grid.to_vec(),
        empirical: Vec::new(),
        ci_lo: Vec::new(),
        ci_hi: Vec::new(),
        rate: Vec::new(),
        ratio: Vec::new(),
        fitted_constant_upper: 0.0,
        fitted_constant_lower: None,
        band_ratio: 0.0,
        warnings,
    };
    for m in &moments {
        let rate = moment_rate(&q, m.p, 1.0)?.value;
        if m.heavy_tail_warning {
            report
                .warnings
                .push(format!("p = {}: largest draw carries {:.3} of the moment sum", m.p, m.top_weight));
        }
        report.empirical.push(m.estimate);
        report.ci_lo.push(m.ci_lo);
        report.ci_hi.push(m.ci_hi);
        report.rate.push(rate);
        report.ratio.push(m.estimate / rate);
    }
    report.fitted_constant_upper = report.ratio.iter().copied().fold(0.0, f64::max);
    report.fitted_constant_lower = Some(report.ratio.iter().copied().fold(f64::INFINITY, f64::min));
    report.band_ratio = band(&report.ratio);
    Ok(report)
}

/// Smallest `c > 0` with `exp(−c·m)/c ≤ f`.
fn lower_form_constant(m: f64, f: f64) -> Result<f64> {
    if f >= 1.0 {
        // e^{-cm}/c ≤ 1 holds once c ≥ 1 regardless of m
        let above = |c: f64| Ok((-c * m).exp() / c > f);
        return Ok(bisect(above, 1e-12, 1.0, 1e-12, DEFAULT_MAX_ITER).map(|b| b.hi).unwrap_or(1.0));
    }
    let above = |c: f64| Ok((-c * m).exp() / c > f);
    let hi = expand_up(above, 1.0, 1e12)?;
    Ok(bisect(above, 1e-12, hi, 1e-12, DEFAULT_MAX_ITER)?.hi)
}

/// Fitted constants of the closed-form tail bounds from tail frequencies.
///
/// `fitted_constant_upper` is the smallest `c` with `f(t) ≤ 2exp(−m(t)/c)` on the
/// grid, `fitted_constant_lower` (α ≤ 1 only) the smallest `c` with
/// `exp(−c·m(t))/c ≤ f(t)`. `rate` holds the upper bound at the fitted constant.
pub fn fit_tail_constants_from(
    problem: &WeightedSumProblem,
    estimates: &[TailEstimate],
) -> Result<TightnessReport> {
    if estimates.is_empty() {
        return Err(Error::domain("no admissible grid points for tail fitting"));
    }
    let mut c_up: f64 = 0.0;
    let mut c_low: f64 = 0.0;
    let mut exponents = Vec::with_capacity(estimates.len());
    for e in estimates {
        let (m, _) = tail_exponent(problem, e.t)?;
        exponents.push(m);
        if e.frequency > 0.0 {
            c_up = c_up.max(m / (2.0 / e.frequency).ln());
            if problem.alpha() <= 1.0 {
                c_low = c_low.max(lower_form_constant(m, e.frequency)?);
            }
        }
    }
    if !(c_up > 0.0) {
        return Err(Error::numerical("fitted upper tail constant is not positive"));
    }
    let rate: Vec<f64> = exponents.iter().map(|m| 2.0 * (-m / c_up).exp()).collect();
    let empirical: Vec<f64> = estimates.iter().map(|e| e.frequency).collect();
    let ratio: Vec<f64> = empirical.iter().zip(&rate).map(|(f, r)| f / r).collect();
    Ok(TightnessReport {
        grid: estimates.iter().map(|e| e.t).collect(),
        band_ratio: band(&ratio),
        empirical,
        ci_lo: estimates.iter().map(|e| e.ci_lo).collect(),
        ci_hi: estimates.iter().map(|e| e.ci_hi).collect(),
        rate,
        ratio,
        fitted_constant_upper: c_up,
        fitted_constant_lower: (problem.alpha() <= 1.0).then_some(c_low),
        warnings: Vec::new(),
    })
}

/// [`fit_tail_constants_from`] on a sample, keeping grid points with at least 50 exceedances.
pub fn fit_tail_constants(problem: &WeightedSumProblem, sample: &[f64], t_grid: &[f64]) -> Result<TightnessReport> {
    let counter = TailCounter::new(sample);
    let estimates: Vec<TailEstimate> = t_grid
        .iter()
        .map(|&t| counter.estimate(t))
        .filter(|e| e.exceedances >= 50)
        .collect();
    let mut report = fit_tail_constants_from(problem, &estimates)?;
    let dropped = t_grid.len() - estimates.len();
    if dropped > 0 {
        report.warnings.push(format!("{dropped} grid points dropped for having fewer than 50 exceedances"));
    }
    Ok(report)
}

/// Smallest `c` with `f(t) ≤ exp(−K(t)/c)` over the grid points inside the K domain.
pub fn fit_k_constant(problem: &WeightedSumProblem, estimates: &[TailEstimate]) -> Result<f64> {
    let threshold = k_of_t_threshold(problem)?;
    let mut c: f64 = 0.0;
    for e in estimates.iter().filter(|e| e.t >= threshold && e.frequency > 0.0 && e.frequency < 1.0) {
        c = c.max(k_of_t(problem, e.t)? / -e.frequency.ln());
    }
    if !(c > 0.0) {
        return Err(Error::domain("no grid point inside the K(t) domain"));
    }
    Ok(c)
}

/// `(K(t)/c_K) / (m(t)/c_up)` at each grid point inside the K domain.
pub fn tail_exponent_ratios(problem: &WeightedSumProblem, grid: &[f64], c_k: f64, c_up: f64) -> Result<Vec<(f64, f64)>> {
    let threshold = k_of_t_threshold(problem)?;
    grid.iter()
        .filter(|&&t| t >= threshold)
        .map(|&t| {
            let (m, _) = tail_exponent(problem, t)?;
            Ok((t, (k_of_t(problem, t)? / c_k) / (m / c_up)))
        })
        .collect()
}

/// Geometric grid from the K-domain threshold to the largest `t` with at least
/// `min_exceedances` sample points above it.
pub fn admissible_tail_grid(
    problem: &WeightedSumProblem,
    counter: &TailCounter,
    points: usize,
    min_exceedances: usize,
) -> Result<Vec<f64>> {
    let lo = k_of_t_threshold(problem)?;
    if counter.len() < min_exceedances {
        return Err(Error::domain("sample too small for the requested exceedance floor"));
    }
    let sorted_desc_idx = counter.len() - min_exceedances;
    let hi = counter.sorted[sorted_desc_idx];
    if !(hi > lo) || points < 2 {
        return Err(Error::domain(format!("empty admissible tail grid: [{lo}, {hi}]")));
    }
    let r = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points).map(|k| lo * (k as f64 * r).exp()).collect())
}

/// One (α, n, L-pattern) instance of the standard battery, with `a_i = 1/√i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryProblem {
    pub name: String,
    pub problem: WeightedSumProblem,
}

pub const BATTERY_ALPHAS: [f64; 3] = [0.5, 1.0, 2.0];
pub const BATTERY_SIZES: [usize; 3] = [1, 4, 16];
pub const BATTERY_PATTERNS: [&str; 3] = ["constant", "increasing", "mixed"];

pub fn battery_scales(pattern: &str, n: usize) -> Result<Vec<f64>> {
    Ok(match pattern {
        "constant" => vec![1.0; n],
        "increasing" if n == 1 => vec![0.5],
        "increasing" => (0..n).map(|i| 0.5 + 1.5 * i as f64 / (n - 1) as f64).collect(),
        "mixed" => (0..n).map(|i| [0.0, 2.0, 0.5, 1.0][i % 4]).collect(),
        other => return Err(Error::invalid(format!("unknown scale pattern {other}"))),
    })
}

pub fn battery_problem(alpha: f64, n: usize, pattern: &str) -> Result<BatteryProblem> {
    let weights = (1..=n).map(|i| 1.0 / (i as f64).sqrt()).collect();
    let problem = WeightedSumProblem::new(alpha, weights, battery_scales(pattern, n)?)?;
    Ok(BatteryProblem { name: format!("alpha={alpha}/n={n}/{pattern}"), problem })
}

/// All 27 combinations of [`BATTERY_ALPHAS`], [`BATTERY_SIZES`] and [`BATTERY_PATTERNS`].
pub fn standard_battery() -> Vec<BatteryProblem> {
    let mut out = Vec::new();
    for alpha in BATTERY_ALPHAS {
        for n in BATTERY_SIZES {
            for pattern in BATTERY_PATTERNS {
                out.push(battery_problem(alpha, n, pattern).expect("battery parameters are valid"));
            }
        }
    }
    out
}

/// Six problems spanning the battery, used where the full battery is too costly.
pub fn reduced_battery() -> Vec<BatteryProblem> {
    [(0.5, 4, "mixed"), (0.5, 16, "constant"), (1.0, 1, "constant"), (1.0, 4, "mixed"), (1.0, 16, "increasing"), (2.0, 4, "constant")]
        .into_iter()
        .map(|(a, n, pat)| battery_problem(a, n, pat).expect("battery parameters are valid"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatalaRow {
    pub p: f64,
    pub sequence_norm: f64,
    pub lower: f64,
    pub upper: f64,
    pub estimate: MomentEstimate,
    pub pass: bool,
}

/// Checks `LATALA_LOWER·|||(a_iZ_i)|||_p ≤ ‖Z*‖_p ≤ LATALA_UPPER·|||(a_iZ_i)|||_p`,
/// requiring the whole bootstrap interval inside the bracket.
pub fn latala_check(problem: &WeightedSumProblem, ps: &[f64], reps: usize, seed: u64) -> Result<Vec<LatalaRow>> {
    let sample = sample_zstar(problem, reps, seed)?;
    let moments = empirical_moments(&sample.values, ps, crate::sampling::child_seed(seed, role::BOOTSTRAP, 0))?;
    moments
        .into_iter()
        .map(|m| {
            let s = sequence_orlicz_norm(problem, m.p)?;
            let (lower, upper) = (LATALA_LOWER * s, LATALA_UPPER * s);
            Ok(LatalaRow { p: m.p, sequence_norm: s, lower, upper, estimate: m, pass: lower <= m.ci_lo && m.ci_hi <= upper })
        })
        .collect()
}
