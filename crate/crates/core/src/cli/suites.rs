//! The `verify` suites. Each returns a JSON report and a per-grid CSV table
//! with columns `case, grid_value, empirical, ci_lo, ci_hi, rate, ratio`.

use serde::Serialize;
use serde_json::json;

use super::config::Suite;
use super::output::{Cell, Table};
use super::CliError;
use crate::sampling::{child_seed, role, sample_y, sample_zstar};
use crate::verify::{
    admissible_tail_grid, empirical_moments, fit_k_constant, fit_tail_constants_from, gbo_interval_check,
    ks_check_z, lag1_autocorrelation, latala_check, reduced_battery, rosenthal_sandwich, standard_battery,
    tail_exponent_ratios, y_moment_exact, TailCounter, TailEstimate,
};

/// The (α, L) grid of the sampler and GBO-interval checks.
pub const ALPHA_L_GRID: [(f64, f64); 9] =
    [(0.5, 0.5), (0.5, 1.0), (0.5, 2.0), (1.0, 0.5), (1.0, 1.0), (1.0, 2.0), (2.0, 0.5), (2.0, 1.0), (2.0, 2.0)];
pub const Y_MOMENT_ORDERS: [f64; 4] = [2.0, 4.0, 6.0, 8.0];
pub const ROSENTHAL_ORDERS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
pub const LATALA_ORDERS: [f64; 3] = [2.0, 4.0, 8.0];

pub const DEFAULT_COUNT: usize = 200_000;
pub const DEFAULT_REPS: usize = 20_000;

/// Moment ratios must sit in `[1/RATIO_BAND, RATIO_BAND]`.
pub const RATIO_BAND: f64 = 20.0;
/// Largest allowed `max ratio / min ratio` within one problem.
pub const MAX_BAND_RATIO: f64 = 10.0;
/// Admissible range of fitted tail constants.
pub const TAIL_CONSTANT_RANGE: (f64, f64) = (0.1, 20.0);
/// K-form and closed-form tail exponents must agree within this factor.
pub const EXPONENT_AGREEMENT: f64 = 5.0;
pub const TAIL_GRID_POINTS: usize = 12;
pub const MIN_EXCEEDANCES: usize = 50;

pub struct SuiteOutput {
    pub report: serde_json::Value,
    pub table: Table,
    pub pass: bool,
}

fn table() -> Table {
    Table::new(&["case", "grid_value", "empirical", "ci_lo", "ci_hi", "rate", "ratio"])
}

fn row(case: impl Into<Cell>, grid: Cell, emp: f64, ci: Option<(f64, f64)>, rate: f64, ratio: f64) -> Vec<Cell> {
    let (lo, hi) = ci.map_or((Cell::Empty, Cell::Empty), |(a, b)| (Cell::F(a), Cell::F(b)));
    vec![case.into(), grid, emp.into(), lo, hi, rate.into(), ratio.into()]
}

pub fn run_suite(suite: Suite, seed: u64, count: usize, reps: usize) -> Result<SuiteOutput, CliError> {
    match suite {
        Suite::Sampler => sampler(seed, count),
        Suite::Gbo => gbo(),
        Suite::Rosenthal => rosenthal(seed, reps),
        Suite::Tails => tails(seed, reps),
        Suite::Latala => latala(seed, reps),
    }
}

fn sampler(seed: u64, count: usize) -> Result<SuiteOutput, CliError> {
    let mut t = table();
    let mut ks = Vec::new();
    for (k, &(alpha, l)) in ALPHA_L_GRID.iter().enumerate() {
        let r = ks_check_z(alpha, l, count, child_seed(seed, role::REPLICATE, k as u64))?;
        t.push(row(format!("ks/alpha={alpha}/l={l}"), Cell::Empty, r.statistic, None, r.critical, r.statistic / r.critical));
        ks.push(r);
    }
    let y = sample_y(count, child_seed(seed, role::REPLICATE, ALPHA_L_GRID.len() as u64))?;
    let moments = empirical_moments(&y.values, &Y_MOMENT_ORDERS, child_seed(seed, role::BOOTSTRAP, 0))?;
    #[derive(Serialize)]
    struct YMoment {
        p: f64,
        exact: f64,
        estimate: f64,
        ci_lo: f64,
        ci_hi: f64,
        covered: bool,
    }
    let mut ym = Vec::new();
    for m in &moments {
        let exact = y_moment_exact(m.p);
        t.push(row("y_moment", m.p.into(), m.estimate, Some((m.ci_lo, m.ci_hi)), exact, m.estimate / exact));
        ym.push(YMoment { p: m.p, exact, estimate: m.estimate, ci_lo: m.ci_lo, ci_hi: m.ci_hi, covered: m.ci_lo <= exact && exact <= m.ci_hi });
    }
    let rho = lag1_autocorrelation(&y.magnitudes());
    let rho_limit = 4.0 / (count as f64).sqrt();
    let pass = ks.iter().all(|r| r.pass) && ym.iter().all(|m| m.covered) && rho.abs() < rho_limit;
    Ok(SuiteOutput {
        report: json!({
            "suite": "sampler",
            "seed": seed,
            "count": count,
            "ks": ks,
            "y_moments": ym,
            "y_norm_2_exact": y_moment_exact(2.0),
            "lag1_autocorrelation": rho,
            "lag1_limit": rho_limit,
            "pass": pass,
        }),
        table: t,
        pass,
    })
}

fn gbo() -> Result<SuiteOutput, CliError> {
    let mut t = table();
    let mut checks = Vec::new();
    for &(alpha, l) in &ALPHA_L_GRID {
        let c = gbo_interval_check(alpha, l)?;
        t.push(row(format!("gbo/alpha={alpha}/l={l}"), Cell::Empty, c.norm, Some((c.lower, c.upper)), c.upper, c.norm / c.upper));
        checks.push(c);
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteOutput { report: json!({ "suite": "gbo", "checks": checks, "pass": pass }), table: t, pass })
}

fn rosenthal(seed: u64, reps: usize) -> Result<SuiteOutput, CliError> {
    let mut t = table();
    let mut problems = Vec::new();
    let mut pass = true;
    for (k, b) in standard_battery().iter().enumerate() {
        let r = rosenthal_sandwich(&b.problem, &ROSENTHAL_ORDERS, reps, child_seed(seed, role::REPLICATE, k as u64))?;
        for i in 0..r.grid.len() {
            t.push(row(b.name.as_str(), r.grid[i].into(), r.empirical[i], Some((r.ci_lo[i], r.ci_hi[i])), r.rate[i], r.ratio[i]));
        }
        let ok = r.ratio.iter().all(|x| (1.0 / RATIO_BAND..=RATIO_BAND).contains(x)) && r.band_ratio <= MAX_BAND_RATIO;
        pass &= ok;
        problems.push(json!({ "name": b.name, "report": r, "pass": ok }));
    }
    Ok(SuiteOutput {
        report: json!({ "suite": "rosenthal", "seed": seed, "reps": reps, "problems": problems, "pass": pass }),
        table: t,
        pass,
    })
}

/// Tail fits for one problem: closed-form constants, the K-form constant and exponent ratios.
#[derive(Debug, Clone, Serialize)]
pub struct TailFit {
    pub name: String,
    pub estimates: Vec<TailEstimate>,
    pub c_upper: f64,
    pub c_lower: Option<f64>,
    pub c_k: f64,
    pub exponent_ratios: Vec<(f64, f64)>,
    pub rate: Vec<f64>,
    pub ratio: Vec<f64>,
}

impl TailFit {
    pub fn constants_ok(&self) -> bool {
        let (lo, hi) = TAIL_CONSTANT_RANGE;
        let ok = |c: f64| c.is_finite() && (lo..=hi).contains(&c);
        ok(self.c_upper) && self.c_lower.is_none_or(ok)
    }

    pub fn exponents_ok(&self) -> bool {
        !self.exponent_ratios.is_empty()
            && self.exponent_ratios.iter().all(|&(_, r)| (1.0 / EXPONENT_AGREEMENT..=EXPONENT_AGREEMENT).contains(&r))
    }
}

pub fn tail_fit(name: &str, problem: &crate::WeightedSumProblem, reps: usize, seed: u64) -> Result<TailFit, CliError> {
    let q = problem.canonicalize();
    let sample = sample_zstar(&q, reps, seed)?;
    let counter = TailCounter::new(&sample.values);
    let grid = admissible_tail_grid(&q, &counter, TAIL_GRID_POINTS, MIN_EXCEEDANCES)?;
    let estimates: Vec<TailEstimate> = grid.iter().map(|&t| counter.estimate(t)).collect();
    let fit = fit_tail_constants_from(&q, &estimates)?;
    let c_k = fit_k_constant(&q, &estimates)?;
    let exponent_ratios = tail_exponent_ratios(&q, &grid, c_k, fit.fitted_constant_upper)?;
    Ok(TailFit {
        name: name.to_string(),
        estimates,
        c_upper: fit.fitted_constant_upper,
        c_lower: fit.fitted_constant_lower,
        c_k,
        exponent_ratios,
        rate: fit.rate,
        ratio: fit.ratio,
    })
}

fn tails(seed: u64, reps: usize) -> Result<SuiteOutput, CliError> {
    let mut t = table();
    let mut fits = Vec::new();
    let mut pass = true;
    for (k, b) in reduced_battery().iter().enumerate().filter(|(_, b)| b.problem.alpha() <= 1.0) {
        let f = tail_fit(&b.name, &b.problem, reps, child_seed(seed, role::REPLICATE, k as u64))?;
        for (i, e) in f.estimates.iter().enumerate() {
            t.push(row(b.name.as_str(), e.t.into(), e.frequency, Some((e.ci_lo, e.ci_hi)), f.rate[i], f.ratio[i]));
        }
        let ok = f.constants_ok() && f.exponents_ok();
        pass &= ok;
        fits.push(json!({ "fit": f, "pass": ok }));
    }
    Ok(SuiteOutput {
        report: json!({ "suite": "tails", "seed": seed, "reps": reps, "problems": fits, "pass": pass }),
        table: t,
        pass,
    })
}

fn latala(seed: u64, reps: usize) -> Result<SuiteOutput, CliError> {
    let mut t = table();
    let mut problems = Vec::new();
    let mut pass = true;
    for (k, b) in reduced_battery().iter().enumerate() {
        let rows = latala_check(&b.problem.canonicalize(), &LATALA_ORDERS, reps, child_seed(seed, role::REPLICATE, k as u64))?;
        for r in &rows {
            let e = &r.estimate;
            t.push(row(b.name.as_str(), r.p.into(), e.estimate, Some((e.ci_lo, e.ci_hi)), r.sequence_norm, e.estimate / r.sequence_norm));
        }
        let ok = rows.iter().all(|r| r.pass);
        pass &= ok;
        problems.push(json!({ "name": b.name, "rows": rows, "pass": ok }));
    }
    Ok(SuiteOutput {
        report: json!({ "suite": "latala", "seed": seed, "reps": reps, "problems": problems, "pass": pass }),
        table: t,
        pass,
    })
}
