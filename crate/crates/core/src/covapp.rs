//! Covariance heterogeneity experiment: `m` groups of `n` standard Gaussian
//! vectors in `R^q`, the statistic `T_ij = Σ_l (Σ̂^{(l)}_ij − δ_ij)²`, and the
//! tail and quantile bounds it is compared against.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{child_seed, role, sample_gaussian_groups, GaussianCube};
use crate::verify::quantile_sorted;

/// `(1/n) Σ_k x_k x_kᵀ` for `n` rows of length `q`, row-major `q × q`.
pub fn empirical_covariance(data: &[f64], q: usize) -> Result<Vec<f64>> {
    if q == 0 || data.is_empty() || data.len() % q != 0 {
        return Err(Error::invalid(format!(
            "data of length {} is not a nonempty set of rows of dimension {q}",
            data.len()
        )));
    }
    let n = data.len() / q;
    let mut s = vec![0.0; q * q];
    for x in data.chunks_exact(q) {
        for i in 0..q {
            for j in i..q {
                s[i * q + j] += x[i] * x[j];
            }
        }
    }
    for i in 0..q {
        for j in i..q {
            let v = s[i * q + j] / n as f64;
            s[i * q + j] = v;
            s[j * q + i] = v;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub q: usize,
    pub reps: usize,
    pub seed: u64,
    #[serde(default = "default_nu_grid")]
    pub nu_grid: Vec<f64>,
}

pub fn default_nu_grid() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

impl CovExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.q == 0 || self.reps == 0 {
            return Err(Error::invalid("m, n, q and reps must all be positive"));
        }
        if let Some(nu) = self.nu_grid.iter().find(|nu| !(**nu > 0.0) || !nu.is_finite()) {
            return Err(Error::invalid(format!("nu grid entries must be positive, got {nu}")));
        }
        Ok(())
    }
}

/// `T_ij` for `i ≤ j`, stored row by row over the upper triangle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovErrorStats {
    pub q: usize,
    pub terms: Vec<f64>,
    pub sup_term: f64,
}

impl CovErrorStats {
    /// Position of `(i, j)` in `terms`, symmetric in its arguments.
    pub fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.q - i * (i + 1) / 2 + j
    }

    pub fn term(&self, i: usize, j: usize) -> f64 {
        self.terms[self.index(i, j)]
    }
}

/// Leading term of a sampled cube against the identity covariance.
pub fn leading_term_from_cube(cube: &GaussianCube) -> Result<CovErrorStats> {
    let q = cube.q;
    let mut terms = vec![0.0; q * (q + 1) / 2];
    for g in 0..cube.m {
        let s = empirical_covariance(cube.group(g), q)?;
        let mut k = 0;
        for i in 0..q {
            for j in i..q {
                let d = s[i * q + j] - if i == j { 1.0 } else { 0.0 };
                terms[k] += d * d;
                k += 1;
            }
        }
    }
    let sup_term = terms.iter().copied().fold(0.0, f64::max);
    Ok(CovErrorStats { q, terms, sup_term })
}

pub fn leading_term(m: usize, n: usize, q: usize, seed: u64) -> Result<CovErrorStats> {
    leading_term_from_cube(&sample_gaussian_groups(m, n, q, seed)?)
}

/// Which term of `min{n²t²/m, nt, n√t}` is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem4Branch {
    Quadratic,
    Linear,
    SquareRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem4Value {
    pub value: f64,
    pub branch: Theorem4Branch,
    pub exceeds_one: bool,
}

fn theorem4_exponent(t: f64, m: usize, n: usize) -> Result<(f64, Theorem4Branch)> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be positive and finite, got {t}")));
    }
    if m == 0 || n == 0 {
        return Err(Error::invalid("m and n must be positive"));
    }
    let (m, n) = (m as f64, n as f64);
    let terms = [
        (n * n * t * t / m, Theorem4Branch::Quadratic),
        (n * t, Theorem4Branch::Linear),
        (n * t.sqrt(), Theorem4Branch::SquareRoot),
    ];
    Ok(terms.into_iter().fold((f64::INFINITY, Theorem4Branch::Quadratic), |acc, x| if x.0 < acc.0 { x } else { acc }))
}

/// `4exp(−c·min{n²t²/m, nt, n√t})`; `c = 0` gives the trivial value 4.
pub fn theorem4_tail_upper(t: f64, m: usize, n: usize, constant_c: f64) -> Result<Theorem4Value> {
    if !(constant_c >= 0.0) || !constant_c.is_finite() {
        return Err(Error::invalid(format!("constant must be finite and nonnegative, got {constant_c}")));
    }
    let (e, branch) = theorem4_exponent(t, m, n)?;
    let value = 4.0 * (-constant_c * e).exp();
    Ok(Theorem4Value { value, branch, exceeds_one: value > 1.0 })
}

/// `(1/c)·exp(−c·min{n²t²/m, nt, n√t})`.
pub fn theorem4_tail_lower(t: f64, m: usize, n: usize, constant_c: f64) -> Result<Theorem4Value> {
    if !(constant_c > 0.0) || !constant_c.is_finite() {
        return Err(Error::invalid(format!("constant must be positive and finite, got {constant_c}")));
    }
    let (e, branch) = theorem4_exponent(t, m, n)?;
    let value = (-constant_c * e).exp() / constant_c;
    Ok(Theorem4Value { value, branch, exceeds_one: value > 1.0 })
}

/// `c·((m + √(mν) + ν)/n + ν²/n²)`.
pub fn theorem4_quantile(nu: f64, m: usize, n: usize, constant_c: f64) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::domain(format!("nu must be positive and finite, got {nu}")));
    }
    if m == 0 || n == 0 {
        return Err(Error::invalid("m and n must be positive"));
    }
    let (m, n) = (m as f64, n as f64);
    Ok(constant_c * ((m + (m * nu).sqrt() + nu) / n + nu * nu / (n * n)))
}

/// Leading terms of `reps` independent cubes; replicate `r` uses seed `(seed, REPLICATE, r)`.
pub fn replicate_stats(m: usize, n: usize, q: usize, reps: usize, seed: u64) -> Result<Vec<CovErrorStats>> {
    (0..reps)
        .into_par_iter()
        .map(|r| leading_term(m, n, q, child_seed(seed, role::REPLICATE, r as u64)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageRow {
    pub nu: f64,
    pub quantile_bound: f64,
    /// Largest over pairs of the frequency of `T_ij > quantile_bound`.
    pub empirical_freq: f64,
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CenteredTailRow {
    pub t: f64,
    /// Largest over pairs of the frequency of `T_ij − c_fit·m/n ≥ t`.
    pub empirical_freq: f64,
    pub bound_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub config: CovExperimentConfig,
    /// Smallest `c` making every pair's exceedance frequency of the quantile bound at most `e^{−ν}`.
    pub c_fit: f64,
    pub coverage: Vec<CoverageRow>,
    /// Largest `c` for which `4exp(−c·min{…})` dominates every centered tail frequency.
    pub c_tail: f64,
    pub centered_tail: Vec<CenteredTailRow>,
    /// Mean of `T_ij` over pairs and replicates, divided by `m/n`.
    pub mean_term_over_m_by_n: f64,
    /// Empirical `1 − 1/n` quantile of `sup_ij T_ij`.
    pub sup_quantile: f64,
}

/// Multiples of `m/n` at which the centered statistic is examined.
pub const CENTERED_T_MULTIPLES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

pub fn coverage_experiment(config: &CovExperimentConfig) -> Result<CoverageReport> {
    config.validate()?;
    if config.nu_grid.is_empty() {
        return Err(Error::invalid("nu grid is empty"));
    }
    let (m, n, q, reps) = (config.m, config.n, config.q, config.reps);
    let stats = replicate_stats(m, n, q, reps, config.seed)?;
    let pairs = q * (q + 1) / 2;
    // per pair, the replicate values sorted in decreasing order
    let by_pair: Vec<Vec<f64>> = (0..pairs)
        .map(|k| {
            let mut v: Vec<f64> = stats.iter().map(|s| s.terms[k]).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        })
        .collect();
    let exceed = |k: usize, level: f64| by_pair[k].partition_point(|&x| x > level);
    let max_freq = |level: f64| (0..pairs).map(|k| exceed(k, level)).max().unwrap_or(0) as f64 / reps as f64;

    // with at most `allowed` values strictly above c·Q, c·Q must reach the (allowed+1)-th largest
    let mut c_fit: f64 = 0.0;
    for &nu in &config.nu_grid {
        let qn = theorem4_quantile(nu, m, n, 1.0)?;
        let allowed = ((-nu).exp() * reps as f64).floor() as usize;
        if allowed < reps {
            for v in &by_pair {
                c_fit = c_fit.max(v[allowed] / qn);
            }
        }
    }
    let coverage = config
        .nu_grid
        .iter()
        .map(|&nu| {
            let quantile_bound = theorem4_quantile(nu, m, n, c_fit)?;
            Ok(CoverageRow { nu, quantile_bound, empirical_freq: max_freq(quantile_bound), target: (-nu).exp() })
        })
        .collect::<Result<Vec<_>>>()?;

    let center = c_fit * m as f64 / n as f64;
    let mut centered = Vec::new();
    let mut c_tail = f64::INFINITY;
    for mult in CENTERED_T_MULTIPLES {
        let t = mult * m as f64 / n as f64;
        let count = (0..pairs).map(|k| by_pair[k].partition_point(|&x| x - center >= t)).max().unwrap_or(0);
        let f = count as f64 / reps as f64;
        let (e, _) = theorem4_exponent(t, m, n)?;
        if f > 0.0 {
            c_tail = c_tail.min((4.0 / f).ln() / e);
        }
        centered.push((t, f));
    }
    if c_tail == f64::INFINITY {
        c_tail = 0.0;
    }
    let centered_tail = centered
        .into_iter()
        .map(|(t, f)| Ok(CenteredTailRow { t, empirical_freq: f, bound_value: theorem4_tail_upper(t, m, n, c_tail)?.value }))
        .collect::<Result<Vec<_>>>()?;

    let total: f64 = stats.iter().map(|s| s.terms.iter().sum::<f64>()).sum();
    let mean_term_over_m_by_n = total / (pairs * reps) as f64 / (m as f64 / n as f64);
    let mut sups: Vec<f64> = stats.iter().map(|s| s.sup_term).collect();
    sups.sort_by(f64::total_cmp);
    let sup_quantile = quantile_sorted(&sups, 1.0 - 1.0 / n as f64);
    Ok(CoverageReport {
        config: config.clone(),
        c_fit,
        coverage,
        c_tail,
        centered_tail,
        mean_term_over_m_by_n,
        sup_quantile,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub m: usize,
    pub n: usize,
    pub q: usize,
    pub sup_quantile: f64,
    /// `(m + ln(qn))/n`.
    pub rate: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// `max ratio / min ratio`.
    pub band_ratio: f64,
}

/// Empirical `1 − 1/n` quantile of `sup T_ij` against `(m + ln(qn))/n` over a grid of sizes.
pub fn scaling_sweep(ms: &[usize], ns: &[usize], qs: &[usize], reps: usize, seed: u64) -> Result<ScalingReport> {
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &m in ms {
        for &n in ns {
            for &q in qs {
                let stats = replicate_stats(m, n, q, reps, child_seed(seed, role::REPLICATE, index))?;
                index += 1;
                let mut sups: Vec<f64> = stats.iter().map(|s| s.sup_term).collect();
                sups.sort_by(f64::total_cmp);
                let sup_quantile = quantile_sorted(&sups, 1.0 - 1.0 / n as f64);
                let rate = (m as f64 + (q as f64 * n as f64).ln()) / n as f64;
                rows.push(ScalingRow { m, n, q, sup_quantile, rate, ratio: sup_quantile / rate });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::invalid("empty sweep"));
    }
    let max = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(ScalingReport { rows, band_ratio: max / min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn covariance_examples() {
        assert_eq!(empirical_covariance(&[1.0, 2.0], 2).unwrap(), vec![1.0, 2.0, 2.0, 4.0]);
        assert_eq!(empirical_covariance(&[0.0; 6], 3).unwrap(), vec![0.0; 9]);
        assert_eq!(empirical_covariance(&[1.0, 3.0], 1).unwrap(), vec![5.0]);
        assert!(empirical_covariance(&[1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn single_draw_leading_term() {
        let cube = GaussianCube { m: 1, n: 1, q: 1, data: vec![2.0], seed: 0, generator_id: String::new() };
        let s = leading_term_from_cube(&cube).unwrap();
        assert_eq!(s.terms, vec![9.0]);
        assert_eq!(s.sup_term, 9.0);
    }

    #[test]
    fn term_indexing_is_symmetric() {
        let s = leading_term(2, 5, 4, 1).unwrap();
        assert_eq!(s.terms.len(), 10);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(s.term(i, j), s.term(j, i));
                assert!(s.term(i, j) <= s.sup_term);
            }
        }
        assert_eq!(s.index(3, 3), 9);
    }

    #[test]
    fn tail_upper_branches() {
        let v = theorem4_tail_upper(0.01, 100, 10, 1.0).unwrap();
        assert_eq!(v.branch, Theorem4Branch::Quadratic);
        assert_relative_eq!(v.value, 4.0 * (-1e-4f64).exp(), max_relative = 1e-14);
        assert_eq!(theorem4_tail_upper(4.0, 1, 10, 1.0).unwrap().branch, Theorem4Branch::SquareRoot);
        let zero = theorem4_tail_upper(1.0, 1, 1, 0.0).unwrap();
        assert_eq!(zero.value, 4.0);
        assert!(zero.exceeds_one);
        assert!(theorem4_tail_upper(0.0, 1, 1, 1.0).is_err());
    }

    #[test]
    fn tail_lower_linear_branch() {
        // m/n < t < 1: nt < n√t and nt < n²t²/m
        let v = theorem4_tail_lower(0.5, 2, 10, 1.0).unwrap();
        assert_eq!(v.branch, Theorem4Branch::Linear);
        assert_relative_eq!(v.value, (-5.0f64).exp(), max_relative = 1e-14);
        let u = theorem4_tail_upper(0.5, 2, 10, 1.0).unwrap();
        assert!(v.value <= u.value);
    }

    #[test]
    fn quantile_examples() {
        assert_relative_eq!(theorem4_quantile(1.0, 4, 10, 1.0).unwrap(), 0.71, max_relative = 1e-14);
        assert_relative_eq!(theorem4_quantile(1e-12, 4, 10, 1.0).unwrap(), 0.4, max_relative = 1e-5);
        let a = theorem4_quantile(0.01, 1000, 100, 1.0).unwrap();
        let b = theorem4_quantile(0.01, 1000, 200, 1.0).unwrap();
        assert_relative_eq!(a / b, 2.0, max_relative = 1e-3);
        assert!(theorem4_quantile(0.0, 4, 10, 1.0).is_err());
    }

    #[test]
    fn small_coverage_experiment() {
        let config = CovExperimentConfig { m: 3, n: 50, q: 3, reps: 400, seed: 5, nu_grid: vec![1.0, 2.0] };
        let r = coverage_experiment(&config).unwrap();
        assert!(r.c_fit > 0.0 && r.c_fit.is_finite());
        for row in &r.coverage {
            assert!(row.empirical_freq <= row.target);
        }
        assert!(r.mean_term_over_m_by_n > 1.0 / 3.0 && r.mean_term_over_m_by_n < 3.0);
        assert_eq!(r, coverage_experiment(&config).unwrap());
    }
}
