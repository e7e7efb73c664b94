//! Closed-form moment, GBO-norm and tail rates for `X* = Σ a_i X_i`.
//!
//! Every rate carries an explicit `constant_c` standing in for the
//! unspecified constant `C(α)`; evaluate at `c = 1` to get the bare shape.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BetaExponent, WeightedSumProblem};
use crate::norms::{lp_norm, truncated_norm, TruncationLevel};
use crate::root::{bisect, expand_down, expand_up, DEFAULT_MAX_ITER};

pub const BISECTION_REL_TOL: f64 = 1e-9;
const K_OF_T_MAX_P: f64 = 1_099_511_627_776.0; // 2^40

const L2: BetaExponent = BetaExponent::Finite(2.0);

/// Which branch of a max/min attained a rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SubgaussianBranch,
    SubweibullBranch,
    Mixed,
}

impl Regime {
    /// Regime of `max{gauss, weibull}` (or of the min when `take_max` is false).
    fn of(gauss: f64, weibull: f64, take_max: bool) -> Regime {
        if gauss == weibull || (gauss - weibull).abs() <= 1e-12 * gauss.abs().max(weibull.abs()) {
            Regime::Mixed
        } else if (gauss > weibull) == take_max {
            Regime::SubgaussianBranch
        } else {
            Regime::SubweibullBranch
        }
    }
}

/// A rate evaluated at a given constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub value: f64,
    pub constant_c: f64,
    pub regime: Regime,
    /// Set when a probability bound is above 1 and therefore trivial.
    pub exceeds_one: bool,
}

impl BoundValue {
    fn new(value: f64, constant_c: f64, regime: Regime) -> Self {
        BoundValue { value, constant_c, regime, exceeds_one: value > 1.0 }
    }
}

fn check_constant(c: f64) -> Result<()> {
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::invalid(format!("constant_c must be positive and finite, got {c}")));
    }
    Ok(())
}

/// The two branches `(√p‖a⊙L̄‖₂, p^{1/α}‖(a_iL_i : i ≤ p)‖_β)` of the moment rate.
pub fn moment_branches(problem: &WeightedSumProblem, p: f64) -> Result<(f64, f64)> {
    let level = TruncationLevel::new(p)?;
    let q = problem.canonicalize();
    let gauss = p.sqrt() * lp_norm(&q.weighted_lbar(), L2)?;
    let weibull = p.powf(1.0 / q.alpha()) * truncated_norm(&q.weighted_scales(), level, q.beta())?;
    Ok((gauss, weibull))
}

/// `c · max{√p‖a⊙L̄‖₂, p^{1/α}‖(a_iL_i : i ≤ p)‖_β}`.
pub fn moment_rate(problem: &WeightedSumProblem, p: f64, constant_c: f64) -> Result<BoundValue> {
    check_constant(constant_c)?;
    let (gauss, weibull) = moment_branches(problem, p)?;
    Ok(BoundValue::new(constant_c * gauss.max(weibull), constant_c, Regime::of(gauss, weibull, true)))
}

/// The additive form `√p‖a⊙L̄‖₂ + p^{1/α}‖(a_iL_i : i ≤ p)‖_β` inverted by [`k_of_t`].
pub fn moment_rate_sum(problem: &WeightedSumProblem, p: f64) -> Result<f64> {
    let (gauss, weibull) = moment_branches(problem, p)?;
    Ok(gauss + weibull)
}

/// Rate for ψ_α-normalized summands: `c · max{√p‖a‖₂, p^{1/α}‖(a_i : i ≤ p)‖_β}`.
///
/// Coefficients are ordered by decreasing magnitude before truncation.
pub fn moment_rate_psi(a: &[f64], alpha: f64, p: f64, constant_c: f64) -> Result<BoundValue> {
    check_constant(constant_c)?;
    let beta = crate::model::beta_of(alpha)?;
    let level = TruncationLevel::new(p)?;
    if let Some(x) = a.iter().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("non-finite coefficient {x}")));
    }
    let mut sorted: Vec<f64> = a.iter().map(|x| x.abs()).collect();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let gauss = p.sqrt() * lp_norm(&sorted, L2)?;
    let weibull = p.powf(1.0 / alpha) * truncated_norm(&sorted, level, beta)?;
    Ok(BoundValue::new(constant_c * gauss.max(weibull), constant_c, Regime::of(gauss, weibull, true)))
}

/// Parameters of the GBO-norm bound `‖X*‖_{φ_{α,L*}} ≤ ν*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GboBoundParams {
    pub l_star: f64,
    pub nu_star: f64,
}

pub fn gbo_bound_params(problem: &WeightedSumProblem, constant_c: f64) -> Result<GboBoundParams> {
    check_constant(constant_c)?;
    let l2 = lp_norm(&problem.weighted_lbar(), L2)?;
    if l2 == 0.0 {
        return Err(Error::domain("all weights are zero; L* is undefined"));
    }
    let lb = lp_norm(&problem.weighted_scales(), problem.beta())?;
    Ok(GboBoundParams { l_star: constant_c * lb / l2, nu_star: constant_c * l2 })
}

/// Smallest `t` for which [`k_of_t`] is defined: `‖a⊙L̄‖₂ + ‖a⊙L‖_∞`.
pub fn k_of_t_threshold(problem: &WeightedSumProblem) -> Result<f64> {
    Ok(lp_norm(&problem.weighted_lbar(), L2)? + lp_norm(&problem.weighted_scales(), BetaExponent::Infinity)?)
}

/// `K(t) = sup{p ≥ 1 : √p‖a⊙L̄‖₂ + p^{1/α}‖(a_iL_i : i ≤ p)‖_β ≤ t}`.
///
/// The returned `K` satisfies `g(K) ≤ t < g(K(1 + 1e-9))`.
pub fn k_of_t(problem: &WeightedSumProblem, t: f64) -> Result<f64> {
    let threshold = k_of_t_threshold(problem)?;
    if !t.is_finite() || t < threshold {
        return Err(Error::domain(format!(
            "K(t) requires t >= ||a.Lbar||_2 + ||a.L||_inf = {threshold}, got {t}"
        )));
    }
    let below = |p: f64| moment_rate_sum(problem, p).map(|g| g <= t);
    if !below(1.0)? {
        return Err(Error::numerical(format!("rate at p = 1 already exceeds t = {t}")));
    }
    let p_max = expand_up(below, 2.0, K_OF_T_MAX_P).map_err(|_| {
        Error::domain(format!("K(t) exceeds 2^40 for t = {t}; the rate is (numerically) bounded"))
    })?;
    let bracket = bisect(below, 1.0, p_max, BISECTION_REL_TOL, DEFAULT_MAX_ITER)?;
    Ok(bracket.lo)
}

/// `exp(−K(t)/c)`.
pub fn tail_upper_k(problem: &WeightedSumProblem, t: f64, constant_c: f64) -> Result<BoundValue> {
    check_constant(constant_c)?;
    let k = k_of_t(problem, t)?;
    let (gauss, weibull) = moment_branches(problem, k)?;
    Ok(BoundValue::new((-k / constant_c).exp(), constant_c, Regime::of(gauss, weibull, true)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

/// Exponent `m(t) = min{t²/‖a⊙L̄‖₂², t^α/‖a⊙L‖_β^α}` and the branch attaining it.
pub fn tail_exponent(problem: &WeightedSumProblem, t: f64) -> Result<(f64, Regime)> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::domain(format!("t must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok((0.0, Regime::Mixed));
    }
    let l2 = lp_norm(&problem.weighted_lbar(), L2)?;
    let lb = lp_norm(&problem.weighted_scales(), problem.beta())?;
    let gauss = if l2 == 0.0 { f64::INFINITY } else { (t / l2).powi(2) };
    let weibull = if lb == 0.0 { f64::INFINITY } else { (t / lb).powf(problem.alpha()) };
    Ok((gauss.min(weibull), Regime::of(gauss, weibull, false)))
}

/// Closed-form tail bounds: `2exp(−m(t)/c)` (upper) or `exp(−c·m(t))/c` (lower, α ≤ 1 only).
///
/// Values above 1 are returned as computed with `exceeds_one` set.
pub fn tail_closed_form(problem: &WeightedSumProblem, t: f64, constant_c: f64, side: Side) -> Result<BoundValue> {
    check_constant(constant_c)?;
    if side == Side::Lower && problem.alpha() > 1.0 {
        return Err(Error::UnsupportedRegime(format!(
            "the closed-form lower tail bound needs alpha <= 1, got {}",
            problem.alpha()
        )));
    }
    let (m, regime) = tail_exponent(problem, t)?;
    let value = match side {
        Side::Upper => 2.0 * (-m / constant_c).exp(),
        Side::Lower => (-constant_c * m).exp() / constant_c,
    };
    Ok(BoundValue::new(value, constant_c, regime))
}

/// Log-tail functions `N_i` of `Z_i/L̄_i` and their Legendre duals `N_i*`, for α > 1.
#[derive(Debug, Clone)]
pub struct DualFunctions {
    alpha: f64,
    lbar: Vec<f64>,
    scales: Vec<f64>,
}

impl DualFunctions {
    pub fn new(problem: &WeightedSumProblem) -> Result<Self> {
        if problem.alpha() <= 1.0 {
            return Err(Error::UnsupportedRegime(format!(
                "dual functions are defined for alpha > 1, got {}",
                problem.alpha()
            )));
        }
        Ok(DualFunctions { alpha: problem.alpha(), lbar: problem.lbar(), scales: problem.scales().to_vec() })
    }

    pub fn len(&self) -> usize {
        self.lbar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lbar.is_empty()
    }

    /// `N_i(t) = min{L̄_i²t², ((L̄_i/L_i)t)^α}`.
    pub fn n(&self, i: usize, t: f64) -> f64 {
        let (lb, l) = (self.lbar[i], self.scales[i]);
        let quad = lb * lb * t * t;
        if l == 0.0 {
            return quad;
        }
        quad.min((lb / l * t).powf(self.alpha))
    }

    /// `N_i*(t) = max{t²/(4L̄_i²), (α−1)(L_i t/(L̄_i α))^{α/(α−1)}}`.
    pub fn n_star(&self, i: usize, t: f64) -> f64 {
        let (lb, l, a) = (self.lbar[i], self.scales[i], self.alpha);
        let quad = t * t / (4.0 * lb * lb);
        let weibull = (a - 1.0) * (l * t / (lb * a)).powf(a / (a - 1.0));
        quad.max(weibull)
    }
}

/// `inf{t > 0 : Σ_{i≤⌊p⌋} N_i*(p a_iL̄_i/t) ≤ p} + √p (Σ_{i>⌊p⌋} a_i²L̄_i²)^{1/2}` (α > 1).
pub fn dual_moment_rate(problem: &WeightedSumProblem, p: f64) -> Result<f64> {
    let level = TruncationLevel::new(p)?;
    let q = problem.canonicalize();
    let duals = DualFunctions::new(&q)?;
    let coeffs = q.weighted_lbar();
    let k = level.keep(coeffs.len());
    let (head, tail) = coeffs.split_at(k);
    let tail_term = p.sqrt() * lp_norm(tail, L2)?;

    let head_max = head.iter().copied().fold(0.0, f64::max);
    if head_max == 0.0 {
        return Ok(tail_term);
    }
    let level_sum = |t: f64| -> f64 { head.iter().enumerate().map(|(i, &c)| duals.n_star(i, p * c / t)).sum() };
    let above = |t: f64| Ok(level_sum(t) > p);
    let start = p * head_max;
    let hi = expand_up(above, start, f64::MAX / 4.0)?;
    let lo = expand_down(above, hi * 0.5, f64::MIN_POSITIVE)?
        .ok_or_else(|| Error::numerical("dual rate: level sum stays below p as t -> 0"))?;
    let bracket = bisect(above, lo, hi, BISECTION_REL_TOL, DEFAULT_MAX_ITER)?;
    Ok(bracket.hi + tail_term)
}
