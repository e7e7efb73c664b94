//! Orlicz norms: the GBO generator φ_{α,L} and its ψ_α sibling, norm solvers
//! for analytic laws and samples, the pair-mean function φ_p and the
//! sequence norm `|||(a_iZ_i)|||_p`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_alpha, WeightedSumProblem};
use crate::quad::integrate_log_semi_infinite;
use crate::root::{bisect, expand_down, expand_up, DEFAULT_MAX_ITER};

/// Relative tolerance on η used by every norm solver here.
pub const NORM_REL_TOL: f64 = 1e-9;
const QUAD_REL_TOL: f64 = 1e-11;
/// Largest argument for which `exp` is finite.
const EXP_MAX: f64 = 709.78;

/// Point where `x²` and `(x/l)^α` cross, `l^{−α/(2−α)}`; `None` when they never do.
pub fn crossover(alpha: f64, l: f64) -> Option<f64> {
    if l > 0.0 && alpha != 2.0 {
        let x = l.powf(-alpha / (2.0 - alpha));
        (x.is_finite() && x > 0.0).then_some(x)
    } else {
        None
    }
}

/// `min{x², (x/l)^α}`, with the second branch absent for `l = 0`.
fn mixed_exponent(alpha: f64, l: f64, x: f64) -> f64 {
    let quad = x * x;
    if l == 0.0 {
        quad
    } else {
        quad.min((x / l).powf(alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Family {
    Gbo { l: f64 },
    Psi,
}

/// Orlicz generator `g(x) = exp(E(x)) − 1` with `E(x) = min{x², (x/L)^α}` (GBO)
/// or `E(x) = x^α` (ψ_α).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GboFunction {
    alpha: f64,
    family: Family,
}

impl GboFunction {
    pub fn new(alpha: f64, l: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !l.is_finite() || l < 0.0 {
            return Err(Error::invalid(format!("L must be finite and nonnegative, got {l}")));
        }
        Ok(GboFunction { alpha, family: Family::Gbo { l } })
    }

    /// `ψ_α(x) = exp(x^α) − 1`.
    pub fn psi(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(GboFunction { alpha, family: Family::Psi })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `L`, or `None` for ψ_α.
    pub fn l(&self) -> Option<f64> {
        match self.family {
            Family::Gbo { l } => Some(l),
            Family::Psi => None,
        }
    }

    /// The exponent `E(x) = ln(1 + g(x))`.
    pub fn exponent(&self, x: f64) -> f64 {
        match self.family {
            Family::Gbo { l } => mixed_exponent(self.alpha, l, x),
            Family::Psi => x.powf(self.alpha),
        }
    }

    /// Inverse of the exponent: `max{√s, L s^{1/α}}` or `s^{1/α}`.
    pub fn exponent_inverse(&self, s: f64) -> f64 {
        match self.family {
            Family::Gbo { l } => s.sqrt().max(l * s.powf(1.0 / self.alpha)),
            Family::Psi => s.powf(1.0 / self.alpha),
        }
    }

    /// Where the two branches of the exponent meet, if anywhere.
    pub fn crossover(&self) -> Option<f64> {
        match self.family {
            Family::Gbo { l } => crossover(self.alpha, l),
            Family::Psi => None,
        }
    }

    /// `g(x)` for `x ≥ 0`; `+∞` once the exponent overflows.
    pub fn value(&self, x: f64) -> f64 {
        let e = self.exponent(x);
        if e > EXP_MAX {
            f64::INFINITY
        } else {
            e.exp_m1()
        }
    }
}

/// `t ↦ Pr[|X| ≥ t]` on `[0, ∞)`.
pub trait Survival: Sync {
    fn log_survival(&self, t: f64) -> f64;

    fn survival(&self, t: f64) -> f64 {
        self.log_survival(t).exp()
    }

    /// Points where the survival function has a kink.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// The extremal law: `Pr[|Z| ≥ t] = exp(−min{t², (t/l)^α})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZSurvival {
    pub alpha: f64,
    pub l: f64,
}

impl ZSurvival {
    pub fn new(alpha: f64, l: f64) -> Result<Self> {
        GboFunction::new(alpha, l)?;
        Ok(ZSurvival { alpha, l })
    }
}

impl Survival for ZSurvival {
    fn log_survival(&self, t: f64) -> f64 {
        -mixed_exponent(self.alpha, self.l, t)
    }

    fn kinks(&self) -> Vec<f64> {
        crossover(self.alpha, self.l).into_iter().collect()
    }
}

/// `Pr[|Y| ≥ t] = exp(−t²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct YSurvival;

impl Survival for YSurvival {
    fn log_survival(&self, t: f64) -> f64 {
        -t * t
    }
}

/// `X ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PointMassAtZero;

impl Survival for PointMassAtZero {
    fn log_survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// A user-supplied survival function, checked on a grid at construction.
pub struct ClosureSurvival<F> {
    f: F,
    kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> ClosureSurvival<F> {
    pub fn new(f: F, kinks: Vec<f64>) -> Result<Self> {
        let mut prev = f64::INFINITY;
        for k in -40..=40 {
            let t = if k == -40 { 0.0 } else { 1.5f64.powi(k) };
            let s = f(t);
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::invalid(format!("survival value {s} at t = {t} is not a probability")));
            }
            if s > prev {
                return Err(Error::invalid(format!("survival function increases near t = {t}")));
            }
            prev = s;
        }
        Ok(ClosureSurvival { f, kinks })
    }
}

impl<F: Fn(f64) -> f64 + Sync> Survival for ClosureSurvival<F> {
    fn log_survival(&self, t: f64) -> f64 {
        self.survival(t).ln()
    }

    /// Subnormal values are flushed to 0; their logarithms are too noisy to integrate.
    fn survival(&self, t: f64) -> f64 {
        let s = (self.f)(t);
        if s < f64::MIN_POSITIVE {
            0.0
        } else {
            s
        }
    }

    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

/// Outcome of an Orlicz-norm solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSolution {
    pub eta_star: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub expectation_at_eta_star: f64,
}

impl NormSolution {
    fn zero() -> Self {
        NormSolution { eta_star: 0.0, bracket: (0.0, 0.0), iterations: 0, expectation_at_eta_star: 0.0 }
    }
}

/// Solve `E(η) = 1` for a strictly decreasing `E`, starting the search at `start`.
fn solve_unit_level<F>(mut expectation: F, start: f64) -> Result<NormSolution>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut above = |eta: f64| expectation(eta).map(|e| e > 1.0);
    let hi = expand_up(&mut above, start, 1e300)?;
    let lo = expand_down(&mut above, hi * 0.5, 1e-300)?
        .ok_or_else(|| Error::numerical("Orlicz expectation stays below 1 as eta -> 0"))?;
    let b = bisect(&mut above, lo, hi, NORM_REL_TOL, DEFAULT_MAX_ITER)?;
    let (e_lo, e_hi) = (expectation(b.lo)?, expectation(b.hi)?);
    if !(e_lo > e_hi) {
        return Err(Error::numerical(format!(
            "Orlicz objective not strictly decreasing on final bracket [{}, {}]: {e_lo} vs {e_hi}",
            b.lo, b.hi
        )));
    }
    Ok(NormSolution { eta_star: b.hi, bracket: (b.lo, b.hi), iterations: b.iterations, expectation_at_eta_star: e_hi })
}

/// `E[g(|X|/η)] = ∫_0^∞ Pr[|X| ≥ η E⁻¹(s)] e^s ds`; `+∞` when divergent.
pub fn orlicz_expectation<S: Survival + ?Sized>(s: &S, g: &GboFunction, eta: f64) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::domain(format!("eta must be positive and finite, got {eta}")));
    }
    let mut breaks: Vec<f64> = s.kinks().iter().map(|&t| g.exponent(t / eta)).collect();
    if let Some(x) = g.crossover() {
        breaks.push(x * x);
    }
    let lf = |u: f64| {
        let v = s.log_survival(eta * g.exponent_inverse(u));
        if v == f64::NEG_INFINITY {
            v
        } else {
            v + u
        }
    };
    let q = integrate_log_semi_infinite(lf, &breaks, QUAD_REL_TOL)?;
    Ok(q.value())
}

/// `inf{η > 0 : E[g(|X|/η)] ≤ 1}` for a law given by its survival function.
///
/// A point mass at zero has norm 0.
pub fn orlicz_norm_analytic<S: Survival + ?Sized>(s: &S, g: &GboFunction) -> Result<NormSolution> {
    if s.survival(f64::MIN_POSITIVE) == 0.0 {
        return Ok(NormSolution::zero());
    }
    solve_unit_level(|eta| orlicz_expectation(s, g, eta), 1.0)
}

/// Empirical plug-in: `inf{η > 0 : mean g(|x_k|/η) ≤ 1}`.
pub fn orlicz_norm_sample(xs: &[f64], g: &GboFunction) -> Result<NormSolution> {
    if xs.is_empty() {
        return Err(Error::invalid("sample is empty"));
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("non-finite sample value {x}")));
    }
    let max = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return Ok(NormSolution::zero());
    }
    let n = xs.len() as f64;
    solve_unit_level(|eta| Ok(xs.iter().map(|x| g.value(x.abs() / eta)).sum::<f64>() / n), max)
}

/// `‖X‖_p = (∫_0^∞ p t^{p−1} Pr[|X| ≥ t] dt)^{1/p}` by quadrature.
pub fn abs_moment<S: Survival + ?Sized>(s: &S, p: f64) -> Result<f64> {
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::domain(format!("moment order must be positive, got {p}")));
    }
    let lf = |t: f64| p.ln() + (p - 1.0) * t.ln() + s.log_survival(t);
    let q = integrate_log_semi_infinite(lf, &s.kinks(), QUAD_REL_TOL)?;
    if q.is_divergent() {
        return Err(Error::numerical(format!("moment of order {p} diverges")));
    }
    Ok((q.log_value / p).exp())
}

/// `φ_p(x) = (|1+x|^p + |1−x|^p)/2`, `p ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairMeanFunction {
    p: f64,
}

impl PairMeanFunction {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 2.0 {
            return Err(Error::domain(format!("phi_p needs p >= 2, got {p}")));
        }
        Ok(PairMeanFunction { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn value(&self, x: f64) -> f64 {
        0.5 * ((1.0 + x).abs().powf(self.p) + (1.0 - x).abs().powf(self.p))
    }

    /// `ln φ_p'(u)` for `u > 0`, stable for large `p` and for `u` near 0 and 1.
    pub fn log_derivative(&self, u: f64) -> f64 {
        let k = self.p - 1.0;
        let head = (0.5 * self.p).ln();
        if u < 1.0 {
            // (1+u)^k − (1−u)^k = (1−u)^k (exp(2k·atanh u) − 1)
            head + k * (-u).ln_1p() + (2.0 * k * u.atanh()).exp_m1().ln()
        } else {
            head + k * u.ln_1p() + ((u - 1.0) / (u + 1.0)).powf(k).ln_1p()
        }
    }
}

fn check_phi_args(eta: f64, p: f64, alpha: f64, l: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::domain(format!("eta must be positive and finite, got {eta}")));
    }
    PairMeanFunction::new(p)?;
    check_alpha(alpha)?;
    if !l.is_finite() || l < 0.0 {
        return Err(Error::invalid(format!("l must be finite and nonnegative, got {l}")));
    }
    Ok(())
}

/// `ln ϕ_p(Z/η) = ln(1 + ∫_0^∞ φ_p'(u) Pr[|Z| ≥ ηu] du)` for `Z` with parameters `(α, l)`.
pub fn log_phi_p_z(eta: f64, p: f64, alpha: f64, l: f64) -> Result<f64> {
    check_phi_args(eta, p, alpha, l)?;
    let phi = PairMeanFunction::new(p)?;
    let mut breaks = vec![1.0];
    if let Some(x) = crossover(alpha, l) {
        breaks.push(x / eta);
    }
    let lf = |u: f64| phi.log_derivative(u) - mixed_exponent(alpha, l, eta * u);
    let q = integrate_log_semi_infinite(lf, &breaks, QUAD_REL_TOL)?;
    if q.is_divergent() {
        return Err(Error::numerical(format!("phi_p expectation diverges at eta = {eta}")));
    }
    let li = q.log_value;
    Ok(if li > 30.0 { li + (-li).exp().ln_1p() } else { li.exp().ln_1p() })
}

/// Explicit two-sided bounds on `ln ϕ_p(Z/η)` for α ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Lower: `p·min{1, max{p/(η²e⁶), (pl²/(e⁴η²))√(απ/2)(2/(αe))^{2/α}, (l^p/(e^{2p}η^p))√(απ/p)(p/(αe))^{p/α}}}`.
/// Upper: `2p·max{16p/η², (e⁴pl²/η²)√(απ/2)(2/(αe))^{2/α}, (e^{2p}l^p/η^p)√(απ/p)(p/(αe))^{p/α}}`.
pub fn log_phi_bounds(eta: f64, p: f64, alpha: f64, l: f64) -> Result<PhiBounds> {
    check_phi_args(eta, p, alpha, l)?;
    if alpha > 1.0 {
        return Err(Error::UnsupportedRegime(format!("log phi_p bounds need alpha <= 1, got {alpha}")));
    }
    let e = std::f64::consts::E;
    let (ln_p, ln_eta, ln_l) = (p.ln(), eta.ln(), l.ln());
    let ln_pi_a = (alpha * std::f64::consts::PI).ln();
    // shared factors √(απ/2)(2/(αe))^{2/α} and √(απ/p)(p/(αe))^{p/α}
    let g2 = 0.5 * (ln_pi_a - 2f64.ln()) + (2.0 / alpha) * (2.0 / (alpha * e)).ln();
    let gp = 0.5 * (ln_pi_a - ln_p) + (p / alpha) * (p / (alpha * e)).ln();
    // l = 0 sends ln l to −∞ and the l-terms to 0
    let l2 = if l == 0.0 { f64::NEG_INFINITY } else { 2.0 * ln_l };
    let lp = if l == 0.0 { f64::NEG_INFINITY } else { p * ln_l };

    let lower_terms = [
        ln_p - 2.0 * ln_eta - 6.0,
        ln_p + l2 - 4.0 - 2.0 * ln_eta + g2,
        lp - 2.0 * p - p * ln_eta + gp,
    ];
    let upper_terms = [
        16f64.ln() + ln_p - 2.0 * ln_eta,
        4.0 + ln_p + l2 - 2.0 * ln_eta + g2,
        2.0 * p + lp - p * ln_eta + gp,
    ];
    let max = |v: [f64; 3]| v.into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(PhiBounds {
        lower: p * max(lower_terms).min(0.0).exp(),
        upper: 2.0 * p * max(upper_terms).exp(),
    })
}

/// `|||(a_iZ_i)|||_p = inf{η > 0 : Σ_i ln ϕ_p(a_iZ_i/η) ≤ p}`.
pub fn sequence_orlicz_norm(problem: &WeightedSumProblem, p: f64) -> Result<f64> {
    PairMeanFunction::new(p)?;
    let terms: Vec<(f64, f64)> = problem
        .weights()
        .iter()
        .zip(problem.scales())
        .filter(|(a, _)| **a > 0.0)
        .map(|(&a, &l)| (a, l))
        .collect();
    if terms.is_empty() {
        return Ok(0.0);
    }
    let alpha = problem.alpha();
    let level = |eta: f64| -> Result<f64> {
        terms.iter().try_fold(0.0, |acc, &(a, l)| Ok(acc + log_phi_p_z(eta / a, p, alpha, l)?))
    };
    let above = |eta: f64| level(eta).map(|v| v > p);
    let scale = terms.iter().map(|&(a, l)| a * l.max(1.0)).fold(0.0, f64::max);
    let hi = expand_up(above, scale, 1e300)?;
    let lo = expand_down(above, hi * 0.5, 1e-300)?
        .ok_or_else(|| Error::numerical("sequence norm level stays below p as eta -> 0"))?;
    let b = bisect(above, lo, hi, NORM_REL_TOL, DEFAULT_MAX_ITER)?;
    Ok(b.hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, SQRT_2};

    #[test]
    fn gbo_value_examples() {
        let g = GboFunction::new(2.0, 1.0).unwrap();
        assert_eq!(g.value(0.0), 0.0);
        assert_relative_eq!(g.value(1.0), E - 1.0, max_relative = 1e-15);
        let g = GboFunction::new(1.0, 2.0).unwrap();
        assert_relative_eq!(g.value(1.0), 0.5f64.exp() - 1.0, max_relative = 1e-15);
        assert_eq!(g.value(1e6), f64::INFINITY);
        assert_eq!(g.crossover(), Some(0.5));
        let psi = GboFunction::psi(1.0).unwrap();
        assert_relative_eq!(psi.value(2.0), E * E - 1.0, max_relative = 1e-15);
        assert!(GboFunction::new(1.0, -1.0).is_err());
    }

    #[test]
    fn exponent_inverse_roundtrips() {
        for g in [GboFunction::new(0.5, 2.0).unwrap(), GboFunction::new(3.0, 0.5).unwrap(), GboFunction::psi(0.7).unwrap()]
        {
            for s in [1e-3, 0.3, 1.0, 7.0, 400.0] {
                assert_relative_eq!(g.exponent(g.exponent_inverse(s)), s, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_norm_in_closed_form() {
        // α = 2, L = 1: E[φ(|Z|/η)] = 1/(η² − 1)
        let s = ZSurvival::new(2.0, 1.0).unwrap();
        let g = GboFunction::new(2.0, 1.0).unwrap();
        assert_relative_eq!(orlicz_expectation(&s, &g, 3.0).unwrap(), 0.125, max_relative = 1e-9);
        let sol = orlicz_norm_analytic(&s, &g).unwrap();
        assert_relative_eq!(sol.eta_star, SQRT_2, max_relative = 1e-8);
        assert!(sol.bracket.0 < sol.bracket.1);
        assert!(sol.expectation_at_eta_star <= 1.0);
    }

    #[test]
    fn gbo_norms_of_z_match_reference_values() {
        let cases = [
            (0.5, 0.5, 2.7700962961697962),
            (0.5, 1.0, 3.1785472835852084),
            (0.5, 2.0, 3.5206358432571869),
            (1.0, 0.5, 1.5743690149454191),
            (1.0, 1.0, 1.8669230214074762),
            (1.0, 2.0, 1.9847727203972335),
            (2.0, 0.5, SQRT_2),
            (2.0, 2.0, SQRT_2),
        ];
        for (alpha, l, want) in cases {
            let sol = orlicz_norm_analytic(&ZSurvival::new(alpha, l).unwrap(), &GboFunction::new(alpha, l).unwrap())
                .unwrap();
            assert_relative_eq!(sol.eta_star, want, max_relative = 1e-7);
        }
    }

    #[test]
    fn point_mass_has_zero_norm() {
        let sol = orlicz_norm_analytic(&PointMassAtZero, &GboFunction::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(sol.eta_star, 0.0);
        let sol = orlicz_norm_sample(&[0.0, 0.0, 0.0], &GboFunction::psi(1.0).unwrap()).unwrap();
        assert_eq!(sol.eta_star, 0.0);
        assert!(orlicz_norm_sample(&[], &GboFunction::psi(1.0).unwrap()).is_err());
    }

    #[test]
    fn constant_sample_norm() {
        let g = GboFunction::new(2.0, 1.0).unwrap();
        let sol = orlicz_norm_sample(&[3.0; 5], &g).unwrap();
        assert_relative_eq!(sol.eta_star, 3.0 / 2f64.ln().sqrt(), max_relative = 1e-8);
    }

    #[test]
    fn closure_survival_is_validated() {
        assert!(ClosureSurvival::new(|t: f64| (-t).exp(), vec![]).is_ok());
        assert!(ClosureSurvival::new(|t: f64| t.min(1.0), vec![]).is_err());
        assert!(ClosureSurvival::new(|_| 1.5, vec![]).is_err());
        // Exp(1) under ψ_1: E[exp(|X|/η)] − 1 = 1/(η − 1), norm 2
        let s = ClosureSurvival::new(|t: f64| (-t).exp(), vec![]).unwrap();
        let sol = orlicz_norm_analytic(&s, &GboFunction::psi(1.0).unwrap()).unwrap();
        assert_relative_eq!(sol.eta_star, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn moments_by_quadrature() {
        assert_relative_eq!(abs_moment(&YSurvival, 2.0).unwrap(), 1.0, max_relative = 1e-10);
        // E[Z²] = 1 + 3/e for α = 1, l = 1
        let m2 = abs_moment(&ZSurvival::new(1.0, 1.0).unwrap(), 2.0).unwrap();
        assert_relative_eq!(m2 * m2, 2.103638323514327, max_relative = 1e-10);
    }

    #[test]
    fn pair_mean_function() {
        let f = PairMeanFunction::new(2.0).unwrap();
        assert_eq!(f.value(0.0), 1.0);
        assert_relative_eq!(f.value(3.0), 10.0);
        let f = PairMeanFunction::new(5.5).unwrap();
        assert_eq!(f.value(0.7), f.value(-0.7));
        let (p, k) = (5.5f64, 4.5f64);
        for u in [0.01f64, 0.5, 0.999, 1.0, 1.001, 3.0, 50.0] {
            let direct = 0.5 * p * ((1.0 + u).powf(k) - (1.0 - u).signum() * (1.0 - u).abs().powf(k));
            assert_relative_eq!(f.log_derivative(u).exp(), direct, max_relative = 1e-12);
        }
        // near 0, φ_p'(u) ≈ p(p−1)u
        assert_relative_eq!(f.log_derivative(1e-12).exp(), p * k * 1e-12, max_relative = 1e-9);
        assert!(PairMeanFunction::new(1.5).is_err());
    }

    #[test]
    fn log_phi_reference_values() {
        let cases = [
            (2.0, 2.0, 1.0, 1.0, 0.42259067873362972),
            (1.5, 4.0, 0.5, 2.0, 11.757347763362643),
            (10.0, 8.0, 0.25, 1.0, 63.137278718764922),
            (3.0, 4.0, 1.0, 0.0, 0.52553177115568615),
        ];
        for (eta, p, alpha, l, want) in cases {
            assert_relative_eq!(log_phi_p_z(eta, p, alpha, l).unwrap(), want, max_relative = 1e-8);
        }
    }

    #[test]
    fn log_phi_second_moment_identity() {
        // ϕ_2(Z/η) = 1 + E[Z²]/η²
        let m2 = abs_moment(&ZSurvival::new(1.0, 1.0).unwrap(), 2.0).unwrap().powi(2);
        for eta in [0.5, 2.0, 9.0] {
            let want = (m2 / (eta * eta)).ln_1p();
            assert_relative_eq!(log_phi_p_z(eta, 2.0, 1.0, 1.0).unwrap(), want, max_relative = 1e-6);
        }
    }

    #[test]
    fn log_phi_bounds_reference_values() {
        let b = log_phi_bounds(10.0, 2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(b.lower, 0.00049706482334680248, max_relative = 1e-12);
        assert_relative_eq!(b.upper, 2.9634587104662731, max_relative = 1e-12);
        let b = log_phi_bounds(3.0, 4.0, 0.5, 2.0).unwrap();
        assert_relative_eq!(b.lower, 0.93483095223412186, max_relative = 1e-12);
        assert_relative_eq!(b.upper, 16614022.319088046, max_relative = 1e-12);
        assert!(matches!(log_phi_bounds(1.0, 2.0, 1.5, 1.0), Err(Error::UnsupportedRegime(_))));
    }

    #[test]
    fn log_phi_bounds_without_scale() {
        let (p, eta) = (4.0, 7.0);
        let b = log_phi_bounds(eta, p, 0.5, 0.0).unwrap();
        assert_relative_eq!(b.lower, p * (p / (eta * eta * 6f64.exp())).min(1.0), max_relative = 1e-13);
        assert_relative_eq!(b.upper, 32.0 * p * p / (eta * eta), max_relative = 1e-13);
    }

    #[test]
    fn sequence_norm_single_term_matches_root_of_log_phi() {
        let problem = WeightedSumProblem::new(1.0, vec![1.0], vec![1.0]).unwrap();
        let eta = sequence_orlicz_norm(&problem, 4.0).unwrap();
        assert_relative_eq!(log_phi_p_z(eta, 4.0, 1.0, 1.0).unwrap(), 4.0, max_relative = 1e-6);
        let zero = WeightedSumProblem::new(1.0, vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(sequence_orlicz_norm(&zero, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn sequence_norm_is_homogeneous() {
        let problem = WeightedSumProblem::new(0.5, vec![1.0, 0.5, 0.2], vec![2.0, 0.0, 1.0]).unwrap();
        let base = sequence_orlicz_norm(&problem, 4.0).unwrap();
        let doubled = sequence_orlicz_norm(&problem.scaled(2.0).unwrap(), 4.0).unwrap();
        assert_relative_eq!(doubled, 2.0 * base, max_relative = 1e-7);
    }
}
