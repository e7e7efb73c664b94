//! Problem definition for weighted sums `X* = Σ a_i X_i` of independent
//! sub-Weibull(α, L_i) variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent of the ℓ_β norm paired with tail order α.
///
/// `β = α/(α−1)` for α > 1 and `β = ∞` otherwise. Infinity is kept as its
/// own variant so that the ℓ_∞ norm is always an exact maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaExponent {
    Finite(f64),
    Infinity,
}

impl BetaExponent {
    pub fn is_infinite(&self) -> bool {
        matches!(self, BetaExponent::Infinity)
    }

    /// Value as a float, with `f64::INFINITY` for the sentinel.
    pub fn as_f64(&self) -> f64 {
        match *self {
            BetaExponent::Finite(b) => b,
            BetaExponent::Infinity => f64::INFINITY,
        }
    }
}

pub fn beta_of(alpha: f64) -> Result<BetaExponent> {
    check_alpha(alpha)?;
    if alpha > 1.0 {
        Ok(BetaExponent::Finite(alpha / (alpha - 1.0)))
    } else {
        Ok(BetaExponent::Infinity)
    }
}

/// Elementwise `max{1, L_i}`.
pub fn lbar(scales: &[f64]) -> Vec<f64> {
    scales.iter().map(|&l| l.max(1.0)).collect()
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must be a positive finite number, got {alpha}")));
    }
    Ok(())
}

/// The tuple (α, a, L) defining a weighted sum.
///
/// `permutation[k]` is the index in the originally supplied vectors of the
/// entry now stored at position `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedSumProblem {
    alpha: f64,
    weights: Vec<f64>,
    scales: Vec<f64>,
    permutation: Vec<usize>,
}

impl WeightedSumProblem {
    pub fn new(alpha: f64, weights: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        if weights.is_empty() {
            return Err(Error::invalid("weights must have at least one entry"));
        }
        if weights.len() != scales.len() {
            return Err(Error::invalid(format!(
                "weights has {} entries but scales has {}",
                weights.len(),
                scales.len()
            )));
        }
        for (name, v) in [("weights", &weights), ("scales", &scales)] {
            if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < 0.0) {
                return Err(Error::invalid(format!(
                    "{name}[{i}] = {x} must be finite and nonnegative"
                )));
            }
        }
        let permutation = (0..weights.len()).collect();
        Ok(Self { alpha, weights, scales, permutation })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn beta(&self) -> BetaExponent {
        // alpha was validated on construction
        if self.alpha > 1.0 {
            BetaExponent::Finite(self.alpha / (self.alpha - 1.0))
        } else {
            BetaExponent::Infinity
        }
    }

    pub fn lbar(&self) -> Vec<f64> {
        lbar(&self.scales)
    }

    /// `a ⊙ L̄`.
    pub fn weighted_lbar(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.scales).map(|(a, l)| a * l.max(1.0)).collect()
    }

    /// `a ⊙ L`.
    pub fn weighted_scales(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.scales).map(|(a, l)| a * l).collect()
    }

    /// True when `a_i·L̄_i` is nonincreasing.
    pub fn is_canonical(&self) -> bool {
        self.weighted_lbar().windows(2).all(|w| w[0] >= w[1])
    }

    /// Reorder `(a, L)` jointly so that `a_i·L̄_i` is nonincreasing.
    ///
    /// The sort is stable, so ties keep their original relative order, and
    /// the permutation composes with any earlier one.
    pub fn canonicalize(&self) -> WeightedSumProblem {
        let key = self.weighted_lbar();
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| key[j].total_cmp(&key[i]));
        WeightedSumProblem {
            alpha: self.alpha,
            weights: order.iter().map(|&i| self.weights[i]).collect(),
            scales: order.iter().map(|&i| self.scales[i]).collect(),
            permutation: order.iter().map(|&i| self.permutation[i]).collect(),
        }
    }

    /// Same problem with every weight multiplied by `c ≥ 0`.
    pub fn scaled(&self, c: f64) -> Result<WeightedSumProblem> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::invalid(format!("scale factor must be finite and nonnegative, got {c}")));
        }
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|a| *a *= c);
        Ok(out)
    }
}

/// On-disk form of a problem: `alpha`, `weights[]`, `scales[]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub scales: Vec<f64>,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<WeightedSumProblem> {
        WeightedSumProblem::new(self.alpha, self.weights.clone(), self.scales.clone())
    }
}

impl From<&WeightedSumProblem> for ProblemConfig {
    fn from(p: &WeightedSumProblem) -> Self {
        ProblemConfig { alpha: p.alpha, weights: p.weights.clone(), scales: p.scales.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(a: &[f64], l: &[f64]) -> WeightedSumProblem {
        WeightedSumProblem::new(1.0, a.to_vec(), l.to_vec()).unwrap()
    }

    #[test]
    fn canonicalize_sorts_by_weighted_lbar() {
        let p = problem(&[1.0, 3.0, 2.0], &[1.0, 1.0, 1.0]).canonicalize();
        assert_eq!(p.weights(), &[3.0, 2.0, 1.0]);
        assert_eq!(p.scales(), &[1.0, 1.0, 1.0]);
        assert_eq!(p.permutation(), &[1, 2, 0]);
    }

    #[test]
    fn canonicalize_uses_lbar_not_l() {
        let p = problem(&[1.0, 1.0], &[0.5, 2.0]).canonicalize();
        assert_eq!(p.weights(), &[1.0, 1.0]);
        assert_eq!(p.scales(), &[2.0, 0.5]);
    }

    #[test]
    fn singleton_is_unchanged() {
        let p = problem(&[1.0], &[0.0]);
        assert_eq!(p.canonicalize(), p);
    }

    #[test]
    fn ties_keep_original_order() {
        let p = problem(&[1.0, 2.0, 1.0, 2.0], &[0.0, 0.5, 1.0, 0.0]).canonicalize();
        assert_eq!(p.permutation(), &[1, 3, 0, 2]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(WeightedSumProblem::new(0.0, vec![1.0], vec![1.0]).is_err());
        assert!(WeightedSumProblem::new(-1.0, vec![1.0], vec![1.0]).is_err());
        assert!(WeightedSumProblem::new(1.0, vec![-1.0], vec![1.0]).is_err());
        assert!(WeightedSumProblem::new(1.0, vec![1.0], vec![-0.1]).is_err());
        assert!(WeightedSumProblem::new(1.0, vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(WeightedSumProblem::new(1.0, vec![], vec![]).is_err());
        assert!(WeightedSumProblem::new(1.0, vec![f64::NAN], vec![1.0]).is_err());
        assert!(WeightedSumProblem::new(f64::INFINITY, vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn beta_rule() {
        assert_eq!(beta_of(2.0).unwrap(), BetaExponent::Finite(2.0));
        assert_eq!(beta_of(1.0).unwrap(), BetaExponent::Infinity);
        assert_eq!(beta_of(0.3).unwrap(), BetaExponent::Infinity);
        assert_eq!(beta_of(1.5).unwrap(), BetaExponent::Finite(3.0));
        assert!(beta_of(0.0).is_err());
        assert!(beta_of(-2.0).is_err());
    }

    #[test]
    fn beta_blows_up_near_one() {
        for m in [1e3, 1e6, 1e9] {
            let eps = 0.5 / m;
            assert!(beta_of(1.0 + eps).unwrap().as_f64() > m);
        }
    }

    #[test]
    fn lbar_examples() {
        assert_eq!(lbar(&[0.5, 1.0, 3.0]), vec![1.0, 1.0, 3.0]);
        assert_eq!(lbar(&[0.0]), vec![1.0]);
        assert_eq!(lbar(&[2.0, 2.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let bad = "alpha = 1.0\nweights = [1.0]\nscales = [1.0]\nbeta = 2.0\n";
        assert!(toml::from_str::<ProblemConfig>(bad).is_err());
        let ok = "alpha = 1.0\nweights = [1.0]\nscales = [1.0]\n";
        assert!(toml::from_str::<ProblemConfig>(ok).unwrap().build().is_ok());
    }
}
