//! ℓ_β norms, including β = ∞, and prefix-truncated norms `‖(v_i : i ≤ p)‖_β`.

use crate::error::{Error, Result};
use crate::model::BetaExponent;

/// Moment order used as an index cutoff: keeps indices `i ≤ ⌊p⌋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLevel(f64);

impl TruncationLevel {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::domain(format!("truncation level p must be finite and >= 1, got {p}")));
        }
        Ok(Self(p))
    }

    pub fn p(&self) -> f64 {
        self.0
    }

    /// Number of leading entries kept out of `n`.
    pub fn keep(&self, n: usize) -> usize {
        let k = self.0.floor();
        if k >= n as f64 {
            n
        } else {
            k as usize
        }
    }
}

/// `(Σ|v_i|^β)^{1/β}`, or `max|v_i|` for β = ∞.
///
/// Entries are divided by the largest magnitude before powering so that
/// large β cannot overflow. The empty vector has norm 0.
pub fn lp_norm(v: &[f64], beta: BetaExponent) -> Result<f64> {
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("non-finite vector entry {x}")));
    }
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    match beta {
        BetaExponent::Infinity => Ok(max),
        BetaExponent::Finite(b) => {
            if !(b >= 1.0) || !b.is_finite() {
                return Err(Error::invalid(format!("norm exponent must be >= 1, got {b}")));
            }
            if max == 0.0 {
                return Ok(0.0);
            }
            let s: f64 = v.iter().map(|x| (x.abs() / max).powf(b)).sum();
            Ok(max * s.powf(1.0 / b))
        }
    }
}

/// ℓ_β norm of the prefix `(v_1, …, v_{min(⌊p⌋, n)})`.
///
/// `v` must already be in canonical order.
pub fn truncated_norm(v: &[f64], p: TruncationLevel, beta: BetaExponent) -> Result<f64> {
    lp_norm(&v[..p.keep(v.len())], beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const INF: BetaExponent = BetaExponent::Infinity;

    fn fin(b: f64) -> BetaExponent {
        BetaExponent::Finite(b)
    }

    fn lvl(p: f64) -> TruncationLevel {
        TruncationLevel::new(p).unwrap()
    }

    #[test]
    fn lp_examples() {
        assert_relative_eq!(lp_norm(&[3.0, 4.0], fin(2.0)).unwrap(), 5.0, epsilon = 1e-15);
        assert_eq!(lp_norm(&[1.0, 2.0, 3.0], INF).unwrap(), 3.0);
        assert_relative_eq!(lp_norm(&[1.0, 1.0], fin(3.0)).unwrap(), 2f64.powf(1.0 / 3.0), epsilon = 1e-15);
        assert_eq!(lp_norm(&[], fin(2.0)).unwrap(), 0.0);
        assert_eq!(lp_norm(&[-7.0, 2.0], INF).unwrap(), 7.0);
    }

    #[test]
    fn lp_rejects_bad_exponent() {
        assert!(lp_norm(&[1.0], fin(0.5)).is_err());
        assert!(lp_norm(&[1.0], fin(f64::NAN)).is_err());
        assert!(lp_norm(&[f64::INFINITY], fin(2.0)).is_err());
    }

    #[test]
    fn lp_no_overflow_for_large_values_and_exponents() {
        let v = [1e300, 1e300];
        assert_relative_eq!(lp_norm(&v, fin(2.0)).unwrap(), 1e300 * 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(lp_norm(&[2.0, 1.0], fin(1e6)).unwrap(), 2.0, max_relative = 1e-6);
    }

    #[test]
    fn truncated_examples() {
        let v = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(truncated_norm(&v, lvl(2.0), INF).unwrap(), 4.0);
        assert_relative_eq!(truncated_norm(&v, lvl(2.9), fin(2.0)).unwrap(), 5.0, epsilon = 1e-15);
        assert_eq!(truncated_norm(&[4.0, 3.0], lvl(10.0), INF).unwrap(), 4.0);
        assert_eq!(truncated_norm(&v, lvl(1.0), fin(2.0)).unwrap(), 4.0);
    }

    #[test]
    fn truncation_rejects_p_below_one() {
        assert!(TruncationLevel::new(0.99).is_err());
        assert!(TruncationLevel::new(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn truncated_norm_monotone_in_p(
            v in prop::collection::vec(0.0..10.0f64, 1..12),
            p1 in 1.0..20.0f64,
            dp in 0.0..20.0f64,
            b in 1.0..6.0f64,
        ) {
            let a = truncated_norm(&v, lvl(p1), fin(b)).unwrap();
            let c = truncated_norm(&v, lvl(p1 + dp), fin(b)).unwrap();
            prop_assert!(a <= c * (1.0 + 1e-12));
        }

        #[test]
        fn infinity_truncation_equals_max_for_sorted(
            mut v in prop::collection::vec(0.0..10.0f64, 1..12),
            p in 1.0..30.0f64,
        ) {
            v.sort_by(|x, y| y.total_cmp(x));
            prop_assert_eq!(truncated_norm(&v, lvl(p), INF).unwrap(), lp_norm(&v, INF).unwrap());
            prop_assert_eq!(lp_norm(&v, INF).unwrap(), v[0]);
        }

        #[test]
        fn homogeneous(
            v in prop::collection::vec(-10.0..10.0f64, 0..12),
            c in 0.0..100.0f64,
            b in 1.0..8.0f64,
        ) {
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            for beta in [fin(b), INF] {
                let lhs = lp_norm(&scaled, beta).unwrap();
                let rhs = c * lp_norm(&v, beta).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
            }
        }
    }
}
