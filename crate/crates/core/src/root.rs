//! Bracketing search for the boundary of a monotone predicate.
//!
//! Every solver in this crate reduces to "find the point where a monotone
//! map crosses a level", which is expressed here as a predicate that is true
//! below the crossing and false above it.

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 200;

/// Final bracket of a bisection: `pred(lo)` is true, `pred(hi)` is false.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Narrow `[lo, hi]` until `hi − lo ≤ rel_tol·|hi|`.
///
/// Requires `pred(lo) == true` and `pred(hi) == false`. On positive brackets
/// spanning more than a factor of two the geometric midpoint is used, so the
/// iteration count grows with the number of decades rather than their size.
pub fn bisect<F>(mut pred: F, mut lo: f64, mut hi: f64, rel_tol: f64, max_iter: usize) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(lo < hi) {
        return Err(Error::numerical(format!("empty bracket [{lo}, {hi}]")));
    }
    let mut iterations = 0;
    while hi - lo > rel_tol * hi.abs() {
        if iterations >= max_iter {
            return Err(Error::numerical(format!(
                "bisection did not reach relative tolerance {rel_tol} in {max_iter} iterations; bracket [{lo}, {hi}]"
            )));
        }
        let mid = if lo > 0.0 && hi > 2.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(Bracket { lo, hi, iterations })
}

/// Double `x` from `start` until `pred(x)` turns false; returns that `x`.
pub fn expand_up<F>(mut pred: F, start: f64, limit: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    let mut x = start;
    while pred(x)? {
        x *= 2.0;
        if x > limit {
            return Err(Error::numerical(format!("bracket expansion exceeded {limit}")));
        }
    }
    Ok(x)
}

/// Halve `x` from `start` until `pred(x)` turns true; `None` once `x` drops below `floor`.
pub fn expand_down<F>(mut pred: F, start: f64, floor: f64) -> Result<Option<f64>>
where
    F: FnMut(f64) -> Result<bool>,
{
    let mut x = start;
    while !pred(x)? {
        x *= 0.5;
        if x < floor {
            return Ok(None);
        }
    }
    Ok(Some(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let b = bisect(|x| Ok(x * x < 2.0), 0.0, 4.0, 1e-12, 200).unwrap();
        assert!(b.lo * b.lo < 2.0 && b.hi * b.hi >= 2.0);
        assert!((b.hi - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn geometric_steps_cover_many_decades() {
        let b = bisect(|x| Ok(x < 3e-40), 1e-300, 1e300, 1e-9, 200).unwrap();
        assert!((b.hi / 3e-40 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn iteration_cap_is_an_error() {
        assert!(bisect(|x| Ok(x < 0.5), 0.0, 1.0, 1e-12, 5).is_err());
    }

    #[test]
    fn expansion() {
        assert_eq!(expand_up(|x| Ok(x < 10.0), 1.0, 1e9).unwrap(), 16.0);
        assert!(expand_up(|_| Ok(true), 1.0, 1e3).is_err());
        assert_eq!(expand_down(|x| Ok(x < 0.3), 1.0, 1e-9).unwrap(), Some(0.25));
        assert_eq!(expand_down(|_| Ok(false), 1.0, 1e-9).unwrap(), None);
    }
}
