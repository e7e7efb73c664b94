//! Adaptive Gauss–Kronrod quadrature.
//!
//! [`integrate_panels`] is a global adaptive G7/K15 scheme over a fixed set of
//! starting panels. [`integrate_log_semi_infinite`] handles integrals over
//! `[0, ∞)` of rapidly varying positive integrands given through their
//! logarithm: it scans a geometric grid to locate the mass, rescales by the
//! peak, integrates up to a certified cutoff and returns the log of the result.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integrand values below `e^{-60}` times the peak are treated as negligible.
const LOG_CUTOFF: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evaluations: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        resk += WGK[j] * fsum;
        if j % 2 == 1 {
            resg += WG[j / 2] * fsum;
        }
    }
    (resk * half, ((resk - resg) * half).abs())
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Integrate `f` over `[edges[0], edges[last]]`, starting from the panels
/// delimited by `edges` and bisecting the panel with the largest error
/// estimate until `err ≤ max(abs_tol, rel_tol·|value|)`.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: &F,
    edges: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<QuadResult> {
    if edges.len() < 2 {
        return Ok(QuadResult { value: 0.0, abs_err: 0.0, evaluations: 0 });
    }
    let mut heap = BinaryHeap::new();
    let mut settled_value = 0.0;
    let mut settled_err = 0.0;
    let mut evaluations = 0;
    for w in edges.windows(2) {
        if !(w[1] > w[0]) {
            continue;
        }
        let (value, err) = gk15(f, w[0], w[1]);
        evaluations += 15;
        heap.push(Segment { a: w[0], b: w[1], value, err });
    }
    loop {
        let (value, err) = heap
            .iter()
            .fold((settled_value, settled_err), |(v, e), s| (v + s.value, e + s.err));
        if !value.is_finite() || !err.is_finite() {
            return Err(Error::numerical(format!(
                "quadrature produced a non-finite value ({value}, err {err}) on [{}, {}]",
                edges[0],
                edges[edges.len() - 1]
            )));
        }
        if err <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(QuadResult { value, abs_err: err, evaluations });
        }
        if heap.len() + 1 > max_segments {
            return Err(Error::numerical(format!(
                "quadrature did not converge: value {value}, error estimate {err}, {} segments, {evaluations} evaluations",
                heap.len()
            )));
        }
        let Some(worst) = heap.pop() else {
            return Ok(QuadResult { value, abs_err: err, evaluations });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) <= 1e-14 * worst.b.abs() {
            // cannot split further in floating point
            settled_value += worst.value;
            settled_err += worst.err;
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, err) = gk15(f, a, b);
            evaluations += 15;
            heap.push(Segment { a, b, value, err });
        }
    }
}

/// Log of a semi-infinite integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogQuad {
    /// `ln ∫_0^∞ exp(log_f(x)) dx`; `−∞` for a zero integral, `+∞` when divergent.
    pub log_value: f64,
    /// Relative error estimate of the integral.
    pub rel_err: f64,
    pub evaluations: usize,
    /// Upper end of the integrated range beyond which the tail was bounded analytically.
    pub cutoff: f64,
}

impl LogQuad {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn is_divergent(&self) -> bool {
        self.log_value == f64::INFINITY
    }
}

const SCAN_START: f64 = 1e-10;
const SCAN_END: f64 = 1e30;
const SCAN_RATIO: f64 = 1.25;

/// `ln ∫_0^∞ exp(log_f(x)) dx` for an integrand given in log space.
///
/// The integrand must be locally integrable at 0 and, past its peak, decay
/// at least exponentially in some power of `x`; an integrand that is still
/// within `e^{-60}` of its peak at `x = 1e30` is reported as divergent
/// (`+∞`). `breakpoints` are kinks or branch switches of the integrand and
/// become panel edges.
pub fn integrate_log_semi_infinite<F: Fn(f64) -> f64>(
    log_f: F,
    breakpoints: &[f64],
    rel_tol: f64,
) -> Result<LogQuad> {
    let mut grid = Vec::with_capacity(420);
    let mut x = SCAN_START;
    while x < SCAN_END {
        grid.push(x);
        x *= SCAN_RATIO;
    }
    grid.push(SCAN_END);
    let mut logs = Vec::with_capacity(grid.len() + breakpoints.len());
    for &x in &grid {
        let v = log_f(x);
        if v.is_nan() {
            return Err(Error::numerical(format!("log-integrand is NaN at {x}")));
        }
        logs.push(v);
    }
    let mut evaluations = grid.len();
    let mut peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for &b in breakpoints {
        if b > 0.0 && b.is_finite() {
            peak = peak.max(log_f(b));
            evaluations += 1;
        }
    }
    if peak == f64::NEG_INFINITY {
        return Ok(LogQuad { log_value: f64::NEG_INFINITY, rel_err: 0.0, evaluations, cutoff: 0.0 });
    }
    if peak == f64::INFINITY || logs[logs.len() - 1] >= peak - LOG_CUTOFF {
        return Ok(LogQuad { log_value: f64::INFINITY, rel_err: 0.0, evaluations, cutoff: SCAN_END });
    }
    let last_significant = logs
        .iter()
        .rposition(|&v| v > peak - LOG_CUTOFF)
        .unwrap_or(0);
    let last_significant = breakpoints
        .iter()
        .filter(|&&b| b > 0.0 && b.is_finite() && log_f(b) > peak - LOG_CUTOFF)
        .fold(last_significant, |idx, &b| idx.max(grid.partition_point(|&g| g <= b)));
    let cut_idx = (last_significant + 1).min(grid.len() - 1);
    let cutoff = grid[cut_idx];

    // panels of ratio ~2 along the scan grid, plus the requested breakpoints
    let mut edges: Vec<f64> = vec![0.0];
    edges.extend(grid[..=cut_idx].iter().step_by(3).copied());
    edges.push(cutoff);
    edges.extend(breakpoints.iter().copied().filter(|&b| b > 0.0 && b < cutoff));
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    // An integrand far above its scanned peak means the scan missed growth
    // (or the log-integrand is dominated by cancellation noise); report divergence.
    let overshoot = Cell::new(false);
    let scaled = |x: f64| {
        let v = log_f(x) - peak;
        if v > LOG_CUTOFF {
            overshoot.set(true);
            0.0
        } else if v < -700.0 {
            0.0
        } else {
            v.exp()
        }
    };
    let res = integrate_panels(&scaled, &edges, 0.0, rel_tol, 20_000);
    if overshoot.get() {
        return Ok(LogQuad { log_value: f64::INFINITY, rel_err: 0.0, evaluations, cutoff });
    }
    let res = res?;
    evaluations += res.evaluations;

    // exponential tail bound past the cutoff, from the local log-slope
    let mut tail = 0.0;
    if cut_idx + 1 < grid.len() {
        let (x0, x1) = (grid[cut_idx], grid[cut_idx + 1]);
        let slope = (logs[cut_idx] - logs[cut_idx + 1]) / (x1 - x0);
        if slope > 0.0 {
            tail = (logs[cut_idx] - peak).exp() / slope;
        }
    }
    let total = res.value + tail;
    if !(total > 0.0) {
        return Ok(LogQuad { log_value: f64::NEG_INFINITY, rel_err: 0.0, evaluations, cutoff });
    }
    Ok(LogQuad {
        log_value: peak + total.ln(),
        rel_err: (res.abs_err + tail) / total,
        evaluations,
        cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate_panels(&|x: f64| x.powi(5) - 2.0 * x, &[0.0, 2.0], 0.0, 1e-14, 100).unwrap();
        assert_relative_eq!(r.value, 64.0 / 6.0 - 4.0, max_relative = 1e-14);
    }

    #[test]
    fn oscillatory_finite_interval() {
        let r = integrate_panels(&|x: f64| (10.0 * x).sin(), &[0.0, PI], 1e-13, 1e-12, 1000).unwrap();
        assert!(r.value.abs() < 1e-10);
    }

    #[test]
    fn gaussian_half_line() {
        let r = integrate_log_semi_infinite(|x| -x * x, &[], 1e-12).unwrap();
        assert_relative_eq!(r.value(), PI.sqrt() / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn gamma_integral_with_far_peak() {
        // ∫ x^40 e^{-x} dx = 40!
        let r = integrate_log_semi_infinite(|x: f64| 40.0 * x.ln() - x, &[], 1e-12).unwrap();
        let ln40fact: f64 = (1..=40).map(|k| (k as f64).ln()).sum();
        assert_relative_eq!(r.log_value, ln40fact, max_relative = 1e-11);
    }

    #[test]
    fn stretched_exponential() {
        // ∫ exp(-x^{1/4}) dx = 4 Γ(4) = 24
        let r = integrate_log_semi_infinite(|x: f64| -x.powf(0.25), &[], 1e-12).unwrap();
        assert_relative_eq!(r.value(), 24.0, max_relative = 1e-9);
    }

    #[test]
    fn kink_at_breakpoint() {
        // exp(-min(x², x)) on [0, ∞) = ∫_0^1 e^{-x²} + e^{-1}
        let f = |x: f64| -(x * x).min(x);
        let r = integrate_log_semi_infinite(f, &[1.0], 1e-12).unwrap();
        let head = 0.746_824_132_812_427_0; // ∫_0^1 e^{-x²}
        assert_relative_eq!(r.value(), head + (-1.0f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn divergent_and_zero() {
        assert!(integrate_log_semi_infinite(|x| 0.01 * x, &[], 1e-10).unwrap().is_divergent());
        assert!(integrate_log_semi_infinite(|_| 0.0, &[], 1e-10).unwrap().is_divergent());
        let z = integrate_log_semi_infinite(|_| f64::NEG_INFINITY, &[], 1e-10).unwrap();
        assert_eq!(z.log_value, f64::NEG_INFINITY);
    }

    #[test]
    fn slow_exponential_decay() {
        // rate 1e-6: ∫ e^{-1e-6 x} = 1e6
        let r = integrate_log_semi_infinite(|x| -1e-6 * x, &[], 1e-10).unwrap();
        assert_relative_eq!(r.value(), 1e6, max_relative = 1e-8);
    }

    #[test]
    fn nan_is_an_error() {
        assert!(integrate_log_semi_infinite(|_| f64::NAN, &[], 1e-10).is_err());
    }
}
