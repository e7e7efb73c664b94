//! Seeded exact samplers for Y, Z, Z* and Gaussian group data.
//!
//! Draws are produced in fixed-size chunks, each with its own ChaCha8 stream
//! seeded from `(seed, role, index)`, so the output does not depend on how
//! many threads generate it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_alpha, WeightedSumProblem};
use crate::root::{bisect, expand_up, DEFAULT_MAX_ITER};

pub const GENERATOR_ID: &str = "chacha8/splitmix64-substreams/inverse-transform";
pub const GAUSSIAN_GENERATOR_ID: &str = "chacha8/splitmix64-substreams/ziggurat";

/// Draws per substream.
pub const CHUNK: usize = 8192;

/// Role tags mixed into child seeds.
pub mod role {
    pub const MAGNITUDE: u64 = 0x4d41_474e;
    pub const SIGN: u64 = 0x5349_474e;
    pub const GAUSSIAN: u64 = 0x4741_5553;
    pub const REPLICATE: u64 = 0x5245_504c;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(parent) ^ role) ^ index)`.
pub fn child_seed(parent: u64, role: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(parent) ^ role) ^ index)
}

pub fn substream(parent: u64, role: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(parent, role, index))
}

/// Uniform on `(0, 1]`.
pub fn open_closed_uniform<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

pub fn rademacher<R: Rng>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// `|Y| = √(−ln u)`.
pub fn y_magnitude(u: f64) -> f64 {
    (-u.ln()).sqrt()
}

/// `|Z| = max{√s, l·s^{1/α}}` with `s = −ln u`.
pub fn z_magnitude(u: f64, alpha: f64, l: f64) -> f64 {
    let s = -u.ln();
    s.sqrt().max(l * s.powf(1.0 / alpha))
}

/// The law a batch was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LawSpec {
    Y,
    Z { alpha: f64, l: f64 },
    ZRootInversion { alpha: f64, l: f64 },
    ZStar { alpha: f64, weights: Vec<f64>, scales: Vec<f64> },
}

impl LawSpec {
    /// Short textual form, used as a CSV header.
    pub fn describe(&self) -> String {
        match self {
            LawSpec::Y => "Y".to_string(),
            LawSpec::Z { alpha, l } => format!("Z(alpha={alpha};l={l})"),
            LawSpec::ZRootInversion { alpha, l } => format!("Z_root_inversion(alpha={alpha};l={l})"),
            LawSpec::ZStar { alpha, weights, .. } => format!("Zstar(alpha={alpha};n={})", weights.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub seed: u64,
    pub generator_id: String,
    pub spec: LawSpec,
}

impl SampleBatch {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|x| x.abs()).collect()
    }
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    Ok(())
}

/// Signed draws `ε·m(U)` chunk by chunk, with magnitudes and signs on separate streams.
fn signed_draws<M>(count: usize, seed: u64, magnitude: M) -> Vec<f64>
where
    M: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|j| {
            let len = CHUNK.min(count - j * CHUNK);
            let mut mags = substream(seed, role::MAGNITUDE, j as u64);
            let mut signs = substream(seed, role::SIGN, j as u64);
            (0..len).map(|_| rademacher(&mut signs) * magnitude(&mut mags)).collect()
        })
        .collect();
    parts.concat()
}

pub fn sample_y(count: usize, seed: u64) -> Result<SampleBatch> {
    check_count(count)?;
    let values = signed_draws(count, seed, |r| y_magnitude(open_closed_uniform(r)));
    Ok(SampleBatch { values, seed, generator_id: GENERATOR_ID.to_string(), spec: LawSpec::Y })
}

fn check_z_params(alpha: f64, l: f64) -> Result<()> {
    check_alpha(alpha)?;
    if !l.is_finite() || l < 0.0 {
        return Err(Error::invalid(format!("l must be finite and nonnegative, got {l}")));
    }
    Ok(())
}

/// Exact draws with `Pr[|Z| ≥ t] = exp(−min{t², (t/l)^α})` by closed-form inversion.
pub fn sample_z(alpha: f64, l: f64, count: usize, seed: u64) -> Result<SampleBatch> {
    check_z_params(alpha, l)?;
    check_count(count)?;
    let values = signed_draws(count, seed, |r| z_magnitude(open_closed_uniform(r), alpha, l));
    Ok(SampleBatch { values, seed, generator_id: GENERATOR_ID.to_string(), spec: LawSpec::Z { alpha, l } })
}

/// `max{|y|, l|y|^{2/α}}`, mapping a Y draw to a Z draw of the same sign.
pub fn z_from_y(y: f64, alpha: f64, l: f64) -> f64 {
    let m = y.abs();
    y.signum() * m.max(l * m.powf(2.0 / alpha))
}

/// Solve `min{t², (t/l)^α} = s` for `t` by bisection.
fn invert_exponent_numerically(s: f64, alpha: f64, l: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let below = |t: f64| {
        let e = if l == 0.0 { t * t } else { (t * t).min((t / l).powf(alpha)) };
        Ok(e < s)
    };
    let hi = expand_up(below, 1.0, 1e300)?;
    Ok(bisect(below, 0.0, hi, 1e-15, DEFAULT_MAX_ITER)?.hi)
}

/// Same law as [`sample_z`], generated by numerically solving `S(t) = U`.
pub fn sample_z_root_inversion(alpha: f64, l: f64, count: usize, seed: u64) -> Result<SampleBatch> {
    check_z_params(alpha, l)?;
    check_count(count)?;
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|j| {
            let len = CHUNK.min(count - j * CHUNK);
            let mut mags = substream(seed, role::MAGNITUDE, j as u64);
            let mut signs = substream(seed, role::SIGN, j as u64);
            (0..len)
                .map(|_| {
                    let s = -open_closed_uniform(&mut mags).ln();
                    Ok(rademacher(&mut signs) * invert_exponent_numerically(s, alpha, l)?)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(SampleBatch {
        values: parts.concat(),
        seed,
        generator_id: format!("{GENERATOR_ID}/bisection"),
        spec: LawSpec::ZRootInversion { alpha, l },
    })
}

/// `reps` independent realizations of `Σ a_i Z_i`.
///
/// Replicates are grouped in chunks; chunk `j` draws component `i` from the
/// substream `(seed, REPLICATE, j·n + i)`.
pub fn sample_zstar(problem: &WeightedSumProblem, reps: usize, seed: u64) -> Result<SampleBatch> {
    check_count(reps)?;
    let alpha = problem.alpha();
    let (a, l) = (problem.weights(), problem.scales());
    let n = a.len() as u64;
    let chunks = reps.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|j| {
            let len = CHUNK.min(reps - j * CHUNK);
            let mut acc = vec![0.0; len];
            for i in 0..a.len() {
                if a[i] == 0.0 {
                    continue;
                }
                let stream = child_seed(seed, role::REPLICATE, j as u64 * n + i as u64);
                let mut mags = substream(stream, role::MAGNITUDE, 0);
                let mut signs = substream(stream, role::SIGN, 0);
                for x in acc.iter_mut() {
                    *x += a[i] * rademacher(&mut signs) * z_magnitude(open_closed_uniform(&mut mags), alpha, l[i]);
                }
            }
            acc
        })
        .collect();
    Ok(SampleBatch {
        values: parts.concat(),
        seed,
        generator_id: GENERATOR_ID.to_string(),
        spec: LawSpec::ZStar { alpha, weights: a.to_vec(), scales: l.to_vec() },
    })
}

/// `m` groups of `n` observations of a standard normal vector in `R^q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianCube {
    pub m: usize,
    pub n: usize,
    pub q: usize,
    /// Row-major `[group][observation][coordinate]`.
    pub data: Vec<f64>,
    pub seed: u64,
    pub generator_id: String,
}

impl GaussianCube {
    /// The `n × q` block of group `g`, row-major.
    pub fn group(&self, g: usize) -> &[f64] {
        let size = self.n * self.q;
        &self.data[g * size..(g + 1) * size]
    }
}

/// Draws of group `g` come from the substream `(seed, GAUSSIAN, g)`.
pub fn sample_gaussian_groups(m: usize, n: usize, q: usize, seed: u64) -> Result<GaussianCube> {
    if m == 0 || n == 0 || q == 0 {
        return Err(Error::invalid(format!("m, n, q must all be positive, got ({m}, {n}, {q})")));
    }
    let parts: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|g| {
            let mut rng = substream(seed, role::GAUSSIAN, g as u64);
            (0..n * q).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    Ok(GaussianCube { m, n, q, data: parts.concat(), seed, generator_id: GAUSSIAN_GENERATOR_ID.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_transform_examples() {
        assert_relative_eq!(y_magnitude((-1.0f64).exp()), 1.0, max_relative = 1e-15);
        assert_relative_eq!(y_magnitude((-4.0f64).exp()), 2.0, max_relative = 1e-15);
        assert_relative_eq!(z_magnitude((-1.0f64).exp(), 1.0, 2.0), 2.0, max_relative = 1e-15);
        assert_relative_eq!(z_magnitude((-0.25f64).exp(), 1.0, 2.0), 0.5, max_relative = 1e-14);
        assert_eq!(z_magnitude(1.0, 0.5, 3.0), 0.0);
        assert_relative_eq!(z_magnitude(0.3, 0.7, 0.0), y_magnitude(0.3));
    }

    #[test]
    fn y_representation_matches_inversion() {
        for u in [0.9, 0.5, 0.01, 1e-9] {
            let y = y_magnitude(u);
            for (alpha, l) in [(0.5, 2.0), (1.0, 0.5), (2.0, 1.0)] {
                assert_relative_eq!(z_from_y(y, alpha, l), z_magnitude(u, alpha, l), max_relative = 1e-13);
                let s = -u.ln();
                let t = invert_exponent_numerically(s, alpha, l).unwrap();
                assert_relative_eq!(t, z_magnitude(u, alpha, l), max_relative = 1e-12);
            }
        }
        assert_eq!(z_from_y(-1.0, 1.0, 2.0), -2.0);
    }

    #[test]
    fn child_seeds_differ_by_role_and_index() {
        let s = [child_seed(1, role::MAGNITUDE, 0), child_seed(1, role::SIGN, 0), child_seed(1, role::MAGNITUDE, 1)];
        assert!(s[0] != s[1] && s[0] != s[2] && s[1] != s[2]);
        assert_eq!(child_seed(9, 3, 4), child_seed(9, 3, 4));
    }

    #[test]
    fn uniform_never_zero() {
        let mut rng = substream(0, 0, 0);
        for _ in 0..10_000 {
            let u = open_closed_uniform(&mut rng);
            assert!(u > 0.0 && u <= 1.0);
        }
    }

    #[test]
    fn samplers_are_reproducible_and_sized() {
        let a = sample_z(0.5, 2.0, 20_000, 11).unwrap();
        let b = sample_z(0.5, 2.0, 20_000, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values.len(), 20_000);
        assert_ne!(a.values, sample_z(0.5, 2.0, 20_000, 12).unwrap().values);
        assert!(sample_y(0, 1).is_err());
        assert!(sample_z(0.0, 1.0, 5, 1).is_err());
    }

    #[test]
    fn prefix_is_stable_across_counts() {
        let short = sample_y(100, 5).unwrap();
        let long = sample_y(CHUNK + 100, 5).unwrap();
        assert_eq!(short.values[..], long.values[..100]);
    }

    #[test]
    fn zero_scale_gives_y_magnitudes() {
        let z = sample_z(0.7, 0.0, 1000, 3).unwrap();
        let y = sample_y(1000, 3).unwrap();
        for (a, b) in z.values.iter().zip(&y.values) {
            assert_relative_eq!(*a, *b, max_relative = 1e-15);
        }
    }

    #[test]
    fn zstar_edge_cases() {
        let zero = WeightedSumProblem::new(1.0, vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(sample_zstar(&zero, 50, 1).unwrap().values.iter().all(|&x| x == 0.0));
        let single = WeightedSumProblem::new(1.0, vec![1.0], vec![2.0]).unwrap();
        let zs = sample_zstar(&single, 30_000, 2).unwrap();
        let mean = zs.values.iter().sum::<f64>() / 30_000.0;
        let var = zs.values.iter().map(|x| x * x).sum::<f64>() / 30_000.0;
        assert!(mean.abs() < 3.0 * (var / 30_000.0).sqrt());
    }

    #[test]
    fn gaussian_cube_layout_and_moments() {
        let cube = sample_gaussian_groups(3, 2000, 4, 8).unwrap();
        assert_eq!(cube.data.len(), 3 * 2000 * 4);
        assert_eq!(cube.group(2).len(), 8000);
        let n = cube.data.len() as f64;
        let var = cube.data.iter().map(|x| x * x).sum::<f64>() / n;
        // Var of the second-moment estimate is 2/n
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n).sqrt());
        assert_eq!(cube, sample_gaussian_groups(3, 2000, 4, 8).unwrap());
        assert!(sample_gaussian_groups(0, 1, 1, 0).is_err());
    }
}
