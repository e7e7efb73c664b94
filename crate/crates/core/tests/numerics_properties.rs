use proptest::prelude::*;
use subweibull::orlicz::{
    log_phi_p_z, orlicz_norm_sample, sequence_orlicz_norm, GboFunction, Survival, ZSurvival,
};
use subweibull::sampling::{sample_z, sample_zstar, CHUNK};
use subweibull::verify::{empirical_moments, wilson_interval, Z95};
use subweibull::WeightedSumProblem;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sample_norm_is_homogeneous(
        xs in prop::collection::vec(-5.0..5.0f64, 1..40),
        c in 0.1..10.0f64,
        alpha in 0.3..2.5f64,
        l in 0.0..3.0f64,
    ) {
        prop_assume!(xs.iter().any(|x| x.abs() > 1e-3));
        let g = GboFunction::new(alpha, l).unwrap();
        let base = orlicz_norm_sample(&xs, &g).unwrap().eta_star;
        let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
        let eta = orlicz_norm_sample(&scaled, &g).unwrap().eta_star;
        prop_assert!((eta - c * base).abs() <= 1e-8 * c * base, "{eta} vs {}", c * base);
    }

    #[test]
    fn z_survival_is_a_survival_function(alpha in 0.2..3.0f64, l in 0.0..3.0f64, t1 in 0.0..20.0f64, t2 in 0.0..20.0f64) {
        let s = ZSurvival::new(alpha, l).unwrap();
        prop_assert_eq!(s.survival(0.0), 1.0);
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        prop_assert!(s.survival(hi) <= s.survival(lo));
    }

    #[test]
    fn log_phi_decreasing_in_eta(alpha in 0.3..=1.0f64, l in 0.0..2.0f64, k in 1u32..4, e1 in 0.5..20.0f64, e2 in 0.5..20.0f64) {
        prop_assume!((e1 - e2).abs() > 1e-3);
        let p = 2f64.powi(k as i32);
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        prop_assert!(log_phi_p_z(hi, p, alpha, l).unwrap() < log_phi_p_z(lo, p, alpha, l).unwrap());
    }

    #[test]
    fn wilson_contains_frequency(n in 1usize..10_000, frac in 0.0..=1.0f64) {
        let k = ((n as f64) * frac).floor() as usize;
        let (lo, hi) = wilson_interval(k, n, Z95);
        let f = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= f && f <= hi && hi <= 1.0);
    }
}

#[test]
fn single_term_sequence_norm_solves_phi_level() {
    for (alpha, l, p) in [(0.5, 1.0, 2.0), (1.0, 2.0, 4.0), (1.0, 0.0, 8.0)] {
        let problem = WeightedSumProblem::new(alpha, vec![1.0], vec![l]).unwrap();
        let eta = sequence_orlicz_norm(&problem, p).unwrap();
        assert!((log_phi_p_z(eta, p, alpha, l).unwrap() - p).abs() < 1e-6 * p);
        // a weight a rescales the norm by a
        let scaled = WeightedSumProblem::new(alpha, vec![3.0], vec![l]).unwrap();
        let eta3 = sequence_orlicz_norm(&scaled, p).unwrap();
        assert!((eta3 - 3.0 * eta).abs() < 1e-7 * eta3);
    }
}

#[test]
fn zero_weights_have_zero_sequence_norm() {
    let problem = WeightedSumProblem::new(1.0, vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
    assert_eq!(sequence_orlicz_norm(&problem, 4.0).unwrap(), 0.0);
}

#[test]
fn sampling_ignores_thread_count() {
    let problem = WeightedSumProblem::new(0.5, vec![1.0, 0.5, 0.25], vec![1.0, 2.0, 0.0]).unwrap();
    let count = 3 * CHUNK + 17;
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (sample_z(0.5, 2.0, count, 9).unwrap().values, sample_zstar(&problem, count, 9).unwrap().values))
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn bootstrap_of_constant_sample_is_degenerate() {
    let xs = vec![-2.0; 500];
    for m in empirical_moments(&xs, &[1.0, 3.0, 8.0], 1).unwrap() {
        assert!((m.estimate - 2.0).abs() < 1e-12);
        assert!((m.ci_lo - 2.0).abs() < 1e-12 && (m.ci_hi - 2.0).abs() < 1e-12);
    }
}
