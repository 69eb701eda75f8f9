use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strata_core::allocator::{optimize_maximin, select_r};
use strata_core::analysis::{
    baseline_coefficients, failure_probability_extended, failure_tail_asymptotic, finishing_cdf_extended,
    leading_coefficient, ln_failure_probability, Scheme, SchemeAnalysis,
};
use strata_core::numeric::DoubleDouble;
use strata_core::{LayerAllocation, StragglerModel, SystemShape};

struct Case {
    shape: SystemShape,
    model: StragglerModel,
    alloc: LayerAllocation,
}

fn fig3() -> Case {
    Case {
        shape: SystemShape::new(20, 100, 10).unwrap(),
        model: StragglerModel::new(10.0, 0.01).unwrap(),
        alloc: LayerAllocation { ks: vec![19, 17, 15, 13, 11, 9, 7, 5, 3, 1] },
    }
}

fn random_cases(seed: u64, count: usize) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(6..=20);
            let r = rng.random_range(2..=5);
            let k = rng.random_range(r..=r * n);
            let shape = SystemShape::new(n, k, r).unwrap();
            let alloc = optimize_maximin(&shape, 0).unwrap().ks;
            let model = StragglerModel::new(rng.random_range(0.5..10.0), rng.random_range(0.0..0.05)).unwrap();
            Case { shape, model, alloc }
        })
        .collect()
}

fn ln_tail(c: &Case, t: f64) -> f64 {
    ln_failure_probability(&c.alloc, &c.shape, &c.model, t).unwrap()
}

/// First time the tail drops below `level`, to within 1e-9.
fn crossing(c: &Case, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while ln_tail(c, hi) > level.ln() {
        hi *= 2.0;
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if ln_tail(c, mid) > level.ln() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

const STEP: f64 = 0.05;

/// Checks the decay rate of the tail beyond the `1e-8` crossing, with the
/// tail evaluated both by the positive-term recursion and as `1 - cdf` in
/// double-double arithmetic.
fn check_decay(c: &Case, label: &str) {
    let (l, _) = leading_coefficient(&c.alloc, c.shape.n, c.model.per_task_rate);
    let t0 = crossing(c, 1e-8);
    // Spread the checks from the crossing to where the tail is near 1e-24,
    // still well inside double-double range for the complement.
    let span = (24.0 - 8.0) * std::f64::consts::LN_10 / l;
    for i in 0..=8 {
        let t = t0 + span * i as f64 / 8.0;
        let ln_p = ln_tail(c, t);
        let ln_q = ln_tail(c, t + STEP);
        let slope = (ln_p - ln_q) / STEP;
        assert!(
            (slope - l).abs() <= 0.05 * l,
            "{label}: slope {slope} at t={t} (P={:e}) vs L={l}",
            ln_p.exp()
        );
        for (tt, want) in [(t, ln_p), (t + STEP, ln_q)] {
            let cdf = finishing_cdf_extended(&c.alloc, &c.shape, &c.model, tt).unwrap();
            let complement = (DoubleDouble::ONE - cdf).to_f64();
            assert!(((complement.ln() - want) / want).abs() < 1e-6, "{label}: 1 - cdf disagrees at t={tt}");
            let ext = failure_probability_extended(&c.alloc, &c.shape, &c.model, tt).unwrap().to_f64();
            assert!(((ext.ln() - want) / want).abs() < 1e-12, "{label}: extended recursion disagrees at t={tt}");
        }
    }
}

#[test]
fn fig3_tail_decays_at_the_leading_rate() {
    let c = fig3();
    let (l, _) = leading_coefficient(&c.alloc, c.shape.n, c.model.per_task_rate);
    assert_eq!(l, 20.0);
    check_decay(&c, "fig3");
}

#[test]
fn random_configs_decay_at_the_leading_rate() {
    for (i, c) in random_cases(2024, 3).iter().enumerate() {
        check_decay(c, &format!("random config {i}: n={} ks={:?} rate={}", c.shape.n, c.alloc.ks, c.model.per_task_rate));
    }
}

#[test]
fn asymptote_tracks_the_exact_tail() {
    let c = fig3();
    let t0 = crossing(&c, 1e-8);
    for t in [t0, t0 + 0.2, t0 + 0.5, t0 + 1.0, t0 + 2.0] {
        let exact = ln_tail(&c, t).exp();
        let approx = failure_tail_asymptotic(&c.alloc, &c.shape, &c.model, t).unwrap();
        let ratio = approx / exact;
        assert!((0.2..=5.0).contains(&ratio), "t={t}: ratio {ratio}");
    }
}

#[test]
fn cdf_is_a_distribution_function() {
    use strata_core::analysis::finishing_cdf_dp;
    let mut cases = random_cases(7, 4);
    cases.push(fig3());
    for c in &cases {
        let r = c.alloc.ks.len() as f64;
        let floor = r * c.model.per_task_shift;
        if floor > 0.0 {
            assert_eq!(finishing_cdf_dp(&c.alloc, &c.shape, &c.model, 0.999 * floor).unwrap(), 0.0);
        }
        let mut prev = 0.0;
        for i in 0..=400 {
            let t = floor + i as f64 * 0.05 / c.model.per_task_rate;
            let f = finishing_cdf_dp(&c.alloc, &c.shape, &c.model, t).unwrap();
            assert!((0.0..=1.0).contains(&f) && f >= prev - 1e-15, "t={t}: {f} after {prev}");
            prev = f;
        }
        assert!(prev > 1.0 - 1e-9, "cdf only reaches {prev}");
    }
}

#[test]
fn layered_coefficient_never_below_baseline() {
    let mu = Ratio::new(1, 10);
    for k in 1..=190 {
        let (r, sol) = select_r(20, k, k, 0).unwrap();
        let shape = SystemShape::new(20, k, r).unwrap();
        let l = mu * sol.z;
        let base = baseline_coefficients(&shape, mu);
        if let Ok(b) = base {
            if let Some(lp) = b.l_p {
                assert!(l >= lp, "k={k}: L={l} < L_p={lp}");
            }
            if let Some(lu) = b.l_u {
                assert!(lu > Ratio::from_integer(0));
            }
        }
        assert!(l > Ratio::from_integer(0));
    }
}

#[test]
fn expected_time_matches_monte_carlo() {
    use strata_core::analysis::expected_finishing_time;
    use strata_core::simulator::{run_monte_carlo, MonteCarloConfig, SamplingMode};
    let shape = SystemShape::new(8, 12, 3).unwrap();
    let model = StragglerModel::new(2.0, 0.05).unwrap();
    let alloc = optimize_maximin(&shape, 0).unwrap().ks;
    for scheme in [Scheme::Hierarchical(alloc), Scheme::MdsBaseline] {
        let e = expected_finishing_time(&SchemeAnalysis::new(scheme.clone(), shape, model.clone()).unwrap()).unwrap();
        let mc = run_monte_carlo(&MonteCarloConfig {
            scheme,
            shape,
            model: model.clone(),
            t_grid: vec![],
            trials: 200_000,
            seed: 5,
            mode: SamplingMode::PerWorker,
            threads: None,
            keep_trials: false,
        })
        .unwrap();
        assert!((e.value - mc.mean).abs() <= 3.0 * mc.mean_se, "{} vs {} ± {}", e.value, mc.mean, mc.mean_se);
    }
}
