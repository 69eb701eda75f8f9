use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strata_core::analysis::{finishing_cdf_dp, Scheme, SchemeAnalysis};
use strata_core::codec::{FieldMode, Fp, GeneratorSpec, LayerPlan, LinearJob, Matrix, Scalar};
use strata_core::simulator::{
    run_execution_harness, run_monte_carlo, HarnessOptions, MonteCarloConfig, SamplingMode,
};
use strata_core::{Error, LayerAllocation, StragglerModel, SystemShape};

fn fig3() -> (SystemShape, StragglerModel, LayerAllocation) {
    (
        SystemShape::new(20, 100, 10).unwrap(),
        StragglerModel::new(10.0, 0.01).unwrap(),
        LayerAllocation { ks: vec![19, 17, 15, 13, 11, 9, 7, 5, 3, 1] },
    )
}

fn mc(scheme: Scheme, shape: SystemShape, model: StragglerModel, grid: Vec<f64>, trials: usize, seed: u64, keep: bool) -> strata_core::simulator::MonteCarloReport {
    run_monte_carlo(&MonteCarloConfig {
        scheme,
        shape,
        model,
        t_grid: grid,
        trials,
        seed,
        mode: SamplingMode::PerWorker,
        threads: None,
        keep_trials: keep,
    })
    .unwrap()
}

#[test]
fn empirical_distribution_passes_kolmogorov_smirnov() {
    let (shape, model, alloc) = fig3();
    let rep = mc(Scheme::Hierarchical(alloc.clone()), shape, model.clone(), vec![], 100_000, 21, true);
    let taus = rep.sorted_taus().unwrap();
    let n = taus.len() as f64;
    let d = taus
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = finishing_cdf_dp(&alloc, &shape, &model, x).unwrap();
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    let critical = 1.6276 / n.sqrt();
    assert!(d < critical, "KS statistic {d} above the 1% critical value {critical}");
}

#[test]
fn baseline_tail_at_one() {
    let (shape, model, _) = fig3();
    let rep = mc(Scheme::MdsBaseline, shape, model, vec![1.0], 100_000, 22, false);
    let tail = 1.0 - rep.cdf[0].cdf;
    assert!((tail - 0.14077).abs() <= 3.0 * rep.cdf[0].se, "tail {tail}");
}

/// Least-squares slope of `-ln(tail)` against `t` over grid points whose
/// empirical tail lies in `[lo, hi]`.
fn tail_slope(rep: &strata_core::simulator::MonteCarloReport, lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = rep
        .cdf
        .iter()
        .filter(|p| (lo..=hi).contains(&(1.0 - p.cdf)))
        .map(|p| (p.t, -(1.0 - p.cdf).ln()))
        .collect();
    assert!(pts.len() >= 5, "only {} points in the tail window", pts.len());
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn baseline_samplers_reproduce_exponent_slopes() {
    let shape = SystemShape::new(10, 20, 4).unwrap();
    let model = StragglerModel::new(1.0, 0.01).unwrap();
    let grid: Vec<f64> = (1..=400).map(|i| i as f64 * 0.05).collect();
    for (scheme, closed_form) in [
        // (n - k/r + 1) / r and n / k, in units of the rate.
        (Scheme::MdsBaseline, 6.0 / 4.0),
        (Scheme::Uncoded, 10.0 / 20.0),
    ] {
        let rep = mc(scheme.clone(), shape, model.clone(), grid.clone(), 1_000_000, 23, false);
        let slope = tail_slope(&rep, 1e-4, 1e-2);
        assert!(
            (slope - closed_form).abs() <= 0.1 * closed_form,
            "{:?}: fitted slope {slope} vs {closed_form}",
            scheme.id()
        );
        let exact = SchemeAnalysis::new(scheme, shape, model.clone()).unwrap();
        assert_eq!(exact.leading_rate(), closed_form);
    }
}

fn int_job(rows: usize, cols: usize, seed: u64) -> LinearJob<Fp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = (0..rows * cols).map(|_| Fp::from_i64(rng.random_range(-100..=100))).collect();
    let x = (0..cols).map(|_| Fp::from_i64(rng.random_range(-100..=100))).collect();
    LinearJob::new(Matrix::new(rows, cols, a).unwrap(), x).unwrap()
}

#[test]
fn harness_reports_order_statistic_finish() {
    let job = int_job(12, 3, 31);
    let plan = LayerPlan::contiguous(LayerAllocation { ks: vec![4, 2] });
    let gen = GeneratorSpec::new(FieldMode::Prime, 6);
    let model = StragglerModel::new(10.0, 0.01).unwrap();
    for seed in 0..5 {
        let rep = run_execution_harness(&job, &plan, &gen, &model, seed, &HarnessOptions::default()).unwrap();
        assert_eq!(rep.decoded_output.data(), job.direct().as_slice());
        let mut t = rep.times.t_i.clone();
        t.sort_by(f64::total_cmp);
        let want = (1.0 * t[3]).max(2.0 * t[1]);
        assert_eq!(rep.trial.tau, want);
        assert!(rep.messages <= 12);
        // Delays are drawn up front, so reruns match exactly.
        let again = run_execution_harness(&job, &plan, &gen, &model, seed, &HarnessOptions::default()).unwrap();
        assert_eq!(again, rep);
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..k).rev().find(|&p| cur[p] < n - k + p) else { return out };
        cur[pos] += 1;
        for q in pos + 1..k {
            cur[q] = cur[q - 1] + 1;
        }
    }
}

#[test]
fn one_result_short_of_the_threshold_stalls() {
    let job = int_job(12, 3, 32);
    let plan = LayerPlan::contiguous(LayerAllocation { ks: vec![4, 2] });
    let n = 6;
    let gen = GeneratorSpec::new(FieldMode::Prime, n);
    let model = StragglerModel::new(10.0, 0.01).unwrap();
    for (j, &kj) in plan.alloc.ks.iter().enumerate() {
        for keep in subsets(n, kj - 1) {
            let withheld = (0..n).filter(|w| !keep.contains(w)).map(|w| (j, w)).collect();
            let opts = HarnessOptions { withheld, ..Default::default() };
            let err = run_execution_harness(&job, &plan, &gen, &model, 3, &opts).unwrap_err();
            match err {
                Error::Timeout { layer, received, needed, .. } => {
                    assert_eq!((layer, received, needed), (j + 1, kj - 1, kj));
                }
                other => panic!("expected a stall, got {other}"),
            }
        }
        // One more result is enough.
        for keep in subsets(n, kj).into_iter().take(5) {
            let withheld = (0..n).filter(|w| !keep.contains(w)).map(|w| (j, w)).collect();
            let opts = HarnessOptions { withheld, ..Default::default() };
            let rep = run_execution_harness(&job, &plan, &gen, &model, 3, &opts).unwrap();
            assert_eq!(rep.decoded_output.data(), job.direct().as_slice());
        }
    }
}
