//! Finishing-time sampling.
//!
//! Worker `i` draws one per-task duration `T_i` and finishes its `s`-th task
//! at `s * T_i`. Layer `j` is done when `k_j` workers have finished `j`
//! tasks, i.e. at `j * T_(k_j)`, and the job finishes at the latest layer.
//! [`run_monte_carlo`] repeats this many times; [`run_execution_harness`]
//! actually runs encoded tasks on worker threads against a virtual clock.

mod harness;
mod montecarlo;

pub use harness::{run_execution_harness, Crash, HarnessOptions, HarnessReport};
pub use montecarlo::{
    run_monte_carlo, write_trials_csv, CdfPoint, MonteCarloConfig, MonteCarloReport, SamplingMode,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::Scheme;
use crate::error::{Error, Result};
use crate::model::{stream_rng, LayerAllocation, SchemeId, StragglerModel, SystemShape};

/// Per-task durations `T_1..T_n`, one per worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerTimes {
    pub t_i: Vec<f64>,
}

impl WorkerTimes {
    pub fn new(t_i: Vec<f64>) -> Result<Self> {
        if t_i.is_empty() || t_i.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("worker times must be finite, non-negative and non-empty"));
        }
        Ok(WorkerTimes { t_i })
    }

    /// Draws worker `i`'s time from its own stream `(seed, i)`, so the draw
    /// does not depend on which thread asks first.
    pub fn sample_streams(n: usize, model: &StragglerModel, seed: u64) -> Self {
        let t_i = (0..n)
            .map(|i| model.sample_task_time(&mut stream_rng(seed, i as u64)))
            .collect();
        WorkerTimes { t_i }
    }

    pub fn sample<R: Rng + ?Sized>(n: usize, model: &StragglerModel, rng: &mut R) -> Self {
        WorkerTimes { t_i: (0..n).map(|_| model.sample_task_time(rng)).collect() }
    }

    pub fn n(&self) -> usize {
        self.t_i.len()
    }

    /// Checks the floor every draw must respect.
    pub fn validate(&self, model: &StragglerModel) -> Result<()> {
        match self.t_i.iter().find(|&&t| t < model.per_task_shift) {
            Some(t) => Err(Error::invalid(format!(
                "time {t} is below the per-task shift {}",
                model.per_task_shift
            ))),
            None => Ok(()),
        }
    }

    fn sorted(&self) -> Vec<f64> {
        let mut s = self.t_i.clone();
        s.sort_by(f64::total_cmp);
        s
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub tau: f64,
    /// Entry `j` is when layer `j + 1` received its last needed result.
    pub per_layer_done: Vec<f64>,
    pub scheme: SchemeId,
}

impl TrialResult {
    fn from_layers(per_layer_done: Vec<f64>, scheme: SchemeId) -> Self {
        let tau = per_layer_done.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        TrialResult { tau, per_layer_done, scheme }
    }
}

/// Layered scheme: layer `j` completes at `j * T_(k_j)`.
pub fn simulate_tau(alloc: &LayerAllocation, times: &WorkerTimes) -> Result<TrialResult> {
    alloc.validate(times.n())?;
    let sorted = times.sorted();
    let done = alloc
        .ks
        .iter()
        .enumerate()
        .map(|(j, &kj)| (j + 1) as f64 * sorted[kj - 1])
        .collect();
    Ok(TrialResult::from_layers(done, SchemeId::Hierarchical))
}

/// Single-layer baselines. The MDS baseline runs `r` rounds of an
/// `(n, k/r)` code, finishing at `r * T_(k/r)`; uncoded gives each worker
/// `k/n` tasks and waits for all of them, finishing at `(k/n) * max T`.
pub fn simulate_baseline_tau(shape: &SystemShape, times: &WorkerTimes, scheme: SchemeId) -> Result<TrialResult> {
    if times.n() != shape.n {
        return Err(Error::invalid(format!("{} worker times for n = {}", times.n(), shape.n)));
    }
    scheme.check(shape)?;
    let sorted = times.sorted();
    let (depth, order) = match scheme {
        SchemeId::MdsBaseline => (shape.r, shape.k / shape.r),
        SchemeId::Uncoded => (shape.k / shape.n, shape.n),
        SchemeId::Hierarchical => {
            return Err(Error::invalid("the layered scheme needs an allocation, use simulate_tau"))
        }
    };
    let done = (1..=depth).map(|j| j as f64 * sorted[order - 1]).collect();
    Ok(TrialResult::from_layers(done, scheme))
}

/// Dispatches on the scheme.
pub fn simulate_scheme(scheme: &Scheme, shape: &SystemShape, times: &WorkerTimes) -> Result<TrialResult> {
    match scheme {
        Scheme::Hierarchical(alloc) => simulate_tau(alloc, times),
        other => simulate_baseline_tau(shape, times, other.id()),
    }
}

/// Layer completion from an explicit `n x depth` table of cumulative finish
/// times, used when tasks draw independent durations.
pub(crate) fn tau_from_completions(
    needed: &[usize],
    completions: &[Vec<f64>],
    scheme: SchemeId,
) -> TrialResult {
    let mut col = Vec::with_capacity(completions.len());
    let done = needed
        .iter()
        .enumerate()
        .map(|(j, &kj)| {
            col.clear();
            col.extend(completions.iter().map(|c| c[j]));
            let (_, kth, _) = col.select_nth_unstable_by(kj - 1, f64::total_cmp);
            *kth
        })
        .collect();
    TrialResult::from_layers(done, scheme)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> StragglerModel {
        StragglerModel::new(10.0, 0.01).unwrap()
    }

    #[test]
    fn hand_order_statistics() {
        let alloc = LayerAllocation { ks: vec![2, 1] };
        let res = simulate_tau(&alloc, &WorkerTimes::new(vec![1.0, 2.0, 4.0]).unwrap()).unwrap();
        assert_eq!(res.per_layer_done, vec![2.0, 2.0]);
        assert_eq!(res.tau, 2.0);
    }

    #[test]
    fn deterministic_times() {
        let alloc = LayerAllocation { ks: vec![3, 2, 1] };
        let res = simulate_tau(&alloc, &WorkerTimes::new(vec![0.5; 4]).unwrap()).unwrap();
        assert_eq!(res.tau, 1.5);
    }

    #[test]
    fn baselines() {
        let times = WorkerTimes::new(vec![0.3, 0.1, 0.7, 0.2]).unwrap();
        let sq = SystemShape::new(4, 4, 1).unwrap();
        assert_eq!(simulate_baseline_tau(&sq, &times, SchemeId::Uncoded).unwrap().tau, 0.7);
        let shape = SystemShape::new(4, 8, 2).unwrap();
        let p = simulate_baseline_tau(&shape, &times, SchemeId::MdsBaseline).unwrap();
        assert_eq!(p.per_layer_done, vec![0.7, 1.4]);
        assert_eq!(simulate_baseline_tau(&shape, &times, SchemeId::Uncoded).unwrap().tau, 1.4);
        let one = SystemShape::new(1, 3, 3).unwrap();
        let single = WorkerTimes::new(vec![0.25]).unwrap();
        assert_eq!(simulate_baseline_tau(&one, &single, SchemeId::MdsBaseline).unwrap().tau, 0.75);
        let bad = SystemShape::new(4, 6, 4).unwrap();
        assert!(matches!(
            simulate_baseline_tau(&bad, &times, SchemeId::MdsBaseline),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn sampled_streams_respect_shift() {
        let m = model();
        let w = WorkerTimes::sample_streams(50, &m, 9);
        w.validate(&m).unwrap();
        assert_eq!(w, WorkerTimes::sample_streams(50, &m, 9));
        assert!(WorkerTimes::new(vec![0.001]).unwrap().validate(&m).is_err());
    }

    #[test]
    fn completion_table_matches_scaling() {
        let times = WorkerTimes::new(vec![1.0, 2.0, 4.0]).unwrap();
        let table: Vec<Vec<f64>> = times.t_i.iter().map(|t| vec![*t, 2.0 * t]).collect();
        let alloc = LayerAllocation { ks: vec![2, 1] };
        assert_eq!(
            tau_from_completions(&alloc.ks, &table, SchemeId::Hierarchical),
            simulate_tau(&alloc, &times).unwrap()
        );
    }
}
