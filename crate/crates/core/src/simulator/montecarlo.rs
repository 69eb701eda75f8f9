use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate_scheme, tau_from_completions, TrialResult, WorkerTimes};
use crate::analysis::Scheme;
use crate::error::{Error, Result};
use crate::model::{stream_rng, SchemeId, StragglerModel, SystemShape};

/// Trials per chunk. Chunk `c` draws from stream `(seed, c)`, so results do
/// not depend on the number of threads.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// One draw per worker; `s` tasks take `s` times as long.
    #[default]
    PerWorker,
    /// Every task draws its own duration. For sensitivity studies only.
    PerTaskIid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub scheme: Scheme,
    pub shape: SystemShape,
    pub model: StragglerModel,
    pub t_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: SamplingMode,
    /// Thread cap; `None` uses the global pool.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Keep every trial in the report (needed for dumps and KS checks).
    #[serde(default)]
    pub keep_trials: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub t: f64,
    pub cdf: f64,
    /// Binomial standard error of `cdf` (and of the tail `1 - cdf`).
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub scheme: SchemeId,
    pub trials: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub cdf: Vec<CdfPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<TrialResult>>,
}

impl MonteCarloReport {
    /// Sorted finishing times, when trials were kept.
    pub fn sorted_taus(&self) -> Option<Vec<f64>> {
        let mut taus: Vec<f64> = self.samples.as_ref()?.iter().map(|s| s.tau).collect();
        taus.sort_by(f64::total_cmp);
        Some(taus)
    }
}

#[derive(Default)]
struct ChunkStats {
    sum: f64,
    sum_sq: f64,
    below: Vec<u64>,
    samples: Vec<TrialResult>,
}

fn run_chunk(cfg: &MonteCarloConfig, chunk: usize, count: usize) -> Result<ChunkStats> {
    let mut rng = stream_rng(cfg.seed, chunk as u64);
    let mut stats = ChunkStats { below: vec![0; cfg.t_grid.len()], ..Default::default() };
    let needed = needed_per_layer(&cfg.scheme, &cfg.shape);
    for _ in 0..count {
        let trial = match cfg.mode {
            SamplingMode::PerWorker => {
                simulate_scheme(&cfg.scheme, &cfg.shape, &WorkerTimes::sample(cfg.shape.n, &cfg.model, &mut rng))?
            }
            SamplingMode::PerTaskIid => {
                let table = iid_completions(cfg.shape.n, needed.len(), &cfg.model, &mut rng);
                tau_from_completions(&needed, &table, cfg.scheme.id())
            }
        };
        stats.sum += trial.tau;
        stats.sum_sq += trial.tau * trial.tau;
        for (b, &t) in stats.below.iter_mut().zip(&cfg.t_grid) {
            *b += u64::from(trial.tau <= t);
        }
        if cfg.keep_trials {
            stats.samples.push(trial);
        }
    }
    Ok(stats)
}

fn needed_per_layer(scheme: &Scheme, shape: &SystemShape) -> Vec<usize> {
    match scheme {
        Scheme::Hierarchical(alloc) => alloc.ks.clone(),
        Scheme::MdsBaseline => vec![shape.k / shape.r; shape.r],
        Scheme::Uncoded => vec![shape.n; shape.k / shape.n],
    }
}

fn iid_completions<R: Rng + ?Sized>(n: usize, depth: usize, model: &StragglerModel, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut acc = 0.0;
            (0..depth)
                .map(|_| {
                    acc += model.sample_task_time(rng);
                    acc
                })
                .collect()
        })
        .collect()
}

/// Runs `trials` independent trials and reports the mean and the empirical
/// CDF on `t_grid`, each with its standard error.
pub fn run_monte_carlo(cfg: &MonteCarloConfig) -> Result<MonteCarloReport> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    cfg.shape.validate()?;
    cfg.model.validate()?;
    if let Scheme::Hierarchical(alloc) = &cfg.scheme {
        alloc.validate_for(&cfg.shape)?;
    } else {
        cfg.scheme.id().check(&cfg.shape)?;
    }
    let chunks: Vec<(usize, usize)> = (0..cfg.trials.div_ceil(CHUNK))
        .map(|c| (c, CHUNK.min(cfg.trials - c * CHUNK)))
        .collect();
    let run = || chunks.par_iter().map(|&(c, count)| run_chunk(cfg, c, count)).collect::<Result<Vec<_>>>();
    let parts = match cfg.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    // Reduce in chunk order so the floating-point sums are reproducible.
    let n = cfg.trials as f64;
    let mut total = ChunkStats { below: vec![0; cfg.t_grid.len()], ..Default::default() };
    for part in parts {
        total.sum += part.sum;
        total.sum_sq += part.sum_sq;
        for (a, b) in total.below.iter_mut().zip(&part.below) {
            *a += b;
        }
        total.samples.extend(part.samples);
    }
    let mean = total.sum / n;
    let var = if cfg.trials > 1 { ((total.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    let cdf = cfg
        .t_grid
        .iter()
        .zip(&total.below)
        .map(|(&t, &b)| {
            let p = b as f64 / n;
            CdfPoint { t, cdf: p, se: (p * (1.0 - p) / n).sqrt() }
        })
        .collect();
    Ok(MonteCarloReport {
        scheme: cfg.scheme.id(),
        trials: cfg.trials,
        mean,
        mean_se: (var / n).sqrt(),
        cdf,
        samples: cfg.keep_trials.then_some(total.samples),
    })
}

/// Writes one row per trial: `trial, scheme, tau, layer_1_done, ...`.
pub fn write_trials_csv<W: Write>(trials: &[TrialResult], writer: W) -> Result<()> {
    let layers = trials.iter().map(|t| t.per_layer_done.len()).max().unwrap_or(0);
    let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    let mut header = vec!["trial".to_string(), "scheme".into(), "tau".into()];
    header.extend((1..=layers).map(|j| format!("layer_{j}_done")));
    let err = |e: csv::Error| Error::invalid(format!("trial dump: {e}"));
    wtr.write_record(&header).map_err(err)?;
    for (i, t) in trials.iter().enumerate() {
        let mut row = vec![i.to_string(), t.scheme.name().to_string(), t.tau.to_string()];
        row.extend(t.per_layer_done.iter().map(f64::to_string));
        wtr.write_record(&row).map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::invalid(format!("trial dump: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{finishing_cdf_dp, SchemeAnalysis};
    use crate::model::LayerAllocation;

    fn fig3() -> (SystemShape, StragglerModel, LayerAllocation) {
        (
            SystemShape::new(20, 100, 10).unwrap(),
            StragglerModel::new(10.0, 0.01).unwrap(),
            LayerAllocation { ks: vec![19, 17, 15, 13, 11, 9, 7, 5, 3, 1] },
        )
    }

    fn config(scheme: Scheme, trials: usize, seed: u64) -> MonteCarloConfig {
        let (shape, model, _) = fig3();
        MonteCarloConfig {
            scheme,
            shape,
            model,
            t_grid: vec![0.5, 1.0],
            trials,
            seed,
            mode: SamplingMode::PerWorker,
            threads: None,
            keep_trials: false,
        }
    }

    #[test]
    fn single_trial() {
        let mut cfg = config(Scheme::Hierarchical(fig3().2), 1, 5);
        cfg.keep_trials = true;
        let rep = run_monte_carlo(&cfg).unwrap();
        assert_eq!(rep.samples.as_ref().unwrap().len(), 1);
        assert_eq!(rep.mean, rep.samples.unwrap()[0].tau);
        assert_eq!(rep.mean_se, 0.0);
    }

    #[test]
    fn seed_determines_output_regardless_of_threads() {
        let mut a = config(Scheme::Hierarchical(fig3().2), 10_000, 77);
        a.threads = Some(1);
        let mut b = a.clone();
        b.threads = Some(4);
        assert_eq!(run_monte_carlo(&a).unwrap(), run_monte_carlo(&b).unwrap());
        a.seed = 78;
        assert_ne!(run_monte_carlo(&a).unwrap(), run_monte_carlo(&b).unwrap());
    }

    #[test]
    fn agrees_with_analytic_cdf() {
        let (shape, model, alloc) = fig3();
        let rep = run_monte_carlo(&config(Scheme::Hierarchical(alloc.clone()), 100_000, 1)).unwrap();
        for p in &rep.cdf {
            let exact = finishing_cdf_dp(&alloc, &shape, &model, p.t).unwrap();
            assert!((p.cdf - exact).abs() <= 3.0 * p.se, "t={} mc={} exact={exact}", p.t, p.cdf);
        }
        let base = run_monte_carlo(&config(Scheme::MdsBaseline, 100_000, 2)).unwrap();
        let exact = SchemeAnalysis::new(Scheme::MdsBaseline, shape, model).unwrap().cdf(1.0).unwrap();
        let p = &base.cdf[1];
        assert!((p.cdf - exact).abs() <= 3.0 * p.se, "mc={} exact={exact}", p.cdf);
    }

    #[test]
    fn per_task_mode_runs() {
        let mut cfg = config(Scheme::Uncoded, 2000, 3);
        cfg.mode = SamplingMode::PerTaskIid;
        let rep = run_monte_carlo(&cfg).unwrap();
        // Five tasks per worker in sequence cost at least five shifts.
        assert!(rep.mean > 0.05);
    }

    #[test]
    fn dump_columns() {
        let trials = vec![TrialResult { tau: 2.0, per_layer_done: vec![2.0, 1.5], scheme: SchemeId::Hierarchical }];
        let mut buf = Vec::new();
        write_trials_csv(&trials, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "trial,scheme,tau,layer_1_done,layer_2_done\n0,hierarchical,2,2,1.5\n"
        );
    }
}
