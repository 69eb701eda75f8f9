//! System shape, straggler law and layer allocations shared by every module.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Worker count `n`, total task count `k` and layer count `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemShape {
    pub n: usize,
    pub k: usize,
    pub r: usize,
}

impl SystemShape {
    pub fn new(n: usize, k: usize, r: usize) -> Result<Self> {
        let shape = SystemShape { n, k, r };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("worker count n must be at least 1"));
        }
        if self.r == 0 {
            return Err(Error::invalid("layer count r must be at least 1"));
        }
        if self.r > self.k {
            return Err(Error::invalid(format!(
                "layer count r = {} exceeds task count k = {}; every layer needs a task",
                self.r, self.k
            )));
        }
        Ok(())
    }

    /// Tasks of the single-layer baseline code, `k / r`.
    pub fn baseline_dimension(&self) -> Result<usize> {
        SchemeId::MdsBaseline.check(self)?;
        Ok(self.k / self.r)
    }
}

/// Per-task delay law: a single small task takes `shift + Exp(rate)`.
///
/// A worker that needs time `T` for one task needs `s * T` for `s` tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StragglerModel {
    pub per_task_rate: f64,
    pub per_task_shift: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub calibration_note: String,
}

impl StragglerModel {
    pub fn new(per_task_rate: f64, per_task_shift: f64) -> Result<Self> {
        let model = StragglerModel {
            per_task_rate,
            per_task_shift,
            calibration_note: String::new(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.calibration_note = note.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.per_task_rate > 0.0) {
            return Err(Error::invalid(format!(
                "per_task_rate must be positive, got {}",
                self.per_task_rate
            )));
        }
        if !(self.per_task_shift >= 0.0) || !self.per_task_shift.is_finite() {
            return Err(Error::invalid(format!(
                "per_task_shift must be finite and non-negative, got {}",
                self.per_task_shift
            )));
        }
        Ok(())
    }

    /// Exponent `rate * (t / s - shift)` of the survival function of `s`
    /// tasks, or `None` when `t < s * shift` (nothing can have finished).
    pub(crate) fn exponent(&self, s: usize, t: f64) -> Option<f64> {
        let s = s as f64;
        if t < s * self.per_task_shift {
            return None;
        }
        let slack = (t / s - self.per_task_shift).max(0.0);
        if slack == 0.0 {
            return Some(0.0);
        }
        Some(self.per_task_rate * slack)
    }

    pub fn sample_task_time<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = Exp1.sample(rng);
        self.per_task_shift + e / self.per_task_rate
    }
}

/// Probability that one worker has finished `s` tasks by time `t`.
pub fn cdf_s_tasks(s: usize, t: f64, model: &StragglerModel) -> Result<f64> {
    if s == 0 {
        return Err(Error::invalid("task count s must be positive"));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    Ok(match model.exponent(s, t) {
        None => 0.0,
        Some(x) => -(-x).exp_m1(),
    })
}

/// One draw of a worker's single-task duration.
pub fn sample_single_task_time<R: rand::Rng + ?Sized>(model: &StragglerModel, rng: &mut R) -> f64 {
    model.sample_task_time(rng)
}

/// Independent random stream `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-layer MDS dimensions `(k_1, ..., k_r)`, nonincreasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LayerAllocation {
    pub ks: Vec<usize>,
}

impl LayerAllocation {
    /// Checks every invariant that does not depend on `k` (the sum defines it).
    pub fn new(ks: Vec<usize>, n: usize) -> Result<Self> {
        let alloc = LayerAllocation { ks };
        alloc.validate(n)?;
        Ok(alloc)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.ks.is_empty() {
            return Err(Error::invalid("allocation must have at least one layer"));
        }
        for (j, &kj) in self.ks.iter().enumerate() {
            if kj == 0 || kj > n {
                return Err(Error::invalid(format!(
                    "layer {} has k_j = {kj}, outside [1, {n}]",
                    j + 1
                )));
            }
        }
        if let Some(j) = self.ks.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::invalid(format!(
                "allocation {:?} is not nonincreasing at layer {}",
                self.ks,
                j + 2
            )));
        }
        Ok(())
    }

    /// Validates against a full shape, including the layer count and the sum.
    pub fn validate_for(&self, shape: &SystemShape) -> Result<()> {
        shape.validate()?;
        self.validate(shape.n)?;
        if self.ks.len() != shape.r {
            return Err(Error::invalid(format!(
                "allocation has {} layers, shape expects r = {}",
                self.ks.len(),
                shape.r
            )));
        }
        if self.total() != shape.k {
            return Err(Error::invalid(format!(
                "allocation sums to {}, shape expects k = {}",
                self.total(),
                shape.k
            )));
        }
        Ok(())
    }

    pub fn layers(&self) -> usize {
        self.ks.len()
    }

    pub fn total(&self) -> usize {
        self.ks.iter().sum()
    }

    pub fn shape(&self, n: usize) -> SystemShape {
        SystemShape {
            n,
            k: self.total(),
            r: self.layers(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    Hierarchical,
    MdsBaseline,
    Uncoded,
}

impl SchemeId {
    pub const ALL: [SchemeId; 3] = [SchemeId::Hierarchical, SchemeId::MdsBaseline, SchemeId::Uncoded];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeId::Hierarchical => "hierarchical",
            SchemeId::MdsBaseline => "mds_baseline",
            SchemeId::Uncoded => "uncoded",
        }
    }

    /// Divisibility required by the baselines.
    pub fn check(&self, shape: &SystemShape) -> Result<()> {
        shape.validate()?;
        match self {
            SchemeId::Hierarchical => Ok(()),
            SchemeId::MdsBaseline if !shape.k.is_multiple_of(shape.r) => Err(Error::invalid(format!(
                "(n, k/r) baseline needs r | k, got k = {}, r = {}",
                shape.k, shape.r
            ))),
            SchemeId::MdsBaseline if shape.k / shape.r > shape.n => Err(Error::invalid(format!(
                "(n, k/r) baseline needs k/r <= n, got k/r = {}, n = {}",
                shape.k / shape.r,
                shape.n
            ))),
            SchemeId::Uncoded if !shape.k.is_multiple_of(shape.n) => Err(Error::invalid(format!(
                "uncoded scheme needs n | k, got k = {}, n = {}",
                shape.k, shape.n
            ))),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for SchemeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hierarchical" => Ok(SchemeId::Hierarchical),
            "mds_baseline" | "baseline" | "mds" => Ok(SchemeId::MdsBaseline),
            "uncoded" => Ok(SchemeId::Uncoded),
            other => Err(Error::invalid(format!("unknown scheme '{other}'"))),
        }
    }
}
