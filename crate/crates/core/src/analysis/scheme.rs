use serde::{Deserialize, Serialize};

use super::baselines::{baseline_lee_cdf, baseline_lee_ln_tail, uncoded_cdf, uncoded_ln_tail};
use super::exponents::{hierarchical_terms, AsymptoticTerm};
use super::finishing::{finishing_cdf_dp, ln_failure_probability};
use crate::error::Result;
use crate::model::{LayerAllocation, SchemeId, StragglerModel, SystemShape};
use crate::numeric::LogFactorials;

/// A scheme together with whatever it needs beyond the system shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    Hierarchical(LayerAllocation),
    MdsBaseline,
    Uncoded,
}

impl Scheme {
    pub fn id(&self) -> SchemeId {
        match self {
            Scheme::Hierarchical(_) => SchemeId::Hierarchical,
            Scheme::MdsBaseline => SchemeId::MdsBaseline,
            Scheme::Uncoded => SchemeId::Uncoded,
        }
    }
}

/// Distribution of the finishing time of one scheme on one system.
#[derive(Debug, Clone)]
pub struct SchemeAnalysis {
    scheme: Scheme,
    shape: SystemShape,
    model: StragglerModel,
}

impl SchemeAnalysis {
    pub fn new(scheme: Scheme, shape: SystemShape, model: StragglerModel) -> Result<Self> {
        model.validate()?;
        scheme.id().check(&shape)?;
        if let Scheme::Hierarchical(alloc) = &scheme {
            alloc.validate_for(&shape)?;
        }
        Ok(SchemeAnalysis { scheme, shape, model })
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn model(&self) -> &StragglerModel {
        &self.model
    }

    /// Tasks each worker must finish in sequence before the job can end.
    pub fn depth(&self) -> usize {
        match &self.scheme {
            Scheme::Hierarchical(_) | Scheme::MdsBaseline => self.shape.r,
            Scheme::Uncoded => self.shape.k / self.shape.n,
        }
    }

    /// Earliest possible finishing time; `Pr(τ > t) = 1` before it.
    pub fn earliest_finish(&self) -> f64 {
        self.depth() as f64 * self.model.per_task_shift
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        match &self.scheme {
            Scheme::Hierarchical(alloc) => finishing_cdf_dp(alloc, &self.shape, &self.model, t),
            Scheme::MdsBaseline => baseline_lee_cdf(&self.shape, &self.model, t),
            Scheme::Uncoded => uncoded_cdf(&self.shape, &self.model, t),
        }
    }

    pub fn ln_tail(&self, t: f64) -> Result<f64> {
        match &self.scheme {
            Scheme::Hierarchical(alloc) => ln_failure_probability(alloc, &self.shape, &self.model, t),
            Scheme::MdsBaseline => baseline_lee_ln_tail(&self.shape, &self.model, t),
            Scheme::Uncoded => uncoded_ln_tail(&self.shape, &self.model, t),
        }
    }

    pub fn tail(&self, t: f64) -> Result<f64> {
        Ok(self.ln_tail(t)?.exp())
    }

    pub fn asymptotic_terms(&self) -> Vec<AsymptoticTerm> {
        match &self.scheme {
            Scheme::Hierarchical(alloc) => hierarchical_terms(alloc),
            Scheme::MdsBaseline => vec![AsymptoticTerm {
                depth: self.shape.r,
                needed: self.shape.k / self.shape.r,
            }],
            Scheme::Uncoded => vec![AsymptoticTerm {
                depth: self.shape.k / self.shape.n,
                needed: self.shape.n,
            }],
        }
    }

    /// Largest asymptotic term at `t`.
    pub fn asymptotic_tail(&self, t: f64) -> f64 {
        let lf = LogFactorials::new(self.shape.n);
        self.asymptotic_terms()
            .iter()
            .map(|term| term.ln_value(self.shape.n, &self.model, t, &lf))
            .fold(f64::NEG_INFINITY, f64::max)
            .exp()
    }

    /// Slowest decay rate among the asymptotic terms.
    pub fn leading_rate(&self) -> f64 {
        self.asymptotic_terms()
            .iter()
            .map(|term| term.decay_rate(self.shape.n, self.model.per_task_rate))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baselines_need_divisibility() {
        let m = StragglerModel::new(1.0, 0.0).unwrap();
        let shape = SystemShape::new(20, 13, 2).unwrap();
        assert!(SchemeAnalysis::new(Scheme::MdsBaseline, shape, m.clone()).is_err());
        assert!(SchemeAnalysis::new(Scheme::Uncoded, shape, m).is_err());
    }

    #[test]
    fn leading_rates_match_closed_forms() {
        let m = StragglerModel::new(0.1, 0.01).unwrap();
        let shape = SystemShape::new(20, 100, 10).unwrap();
        let alloc = LayerAllocation::new(vec![19, 17, 15, 13, 11, 9, 7, 5, 3, 1], 20).unwrap();
        let h = SchemeAnalysis::new(Scheme::Hierarchical(alloc), shape, m.clone()).unwrap();
        let p = SchemeAnalysis::new(Scheme::MdsBaseline, shape, m.clone()).unwrap();
        let u = SchemeAnalysis::new(Scheme::Uncoded, shape, m).unwrap();
        assert!((h.leading_rate() - 0.2).abs() < 1e-15);
        assert!((p.leading_rate() - 0.11).abs() < 1e-15);
        assert!((u.leading_rate() - 0.02).abs() < 1e-15);
        assert!((h.earliest_finish() - 0.1).abs() < 1e-15);
        assert!((u.earliest_finish() - 0.05).abs() < 1e-15);
    }
}
