use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_rational::Ratio;
use serde::Deserialize;
use strata_core::allocator::{optimize_exact, optimize_maximin, select_r};
use strata_core::{Error, LayerAllocation, SchemeId, StragglerModel, SystemShape};

use crate::args::{Preset, RunArgs, SchemeArg};
use crate::UsageError;

const FIG3_NOTE: &str = "calibrated per-task rate 10 (not 0.1), shift 0.01";
const FIG4_NOTE: &str = "calibrated per-task rate 1 (not 0.1), shift 0.01";

/// Run configuration as read from `--config`. Every field is optional and
/// flags override it.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub r: Option<usize>,
    pub ks: Option<Vec<usize>>,
    pub per_task_rate: Option<f64>,
    pub per_task_shift: Option<f64>,
    pub mu: Option<String>,
    pub stragglers: Option<usize>,
    pub scheme: Option<String>,
    pub t_grid: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub preset: Option<String>,
    pub calibration_note: Option<String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())).into())
    }
}

/// Fully resolved settings shared by the analysis commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub n: usize,
    /// Task counts to evaluate; presets sweep several.
    pub k_values: Vec<usize>,
    pub r: Option<usize>,
    pub ks: Option<Vec<usize>>,
    pub model: StragglerModel,
    /// The per-task rate as an exact rational, for the exponent arithmetic;
    /// `None` if the given float has no small exact form.
    pub mu: Option<Ratio<i64>>,
    pub stragglers: usize,
    /// Requested schemes; `None` means every scheme the shape admits.
    pub schemes: Option<Vec<SchemeId>>,
    pub t_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub r_max: Option<usize>,
    pub exact_at: Option<f64>,
}

/// One evaluated instance: the shape with its allocation.
#[derive(Debug, Clone)]
pub struct Instance {
    pub shape: SystemShape,
    pub alloc: LayerAllocation,
}

struct Defaults {
    n: Option<usize>,
    k_values: Vec<usize>,
    r: Option<usize>,
    rate: Option<Ratio<i64>>,
    shift: f64,
    note: &'static str,
    schemes: Option<Vec<SchemeId>>,
    t_grid: Vec<f64>,
}

fn preset_defaults(p: Option<Preset>) -> Defaults {
    let both = Some(vec![SchemeId::Hierarchical, SchemeId::MdsBaseline]);
    match p {
        Some(Preset::Fig3) => Defaults {
            n: Some(20),
            k_values: vec![100],
            r: Some(10),
            rate: Some(Ratio::from_integer(10)),
            shift: 0.01,
            note: FIG3_NOTE,
            schemes: both,
            t_grid: (1..=20).map(|i| i as f64 / 10.0).collect(),
        },
        Some(Preset::Fig4) => Defaults {
            n: Some(20),
            k_values: vec![20, 40, 60, 80, 100],
            r: None,
            rate: Some(Ratio::from_integer(1)),
            shift: 0.01,
            note: FIG4_NOTE,
            schemes: both,
            t_grid: Vec::new(),
        },
        Some(Preset::Fig5 | Preset::Fig6) => Defaults {
            n: Some(20),
            k_values: (1..=190).collect(),
            r: None,
            rate: Some(Ratio::new(1, 10)),
            shift: 0.01,
            note: "",
            schemes: None,
            t_grid: Vec::new(),
        },
        None => Defaults {
            n: None,
            k_values: Vec::new(),
            r: None,
            rate: None,
            shift: 0.0,
            note: "",
            schemes: None,
            t_grid: Vec::new(),
        },
    }
}

fn parse_preset(s: &str) -> Result<Preset> {
    match s {
        "fig3" => Ok(Preset::Fig3),
        "fig4" => Ok(Preset::Fig4),
        "fig5" => Ok(Preset::Fig5),
        "fig6" => Ok(Preset::Fig6),
        "none" => Err(UsageError("preset 'none' is spelled by omitting the preset".into()).into()),
        other => Err(UsageError(format!("unknown preset '{other}'")).into()),
    }
}

fn scheme_list(arg: SchemeArg) -> Option<Vec<SchemeId>> {
    match arg {
        SchemeArg::Hierarchical => Some(vec![SchemeId::Hierarchical]),
        SchemeArg::MdsBaseline => Some(vec![SchemeId::MdsBaseline]),
        SchemeArg::Uncoded => Some(vec![SchemeId::Uncoded]),
        SchemeArg::All => Some(SchemeId::ALL.to_vec()),
    }
}

/// Parses `0.1`, `-2.5e-3`, `7` or `1/10` into an exact rational.
pub fn parse_exact(text: &str) -> Result<Ratio<i64>> {
    let bad = || Error::InvalidArgument(format!("'{text}' is not an exact decimal or fraction"));
    let s = text.trim();
    if let Some((a, b)) = s.split_once('/') {
        let num: i64 = a.trim().parse().map_err(|_| bad())?;
        let den: i64 = b.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad().into());
        }
        return Ok(Ratio::new(num, den));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad().into());
    }
    let all: String = format!("{int}{frac}");
    let mut num: i64 = all.parse().map_err(|_| bad())?;
    let mut scale = exp - frac.len() as i32;
    let pow = |e: i32| 10i64.checked_pow(e as u32).ok_or_else(bad);
    if neg {
        num = -num;
    }
    let value = if scale >= 0 {
        Ratio::from_integer(num.checked_mul(pow(scale)?).ok_or_else(bad)?)
    } else {
        scale = -scale;
        Ratio::new(num, pow(scale)?)
    };
    Ok(value)
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, h] = parts.as_slice() else {
        return Err(UsageError(format!("--t-grid expects start:stop:step, got '{text}'")).into());
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| UsageError(format!("bad number '{s}' in --t-grid")));
    let (a, b, h) = (num(a)?, num(b)?, num(h)?);
    if !(h > 0.0) || !(b >= a) {
        return Err(Error::InvalidArgument(format!("--t-grid needs step > 0 and stop >= start, got '{text}'")).into());
    }
    let steps = ((b - a) / h + 1e-9).floor() as usize;
    Ok((0..=steps).map(|i| round12(a + i as f64 * h)).collect())
}

fn round12(x: f64) -> f64 {
    format!("{x:.12}").parse().unwrap_or(x)
}

fn ratio_of_f64(x: f64) -> Option<Ratio<i64>> {
    parse_exact(&format!("{x}")).ok()
}

pub fn ratio_to_f64(q: Ratio<i64>) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

impl RunConfig {
    /// Resolves a run that evaluates the delay law. A non-empty calibration
    /// note goes to stderr so CSV on stdout stays clean.
    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let cfg = Self::resolve_inner(args, true)?;
        if !cfg.model.calibration_note.is_empty() {
            eprintln!("note: {}", cfg.model.calibration_note);
        }
        Ok(cfg)
    }

    /// The maximin allocation does not depend on the delay law, so a rate
    /// is only required for `--exact-at`.
    pub fn resolve_for_optimize(args: &RunArgs) -> Result<Self> {
        Self::resolve_inner(args, args.exact_at.is_some())
    }

    fn resolve_inner(args: &RunArgs, need_rate: bool) -> Result<Self> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let preset = match (args.preset, &file.preset) {
            (Some(p), _) => Some(p),
            (None, Some(s)) => Some(parse_preset(s)?),
            (None, None) => None,
        };
        let d = preset_defaults(preset);

        let n = args.n.or(file.n).or(d.n).ok_or_else(|| UsageError("missing --n".into()))?;
        let ks = args.ks.clone().or(file.ks.clone());
        let k_values = match (args.k.or(file.k), &ks) {
            (Some(k), _) => vec![k],
            (None, Some(ks)) => vec![ks.iter().sum()],
            (None, None) if !d.k_values.is_empty() => d.k_values.clone(),
            (None, None) => return Err(UsageError("missing --k".into()).into()),
        };
        let r = args.r.or(file.r).or(if ks.is_some() { None } else { d.r });

        // Precedence: flags, then the config file, then the preset. `--mu`
        // keeps the exact rational; a float rate is converted through its
        // shortest decimal form.
        let (rate, mu) = if let Some(m) = &args.mu {
            let q = parse_exact(m)?;
            (ratio_to_f64(q), Some(q))
        } else if let Some(rate) = args.rate {
            (rate, ratio_of_f64(rate))
        } else if let Some(m) = &file.mu {
            let q = parse_exact(m)?;
            (ratio_to_f64(q), Some(q))
        } else if let Some(rate) = file.per_task_rate {
            (rate, ratio_of_f64(rate))
        } else if let Some(q) = d.rate {
            (ratio_to_f64(q), Some(q))
        } else if !need_rate {
            (1.0, Some(Ratio::from_integer(1)))
        } else {
            return Err(UsageError("missing --rate (or --mu)".into()).into());
        };
        let shift = args.shift.or(args.alpha).or(file.per_task_shift).unwrap_or(d.shift);
        let overridden = args.rate.is_some()
            || args.mu.is_some()
            || args.shift.is_some()
            || args.alpha.is_some()
            || file.per_task_rate.is_some()
            || file.mu.is_some()
            || file.per_task_shift.is_some();
        let note = file
            .calibration_note
            .clone()
            .unwrap_or_else(|| if overridden { String::new() } else { d.note.to_string() });
        let model = StragglerModel::new(rate, shift)?.with_note(note);

        let schemes = match (args.scheme, &file.scheme) {
            (Some(s), _) => scheme_list(s),
            (None, Some(s)) if s == "all" => Some(SchemeId::ALL.to_vec()),
            (None, Some(s)) => Some(vec![s.parse::<SchemeId>()?]),
            (None, None) => d.schemes.clone(),
        };
        let t_grid = match (&args.t, &args.t_grid, &file.t_grid) {
            (Some(t), _, _) => t.clone(),
            (None, Some(g), _) => parse_grid(g)?,
            (None, None, Some(g)) => g.clone(),
            (None, None, None) => d.t_grid.clone(),
        };
        if t_grid.windows(2).any(|w| !(w[0] < w[1])) || t_grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("time grid must be finite and strictly increasing".into()).into());
        }

        Ok(RunConfig {
            preset,
            n,
            k_values,
            r,
            ks,
            model,
            mu,
            stragglers: args.stragglers.or(file.stragglers).unwrap_or(0),
            schemes,
            t_grid,
            trials: args.trials.or(file.trials).unwrap_or(100_000),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args.out.clone().or(file.out),
            r_max: args.r_max,
            exact_at: args.exact_at,
        })
    }

    /// Shape and allocation for task count `k`: the explicit allocation if
    /// given, else the maximin allocation for the given or best `r`.
    pub fn instance(&self, k: usize) -> Result<Instance> {
        if let Some(ks) = &self.ks {
            let alloc = LayerAllocation::new(ks.clone(), self.n)?;
            if alloc.total() != k {
                return Err(Error::InvalidArgument(format!(
                    "allocation sums to {} but k = {k}",
                    alloc.total()
                ))
                .into());
            }
            if let Some(r) = self.r.filter(|&r| r != alloc.layers()) {
                return Err(Error::InvalidArgument(format!(
                    "allocation has {} layers but r = {r}",
                    alloc.layers()
                ))
                .into());
            }
            let shape = SystemShape::new(self.n, k, alloc.layers())?;
            return Ok(Instance { shape, alloc });
        }
        let (shape, sol) = match self.r {
            Some(r) => {
                let shape = SystemShape::new(self.n, k, r)?;
                let sol = optimize_maximin(&shape, self.stragglers)?;
                (shape, sol)
            }
            None => {
                let (r, sol) = select_r(self.n, k, self.r_max.unwrap_or(k), self.stragglers)?;
                (SystemShape::new(self.n, k, r)?, sol)
            }
        };
        if let Some(t) = self.exact_at {
            let alloc = optimize_exact(&shape, &self.model, t).context("exact optimization")?;
            return Ok(Instance { shape, alloc });
        }
        Ok(Instance { shape, alloc: sol.ks })
    }

    /// Schemes to report for `shape`: the requested ones (which must be
    /// defined) or every defined one.
    pub fn schemes_for(&self, shape: &SystemShape) -> Result<Vec<SchemeId>> {
        match &self.schemes {
            Some(list) => {
                for s in list {
                    s.check(shape)?;
                }
                Ok(list.clone())
            }
            None => Ok(SchemeId::ALL.into_iter().filter(|s| s.check(shape).is_ok()).collect()),
        }
    }

    pub fn single_k(&self) -> Result<usize> {
        match self.k_values.as_slice() {
            [k] => Ok(*k),
            _ => Err(Error::InvalidArgument("this command evaluates a single k; pass --k".into()).into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_decimals() {
        assert_eq!(parse_exact("0.1").unwrap(), Ratio::new(1, 10));
        assert_eq!(parse_exact("1/10").unwrap(), Ratio::new(1, 10));
        assert_eq!(parse_exact("-2.50").unwrap(), Ratio::new(-5, 2));
        assert_eq!(parse_exact("1e-3").unwrap(), Ratio::new(1, 1000));
        assert_eq!(parse_exact("12").unwrap(), Ratio::from_integer(12));
        assert_eq!(parse_exact(".5").unwrap(), Ratio::new(1, 2));
        assert!(parse_exact("abc").is_err());
        assert!(parse_exact("1/0").is_err());
        assert!(parse_exact(".").is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("0.1:2.0:0.1").unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g[2], 0.3);
        assert_eq!(*g.last().unwrap(), 2.0);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("1:2").is_err());
    }
}
