use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use num_rational::Ratio;
use serde::Serialize;
use strata_core::analysis::{expected_finishing_time, exponent_report, scaled_exponent, Scheme, SchemeAnalysis};
use strata_core::codec::{bench_decode, bench_layer_decodes, FieldMode, GeneratorSpec};
use strata_core::simulator::{run_monte_carlo, write_trials_csv, MonteCarloConfig, SamplingMode};
use strata_core::{Error, LayerAllocation, SchemeId, StragglerModel};

use crate::args::{BenchArgs, Format, Preset, RunArgs};
use crate::config::{ratio_to_f64, Instance, RunConfig};

pub fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<()> {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv(header: &[&str], rows: &[Vec<String>], out: &Option<PathBuf>) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_out(out)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Exact rational for JSON output.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Exact {
    pub numerator: i64,
    pub denominator: i64,
    pub value: f64,
}

impl From<Ratio<i64>> for Exact {
    fn from(q: Ratio<i64>) -> Self {
        Exact { numerator: *q.numer(), denominator: *q.denom(), value: ratio_to_f64(q) }
    }
}

fn scheme_of(id: SchemeId, alloc: &LayerAllocation) -> Scheme {
    match id {
        SchemeId::Hierarchical => Scheme::Hierarchical(alloc.clone()),
        SchemeId::MdsBaseline => Scheme::MdsBaseline,
        SchemeId::Uncoded => Scheme::Uncoded,
    }
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("STRATA_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidArgument(format!("STRATA_THREADS must be a positive integer, got '{v}'")).into()),
        Err(_) => Ok(None),
    }
}

#[derive(Serialize)]
struct OptimizeRow {
    n: usize,
    k: usize,
    r: usize,
    ks: Vec<usize>,
    z: Exact,
    straggler_margin: usize,
    objective: &'static str,
}

pub fn optimize(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::resolve_for_optimize(args)?;
    let rows: Vec<OptimizeRow> = cfg
        .k_values
        .iter()
        .map(|&k| {
            let inst = cfg.instance(k)?;
            let (z, _) = scaled_exponent(&inst.alloc, inst.shape.n);
            Ok(OptimizeRow {
                n: inst.shape.n,
                k,
                r: inst.shape.r,
                ks: inst.alloc.ks.clone(),
                z: z.into(),
                straggler_margin: cfg.stragglers,
                objective: if cfg.exact_at.is_some() { "exact" } else { "maximin" },
            })
        })
        .collect::<Result<_>>()?;
    match args.format {
        Format::Json if rows.len() == 1 => write_json(&rows[0], &cfg.out),
        Format::Json => write_json(&rows, &cfg.out),
        Format::Csv => write_csv(
            &["k", "r", "ks", "z", "z_value", "stragglers"],
            &rows
                .iter()
                .map(|r| {
                    let ks: Vec<String> = r.ks.iter().map(usize::to_string).collect();
                    let z = Ratio::new(r.z.numerator, r.z.denominator);
                    vec![
                        r.k.to_string(),
                        r.r.to_string(),
                        ks.join(","),
                        z.to_string(),
                        num(r.z.value),
                        r.straggler_margin.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
            &cfg.out,
        ),
    }
}

#[derive(Serialize)]
struct InstanceInfo {
    n: usize,
    k: usize,
    r: usize,
    ks: Vec<usize>,
    model: StragglerModel,
}

impl InstanceInfo {
    fn new(inst: &Instance, model: &StragglerModel) -> Self {
        InstanceInfo {
            n: inst.shape.n,
            k: inst.shape.k,
            r: inst.shape.r,
            ks: inst.alloc.ks.clone(),
            model: model.clone(),
        }
    }
}

#[derive(Serialize)]
struct CdfRow {
    scheme: SchemeId,
    t: f64,
    analytic_cdf: f64,
    analytic_tail: f64,
    asymptotic_tail: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical_cdf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical_cdf_se: Option<f64>,
}

#[derive(Serialize)]
struct CdfReport {
    instance: InstanceInfo,
    rows: Vec<CdfRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    monte_carlo: Vec<McSummary>,
}

#[derive(Serialize)]
struct McSummary {
    scheme: SchemeId,
    trials: usize,
    seed: u64,
    mean: f64,
    mean_se: f64,
}

fn analytic_rows(cfg: &RunConfig, inst: &Instance, id: SchemeId) -> Result<(SchemeAnalysis, Vec<CdfRow>)> {
    let analysis = SchemeAnalysis::new(scheme_of(id, &inst.alloc), inst.shape, cfg.model.clone())?;
    let rows = cfg
        .t_grid
        .iter()
        .map(|&t| {
            Ok(CdfRow {
                scheme: id,
                t,
                analytic_cdf: analysis.cdf(t)?,
                analytic_tail: analysis.tail(t)?,
                asymptotic_tail: analysis.asymptotic_tail(t),
                empirical_cdf: None,
                empirical_cdf_se: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok((analysis, rows))
}

fn cdf_header(empirical: bool) -> Vec<&'static str> {
    let mut h = vec!["scheme", "t", "analytic_cdf", "analytic_tail", "asymptotic_tail"];
    if empirical {
        h.extend(["empirical_cdf", "empirical_cdf_se"]);
    }
    h
}

fn cdf_csv_rows(rows: &[CdfRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let mut v = vec![
                r.scheme.name().to_string(),
                num(r.t),
                num(r.analytic_cdf),
                num(r.analytic_tail),
                num(r.asymptotic_tail),
            ];
            if r.empirical_cdf.is_some() {
                v.push(opt_num(r.empirical_cdf));
                v.push(opt_num(r.empirical_cdf_se));
            }
            v
        })
        .collect()
}

fn require_grid(cfg: &RunConfig) -> Result<()> {
    if cfg.t_grid.is_empty() {
        return Err(crate::UsageError("missing --t or --t-grid".into()).into());
    }
    Ok(())
}

pub fn cdf(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::resolve(args)?;
    require_grid(&cfg)?;
    let inst = cfg.instance(cfg.single_k()?)?;
    let mut rows = Vec::new();
    for id in cfg.schemes_for(&inst.shape)? {
        rows.extend(analytic_rows(&cfg, &inst, id)?.1);
    }
    match args.format {
        Format::Json => write_json(
            &CdfReport { instance: InstanceInfo::new(&inst, &cfg.model), rows, monte_carlo: Vec::new() },
            &cfg.out,
        ),
        Format::Csv => write_csv(&cdf_header(false), &cdf_csv_rows(&rows), &cfg.out),
    }
}

pub fn simulate(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::resolve(args)?;
    require_grid(&cfg)?;
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("simulate needs at least one trial".into()).into());
    }
    let inst = cfg.instance(cfg.single_k()?)?;
    let threads = threads_from_env()?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut dumped = Vec::new();
    for id in cfg.schemes_for(&inst.shape)? {
        let (_, mut scheme_rows) = analytic_rows(&cfg, &inst, id)?;
        let mc = run_monte_carlo(&MonteCarloConfig {
            scheme: scheme_of(id, &inst.alloc),
            shape: inst.shape,
            model: cfg.model.clone(),
            t_grid: cfg.t_grid.clone(),
            trials: cfg.trials,
            seed: cfg.seed,
            mode: if args.per_task_iid { SamplingMode::PerTaskIid } else { SamplingMode::PerWorker },
            threads,
            keep_trials: args.dump.is_some(),
        })?;
        for (row, point) in scheme_rows.iter_mut().zip(&mc.cdf) {
            row.empirical_cdf = Some(point.cdf);
            row.empirical_cdf_se = Some(point.se);
        }
        rows.extend(scheme_rows);
        summaries.push(McSummary { scheme: id, trials: mc.trials, seed: cfg.seed, mean: mc.mean, mean_se: mc.mean_se });
        dumped.extend(mc.samples.unwrap_or_default());
    }
    if let Some(path) = &args.dump {
        let file = File::create(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", path.display())))?;
        write_trials_csv(&dumped, BufWriter::new(file))?;
    }
    match args.format {
        Format::Json => write_json(
            &CdfReport { instance: InstanceInfo::new(&inst, &cfg.model), rows, monte_carlo: summaries },
            &cfg.out,
        ),
        Format::Csv => write_csv(&cdf_header(true), &cdf_csv_rows(&rows), &cfg.out),
    }
}

#[derive(Serialize)]
struct ExpectedRow {
    k: usize,
    r: usize,
    ks: Vec<usize>,
    scheme: SchemeId,
    expected_time: f64,
    quadrature_error: f64,
    tail_bound: f64,
}

pub fn expected(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::resolve(args)?;
    let mut rows = Vec::new();
    for &k in &cfg.k_values {
        let inst = cfg.instance(k)?;
        for id in cfg.schemes_for(&inst.shape)? {
            let analysis = SchemeAnalysis::new(scheme_of(id, &inst.alloc), inst.shape, cfg.model.clone())?;
            let e = expected_finishing_time(&analysis).with_context(|| format!("expected time for k = {k}, {id}"))?;
            rows.push(ExpectedRow {
                k,
                r: inst.shape.r,
                ks: inst.alloc.ks.clone(),
                scheme: id,
                expected_time: e.value,
                quadrature_error: e.quadrature_error,
                tail_bound: e.tail_bound,
            });
        }
    }
    match args.format {
        Format::Json => write_json(&rows, &cfg.out),
        Format::Csv => write_csv(
            &["k", "scheme", "expected_time"],
            &rows.iter().map(|r| vec![r.k.to_string(), r.scheme.name().to_string(), num(r.expected_time)]).collect::<Vec<_>>(),
            &cfg.out,
        ),
    }
}

#[derive(Serialize)]
struct ExponentRow {
    k: usize,
    r: usize,
    ks: Vec<usize>,
    #[serde(rename = "L")]
    l: Exact,
    #[serde(rename = "L_p")]
    l_p: Option<Exact>,
    #[serde(rename = "L_u")]
    l_u: Option<Exact>,
    ratio: Option<Exact>,
    argmin_layer: usize,
}

pub fn exponents(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::resolve(args)?;
    let mu = cfg.mu.ok_or_else(|| {
        Error::InvalidArgument("exponents need an exactly representable rate; pass --mu as a decimal or fraction".into())
    })?;
    let mut rows = Vec::new();
    for &k in &cfg.k_values {
        let inst = cfg.instance(k)?;
        let rep = exponent_report(&inst.alloc, &inst.shape, mu)?;
        if cfg.preset == Some(Preset::Fig6) && rep.l_p.is_none() {
            continue;
        }
        rows.push(ExponentRow {
            k,
            r: inst.shape.r,
            ks: inst.alloc.ks.clone(),
            l: rep.l.into(),
            l_p: rep.l_p.map(Into::into),
            l_u: rep.l_u.map(Into::into),
            ratio: rep.ratio().map(Into::into),
            argmin_layer: rep.argmin_layer,
        });
    }
    match args.format {
        Format::Json => write_json(&rows, &cfg.out),
        Format::Csv => write_csv(
            &["k", "L", "L_p", "L_u", "ratio"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.k.to_string(),
                        num(r.l.value),
                        opt_num(r.l_p.map(|e| e.value)),
                        opt_num(r.l_u.map(|e| e.value)),
                        opt_num(r.ratio.map(|e| e.value)),
                    ]
                })
                .collect::<Vec<_>>(),
            &cfg.out,
        ),
    }
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let gen = GeneratorSpec::new(FieldMode::Prime, args.n);
    let mut w = open_out(&args.out)?;
    writeln!(w, "k1,seconds")?;
    for &k in &args.k1 {
        let t = bench_decode(k, &gen, args.width, args.repetitions)?;
        writeln!(w, "{},{}", t.k1, t.seconds)?;
    }
    let mut sizes = args.k1.clone();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let alloc = LayerAllocation::new(sizes, args.n)?;
    let layers = bench_layer_decodes(&alloc, &gen, args.width, args.repetitions)?;
    writeln!(
        w,
        "# {} layers decoded one after another: {} s; concurrently: {} s; decode cost grows roughly like k1^3 + k1^2 * width",
        layers.layers, layers.serial_seconds, layers.parallel_seconds
    )?;
    w.flush()?;
    Ok(())
}
