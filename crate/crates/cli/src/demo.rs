use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use strata_core::allocator::{optimize_maximin, select_r};
use strata_core::codec::{
    read_matrix_csv, read_vector_csv, write_matrix, FieldMode, Fp, GeneratorSpec, LayerPlan, LinearJob, Matrix, Scalar,
};
use strata_core::simulator::{run_execution_harness, Crash, HarnessOptions, HarnessReport};
use strata_core::{Error, LayerAllocation, StragglerModel, SystemShape};

use crate::args::{DemoArgs, FieldArg, Format};
use crate::commands::open_out;
use crate::config::{parse_exact, ratio_to_f64};
use crate::UsageError;

/// Relative error tolerated in real arithmetic.
const REAL_TOLERANCE: f64 = 1e-6;

#[derive(Serialize)]
struct DemoSummary {
    n: usize,
    ks: Vec<usize>,
    field: FieldMode,
    worker_times: Vec<f64>,
    per_layer_done: Vec<f64>,
    tau: f64,
    messages: usize,
    late_messages: usize,
    output: Vec<String>,
    max_relative_error: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    any_two: Vec<PairCheck>,
}

#[derive(Serialize)]
struct PairCheck {
    workers: [usize; 2],
    tau: f64,
    max_relative_error: f64,
}

fn demo_model(args: &DemoArgs) -> Result<StragglerModel> {
    let rate = match (&args.mu, args.rate) {
        (Some(m), _) => ratio_to_f64(parse_exact(m)?),
        (None, Some(r)) => r,
        (None, None) => 1.0,
    };
    let shift = args.shift.or(args.alpha).unwrap_or(0.0);
    Ok(StragglerModel::new(rate, shift)?)
}

fn max_relative_error<T: Scalar>(got: &[T], want: &[T]) -> f64 {
    let scale = want.iter().map(|v| v.magnitude()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    got.iter().zip(want).map(|(&a, &b)| (a - b).magnitude()).fold(0.0, f64::max) / scale
}

fn check<T: Scalar>(report: &HarnessReport<T>, job: &LinearJob<T>) -> Result<f64> {
    let err = max_relative_error(report.decoded_output.data(), &job.direct());
    let ok = match T::MODE {
        FieldMode::Prime => err == 0.0,
        FieldMode::Real => err <= REAL_TOLERANCE,
    };
    if !ok {
        return Err(Error::NumericalFailure(format!(
            "decoded output differs from the direct product (relative error {err:e})"
        ))
        .into());
    }
    Ok(err)
}

fn options(args: &DemoArgs) -> HarnessOptions {
    HarnessOptions {
        crashes: args.crash.iter().map(|&(worker, after_layers)| Crash { worker, after_layers }).collect(),
        withheld: Vec::new(),
        deadline: args.deadline,
        wall_clock_scale: args.wall_clock_scale,
    }
}

fn summary<T: Scalar>(report: &HarnessReport<T>, ks: &[usize], n: usize, err: f64) -> DemoSummary {
    DemoSummary {
        n,
        ks: ks.to_vec(),
        field: T::MODE,
        worker_times: report.times.t_i.clone(),
        per_layer_done: report.trial.per_layer_done.clone(),
        tau: report.trial.tau,
        messages: report.messages,
        late_messages: report.late_messages,
        output: report.decoded_output.data().iter().map(|v| v.to_string()).collect(),
        max_relative_error: err,
        any_two: Vec::new(),
    }
}

fn emit<T: Scalar>(args: &DemoArgs, s: &DemoSummary, output: &Matrix<T>) -> Result<()> {
    if let Some(path) = &args.out {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", path.display())))?;
        write_matrix(output, file)?;
    }
    let mut w = open_out(&None)?;
    if args.format == Format::Json {
        serde_json::to_writer_pretty(&mut w, s)?;
        writeln!(w)?;
        return Ok(w.flush()?);
    }
    let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
    let ks: Vec<String> = s.ks.iter().map(usize::to_string).collect();
    writeln!(w, "workers: {}  layers: {}  ks: {}  field: {:?}", s.n, s.ks.len(), ks.join(","), s.field)?;
    writeln!(w, "worker times: {}", list(&s.worker_times))?;
    for (j, t) in s.per_layer_done.iter().enumerate() {
        writeln!(w, "layer {} decoded at {t} from its first {} results", j + 1, s.ks[j])?;
    }
    writeln!(w, "tau: {}", s.tau)?;
    writeln!(w, "messages: {} ({} after their layer was decoded)", s.messages, s.late_messages)?;
    writeln!(w, "output: {}", s.output.join(", "))?;
    writeln!(w, "verified against the direct product (max relative error {})", s.max_relative_error)?;
    for p in &s.any_two {
        writeln!(
            w,
            "workers {{{},{}}} alone: decoded at {} (max relative error {})",
            p.workers[0], p.workers[1], p.tau, p.max_relative_error
        )?;
    }
    Ok(w.flush()?)
}

use std::io::Write;

pub fn demo(args: &DemoArgs) -> Result<()> {
    let model = demo_model(args)?;
    match (&args.matrix, &args.vector, args.field) {
        (None, None, FieldArg::Prime) => intro::<Fp>(args, &model),
        (None, None, FieldArg::Real) => intro::<f64>(args, &model),
        (Some(m), Some(v), FieldArg::Prime) => from_files::<Fp>(args, &model, m, v),
        (Some(m), Some(v), FieldArg::Real) => from_files::<f64>(args, &model, m, v),
        _ => Err(UsageError("--matrix and --vector go together".into()).into()),
    }
}

/// Three workers, two tasks: worker 1 holds `A_1`, worker 2 holds `A_2`,
/// worker 3 holds `A_1 + A_2`. Any two of them recover `A x`.
fn intro<T: Scalar>(args: &DemoArgs, model: &StragglerModel) -> Result<()> {
    let a = Matrix::from_rows(vec![
        vec![T::from_i64(1), T::from_i64(2), T::from_i64(3)],
        vec![T::from_i64(4), T::from_i64(5), T::from_i64(6)],
    ])?;
    let job = LinearJob::new(a, vec![T::from_i64(1), T::from_i64(-1), T::from_i64(2)])?;
    let plan = LayerPlan::contiguous(LayerAllocation::new(vec![2], 3)?);
    let gen = GeneratorSpec::explicit(T::MODE, vec![vec![1, 0], vec![0, 1], vec![1, 1]]);
    let report = run_execution_harness(&job, &plan, &gen, model, args.seed, &options(args))?;
    let err = check(&report, &job)?;
    let mut s = summary(&report, &plan.alloc.ks, 3, err);
    for silent in (0..3).rev() {
        let opts = HarnessOptions { crashes: vec![Crash { worker: silent, after_layers: 0 }], ..options(args) };
        let rep = run_execution_harness(&job, &plan, &gen, model, args.seed, &opts)?;
        let pair: Vec<usize> = (1..=3).filter(|&w| w != silent + 1).collect();
        s.any_two.push(PairCheck { workers: [pair[0], pair[1]], tau: rep.trial.tau, max_relative_error: check(&rep, &job)? });
    }
    emit(args, &s, &report.decoded_output)
}

fn from_files<T: Scalar>(args: &DemoArgs, model: &StragglerModel, matrix: &Path, vector: &Path) -> Result<()> {
    let job = LinearJob::new(read_matrix_csv::<T>(matrix)?, read_vector_csv::<T>(vector)?)?;
    let n = args.n.ok_or_else(|| UsageError("missing --n".into()))?;
    let alloc = match (&args.ks, args.k, args.r) {
        (Some(ks), _, _) => LayerAllocation::new(ks.clone(), n)?,
        (None, k, Some(r)) => optimize_maximin(&SystemShape::new(n, k.unwrap_or(job.matrix.rows()), r)?, 0)?.ks,
        (None, k, None) => {
            let k = k.unwrap_or(job.matrix.rows());
            select_r(n, k, k, 0)?.1.ks
        }
    };
    let plan = LayerPlan::contiguous(alloc);
    let gen = GeneratorSpec::new(T::MODE, n);
    let report = run_execution_harness(&job, &plan, &gen, model, args.seed, &options(args))?;
    let err = check(&report, &job)?;
    let s = summary(&report, &plan.alloc.ks, n, err);
    emit(args, &s, &report.decoded_output)
}
