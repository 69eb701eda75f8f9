use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{TrialResult, WorkerTimes};
use crate::codec::{assemble, decode_layer, encode_job, EncodedTask, GeneratorSpec, LayerPlan, LinearJob, Matrix, Scalar};
use crate::error::{Error, Result};
use crate::model::StragglerModel;

/// Worker `worker` (0-based) stops after finishing `after_layers` layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crash {
    pub worker: usize,
    pub after_layers: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HarnessOptions {
    #[serde(default)]
    pub crashes: Vec<Crash>,
    /// `(layer, worker)` pairs, 0-based, whose result message is lost.
    #[serde(default)]
    pub withheld: Vec<(usize, usize)>,
    /// Virtual time after which no result is accepted.
    #[serde(default)]
    pub deadline: Option<f64>,
    /// Wall seconds slept per unit of virtual time, for demos only. The
    /// reported times stay virtual either way.
    #[serde(default)]
    pub wall_clock_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport<T> {
    pub decoded_output: Matrix<T>,
    pub trial: TrialResult,
    /// Result messages the master received, including late ones.
    pub messages: usize,
    /// Messages that arrived after their layer was already decoded.
    pub late_messages: usize,
    pub times: WorkerTimes,
}

struct Message<T> {
    time: f64,
    result: EncodedTask<T>,
}

/// Key ordering the merged stream: virtual time, then worker index.
#[derive(PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Runs the job on `n` worker threads. Worker `i` draws `T_i` from stream
/// `(seed, i)` and reports layer `j`'s result at virtual time `j * T_i`. The
/// master merges the per-worker channels by virtual time, decodes each layer
/// at its `k_j`-th result and keeps consuming late results without using
/// them.
pub fn run_execution_harness<T: Scalar>(
    job: &LinearJob<T>,
    plan: &LayerPlan,
    gen: &GeneratorSpec,
    model: &StragglerModel,
    seed: u64,
    options: &HarnessOptions,
) -> Result<HarnessReport<T>> {
    model.validate()?;
    let n = gen.n();
    plan.alloc.validate(n)?;
    let coded = encode_job(job, plan, gen)?;
    let r = plan.alloc.layers();
    let times = WorkerTimes::sample_streams(n, model, seed);

    let mut receivers = Vec::with_capacity(n);
    let decoded = thread::scope(|scope| {
        for (i, &t_i) in times.t_i.iter().enumerate() {
            let (tx, rx) = mpsc::channel::<Message<T>>();
            receivers.push(rx);
            let mine: Vec<&EncodedTask<T>> = coded.iter().map(|layer| &layer[i]).collect();
            let x = &job.input;
            let stop = options.crashes.iter().filter(|c| c.worker == i).map(|c| c.after_layers).min();
            scope.spawn(move || {
                for (j, task) in mine.into_iter().enumerate() {
                    if stop.is_some_and(|s| j >= s) {
                        break;
                    }
                    if let Some(scale) = options.wall_clock_scale {
                        thread::sleep(Duration::from_secs_f64((t_i * scale).max(0.0)));
                    }
                    let result = match task.compute(x) {
                        Ok(res) => res,
                        Err(_) => break,
                    };
                    if options.withheld.contains(&(j, i)) {
                        continue;
                    }
                    let time = (j + 1) as f64 * t_i;
                    if tx.send(Message { time, result }).is_err() {
                        break;
                    }
                }
            });
        }
        master(&receivers, plan, gen, options.deadline)
    })?;

    let (layers, done, messages, late) = decoded;
    let decoded_output = assemble(&layers, plan)?;
    let trial = TrialResult::from_layers(done, crate::model::SchemeId::Hierarchical);
    debug_assert!(messages <= n * r);
    Ok(HarnessReport { decoded_output, trial, messages, late_messages: late, times })
}

type MasterOutcome<T> = (Vec<Option<Vec<Matrix<T>>>>, Vec<f64>, usize, usize);

fn master<T: Scalar>(
    receivers: &[mpsc::Receiver<Message<T>>],
    plan: &LayerPlan,
    gen: &GeneratorSpec,
    deadline: Option<f64>,
) -> Result<MasterOutcome<T>> {
    let r = plan.alloc.layers();
    let mut heap = BinaryHeap::new();
    let mut heads: Vec<Option<Message<T>>> = Vec::with_capacity(receivers.len());
    for (i, rx) in receivers.iter().enumerate() {
        let head = rx.recv().ok();
        if let Some(m) = &head {
            heap.push(Reverse(Key(m.time, i)));
        }
        heads.push(head);
    }

    let mut pending: Vec<Vec<EncodedTask<T>>> = vec![Vec::new(); r];
    let mut decoded: Vec<Option<Vec<Matrix<T>>>> = vec![None; r];
    let mut done = vec![f64::NAN; r];
    let (mut messages, mut late) = (0, 0);
    while let Some(Reverse(Key(time, i))) = heap.pop() {
        let msg = heads[i].take().expect("heap entries have a head");
        if let Ok(m) = receivers[i].recv() {
            heap.push(Reverse(Key(m.time, i)));
            heads[i] = Some(m);
        }
        if deadline.is_some_and(|d| time > d) {
            continue;
        }
        messages += 1;
        let j = msg.result.layer;
        if decoded[j].is_some() {
            late += 1;
            continue;
        }
        pending[j].push(msg.result);
        if pending[j].len() == plan.alloc.ks[j] {
            decoded[j] = Some(decode_layer(&pending[j], gen, plan.alloc.ks[j])?);
            done[j] = time;
        }
    }
    if let Some(j) = decoded.iter().position(Option::is_none) {
        return Err(Error::Timeout {
            layer: j + 1,
            received: pending[j].len(),
            needed: plan.alloc.ks[j],
            deadline,
        });
    }
    Ok((decoded, done, messages, late))
}
