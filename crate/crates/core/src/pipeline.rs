//! Decoupled and interleaved scheduling of trace decoding and tool calls,
//! with wall-clock reports on a real or virtual clock.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::sync_channel;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::StepBucket;

pub const DEFAULT_QUEUE_CAPACITY: usize = 8;

pub trait Clock: Send + Sync {
    /// Time since the clock's origin. Never decreases.
    fn now(&self) -> Duration;
    /// Spends `d`: sleeps on a real clock, jumps forward on a virtual one.
    fn advance(&self, d: Duration);
    fn is_virtual(&self) -> bool;
}

pub struct RealClock {
    origin: Instant,
}

impl RealClock {
    pub fn new() -> Self {
        RealClock { origin: Instant::now() }
    }
}

impl Default for RealClock {
    fn default() -> Self {
        RealClock::new()
    }
}

impl Clock for RealClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn advance(&self, d: Duration) {
        if !d.is_zero() {
            std::thread::sleep(d);
        }
    }

    fn is_virtual(&self) -> bool {
        false
    }
}

#[derive(Default)]
pub struct VirtualClock {
    nanos: AtomicU64,
}

impl VirtualClock {
    pub fn new() -> Self {
        VirtualClock::default()
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        Duration::from_nanos(self.nanos.load(Ordering::SeqCst))
    }

    fn advance(&self, d: Duration) {
        self.nanos.fetch_add(d.as_nanos() as u64, Ordering::SeqCst);
    }

    fn is_virtual(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    #[serde(default)]
    pub text: String,
    pub gold_steps: usize,
}

/// A decoded trace split at its tool-call sites. `chunk_costs` has one more
/// entry than there are tool calls: the decode cost before each call, then
/// the cost of the tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Draft {
    pub text: String,
    pub chunk_costs: Vec<Duration>,
}

impl Draft {
    pub fn tool_calls(&self) -> usize {
        self.chunk_costs.len().saturating_sub(1)
    }

    pub fn decode_cost(&self) -> Duration {
        self.chunk_costs.iter().sum()
    }
}

pub trait Generator: Send + Sync {
    fn generate(&self, q: &Question) -> Result<Draft, String>;
}

pub trait ToolDispatcher: Send + Sync {
    /// Runs tool call `step` (0-based) of the draft and returns its cost.
    fn call(&self, q: &Question, draft: &Draft, step: usize) -> Result<Duration, String>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Decoupled,
    Interleaved,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Decoupled => "decoupled",
            Mode::Interleaved => "interleaved",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "decoupled" => Ok(Mode::Decoupled),
            "interleaved" => Ok(Mode::Interleaved),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "message", rename_all = "snake_case")]
pub enum ItemError {
    GeneratorFailure(String),
    ReifierFailure(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItemReport {
    pub id: String,
    pub gold_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ItemError>,
    pub decode_seconds: f64,
    pub tool_seconds: Vec<f64>,
    /// When decoding of this item began.
    pub started: f64,
    pub finished: f64,
    /// Finish minus the previous item's finish. These sum to the makespan.
    pub wall_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QueueSample {
    pub at: f64,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub virtual_clock: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queue_capacity: Option<usize>,
    pub makespan_seconds: f64,
    pub total_decode_seconds: f64,
    pub total_tool_seconds: f64,
    pub items: Vec<ItemReport>,
    pub queue_samples: Vec<QueueSample>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepTime {
    pub bucket: StepBucket,
    pub gold_steps: usize,
    pub mean_seconds: f64,
    pub n: usize,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.items.iter().filter(|i| i.error.is_some()).count()
    }

    /// Mean wall time per distinct gold step count.
    pub fn by_gold_steps(&self) -> Vec<StepTime> {
        let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for it in &self.items {
            let e = acc.entry(it.gold_steps).or_default();
            e.0 += it.wall_seconds;
            e.1 += 1;
        }
        acc.into_iter()
            .map(|(steps, (sum, n))| StepTime {
                bucket: StepBucket::of(steps),
                gold_steps: steps,
                mean_seconds: sum / n as f64,
                n,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket,gold_steps,mode,mean_seconds,n\n");
        for row in self.by_gold_steps() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.bucket, row.gold_steps, self.mode, row.mean_seconds, row.n
            ));
        }
        out
    }

    /// Least-squares slope of wall time against gold steps. `None` with
    /// fewer than two distinct step counts.
    pub fn slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .items
            .iter()
            .map(|i| (i.gold_steps as f64, i.wall_seconds))
            .collect();
        slope(&pts)
    }
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PipelineError {
    #[error("queue capacity must be at least 1")]
    InvalidCapacity,
    #[error("workload mismatch: {0}")]
    WorkloadMismatch(String),
    #[error("pipeline stage panicked")]
    StagePanicked,
}

/// Per-item costs resolved from the generator and tools.
struct Costs {
    decode: Duration,
    tools: Vec<Duration>,
    error: Option<ItemError>,
}

fn run_tools(q: &Question, draft: &Draft, tools: &dyn ToolDispatcher, mut each: impl FnMut(Duration)) -> Costs {
    let mut out = Costs {
        decode: draft.decode_cost(),
        tools: Vec::new(),
        error: None,
    };
    for step in 0..draft.tool_calls() {
        match tools.call(q, draft, step) {
            Ok(d) => {
                each(d);
                out.tools.push(d);
            }
            Err(e) => {
                out.error = Some(ItemError::ReifierFailure(e));
                break;
            }
        }
    }
    out
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn item_report(q: &Question, costs: Costs, started: Duration, finished: Duration, prev: Duration) -> ItemReport {
    ItemReport {
        id: q.id.clone(),
        gold_steps: q.gold_steps,
        error: costs.error,
        decode_seconds: secs(costs.decode),
        tool_seconds: costs.tools.iter().copied().map(secs).collect(),
        started: secs(started),
        finished: secs(finished),
        wall_seconds: secs(finished.saturating_sub(prev)),
    }
}

fn finish_report(
    mode: Mode,
    clock: &dyn Clock,
    capacity: Option<usize>,
    origin: Duration,
    items: Vec<ItemReport>,
    queue_samples: Vec<QueueSample>,
) -> RunReport {
    let makespan = items.last().map_or(0.0, |i| i.finished) - secs(origin);
    RunReport {
        mode,
        virtual_clock: clock.is_virtual(),
        queue_capacity: capacity,
        makespan_seconds: makespan.max(0.0),
        total_decode_seconds: items.iter().map(|i| i.decode_seconds).sum(),
        total_tool_seconds: items.iter().flat_map(|i| &i.tool_seconds).sum(),
        items,
        queue_samples,
    }
}

/// Each question is decoded chunk by chunk, suspending at every tool call
/// until the tool returns. Questions run one after another.
pub fn run_interleaved(
    questions: &[Question],
    gen: &dyn Generator,
    tools: &dyn ToolDispatcher,
    clock: &dyn Clock,
) -> RunReport {
    let origin = clock.now();
    let mut prev = origin;
    let mut items = Vec::with_capacity(questions.len());
    for q in questions {
        let started = clock.now();
        let costs = match gen.generate(q) {
            Err(e) => Costs {
                decode: Duration::ZERO,
                tools: Vec::new(),
                error: Some(ItemError::GeneratorFailure(e)),
            },
            Ok(draft) => {
                let mut spent = Duration::ZERO;
                let chunks = draft.chunk_costs.clone();
                let mut next_chunk = chunks.iter();
                if let Some(&c) = next_chunk.next() {
                    clock.advance(c);
                    spent += c;
                }
                let mut costs = run_tools(q, &draft, tools, |d| {
                    clock.advance(d);
                    if let Some(&c) = next_chunk.next() {
                        clock.advance(c);
                        spent += c;
                    }
                });
                costs.decode = spent;
                costs
            }
        };
        let finished = clock.now();
        items.push(item_report(q, costs, started, finished, prev));
        prev = finished;
    }
    finish_report(Mode::Interleaved, clock, None, origin, items, Vec::new())
}

/// Stage 1 decodes complete traces into a bounded queue of `capacity`
/// waiting items. Stage 2 takes them in order and runs their tool calls.
/// A virtual clock runs the two stages as a discrete-event simulation; a
/// real clock runs them on two threads.
pub fn run_decoupled(
    questions: &[Question],
    gen: &dyn Generator,
    tools: &dyn ToolDispatcher,
    clock: &dyn Clock,
    capacity: usize,
) -> Result<RunReport, PipelineError> {
    if capacity == 0 {
        return Err(PipelineError::InvalidCapacity);
    }
    if clock.is_virtual() {
        Ok(simulate_decoupled(questions, gen, tools, clock, capacity))
    } else {
        threaded_decoupled(questions, gen, tools, clock, capacity)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    DecodeDone(usize),
    ToolsDone(usize),
}

enum Stage1 {
    Decoding,
    Blocked(usize),
    Done,
}

struct Sim<'a> {
    questions: &'a [Question],
    gen: &'a dyn Generator,
    tools: &'a dyn ToolDispatcher,
    capacity: usize,
    heap: BinaryHeap<Reverse<(Duration, u64, Event)>>,
    seq: u64,
    drafts: Vec<Option<Result<Draft, String>>>,
    started: Vec<Duration>,
    costs: Vec<Option<Costs>>,
    finished: Vec<Duration>,
    queue: VecDeque<usize>,
    stage1: Stage1,
    stage2_busy: bool,
    samples: Vec<QueueSample>,
}

impl Sim<'_> {
    fn schedule(&mut self, at: Duration, ev: Event) {
        self.seq += 1;
        self.heap.push(Reverse((at, self.seq, ev)));
    }

    fn start_decode(&mut self, i: usize, at: Duration) {
        if i >= self.questions.len() {
            self.stage1 = Stage1::Done;
            return;
        }
        let draft = self.gen.generate(&self.questions[i]);
        let cost = draft.as_ref().map_or(Duration::ZERO, Draft::decode_cost);
        self.drafts[i] = Some(draft);
        self.started[i] = at;
        self.stage1 = Stage1::Decoding;
        self.schedule(at + cost, Event::DecodeDone(i));
    }

    fn enqueue(&mut self, i: usize, at: Duration) {
        self.queue.push_back(i);
        self.samples.push(QueueSample {
            at: secs(at),
            len: self.queue.len(),
        });
        self.start_decode(i + 1, at);
    }

    fn try_start_tools(&mut self, at: Duration) {
        if self.stage2_busy {
            return;
        }
        let Some(j) = self.queue.pop_front() else { return };
        self.samples.push(QueueSample {
            at: secs(at),
            len: self.queue.len(),
        });
        let q = &self.questions[j];
        let costs = match self.drafts[j].take().expect("decoded before queued") {
            Ok(draft) => run_tools(q, &draft, self.tools, |_| {}),
            Err(e) => Costs {
                decode: Duration::ZERO,
                tools: Vec::new(),
                error: Some(ItemError::GeneratorFailure(e)),
            },
        };
        let total: Duration = costs.tools.iter().sum();
        self.costs[j] = Some(costs);
        self.stage2_busy = true;
        self.schedule(at + total, Event::ToolsDone(j));
        if let Stage1::Blocked(b) = self.stage1 {
            self.enqueue(b, at);
        }
    }

    fn run(&mut self, origin: Duration) {
        self.start_decode(0, origin);
        while let Some(Reverse((at, _, ev))) = self.heap.pop() {
            match ev {
                Event::DecodeDone(i) => {
                    if self.queue.len() < self.capacity {
                        self.enqueue(i, at);
                    } else {
                        self.stage1 = Stage1::Blocked(i);
                    }
                }
                Event::ToolsDone(j) => {
                    self.finished[j] = at;
                    self.stage2_busy = false;
                }
            }
            self.try_start_tools(at);
        }
        debug_assert!(matches!(self.stage1, Stage1::Done) || self.questions.is_empty());
    }
}

fn simulate_decoupled(
    questions: &[Question],
    gen: &dyn Generator,
    tools: &dyn ToolDispatcher,
    clock: &dyn Clock,
    capacity: usize,
) -> RunReport {
    let n = questions.len();
    let origin = clock.now();
    let mut sim = Sim {
        questions,
        gen,
        tools,
        capacity,
        heap: BinaryHeap::new(),
        seq: 0,
        drafts: (0..n).map(|_| None).collect(),
        started: vec![origin; n],
        costs: (0..n).map(|_| None).collect(),
        finished: vec![origin; n],
        queue: VecDeque::new(),
        stage1: Stage1::Done,
        stage2_busy: false,
        samples: Vec::new(),
    };
    sim.run(origin);
    let mut prev = origin;
    let mut items = Vec::with_capacity(n);
    for (i, q) in questions.iter().enumerate() {
        let costs = sim.costs[i].take().expect("every item reaches stage 2");
        items.push(item_report(q, costs, sim.started[i], sim.finished[i], prev));
        prev = sim.finished[i];
    }
    clock.advance(prev - origin);
    finish_report(Mode::Decoupled, clock, Some(capacity), origin, items, sim.samples)
}

fn threaded_decoupled(
    questions: &[Question],
    gen: &dyn Generator,
    tools: &dyn ToolDispatcher,
    clock: &dyn Clock,
    capacity: usize,
) -> Result<RunReport, PipelineError> {
    let origin = clock.now();
    let queued = AtomicU64::new(0);
    let samples = Mutex::new(Vec::new());
    let sample = |len: u64| {
        samples.lock().expect("sample lock").push(QueueSample {
            at: secs(clock.now()),
            len: len as usize,
        });
    };
    let (tx, rx) = sync_channel::<(usize, Duration, Result<Draft, String>)>(capacity);
    let items = std::thread::scope(|s| {
        let producer = s.spawn(|| {
            for (i, q) in questions.iter().enumerate() {
                let started = clock.now();
                let draft = gen.generate(q);
                if let Ok(d) = &draft {
                    clock.advance(d.decode_cost());
                }
                if tx.send((i, started, draft)).is_err() {
                    break;
                }
                sample(queued.fetch_add(1, Ordering::SeqCst) + 1);
            }
            drop(tx);
        });
        let mut items = Vec::with_capacity(questions.len());
        let mut prev = origin;
        for (i, started, draft) in rx.iter() {
            sample(queued.fetch_sub(1, Ordering::SeqCst).saturating_sub(1));
            let q = &questions[i];
            let costs = match draft {
                Ok(d) => run_tools(q, &d, tools, |c| clock.advance(c)),
                Err(e) => Costs {
                    decode: Duration::ZERO,
                    tools: Vec::new(),
                    error: Some(ItemError::GeneratorFailure(e)),
                },
            };
            let finished = clock.now();
            items.push(item_report(q, costs, started, finished, prev));
            prev = finished;
        }
        producer.join().map(|_| items).map_err(|_| PipelineError::StagePanicked)
    })?;
    let samples = samples.into_inner().expect("sample lock");
    Ok(finish_report(
        Mode::Decoupled,
        clock,
        Some(capacity),
        origin,
        items,
        samples,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BucketRatio {
    pub bucket: StepBucket,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `mean_a / mean_b`.
    pub ratio: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedupSummary {
    pub mode_a: Mode,
    pub mode_b: Mode,
    /// Makespan of `a` over makespan of `b`.
    pub overall_ratio: f64,
    pub buckets: Vec<BucketRatio>,
    pub slope_a: Option<f64>,
    pub slope_b: Option<f64>,
}

/// Compares two runs over the same questions, bucket by bucket.
pub fn compare_modes(a: &RunReport, b: &RunReport) -> Result<SpeedupSummary, PipelineError> {
    if a.items.len() != b.items.len() {
        return Err(PipelineError::WorkloadMismatch(format!(
            "{} vs {} items",
            a.items.len(),
            b.items.len()
        )));
    }
    for (x, y) in a.items.iter().zip(&b.items) {
        if x.id != y.id || x.gold_steps != y.gold_steps {
            return Err(PipelineError::WorkloadMismatch(format!(
                "item {:?} vs {:?}",
                x.id, y.id
            )));
        }
    }
    let mut acc: BTreeMap<StepBucket, (f64, f64, usize)> = BTreeMap::new();
    for (x, y) in a.items.iter().zip(&b.items) {
        let e = acc.entry(StepBucket::of(x.gold_steps)).or_default();
        e.0 += x.wall_seconds;
        e.1 += y.wall_seconds;
        e.2 += 1;
    }
    let buckets = acc
        .into_iter()
        .map(|(bucket, (sa, sb, n))| {
            let (mean_a, mean_b) = (sa / n as f64, sb / n as f64);
            BucketRatio {
                bucket,
                mean_a,
                mean_b,
                ratio: mean_a / mean_b,
                n,
            }
        })
        .collect();
    Ok(SpeedupSummary {
        mode_a: a.mode,
        mode_b: b.mode,
        overall_ratio: a.makespan_seconds / b.makespan_seconds,
        buckets,
        slope_a: a.slope(),
        slope_b: b.slope(),
    })
}

/// Shape of a synthetic workload.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub questions: usize,
    pub max_steps: usize,
    pub decode_tps: f64,
    pub tool_ms: f64,
    /// Tokens decoded before the first tool call, on top of one step.
    pub prefix_tokens: u32,
    pub tokens_per_step: u32,
    /// Relative spread of token counts and tool latencies, in [0, 1).
    pub jitter: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            questions: 200,
            max_steps: 8,
            decode_tps: 40.0,
            tool_ms: 400.0,
            prefix_tokens: 16,
            tokens_per_step: 24,
            jitter: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimItem {
    pub question: Question,
    pub chunk_tokens: Vec<u32>,
    pub tool_ms: Vec<f64>,
}

/// Seeded synthetic questions that act as their own generator and tools.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimWorkload {
    pub decode_tps: f64,
    pub items: Vec<SimItem>,
}

impl SimWorkload {
    pub fn generate(seed: u64, p: &SimParams) -> SimWorkload {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jitter = p.jitter.clamp(0.0, 0.99);
        let spread = |base: f64, rng: &mut ChaCha8Rng| {
            if jitter == 0.0 {
                base
            } else {
                base * rng.random_range(1.0 - jitter..=1.0 + jitter)
            }
        };
        let items = (0..p.questions)
            .map(|i| {
                let steps = rng.random_range(1..=p.max_steps.max(1));
                let mut chunk_tokens = Vec::with_capacity(steps + 1);
                for s in 0..=steps {
                    let base = match s {
                        0 => p.prefix_tokens + p.tokens_per_step,
                        s if s == steps => p.prefix_tokens / 2,
                        _ => p.tokens_per_step,
                    };
                    chunk_tokens.push(spread(base as f64, &mut rng).round() as u32);
                }
                let tool_ms = (0..steps).map(|_| spread(p.tool_ms, &mut rng)).collect();
                SimItem {
                    question: Question {
                        id: format!("q{i:05}"),
                        text: String::new(),
                        gold_steps: steps,
                    },
                    chunk_tokens,
                    tool_ms,
                }
            })
            .collect();
        SimWorkload {
            decode_tps: p.decode_tps,
            items,
        }
    }

    pub fn questions(&self) -> Vec<Question> {
        self.items.iter().map(|i| i.question.clone()).collect()
    }

    fn item(&self, q: &Question) -> Result<&SimItem, String> {
        self.items
            .iter()
            .find(|i| i.question.id == q.id)
            .ok_or_else(|| format!("unknown question {:?}", q.id))
    }
}

impl Generator for SimWorkload {
    fn generate(&self, q: &Question) -> Result<Draft, String> {
        let item = self.item(q)?;
        let per_token = 1.0 / self.decode_tps;
        let chunk_costs = item
            .chunk_tokens
            .iter()
            .map(|&t| Duration::from_secs_f64(t as f64 * per_token))
            .collect();
        let text = (1..=item.tool_ms.len())
            .map(|k| format!("[step {k} = y{k}]"))
            .collect::<Vec<_>>()
            .join(" ");
        Ok(Draft { text, chunk_costs })
    }
}

impl ToolDispatcher for SimWorkload {
    fn call(&self, q: &Question, _draft: &Draft, step: usize) -> Result<Duration, String> {
        let item = self.item(q)?;
        let ms = item
            .tool_ms
            .get(step)
            .ok_or_else(|| format!("{}: no tool call {step}", q.id))?;
        Ok(Duration::from_secs_f64(ms / 1000.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(n: usize, decode: f64, tool: f64) -> SimWorkload {
        let items = (0..n)
            .map(|i| SimItem {
                question: Question {
                    id: format!("q{i}"),
                    text: String::new(),
                    gold_steps: 1,
                },
                chunk_tokens: vec![(decode * 100.0) as u32, 0],
                tool_ms: vec![tool * 1000.0],
            })
            .collect();
        SimWorkload {
            decode_tps: 100.0,
            items,
        }
    }

    #[test]
    fn ten_question_example() {
        let w = fixed(10, 1.0, 0.5);
        let qs = w.questions();
        let r = run_decoupled(&qs, &w, &w, &VirtualClock::new(), 4).unwrap();
        assert!((r.makespan_seconds - 10.5).abs() < 1e-9);
        let s = run_interleaved(&qs, &w, &w, &VirtualClock::new());
        assert!((s.makespan_seconds - 15.0).abs() < 1e-9);
    }

    #[test]
    fn single_question_has_no_overlap() {
        let w = fixed(1, 1.0, 0.5);
        let r = run_decoupled(&w.questions(), &w, &w, &VirtualClock::new(), 1).unwrap();
        assert!((r.makespan_seconds - 1.5).abs() < 1e-9);
    }

    #[test]
    fn zero_capacity_rejected() {
        let w = fixed(1, 1.0, 0.5);
        assert_eq!(
            run_decoupled(&w.questions(), &w, &w, &VirtualClock::new(), 0),
            Err(PipelineError::InvalidCapacity)
        );
    }

    #[test]
    fn csv_header() {
        let w = fixed(2, 1.0, 0.5);
        let r = run_interleaved(&w.questions(), &w, &w, &VirtualClock::new());
        assert_eq!(
            r.to_csv(),
            "bucket,gold_steps,mode,mean_seconds,n\n1,1,interleaved,1.5,2\n"
        );
    }
}
