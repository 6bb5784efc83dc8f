//! Sampled logical-clock trajectories.
//!
//! Samples are taken at every instant where anything can change: sends,
//! drift breakpoints, the origin and the horizon. Between two consecutive
//! samples every logical clock is linear in real time, so the value just
//! before sample `k + 1` is `after[k] + rate[k] * (t[k + 1] - t[k])`, which
//! the trace also stores as `before[k + 1]`.

use serde::{Deserialize, Serialize};

use crate::clocks::DriftSchedule;
use crate::engine::config::RunConfig;
use crate::topology::NodeId;

/// Bit flags describing what happened to one node at one sample time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeMarks(u8);

impl NodeMarks {
    pub const START: NodeMarks = NodeMarks(1);
    pub const SEND: NodeMarks = NodeMarks(1 << 1);
    pub const RECEIVE: NodeMarks = NodeMarks(1 << 2);
    pub const JUMP: NodeMarks = NodeMarks(1 << 3);
    pub const RATE: NodeMarks = NodeMarks(1 << 4);
    pub const DRIFT: NodeMarks = NodeMarks(1 << 5);
    pub const FAULT: NodeMarks = NodeMarks(1 << 6);

    const NAMES: [(NodeMarks, &'static str); 7] = [
        (Self::START, "start"),
        (Self::SEND, "send"),
        (Self::RECEIVE, "receive"),
        (Self::JUMP, "jump"),
        (Self::RATE, "rate"),
        (Self::DRIFT, "drift"),
        (Self::FAULT, "fault"),
    ];

    pub fn contains(self, other: NodeMarks) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: NodeMarks) {
        self.0 |= other.0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// `+`-joined names, or `none`.
    pub fn label(self) -> String {
        if self.is_empty() {
            return "none".into();
        }
        Self::NAMES
            .iter()
            .filter(|(m, _)| self.contains(*m))
            .map(|(_, n)| *n)
            .collect::<Vec<_>>()
            .join("+")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub from: NodeId,
    pub to: NodeId,
    /// `None` when the sender had not started: plain application traffic.
    pub payload: Option<f64>,
    pub started_receiver: bool,
    pub logical_before: Option<f64>,
    pub logical_after: Option<f64>,
    pub alpha_before: Option<f64>,
    pub alpha_after: Option<f64>,
}

/// A maximal interval during which a rate factor (or a node's overall
/// `alpha`, when `neighbor` is `None`) sat at `1/D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedInterval {
    pub node: NodeId,
    pub neighbor: Option<NodeId>,
    pub start: f64,
    pub end: f64,
    /// Still open at the horizon.
    pub truncated: bool,
}

impl ReducedInterval {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub config: RunConfig,
    pub node_count: usize,
    pub times: Vec<f64>,
    /// Row-major `times.len() x node_count`; NaN while a node is unstarted.
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    /// `alpha * (1 + rho)` on the interval following each sample.
    pub rate: Vec<f64>,
    pub alpha: Vec<f64>,
    pub marks: Vec<NodeMarks>,
    pub start_times: Vec<Option<f64>>,
    pub events: Vec<EventRecord>,
    pub factor_intervals: Vec<ReducedInterval>,
    pub alpha_intervals: Vec<ReducedInterval>,
    pub drift: Vec<DriftSchedule>,
}

fn bitwise_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Value columns compare bit for bit, so unstarted (NaN) cells match.
impl PartialEq for Trace {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.node_count == other.node_count
            && bitwise_eq(&self.times, &other.times)
            && bitwise_eq(&self.before, &other.before)
            && bitwise_eq(&self.after, &other.after)
            && bitwise_eq(&self.rate, &other.rate)
            && bitwise_eq(&self.alpha, &other.alpha)
            && self.marks == other.marks
            && self.start_times == other.start_times
            && self.events == other.events
            && self.factor_intervals == other.factor_intervals
            && self.alpha_intervals == other.alpha_intervals
            && self.drift == other.drift
    }
}

fn defined(x: f64) -> Option<f64> {
    (!x.is_nan()).then_some(x)
}

impl Trace {
    pub(crate) fn with_capacity(config: RunConfig, node_count: usize, samples: usize) -> Self {
        let cells = samples * node_count;
        Trace {
            config,
            node_count,
            times: Vec::with_capacity(samples),
            before: Vec::with_capacity(cells),
            after: Vec::with_capacity(cells),
            rate: Vec::with_capacity(cells),
            alpha: Vec::with_capacity(cells),
            marks: Vec::with_capacity(cells),
            start_times: vec![None; node_count],
            events: Vec::new(),
            factor_intervals: Vec::new(),
            alpha_intervals: Vec::new(),
            drift: Vec::new(),
        }
    }

    pub fn sample_count(&self) -> usize {
        self.times.len()
    }

    fn cell(&self, k: usize, i: NodeId) -> usize {
        k * self.node_count + i
    }

    /// Logical value of node `i` just after everything at sample `k`.
    pub fn logical(&self, k: usize, i: NodeId) -> Option<f64> {
        defined(self.after[self.cell(k, i)])
    }

    /// Left limit of node `i`'s logical clock at sample `k`.
    pub fn logical_before(&self, k: usize, i: NodeId) -> Option<f64> {
        defined(self.before[self.cell(k, i)])
    }

    pub fn rate(&self, k: usize, i: NodeId) -> Option<f64> {
        defined(self.rate[self.cell(k, i)])
    }

    pub fn alpha(&self, k: usize, i: NodeId) -> Option<f64> {
        defined(self.alpha[self.cell(k, i)])
    }

    pub fn marks(&self, k: usize, i: NodeId) -> NodeMarks {
        self.marks[self.cell(k, i)]
    }

    pub fn row_after(&self, k: usize) -> &[f64] {
        &self.after[k * self.node_count..(k + 1) * self.node_count]
    }

    pub fn row_before(&self, k: usize) -> &[f64] {
        &self.before[k * self.node_count..(k + 1) * self.node_count]
    }

    /// Index of the sample at exactly `t`, if any.
    pub fn sample_at(&self, t: f64) -> Option<usize> {
        self.times.binary_search_by(|x| x.total_cmp(&t)).ok()
    }
}
