//! Skew measurements and bound verdicts computed from a [`Trace`].
//!
//! Logical clocks are piecewise linear with breaks only at sample times, so
//! pairwise skew over any inter-sample interval peaks at one of its ends.
//! Every measurement below therefore scans the post-sample values and the
//! left limits stored in the trace; nothing is interpolated.

pub mod output;

use serde::{Deserialize, Serialize};

use crate::engine::config::{fmt_num, RunConfig, Scenario, BOUND_TOLERANCE};
use crate::protocol::{ProtocolParams, Variant};
use crate::topology::{NodeId, Topology};
use crate::trace::Trace;

pub use output::{write_summary_json, write_trace_csv, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalSkew {
    pub value: f64,
    /// Lower id first; `None` when fewer than two nodes were ever running.
    pub pair: Option<(NodeId, NodeId)>,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSkew {
    pub u: NodeId,
    pub v: NodeId,
    pub max_skew: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub distance: u32,
    pub max_skew: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedRateStats {
    /// Durations of reduced-`alpha` intervals, per node.
    pub per_node: Vec<Vec<f64>>,
    /// All of the above, ordered by node then start time.
    pub durations: Vec<f64>,
    pub count: usize,
    pub truncated: usize,
    pub total: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub warmup: f64,
    pub neighbor_skew: f64,
    pub global_skew: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewReport {
    pub max_global_skew: GlobalSkew,
    pub per_edge_max_skew: Vec<EdgeSkew>,
    /// Entry `k - 1` holds distance `k`, for `k = 1..=diameter`.
    pub gradient_profile: Vec<ProfileEntry>,
    pub min_rate: Option<f64>,
    pub max_rate: Option<f64>,
    pub reduced_rate: ReducedRateStats,
    pub monotone: bool,
    pub start_times: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_state: Option<SteadyState>,
}

impl SkewReport {
    /// Largest skew between neighbors, i.e. the profile at distance 1.
    pub fn neighbor_skew(&self) -> f64 {
        self.gradient_profile.first().map_or(0.0, |p| p.max_skew)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// The analysis promises this bound for the configuration at hand.
    Guaranteed,
    /// Reported for information; no promise applies.
    Observed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub scope: Scope,
    pub measured: f64,
    pub threshold: f64,
    /// Positive when the bound holds with room to spare.
    pub margin: f64,
    pub pass: bool,
    pub description: String,
}

/// Each sample contributes its left limit and its post-event values.
fn rows(trace: &Trace, from: f64) -> impl Iterator<Item = (f64, &[f64])> + '_ {
    (0..trace.sample_count())
        .filter(move |&k| trace.times[k] >= from)
        .flat_map(move |k| {
            let t = trace.times[k];
            let before = (t > from).then(|| (t, trace.row_before(k)));
            before
                .into_iter()
                .chain(std::iter::once((t, trace.row_after(k))))
        })
}

fn global_skew_from(trace: &Trace, from: f64) -> GlobalSkew {
    let mut best = GlobalSkew {
        value: 0.0,
        pair: None,
        time: 0.0,
    };
    for (t, row) in rows(trace, from) {
        let mut lo: Option<(f64, NodeId)> = None;
        let mut hi: Option<(f64, NodeId)> = None;
        for (i, &x) in row.iter().enumerate() {
            if x.is_nan() {
                continue;
            }
            if lo.map_or(true, |(v, _)| x < v) {
                lo = Some((x, i));
            }
            if hi.map_or(true, |(v, _)| x > v) {
                hi = Some((x, i));
            }
        }
        if let (Some((a, i)), Some((b, j))) = (lo, hi) {
            if i != j && (best.pair.is_none() || b - a > best.value) {
                best = GlobalSkew {
                    value: b - a,
                    pair: Some((i.min(j), i.max(j))),
                    time: t,
                };
            }
        }
    }
    best
}

/// Largest `|L_i - L_j|` over all sample times and started pairs.
pub fn global_skew(trace: &Trace) -> GlobalSkew {
    global_skew_from(trace, 0.0)
}

fn pair_maxima(trace: &Trace, pairs: &[(NodeId, NodeId)], from: f64) -> Vec<f64> {
    let mut max = vec![0.0f64; pairs.len()];
    for (_, row) in rows(trace, from) {
        for (m, &(i, j)) in max.iter_mut().zip(pairs) {
            let s = (row[i] - row[j]).abs();
            if s > *m {
                *m = s;
            }
        }
    }
    max
}

pub fn per_edge_max_skew(trace: &Trace, topology: &Topology) -> Vec<EdgeSkew> {
    let edges = topology.edges();
    pair_maxima(trace, &edges, 0.0)
        .into_iter()
        .zip(edges)
        .map(|(max_skew, (u, v))| EdgeSkew { u, v, max_skew })
        .collect()
}

fn profile_from(trace: &Trace, topology: &Topology, from: f64) -> Vec<ProfileEntry> {
    let n = topology.node_count();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j));
        }
    }
    let maxima = pair_maxima(trace, &pairs, from);
    let mut profile: Vec<ProfileEntry> = (1..=topology.diameter())
        .map(|distance| ProfileEntry {
            distance,
            max_skew: 0.0,
        })
        .collect();
    for (&(i, j), m) in pairs.iter().zip(maxima) {
        let entry = &mut profile[topology.distance(i, j) as usize - 1];
        entry.max_skew = entry.max_skew.max(m);
    }
    profile
}

/// For each hop distance `k`, the largest skew between started nodes `k` apart.
pub fn gradient_profile(trace: &Trace, topology: &Topology) -> Vec<ProfileEntry> {
    profile_from(trace, topology, 0.0)
}

/// Smallest `alpha * (1 + rho)` over every interval a started node runs through.
pub fn rate_floor(trace: &Trace) -> Option<f64> {
    rate_extreme(trace, f64::min)
}

pub fn rate_ceiling(trace: &Trace) -> Option<f64> {
    rate_extreme(trace, f64::max)
}

fn rate_extreme(trace: &Trace, pick: fn(f64, f64) -> f64) -> Option<f64> {
    let last = trace.sample_count().saturating_sub(1);
    (0..last)
        .flat_map(|k| (0..trace.node_count).filter_map(move |i| trace.rate(k, i)))
        .reduce(pick)
}

/// `(time, node, drop)` wherever a logical clock moved backwards.
pub fn monotonicity_violations(trace: &Trace) -> Vec<(f64, NodeId, f64)> {
    let mut out = Vec::new();
    for i in 0..trace.node_count {
        let mut last: Option<f64> = None;
        for k in 0..trace.sample_count() {
            for x in [trace.logical_before(k, i), trace.logical(k, i)]
                .into_iter()
                .flatten()
            {
                if let Some(prev) = last {
                    if x < prev {
                        out.push((trace.times[k], i, prev - x));
                    }
                }
                last = Some(x);
            }
        }
    }
    out
}

pub fn reduced_rate_stats(trace: &Trace) -> ReducedRateStats {
    let mut per_node = vec![Vec::new(); trace.node_count];
    let mut truncated = 0;
    for r in &trace.alpha_intervals {
        per_node[r.node].push(r.duration());
        truncated += usize::from(r.truncated);
    }
    let durations: Vec<f64> = per_node.iter().flatten().copied().collect();
    let total: f64 = durations.iter().sum();
    let count = durations.len();
    ReducedRateStats {
        max: durations.iter().copied().fold(0.0, f64::max),
        mean: if count == 0 {
            0.0
        } else {
            total / count as f64
        },
        per_node,
        durations,
        count,
        truncated,
        total,
    }
}

pub fn analyze(trace: &Trace, topology: &Topology) -> SkewReport {
    let per_edge = per_edge_max_skew(trace, topology);
    let steady_state = trace.config.warmup.map(|warmup| SteadyState {
        warmup,
        neighbor_skew: pair_maxima(trace, &topology.edges(), warmup)
            .into_iter()
            .fold(0.0, f64::max),
        global_skew: global_skew_from(trace, warmup).value,
    });
    SkewReport {
        max_global_skew: global_skew(trace),
        per_edge_max_skew: per_edge,
        gradient_profile: gradient_profile(trace, topology),
        min_rate: rate_floor(trace),
        max_rate: rate_ceiling(trace),
        reduced_rate: reduced_rate_stats(trace),
        monotone: monotonicity_violations(trace).is_empty(),
        start_times: trace.start_times.clone(),
        steady_state,
    }
}

/// Whether the global bound is promised. It needs the slowdown rule, a
/// slowed fast clock that is slower than an unslowed slow one
/// (`(1 + rho_hat) / D < 1 - rho_hat`), and nodes that act on the message
/// that starts them. Outside that, a fast node can pull away from laggards
/// that gain only about `c` per period.
pub fn global_bound_applies(config: &RunConfig, d_known: u32) -> bool {
    config.variant == Variant::Gradient
        && config.process_on_start
        && f64::from(d_known) * (1.0 - config.rho_hat) > 1.0 + config.rho_hat
}

/// `(1 + rho_hat) * D * d`.
pub fn global_bound(config: &RunConfig, d_known: u32) -> f64 {
    (1.0 + config.rho_hat) * f64::from(d_known) * config.d
}

/// `c + (1 + 3 rho_hat) * d`, with the variant's effective `c`.
pub fn neighbor_bound(config: &RunConfig, d_known: u32) -> f64 {
    let c = ProtocolParams::new(config.c, d_known, config.variant, config.rho_hat).c();
    c + (1.0 + 3.0 * config.rho_hat) * config.d
}

/// `(1 - rho_hat) / D`.
pub fn rate_floor_bound(config: &RunConfig, d_known: u32) -> f64 {
    (1.0 - config.rho_hat) / f64::from(d_known)
}

fn upper(name: &str, scope: Scope, measured: f64, threshold: f64, description: String) -> Verdict {
    Verdict {
        name: name.into(),
        scope,
        measured,
        threshold,
        margin: threshold - measured,
        pass: measured <= threshold + BOUND_TOLERANCE,
        description,
    }
}

/// Verdicts against the analytical bounds. `config` must be resolved.
pub fn bound_checks(report: &SkewReport, config: &RunConfig) -> Vec<Verdict> {
    let d_known = config.d_known.unwrap_or(1).max(1);
    let neighbor_scope =
        if config.scenario == Some(Scenario::WaitChain) && config.variant == Variant::Gradient {
            Scope::Guaranteed
        } else {
            Scope::Observed
        };
    let global_scope = if global_bound_applies(config, d_known) {
        Scope::Guaranteed
    } else {
        Scope::Observed
    };
    let g = global_bound(config, d_known);
    let nb = neighbor_bound(config, d_known);
    let floor = rate_floor_bound(config, d_known);
    let mut out = vec![
        upper(
            "global_skew",
            global_scope,
            report.max_global_skew.value,
            g,
            format!(
                "max skew between any two clocks <= (1+rho_hat)*D*d = {}",
                fmt_num(g)
            ),
        ),
        upper(
            "neighbor_skew",
            neighbor_scope,
            report.neighbor_skew(),
            nb,
            format!(
                "max skew between neighbors <= c+(1+3*rho_hat)*d = {}",
                fmt_num(nb)
            ),
        ),
    ];
    let measured_floor = report.min_rate.unwrap_or(f64::INFINITY);
    out.push(Verdict {
        name: "rate_floor".into(),
        scope: Scope::Guaranteed,
        measured: measured_floor,
        threshold: floor,
        margin: measured_floor - floor,
        pass: measured_floor >= floor - BOUND_TOLERANCE,
        description: format!("logical clock rate >= (1-rho_hat)/D = {}", fmt_num(floor)),
    });
    out.push(Verdict {
        name: "monotonicity".into(),
        scope: Scope::Guaranteed,
        measured: if report.monotone { 0.0 } else { 1.0 },
        threshold: 0.0,
        margin: if report.monotone { 0.0 } else { -1.0 },
        pass: report.monotone,
        description: "logical clocks never run backwards".into(),
    });
    if let Some(ss) = &report.steady_state {
        out.push(upper(
            "neighbor_skew_steady_state",
            Scope::Observed,
            ss.neighbor_skew,
            nb,
            format!(
                "neighbor skew after t = {} <= c+(1+3*rho_hat)*d = {}",
                fmt_num(ss.warmup),
                fmt_num(nb)
            ),
        ));
    }
    out
}
