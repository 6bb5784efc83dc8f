//! Per-directed-edge communication times.
//!
//! Every directed edge carries application traffic from the start of the run,
//! with consecutive sends at most `d` apart. Generated times are nudged down
//! by an ulp where needed so that `t[k+1] - t[k] <= d` holds exactly in
//! floating point.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::config::fmt_num;
use crate::error::{Error, Result};
use crate::topology::{NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// Sends at `phase, phase + d, phase + 2d, ...`; `phase` defaults to `d`.
    Periodic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<f64>,
    },
    /// Gaps uniform on `(g_min, d]`; `g_min` defaults to `d / 4`.
    RandomUniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g_min: Option<f64>,
    },
    /// Explicit times for every directed edge.
    Scripted { edges: Vec<ScriptedEdge> },
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Periodic { phase: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSchedule {
    pub from: NodeId,
    pub to: NodeId,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommSchedule {
    edges: Vec<EdgeSchedule>,
}

/// A send on one directed edge. The receiver gets it at the same instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub from: NodeId,
    pub to: NodeId,
    /// Index of this send within its edge's schedule.
    pub seq: u32,
}

impl Event {
    /// Processing order: time, then sender, receiver, per-edge index.
    pub fn order(&self, other: &Event) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.from.cmp(&other.from))
            .then(self.to.cmp(&other.to))
            .then(self.seq.cmp(&other.seq))
    }
}

impl CommSchedule {
    pub fn edges(&self) -> &[EdgeSchedule] {
        &self.edges
    }

    pub fn edge(&self, from: NodeId, to: NodeId) -> Option<&EdgeSchedule> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    /// All sends in processing order.
    pub fn events(&self) -> Vec<Event> {
        let mut out: Vec<Event> = self
            .edges
            .iter()
            .flat_map(|e| {
                e.times.iter().enumerate().map(move |(k, &time)| Event {
                    time,
                    from: e.from,
                    to: e.to,
                    seq: k as u32,
                })
            })
            .collect();
        out.sort_by(Event::order);
        out
    }

    /// Largest same-direction gap, counting the wait for the first send.
    pub fn max_gap(&self) -> f64 {
        self.edges
            .iter()
            .flat_map(|e| {
                let first = e.times.first().copied();
                first
                    .into_iter()
                    .chain(e.times.windows(2).map(|w| w[1] - w[0]))
            })
            .fold(0.0, f64::max)
    }
}

/// Next send time after `t` with gap `gap <= d`, kept exactly within `d`.
fn advance(t: f64, gap: f64, d: f64) -> f64 {
    let mut next = t + gap;
    while next - t > d {
        next = next.next_down();
    }
    if next <= t {
        next = t.next_up();
    }
    next
}

fn edge_rng(seed: u64, edge: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5DEE_CE66_D1CE_4E5B);
    rng.set_stream(edge as u64);
    rng
}

pub fn generate_schedule(
    topology: &Topology,
    d: f64,
    spec: &ScheduleSpec,
    seed: u64,
    horizon: f64,
) -> Result<CommSchedule> {
    if !(d > 0.0) {
        return Err(Error::NonPositive("d", d));
    }
    let directed = topology.directed_edges();
    let edges = match spec {
        ScheduleSpec::Periodic { phase } => {
            let phase = phase.unwrap_or(d);
            if !(phase > 0.0 && phase <= d) {
                return Err(Error::Invalid(vec![format!(
                    "periodic phase must lie in (0, d], got {}",
                    fmt_num(phase)
                )]));
            }
            let mut times = Vec::new();
            let mut t = phase;
            while t <= horizon {
                times.push(t);
                t = advance(t, d, d);
            }
            directed
                .into_iter()
                .map(|(from, to)| EdgeSchedule {
                    from,
                    to,
                    times: times.clone(),
                })
                .collect()
        }
        ScheduleSpec::RandomUniform { g_min } => {
            let g_min = g_min.unwrap_or(d / 4.0);
            if !(g_min >= 0.0 && g_min < d) {
                return Err(Error::Invalid(vec![format!(
                    "g_min must lie in [0, d), got {}",
                    fmt_num(g_min)
                )]));
            }
            directed
                .into_iter()
                .enumerate()
                .map(|(k, (from, to))| {
                    let mut rng = edge_rng(seed, k);
                    let mut draw = || d - rng.gen::<f64>() * (d - g_min);
                    let mut times = Vec::new();
                    let mut t = advance(0.0, draw(), d);
                    while t <= horizon {
                        times.push(t);
                        t = advance(t, draw(), d);
                    }
                    EdgeSchedule { from, to, times }
                })
                .collect()
        }
        ScheduleSpec::Scripted { edges } => {
            for e in edges {
                if !topology.is_edge(e.from, e.to) {
                    return Err(Error::Schedule {
                        from: e.from,
                        to: e.to,
                        reason: "not an edge of the topology".into(),
                    });
                }
            }
            directed
                .into_iter()
                .map(|(from, to)| {
                    let mut listed = edges.iter().filter(|e| e.from == from && e.to == to);
                    let script = listed.next().ok_or_else(|| Error::Schedule {
                        from,
                        to,
                        reason: "missing from scripted schedule".into(),
                    })?;
                    if listed.next().is_some() {
                        return Err(Error::Schedule {
                            from,
                            to,
                            reason: "listed more than once".into(),
                        });
                    }
                    check_scripted(script, d, horizon)?;
                    Ok(EdgeSchedule {
                        from,
                        to,
                        times: script.times.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(CommSchedule { edges })
}

fn check_scripted(e: &ScriptedEdge, d: f64, horizon: f64) -> Result<()> {
    let fail = |reason: String| {
        Err(Error::Schedule {
            from: e.from,
            to: e.to,
            reason,
        })
    };
    let Some(&first) = e.times.first() else {
        return fail("no send times".into());
    };
    if !(first >= 0.0) {
        return fail(format!("send time {} is negative", fmt_num(first)));
    }
    if first > d {
        return fail(format!(
            "first send at {} exceeds d = {}",
            fmt_num(first),
            fmt_num(d)
        ));
    }
    for w in e.times.windows(2) {
        let gap = w[1] - w[0];
        if !(gap > 0.0) {
            return fail(format!(
                "send times {} and {} are not strictly increasing",
                fmt_num(w[0]),
                fmt_num(w[1])
            ));
        }
        if gap > d {
            return fail(format!(
                "gap {} between sends at {} and {} exceeds d = {}",
                fmt_num(gap),
                fmt_num(w[0]),
                fmt_num(w[1]),
                fmt_num(d)
            ));
        }
    }
    let last = e.times[e.times.len() - 1];
    if last > horizon {
        return fail(format!(
            "send at {} lies beyond the horizon {}",
            fmt_num(last),
            fmt_num(horizon)
        ));
    }
    if horizon - last > d {
        return fail(format!(
            "last send at {} leaves a gap above d = {} before the horizon {}",
            fmt_num(last),
            fmt_num(d),
            fmt_num(horizon)
        ));
    }
    Ok(())
}
