//! Fixed-step reference simulator.
//!
//! Integrates every logical clock directly, `L += alpha * (H(b) - H(a))`,
//! over the grid `k * dt` with compensated summation. It stops exactly at
//! message instants and applies the same receive rule and same-instant
//! semantics as the engine, but shares none of its clock or node-state code.
//! The two should agree to rounding.

use serde::{Deserialize, Serialize};

use crate::engine::{prepare, Event, RunConfig};
use crate::error::{Error, Result};
use crate::protocol::{Variant, DECISION_SLACK};
use crate::topology::NodeId;
use crate::trace::{NodeMarks, Trace};

struct Node {
    logical: Option<f64>,
    /// Running compensation for `logical`.
    carry: f64,
    neighbors: Vec<NodeId>,
    views: Vec<f64>,
    slow: Vec<bool>,
}

impl Node {
    fn value(&self) -> Option<f64> {
        self.logical.map(|l| l + self.carry)
    }

    fn set(&mut self, v: f64) {
        self.logical = Some(v);
        self.carry = 0.0;
    }

    fn add(&mut self, x: f64) {
        if let Some(sum) = self.logical.as_mut() {
            let t = *sum + x;
            self.carry += if sum.abs() >= x.abs() {
                (*sum - t) + x
            } else {
                (x - t) + *sum
            };
            *sum = t;
        }
    }

    fn alpha(&self, reduced: f64) -> f64 {
        if self.slow.iter().any(|&s| s) {
            reduced
        } else {
            1.0
        }
    }
}

fn drift(breakpoints: &[f64], rates: &[f64], t: f64) -> f64 {
    let k = breakpoints.iter().take_while(|&&b| b <= t).count();
    rates[k.max(1) - 1]
}

/// Hardware time elapsed over `[a, b]` under piecewise-constant drift.
fn elapsed(breakpoints: &[f64], rates: &[f64], a: f64, b: f64) -> f64 {
    let mut total = b - a;
    for (k, &rho) in rates.iter().enumerate() {
        let lo = breakpoints[k].max(a);
        let hi = breakpoints.get(k + 1).map_or(b, |&x| x.min(b));
        if hi > lo {
            total += rho * (hi - lo);
        }
    }
    total
}

/// Runs `config` on a fixed grid of width `dt`, which must be in `(0, d / 10]`.
/// The returned trace is sampled at `0`, every send instant, the fault time
/// and the horizon.
pub fn oracle_run(config: &RunConfig, dt: f64) -> Result<Trace> {
    let prepared = prepare(config)?;
    let cfg = &prepared.config;
    if !(dt > 0.0 && dt <= cfg.d / 10.0) {
        return Err(Error::Invalid(vec![format!(
            "oracle step must be in (0, d/10], got {dt}"
        )]));
    }
    let topo = &prepared.topology;
    let n = topo.node_count();
    let horizon = prepared.horizon();
    let dk = f64::from(prepared.d_known());
    let (c, slowdown) = match cfg.variant {
        Variant::Gradient => (cfg.c, true),
        Variant::NoSlowdown => (cfg.c, false),
        Variant::LargeC => ((1.0 + cfg.rho_hat) * (dk + 1.0).sqrt(), false),
    };
    let reduced = 1.0 / dk;
    let drifts: Vec<(&[f64], &[f64])> = prepared
        .clocks
        .iter()
        .map(|k| (k.schedule().breakpoints(), k.schedule().rates()))
        .collect();

    let mut events: Vec<Event> = prepared.schedule.events();
    events.sort_by(|a, b| a.order(b));
    let mut stops: Vec<f64> = std::iter::once(0.0)
        .chain(events.iter().map(|e| e.time))
        .chain(cfg.fault.map(|f| f.time))
        .chain(std::iter::once(horizon))
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut nodes: Vec<Node> = (0..n)
        .map(|i| {
            let neighbors = topo.neighbors(i).to_vec();
            let deg = neighbors.len();
            Node {
                logical: None,
                carry: 0.0,
                neighbors,
                views: vec![0.0; deg],
                slow: vec![false; deg],
            }
        })
        .collect();

    let mut trace = Trace::with_capacity(cfg.clone(), n, stops.len());
    trace.drift = prepared
        .clocks
        .iter()
        .map(|k| k.schedule().clone())
        .collect();
    let mut now = 0.0;
    let mut grid = 0u64;
    let mut next = 0;

    let step = |nodes: &mut [Node], a: f64, b: f64| {
        for (i, node) in nodes.iter_mut().enumerate() {
            if node.logical.is_some() {
                let (bp, rates) = drifts[i];
                node.add(node.alpha(reduced) * elapsed(bp, rates, a, b));
            }
        }
    };

    for &t in &stops {
        loop {
            let g = (grid + 1) as f64 * dt;
            if g >= t {
                break;
            }
            step(&mut nodes, now, g);
            now = g;
            grid += 1;
        }
        step(&mut nodes, now, t);
        now = t;
        if (grid + 1) as f64 * dt == t {
            grid += 1;
        }

        trace
            .before
            .extend(nodes.iter().map(|x| x.value().unwrap_or(f64::NAN)));
        let mut marks = vec![NodeMarks::default(); n];
        if t == 0.0 {
            for &i in &cfg.initiators {
                if nodes[i].logical.is_none() {
                    nodes[i].set(0.0);
                    trace.start_times[i] = Some(0.0);
                    marks[i].insert(NodeMarks::START);
                }
            }
        }
        if let Some(f) = cfg.fault.filter(|f| f.time == t) {
            if let Some(l) = nodes[f.node].value() {
                nodes[f.node].set(l + f.delta);
                marks[f.node].insert(NodeMarks::FAULT);
            }
        }

        let first = next;
        while next < events.len() && events[next].time == t {
            next += 1;
        }
        let snapshot: Vec<Option<f64>> = nodes.iter().map(Node::value).collect();
        for e in &events[first..next] {
            let Some(v) = snapshot[e.from] else { continue };
            marks[e.from].insert(NodeMarks::SEND);
            marks[e.to].insert(NodeMarks::RECEIVE);
            let node = &mut nodes[e.to];
            let fresh = node.logical.is_none();
            if fresh {
                node.set(0.0);
                trace.start_times[e.to] = Some(t);
                marks[e.to].insert(NodeMarks::START);
            }
            let k = node
                .neighbors
                .iter()
                .position(|&j| j == e.from)
                .expect("events run along edges");
            node.views[k] = v;
            if fresh && !cfg.process_on_start {
                continue;
            }
            let l = node.value().unwrap();
            node.slow[k] = slowdown && l >= v + c - DECISION_SLACK;
            let lo = node.views.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = node.views.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let target = (lo + c).min(hi);
            if target > l {
                node.set(target);
                marks[e.to].insert(NodeMarks::JUMP);
            }
        }

        trace.times.push(t);
        for (i, node) in nodes.iter().enumerate() {
            match node.value() {
                Some(l) => {
                    let a = node.alpha(reduced);
                    let (bp, rates) = drifts[i];
                    trace.after.push(l);
                    trace.alpha.push(a);
                    trace.rate.push(a * (1.0 + drift(bp, rates, t)));
                }
                None => {
                    trace.after.push(f64::NAN);
                    trace.alpha.push(f64::NAN);
                    trace.rate.push(f64::NAN);
                }
            }
        }
        trace.marks.extend(marks);
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub time: f64,
    pub node: NodeId,
    pub engine: Option<f64>,
    pub oracle: Option<f64>,
}

impl Deviation {
    pub fn size(&self) -> f64 {
        match (self.engine, self.oracle) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub tolerance: f64,
    pub samples: usize,
    pub max_deviation: f64,
    pub worst: Option<Deviation>,
    pub first_exceedance: Option<Deviation>,
}

impl Comparison {
    pub fn agrees(&self) -> bool {
        self.first_exceedance.is_none()
    }
}

/// Compares an engine trace with an oracle trace of the same configuration
/// at every oracle sample time, on both sides of each instant.
pub fn compare(engine: &Trace, oracle: &Trace, tol: f64) -> Result<Comparison> {
    if engine.config != oracle.config {
        return Err(Error::Mismatch(
            "traces come from different configurations".into(),
        ));
    }
    let mut out = Comparison {
        tolerance: tol,
        samples: 0,
        max_deviation: 0.0,
        worst: None,
        first_exceedance: None,
    };
    for (k, &t) in oracle.times.iter().enumerate() {
        let ke = engine
            .sample_at(t)
            .ok_or_else(|| Error::Mismatch(format!("engine trace has no sample at t = {t}")))?;
        out.samples += 1;
        for i in 0..oracle.node_count {
            for (engine_value, oracle_value) in [
                (engine.logical_before(ke, i), oracle.logical_before(k, i)),
                (engine.logical(ke, i), oracle.logical(k, i)),
            ] {
                let dev = Deviation {
                    time: t,
                    node: i,
                    engine: engine_value,
                    oracle: oracle_value,
                };
                let size = dev.size();
                if out.worst.is_none() || size > out.max_deviation {
                    out.max_deviation = size;
                    out.worst = Some(dev);
                }
                if size > tol && out.first_exceedance.is_none() {
                    out.first_exceedance = Some(dev);
                }
            }
        }
    }
    Ok(out)
}
