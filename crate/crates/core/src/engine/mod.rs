//! Deterministic discrete-event executor.
//!
//! Messages are delivered at their send instant. Within one instant, every
//! payload carries the sender's logical value as it stood when the instant
//! began (after initiators start at `t = 0`); deliveries are then applied in
//! `(time, sender, receiver, per-edge index)` order. A node first reached at
//! `t` therefore does not forward anything at `t` itself, and start-up
//! spreads at most one hop per send.

pub mod config;
pub mod scenario;
pub mod schedule;

use crate::error::Result;
use crate::protocol::{NodeState, RateFactor, StartCause, SyncPayload};
use crate::trace::{EventRecord, NodeMarks, ReducedInterval, Trace};

pub use config::{
    prepare, validate, DriftSpec, Fault, Prepared, RunConfig, Scenario, BOUND_TOLERANCE,
};
pub use scenario::{build_wait_chain_scenario, preset, wait_chain_length, PresetSpec, PRESETS};
pub use schedule::{
    generate_schedule, CommSchedule, EdgeSchedule, Event, ScheduleSpec, ScriptedEdge,
};

pub fn run(config: &RunConfig) -> Result<Trace> {
    let prepared = prepare(config)?;
    simulate(&prepared)
}

/// Sorted, de-duplicated union of everything that must become a sample.
pub(crate) fn sample_times(prepared: &Prepared, events: &[Event]) -> Vec<f64> {
    let horizon = prepared.horizon();
    let mut times: Vec<f64> = std::iter::once(0.0)
        .chain(std::iter::once(horizon))
        .chain(events.iter().map(|e| e.time))
        .chain(
            prepared
                .clocks
                .iter()
                .flat_map(|c| c.schedule().breakpoints().iter().copied()),
        )
        .chain(prepared.config.fault.map(|f| f.time))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

struct Intervals {
    open_factor: Vec<Vec<Option<f64>>>,
    open_alpha: Vec<Option<f64>>,
}

pub fn simulate(prepared: &Prepared) -> Result<Trace> {
    let topo = &prepared.topology;
    let params = &prepared.params;
    let clocks = &prepared.clocks;
    let cfg = &prepared.config;
    let n = topo.node_count();
    let horizon = prepared.horizon();

    let events = prepared.schedule.events();
    let times = sample_times(prepared, &events);
    let mut trace = Trace::with_capacity(cfg.clone(), n, times.len());
    trace.drift = clocks.iter().map(|c| c.schedule().clone()).collect();

    let mut nodes: Vec<NodeState> = (0..n)
        .map(|i| NodeState::new(i, topo.neighbors(i)))
        .collect();
    let mut open = Intervals {
        open_factor: (0..n)
            .map(|i| vec![None; topo.neighbors(i).len()])
            .collect(),
        open_alpha: vec![None; n],
    };
    let mut next_event = 0;
    let mut payloads: Vec<Option<SyncPayload>> = Vec::new();

    for &t in &times {
        let h: Vec<f64> = clocks
            .iter()
            .map(|c| c.hardware_time(t))
            .collect::<Result<_>>()?;
        let mut marks = vec![NodeMarks::default(); n];
        for (i, node) in nodes.iter().enumerate() {
            trace
                .before
                .push(node.logical_time(params, h[i]).unwrap_or(f64::NAN));
            if t > 0.0 && clocks[i].schedule().breakpoints().contains(&t) {
                marks[i].insert(NodeMarks::DRIFT);
            }
        }

        if t == 0.0 {
            for &i in &cfg.initiators {
                if !nodes[i].is_started() {
                    nodes[i].on_start(h[i], StartCause::Initiator)?;
                    trace.start_times[i] = Some(t);
                    marks[i].insert(NodeMarks::START);
                }
            }
        }
        if let Some(fault) = cfg.fault.filter(|f| f.time == t) {
            if nodes[fault.node].shift(params, h[fault.node], fault.delta)? {
                marks[fault.node].insert(NodeMarks::FAULT);
            }
        }

        let first = next_event;
        while next_event < events.len() && events[next_event].time == t {
            next_event += 1;
        }
        let batch = &events[first..next_event];
        payloads.clear();
        payloads.extend(
            batch
                .iter()
                .map(|e| nodes[e.from].emit_payload(params, h[e.from])),
        );

        for (e, payload) in batch.iter().zip(&payloads) {
            let mut record = EventRecord {
                time: t,
                from: e.from,
                to: e.to,
                payload: payload.map(|p| p.value()),
                started_receiver: false,
                logical_before: None,
                logical_after: None,
                alpha_before: None,
                alpha_after: None,
            };
            let Some(payload) = *payload else {
                trace.events.push(record);
                continue;
            };
            marks[e.from].insert(NodeMarks::SEND);
            marks[e.to].insert(NodeMarks::RECEIVE);
            let hj = h[e.to];
            let receiver = &mut nodes[e.to];
            if !receiver.is_started() {
                receiver.on_start(hj, StartCause::FirstMessage)?;
                trace.start_times[e.to] = Some(t);
                record.started_receiver = true;
                marks[e.to].insert(NodeMarks::START);
            }
            if record.started_receiver && !cfg.process_on_start {
                let l = receiver.logical_time(params, hj)?;
                receiver.record_view(e.from, payload)?;
                record.logical_before = Some(l);
                record.logical_after = Some(l);
                record.alpha_before = Some(receiver.alpha(params));
                record.alpha_after = record.alpha_before;
            } else {
                let out = receiver.on_receive(params, e.from, payload, hj)?;
                record.logical_before = Some(out.logical_before);
                record.logical_after = Some(out.logical_after);
                record.alpha_before = Some(out.alpha_before);
                record.alpha_after = Some(out.alpha_after);
                if out.jumped() {
                    marks[e.to].insert(NodeMarks::JUMP);
                }
                if out.alpha_changed() {
                    marks[e.to].insert(NodeMarks::RATE);
                }
                if out.factor_before != out.factor_after {
                    let slot = topo
                        .neighbors(e.to)
                        .binary_search(&e.from)
                        .expect("sender is a neighbor");
                    let cell = &mut open.open_factor[e.to][slot];
                    match out.factor_after {
                        RateFactor::Reduced => *cell = Some(t),
                        RateFactor::Full => {
                            if let Some(start) = cell.take() {
                                trace.factor_intervals.push(ReducedInterval {
                                    node: e.to,
                                    neighbor: Some(e.from),
                                    start,
                                    end: t,
                                    truncated: false,
                                });
                            }
                        }
                    }
                }
                if out.alpha_changed() {
                    let cell = &mut open.open_alpha[e.to];
                    if out.alpha_after < out.alpha_before {
                        *cell = Some(t);
                    } else if let Some(start) = cell.take() {
                        trace.alpha_intervals.push(ReducedInterval {
                            node: e.to,
                            neighbor: None,
                            start,
                            end: t,
                            truncated: false,
                        });
                    }
                }
            }
            trace.events.push(record);
        }

        trace.times.push(t);
        for (i, node) in nodes.iter().enumerate() {
            match node.logical_time(params, h[i]) {
                Ok(l) => {
                    let alpha = node.alpha(params);
                    trace.after.push(l);
                    trace.alpha.push(alpha);
                    trace.rate.push(alpha * clocks[i].rate_at(t));
                }
                Err(_) => {
                    trace.after.push(f64::NAN);
                    trace.alpha.push(f64::NAN);
                    trace.rate.push(f64::NAN);
                }
            }
        }
        trace.marks.extend(marks);
    }

    for (i, slots) in open.open_factor.iter().enumerate() {
        for (slot, start) in slots.iter().enumerate() {
            if let Some(start) = *start {
                trace.factor_intervals.push(ReducedInterval {
                    node: i,
                    neighbor: Some(topo.neighbors(i)[slot]),
                    start,
                    end: horizon,
                    truncated: true,
                });
            }
        }
        if let Some(start) = open.open_alpha[i] {
            trace.alpha_intervals.push(ReducedInterval {
                node: i,
                neighbor: None,
                start,
                end: horizon,
                truncated: true,
            });
        }
    }
    let key = |r: &ReducedInterval| (r.node, r.neighbor, r.start.to_bits());
    trace.factor_intervals.sort_by_key(key);
    trace.alpha_intervals.sort_by_key(key);
    Ok(trace)
}
