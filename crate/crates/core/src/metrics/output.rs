//! CSV trace and JSON summary writers. Both are byte-for-byte deterministic.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clocks::DriftSchedule;
use crate::engine::config::RunConfig;
use crate::error::Result;
use crate::metrics::{SkewReport, Verdict};
use crate::topology::{NodeId, Topology};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyInfo {
    pub node_count: usize,
    pub diameter: u32,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl From<&Topology> for TopologyInfo {
    fn from(t: &Topology) -> Self {
        TopologyInfo {
            node_count: t.node_count(),
            diameter: t.diameter(),
            edges: t.edges(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    /// Fully resolved, so it can be fed back in to reproduce the run.
    pub config: RunConfig,
    pub topology: TopologyInfo,
    pub drift: Vec<DriftSchedule>,
    pub report: SkewReport,
    pub verdicts: Vec<Verdict>,
}

impl Summary {
    pub fn new(
        trace: &Trace,
        topology: &Topology,
        report: SkewReport,
        verdicts: Vec<Verdict>,
    ) -> Self {
        Summary {
            seed: trace.config.seed,
            config: trace.config.clone(),
            topology: topology.into(),
            drift: trace.drift.clone(),
            report,
            verdicts,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn guaranteed_pass(&self) -> bool {
        self.verdicts
            .iter()
            .filter(|v| v.scope == super::Scope::Guaranteed)
            .all(|v| v.pass)
    }
}

/// One row per sample and node: `time,node,logical,rate,alpha,event_kind`.
/// Unstarted nodes leave the last four fields empty.
pub fn write_trace_csv<W: Write>(trace: &Trace, mut w: W) -> Result<()> {
    writeln!(w, "time,node,logical,rate,alpha,event_kind")?;
    for (k, &t) in trace.times.iter().enumerate() {
        for i in 0..trace.node_count {
            match (trace.logical(k, i), trace.rate(k, i), trace.alpha(k, i)) {
                (Some(l), Some(r), Some(a)) => {
                    writeln!(w, "{t},{i},{l},{r},{a},{}", trace.marks(k, i).label())?
                }
                _ => writeln!(w, "{t},{i},,,,")?,
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json<W: Write>(summary: &Summary, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, summary)
        .map_err(|e| crate::error::Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
