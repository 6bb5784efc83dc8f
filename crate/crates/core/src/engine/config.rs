use serde::{Deserialize, Serialize};

use crate::clocks::{make_drift_schedule, DriftMode, HardwareClock};
use crate::engine::schedule::{generate_schedule, CommSchedule, ScheduleSpec};
use crate::error::{Error, Result};
use crate::protocol::{ProtocolParams, Variant};
use crate::topology::{NodeId, Topology, TopologySpec};

/// Absolute tolerance applied to every bound comparison.
pub const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Constant {
        #[serde(default)]
        rate: f64,
    },
    PiecewiseRandom {
        dwell: f64,
    },
    /// Nodes in `fast` drift at `+rho_hat`, all others at `-rho_hat`.
    AdversarialExtreme {
        fast: Vec<NodeId>,
    },
}

impl Default for DriftSpec {
    fn default() -> Self {
        DriftSpec::Constant { rate: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    WaitChain,
    StartupChain,
    RandomGeometric,
}

/// Adds `delta` to one node's logical clock at `time`. Exists to exercise
/// the verdict path with a known violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fault {
    pub node: NodeId,
    pub time: f64,
    pub delta: f64,
}

fn enabled() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub topology: TopologySpec,
    pub rho_hat: f64,
    /// Largest gap between consecutive sends on one directed edge.
    pub d: f64,
    pub c: f64,
    /// Diameter bound known to the nodes; defaults to the true diameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_known: Option<u32>,
    /// Defaults to `4 * D * d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    pub initiators: Vec<NodeId>,
    #[serde(default)]
    pub drift: DriftSpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "enabled")]
    pub process_on_start: bool,
    /// Start of the steady-state window for the separate neighbor-skew figure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
}

/// Renders a bound for messages: at most nine decimals, trailing zeros cut.
pub fn fmt_num(x: f64) -> String {
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// A validated configuration with everything the simulators need.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// The input with `d_known` and `horizon` filled in.
    pub config: RunConfig,
    pub topology: Topology,
    pub clocks: Vec<HardwareClock>,
    pub schedule: CommSchedule,
    pub params: ProtocolParams,
}

impl Prepared {
    pub fn horizon(&self) -> f64 {
        self.config.horizon.expect("resolved")
    }

    pub fn d_known(&self) -> u32 {
        self.config.d_known.expect("resolved")
    }
}

/// Collects every violated constraint; an empty list means the config is
/// runnable.
pub fn validate(config: &RunConfig) -> Vec<String> {
    let (mut v, topology) = check(config);
    if let (true, Some(topology)) = (v.is_empty(), topology) {
        if let Err(e) = prepare_unchecked(config, topology) {
            v.push(e.to_string());
        }
    }
    v
}

pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    match check(config) {
        (v, Some(topology)) if v.is_empty() => prepare_unchecked(config, topology),
        (v, _) => Err(Error::Invalid(v)),
    }
}

fn check(config: &RunConfig) -> (Vec<String>, Option<Topology>) {
    let mut v = Vec::new();
    let rho = config.rho_hat;
    if !(rho < 1.0) {
        v.push(format!("rho_hat must be < 1, got {}", fmt_num(rho)));
    }
    if !(rho >= 0.0) {
        v.push(format!("rho_hat must be >= 0, got {}", fmt_num(rho)));
    }
    if !(config.d > 0.0) {
        v.push(format!("d must be > 0, got {}", fmt_num(config.d)));
    }
    if config.variant != Variant::LargeC {
        if !(config.c > 0.0) {
            v.push(format!("c must be > 0, got {}", fmt_num(config.c)));
        } else if config.d > 0.0 && config.c > (1.0 + rho) * config.d + BOUND_TOLERANCE {
            v.push(format!(
                "c exceeds (1+rho_hat)*d = {}",
                fmt_num((1.0 + rho) * config.d)
            ));
        }
    }
    if config.initiators.is_empty() {
        v.push("initiators must be nonempty".into());
    }
    if let Some(w) = config.warmup {
        if !(w >= 0.0) {
            v.push(format!("warmup must be >= 0, got {}", fmt_num(w)));
        }
    }
    if let Some(h) = config.horizon {
        if !(h > 0.0) {
            v.push(format!("horizon must be > 0, got {}", fmt_num(h)));
        }
    }
    if config.d_known == Some(0) {
        v.push("d_known must be >= 1".into());
    }
    match config.drift {
        DriftSpec::Constant { rate } if !(rate.abs() <= rho) => {
            v.push(format!(
                "constant drift {} exceeds rho_hat {}",
                fmt_num(rate),
                fmt_num(rho)
            ));
        }
        DriftSpec::PiecewiseRandom { dwell } if !(dwell > 0.0) => {
            v.push(format!("drift dwell must be > 0, got {}", fmt_num(dwell)));
        }
        _ => {}
    }
    if let ScheduleSpec::RandomUniform { g_min: Some(g) } = config.schedule {
        if !(g >= 0.0 && g < config.d) {
            v.push(format!("g_min must lie in [0, d), got {}", fmt_num(g)));
        }
    }
    if let ScheduleSpec::Periodic { phase: Some(p) } = config.schedule {
        if !(p > 0.0 && p <= config.d) {
            v.push(format!(
                "periodic phase must lie in (0, d], got {}",
                fmt_num(p)
            ));
        }
    }

    let topology = match config.topology.build() {
        Ok(t) => t,
        Err(e) => {
            v.push(format!("topology: {e}"));
            return (v, None);
        }
    };
    let n = topology.node_count();
    for &i in &config.initiators {
        if i >= n {
            v.push(format!("initiator {i} out of range for {n} nodes"));
        }
    }
    if let DriftSpec::AdversarialExtreme { fast } = &config.drift {
        for &i in fast {
            if i >= n {
                v.push(format!("fast node {i} out of range for {n} nodes"));
            }
        }
    }
    if let Some(f) = config.fault {
        if f.node >= n {
            v.push(format!("fault node {} out of range for {n} nodes", f.node));
        }
        if !(f.time >= 0.0) {
            v.push(format!("fault time must be >= 0, got {}", fmt_num(f.time)));
        }
    }
    if let Some(dk) = config.d_known {
        if dk < topology.diameter() {
            v.push(format!(
                "d_known {dk} is below the topology diameter {}",
                topology.diameter()
            ));
        }
    }
    (v, Some(topology))
}

fn prepare_unchecked(config: &RunConfig, topology: Topology) -> Result<Prepared> {
    let mut resolved = config.clone();
    let d_known = *resolved.d_known.get_or_insert(topology.diameter());
    let horizon = *resolved
        .horizon
        .get_or_insert(4.0 * f64::from(d_known) * config.d);
    if let Some(f) = config.fault {
        if f.time > horizon {
            return Err(Error::Invalid(vec![format!(
                "fault time {} is beyond the horizon {}",
                fmt_num(f.time),
                fmt_num(horizon)
            )]));
        }
    }

    let dwell = match config.drift {
        DriftSpec::PiecewiseRandom { dwell } => dwell,
        _ => horizon,
    };
    let clocks = (0..topology.node_count())
        .map(|i| {
            let mode = match &config.drift {
                DriftSpec::Constant { rate } => DriftMode::Constant(*rate),
                DriftSpec::PiecewiseRandom { .. } => DriftMode::PiecewiseRandom,
                DriftSpec::AdversarialExtreme { fast } => DriftMode::AdversarialExtreme {
                    fast: fast.contains(&i),
                },
            };
            make_drift_schedule(
                mode,
                config.rho_hat,
                drift_seed(config.seed, i),
                dwell,
                horizon,
            )
            .map(HardwareClock::new)
        })
        .collect::<Result<Vec<_>>>()?;
    let schedule = generate_schedule(&topology, config.d, &config.schedule, config.seed, horizon)?;
    let params = ProtocolParams::new(config.c, d_known, config.variant, config.rho_hat);
    Ok(Prepared {
        config: resolved,
        topology,
        clocks,
        schedule,
        params,
    })
}

fn drift_seed(seed: u64, node: NodeId) -> u64 {
    seed.wrapping_mul(0x2545_F491_4F6C_DD1D)
        .wrapping_add(node as u64)
        .rotate_left(17)
}
