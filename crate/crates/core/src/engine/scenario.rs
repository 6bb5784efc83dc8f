//! Named scenarios.

use serde::{Deserialize, Serialize};

use crate::engine::config::{validate, DriftSpec, RunConfig, Scenario, BOUND_TOLERANCE};
use crate::engine::schedule::ScheduleSpec;
use crate::error::{Error, Result};
use crate::protocol::Variant;
use crate::topology::TopologySpec;

pub const PRESETS: [&str; 3] = ["wait_chain", "startup_chain", "random_geometric"];

/// Length of the longest chain of neighbors each leading the next by `c`:
/// `min(D, (1 + rho_hat) * D * d / c)`.
pub fn wait_chain_length(diameter: u32, rho_hat: f64, d: f64, c: f64) -> f64 {
    let dd = f64::from(diameter);
    // (1 + rho_hat) * D * d / c >= D  iff  c <= (1 + rho_hat) * d, with the
    // same slack validation allows
    if c <= (1.0 + rho_hat) * d + BOUND_TOLERANCE {
        dd
    } else {
        dd.min((1.0 + rho_hat) * dd * d / c)
    }
}

/// Chain of `D + 1` nodes started from one end, where the initiator runs fast
/// and everyone else slow, and start-up reaches each hop `d` after the last.
pub fn build_wait_chain_scenario(diameter: u32, rho_hat: f64, d: f64, c: f64) -> Result<RunConfig> {
    let config = wait_chain_config(diameter, rho_hat, d, c);
    let violations = validate(&config);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(Error::Invalid(violations))
    }
}

fn wait_chain_config(diameter: u32, rho_hat: f64, d: f64, c: f64) -> RunConfig {
    RunConfig {
        horizon: Some((2.0 * f64::from(diameter) + 4.0) * d),
        drift: DriftSpec::AdversarialExtreme { fast: vec![0] },
        scenario: Some(Scenario::WaitChain),
        ..chain_base(diameter, rho_hat, d, c)
    }
}

/// A preset plus optional overrides, as accepted by the CLI and sweeps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSpec {
    pub preset: String,
    /// `D` for the chain presets, `n` for `random_geometric`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
}

impl PresetSpec {
    pub fn named(name: &str) -> Self {
        PresetSpec {
            preset: name.to_string(),
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<RunConfig> {
        let rho_hat = self.rho_hat.unwrap_or(0.1);
        let d = self.d.unwrap_or(1.0);
        let c = self.c.unwrap_or(1.0);
        let seed = self.seed.unwrap_or(0);
        let mut config = match self.preset.as_str() {
            "wait_chain" => wait_chain_config(self.size.unwrap_or(8), rho_hat, d, c),
            "startup_chain" => {
                let mut cfg = chain_base(self.size.unwrap_or(8), rho_hat, d, c);
                cfg.scenario = Some(Scenario::StartupChain);
                cfg.drift = DriftSpec::PiecewiseRandom { dwell: 5.0 * d };
                cfg
            }
            "random_geometric" => {
                let n = self.size.unwrap_or(50) as usize;
                let nf = n.max(2) as f64;
                let radius = (1.5 * (nf.ln().max(1.0) / nf).sqrt()).min(1.5);
                RunConfig {
                    topology: TopologySpec::RandomGeometric {
                        n,
                        radius,
                        seed,
                        max_attempts: 100,
                    },
                    rho_hat,
                    d,
                    c,
                    d_known: None,
                    horizon: None,
                    initiators: vec![0],
                    drift: DriftSpec::PiecewiseRandom { dwell: 2.0 * d },
                    schedule: ScheduleSpec::RandomUniform { g_min: None },
                    variant: Variant::Gradient,
                    seed,
                    process_on_start: true,
                    warmup: None,
                    scenario: Some(Scenario::RandomGeometric),
                    fault: None,
                }
            }
            other => {
                return Err(Error::Invalid(vec![format!(
                    "unknown preset {other:?}; expected one of {}",
                    PRESETS.join(", ")
                )]))
            }
        };
        config.seed = seed;
        if let Some(h) = self.horizon {
            config.horizon = Some(h);
        }
        if let Some(v) = self.variant {
            config.variant = v;
        }
        Ok(config)
    }
}

fn chain_base(diameter: u32, rho_hat: f64, d: f64, c: f64) -> RunConfig {
    RunConfig {
        topology: TopologySpec::Chain {
            n: diameter as usize + 1,
        },
        rho_hat,
        d,
        c,
        d_known: Some(diameter),
        horizon: None,
        initiators: vec![0],
        drift: DriftSpec::default(),
        schedule: ScheduleSpec::Periodic { phase: None },
        variant: Variant::Gradient,
        seed: 0,
        process_on_start: true,
        warmup: None,
        scenario: None,
        fault: None,
    }
}

pub fn preset(name: &str, size: Option<u32>) -> Result<RunConfig> {
    PresetSpec {
        size,
        ..PresetSpec::named(name)
    }
    .build()
}
