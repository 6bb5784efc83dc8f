//! Per-node synchronization state machine.
//!
//! A node's logical clock runs at `alpha` times its hardware clock, where
//! `alpha` is the minimum over per-neighbor rate factors, each either `1` or
//! `1/D`. On every received value the node updates its view of the sender,
//! resets the sender's rate factor depending on whether it leads the sender by
//! at least `c`, and then moves its clock forward toward the largest view as
//! long as it stays within `c` of the smallest one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::NodeId;

/// Slack on the slowdown comparison `L >= view + c`. Equality is common
/// (a node that jumped to `view + c` then runs at its neighbor's rate), and
/// without slack rounding noise decides it.
pub const DECISION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Full algorithm: slowdown and capped forward jumps.
    #[default]
    Gradient,
    /// Forward jumps only; rate factors never drop below 1.
    NoSlowdown,
    /// Forward jumps only, with threshold `(1 + rho_hat) * sqrt(D + 1)`.
    LargeC,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Gradient => "gradient",
            Variant::NoSlowdown => "no_slowdown",
            Variant::LargeC => "large_c",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    c: f64,
    diameter_bound: u32,
    variant: Variant,
}

impl ProtocolParams {
    /// `rho_hat` is only consulted by [`Variant::LargeC`], which replaces `c`.
    pub fn new(c: f64, diameter_bound: u32, variant: Variant, rho_hat: f64) -> Self {
        let c = match variant {
            Variant::LargeC => large_c_threshold(rho_hat, diameter_bound),
            _ => c,
        };
        ProtocolParams {
            c,
            diameter_bound: diameter_bound.max(1),
            variant,
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn diameter_bound(&self) -> u32 {
        self.diameter_bound
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn slowdown_enabled(&self) -> bool {
        self.variant == Variant::Gradient
    }

    pub fn reduced_factor(&self) -> f64 {
        1.0 / f64::from(self.diameter_bound)
    }
}

pub fn large_c_threshold(rho_hat: f64, diameter_bound: u32) -> f64 {
    (1.0 + rho_hat) * (f64::from(diameter_bound) + 1.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFactor {
    Full,
    /// `1/D`.
    Reduced,
}

impl RateFactor {
    pub fn value(self, params: &ProtocolParams) -> f64 {
        match self {
            RateFactor::Full => 1.0,
            RateFactor::Reduced => params.reduced_factor(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncPayload {
    value: f64,
}

impl SyncPayload {
    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 {
            Ok(SyncPayload { value })
        } else {
            Err(Error::NegativePayload(value))
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartCause {
    Initiator,
    FirstMessage,
}

/// What a reception did to the receiving node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiveOutcome {
    pub logical_before: f64,
    pub logical_after: f64,
    pub factor_before: RateFactor,
    pub factor_after: RateFactor,
    pub alpha_before: f64,
    pub alpha_after: f64,
}

impl ReceiveOutcome {
    pub fn jumped(&self) -> bool {
        self.logical_after > self.logical_before
    }

    pub fn alpha_changed(&self) -> bool {
        self.alpha_after != self.alpha_before
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    id: NodeId,
    started: bool,
    h_base: f64,
    l_base: f64,
    neighbors: Vec<NodeId>,
    views: Vec<f64>,
    factors: Vec<RateFactor>,
}

impl NodeState {
    /// `neighbors` must be sorted ascending.
    pub fn new(id: NodeId, neighbors: &[NodeId]) -> Self {
        debug_assert!(neighbors.windows(2).all(|w| w[0] < w[1]));
        NodeState {
            id,
            started: false,
            h_base: 0.0,
            l_base: 0.0,
            neighbors: neighbors.to_vec(),
            views: vec![0.0; neighbors.len()],
            factors: vec![RateFactor::Full; neighbors.len()],
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn is_started(&self) -> bool {
        self.started
    }

    pub fn neighbors(&self) -> &[NodeId] {
        &self.neighbors
    }

    pub fn views(&self) -> &[f64] {
        &self.views
    }

    pub fn rate_factors(&self) -> &[RateFactor] {
        &self.factors
    }

    pub fn view_of(&self, j: NodeId) -> Option<f64> {
        self.slot(j).ok().map(|k| self.views[k])
    }

    pub fn factor_of(&self, j: NodeId) -> Option<RateFactor> {
        self.slot(j).ok().map(|k| self.factors[k])
    }

    /// Hardware time of the last rebase.
    pub fn h_base(&self) -> f64 {
        self.h_base
    }

    pub fn l_base(&self) -> Option<f64> {
        self.started.then_some(self.l_base)
    }

    fn slot(&self, j: NodeId) -> Result<usize> {
        self.neighbors
            .binary_search(&j)
            .map_err(|_| Error::NotANeighbor {
                node: self.id,
                neighbor: j,
            })
    }

    pub fn on_start(&mut self, h_now: f64, _cause: StartCause) -> Result<()> {
        if self.started {
            return Err(Error::AlreadyStarted(self.id));
        }
        self.started = true;
        self.h_base = h_now;
        self.l_base = 0.0;
        self.views.iter_mut().for_each(|v| *v = 0.0);
        self.factors.iter_mut().for_each(|f| *f = RateFactor::Full);
        Ok(())
    }

    pub fn alpha(&self, params: &ProtocolParams) -> f64 {
        if self.factors.contains(&RateFactor::Reduced) {
            params.reduced_factor()
        } else {
            1.0
        }
    }

    pub fn logical_time(&self, params: &ProtocolParams, h_now: f64) -> Result<f64> {
        if !self.started {
            return Err(Error::NotStarted(self.id));
        }
        if h_now < self.h_base {
            return Err(Error::HardwareTimeRegressed {
                h_now,
                h_base: self.h_base,
            });
        }
        Ok(self.l_base + self.alpha(params) * (h_now - self.h_base))
    }

    /// Records the sender's value without running the rate and jump rules.
    pub fn record_view(&mut self, j: NodeId, payload: SyncPayload) -> Result<()> {
        let k = self.slot(j)?;
        if !self.started {
            return Err(Error::NotStarted(self.id));
        }
        self.views[k] = payload.value();
        Ok(())
    }

    pub fn on_receive(
        &mut self,
        params: &ProtocolParams,
        j: NodeId,
        payload: SyncPayload,
        h_now: f64,
    ) -> Result<ReceiveOutcome> {
        let k = self.slot(j)?;
        if payload.value() < 0.0 {
            return Err(Error::NegativePayload(payload.value()));
        }
        let now = self.logical_time(params, h_now)?;
        let alpha_before = self.alpha(params);
        let factor_before = self.factors[k];

        self.views[k] = payload.value();

        // The comparison sees the fresh view and the clock before any jump.
        self.factors[k] =
            if params.slowdown_enabled() && now >= self.views[k] + params.c() - DECISION_SLACK {
                RateFactor::Reduced
            } else {
                RateFactor::Full
            };

        let (lo, hi) = self
            .views
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let target = (lo + params.c()).min(hi);
        let after = now.max(target);

        self.h_base = h_now;
        self.l_base = after;
        Ok(ReceiveOutcome {
            logical_before: now,
            logical_after: after,
            factor_before,
            factor_after: self.factors[k],
            alpha_before,
            alpha_after: self.alpha(params),
        })
    }

    /// Moves the clock by `delta` outside the protocol rules. Returns `false`
    /// and does nothing on an unstarted node.
    pub fn shift(&mut self, params: &ProtocolParams, h_now: f64, delta: f64) -> Result<bool> {
        if !self.started {
            return Ok(false);
        }
        self.l_base = self.logical_time(params, h_now)? + delta;
        self.h_base = h_now;
        Ok(true)
    }

    pub fn emit_payload(&self, params: &ProtocolParams, h_now: f64) -> Option<SyncPayload> {
        let value = self.logical_time(params, h_now).ok()?;
        SyncPayload::new(value).ok()
    }
}
