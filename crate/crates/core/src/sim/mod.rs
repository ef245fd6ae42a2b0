//! Deterministic discrete-event kernel: tick-quantized time, message
//! delivery with fixed latency, IED sampling, fault and agent-failure
//! injection, and one executor step per tick.

mod kernel;
mod world;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use kernel::{exit_code, run, run_observed, RunHeader, RunOutput, RunStatus, Violation};
pub use world::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    Sample,
    Trip,
    Command,
    PositionChanged,
    MessageSend,
    MessageDeliver,
    FaultInjected,
    AgentFailed,
    Milestone,
}

/// One log record. Records are totally ordered by `(t, seq)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    pub seq: u64,
    #[serde(rename = "type")]
    pub kind: EventKind,
    pub actor: String,
    pub detail: Value,
}

impl Event {
    /// Milestone name, if this is a milestone.
    pub fn milestone(&self) -> Option<&str> {
        if self.kind == EventKind::Milestone {
            self.detail.get("name").and_then(Value::as_str)
        } else {
            None
        }
    }

    pub fn text(&self) -> String {
        format!("t={:<4} #{:<5} {:<15} {:<10} {}", self.t, self.seq, format!("{:?}", self.kind), self.actor, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MessageKind {
    Query,
    Reply,
    Command,
    Ack,
    Request,
    Grant,
    Deny,
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: u64,
    pub src: String,
    pub dst: String,
    pub kind: MessageKind,
    /// Id of the message this one answers.
    pub re: Option<u64>,
    pub payload: Value,
    pub sent: u64,
    pub deliver: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultKind {
    #[default]
    Permanent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub tick: u64,
    pub segment: String,
    #[serde(rename = "type", default)]
    pub kind: FaultKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentFailure {
    pub tick: u64,
    pub agent: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
    #[serde(default)]
    pub agent_failures: Vec<AgentFailure>,
    pub tick_budget: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Ticks between send and delivery; at least 1.
    pub latency: u64,
    /// Overrides the scenario's budget.
    pub tick_budget: Option<u64>,
    /// Overrides the scenario's seed.
    pub seed: Option<u64>,
    /// Fault current as a multiple of each switch's pickup threshold.
    pub fault_current: f64,
    /// Load current as a multiple of each switch's pickup threshold.
    pub load_current: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            latency: 1,
            tick_budget: None,
            seed: None,
            fault_current: 10.0,
            load_current: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown segment `{0}`")]
    UnknownSegment(String),
    #[error("latency must be at least one tick")]
    ZeroLatency,
    #[error("tick budget must be positive")]
    ZeroBudget,
    #[error("{0}")]
    Setup(String),
}
