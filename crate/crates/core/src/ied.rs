//! Simplified IEC 61850 device model and the per-switch protection chain.
//!
//! Each switching unit hosts one server with a single logical device
//! `LD0` holding TCTR1, PIOC1, PTRC1, CSWI1 and XCBR1. A sample flows
//! through the nodes in that order and every intermediate value is kept
//! as a data object addressable as `<server>.LD0.<LN>.<DO>`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grid::{Position, SwitchKind};

pub const LD: &str = "LD0";
pub const TCTR: &str = "TCTR1";
pub const PIOC: &str = "PIOC1";
pub const PTRC: &str = "PTRC1";
pub const CSWI: &str = "CSWI1";
pub const XCBR: &str = "XCBR1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LnClass {
    TCTR,
    PIOC,
    PTRC,
    CSWI,
    XCBR,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataValue {
    Bool(bool),
    Count(u32),
    Amps(f64),
    Pos(Position),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalNode {
    pub class: LnClass,
    pub objects: BTreeMap<String, DataValue>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LogicalDevice {
    pub nodes: BTreeMap<String, LogicalNode>,
}

/// Server → logical devices → logical nodes → data objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    pub server: String,
    pub devices: BTreeMap<String, LogicalDevice>,
}

impl DeviceModel {
    /// The standard switch device with its five logical nodes.
    pub fn for_switch(server: impl Into<String>, position: Position) -> Self {
        let node = |class, objects: &[(&str, DataValue)]| LogicalNode {
            class,
            objects: objects.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        };
        let mut ld = LogicalDevice::default();
        ld.nodes.insert(TCTR.into(), node(LnClass::TCTR, &[("Amp", DataValue::Amps(0.0))]));
        ld.nodes.insert(
            PIOC.into(),
            node(LnClass::PIOC, &[("Op", DataValue::Bool(false)), ("Str", DataValue::Bool(false))]),
        );
        ld.nodes.insert(
            PTRC.into(),
            node(LnClass::PTRC, &[("Tr", DataValue::Bool(false)), ("Cnt", DataValue::Count(0))]),
        );
        ld.nodes.insert(CSWI.into(), node(LnClass::CSWI, &[("OpOpn", DataValue::Bool(false))]));
        ld.nodes.insert(XCBR.into(), node(LnClass::XCBR, &[("Pos", DataValue::Pos(position))]));
        Self {
            server: server.into(),
            devices: BTreeMap::from([(LD.to_string(), ld)]),
        }
    }

    /// Reads `LD.LN.DO`.
    pub fn get(&self, path: &str) -> Option<DataValue> {
        let mut it = path.splitn(3, '.');
        let (ld, ln, dobj) = (it.next()?, it.next()?, it.next()?);
        self.devices.get(ld)?.nodes.get(ln)?.objects.get(dobj).copied()
    }

    fn set(&mut self, ln: &str, dobj: &str, value: DataValue) -> (String, DataValue) {
        let node = self
            .devices
            .get_mut(LD)
            .and_then(|d| d.nodes.get_mut(ln))
            .expect("switch device has all logical nodes");
        node.objects.insert(dobj.to_string(), value);
        (format!("{}.{LD}.{ln}.{dobj}", self.server), value)
    }

    /// Dotted names of every data object, server first.
    pub fn paths(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (ld, dev) in &self.devices {
            for (ln, node) in &dev.nodes {
                for dobj in node.objects.keys() {
                    out.push(format!("{}.{ld}.{ln}.{dobj}", self.server));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtectionConfig {
    pub threshold_a: f64,
    /// Consecutive pickup samples before PTRC asserts trip.
    pub trip_persistence: u32,
    /// Ticks between the CSWI command and the XCBR position change.
    pub operate_delay: u64,
    pub sampling_period: u64,
    /// Whether CSWI issues trips on its own (breakers only by default).
    pub trip_enabled: bool,
}

impl Default for ProtectionConfig {
    fn default() -> Self {
        Self {
            threshold_a: 400.0,
            trip_persistence: 1,
            operate_delay: 0,
            sampling_period: 1,
            trip_enabled: true,
        }
    }
}

impl ProtectionConfig {
    pub fn for_kind(kind: SwitchKind) -> Self {
        Self {
            trip_enabled: kind == SwitchKind::CB,
            ..Self::default()
        }
    }

    pub fn is_valid(&self) -> bool {
        self.threshold_a > 0.0 && self.trip_persistence >= 1 && self.sampling_period >= 1
    }
}

/// Result of one pass through the logical-node chain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineOutput {
    /// Data-object writes in LN order.
    pub updates: Vec<(String, DataValue)>,
    /// CSWI issued an Open command at this tick.
    pub trip: bool,
    /// XCBR moved to Open at this tick.
    pub opened: bool,
    pub diagnostic: Option<String>,
}

/// Protection state of one switching unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchIed {
    pub device: DeviceModel,
    pub config: ProtectionConfig,
    position: Position,
    consecutive: u32,
    latched: bool,
    pending_open: Option<u64>,
    last_tick: Option<u64>,
}

impl SwitchIed {
    pub fn new(switch: &str, position: Position, config: ProtectionConfig) -> Self {
        Self {
            device: DeviceModel::for_switch(switch, position),
            config,
            position,
            consecutive: 0,
            latched: false,
            pending_open: None,
            last_tick: None,
        }
    }

    pub fn position(&self) -> Position {
        self.position
    }

    /// PIOC pickup latched since the last reset.
    pub fn detected(&self) -> bool {
        self.latched
    }

    pub fn is_due(&self, tick: u64) -> bool {
        tick.is_multiple_of(self.config.sampling_period)
    }

    /// Runs one sample through TCTR → PIOC → PTRC → CSWI → XCBR.
    pub fn ln_pipeline_step(&mut self, current_a: f64, tick: u64) -> PipelineOutput {
        let mut out = PipelineOutput::default();
        if !self.is_due(tick) {
            out.diagnostic = Some(format!("tick {tick} is not on the sampling grid"));
            return out;
        }
        if self.last_tick.is_some_and(|t| tick <= t) {
            out.diagnostic = Some(format!("out-of-order sample at tick {tick}"));
            return out;
        }
        self.last_tick = Some(tick);

        out.updates.push(self.device.set(TCTR, "Amp", DataValue::Amps(current_a)));

        let pickup = current_a > self.config.threshold_a;
        self.latched |= pickup;
        out.updates.push(self.device.set(PIOC, "Op", DataValue::Bool(pickup)));
        out.updates.push(self.device.set(PIOC, "Str", DataValue::Bool(self.latched)));

        self.consecutive = if pickup { self.consecutive + 1 } else { 0 };
        let trip = self.consecutive >= self.config.trip_persistence && self.position == Position::Closed;
        out.updates.push(self.device.set(PTRC, "Cnt", DataValue::Count(self.consecutive)));
        out.updates.push(self.device.set(PTRC, "Tr", DataValue::Bool(trip)));

        if trip && self.config.trip_enabled && self.pending_open.is_none() {
            self.pending_open = Some(tick + self.config.operate_delay);
            out.trip = true;
            out.updates.push(self.device.set(CSWI, "OpOpn", DataValue::Bool(true)));
        }

        if self.pending_open.is_some_and(|due| due <= tick) {
            self.pending_open = None;
            self.position = Position::Open;
            out.opened = true;
            out.updates.push(self.device.set(XCBR, "Pos", DataValue::Pos(Position::Open)));
        }
        out
    }

    /// Remote operation through CSWI; takes effect immediately.
    pub fn operate(&mut self, position: Position) -> Vec<(String, DataValue)> {
        self.position = position;
        self.pending_open = None;
        vec![
            self.device.set(CSWI, "OpOpn", DataValue::Bool(position == Position::Open)),
            self.device.set(XCBR, "Pos", DataValue::Pos(position)),
        ]
    }

    /// Clears the detection latch and the trip conditioning state.
    pub fn reset(&mut self) {
        self.latched = false;
        self.consecutive = 0;
        self.device.set(PIOC, "Str", DataValue::Bool(false));
        self.device.set(PTRC, "Cnt", DataValue::Count(0));
        self.device.set(PTRC, "Tr", DataValue::Bool(false));
        self.device.set(CSWI, "OpOpn", DataValue::Bool(false));
    }
}
