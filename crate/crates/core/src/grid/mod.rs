//! Electrical topology, energization, fault-segment location and
//! restoration-route lookup for radial distribution utilities.
//!
//! Segments are graph vertices and switching units are edges. Distances
//! and upstream/downstream relations always refer to the normal-position
//! configuration.

mod energize;
mod locate;
pub mod reference;
mod topology;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use energize::{closed_component, energization, feeding_path, Energization};
pub use locate::{locate_segment, Detection, DetectionSnapshot, FaultSegment};
pub use topology::{
    Issue, Load, Position, RestorationRoute, Segment, SwitchKind, SwitchingUnit, Topology, TopologySpec,
    ZoneSubstation,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("unknown switch `{0}`")]
    UnknownSwitch(String),
    #[error("unknown load `{0}`")]
    UnknownLoad(String),
    #[error("unknown segment `{0}`")]
    UnknownSegment(String),
    #[error("normally open switch `{0}` cannot carry fault current")]
    DetectionOffPath(String),
    #[error("detections are contradictory: `{detecting}` saw fault current but upstream `{silent}` did not")]
    ContradictoryDetections { detecting: String, silent: String },
}

/// Position of every switch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchStates(BTreeMap<String, Position>);

impl SwitchStates {
    pub fn normal(topo: &Topology) -> Self {
        Self(topo.switches().iter().map(|s| (s.id.clone(), s.normal)).collect())
    }

    pub fn all(topo: &Topology, position: Position) -> Self {
        Self(topo.switches().iter().map(|s| (s.id.clone(), position)).collect())
    }

    pub fn get(&self, switch: &str) -> Option<Position> {
        self.0.get(switch).copied()
    }

    pub fn is_closed(&self, switch: &str) -> bool {
        self.get(switch) == Some(Position::Closed)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Position)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Sets a position without any checks; prefer [`apply_action`].
    pub fn set(&mut self, switch: &str, position: Position) -> Result<(), GridError> {
        match self.0.get_mut(switch) {
            Some(p) => {
                *p = position;
                Ok(())
            }
            None => Err(GridError::UnknownSwitch(switch.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub switch: String,
    pub from: Position,
    pub to: Position,
    pub noop: bool,
    pub radial: bool,
}

/// Moves one switch and reports the resulting radiality.
pub fn apply_action(
    topo: &Topology,
    states: &SwitchStates,
    switch: &str,
    position: Position,
) -> Result<(SwitchStates, ActionRecord), GridError> {
    let from = states
        .get(switch)
        .ok_or_else(|| GridError::UnknownSwitch(switch.to_string()))?;
    let mut next = states.clone();
    next.set(switch, position)?;
    let radial = energization(topo, &next).radial;
    Ok((
        next,
        ActionRecord {
            switch: switch.to_string(),
            from,
            to: position,
            noop: from == position,
            radial,
        },
    ))
}
