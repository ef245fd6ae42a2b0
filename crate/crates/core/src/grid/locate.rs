use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{GridError, Position, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub detected: bool,
    pub at: u64,
}

/// Per-switch fault-current flags. Switches without an entry are unknown.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionSnapshot(pub BTreeMap<String, Detection>);

impl DetectionSnapshot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, switch: impl Into<String>, detected: bool, at: u64) {
        self.0.insert(switch.into(), Detection { detected, at });
    }

    pub fn get(&self, switch: &str) -> Option<bool> {
        self.0.get(switch).map(|d| d.detected)
    }

    pub fn detecting(&self) -> impl Iterator<Item = &str> {
        self.0.iter().filter(|(_, d)| d.detected).map(|(k, _)| k.as_str())
    }
}

/// The faulted segment and the switches bounding it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultSegment {
    pub segment: String,
    pub upstream: String,
    pub downstream: BTreeSet<String>,
}

/// Places the fault just below the deepest switch that saw fault current.
///
/// Every detecting switch must lie on one source path and no switch
/// between a detecting switch and the source may have reported `false`.
pub fn locate_segment(topo: &Topology, snapshot: &DetectionSnapshot) -> Result<Option<FaultSegment>, GridError> {
    for sw in snapshot.0.keys() {
        if topo.switch(sw).is_none() {
            return Err(GridError::UnknownSwitch(sw.clone()));
        }
    }
    let mut deepest: Option<(&str, usize)> = None;
    for sw in snapshot.detecting() {
        if topo.switch(sw).map(|s| s.normal) != Some(Position::Closed) {
            return Err(GridError::DetectionOffPath(sw.to_string()));
        }
        let path = topo.normal_path_to(sw);
        if let Some(silent) = path.iter().find(|up| snapshot.get(up) == Some(false)) {
            return Err(GridError::ContradictoryDetections {
                detecting: sw.to_string(),
                silent: silent.to_string(),
            });
        }
        if deepest.is_none_or(|(_, d)| path.len() > d) {
            deepest = Some((sw, path.len()));
        }
    }
    let Some((upstream, _)) = deepest else {
        return Ok(None);
    };
    // the remaining detecting switches must be ancestors of the deepest one
    let chain: BTreeSet<&str> = topo.normal_path_to(upstream).into_iter().collect();
    if let Some(stray) = snapshot.detecting().find(|d| !chain.contains(d)) {
        return Err(GridError::ContradictoryDetections {
            detecting: stray.to_string(),
            silent: upstream.to_string(),
        });
    }
    let segment = topo
        .downstream_segment(upstream)
        .expect("normally closed switch has a downstream segment");
    let downstream = topo
        .downstream_switches(segment)
        .into_iter()
        .map(str::to_string)
        .collect();
    Ok(Some(FaultSegment {
        segment: segment.to_string(),
        upstream: upstream.to_string(),
        downstream,
    }))
}
