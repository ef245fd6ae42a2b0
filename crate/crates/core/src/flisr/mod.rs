//! Fault location, isolation and service restoration on top of the agent
//! engine: the goal model and its allocation, restoration planning, the
//! capacity grant rule and the run report.

mod model;
mod org;
mod restore;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::grid::{DetectionSnapshot, Energization, FaultSegment, Position, RestorationRoute, Topology};

pub use model::{allocation, flisr_model, GoalOwner, DETECTION_TEAM, RESTORATION_TEAM};
pub use org::{
    build_org, feeder_roles, monitor_roles, restoration_roles, switch_capabilities, AgentKind, MemberSpec, OrgSpec,
    SpareSpec, TeamSpec, UtilityOrg, SUBSTATION,
};
pub use restore::{
    fault_zone, plan_restoration, plan_route, restoration_order, route_segments, RestorationPlan, RoutePlan,
};

/// A request for alternative supply sent along a restoration route.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestorationRequest {
    pub id: u64,
    pub load: String,
    /// Every load the route would pick up, `load` included.
    pub loads: Vec<String>,
    pub demand_kw: u64,
    pub route: RestorationRoute,
    pub requester: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestorationGrant {
    pub request: u64,
    pub load: String,
    pub source: String,
    pub granted: bool,
    pub reason: String,
    pub remaining_kw: u64,
}

/// Per-source demand promised to granted requests this episode.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityLedger {
    commitments: BTreeMap<String, BTreeMap<String, u64>>,
    answered: BTreeMap<u64, RestorationGrant>,
}

impl CapacityLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Promised demand of `source` not yet served by it. A commitment is
    /// fulfilled once its load is fed by the granting source.
    pub fn committed_kw(&self, source: &str, energized: &Energization) -> u64 {
        self.commitments.get(source).map_or(0, |loads| {
            loads
                .iter()
                .filter(|(l, _)| energized.source_of(l) != Some(source))
                .map(|(_, kw)| kw)
                .sum()
        })
    }

    pub fn commitments(&self, source: &str) -> impl Iterator<Item = (&str, u64)> {
        self.commitments
            .get(source)
            .into_iter()
            .flat_map(|m| m.iter().map(|(l, kw)| (l.as_str(), *kw)))
    }

    /// Drops every commitment at the end of an episode.
    pub fn release_all(&mut self) {
        self.commitments.clear();
        self.answered.clear();
    }
}

/// Answers a restoration request from the zone substation's spare capacity:
/// capacity minus served demand minus outstanding commitments.
///
/// A request id already answered gets the same answer again without a
/// second commitment.
pub fn grant(
    topo: &Topology,
    energized: &Energization,
    ledger: &mut CapacityLedger,
    request: &RestorationRequest,
) -> RestorationGrant {
    if let Some(prev) = ledger.answered.get(&request.id) {
        return prev.clone();
    }
    let source = request.route.source.clone();
    let mut answer = RestorationGrant {
        request: request.id,
        load: request.load.clone(),
        source: source.clone(),
        granted: false,
        reason: String::new(),
        remaining_kw: 0,
    };
    if request.demand_kw == 0 || request.route.path.is_empty() {
        answer.reason = "malformed request".into();
        return answer;
    }
    let Some(zone) = topo.source(&source) else {
        answer.reason = format!("unknown source {source}");
        return answer;
    };
    let used = energized.served_kw(topo, &source) + ledger.committed_kw(&source, energized);
    let spare = zone.capacity_kw.saturating_sub(used);
    if spare >= request.demand_kw {
        let loads = ledger.commitments.entry(source).or_default();
        let share = request.demand_kw / request.loads.len().max(1) as u64;
        let mut left = request.demand_kw;
        for (i, l) in request.loads.iter().enumerate() {
            let kw = if i + 1 == request.loads.len() { left } else { share };
            left -= kw;
            loads.insert(l.clone(), kw);
        }
        answer.granted = true;
        answer.reason = "spare capacity".into();
        answer.remaining_kw = spare - request.demand_kw;
    } else {
        answer.reason = format!("spare {spare} kW below demand {} kW", request.demand_kw);
        answer.remaining_kw = spare;
    }
    ledger.answered.insert(request.id, answer.clone());
    answer
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// Every restorable load is fed again.
    Restored,
    /// Isolation or restoration finished with loads left unserved.
    Degraded,
    Failed,
    /// No trip happened within the tick budget.
    NoFault,
    /// The tick budget ran out mid-episode.
    Incomplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttemptResult {
    Granted,
    Denied,
    Infeasible,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteAttempt {
    pub source: String,
    pub path: Vec<String>,
    pub result: AttemptResult,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoadStatus {
    Restored,
    Unserved,
    /// Cut off together with the fault; not restorable.
    Isolated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOutcome {
    pub load: String,
    pub status: LoadStatus,
    pub source: Option<String>,
    pub path: Vec<String>,
    pub attempts: Vec<RouteAttempt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchAction {
    pub t: u64,
    pub switch: String,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Milestone {
    pub t: u64,
    pub name: String,
    pub actor: String,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlisrReport {
    pub outcome: Outcome,
    pub trip: Option<String>,
    pub detection: DetectionSnapshot,
    /// Queried switches that never answered.
    pub missing: Vec<String>,
    pub fault: Option<FaultSegment>,
    pub fault_zone: BTreeSet<String>,
    pub isolation: Vec<SwitchAction>,
    pub restoration: Vec<LoadOutcome>,
    pub restoration_actions: Vec<SwitchAction>,
    pub energization: BTreeMap<String, Option<String>>,
    pub radial: bool,
    pub timeline: Vec<Milestone>,
}

impl FlisrReport {
    pub fn load(&self, id: &str) -> Option<&LoadOutcome> {
        self.restoration.iter().find(|o| o.load == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{energization, reference, SwitchStates, Topology, TopologySpec};

    /// One source bus with a single feeder segment whose load fixes the
    /// served demand.
    fn single(capacity: u64, serving: u64) -> Topology {
        let spec: TopologySpec = serde_json::from_value(serde_json::json!({
            "sources": [{"id": "Z", "capacity_kw": capacity, "bus": "B"}],
            "segments": [{"id": "B"}, {"id": "S"}],
            "switches": [{"id": "CB", "kind": "CB", "normal": "Closed", "ends": ["B", "S"]}],
            "loads": [{"id": "L", "demand_kw": serving, "segment": "S"}],
        }))
        .unwrap();
        Topology::new(spec).unwrap()
    }

    fn request(id: u64, demand: u64) -> RestorationRequest {
        RestorationRequest {
            id,
            load: "X".into(),
            loads: vec!["X".into()],
            demand_kw: demand,
            route: RestorationRoute {
                source: "Z".into(),
                path: vec!["CB".into()],
            },
            requester: "Substation".into(),
        }
    }

    /// spare = capacity - served - committed, granted iff spare >= demand
    fn oracle(capacity: u64, served: u64, committed: u64, demand: u64) -> (bool, u64) {
        let spare = capacity as i64 - served as i64 - committed as i64;
        if spare >= demand as i64 {
            (true, (spare - demand as i64) as u64)
        } else {
            (false, spare.max(0) as u64)
        }
    }

    #[test]
    fn grant_arithmetic() {
        let t = single(1000, 600);
        let e = energization(&t, &SwitchStates::normal(&t));
        let mut ledger = CapacityLedger::new();
        let g = grant(&t, &e, &mut ledger, &request(1, 200));
        assert_eq!((g.granted, g.remaining_kw), oracle(1000, 600, 0, 200));
        assert_eq!(g.remaining_kw, 200);
        // the commitment counts against the next request
        let g2 = grant(&t, &e, &mut ledger, &request(2, 250));
        assert_eq!((g2.granted, g2.remaining_kw), oracle(1000, 600, 200, 250));
        assert!(!g2.granted);
    }

    #[test]
    fn zero_spare_denies() {
        let t = single(1000, 1000);
        let e = energization(&t, &SwitchStates::normal(&t));
        let g = grant(&t, &e, &mut CapacityLedger::new(), &request(1, 1));
        assert!(!g.granted);
    }

    #[test]
    fn zero_demand_is_malformed() {
        let t = single(1000, 1);
        let e = energization(&t, &SwitchStates::normal(&t));
        let g = grant(&t, &e, &mut CapacityLedger::new(), &request(1, 0));
        assert!(!g.granted);
        assert_eq!(g.reason, "malformed request");
    }

    #[test]
    fn repeated_request_is_not_committed_twice() {
        let t = single(1000, 600);
        let e = energization(&t, &SwitchStates::normal(&t));
        let mut ledger = CapacityLedger::new();
        let a = grant(&t, &e, &mut ledger, &request(7, 300));
        let b = grant(&t, &e, &mut ledger, &request(7, 300));
        assert_eq!(a, b);
        assert_eq!(ledger.committed_kw("Z", &e), 300);
    }

    #[test]
    fn fulfilled_commitment_stops_counting() {
        let t = Topology::new(reference::three_zone()).unwrap();
        let mut s = SwitchStates::normal(&t);
        s.set("CB1", Position::Open).unwrap();
        s.set("ROS12", Position::Open).unwrap();
        let mut ledger = CapacityLedger::new();
        let mut req = request(1, 250);
        req.load = "Load3".into();
        req.loads = vec!["Load3".into()];
        req.route = t.restoration_routes("Load3").unwrap()[0].clone();
        let before = energization(&t, &s);
        assert!(grant(&t, &before, &mut ledger, &req).granted);
        assert_eq!(ledger.committed_kw("Zone3", &before), 250);
        s.set("TIE132", Position::Closed).unwrap();
        let after = energization(&t, &s);
        assert_eq!(ledger.committed_kw("Zone3", &after), 0);
        assert_eq!(after.served_kw(&t, "Zone3"), 1000);
    }
}
