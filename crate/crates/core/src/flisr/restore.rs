use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{grant, AttemptResult, CapacityLedger, RestorationGrant, RestorationRequest, RouteAttempt};
use crate::grid::{closed_component, energization, Position, RestorationRoute, SwitchStates, Topology};

/// Largest sectionalizing set tried per route.
const MAX_OPENINGS: usize = 3;

/// Switch operations that put one load on an alternative source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutePlan {
    pub load: String,
    pub source: String,
    pub path: Vec<String>,
    /// Sectionalizing switches to open, before any closing.
    pub opens: Vec<String>,
    /// Open path switches to close, in path order.
    pub closes: Vec<String>,
    /// Loads the route newly feeds, `load` included.
    pub loads: Vec<String>,
    pub demand_kw: u64,
}

impl RoutePlan {
    pub fn actions(&self) -> Vec<(String, Position)> {
        self.opens
            .iter()
            .map(|s| (s.clone(), Position::Open))
            .chain(self.closes.iter().map(|s| (s.clone(), Position::Closed)))
            .collect()
    }

    pub fn apply(&self, states: &mut SwitchStates) {
        for (sw, pos) in self.actions() {
            states.set(&sw, pos).expect("planned switches exist");
        }
    }
}

/// Segments visited walking `path` from `from`, `from` first.
pub fn route_segments(topo: &Topology, from: &str, path: &[String]) -> Option<Vec<String>> {
    let mut segs = vec![from.to_string()];
    for sw in path {
        let next = topo.across(sw, segs.last().expect("non-empty"))?;
        segs.push(next.to_string());
    }
    Some(segs)
}

/// Segments cut off together with the fault: everything still joined to
/// the faulted segment through closed switches.
pub fn fault_zone(topo: &Topology, states: &SwitchStates, segment: &str) -> BTreeSet<String> {
    closed_component(topo, states, segment)
}

/// Checks one route against `base` and finds the smallest set of switches
/// to open so that closing the route keeps the network radial, keeps the
/// fault zone dead, leaves every fed load on its source, and newly feeds
/// only `load` and pending loads along the route.
pub fn plan_route(
    topo: &Topology,
    base: &SwitchStates,
    fault_zone: &BTreeSet<String>,
    load: &str,
    route: &RestorationRoute,
    pending: &BTreeSet<String>,
) -> Result<RoutePlan, String> {
    let l = topo.load(load).ok_or_else(|| format!("unknown load {load}"))?;
    let segs = route_segments(topo, &l.segment, &route.path).ok_or("route does not follow the network")?;
    let bus = topo.source(&route.source).map(|s| s.bus.as_str());
    if segs.last().map(String::as_str) != bus {
        return Err("route does not reach its source".into());
    }
    if let Some(s) = segs.iter().find(|s| fault_zone.contains(*s)) {
        return Err(format!("route crosses the fault zone at {s}"));
    }

    let mut trial = base.clone();
    let closes: Vec<String> = route.path.iter().filter(|s| !base.is_closed(s)).cloned().collect();
    for sw in &closes {
        trial.set(sw, Position::Closed).map_err(|e| e.to_string())?;
    }
    let before = energization(topo, base);
    let on_route: BTreeSet<&str> = segs.iter().map(String::as_str).collect();
    let allowed: BTreeSet<&str> = topo
        .loads()
        .iter()
        .filter(|x| x.id == load || (pending.contains(&x.id) && on_route.contains(x.segment.as_str())))
        .map(|x| x.id.as_str())
        .collect();
    let candidates: Vec<&str> = topo
        .switches()
        .iter()
        .map(|s| s.id.as_str())
        .filter(|s| trial.is_closed(s) && !route.path.iter().any(|p| p == s))
        .collect();

    for k in 0..=MAX_OPENINGS.min(candidates.len()) {
        for pick in combinations(candidates.len(), k) {
            let mut st = trial.clone();
            for &i in &pick {
                st.set(candidates[i], Position::Open).expect("known switch");
            }
            let after = energization(topo, &st);
            if !after.radial
                || fault_zone.iter().any(|s| after.segment_source(s).is_some())
                || after.source_of(load) != Some(route.source.as_str())
            {
                continue;
            }
            let mut gained = Vec::new();
            let mut ok = true;
            for x in topo.loads() {
                match (before.source_of(&x.id), after.source_of(&x.id)) {
                    (Some(a), b) if Some(a) != b => ok = false,
                    (None, Some(_)) if !allowed.contains(x.id.as_str()) => ok = false,
                    (None, Some(_)) => gained.push(x),
                    _ => {}
                }
            }
            if !ok {
                continue;
            }
            return Ok(RoutePlan {
                load: load.to_string(),
                source: route.source.clone(),
                path: route.path.clone(),
                opens: pick.iter().map(|&i| candidates[i].to_string()).collect(),
                closes,
                loads: gained.iter().map(|x| x.id.clone()).collect(),
                demand_kw: gained.iter().map(|x| x.demand_kw).sum(),
            });
        }
    }
    Err("no sectionalizing set keeps the network radial".into())
}

/// Index sets of size `k` out of `n`, in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Deepest loads first (farthest from their normal source), then by id.
pub fn restoration_order<'a>(topo: &Topology, loads: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut v: Vec<(usize, &str)> = loads
        .into_iter()
        .map(|l| {
            let depth = topo.load(l).and_then(|x| topo.depth(&x.segment)).unwrap_or(0);
            (depth, l)
        })
        .collect();
    v.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
    v.into_iter().map(|(_, l)| l.to_string()).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestorationPlan {
    pub adopted: Vec<RoutePlan>,
    pub unserved: Vec<String>,
    pub attempts: BTreeMap<String, Vec<RouteAttempt>>,
    pub grants: Vec<RestorationGrant>,
}

impl RestorationPlan {
    pub fn actions(&self) -> Vec<(String, Position)> {
        self.adopted.iter().flat_map(RoutePlan::actions).collect()
    }
}

/// Plans restoration of every unfed load outside the fault zone without
/// any messaging, granting against `states` directly.
pub fn plan_restoration(
    topo: &Topology,
    states: &SwitchStates,
    fault_zone: &BTreeSet<String>,
    ledger: &mut CapacityLedger,
) -> RestorationPlan {
    let now = energization(topo, states);
    let unfed = topo
        .loads()
        .iter()
        .filter(|l| !now.is_fed(&l.id) && !fault_zone.contains(&l.segment))
        .map(|l| l.id.as_str());
    let order = restoration_order(topo, unfed);
    let mut pending: BTreeSet<String> = order.iter().cloned().collect();
    let mut trial = states.clone();
    let mut plan = RestorationPlan::default();
    let mut next_id = 1;
    for load in order {
        if !pending.remove(&load) {
            continue;
        }
        let routes = topo.restoration_routes(&load).expect("known load");
        let attempts = plan.attempts.entry(load.clone()).or_default();
        let mut adopted = None;
        for route in routes {
            let attempt = |result, reason: String| RouteAttempt {
                source: route.source.clone(),
                path: route.path.clone(),
                result,
                reason,
            };
            let rp = match plan_route(topo, &trial, fault_zone, &load, route, &pending) {
                Ok(rp) => rp,
                Err(why) => {
                    attempts.push(attempt(AttemptResult::Infeasible, why));
                    continue;
                }
            };
            let req = RestorationRequest {
                id: next_id,
                load: load.clone(),
                loads: rp.loads.clone(),
                demand_kw: rp.demand_kw,
                route: route.clone(),
                requester: "planner".into(),
            };
            next_id += 1;
            let g = grant(topo, &now, ledger, &req);
            plan.grants.push(g.clone());
            if g.granted {
                attempts.push(attempt(AttemptResult::Granted, g.reason));
                adopted = Some(rp);
                break;
            }
            attempts.push(attempt(AttemptResult::Denied, g.reason));
        }
        match adopted {
            Some(rp) => {
                rp.apply(&mut trial);
                for l in &rp.loads {
                    pending.remove(l);
                }
                plan.adopted.push(rp);
            }
            None => plan.unserved.push(load),
        }
    }
    plan
}
