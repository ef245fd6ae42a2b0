//! The FLISR process model. Detection runs one monitor per switch in
//! parallel; resolution isolates on the tripped feeder and then restores
//! healthy loads through the substation team.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    fault_zone, feeder_roles, plan_route, restoration_order, restoration_roles, AttemptResult, LoadOutcome, LoadStatus,
    RestorationRequest, RouteAttempt, RoutePlan, SwitchAction, UtilityOrg,
};
use crate::bdi::{BehaviorError, ProcessNode, TaskCtx, TaskStatus};
use crate::grid::{energization, locate_segment, Position, SwitchStates, Topology};
use crate::sim::{MessageKind, World};

pub const DETECTION_TEAM: &str = "detection";
pub const RESTORATION_TEAM: &str = "restoration";

const MAX_RETRIES: u32 = 2;

type Node = ProcessNode<World>;

/// Who a goal of the model is allocated to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalOwner {
    Team(String),
    /// Any of these teams, whichever runs the faulted feeder.
    Teams(Vec<String>),
    Agent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TripInfo {
    switch: String,
    source: String,
    t: u64,
}

/// Bookkeeping for a task waiting on replies.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Wait {
    started: bool,
    /// Label (switch or request) to the id of the message awaiting an answer.
    pending: BTreeMap<String, u64>,
    answered: usize,
    deadline: u64,
    epoch: u64,
    retries: u32,
    next: usize,
}

fn isolation_key(team: &str) -> String {
    format!("isolation:{team}")
}

fn mail(team: &str) -> String {
    format!("mail:{team}")
}

fn source_of_switch(topo: &Topology, sw: &str) -> Option<String> {
    topo.downstream_segment(sw)
        .and_then(|s| topo.normal_source(s))
        .map(str::to_string)
}

fn load_state<T: Default + for<'de> Deserialize<'de>>(c: &TaskCtx<'_, World>, key: &str) -> T {
    c.context.read(key).unwrap_or_default()
}

fn arm(c: &mut TaskCtx<'_, World>, w: &mut Wait, team: &str, ticks: u64) {
    w.deadline = c.world.tick + ticks;
    w.epoch = c.world.reform_epoch;
    c.world.wake_at(w.deadline, &mail(team));
}

/// The FLISR goal hierarchy for a utility.
pub fn flisr_model(topo: &Topology, utility: &UtilityOrg) -> Node {
    let monitors = topo.switches().iter().map(|s| monitor(&s.id)).collect();
    let isolation = utility
        .feeders
        .iter()
        .map(|(src, team)| feeder_isolation(src, team))
        .collect();
    Node::sequence(
        "flisr",
        vec![
            Node::parallel("fault-detection", monitors),
            Node::sequence(
                "fault-resolution",
                vec![Node::choice("fault-isolation", isolation), restoration(topo, &utility.root)],
            ),
        ],
    )
}

/// Goal node ids to their owners.
pub fn allocation(model: &Node, utility: &UtilityOrg) -> BTreeMap<String, GoalOwner> {
    let mut out = BTreeMap::new();
    let root = GoalOwner::Team(utility.root.clone());
    for id in ["flisr", "fault-detection", "fault-resolution"] {
        out.insert(id.to_string(), root.clone());
    }
    if let Some(r) = model.find("fault-restoration") {
        for id in r.ids() {
            out.insert(id.to_string(), root.clone());
        }
    }
    out.insert(
        "fault-isolation".into(),
        GoalOwner::Teams(utility.feeders.values().cloned().collect()),
    );
    for team in utility.feeders.values() {
        if let Some(n) = model.find(&format!("isolate-{team}")) {
            for id in n.ids() {
                out.insert(id.to_string(), GoalOwner::Team(team.clone()));
            }
        }
    }
    if let Some(d) = model.find("fault-detection") {
        for m in d.children() {
            let sw = m.id().trim_start_matches("monitor-");
            out.insert(m.id().to_string(), GoalOwner::Agent(sw.to_string()));
        }
    }
    out
}

fn monitor(switch: &str) -> Node {
    Node::task(format!("monitor-{switch}"), move |c| {
        if c.world.is_broken(DETECTION_TEAM) {
            return Ok(TaskStatus::Failed);
        }
        let Some((t, tripped)) = c.world.trips.first().cloned() else {
            return Ok(TaskStatus::Blocked("trip".into()));
        };
        if !c.context.contains("trip") {
            let source = source_of_switch(&c.world.topo, &tripped).unwrap_or_default();
            c.context.put(
                "trip",
                &TripInfo {
                    switch: tripped.clone(),
                    source,
                    t,
                },
            );
            c.world.report.trip = Some(tripped.clone());
            c.world.report.detection.record(tripped, true, t);
        }
        Ok(TaskStatus::Passed)
    })
}

fn feeder_isolation(source: &str, team: &str) -> Node {
    let src = source.to_string();
    Node::choice(
        format!("isolate-{team}"),
        vec![
            Node::sequence(
                format!("locate-and-isolate-{team}"),
                vec![query(source, team), locate(team), open_bounds(team)],
            ),
            isolate_at_breaker(team),
        ],
    )
    .when(move |ctx| ctx.read::<TripInfo>("trip").is_some_and(|t| t.source == src))
}

fn query(source: &str, team: &str) -> Node {
    let (source, team) = (source.to_string(), team.to_string());
    Node::task(format!("query-{team}"), move |c| {
        let key = isolation_key(&team);
        if c.world.is_broken(&key) {
            return Ok(TaskStatus::Failed);
        }
        let node = c.node.to_string();
        let mut w: Wait = load_state(c, &node);
        if !w.started {
            let roles = feeder_roles(&c.world.topo, &source);
            c.world
                .form_task_team(&key, &team, &roles, &format!("isolate-{team}"))
                .map_err(|e| BehaviorError::new(e.to_string()))?;
            let trip: TripInfo = c.context.read("trip").ok_or_else(|| BehaviorError::new("no trip recorded"))?;
            for role in &roles {
                let sw = role.name.trim_start_matches("switch:").to_string();
                if sw != trip.switch {
                    w.pending.insert(sw, 0);
                }
            }
            send_queries(c, &team, &key, &mut w);
            w.started = true;
            let lat = c.world.latency;
            arm(c, &mut w, &team, 2 * lat + 1);
        }
        let ids: BTreeSet<u64> = w.pending.values().copied().collect();
        let replies = c
            .world
            .take_mail(&team, |m| m.kind == MessageKind::Reply && m.re.is_some_and(|r| ids.contains(&r)));
        for m in replies {
            let sw = m.payload["switch"].as_str().unwrap_or_default().to_string();
            let detected = m.payload["detected"].as_bool().unwrap_or(false);
            let t = c.world.tick;
            c.world.report.detection.record(sw.clone(), detected, t);
            c.world.milestone("reply", &m.src, json!({"switch": sw, "detected": detected}));
            w.pending.remove(&sw);
            w.answered += 1;
        }
        if w.pending.is_empty() {
            c.context.put(&node, &w);
            return Ok(TaskStatus::Passed);
        }
        if c.world.tick >= w.deadline {
            if c.world.reform_epoch != w.epoch && w.retries < MAX_RETRIES {
                w.retries += 1;
                send_queries(c, &team, &key, &mut w);
                let lat = c.world.latency;
                arm(c, &mut w, &team, 2 * lat + 1);
            } else {
                let missing: Vec<String> = w.pending.keys().cloned().collect();
                c.world.report.missing.extend(missing);
                c.context.put(&node, &w);
                if w.answered == 0 {
                    return Err(BehaviorError::new("no switch answered the query"));
                }
                return Ok(TaskStatus::Passed);
            }
        }
        c.context.put(&node, &w);
        Ok(TaskStatus::Blocked(mail(&team)))
    })
}

fn send_queries(c: &mut TaskCtx<'_, World>, team: &str, key: &str, w: &mut Wait) {
    let targets: Vec<String> = w.pending.keys().cloned().collect();
    for sw in targets {
        let id = match c.world.binding(key, &format!("switch:{sw}")) {
            Some(agent) => {
                c.world.milestone("query", team, json!({"switch": sw, "agent": agent}));
                c.world.send(team, &agent, MessageKind::Query, None, json!({})).unwrap_or(0)
            }
            None => 0,
        };
        w.pending.insert(sw, id);
    }
}

fn locate(team: &str) -> Node {
    let team = team.to_string();
    Node::task(format!("locate-{team}"), move |c| {
        let found = locate_segment(&c.world.topo, &c.world.report.detection)
            .map_err(|e| BehaviorError::new(e.to_string()))?
            .ok_or_else(|| BehaviorError::new("no switch detected the fault"))?;
        // an unanswered bound may have seen the fault: widen past it
        let missing: BTreeSet<&str> = c.world.report.missing.iter().map(String::as_str).collect();
        let mut bounds = Vec::new();
        let mut frontier: Vec<String> = found.downstream.iter().cloned().collect();
        while let Some(sw) = frontier.pop() {
            if missing.contains(sw.as_str()) {
                if let Some(seg) = c.world.topo.downstream_segment(&sw) {
                    frontier.extend(c.world.topo.downstream_switches(seg).into_iter().map(str::to_string));
                }
            } else {
                bounds.push(sw);
            }
        }
        bounds.sort();
        c.world.milestone(
            "fault-located",
            &team,
            json!({"segment": found.segment, "upstream": found.upstream, "downstream": found.downstream, "bounds": bounds}),
        );
        c.context.put("bounds", &bounds);
        c.context.put("fault_segment", &found.segment);
        c.world.report.fault = Some(found);
        Ok(TaskStatus::Passed)
    })
}

fn open_bounds(team: &str) -> Node {
    let team = team.to_string();
    Node::task(format!("open-bounds-{team}"), move |c| {
        let key = isolation_key(&team);
        if c.world.is_broken(&key) {
            return Ok(TaskStatus::Failed);
        }
        let bounds: Vec<String> = c.context.read("bounds").unwrap_or_default();
        let actions: Vec<(String, Position)> = bounds.into_iter().map(|b| (b, Position::Open)).collect();
        match command_sequence(c, &team, &key, "switch", &actions, false)? {
            None => Ok(TaskStatus::Blocked(mail(&team))),
            Some(false) => Ok(TaskStatus::Failed),
            Some(true) => {
                let seg: String = c.context.read("fault_segment").unwrap_or_default();
                let zone = fault_zone(&c.world.topo, &c.world.states, &seg);
                c.world.isolation_done = true;
                c.world.milestone("isolated", &team, json!({"fault_zone": zone}));
                c.world.report.fault_zone = zone;
                Ok(TaskStatus::Passed)
            }
        }
    })
}

fn isolate_at_breaker(team: &str) -> Node {
    let team = team.to_string();
    Node::task(format!("isolate-at-breaker-{team}"), move |c| {
        let trip: TripInfo = c.context.read("trip").ok_or_else(|| BehaviorError::new("no trip recorded"))?;
        let seg = c
            .world
            .topo
            .downstream_segment(&trip.switch)
            .ok_or_else(|| BehaviorError::new("tripped switch has no downstream segment"))?
            .to_string();
        let zone = fault_zone(&c.world.topo, &c.world.states, &seg);
        c.world.isolation_done = true;
        c.world.widened = true;
        c.world
            .milestone("isolated", &team, json!({"fault_zone": zone, "at_breaker": trip.switch}));
        c.world.report.fault_zone = zone;
        Ok(TaskStatus::Passed)
    })
}

/// Sends `actions` one at a time, each awaiting its acknowledgement.
/// `Some(true)` when all are done, `Some(false)` on an unanswered command,
/// `None` while waiting.
fn command_sequence(
    c: &mut TaskCtx<'_, World>,
    team: &str,
    key: &str,
    role: &str,
    actions: &[(String, Position)],
    restoration: bool,
) -> Result<Option<bool>, BehaviorError> {
    let node = c.node.to_string();
    let mut w: Wait = load_state(c, &node);
    loop {
        let Some((sw, pos)) = actions.get(w.next) else {
            c.context.put(&node, &w);
            return Ok(Some(true));
        };
        if !w.started {
            if c.world.states.get(sw) == Some(*pos) {
                w.next += 1;
                continue;
            }
            let id = match c.world.binding(key, &format!("{role}:{sw}")) {
                Some(agent) => {
                    c.world
                        .milestone("command", team, json!({"switch": sw, "position": pos, "agent": agent}));
                    c.world
                        .send(team, &agent, MessageKind::Command, None, json!({"switch": sw, "position": pos}))
                        .unwrap_or(0)
                }
                None => 0,
            };
            w.pending = BTreeMap::from([(sw.clone(), id)]);
            w.started = true;
            let lat = c.world.latency;
            arm(c, &mut w, team, 2 * lat + 1);
        }
        let id = w.pending.get(sw).copied().unwrap_or(0);
        let acked = !c
            .world
            .take_mail(team, |m| m.kind == MessageKind::Ack && m.re == Some(id))
            .is_empty();
        if acked {
            let action = SwitchAction {
                t: c.world.tick,
                switch: sw.clone(),
                position: *pos,
            };
            if restoration {
                c.world.report.restoration_actions.push(action);
            } else {
                c.world.report.isolation.push(action);
            }
            w.next += 1;
            w.started = false;
            w.retries = 0;
            continue;
        }
        if c.world.tick >= w.deadline {
            if c.world.reform_epoch != w.epoch && w.retries < MAX_RETRIES {
                w.retries += 1;
                w.started = false;
                continue;
            }
            c.context.put(&node, &w);
            return Ok(Some(false));
        }
        c.context.put(&node, &w);
        return Ok(None);
    }
}

fn restoration(topo: &Topology, root: &str) -> Node {
    let k = topo.spec().routes.values().map(Vec::len).max().unwrap_or(0);
    let restore_load = if k == 0 {
        Node::choice("restore-load", vec![mark_unserved()])
    } else {
        let plans = (1..=k)
            .map(|i| {
                Node::sequence(format!("route-{i}"), vec![check_route(i), request_route(i, root)])
                    .when(move |ctx| ctx.read::<usize>("current_routes").unwrap_or(0) >= i)
            })
            .collect();
        Node::choice("restore-load", vec![Node::choice("restore-via-routes", plans), mark_unserved()])
    };
    Node::sequence(
        "fault-restoration",
        vec![
            determine_unserved(root),
            Node::repeat_while(
                "restore-loads",
                |ctx| ctx.read::<Vec<String>>("pending").is_some_and(|p| !p.is_empty()),
                Node::sequence("restore-next", vec![pick_next(), restore_load]),
            ),
            apply_plan(root),
            reset_latches(root),
        ],
    )
}

fn determine_unserved(root: &str) -> Node {
    let root = root.to_string();
    Node::task("determine-unserved", move |c| {
        let roles = restoration_roles(&c.world.topo);
        c.world
            .form_task_team(RESTORATION_TEAM, &root, &roles, "fault-restoration")
            .map_err(|e| BehaviorError::new(e.to_string()))?;
        let zone = c.world.report.fault_zone.clone();
        let e = energization(&c.world.topo, &c.world.states);
        let mut unfed = Vec::new();
        for l in c.world.topo.loads() {
            if e.is_fed(&l.id) {
                continue;
            }
            if zone.contains(&l.segment) {
                c.world.report.restoration.push(LoadOutcome {
                    load: l.id.clone(),
                    status: LoadStatus::Isolated,
                    source: None,
                    path: Vec::new(),
                    attempts: Vec::new(),
                });
            } else {
                unfed.push(l.id.clone());
            }
        }
        let pending = restoration_order(&c.world.topo, unfed.iter().map(String::as_str));
        c.context.put("pending", &pending);
        c.context.put("trial", &c.world.states.clone());
        c.context.put("adopted", &Vec::<RoutePlan>::new());
        Ok(TaskStatus::Passed)
    })
}

fn pick_next() -> Node {
    Node::task("pick-next-load", |c| {
        let mut pending: Vec<String> = c.context.read("pending").unwrap_or_default();
        if pending.is_empty() {
            return Err(BehaviorError::new("no pending load"));
        }
        let load = pending.remove(0);
        let routes = c.world.topo.restoration_routes(&load).map(<[_]>::len).unwrap_or(0);
        c.context.put("pending", &pending);
        c.context.put("current", &load);
        c.context.put("current_routes", &routes);
        c.context.remove("candidate");
        c.world.report.restoration.push(LoadOutcome {
            load,
            status: LoadStatus::Unserved,
            source: None,
            path: Vec::new(),
            attempts: Vec::new(),
        });
        Ok(TaskStatus::Passed)
    })
}

fn record_attempt(world: &mut World, load: &str, attempt: RouteAttempt) {
    if let Some(o) = world.report.restoration.iter_mut().rev().find(|o| o.load == load) {
        o.attempts.push(attempt);
    }
}

fn current_route(c: &TaskCtx<'_, World>, i: usize) -> Result<(String, crate::grid::RestorationRoute), BehaviorError> {
    let load: String = c.context.read("current").ok_or_else(|| BehaviorError::new("no current load"))?;
    let route = c
        .world
        .topo
        .restoration_routes(&load)
        .ok()
        .and_then(|r| r.get(i - 1))
        .cloned()
        .ok_or_else(|| BehaviorError::new(format!("{load} has no route {i}")))?;
    Ok((load, route))
}

fn check_route(i: usize) -> Node {
    Node::task(format!("check-route-{i}"), move |c| {
        let (load, route) = current_route(c, i)?;
        let reject = |c: &mut TaskCtx<'_, World>, why: String| {
            record_attempt(
                c.world,
                &load,
                RouteAttempt {
                    source: route.source.clone(),
                    path: route.path.clone(),
                    result: AttemptResult::Infeasible,
                    reason: why,
                },
            );
            Ok(TaskStatus::Failed)
        };
        let roles = route
            .path
            .iter()
            .map(|s| format!("relay:{s}"))
            .chain([format!("grant:{}", route.source)]);
        for role in roles {
            if c.world.binding(RESTORATION_TEAM, &role).is_none() {
                return reject(c, format!("no live agent for {role}"));
            }
        }
        let trial: SwitchStates = c.context.read("trial").ok_or_else(|| BehaviorError::new("no trial state"))?;
        let pending: BTreeSet<String> = c
            .context
            .read::<Vec<String>>("pending")
            .unwrap_or_default()
            .into_iter()
            .collect();
        let zone = c.world.report.fault_zone.clone();
        match plan_route(&c.world.topo, &trial, &zone, &load, &route, &pending) {
            Ok(rp) => {
                c.context.put("candidate", &rp);
                Ok(TaskStatus::Passed)
            }
            Err(why) => reject(c, why),
        }
    })
}

fn request_route(i: usize, root: &str) -> Node {
    let root = root.to_string();
    Node::task(format!("request-route-{i}"), move |c| {
        let node = c.node.to_string();
        let (load, route) = current_route(c, i)?;
        let rp: RoutePlan = c.context.read("candidate").ok_or_else(|| BehaviorError::new("no candidate plan"))?;
        let mut w: Wait = load_state(c, &node);
        let req_key = format!("{node}.request");
        if !w.started {
            let req = RestorationRequest {
                id: c.world.next_request_id(),
                load: load.clone(),
                loads: rp.loads.clone(),
                demand_kw: rp.demand_kw,
                route: route.clone(),
                requester: root.clone(),
            };
            c.context.put(&req_key, &req);
            send_request(c, &root, &req);
            w.started = true;
            let ticks = 2 * (route.path.len() as u64 + 2) * c.world.latency;
            arm(c, &mut w, &root, ticks);
        }
        let req: RestorationRequest = c.context.read(&req_key).ok_or_else(|| BehaviorError::new("lost request"))?;
        let answers = c.world.take_mail(&root, |m| {
            matches!(m.kind, MessageKind::Grant | MessageKind::Deny) && m.payload["request"].as_u64() == Some(req.id)
        });
        let attempt = |result, reason: String| RouteAttempt {
            source: route.source.clone(),
            path: route.path.clone(),
            result,
            reason,
        };
        if let Some(m) = answers.into_iter().next() {
            let reason = m.payload["reason"].as_str().unwrap_or_default().to_string();
            c.context.remove(&node);
            if m.kind == MessageKind::Grant {
                record_attempt(c.world, &load, attempt(AttemptResult::Granted, reason));
                adopt(c, rp);
                return Ok(TaskStatus::Passed);
            }
            record_attempt(c.world, &load, attempt(AttemptResult::Denied, reason));
            return Ok(TaskStatus::Failed);
        }
        if c.world.tick >= w.deadline {
            if c.world.reform_epoch != w.epoch && w.retries < MAX_RETRIES {
                w.retries += 1;
                send_request(c, &root, &req);
                let ticks = 2 * (route.path.len() as u64 + 2) * c.world.latency;
                arm(c, &mut w, &root, ticks);
            } else {
                c.context.remove(&node);
                record_attempt(c.world, &load, attempt(AttemptResult::TimedOut, "no answer".into()));
                return Ok(TaskStatus::Failed);
            }
        }
        c.context.put(&node, &w);
        Ok(TaskStatus::Blocked(mail(&root)))
    })
}

fn send_request(c: &mut TaskCtx<'_, World>, root: &str, req: &RestorationRequest) {
    let first = req.route.path.first().cloned().unwrap_or_default();
    if let Some(agent) = c.world.binding(RESTORATION_TEAM, &format!("relay:{first}")) {
        let _ = c
            .world
            .send(root, &agent, MessageKind::Request, None, json!({"request": req, "hops": []}));
    }
}

fn adopt(c: &mut TaskCtx<'_, World>, rp: RoutePlan) {
    let mut trial: SwitchStates = c.context.read("trial").expect("trial state");
    rp.apply(&mut trial);
    let mut pending: Vec<String> = c.context.read("pending").unwrap_or_default();
    pending.retain(|l| !rp.loads.contains(l));
    let mut adopted: Vec<RoutePlan> = c.context.read("adopted").unwrap_or_default();
    adopted.push(rp);
    c.context.put("trial", &trial);
    c.context.put("pending", &pending);
    c.context.put("adopted", &adopted);
}

fn mark_unserved() -> Node {
    Node::task("mark-unserved", |c| {
        let load: String = c.context.read("current").unwrap_or_default();
        let root = c.world.utility.root.clone();
        c.world.milestone("unserved", &root, json!({"load": load}));
        Ok(TaskStatus::Passed)
    })
}

fn apply_plan(root: &str) -> Node {
    let root = root.to_string();
    Node::task("apply-plan", move |c| {
        let adopted: Vec<RoutePlan> = c.context.read("adopted").unwrap_or_default();
        let actions: Vec<(String, Position)> = adopted.iter().flat_map(RoutePlan::actions).collect();
        match command_sequence(c, &root, RESTORATION_TEAM, "relay", &actions, true)? {
            None => Ok(TaskStatus::Blocked(mail(&root))),
            Some(false) => Ok(TaskStatus::Failed),
            Some(true) => {
                let e = energization(&c.world.topo, &c.world.states);
                for rp in &adopted {
                    for l in &rp.loads {
                        let fed = e.source_of(l) == Some(rp.source.as_str());
                        let outcome = match c.world.report.restoration.iter_mut().rev().find(|o| &o.load == l) {
                            Some(o) => o,
                            None => {
                                c.world.report.restoration.push(LoadOutcome {
                                    load: l.clone(),
                                    status: LoadStatus::Unserved,
                                    source: None,
                                    path: Vec::new(),
                                    attempts: Vec::new(),
                                });
                                c.world.report.restoration.last_mut().expect("just pushed")
                            }
                        };
                        if fed {
                            outcome.status = LoadStatus::Restored;
                            outcome.source = Some(rp.source.clone());
                            outcome.path = rp.path.clone();
                        }
                        let name = if fed { "restored" } else { "unserved" };
                        c.world
                            .milestone(name, &root, json!({"load": l, "source": rp.source, "path": rp.path}));
                    }
                }
                Ok(TaskStatus::Passed)
            }
        }
    })
}

fn reset_latches(root: &str) -> Node {
    let root = root.to_string();
    Node::task("reset-latches", move |c| {
        let switches: Vec<String> = c.world.topo.switches().iter().map(|s| s.id.clone()).collect();
        for sw in switches {
            let agent = c
                .world
                .binding(RESTORATION_TEAM, &format!("relay:{sw}"))
                .or_else(|| c.world.binding(DETECTION_TEAM, &format!("monitor:{sw}")));
            if let Some(agent) = agent {
                let _ = c.world.send(&root, &agent, MessageKind::Reset, None, json!({}));
            }
        }
        Ok(TaskStatus::Passed)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Utility;
    use crate::flisr::build_org;

    #[test]
    fn goals_are_allocated_by_level() {
        let u = Utility::reference();
        let org = build_org(&u.topology, &u.org).unwrap();
        let model = flisr_model(&u.topology, &org);
        let owners = allocation(&model, &org);
        let root = GoalOwner::Team("Substation".into());
        for goal in ["flisr", "fault-detection", "fault-resolution", "fault-restoration", "apply-plan"] {
            assert_eq!(owners[goal], root, "{goal}");
        }
        assert_eq!(
            owners["fault-isolation"],
            GoalOwner::Teams(vec!["Feeder1".into(), "Feeder2".into(), "Feeder3".into()])
        );
        assert_eq!(owners["query-Feeder2"], GoalOwner::Team("Feeder2".into()));
        assert_eq!(owners["monitor-ROS11"], GoalOwner::Agent("ROS11".into()));
        let mut ids = model.ids();
        ids.sort();
        let mut owned: Vec<&str> = owners.keys().map(String::as_str).collect();
        owned.sort();
        assert_eq!(ids, owned, "every goal has an owner");
    }

    #[test]
    fn routes_bound_the_restoration_plans() {
        let u = Utility::reference();
        let org = build_org(&u.topology, &u.org).unwrap();
        let model = flisr_model(&u.topology, &org);
        let plans: Vec<&str> = model.find("restore-via-routes").unwrap().children().iter().map(|c| c.id()).collect();
        assert_eq!(plans, vec!["route-1"]);
    }
}
