use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::world::mail_key;
use super::{Event, EventKind, Message, MessageKind, Scenario, SimConfig, SimError, World};
use crate::bdi::{DataContext, Executor, GoalState, PlanAttempt, ProcessInstance};
use crate::config::Utility;
use crate::flisr::{self, build_org, grant, monitor_roles, AgentKind, FlisrReport, LoadStatus, Outcome, RestorationRequest};
use crate::grid::{energization, feeding_path, Position};
use crate::ied::SwitchIed;

use crate::flisr::DETECTION_TEAM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    /// The FLISR goal reached a terminal state and the network drained.
    Completed,
    BudgetExhausted,
    /// A safety check failed; the run halted.
    InvariantViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub t: u64,
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunHeader {
    pub seed: u64,
    pub latency: u64,
    pub tick_budget: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub header: RunHeader,
    pub events: Vec<Event>,
    pub report: FlisrReport,
    pub status: RunStatus,
    pub violations: Vec<Violation>,
    pub plan_attempts: Vec<PlanAttempt>,
    pub flisr_state: Option<GoalState>,
    /// Ticks simulated.
    pub ticks: u64,
}

impl RunOutput {
    /// Header line followed by one JSON object per event.
    pub fn jsonl(&self) -> String {
        let mut out = serde_json::to_string(&json!({ "header": self.header })).expect("serializable");
        out.push('\n');
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn text(&self) -> String {
        let h = &self.header;
        let mut out = format!("# seed={} latency={} tick_budget={}\n", h.seed, h.latency, h.tick_budget);
        for e in &self.events {
            out.push_str(&e.text());
            out.push('\n');
        }
        out
    }

    pub fn milestones(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::Milestone)
    }
}

/// 0 full restoration (or nothing to restore), 1 partial or failed,
/// 2 invariant violation.
pub fn exit_code(out: &RunOutput) -> i32 {
    if out.status == RunStatus::InvariantViolation {
        return 2;
    }
    match out.report.outcome {
        Outcome::Restored | Outcome::NoFault => 0,
        _ => 1,
    }
}

pub fn run(utility: &Utility, scenario: &Scenario, cfg: &SimConfig) -> Result<RunOutput, SimError> {
    run_observed(utility, scenario, cfg, &mut |_| {})
}

/// Runs a scenario, calling `observer` with the world at the end of each tick.
pub fn run_observed(
    utility: &Utility,
    scenario: &Scenario,
    cfg: &SimConfig,
    observer: &mut dyn FnMut(&World),
) -> Result<RunOutput, SimError> {
    if cfg.latency == 0 {
        return Err(SimError::ZeroLatency);
    }
    let budget = cfg.tick_budget.unwrap_or(scenario.tick_budget);
    if budget == 0 {
        return Err(SimError::ZeroBudget);
    }
    let topo = utility.topology.clone();
    let org = build_org(&topo, &utility.org).map_err(|issues| {
        SimError::Setup(issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
    })?;
    for f in &scenario.faults {
        if !topo.has_segment(&f.segment) {
            return Err(SimError::UnknownSegment(f.segment.clone()));
        }
    }
    for a in &scenario.agent_failures {
        if !org.agents.contains_key(&a.agent) {
            return Err(SimError::UnknownAgent(a.agent.clone()));
        }
    }
    let ieds = topo
        .switches()
        .iter()
        .map(|s| {
            let cfg = utility.protection_for(&s.id, s.kind);
            (s.id.clone(), SwitchIed::new(&s.id, s.normal, cfg))
        })
        .collect();
    let normal_served: BTreeMap<String, u64> = {
        let e = energization(&topo, &crate::grid::SwitchStates::normal(&topo));
        topo.sources().iter().map(|s| (s.id.clone(), e.served_kw(&topo, &s.id))).collect()
    };

    let model = flisr::flisr_model(&topo, &org);
    let root_team = org.root.clone();
    let mut world = World::new(topo, org, ieds, cfg.latency);
    world
        .form_task_team(DETECTION_TEAM, &root_team, &monitor_roles(&world.topo), "fault-detection")
        .map_err(|e| SimError::Setup(e.to_string()))?;
    let mut exec = Executor::new();
    let instance = ProcessInstance::new("flisr", &model, DataContext::new()).map_err(|e| SimError::Setup(e.to_string()))?;
    exec.add(instance);

    let mut faults: Vec<String> = Vec::new();
    let mut violations = Vec::new();
    let mut status = RunStatus::BudgetExhausted;
    let mut ticks = 0;
    for t in 0..budget {
        world.tick = t;
        ticks = t + 1;
        for f in scenario.faults.iter().filter(|f| f.tick == t) {
            world.log(EventKind::FaultInjected, &f.segment, json!({"segment": f.segment, "type": f.kind}));
            faults.push(f.segment.clone());
        }
        let mut failed_now = Vec::new();
        for a in scenario.agent_failures.iter().filter(|a| a.tick == t) {
            if world.utility.org.is_alive(&a.agent) {
                world.utility.org.mark_failed(&a.agent).expect("known agent");
                world.log(EventKind::AgentFailed, &a.agent, json!({"agent": a.agent}));
                failed_now.push(a.agent.clone());
            }
        }
        for msg in world.due_messages() {
            deliver(&mut world, msg, &mut violations);
        }
        sample(&mut world, &faults, cfg, &mut violations);
        for agent in &failed_now {
            reform(&mut world, &exec, agent);
        }
        let timers = world.due_timers();
        world.wakes.extend(timers);
        for key in std::mem::take(&mut world.wakes) {
            exec.wake(&key);
        }
        exec.step(&mut world);

        check_safety(&mut world, &faults, &normal_served, &mut violations);
        observer(&world);
        if !violations.is_empty() {
            status = RunStatus::InvariantViolation;
            break;
        }
        if exec.all_finished() && world.messages_in_flight() == 0 {
            status = RunStatus::Completed;
            break;
        }
    }

    let inst = exec.instance(0).expect("one instance");
    let root_state = inst.root_status();
    let e = energization(&world.topo, &world.states);
    world.report.energization = e.fed.clone();
    world.report.radial = e.radial;
    world.report.outcome = if root_state == Some(GoalState::Failed) {
        Outcome::Failed
    } else if world.trips.is_empty() {
        Outcome::NoFault
    } else if root_state != Some(GoalState::Passed) {
        Outcome::Incomplete
    } else if world.widened || world.report.restoration.iter().any(|o| o.status == LoadStatus::Unserved) {
        Outcome::Degraded
    } else {
        Outcome::Restored
    };
    if root_state.is_some_and(GoalState::is_terminal) {
        let outcome = world.report.outcome;
        let root = world.utility.root.clone();
        world.milestone("flisr-complete", &root, json!({"outcome": outcome}));
    }
    world.ledger.release_all();
    Ok(RunOutput {
        header: RunHeader {
            seed: cfg.seed.unwrap_or(scenario.seed),
            latency: cfg.latency,
            tick_budget: budget,
        },
        events: world.events.clone(),
        report: world.report.clone(),
        status,
        violations,
        plan_attempts: inst.plan_attempts().to_vec(),
        flisr_state: root_state,
        ticks,
    })
}

fn deliver(world: &mut World, msg: Message, violations: &mut Vec<Violation>) {
    let alive = world.utility.org.performer(&msg.dst).is_none_or(|p| p.is_alive());
    if !alive {
        world.log(
            EventKind::MessageDeliver,
            &msg.dst,
            json!({"id": msg.id, "src": msg.src, "kind": msg.kind, "dropped": true}),
        );
        return;
    }
    world.log(EventKind::MessageDeliver, &msg.dst, json!({"id": msg.id, "src": msg.src, "kind": msg.kind}));
    if world.utility.org.team(&msg.dst).is_some() {
        let team = msg.dst.clone();
        world.post(&team, msg);
        return;
    }
    match world.utility.agents.get(&msg.dst).cloned() {
        Some(AgentKind::Switch { device }) => switch_agent(world, &device, msg, violations),
        Some(AgentKind::Zone { .. }) => zone_agent(world, msg),
        None => {}
    }
}

fn switch_agent(world: &mut World, device: &str, msg: Message, violations: &mut Vec<Violation>) {
    let me = msg.dst.clone();
    match msg.kind {
        MessageKind::Query => {
            let detected = world.ieds.get(device).is_some_and(SwitchIed::detected);
            let _ = world.send(
                &me,
                &msg.src,
                MessageKind::Reply,
                Some(msg.id),
                json!({"switch": device, "detected": detected}),
            );
        }
        MessageKind::Command => {
            let Some(position) = msg.payload.get("position").and_then(|p| serde_json::from_value::<Position>(p.clone()).ok())
            else {
                return;
            };
            world.log(EventKind::Command, &me, json!({"switch": device, "position": position, "from": msg.src}));
            if let Some(rec) = world.move_switch(device, position, &me) {
                if !rec.radial {
                    flag_last(world, "radiality");
                    violations.push(Violation {
                        t: world.tick,
                        kind: "radiality".into(),
                        detail: format!("{device} -> {position} closes a path between sources"),
                    });
                }
            }
            let _ = world.send(
                &me,
                &msg.src,
                MessageKind::Ack,
                Some(msg.id),
                json!({"switch": device, "position": position}),
            );
        }
        MessageKind::Request => {
            let Some(req) = msg
                .payload
                .get("request")
                .and_then(|r| serde_json::from_value::<RestorationRequest>(r.clone()).ok())
            else {
                return;
            };
            let mut hops: Vec<String> = msg
                .payload
                .get("hops")
                .and_then(|h| serde_json::from_value(h.clone()).ok())
                .unwrap_or_default();
            hops.push(device.to_string());
            let next = match req.route.path.iter().position(|s| s == device) {
                Some(i) if i + 1 < req.route.path.len() => {
                    world.binding(flisr::RESTORATION_TEAM, &format!("relay:{}", req.route.path[i + 1]))
                }
                Some(_) => world.binding(flisr::RESTORATION_TEAM, &format!("grant:{}", req.route.source)),
                None => None,
            };
            if let Some(next) = next {
                let _ = world.send(&me, &next, MessageKind::Request, None, json!({"request": req, "hops": hops}));
            }
        }
        MessageKind::Reset => {
            if let Some(ied) = world.ieds.get_mut(device) {
                ied.reset();
            }
        }
        _ => {}
    }
}

fn zone_agent(world: &mut World, msg: Message) {
    if msg.kind != MessageKind::Request {
        return;
    }
    let me = msg.dst.clone();
    let Some(req) = msg
        .payload
        .get("request")
        .and_then(|r| serde_json::from_value::<RestorationRequest>(r.clone()).ok())
    else {
        return;
    };
    let hops = msg.payload.get("hops").cloned().unwrap_or(Value::Null);
    world.milestone(
        "request",
        &me,
        json!({"request": req.id, "load": req.load, "source": req.route.source, "path": hops, "demand_kw": req.demand_kw}),
    );
    let e = energization(&world.topo, &world.states);
    let answer = grant(&world.topo, &e, &mut world.ledger, &req);
    let (name, kind) = if answer.granted {
        ("grant", MessageKind::Grant)
    } else {
        ("deny", MessageKind::Deny)
    };
    world.milestone(
        name,
        &me,
        json!({"request": req.id, "load": req.load, "remaining_kw": answer.remaining_kw, "reason": answer.reason}),
    );
    let _ = world.send(&me, &req.requester, kind, Some(msg.id), serde_json::to_value(&answer).expect("serializable"));
}

/// Runs every due IED on the current the network carries.
fn sample(world: &mut World, faults: &[String], cfg: &SimConfig, violations: &mut Vec<Violation>) {
    let e = energization(&world.topo, &world.states);
    let mut faulted: BTreeSet<String> = BTreeSet::new();
    for seg in faults {
        if let Some((_, path)) = feeding_path(&world.topo, &world.states, seg) {
            faulted.extend(path);
        }
    }
    let switches: Vec<(String, [String; 2])> =
        world.topo.switches().iter().map(|s| (s.id.clone(), s.ends.clone())).collect();
    for (sw, ends) in switches {
        let tick = world.tick;
        let closed = world.states.is_closed(&sw);
        let energized = ends.iter().any(|s| e.segment_source(s).is_some());
        let ied = world.ieds.get_mut(&sw).expect("one ied per switch");
        if !ied.is_due(tick) {
            continue;
        }
        let threshold = ied.config.threshold_a;
        let current = if faulted.contains(&sw) {
            cfg.fault_current * threshold
        } else if closed && energized {
            cfg.load_current * threshold
        } else {
            0.0
        };
        let out = ied.ln_pipeline_step(current, tick);
        let mut detail = serde_json::Map::new();
        for (path, value) in &out.updates {
            detail.insert(path.clone(), serde_json::to_value(value).expect("serializable"));
        }
        if let Some(d) = &out.diagnostic {
            detail.insert("diagnostic".into(), json!(d));
        }
        world.log(EventKind::Sample, &sw, Value::Object(detail));
        if out.trip {
            world.log(EventKind::Trip, &sw, json!({"switch": sw, "current_a": current}));
            world.trips.push((tick, sw.clone()));
            world.milestone("trip", &sw, json!({"switch": sw}));
            world.wakes.push("trip".into());
        }
        if out.opened {
            if let Some(rec) = world.move_switch(&sw, Position::Open, &sw) {
                if !rec.radial {
                    flag_last(world, "radiality");
                    violations.push(Violation {
                        t: tick,
                        kind: "radiality".into(),
                        detail: format!("{sw} opened into a meshed state"),
                    });
                }
            }
        }
    }
}

/// Reforms every active task team that had `failed` bound.
fn reform(world: &mut World, exec: &Executor<World>, failed: &str) {
    let inst = exec.instance(0).expect("one instance");
    let keys: Vec<String> = world.task_teams.keys().cloned().collect();
    for key in keys {
        let active = world
            .team_goals
            .get(&key)
            .and_then(|g| inst.status(g))
            .is_some_and(|s| !s.is_terminal());
        let tt = &world.task_teams[&key];
        if !active || !tt.binds(failed) {
            continue;
        }
        let Ok((next, how)) = world.utility.org.reform_task_team(tt, failed) else {
            continue;
        };
        let change = match how {
            crate::teams::Reformation::Rebound { slot, replacement } => {
                json!({"slot": slot.to_string(), "replacement": replacement})
            }
            crate::teams::Reformation::Dropped { slot } => json!({"slot": slot.to_string(), "dropped": true}),
        };
        let team = next.team.clone();
        let mut detail = json!({"task_team": key, "failed": failed, "status": next.status});
        if let (Value::Object(d), Value::Object(c)) = (&mut detail, change) {
            d.extend(c);
        }
        if next.status == crate::teams::TaskTeamStatus::Broken {
            world.broken.insert(key.clone());
        }
        world.task_teams.insert(key, next);
        world.reform_epoch += 1;
        world.milestone("reformation", &team, detail);
    }
    let teams: Vec<String> = world.utility.org.teams().map(|t| mail_key(&t.id)).collect();
    world.wakes.extend(teams);
    world.wakes.push("trip".into());
}

fn check_safety(
    world: &mut World,
    faults: &[String],
    normal_served: &BTreeMap<String, u64>,
    violations: &mut Vec<Violation>,
) {
    let e = energization(&world.topo, &world.states);
    let t = world.tick;
    let mut found = Vec::new();
    if world.isolation_done {
        for seg in faults {
            if let Some(src) = e.segment_source(seg) {
                found.push(("fault-energized", format!("fault segment {seg} fed by {src}")));
            }
        }
    }
    for src in world.topo.sources() {
        let used = e.served_kw(&world.topo, &src.id) + world.ledger.committed_kw(&src.id, &e);
        if used > src.capacity_kw && used > normal_served[&src.id] {
            found.push(("capacity", format!("{} serves and owes {used} kW of {} kW", src.id, src.capacity_kw)));
        }
    }
    for (kind, detail) in found {
        world.milestone("invariant-violation", "kernel", json!({"kind": kind, "detail": detail}));
        violations.push(Violation {
            t,
            kind: kind.into(),
            detail,
        });
    }
}

fn flag_last(world: &mut World, what: &str) {
    if let Some(Value::Object(d)) = world.events.last_mut().map(|e| &mut e.detail) {
        d.insert("violation".into(), json!(what));
    }
}
