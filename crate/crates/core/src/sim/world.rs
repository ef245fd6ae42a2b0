use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};

use super::{Event, EventKind, Message, MessageKind, SimError};
use crate::flisr::{CapacityLedger, FlisrReport, Milestone, Outcome, UtilityOrg};
use crate::grid::{apply_action, ActionRecord, DetectionSnapshot, Position, SwitchStates, Topology};
use crate::ied::SwitchIed;
use crate::teams::{Role, TaskTeam, TaskTeamStatus, TeamError};

/// Everything the kernel and the goal-model behaviors share during a run.
#[derive(Debug)]
pub struct World {
    pub topo: Topology,
    pub utility: UtilityOrg,
    pub states: SwitchStates,
    pub ieds: BTreeMap<String, SwitchIed>,
    pub tick: u64,
    pub latency: u64,
    pub ledger: CapacityLedger,
    /// Switches tripped by protection, in order.
    pub trips: Vec<(u64, String)>,
    /// Bumped on every reformation so waiting tasks can re-send.
    pub reform_epoch: u64,
    /// Set once the faulted section is cut off.
    pub isolation_done: bool,
    /// Isolation fell back to the tripped breaker.
    pub widened: bool,
    pub report: FlisrReport,
    pub(super) task_teams: BTreeMap<String, TaskTeam>,
    /// Goal node each task team was formed for.
    pub(super) team_goals: BTreeMap<String, String>,
    pub(super) broken: BTreeSet<String>,
    pub(super) events: Vec<Event>,
    pub(super) in_flight: BTreeMap<(u64, u64), Message>,
    pub(super) wakes: Vec<String>,
    pub(super) action_records: Vec<(u64, ActionRecord)>,
    seq: u64,
    next_msg: u64,
    next_request: u64,
    mailboxes: BTreeMap<String, Vec<Message>>,
    timers: BTreeMap<u64, BTreeSet<String>>,
}

impl World {
    pub fn new(topo: Topology, utility: UtilityOrg, ieds: BTreeMap<String, SwitchIed>, latency: u64) -> Self {
        let states = SwitchStates::normal(&topo);
        Self {
            topo,
            utility,
            states,
            ieds,
            tick: 0,
            latency,
            ledger: CapacityLedger::new(),
            trips: Vec::new(),
            reform_epoch: 0,
            isolation_done: false,
            widened: false,
            report: FlisrReport {
                outcome: Outcome::NoFault,
                trip: None,
                detection: DetectionSnapshot::new(),
                missing: Vec::new(),
                fault: None,
                fault_zone: BTreeSet::new(),
                isolation: Vec::new(),
                restoration: Vec::new(),
                restoration_actions: Vec::new(),
                energization: BTreeMap::new(),
                radial: true,
                timeline: Vec::new(),
            },
            task_teams: BTreeMap::new(),
            team_goals: BTreeMap::new(),
            broken: BTreeSet::new(),
            events: Vec::new(),
            in_flight: BTreeMap::new(),
            wakes: Vec::new(),
            action_records: Vec::new(),
            seq: 0,
            next_msg: 1,
            next_request: 1,
            mailboxes: BTreeMap::new(),
            timers: BTreeMap::new(),
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn log(&mut self, kind: EventKind, actor: &str, detail: Value) {
        self.events.push(Event {
            t: self.tick,
            seq: self.seq,
            kind,
            actor: actor.to_string(),
            detail,
        });
        self.seq += 1;
    }

    /// Logs a milestone and adds it to the report timeline.
    pub fn milestone(&mut self, name: &str, actor: &str, detail: Value) {
        let mut d = Map::new();
        d.insert("name".into(), json!(name));
        if let Value::Object(extra) = &detail {
            d.extend(extra.clone());
        }
        self.log(EventKind::Milestone, actor, Value::Object(d));
        self.report.timeline.push(Milestone {
            t: self.tick,
            name: name.to_string(),
            actor: actor.to_string(),
            detail,
        });
    }

    /// Schedules delivery `latency` ticks from now. Returns the message id.
    pub fn send(
        &mut self,
        src: &str,
        dst: &str,
        kind: MessageKind,
        re: Option<u64>,
        payload: Value,
    ) -> Result<u64, SimError> {
        for a in [src, dst] {
            if !self.utility.is_agent(a) {
                return Err(SimError::UnknownAgent(a.to_string()));
            }
        }
        let id = self.next_msg;
        self.next_msg += 1;
        let msg = Message {
            id,
            src: src.to_string(),
            dst: dst.to_string(),
            kind,
            re,
            payload,
            sent: self.tick,
            deliver: self.tick + self.latency,
        };
        self.log(
            EventKind::MessageSend,
            src,
            json!({"id": id, "dst": dst, "kind": kind, "re": re, "deliver": msg.deliver, "payload": msg.payload}),
        );
        self.in_flight.insert((msg.deliver, id), msg);
        Ok(id)
    }

    pub fn messages_in_flight(&self) -> usize {
        self.in_flight.len()
    }

    pub(super) fn due_messages(&mut self) -> Vec<Message> {
        let later = self.in_flight.split_off(&(self.tick + 1, 0));
        let due = std::mem::replace(&mut self.in_flight, later);
        due.into_values().collect()
    }

    pub(super) fn post(&mut self, team: &str, msg: Message) {
        self.mailboxes.entry(team.to_string()).or_default().push(msg);
        self.wakes.push(mail_key(team));
    }

    /// Removes and returns mail for `team` accepted by `pick`.
    pub fn take_mail(&mut self, team: &str, pick: impl Fn(&Message) -> bool) -> Vec<Message> {
        let Some(box_) = self.mailboxes.get_mut(team) else {
            return Vec::new();
        };
        let (hit, keep): (Vec<Message>, Vec<Message>) = box_.drain(..).partition(|m| pick(m));
        *box_ = keep;
        hit
    }

    /// Wakes `key` at tick `at`.
    pub fn wake_at(&mut self, at: u64, key: &str) {
        self.timers.entry(at).or_default().insert(key.to_string());
    }

    pub(super) fn due_timers(&mut self) -> Vec<String> {
        let later = self.timers.split_off(&(self.tick + 1));
        let due = std::mem::replace(&mut self.timers, later);
        due.into_values().flatten().collect()
    }

    pub fn next_request_id(&mut self) -> u64 {
        let id = self.next_request;
        self.next_request += 1;
        id
    }

    /// Forms (once) the task team stored under `key` for goal node `goal`.
    pub fn form_task_team(&mut self, key: &str, team: &str, roles: &[Role], goal: &str) -> Result<(), TeamError> {
        if self.task_teams.contains_key(key) {
            return Ok(());
        }
        let tt = self.utility.org.form_task_team(team, roles)?;
        let bindings: Map<String, Value> = tt
            .bindings
            .iter()
            .map(|(ri, p)| (ri.to_string(), json!(p)))
            .collect();
        self.milestone("team-formed", team, json!({"task_team": key, "bindings": bindings}));
        self.task_teams.insert(key.to_string(), tt);
        self.team_goals.insert(key.to_string(), goal.to_string());
        Ok(())
    }

    pub fn task_team(&self, key: &str) -> Option<&TaskTeam> {
        self.task_teams.get(key)
    }

    /// Live performer bound to `role` in task team `key`.
    pub fn binding(&self, key: &str, role: &str) -> Option<String> {
        let p = self.task_teams.get(key)?.performer(role)?;
        self.utility.org.is_alive(p).then(|| p.to_string())
    }

    pub fn is_broken(&self, key: &str) -> bool {
        self.broken.contains(key)
            || self
                .task_teams
                .get(key)
                .is_some_and(|t| t.status == TaskTeamStatus::Broken)
    }

    /// Physically moves a switch and logs the change. The radiality of the
    /// result is kept for the kernel's safety check.
    pub(super) fn move_switch(&mut self, switch: &str, position: Position, actor: &str) -> Option<ActionRecord> {
        let (next, rec) = apply_action(&self.topo, &self.states, switch, position).ok()?;
        self.states = next;
        if let Some(ied) = self.ieds.get_mut(switch) {
            ied.operate(position);
        }
        if !rec.noop {
            self.log(
                EventKind::PositionChanged,
                actor,
                json!({"switch": switch, "from": rec.from, "to": rec.to, "radial": rec.radial}),
            );
        }
        self.action_records.push((self.tick, rec.clone()));
        Some(rec)
    }

    pub fn detection_snapshot(&self) -> &DetectionSnapshot {
        &self.report.detection
    }
}

pub fn mail_key(team: &str) -> String {
    format!("mail:{team}")
}
