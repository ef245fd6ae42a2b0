use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::context::DataContext;
use super::model::{Behavior, Guard, GoalState, NodeKind, ProcessNode, TaskCtx, TaskStatus};
use super::{EngineError, ModelError};

/// One recorded status change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub node: String,
    pub state: GoalState,
}

/// A plan picked by a Choice node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanAttempt {
    pub choice: String,
    pub plan: String,
}

struct Slot<W> {
    id: String,
    kind: NodeKind,
    parent: Option<usize>,
    children: Vec<usize>,
    guard: Option<Guard>,
    behavior: Option<Behavior<W>>,
}

/// A running process model together with its data context.
///
/// The model tree is flattened into slots indexed in pre-order. A node
/// with no status has not been activated in the current attempt.
pub struct ProcessInstance<W> {
    name: String,
    slots: Vec<Slot<W>>,
    index: BTreeMap<String, usize>,
    status: Vec<Option<GoalState>>,
    // task activation stamps, for FIFO slice order
    stamp: Vec<u64>,
    blocked_on: Vec<Option<String>>,
    failed_plans: BTreeMap<usize, BTreeSet<usize>>,
    // behavior invocations seen when a loop body was last started
    loop_mark: BTreeMap<usize, u64>,
    clock: u64,
    invocations: u64,
    context: DataContext,
    trace: Vec<Transition>,
    attempts: Vec<PlanAttempt>,
}

impl<W> ProcessInstance<W> {
    pub fn new(name: impl Into<String>, model: &ProcessNode<W>, context: DataContext) -> Result<Self, ModelError> {
        model.validate()?;
        let mut inst = Self {
            name: name.into(),
            slots: Vec::new(),
            index: BTreeMap::new(),
            status: Vec::new(),
            stamp: Vec::new(),
            blocked_on: Vec::new(),
            failed_plans: BTreeMap::new(),
            loop_mark: BTreeMap::new(),
            clock: 0,
            invocations: 0,
            context,
            trace: Vec::new(),
            attempts: Vec::new(),
        };
        inst.flatten(model, None);
        Ok(inst)
    }

    fn flatten(&mut self, node: &ProcessNode<W>, parent: Option<usize>) -> usize {
        let idx = self.slots.len();
        self.slots.push(Slot {
            id: node.id().to_string(),
            kind: node.kind(),
            parent,
            children: Vec::new(),
            guard: node.guard().cloned(),
            behavior: node.behavior().cloned(),
        });
        self.index.insert(node.id().to_string(), idx);
        self.status.push(None);
        self.stamp.push(0);
        self.blocked_on.push(None);
        for child in node.children() {
            let c = self.flatten(child, Some(idx));
            self.slots[idx].children.push(c);
        }
        idx
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root_id(&self) -> &str {
        &self.slots[0].id
    }

    pub fn context(&self) -> &DataContext {
        &self.context
    }

    pub fn context_mut(&mut self) -> &mut DataContext {
        &mut self.context
    }

    /// Status of `id`; `None` if it has not been activated.
    pub fn status(&self, id: &str) -> Option<GoalState> {
        self.index.get(id).and_then(|&i| self.status[i])
    }

    pub fn root_status(&self) -> Option<GoalState> {
        self.status[0]
    }

    pub fn is_finished(&self) -> bool {
        self.status[0].is_some_and(GoalState::is_terminal)
    }

    pub fn trace(&self) -> &[Transition] {
        &self.trace
    }

    pub fn plan_attempts(&self) -> &[PlanAttempt] {
        &self.attempts
    }

    /// Number of behavior invocations so far.
    pub fn invocations(&self) -> u64 {
        self.invocations
    }

    /// Blocked tasks and the keys they wait on.
    pub fn blocked(&self) -> Vec<(&str, &str)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| self.blocked_on[i].as_deref().map(|k| (s.id.as_str(), k)))
            .collect()
    }

    fn lookup(&self, id: &str) -> Result<usize, EngineError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| EngineError::UnknownNode(id.to_string()))
    }

    /// Plans of `choice` whose guard holds and which have not failed in the
    /// current attempt, in declaration order.
    pub fn applicable_plans(&self, choice: &str) -> Result<Vec<String>, EngineError> {
        let idx = self.lookup(choice)?;
        if self.slots[idx].kind != NodeKind::Choice {
            return Err(EngineError::NotChoice(choice.to_string()));
        }
        Ok(self
            .applicable(idx)
            .into_iter()
            .map(|c| self.slots[c].id.clone())
            .collect())
    }

    fn applicable(&self, idx: usize) -> Vec<usize> {
        let failed = self.failed_plans.get(&idx);
        self.slots[idx]
            .children
            .iter()
            .copied()
            .filter(|c| !failed.is_some_and(|f| f.contains(c)))
            .filter(|&c| self.slots[c].guard.as_ref().is_none_or(|g| g(&self.context)))
            .collect()
    }

    /// Activates the root if it has never run.
    pub fn start(&mut self) {
        if self.status[0].is_none() {
            self.activate(0);
        }
    }

    /// Drives `id` until it reaches a terminal state or no task can make
    /// progress, and returns its state at that point.
    pub fn execute_node(&mut self, id: &str, world: &mut W) -> Result<GoalState, EngineError> {
        let idx = self.lookup(id)?;
        if let Some(s) = self.status[idx] {
            if s.is_terminal() {
                return Err(EngineError::AlreadyTerminal(id.to_string()));
            }
        } else {
            self.activate(idx);
        }
        loop {
            let state = self.status[idx].unwrap_or(GoalState::Executing);
            if state.is_terminal() {
                return Ok(state);
            }
            if self.run_slice(world) == 0 {
                return Ok(state);
            }
        }
    }

    /// Invokes every runnable task once, oldest activation first, then
    /// resolves control-node transitions. Returns the invocation count.
    pub fn run_slice(&mut self, world: &mut W) -> usize {
        let mut ready: Vec<usize> = (0..self.slots.len())
            .filter(|&i| self.slots[i].kind == NodeKind::Task && self.status[i] == Some(GoalState::Executing))
            .collect();
        ready.sort_by_key(|&i| self.stamp[i]);

        let mut done = Vec::new();
        for &i in &ready {
            let behavior = self.slots[i].behavior.clone().expect("task has behavior");
            self.invocations += 1;
            let result = {
                let mut ctx = TaskCtx {
                    node: &self.slots[i].id,
                    context: &mut self.context,
                    world,
                };
                behavior(&mut ctx)
            };
            match result {
                Ok(TaskStatus::Executing) => {}
                Ok(TaskStatus::Blocked(key)) => {
                    self.blocked_on[i] = Some(key);
                    self.set(i, GoalState::Blocked);
                }
                Ok(TaskStatus::Passed) => {
                    self.set(i, GoalState::Passed);
                    done.push(i);
                }
                Ok(TaskStatus::Failed) => {
                    self.set(i, GoalState::Failed);
                    done.push(i);
                }
                Err(e) => {
                    let id = self.slots[i].id.clone();
                    self.context.push_error(&id, &e.0);
                    self.set(i, GoalState::Failed);
                    done.push(i);
                }
            }
        }
        for i in done {
            self.propagate(i);
        }
        ready.len()
    }

    /// Returns blocked tasks waiting on `key` to Executing.
    pub fn wake(&mut self, key: &str) -> usize {
        let hits: Vec<usize> = (0..self.slots.len())
            .filter(|&i| self.blocked_on[i].as_deref() == Some(key))
            .collect();
        for &i in &hits {
            self.blocked_on[i] = None;
            self.set(i, GoalState::Executing);
        }
        hits.len()
    }

    fn set(&mut self, idx: usize, state: GoalState) {
        self.status[idx] = Some(state);
        self.trace.push(Transition {
            node: self.slots[idx].id.clone(),
            state,
        });
    }

    fn activate(&mut self, idx: usize) {
        self.set(idx, GoalState::Executing);
        match self.slots[idx].kind {
            NodeKind::Task => {
                self.clock += 1;
                self.stamp[idx] = self.clock;
            }
            NodeKind::Sequence => {
                let first = self.slots[idx].children[0];
                self.activate(first);
            }
            NodeKind::Parallel => {
                let children = self.slots[idx].children.clone();
                for c in children {
                    if self.status[idx] != Some(GoalState::Executing) {
                        break;
                    }
                    self.activate(c);
                }
            }
            NodeKind::Choice => {
                self.failed_plans.remove(&idx);
                self.try_next_plan(idx);
            }
            NodeKind::Loop => self.iterate(idx),
        }
    }

    fn iterate(&mut self, idx: usize) {
        let guard = self.slots[idx].guard.clone().expect("loop has guard");
        if guard(&self.context) {
            let body = self.slots[idx].children[0];
            self.reset(body);
            self.loop_mark.insert(idx, self.invocations);
            self.activate(body);
        } else {
            self.finish(idx, GoalState::Passed);
        }
    }

    fn try_next_plan(&mut self, idx: usize) {
        match self.applicable(idx).first().copied() {
            Some(plan) => {
                self.reset(plan);
                self.attempts.push(PlanAttempt {
                    choice: self.slots[idx].id.clone(),
                    plan: self.slots[plan].id.clone(),
                });
                self.activate(plan);
            }
            None => self.finish(idx, GoalState::Failed),
        }
    }

    /// Terminal transition for a control node, then notify its parent.
    fn finish(&mut self, idx: usize, state: GoalState) {
        if self.slots[idx].kind == NodeKind::Choice {
            self.failed_plans.remove(&idx);
        }
        self.set(idx, state);
        self.propagate(idx);
    }

    fn propagate(&mut self, child: usize) {
        let Some(parent) = self.slots[child].parent else {
            return;
        };
        if self.status[parent] != Some(GoalState::Executing) {
            return;
        }
        let state = self.status[child].expect("child has status");
        match self.slots[parent].kind {
            NodeKind::Task => unreachable!("tasks have no children"),
            NodeKind::Sequence => {
                if state == GoalState::Passed {
                    let siblings = &self.slots[parent].children;
                    let pos = siblings.iter().position(|&c| c == child).expect("child of parent");
                    match siblings.get(pos + 1).copied() {
                        Some(next) => self.activate(next),
                        None => self.finish(parent, GoalState::Passed),
                    }
                } else {
                    self.finish(parent, GoalState::Failed);
                }
            }
            NodeKind::Parallel => {
                if state == GoalState::Passed {
                    let all = self.slots[parent]
                        .children
                        .iter()
                        .all(|&c| self.status[c] == Some(GoalState::Passed));
                    if all {
                        self.finish(parent, GoalState::Passed);
                    }
                } else {
                    let children = self.slots[parent].children.clone();
                    for c in children {
                        self.stop(c);
                    }
                    self.finish(parent, GoalState::Failed);
                }
            }
            NodeKind::Choice => {
                if state == GoalState::Passed {
                    self.finish(parent, GoalState::Passed);
                } else {
                    self.failed_plans.entry(parent).or_default().insert(child);
                    self.try_next_plan(parent);
                }
            }
            NodeKind::Loop => {
                if state != GoalState::Passed {
                    self.finish(parent, GoalState::Failed);
                } else if self.loop_mark.get(&parent) == Some(&self.invocations) {
                    // body completed without running a single task
                    let id = self.slots[parent].id.clone();
                    self.context.push_error(&id, "loop body made no progress");
                    self.finish(parent, GoalState::Failed);
                } else {
                    self.iterate(parent);
                }
            }
        }
    }

    /// Stops every non-terminal node of the subtree.
    fn stop(&mut self, idx: usize) {
        if self.status[idx].is_some_and(GoalState::is_terminal) {
            return;
        }
        self.blocked_on[idx] = None;
        self.set(idx, GoalState::Stopped);
        let children = self.slots[idx].children.clone();
        for c in children {
            self.stop(c);
        }
    }

    /// Clears the subtree so it can run again (loop iteration, plan retry).
    fn reset(&mut self, idx: usize) {
        self.status[idx] = None;
        self.blocked_on[idx] = None;
        self.failed_plans.remove(&idx);
        let children = self.slots[idx].children.clone();
        for c in children {
            self.reset(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdi::BehaviorError;

    type Node = ProcessNode<Vec<String>>;

    fn pass(id: &str) -> Node {
        let name = id.to_string();
        ProcessNode::task(id, move |c: &mut TaskCtx<'_, Vec<String>>| {
            c.world.push(name.clone());
            Ok(TaskStatus::Passed)
        })
    }

    fn fail(id: &str) -> Node {
        let name = id.to_string();
        ProcessNode::task(id, move |c: &mut TaskCtx<'_, Vec<String>>| {
            c.world.push(name.clone());
            Ok(TaskStatus::Failed)
        })
    }

    fn run(model: &Node) -> (ProcessInstance<Vec<String>>, GoalState, Vec<String>) {
        let mut inst = ProcessInstance::new("t", model, DataContext::new()).unwrap();
        let mut world = Vec::new();
        let root = model.id().to_string();
        let state = inst.execute_node(&root, &mut world).unwrap();
        (inst, state, world)
    }

    #[test]
    fn sequence_stops_at_first_failure() {
        let m = ProcessNode::sequence("s", vec![pass("a"), fail("b"), pass("c")]);
        let (inst, state, calls) = run(&m);
        assert_eq!(state, GoalState::Failed);
        assert_eq!(inst.status("a"), Some(GoalState::Passed));
        assert_eq!(inst.status("b"), Some(GoalState::Failed));
        assert_eq!(inst.status("c"), None);
        assert_eq!(calls, vec!["a", "b"]);
    }

    #[test]
    fn choice_skips_false_guard() {
        let m = ProcessNode::choice("c", vec![pass("p1").when(|_| false), pass("p2")]);
        let (inst, state, calls) = run(&m);
        assert_eq!(state, GoalState::Passed);
        assert_eq!(inst.status("p2"), Some(GoalState::Passed));
        assert_eq!(calls, vec!["p2"]);
    }

    #[test]
    fn choice_retries_after_plan_failure() {
        let m = ProcessNode::choice("c", vec![fail("p1"), fail("p2"), pass("p3")]);
        let (inst, state, calls) = run(&m);
        assert_eq!(state, GoalState::Passed);
        assert_eq!(calls, vec!["p1", "p2", "p3"]);
        assert_eq!(inst.plan_attempts().len(), 3);
    }

    #[test]
    fn applicable_plans_excludes_failed_in_attempt() {
        let blocker: Node = ProcessNode::task("p2", |_| Ok(TaskStatus::Blocked("never".into())));
        let m = ProcessNode::choice("c", vec![fail("p1"), blocker]);
        let mut inst = ProcessInstance::new("t", &m, DataContext::new()).unwrap();
        assert_eq!(inst.applicable_plans("c").unwrap(), vec!["p1", "p2"]);
        let mut w = Vec::new();
        inst.execute_node("c", &mut w).unwrap();
        assert_eq!(inst.applicable_plans("c").unwrap(), vec!["p2"]);
        assert_eq!(inst.applicable_plans("p1"), Err(EngineError::NotChoice("p1".into())));
        assert_eq!(inst.applicable_plans("zz"), Err(EngineError::UnknownNode("zz".into())));
    }

    #[test]
    fn choice_with_no_applicable_plan_fails() {
        let m = ProcessNode::choice("c", vec![pass("p1").when(|_| false)]);
        let (_, state, calls) = run(&m);
        assert_eq!(state, GoalState::Failed);
        assert!(calls.is_empty());
    }

    #[test]
    fn parallel_failure_stops_siblings() {
        let slow: Node = ProcessNode::task("slow", |_| Ok(TaskStatus::Executing));
        let m = ProcessNode::parallel("p", vec![slow, fail("f")]);
        let (inst, state, _) = run(&m);
        assert_eq!(state, GoalState::Failed);
        assert_eq!(inst.status("slow"), Some(GoalState::Stopped));
    }

    #[test]
    fn loop_runs_while_guard_holds() {
        let body: Node = ProcessNode::task("inc", |c| {
            let n = c.context.read::<u32>("n").unwrap_or(0);
            c.context.put("n", &(n + 1));
            Ok(TaskStatus::Passed)
        });
        let m = ProcessNode::repeat_while("l", |ctx| ctx.read::<u32>("n").unwrap_or(0) < 3, body);
        let (inst, state, _) = run(&m);
        assert_eq!(state, GoalState::Passed);
        assert_eq!(inst.context().read::<u32>("n"), Some(3));
    }

    #[test]
    fn loop_with_false_guard_passes_without_running_body() {
        let m = ProcessNode::repeat_while("l", |_| false, pass("a"));
        let (inst, state, calls) = run(&m);
        assert_eq!(state, GoalState::Passed);
        assert!(calls.is_empty());
        assert_eq!(inst.status("a"), None);
    }

    #[test]
    fn behavior_error_fails_task_and_is_recorded() {
        let m: Node = ProcessNode::task("t", |_| Err(BehaviorError::new("sensor offline")));
        let (inst, state, _) = run(&m);
        assert_eq!(state, GoalState::Failed);
        assert_eq!(inst.context().errors(), vec![("t".into(), "sensor offline".into())]);
    }

    #[test]
    fn blocked_task_waits_for_wake() {
        let m: Node = ProcessNode::task("w", |c| {
            if c.context.flag("go") {
                Ok(TaskStatus::Passed)
            } else {
                Ok(TaskStatus::Blocked("go".into()))
            }
        });
        let mut inst = ProcessInstance::new("t", &m, DataContext::new()).unwrap();
        let mut w = Vec::new();
        inst.start();
        assert_eq!(inst.run_slice(&mut w), 1);
        assert_eq!(inst.root_status(), Some(GoalState::Blocked));
        assert_eq!(inst.run_slice(&mut w), 0);
        inst.context_mut().set("go", true);
        assert_eq!(inst.wake("go"), 1);
        assert_eq!(inst.run_slice(&mut w), 1);
        assert_eq!(inst.root_status(), Some(GoalState::Passed));
    }

    #[test]
    fn terminal_node_cannot_be_re_executed() {
        let m = pass("a");
        let (mut inst, _, mut w) = run(&m);
        assert_eq!(
            inst.execute_node("a", &mut w),
            Err(EngineError::AlreadyTerminal("a".into()))
        );
    }

    #[test]
    fn instantly_passing_loop_body_fails_instead_of_spinning() {
        let inner: Node = ProcessNode::repeat_while("inner", |_| false, pass("x"));
        let m = ProcessNode::repeat_while("outer", |_| true, inner);
        let (inst, state, _) = run(&m);
        assert_eq!(state, GoalState::Failed);
        assert_eq!(inst.context().errors().len(), 1);
    }
}
