use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::context::DataContext;
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Task,
    Sequence,
    Parallel,
    Choice,
    Loop,
}

/// Status of one node instance. `Passed`, `Failed` and `Stopped` are terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GoalState {
    Executing,
    Blocked,
    Passed,
    Failed,
    Stopped,
}

impl GoalState {
    pub fn is_terminal(self) -> bool {
        matches!(self, GoalState::Passed | GoalState::Failed | GoalState::Stopped)
    }
}

impl fmt::Display for GoalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// What a task behavior reports after one slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskStatus {
    /// Needs more slices.
    Executing,
    /// Waiting; skipped by the executor until the key is woken.
    Blocked(String),
    Passed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct BehaviorError(pub String);

impl BehaviorError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

/// Borrowed view handed to a task behavior for one slice.
pub struct TaskCtx<'a, W> {
    pub node: &'a str,
    pub context: &'a mut DataContext,
    pub world: &'a mut W,
}

pub type Guard = Arc<dyn Fn(&DataContext) -> bool + Send + Sync>;
pub type Behavior<W> =
    Arc<dyn Fn(&mut TaskCtx<'_, W>) -> Result<TaskStatus, BehaviorError> + Send + Sync>;

/// A node of an executable process model.
///
/// Children are owned, so a model is a tree by construction; `validate`
/// checks id uniqueness and the arity rules of each kind.
pub struct ProcessNode<W> {
    id: String,
    kind: NodeKind,
    children: Vec<ProcessNode<W>>,
    guard: Option<Guard>,
    behavior: Option<Behavior<W>>,
}

impl<W> Clone for ProcessNode<W> {
    fn clone(&self) -> Self {
        Self {
            id: self.id.clone(),
            kind: self.kind,
            children: self.children.clone(),
            guard: self.guard.clone(),
            behavior: self.behavior.clone(),
        }
    }
}

impl<W> fmt::Debug for ProcessNode<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessNode")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("guarded", &self.guard.is_some())
            .field("children", &self.children)
            .finish()
    }
}

impl<W> ProcessNode<W> {
    pub fn task<F>(id: impl Into<String>, behavior: F) -> Self
    where
        F: Fn(&mut TaskCtx<'_, W>) -> Result<TaskStatus, BehaviorError> + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            kind: NodeKind::Task,
            children: Vec::new(),
            guard: None,
            behavior: Some(Arc::new(behavior)),
        }
    }

    pub fn sequence(id: impl Into<String>, children: Vec<ProcessNode<W>>) -> Self {
        Self::control(id, NodeKind::Sequence, children)
    }

    pub fn parallel(id: impl Into<String>, children: Vec<ProcessNode<W>>) -> Self {
        Self::control(id, NodeKind::Parallel, children)
    }

    /// Each child is a plan; a child without a guard is always applicable.
    pub fn choice(id: impl Into<String>, plans: Vec<ProcessNode<W>>) -> Self {
        Self::control(id, NodeKind::Choice, plans)
    }

    /// Runs `body` while `guard` holds, checked before every iteration.
    pub fn repeat_while<G>(id: impl Into<String>, guard: G, body: ProcessNode<W>) -> Self
    where
        G: Fn(&DataContext) -> bool + Send + Sync + 'static,
    {
        let mut node = Self::control(id, NodeKind::Loop, vec![body]);
        node.guard = Some(Arc::new(guard));
        node
    }

    fn control(id: impl Into<String>, kind: NodeKind, children: Vec<ProcessNode<W>>) -> Self {
        Self {
            id: id.into(),
            kind,
            children,
            guard: None,
            behavior: None,
        }
    }

    /// Attaches a plan guard (used when this node is a Choice child).
    pub fn when<G>(mut self, guard: G) -> Self
    where
        G: Fn(&DataContext) -> bool + Send + Sync + 'static,
    {
        self.guard = Some(Arc::new(guard));
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn children(&self) -> &[ProcessNode<W>] {
        &self.children
    }

    pub fn guard(&self) -> Option<&Guard> {
        self.guard.as_ref()
    }

    pub fn behavior(&self) -> Option<&Behavior<W>> {
        self.behavior.as_ref()
    }

    pub fn find(&self, id: &str) -> Option<&ProcessNode<W>> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }

    /// Node ids in pre-order.
    pub fn ids(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_ids(&mut out);
        out
    }

    fn collect_ids<'a>(&'a self, out: &mut Vec<&'a str>) {
        out.push(&self.id);
        for c in &self.children {
            c.collect_ids(out);
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = BTreeSet::new();
        self.validate_into(&mut seen)
    }

    fn validate_into<'a>(&'a self, seen: &mut BTreeSet<&'a str>) -> Result<(), ModelError> {
        if !seen.insert(&self.id) {
            return Err(ModelError::DuplicateId(self.id.clone()));
        }
        let arity_ok = match self.kind {
            NodeKind::Task => self.children.is_empty() && self.behavior.is_some(),
            NodeKind::Sequence | NodeKind::Parallel | NodeKind::Choice => !self.children.is_empty(),
            NodeKind::Loop => self.children.len() == 1 && self.guard.is_some(),
        };
        if !arity_ok {
            return Err(ModelError::Malformed {
                id: self.id.clone(),
                kind: self.kind,
            });
        }
        for c in &self.children {
            c.validate_into(seen)?;
        }
        Ok(())
    }
}
