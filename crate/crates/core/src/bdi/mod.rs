//! Executable goal/process models with BDI plan choice and a time-sliced
//! executor.
//!
//! Control nodes (sequence, parallel, choice, loop) carry default
//! behaviour; task leaves run a user-supplied step once per slice. A
//! Choice node treats its children as plans: when a plan fails, the
//! applicable set is regenerated without it and the next plan is tried.

mod context;
mod executor;
mod instance;
mod model;

pub use context::{DataContext, ERRORS_KEY};
pub use executor::Executor;
pub use instance::{PlanAttempt, ProcessInstance, Transition};
pub use model::{Behavior, BehaviorError, GoalState, Guard, NodeKind, ProcessNode, TaskCtx, TaskStatus};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("node `{id}` has invalid shape for a {kind:?} node")]
    Malformed { id: String, kind: NodeKind },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` is not a choice node")]
    NotChoice(String),
    #[error("node `{0}` already reached a terminal state")]
    AlreadyTerminal(String),
}
