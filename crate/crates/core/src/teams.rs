//! Hierarchical teams, roles as goal collections, and task-team formation.
//!
//! A team's members are performers or sub-teams. Task teams bind role
//! instances to capable performers; when a bound performer fails the task
//! team can be reformed from the remaining members.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bdi::DataContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerformerStatus {
    Alive,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Performer {
    pub id: String,
    pub capabilities: BTreeSet<String>,
    pub status: PerformerStatus,
}

impl Performer {
    pub fn new<I, S>(id: impl Into<String>, capabilities: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            id: id.into(),
            capabilities: capabilities.into_iter().map(Into::into).collect(),
            status: PerformerStatus::Alive,
        }
    }

    pub fn is_alive(&self) -> bool {
        self.status == PerformerStatus::Alive
    }

    pub fn can_fill(&self, role: &Role) -> bool {
        role.goals.is_subset(&self.capabilities)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Member {
    Performer(String),
    Team(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Team {
    pub id: String,
    pub members: Vec<Member>,
    /// Team-level beliefs, separate from any member's.
    #[serde(default)]
    pub beliefs: DataContext,
}

impl Team {
    pub fn new(id: impl Into<String>, members: Vec<Member>) -> Self {
        Self {
            id: id.into(),
            members,
            beliefs: DataContext::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Role {
    pub name: String,
    pub goals: BTreeSet<String>,
    pub min: usize,
    pub max: usize,
}

impl Role {
    pub fn new<I, S>(name: impl Into<String>, goals: I, min: usize, max: usize) -> Result<Self, TeamError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let role = Self {
            name: name.into(),
            goals: goals.into_iter().map(Into::into).collect(),
            min,
            max,
        };
        if role.goals.is_empty() || role.min > role.max || role.max == 0 {
            return Err(TeamError::InvalidRole(role.name));
        }
        Ok(role)
    }

    /// Exactly one filler.
    pub fn single<I, S>(name: impl Into<String>, goals: I) -> Result<Self, TeamError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(name, goals, 1, 1)
    }

    /// A role with `min == 0`.
    pub fn optional<I, S>(name: impl Into<String>, goals: I, max: usize) -> Result<Self, TeamError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(name, goals, 0, max)
    }
}

/// A role slot: the `index`-th filler of `role`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RoleInstance {
    pub role: String,
    pub index: usize,
}

impl fmt::Display for RoleInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.role, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskTeamStatus {
    Full,
    Degraded,
    Broken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTeam {
    pub team: String,
    pub roles: Vec<Role>,
    pub bindings: BTreeMap<RoleInstance, String>,
    pub status: TaskTeamStatus,
}

impl TaskTeam {
    pub fn performer(&self, role: &str) -> Option<&str> {
        self.bindings
            .iter()
            .find(|(ri, _)| ri.role == role)
            .map(|(_, p)| p.as_str())
    }

    pub fn fillers(&self, role: &str) -> Vec<&str> {
        self.bindings
            .iter()
            .filter(|(ri, _)| ri.role == role)
            .map(|(_, p)| p.as_str())
            .collect()
    }

    pub fn binds(&self, performer: &str) -> bool {
        self.bindings.values().any(|p| p == performer)
    }
}

/// Outcome of a reformation, for logging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reformation {
    Rebound { slot: RoleInstance, replacement: String },
    Dropped { slot: RoleInstance },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TeamError {
    #[error("role `{0}` cannot be filled")]
    UnfillableRole(String),
    #[error("role `{0}` needs a non-empty goal set and min <= max")]
    InvalidRole(String),
    #[error("unknown team `{0}`")]
    UnknownTeam(String),
    #[error("unknown performer `{0}`")]
    UnknownPerformer(String),
    #[error("performer `{0}` is not bound in the task team")]
    NotBound(String),
    #[error("membership of `{0}` is not a tree")]
    NotATree(String),
}

/// All performers and teams of one agent architecture.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Organization {
    performers: BTreeMap<String, Performer>,
    teams: BTreeMap<String, Team>,
}

impl Organization {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_performer(&mut self, performer: Performer) {
        self.performers.insert(performer.id.clone(), performer);
    }

    pub fn add_team(&mut self, team: Team) {
        self.teams.insert(team.id.clone(), team);
    }

    pub fn performer(&self, id: &str) -> Option<&Performer> {
        self.performers.get(id)
    }

    pub fn performers(&self) -> impl Iterator<Item = &Performer> {
        self.performers.values()
    }

    pub fn team(&self, id: &str) -> Option<&Team> {
        self.teams.get(id)
    }

    pub fn team_mut(&mut self, id: &str) -> Option<&mut Team> {
        self.teams.get_mut(id)
    }

    pub fn teams(&self) -> impl Iterator<Item = &Team> {
        self.teams.values()
    }

    pub fn is_alive(&self, performer: &str) -> bool {
        self.performers.get(performer).is_some_and(Performer::is_alive)
    }

    pub fn mark_failed(&mut self, performer: &str) -> Result<(), TeamError> {
        let p = self
            .performers
            .get_mut(performer)
            .ok_or_else(|| TeamError::UnknownPerformer(performer.to_string()))?;
        p.status = PerformerStatus::Failed;
        Ok(())
    }

    /// Checks that every member exists and each team/performer has at
    /// most one parent with no membership cycles.
    pub fn validate(&self) -> Result<(), TeamError> {
        let mut parent: BTreeMap<&Member, &str> = BTreeMap::new();
        for team in self.teams.values() {
            for m in &team.members {
                match m {
                    Member::Performer(p) if !self.performers.contains_key(p) => {
                        return Err(TeamError::UnknownPerformer(p.clone()))
                    }
                    Member::Team(t) if !self.teams.contains_key(t) => {
                        return Err(TeamError::UnknownTeam(t.clone()))
                    }
                    _ => {}
                }
                if parent.insert(m, &team.id).is_some() {
                    let id = match m {
                        Member::Performer(p) | Member::Team(p) => p.clone(),
                    };
                    return Err(TeamError::NotATree(id));
                }
            }
        }
        for team in self.teams.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = Member::Team(team.clone());
            while let Some(&up) = parent.get(&cur) {
                if !seen.insert(up) {
                    return Err(TeamError::NotATree(team.clone()));
                }
                cur = Member::Team(up.to_string());
            }
        }
        Ok(())
    }

    /// Performers of `team` in declaration order, sub-teams expanded
    /// depth-first in place.
    pub fn candidates(&self, team: &str) -> Result<Vec<&Performer>, TeamError> {
        let t = self
            .teams
            .get(team)
            .ok_or_else(|| TeamError::UnknownTeam(team.to_string()))?;
        let mut out = Vec::new();
        for m in &t.members {
            match m {
                Member::Performer(p) => {
                    out.push(
                        self.performers
                            .get(p)
                            .ok_or_else(|| TeamError::UnknownPerformer(p.clone()))?,
                    );
                }
                Member::Team(sub) => out.extend(self.candidates(sub)?),
            }
        }
        Ok(out)
    }

    /// Fills each role, in order, with the first capable live members not
    /// already used, up to the role's maximum.
    pub fn form_task_team(&self, team: &str, roles: &[Role]) -> Result<TaskTeam, TeamError> {
        let candidates = self.candidates(team)?;
        let mut used: BTreeSet<&str> = BTreeSet::new();
        let mut bindings = BTreeMap::new();
        for role in roles {
            let mut filled = 0;
            for p in &candidates {
                if filled == role.max {
                    break;
                }
                if p.is_alive() && p.can_fill(role) && !used.contains(p.id.as_str()) {
                    used.insert(&p.id);
                    bindings.insert(
                        RoleInstance {
                            role: role.name.clone(),
                            index: filled,
                        },
                        p.id.clone(),
                    );
                    filled += 1;
                }
            }
            if filled < role.min {
                return Err(TeamError::UnfillableRole(role.name.clone()));
            }
        }
        Ok(TaskTeam {
            team: team.to_string(),
            roles: roles.to_vec(),
            bindings,
            status: TaskTeamStatus::Full,
        })
    }

    /// Replaces `failed` with a capable, unbound, live member if one exists;
    /// otherwise drops the binding and degrades or breaks the task team.
    pub fn reform_task_team(
        &self,
        task_team: &TaskTeam,
        failed: &str,
    ) -> Result<(TaskTeam, Reformation), TeamError> {
        let slot = task_team
            .bindings
            .iter()
            .find(|(_, p)| p.as_str() == failed)
            .map(|(ri, _)| ri.clone())
            .ok_or_else(|| TeamError::NotBound(failed.to_string()))?;
        let role = task_team
            .roles
            .iter()
            .find(|r| r.name == slot.role)
            .ok_or_else(|| TeamError::UnfillableRole(slot.role.clone()))?;

        let mut next = task_team.clone();
        let spare = self
            .candidates(&task_team.team)?
            .into_iter()
            .find(|p| p.id != failed && p.is_alive() && p.can_fill(role) && !task_team.binds(&p.id));
        if let Some(spare) = spare {
            next.bindings.insert(slot.clone(), spare.id.clone());
            let replacement = spare.id.clone();
            return Ok((next, Reformation::Rebound { slot, replacement }));
        }
        next.bindings.remove(&slot);
        let remaining = next.fillers(&role.name).len();
        next.status = if remaining >= role.min && next.status != TaskTeamStatus::Broken {
            TaskTeamStatus::Degraded
        } else {
            TaskTeamStatus::Broken
        };
        Ok((next, Reformation::Dropped { slot }))
    }
}
