//! Topology and scenario files.
//!
//! Both are JSON documents. A topology file holds the grid declaration
//! (`sources`, `segments`, `switches`, `loads`, `routes`) plus optional
//! `teams`, `spares`, `protection` and `protection_overrides`. A source
//! without `capacity_kw` gets twice the demand of its own feeder. A
//! scenario file holds `faults`, `agent_failures`, `tick_budget` and `seed`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::flisr::{build_org, OrgSpec, SpareSpec, TeamSpec};
use crate::grid::{
    energization, reference, Issue, Load, RestorationRoute, Segment, SwitchKind, SwitchStates, SwitchingUnit, Topology,
    TopologySpec, ZoneSubstation,
};
use crate::ied::ProtectionConfig;
use crate::sim::Scenario;

/// A validated utility: grid, agent organization and protection settings.
#[derive(Debug, Clone)]
pub struct Utility {
    pub topology: Topology,
    pub org: OrgSpec,
    /// Settings shared by every switch; tripping follows the switch kind.
    pub protection: ProtectionConfig,
    /// Complete settings for individual switches.
    pub overrides: BTreeMap<String, ProtectionConfig>,
}

impl Utility {
    pub fn new(topology: Topology) -> Self {
        Self {
            topology,
            org: OrgSpec::default(),
            protection: ProtectionConfig::default(),
            overrides: BTreeMap::new(),
        }
    }

    /// The bundled three-zone utility.
    pub fn reference() -> Self {
        Self::new(Topology::new(reference::three_zone()).expect("reference topology is valid"))
    }

    pub fn protection_for(&self, switch: &str, kind: SwitchKind) -> ProtectionConfig {
        self.overrides.get(switch).copied().unwrap_or(ProtectionConfig {
            trip_enabled: kind == SwitchKind::CB,
            ..self.protection
        })
    }

    pub fn with_spares(mut self, spares: Vec<SpareSpec>) -> Self {
        self.org.spares = spares;
        self
    }

    /// The file form of this utility.
    pub fn to_file(&self) -> TopologyFile {
        let spec = self.topology.spec();
        TopologyFile {
            sources: spec
                .sources
                .iter()
                .map(|s| SourceDecl {
                    id: s.id.clone(),
                    name: s.name.clone(),
                    capacity_kw: Some(s.capacity_kw),
                    bus: s.bus.clone(),
                })
                .collect(),
            segments: spec.segments.clone(),
            switches: spec.switches.clone(),
            loads: spec.loads.clone(),
            routes: spec.routes.clone(),
            teams: self.org.teams.clone(),
            spares: self.org.spares.clone(),
            protection: Some(self.protection),
            protection_overrides: self.overrides.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDecl {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_kw: Option<u64>,
    pub bus: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    pub sources: Vec<SourceDecl>,
    pub segments: Vec<Segment>,
    pub switches: Vec<SwitchingUnit>,
    pub loads: Vec<Load>,
    #[serde(default)]
    pub routes: BTreeMap<String, Vec<RestorationRoute>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub teams: Vec<TeamSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spares: Vec<SpareSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protection: Option<ProtectionConfig>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub protection_overrides: BTreeMap<String, ProtectionConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}", Diagnostics(path, issues))]
    Invalid { path: String, issues: Vec<Issue> },
}

struct Diagnostics<'a>(&'a String, &'a Vec<Issue>);

impl fmt::Display for Diagnostics<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.1.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", self.0, issue)?;
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &str, text: &str) -> Result<T, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parses and validates a topology document; `path` only labels diagnostics.
pub fn parse_topology(path: &str, text: &str) -> Result<Utility, ConfigError> {
    let file: TopologyFile = parse(path, text)?;
    build_utility(file).map_err(|issues| ConfigError::Invalid {
        path: path.to_string(),
        issues,
    })
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<Utility, ConfigError> {
    let path = path.as_ref();
    parse_topology(&path.display().to_string(), &read(path)?)
}

/// Checks every topology, organization and protection rule and returns
/// the resulting utility, or all violations found.
pub fn build_utility(file: TopologyFile) -> Result<Utility, Vec<Issue>> {
    let mut spec = TopologySpec {
        sources: file
            .sources
            .iter()
            .map(|s| ZoneSubstation {
                id: s.id.clone(),
                name: s.name.clone(),
                capacity_kw: s.capacity_kw.unwrap_or(0),
                bus: s.bus.clone(),
            })
            .collect(),
        segments: file.segments,
        switches: file.switches,
        loads: file.loads,
        routes: file.routes,
    };
    let mut topology = Topology::new(spec.clone())?;
    if file.sources.iter().any(|s| s.capacity_kw.is_none()) {
        let e = energization(&topology, &SwitchStates::normal(&topology));
        for (decl, src) in file.sources.iter().zip(spec.sources.iter_mut()) {
            if decl.capacity_kw.is_none() {
                src.capacity_kw = 2 * e.served_kw(&topology, &src.id);
            }
        }
        topology = Topology::new(spec)?;
    }
    let mut issues = Vec::new();
    let protection = file.protection.unwrap_or_default();
    if !protection.is_valid() {
        issues.push(Issue::new(
            "protection",
            "threshold must be positive, persistence and sampling period at least 1",
        ));
    }
    for (sw, p) in &file.protection_overrides {
        if topology.switch(sw).is_none() {
            issues.push(Issue::new(format!("protection_overrides.{sw}"), format!("unknown switch `{sw}`")));
        } else if !p.is_valid() {
            issues.push(Issue::new(format!("protection_overrides.{sw}"), "invalid protection settings"));
        }
    }
    let org = OrgSpec {
        teams: file.teams,
        spares: file.spares,
    };
    if let Err(found) = build_org(&topology, &org) {
        issues.extend(found);
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    Ok(Utility {
        topology,
        org,
        protection,
        overrides: file.protection_overrides,
    })
}

pub fn parse_scenario(path: &str, text: &str) -> Result<Scenario, ConfigError> {
    parse(path, text)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ConfigError> {
    let path = path.as_ref();
    parse_scenario(&path.display().to_string(), &read(path)?)
}

/// Checks a scenario's references against a utility.
pub fn validate_scenario(utility: &Utility, scenario: &Scenario) -> Vec<Issue> {
    let mut issues = Vec::new();
    if scenario.tick_budget == 0 {
        issues.push(Issue::new("tick_budget", "tick budget must be positive"));
    }
    for (i, f) in scenario.faults.iter().enumerate() {
        if !utility.topology.has_segment(&f.segment) {
            issues.push(Issue::new(format!("faults[{i}].segment"), format!("unknown segment `{}`", f.segment)));
        }
    }
    let org = build_org(&utility.topology, &utility.org).ok();
    for (i, a) in scenario.agent_failures.iter().enumerate() {
        if !org.as_ref().is_some_and(|o| o.agents.contains_key(&a.agent)) {
            issues.push(Issue::new(format!("agent_failures[{i}].agent"), format!("unknown agent `{}`", a.agent)));
        }
    }
    issues
}
