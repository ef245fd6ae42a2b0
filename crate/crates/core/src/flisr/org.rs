use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::grid::{Issue, Position, SwitchKind, Topology};
use crate::teams::{Member, Organization, Performer, Role, Team};

pub const SUBSTATION: &str = "Substation";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemberSpec {
    Team(String),
    Agent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamSpec {
    pub id: String,
    pub members: Vec<MemberSpec>,
}

/// A standby agent able to front `device` if its primary agent fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpareSpec {
    pub id: String,
    pub device: String,
    /// Team to join; defaults to the team holding the device's agent.
    #[serde(default)]
    pub team: Option<String>,
}

/// Team declarations. The first team is the top of the holarchy; with no
/// teams declared a substation team over one team per feeder is derived.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgSpec {
    #[serde(default)]
    pub teams: Vec<TeamSpec>,
    #[serde(default)]
    pub spares: Vec<SpareSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentKind {
    Switch { device: String },
    Zone { source: String },
}

/// The agent architecture of one utility.
#[derive(Debug, Clone)]
pub struct UtilityOrg {
    pub org: Organization,
    pub agents: BTreeMap<String, AgentKind>,
    pub root: String,
    /// Source id to the team running that feeder.
    pub feeders: BTreeMap<String, String>,
}

impl UtilityOrg {
    pub fn device_of(&self, agent: &str) -> Option<&str> {
        match self.agents.get(agent)? {
            AgentKind::Switch { device } => Some(device),
            AgentKind::Zone { .. } => None,
        }
    }

    pub fn is_agent(&self, id: &str) -> bool {
        self.agents.contains_key(id) || self.org.team(id).is_some()
    }
}

pub fn switch_capabilities(device: &str) -> [String; 3] {
    [
        format!("monitor:{device}"),
        format!("operate:{device}"),
        format!("relay:{device}"),
    ]
}

/// One monitor per switch for fault detection.
pub fn monitor_roles(topo: &Topology) -> Vec<Role> {
    topo.switches()
        .iter()
        .map(|s| Role::single(format!("monitor:{}", s.id), [format!("monitor:{}", s.id)]).expect("non-empty goals"))
        .collect()
}

/// One query-and-operate role per switch of the feeder's normal tree.
pub fn feeder_roles(topo: &Topology, source: &str) -> Vec<Role> {
    feeder_switches(topo, source)
        .into_iter()
        .map(|s| {
            Role::single(format!("switch:{s}"), [format!("monitor:{s}"), format!("operate:{s}")]).expect("non-empty goals")
        })
        .collect()
}

/// Optional relay roles for every switch plus one granting role per zone,
/// so losing a member degrades rather than breaks the restoration team.
pub fn restoration_roles(topo: &Topology) -> Vec<Role> {
    let relay = topo.switches().iter().map(|s| {
        Role::optional(format!("relay:{}", s.id), [format!("relay:{}", s.id), format!("operate:{}", s.id)], 1)
            .expect("non-empty goals")
    });
    let zones = topo
        .sources()
        .iter()
        .map(|z| Role::optional(format!("grant:{}", z.id), [format!("grant:{}", z.id)], 1).expect("non-empty goals"));
    relay.chain(zones).collect()
}

fn feeder_switches<'a>(topo: &'a Topology, source: &str) -> Vec<&'a str> {
    topo.switches()
        .iter()
        .filter(|s| s.normal == Position::Closed)
        .filter(|s| topo.downstream_segment(&s.id).and_then(|seg| topo.normal_source(seg)) == Some(source))
        .map(|s| s.id.as_str())
        .collect()
}

fn default_teams(topo: &Topology) -> Vec<TeamSpec> {
    let mut root = TeamSpec {
        id: SUBSTATION.to_string(),
        members: Vec::new(),
    };
    let mut feeders = Vec::new();
    for (i, src) in topo.sources().iter().enumerate() {
        let id = format!("Feeder{}", i + 1);
        root.members.push(MemberSpec::Team(id.clone()));
        feeders.push(TeamSpec {
            id,
            members: feeder_switches(topo, &src.id)
                .into_iter()
                .map(|s| MemberSpec::Agent(s.to_string()))
                .collect(),
        });
    }
    for s in topo.switches().iter().filter(|s| s.kind == SwitchKind::TIE) {
        root.members.push(MemberSpec::Agent(s.id.clone()));
    }
    for z in topo.sources() {
        root.members.push(MemberSpec::Agent(z.id.clone()));
    }
    let mut out = vec![root];
    out.extend(feeders);
    out
}

/// Builds performers and teams. Every switch gets an agent named after
/// it and every zone substation a granting agent named after the source.
pub fn build_org(topo: &Topology, spec: &OrgSpec) -> Result<UtilityOrg, Vec<Issue>> {
    let mut issues = Vec::new();
    let mut org = Organization::new();
    let mut agents = BTreeMap::new();
    for s in topo.switches() {
        org.add_performer(Performer::new(&s.id, switch_capabilities(&s.id)));
        agents.insert(s.id.clone(), AgentKind::Switch { device: s.id.clone() });
    }
    for z in topo.sources() {
        org.add_performer(Performer::new(&z.id, [format!("grant:{}", z.id)]));
        agents.insert(z.id.clone(), AgentKind::Zone { source: z.id.clone() });
    }
    for (i, sp) in spec.spares.iter().enumerate() {
        if topo.switch(&sp.device).is_none() {
            issues.push(Issue::new(format!("spares[{i}].device"), format!("unknown switch {}", sp.device)));
            continue;
        }
        if agents.contains_key(&sp.id) {
            issues.push(Issue::new(format!("spares[{i}].id"), format!("agent id {} already used", sp.id)));
            continue;
        }
        org.add_performer(Performer::new(&sp.id, switch_capabilities(&sp.device)));
        agents.insert(sp.id.clone(), AgentKind::Switch { device: sp.device.clone() });
    }

    let mut teams = if spec.teams.is_empty() {
        default_teams(topo)
    } else {
        spec.teams.clone()
    };
    let declared: BTreeSet<String> = teams.iter().map(|t| t.id.clone()).collect();
    for (i, t) in teams.iter().enumerate() {
        if agents.contains_key(&t.id) {
            issues.push(Issue::new(format!("teams[{i}].id"), format!("team id {} clashes with an agent", t.id)));
        }
        for (j, m) in t.members.iter().enumerate() {
            let ok = match m {
                MemberSpec::Team(x) => declared.contains(x),
                MemberSpec::Agent(x) => agents.contains_key(x),
            };
            if !ok {
                issues.push(Issue::new(format!("teams[{i}].members[{j}]"), "unknown member"));
            }
        }
    }
    // spares join the team of their device's primary agent unless told otherwise
    for (i, sp) in spec.spares.iter().enumerate() {
        let target = sp.team.clone().or_else(|| {
            teams
                .iter()
                .find(|t| t.members.contains(&MemberSpec::Agent(sp.device.clone())))
                .map(|t| t.id.clone())
        });
        match target.and_then(|id| teams.iter_mut().find(|t| t.id == id)) {
            Some(t) => t.members.push(MemberSpec::Agent(sp.id.clone())),
            None => issues.push(Issue::new(format!("spares[{i}].team"), "no team to join")),
        }
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    for t in &teams {
        let members = t
            .members
            .iter()
            .map(|m| match m {
                MemberSpec::Team(x) => Member::Team(x.clone()),
                MemberSpec::Agent(x) => Member::Performer(x.clone()),
            })
            .collect();
        org.add_team(Team::new(&t.id, members));
    }
    if let Err(e) = org.validate() {
        return Err(vec![Issue::new("teams", e.to_string())]);
    }
    let root = teams[0].id.clone();
    let in_root: BTreeSet<String> = org
        .candidates(&root)
        .map_err(|e| vec![Issue::new("teams", e.to_string())])?
        .into_iter()
        .map(|p| p.id.clone())
        .collect();
    for a in agents.keys() {
        if !in_root.contains(a) {
            issues.push(Issue::new("teams[0]", format!("agent {a} is outside the top-level team")));
        }
    }

    let mut feeders = BTreeMap::new();
    for (i, src) in topo.sources().iter().enumerate() {
        let switches = feeder_switches(topo, &src.id);
        let Some(head) = switches.first() else {
            continue;
        };
        let team = teams.iter().skip(1).find(|t| t.members.contains(&MemberSpec::Agent(head.to_string())));
        match team {
            Some(t) => {
                let covered: BTreeSet<String> = org
                    .candidates(&t.id)
                    .expect("validated")
                    .into_iter()
                    .map(|p| p.id.clone())
                    .collect();
                if let Some(m) = switches.iter().find(|s| !covered.contains(**s)) {
                    issues.push(Issue::new(
                        "teams",
                        format!("feeder team {} does not hold switch agent {m}", t.id),
                    ));
                }
                feeders.insert(src.id.clone(), t.id.clone());
            }
            None => issues.push(Issue::new(
                format!("sources[{i}]"),
                format!("no feeder team holds the agent of {head}"),
            )),
        }
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    Ok(UtilityOrg {
        org,
        agents,
        root,
        feeders,
    })
}
