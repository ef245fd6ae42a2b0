use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::GridError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SwitchKind {
    CB,
    ROS,
    TIE,
}

impl SwitchKind {
    pub fn normal_position(self) -> Position {
        match self {
            SwitchKind::TIE => Position::Open,
            SwitchKind::CB | SwitchKind::ROS => Position::Closed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Position {
    Open,
    Closed,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneSubstation {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub capacity_kw: u64,
    /// Segment the source energizes directly.
    pub bus: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchingUnit {
    pub id: String,
    pub kind: SwitchKind,
    pub normal: Position,
    pub ends: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Load {
    pub id: String,
    pub demand_kw: u64,
    pub segment: String,
}

/// A predefined path from a load to an alternative source. `path` lists
/// switches starting next to the load and ending at the source bus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestorationRoute {
    pub source: String,
    pub path: Vec<String>,
}

/// A topology rule violation, located by a path into the declaration
/// (e.g. `switches[3].normal`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub location: String,
    pub message: String,
}

impl Issue {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// The raw declaration of a utility, before validation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub sources: Vec<ZoneSubstation>,
    pub segments: Vec<Segment>,
    pub switches: Vec<SwitchingUnit>,
    pub loads: Vec<Load>,
    #[serde(default)]
    pub routes: BTreeMap<String, Vec<RestorationRoute>>,
}

/// Where a segment hangs in the normal-position radial forest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct TreePos {
    pub source: usize,
    pub depth: usize,
    /// Switch toward the source; `None` on a bus.
    pub up: Option<usize>,
}

/// A validated utility topology: segments are vertices, switches edges.
#[derive(Debug, Clone)]
pub struct Topology {
    spec: TopologySpec,
    seg_index: BTreeMap<String, usize>,
    sw_index: BTreeMap<String, usize>,
    src_index: BTreeMap<String, usize>,
    load_index: BTreeMap<String, usize>,
    // per segment: (switch, other end)
    adj: Vec<Vec<(usize, usize)>>,
    ends: Vec<(usize, usize)>,
    bus_of: Vec<usize>,
    tree: Vec<TreePos>,
}

impl Topology {
    /// Validates `spec` against every topology rule. All violations are
    /// reported, not just the first.
    pub fn new(spec: TopologySpec) -> Result<Self, Vec<Issue>> {
        let mut issues = Vec::new();

        let seg_index = index_of(spec.segments.iter().map(|s| &s.id), "segments", &mut issues);
        let sw_index = index_of(spec.switches.iter().map(|s| &s.id), "switches", &mut issues);
        let src_index = index_of(spec.sources.iter().map(|s| &s.id), "sources", &mut issues);
        let load_index = index_of(spec.loads.iter().map(|l| &l.id), "loads", &mut issues);
        for (i, sw) in spec.switches.iter().enumerate() {
            if seg_index.contains_key(&sw.id) || src_index.contains_key(&sw.id) {
                issues.push(Issue::new(format!("switches[{i}].id"), format!("id `{}` is used twice", sw.id)));
            }
        }

        let mut bus_of = Vec::new();
        for (i, src) in spec.sources.iter().enumerate() {
            match seg_index.get(&src.bus) {
                Some(&s) => bus_of.push(s),
                None => {
                    issues.push(Issue::new(format!("sources[{i}].bus"), format!("unknown segment `{}`", src.bus)));
                    bus_of.push(usize::MAX);
                }
            }
        }

        let mut adj = vec![Vec::new(); spec.segments.len()];
        let mut ends = Vec::new();
        for (i, sw) in spec.switches.iter().enumerate() {
            let a = seg_index.get(&sw.ends[0]);
            let b = seg_index.get(&sw.ends[1]);
            for (k, end) in sw.ends.iter().enumerate() {
                if !seg_index.contains_key(end) {
                    issues.push(Issue::new(format!("switches[{i}].ends[{k}]"), format!("unknown segment `{end}`")));
                }
            }
            match (a, b) {
                (Some(&a), Some(&b)) if a != b => {
                    adj[a].push((i, b));
                    adj[b].push((i, a));
                    ends.push((a, b));
                }
                (Some(_), Some(_)) => {
                    issues.push(Issue::new(format!("switches[{i}].ends"), "both ends on the same segment"));
                    ends.push((usize::MAX, usize::MAX));
                }
                _ => ends.push((usize::MAX, usize::MAX)),
            }
        }
        // position rules do not break indexing, so graph checks still run
        let mut rules = Vec::new();
        for (i, sw) in spec.switches.iter().enumerate() {
            let expected = sw.kind.normal_position();
            if sw.normal != expected {
                let rule = match sw.kind {
                    SwitchKind::TIE => "TIE switches must be normally Open",
                    SwitchKind::CB => "CB switches must be normally Closed",
                    SwitchKind::ROS => "ROS switches must be normally Closed",
                };
                rules.push(Issue::new(format!("switches[{i}].normal"), rule));
            }
        }

        for (i, load) in spec.loads.iter().enumerate() {
            if !seg_index.contains_key(&load.segment) {
                issues.push(Issue::new(format!("loads[{i}].segment"), format!("unknown segment `{}`", load.segment)));
            }
            if load.demand_kw == 0 {
                rules.push(Issue::new(format!("loads[{i}].demand_kw"), "demand must be positive"));
            }
        }

        if !issues.is_empty() {
            issues.extend(rules);
            return Err(issues);
        }
        issues = rules;

        let mut topo = Topology {
            spec,
            seg_index,
            sw_index,
            src_index,
            load_index,
            adj,
            ends,
            bus_of,
            tree: Vec::new(),
        };
        topo.check_graph(&mut issues);
        topo.check_routes(&mut issues);
        if issues.is_empty() {
            Ok(topo)
        } else {
            Err(issues)
        }
    }

    fn check_graph(&mut self, issues: &mut Vec<Issue>) {
        let n = self.spec.segments.len();
        if n == 0 {
            issues.push(Issue::new("segments", "topology has no segments"));
            return;
        }
        if self.spec.sources.is_empty() {
            issues.push(Issue::new("sources", "topology has no sources"));
            return;
        }
        // connectivity over all switches
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(s) = queue.pop_front() {
            for &(_, o) in &self.adj[s] {
                if !seen[o] {
                    seen[o] = true;
                    queue.push_back(o);
                }
            }
        }
        for (i, ok) in seen.iter().enumerate() {
            if !ok {
                issues.push(Issue::new(
                    format!("segments[{i}]"),
                    format!("segment `{}` is not connected to the network", self.spec.segments[i].id),
                ));
            }
        }

        // normal closed subgraph: a forest with exactly one source per tree
        let mut tree: Vec<Option<TreePos>> = vec![None; n];
        for (si, &bus) in self.bus_of.iter().enumerate() {
            if let Some(other) = tree[bus] {
                issues.push(Issue::new(
                    format!("sources[{si}]"),
                    format!(
                        "source `{}` shares a normally closed tree with `{}`",
                        self.spec.sources[si].id, self.spec.sources[other.source].id
                    ),
                ));
                continue;
            }
            tree[bus] = Some(TreePos { source: si, depth: 0, up: None });
            let mut queue = VecDeque::from([bus]);
            let mut used = BTreeSet::new();
            while let Some(s) = queue.pop_front() {
                let pos = tree[s].expect("visited");
                for &(sw, o) in &self.adj[s] {
                    if self.spec.switches[sw].normal != Position::Closed || !used.insert(sw) {
                        continue;
                    }
                    match tree[o] {
                        None => {
                            tree[o] = Some(TreePos {
                                source: si,
                                depth: pos.depth + 1,
                                up: Some(sw),
                            });
                            queue.push_back(o);
                        }
                        Some(prev) if prev.source == si => issues.push(Issue::new(
                            format!("switches[{sw}]"),
                            format!("switch `{}` closes a loop in the normal configuration", self.spec.switches[sw].id),
                        )),
                        Some(prev) => issues.push(Issue::new(
                            format!("switches[{sw}]"),
                            format!(
                                "switch `{}` connects sources `{}` and `{}` in the normal configuration",
                                self.spec.switches[sw].id,
                                self.spec.sources[prev.source].id,
                                self.spec.sources[si].id
                            ),
                        )),
                    }
                }
            }
        }
        for (i, pos) in tree.iter().enumerate() {
            if pos.is_none() && seen[i] {
                issues.push(Issue::new(
                    format!("segments[{i}]"),
                    format!("segment `{}` is not fed by any source in the normal configuration", self.spec.segments[i].id),
                ));
            }
        }
        if issues.is_empty() {
            self.tree = tree.into_iter().map(|p| p.expect("checked")).collect();
        }
    }

    fn check_routes(&self, issues: &mut Vec<Issue>) {
        for (load, routes) in &self.spec.routes {
            let Some(&li) = self.load_index.get(load) else {
                issues.push(Issue::new(format!("routes.{load}"), format!("unknown load `{load}`")));
                continue;
            };
            for (r, route) in routes.iter().enumerate() {
                let at = format!("routes.{load}[{r}]");
                let Some(&src) = self.src_index.get(&route.source) else {
                    issues.push(Issue::new(format!("{at}.source"), format!("unknown source `{}`", route.source)));
                    continue;
                };
                if route.path.is_empty() {
                    issues.push(Issue::new(format!("{at}.path"), "route path is empty"));
                    continue;
                }
                let mut cur = self.seg_index[&self.spec.loads[li].segment];
                let mut ok = true;
                for (k, sw) in route.path.iter().enumerate() {
                    let Some(&si) = self.sw_index.get(sw) else {
                        issues.push(Issue::new(format!("{at}.path[{k}]"), format!("unknown switch `{sw}`")));
                        ok = false;
                        break;
                    };
                    let (a, b) = self.ends[si];
                    cur = if a == cur {
                        b
                    } else if b == cur {
                        a
                    } else {
                        issues.push(Issue::new(
                            format!("{at}.path[{k}]"),
                            format!("switch `{sw}` does not continue the path"),
                        ));
                        ok = false;
                        break;
                    };
                }
                if ok && cur != self.bus_of[src] {
                    issues.push(Issue::new(
                        format!("{at}.path"),
                        format!("path does not end at the bus of `{}`", route.source),
                    ));
                }
            }
        }
    }

    pub fn spec(&self) -> &TopologySpec {
        &self.spec
    }

    pub fn sources(&self) -> &[ZoneSubstation] {
        &self.spec.sources
    }

    pub fn switches(&self) -> &[SwitchingUnit] {
        &self.spec.switches
    }

    pub fn segments(&self) -> &[Segment] {
        &self.spec.segments
    }

    pub fn loads(&self) -> &[Load] {
        &self.spec.loads
    }

    pub fn switch(&self, id: &str) -> Option<&SwitchingUnit> {
        self.sw_index.get(id).map(|&i| &self.spec.switches[i])
    }

    pub fn source(&self, id: &str) -> Option<&ZoneSubstation> {
        self.src_index.get(id).map(|&i| &self.spec.sources[i])
    }

    pub fn load(&self, id: &str) -> Option<&Load> {
        self.load_index.get(id).map(|&i| &self.spec.loads[i])
    }

    pub fn has_segment(&self, id: &str) -> bool {
        self.seg_index.contains_key(id)
    }

    /// Configured routes for `load`, in priority order.
    pub fn restoration_routes(&self, load: &str) -> Result<&[RestorationRoute], GridError> {
        if !self.load_index.contains_key(load) {
            return Err(GridError::UnknownLoad(load.to_string()));
        }
        Ok(self.spec.routes.get(load).map(Vec::as_slice).unwrap_or(&[]))
    }

    pub fn loads_on(&self, segment: &str) -> impl Iterator<Item = &Load> {
        let segment = segment.to_string();
        self.spec.loads.iter().filter(move |l| l.segment == segment)
    }

    /// Source feeding `segment` in the normal configuration.
    pub fn normal_source(&self, segment: &str) -> Option<&str> {
        self.seg_index
            .get(segment)
            .map(|&s| self.spec.sources[self.tree[s].source].id.as_str())
    }

    /// Hops from the segment to its source bus in the normal configuration.
    pub fn depth(&self, segment: &str) -> Option<usize> {
        self.seg_index.get(segment).map(|&s| self.tree[s].depth)
    }

    /// Switch between the segment and its source in the normal configuration.
    pub fn upstream_switch(&self, segment: &str) -> Option<&str> {
        let &s = self.seg_index.get(segment)?;
        self.tree[s].up.map(|sw| self.spec.switches[sw].id.as_str())
    }

    /// Segment on the load side of a normally closed switch.
    pub fn downstream_segment(&self, switch: &str) -> Option<&str> {
        let &sw = self.sw_index.get(switch)?;
        let (a, b) = self.ends[sw];
        [a, b]
            .into_iter()
            .find(|&s| self.tree[s].up == Some(sw))
            .map(|s| self.spec.segments[s].id.as_str())
    }

    /// Normally closed switches leaving `segment` away from its source.
    pub fn downstream_switches(&self, segment: &str) -> Vec<&str> {
        let Some(&s) = self.seg_index.get(segment) else {
            return Vec::new();
        };
        self.adj[s]
            .iter()
            .filter(|&&(sw, o)| self.tree[o].up == Some(sw))
            .map(|&(sw, _)| self.spec.switches[sw].id.as_str())
            .collect()
    }

    /// Switches incident to `segment`, in declaration order.
    pub fn incident_switches(&self, segment: &str) -> Vec<&str> {
        let Some(&s) = self.seg_index.get(segment) else {
            return Vec::new();
        };
        let mut sws: Vec<usize> = self.adj[s].iter().map(|&(sw, _)| sw).collect();
        sws.sort_unstable();
        sws.into_iter().map(|sw| self.spec.switches[sw].id.as_str()).collect()
    }

    /// Normally closed switches from the source bus down to `switch`,
    /// source end first, `switch` last.
    pub fn normal_path_to(&self, switch: &str) -> Vec<&str> {
        let Some(seg) = self.downstream_segment(switch) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut s = self.seg_index[seg];
        while let Some(sw) = self.tree[s].up {
            out.push(self.spec.switches[sw].id.as_str());
            let (a, b) = self.ends[sw];
            s = if a == s { b } else { a };
        }
        out.reverse();
        out
    }

    /// The other end of `switch` seen from `segment`.
    pub fn across(&self, switch: &str, segment: &str) -> Option<&str> {
        let sw = self.spec.switches.get(*self.sw_index.get(switch)?)?;
        if sw.ends[0] == segment {
            Some(&sw.ends[1])
        } else if sw.ends[1] == segment {
            Some(&sw.ends[0])
        } else {
            None
        }
    }

    pub(crate) fn seg_idx(&self, id: &str) -> Option<usize> {
        self.seg_index.get(id).copied()
    }

    pub(crate) fn adjacency(&self, seg: usize) -> &[(usize, usize)] {
        &self.adj[seg]
    }

    pub(crate) fn bus_idx(&self, source: usize) -> usize {
        self.bus_of[source]
    }
}

fn index_of<'a>(
    ids: impl Iterator<Item = &'a String>,
    what: &str,
    issues: &mut Vec<Issue>,
) -> BTreeMap<String, usize> {
    let mut map = BTreeMap::new();
    for (i, id) in ids.enumerate() {
        if map.insert(id.clone(), i).is_some() {
            issues.push(Issue::new(format!("{what}[{i}].id"), format!("duplicate id `{id}`")));
        }
    }
    map
}
