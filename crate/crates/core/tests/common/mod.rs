//! Random radial utilities and independent graph oracles shared by the
//! integration tests. Nothing here calls into the crate's graph code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use flisr_core::config::{build_utility, SourceDecl, TopologyFile, Utility};
use flisr_core::grid::{Load, Position, RestorationRoute, Segment, SwitchKind, SwitchingUnit};
use flisr_core::sim::{AgentFailure, FaultKind, FaultSpec, Scenario};
use rand::seq::SliceRandom;
use rand::Rng;

/// One generated feeder: a tree of switches hanging off a source bus.
#[derive(Debug, Clone)]
pub struct Feeder {
    pub source: String,
    pub bus: String,
    /// Non-bus segments in creation order.
    pub segments: Vec<String>,
    /// Segment to (switch feeding it, segment above that switch).
    pub parent: BTreeMap<String, (String, String)>,
}

impl Feeder {
    /// Switches from the bus down to `segment`.
    pub fn path_to(&self, segment: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = segment.to_string();
        while let Some((sw, up)) = self.parent.get(&cur) {
            out.push(sw.clone());
            cur = up.clone();
        }
        out.reverse();
        out
    }

    /// Switches directly below `segment`.
    pub fn children_of(&self, segment: &str) -> BTreeSet<String> {
        self.parent
            .values()
            .filter(|(_, up)| up == segment)
            .map(|(sw, _)| sw.clone())
            .collect()
    }

    fn ancestors(&self, segment: &str) -> Vec<String> {
        let mut out = vec![segment.to_string()];
        let mut cur = segment.to_string();
        while let Some((_, up)) = self.parent.get(&cur) {
            out.push(up.clone());
            cur = up.clone();
        }
        out
    }

    /// Switches walked from segment `from` to segment `to` inside the tree.
    pub fn walk(&self, from: &str, to: &str) -> Vec<String> {
        let a = self.ancestors(from);
        let b = self.ancestors(to);
        let lca = a.iter().find(|s| b.contains(s)).expect("same tree").clone();
        let mut out = Vec::new();
        for s in a.iter().take_while(|s| **s != lca) {
            out.push(self.parent[s].0.clone());
        }
        let mut down: Vec<String> = b.iter().take_while(|s| **s != lca).map(|s| self.parent[s].0.clone()).collect();
        down.reverse();
        out.extend(down);
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct Generated {
    pub feeders: Vec<Feeder>,
    pub segments: Vec<Segment>,
    pub switches: Vec<SwitchingUnit>,
    pub loads: Vec<Load>,
    pub routes: BTreeMap<String, Vec<RestorationRoute>>,
}

fn unit(id: &str, kind: SwitchKind, a: &str, b: &str) -> SwitchingUnit {
    SwitchingUnit {
        id: id.to_string(),
        kind,
        normal: kind.normal_position(),
        ends: [a.to_string(), b.to_string()],
    }
}

/// Adds feeder `f` with `n_switches` switches (one breaker plus sectionalizers).
pub fn add_feeder(g: &mut Generated, rng: &mut impl Rng, f: usize, n_switches: usize) {
    let bus = format!("F{f}B");
    g.segments.push(Segment { id: bus.clone() });
    let mut feeder = Feeder {
        source: format!("Z{f}"),
        bus: bus.clone(),
        segments: Vec::new(),
        parent: BTreeMap::new(),
    };
    for k in 1..=n_switches {
        let seg = format!("F{f}S{k}");
        let (sw, kind, up) = if k == 1 {
            (format!("CB{f}"), SwitchKind::CB, bus.clone())
        } else {
            let up = feeder.segments[rng.gen_range(0..feeder.segments.len())].clone();
            (format!("F{f}R{k}"), SwitchKind::ROS, up)
        };
        g.segments.push(Segment { id: seg.clone() });
        g.switches.push(unit(&sw, kind, &up, &seg));
        g.loads.push(Load {
            id: format!("L{f}_{k}"),
            demand_kw: rng.gen_range(5..=30) * 10,
            segment: seg.clone(),
        });
        feeder.parent.insert(seg.clone(), (sw, up));
        feeder.segments.push(seg);
    }
    g.feeders.push(feeder);
}

/// A utility of 2 or 3 feeders joined by tie switches, with up to two
/// restoration routes per load.
pub fn random_network(rng: &mut impl Rng) -> Generated {
    let mut g = Generated::default();
    let n = rng.gen_range(2..=3);
    for f in 1..=n {
        let k = rng.gen_range(2..=8);
        add_feeder(&mut g, rng, f, k);
    }
    let mut pairs: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    if n == 3 && rng.gen_bool(0.5) {
        pairs.push((0, 2));
    }
    if rng.gen_bool(0.5) {
        pairs.push((0, 1));
    }
    let mut ties: Vec<(String, usize, String, usize, String)> = Vec::new();
    for (t, (a, b)) in pairs.into_iter().enumerate() {
        let ea = g.feeders[a].segments.choose(rng).unwrap().clone();
        let eb = g.feeders[b].segments.choose(rng).unwrap().clone();
        if ties.iter().any(|x| (x.2 == ea && x.4 == eb) || (x.2 == eb && x.4 == ea)) {
            continue;
        }
        let id = format!("TIE{}", t + 1);
        g.switches.push(unit(&id, SwitchKind::TIE, &ea, &eb));
        ties.push((id, a, ea, b, eb));
    }
    for (fi, feeder) in g.feeders.iter().enumerate() {
        for seg in &feeder.segments {
            let load = g.loads.iter().find(|l| &l.segment == seg).unwrap().id.clone();
            let mut routes = Vec::new();
            for (id, a, ea, b, eb) in &ties {
                let (near, far, far_end) = if *a == fi {
                    (ea, *b, eb)
                } else if *b == fi {
                    (eb, *a, ea)
                } else {
                    continue;
                };
                let mut path = feeder.walk(seg, near);
                path.push(id.clone());
                let mut up = g.feeders[far].path_to(far_end);
                up.reverse();
                path.extend(up);
                routes.push(RestorationRoute {
                    source: g.feeders[far].source.clone(),
                    path,
                });
            }
            routes.shuffle(rng);
            routes.truncate(2);
            if !routes.is_empty() && rng.gen_bool(0.8) {
                g.routes.insert(load, routes);
            }
        }
    }
    g
}

/// Load served per source with the normal switch positions.
pub fn normal_served(g: &Generated) -> BTreeMap<String, u64> {
    g.feeders
        .iter()
        .map(|f| {
            let kw = g
                .loads
                .iter()
                .filter(|l| f.segments.contains(&l.segment))
                .map(|l| l.demand_kw)
                .sum();
            (f.source.clone(), kw)
        })
        .collect()
}

/// Turns a generated network into a validated utility. Capacities range
/// from exactly the normal load up to twice it.
pub fn utility(g: &Generated, rng: &mut impl Rng) -> Utility {
    let served = normal_served(g);
    let file = TopologyFile {
        sources: g
            .feeders
            .iter()
            .map(|f| {
                let s = served[&f.source];
                let cap = if rng.gen_bool(0.2) { s } else { s + rng.gen_range(0..=s) };
                SourceDecl {
                    id: f.source.clone(),
                    name: String::new(),
                    capacity_kw: Some(cap),
                    bus: f.bus.clone(),
                }
            })
            .collect(),
        segments: g.segments.clone(),
        switches: g.switches.clone(),
        loads: g.loads.clone(),
        routes: g.routes.clone(),
        teams: Vec::new(),
        spares: Vec::new(),
        protection: None,
        protection_overrides: BTreeMap::new(),
    };
    build_utility(file).expect("generated utility is valid")
}

/// A single permanent fault on a random feeder segment, sometimes with an
/// agent failure.
pub fn random_scenario(g: &Generated, rng: &mut impl Rng, with_failure: bool) -> Scenario {
    let segs: Vec<&String> = g.feeders.iter().flat_map(|f| f.segments.iter()).collect();
    let tick = rng.gen_range(1..=8);
    let mut agent_failures = Vec::new();
    if with_failure && rng.gen_bool(0.5) {
        let sw = g.switches.choose(rng).unwrap();
        agent_failures.push(AgentFailure {
            tick: rng.gen_range(tick..tick + 30),
            agent: sw.id.clone(),
        });
    }
    Scenario {
        faults: vec![FaultSpec {
            tick,
            segment: (*segs.choose(rng).unwrap()).clone(),
            kind: FaultKind::Permanent,
        }],
        agent_failures,
        tick_budget: 600,
        seed: rng.gen(),
    }
}

/// Segments reachable from each source bus over closed switches, by source.
pub fn energized(
    buses: &BTreeMap<String, String>,
    switches: &[SwitchingUnit],
    closed: impl Fn(&str) -> bool,
) -> BTreeMap<String, BTreeSet<String>> {
    let mut out = BTreeMap::new();
    for (src, bus) in buses {
        let mut seen = BTreeSet::from([bus.clone()]);
        let mut queue = VecDeque::from([bus.clone()]);
        while let Some(s) = queue.pop_front() {
            for sw in switches.iter().filter(|sw| closed(&sw.id)) {
                let other = if sw.ends[0] == s {
                    &sw.ends[1]
                } else if sw.ends[1] == s {
                    &sw.ends[0]
                } else {
                    continue;
                };
                if seen.insert(other.clone()) {
                    queue.push_back(other.clone());
                }
            }
        }
        out.insert(src.clone(), seen);
    }
    out
}

/// True when the closed switches form a forest with at most one bus per tree.
pub fn is_radial(
    segments: &[Segment],
    buses: &BTreeSet<String>,
    switches: &[SwitchingUnit],
    closed: impl Fn(&str) -> bool,
) -> bool {
    let index: BTreeMap<&str, usize> = segments.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut root: Vec<usize> = (0..segments.len()).collect();
    fn find(root: &mut [usize], mut x: usize) -> usize {
        while root[x] != x {
            root[x] = root[root[x]];
            x = root[x];
        }
        x
    }
    for sw in switches.iter().filter(|sw| closed(&sw.id)) {
        let a = find(&mut root, index[sw.ends[0].as_str()]);
        let b = find(&mut root, index[sw.ends[1].as_str()]);
        if a == b {
            return false;
        }
        root[a] = b;
    }
    let mut trees = BTreeSet::new();
    buses.iter().all(|b| trees.insert(find(&mut root, index[b.as_str()])))
}

pub fn closed_fn(states: &BTreeMap<String, Position>) -> impl Fn(&str) -> bool + '_ {
    move |id| states.get(id) == Some(&Position::Closed)
}
