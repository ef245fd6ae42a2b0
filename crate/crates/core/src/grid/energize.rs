use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{SwitchStates, Topology};

/// Which source feeds each load under a switch configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Energization {
    /// Load id to feeding source id.
    pub fed: BTreeMap<String, Option<String>>,
    /// Segment id to feeding source id.
    pub segments: BTreeMap<String, Option<String>>,
    /// False iff a closed path joins two sources.
    pub radial: bool,
}

impl Energization {
    pub fn source_of(&self, load: &str) -> Option<&str> {
        self.fed.get(load).and_then(|s| s.as_deref())
    }

    pub fn segment_source(&self, segment: &str) -> Option<&str> {
        self.segments.get(segment).and_then(|s| s.as_deref())
    }

    pub fn is_fed(&self, load: &str) -> bool {
        self.source_of(load).is_some()
    }

    /// Total demand currently served by `source`.
    pub fn served_kw(&self, topo: &Topology, source: &str) -> u64 {
        topo.loads()
            .iter()
            .filter(|l| self.source_of(&l.id) == Some(source))
            .map(|l| l.demand_kw)
            .sum()
    }
}

/// Floods each source's bus through closed switches. A segment reached
/// from a second source keeps its first feeder and clears the radial flag.
pub fn energization(topo: &Topology, states: &SwitchStates) -> Energization {
    let n = topo.segments().len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut radial = true;
    for (si, _) in topo.sources().iter().enumerate() {
        let bus = topo.bus_idx(si);
        match owner[bus] {
            Some(o) if o != si => {
                radial = false;
                continue;
            }
            Some(_) => continue,
            None => owner[bus] = Some(si),
        }
        let mut queue = VecDeque::from([bus]);
        while let Some(s) = queue.pop_front() {
            for &(sw, o) in topo.adjacency(s) {
                if !states.is_closed(&topo.switches()[sw].id) {
                    continue;
                }
                match owner[o] {
                    None => {
                        owner[o] = Some(si);
                        queue.push_back(o);
                    }
                    Some(other) if other != si => radial = false,
                    Some(_) => {}
                }
            }
        }
    }
    let name = |o: Option<usize>| o.map(|si| topo.sources()[si].id.clone());
    let segments = topo
        .segments()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.clone(), name(owner[i])))
        .collect();
    let fed = topo
        .loads()
        .iter()
        .map(|l| {
            let seg = topo.seg_idx(&l.segment).expect("validated");
            (l.id.clone(), name(owner[seg]))
        })
        .collect();
    Energization { fed, segments, radial }
}

/// The source feeding `segment` and the closed switches from its bus down
/// to the segment, source end first. These are the switches that carry
/// current drawn at `segment`.
pub fn feeding_path(topo: &Topology, states: &SwitchStates, segment: &str) -> Option<(String, Vec<String>)> {
    let target = topo.seg_idx(segment)?;
    for (si, src) in topo.sources().iter().enumerate() {
        let bus = topo.bus_idx(si);
        let mut via: BTreeMap<usize, Option<(usize, usize)>> = BTreeMap::from([(bus, None)]);
        let mut queue = VecDeque::from([bus]);
        while let Some(s) = queue.pop_front() {
            if s == target {
                let mut path = Vec::new();
                let mut cur = s;
                while let Some(Some((sw, prev))) = via.get(&cur).copied() {
                    path.push(topo.switches()[sw].id.clone());
                    cur = prev;
                }
                path.reverse();
                return Some((src.id.clone(), path));
            }
            for &(sw, o) in topo.adjacency(s) {
                if states.is_closed(&topo.switches()[sw].id) && !via.contains_key(&o) {
                    via.insert(o, Some((sw, s)));
                    queue.push_back(o);
                }
            }
        }
    }
    None
}

/// Segments joined to `segment` through closed switches, `segment` included.
pub fn closed_component(topo: &Topology, states: &SwitchStates, segment: &str) -> BTreeSet<String> {
    let Some(start) = topo.seg_idx(segment) else {
        return BTreeSet::new();
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for &(sw, o) in topo.adjacency(s) {
            if states.is_closed(&topo.switches()[sw].id) && seen.insert(o) {
                queue.push_back(o);
            }
        }
    }
    seen.into_iter().map(|i| topo.segments()[i].id.clone()).collect()
}
