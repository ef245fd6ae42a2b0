//! The three-zone reference utility used by the bundled scenario.
//!
//! Each zone substation `ZoneN` feeds bus `BN`; its feeder runs
//! `CBN - SN1 - ROSN1 - SN2 - ROSN2 - SN3`. TIE121 joins S12 and S22,
//! TIE132 joins S13 and S33. Feeder 1 carries Load1..Load3; the other
//! feeders carry LoadN1..LoadN3.

use std::collections::BTreeMap;

use super::{Load, RestorationRoute, Segment, SwitchKind, SwitchingUnit, TopologySpec, ZoneSubstation};

const DEMANDS: [[u64; 3]; 3] = [[300, 200, 250], [200, 300, 250], [250, 200, 300]];

pub fn load_id(feeder: usize, k: usize) -> String {
    if feeder == 1 {
        format!("Load{k}")
    } else {
        format!("Load{feeder}{k}")
    }
}

pub fn three_zone() -> TopologySpec {
    let mut spec = TopologySpec::default();
    for f in 1..=3usize {
        let bus = format!("B{f}");
        spec.segments.push(Segment { id: bus.clone() });
        let feeder_demand: u64 = DEMANDS[f - 1].iter().sum();
        spec.sources.push(ZoneSubstation {
            id: format!("Zone{f}"),
            name: format!("Zone Substation {f}"),
            capacity_kw: 2 * feeder_demand,
            bus: bus.clone(),
        });
        for k in 1..=3usize {
            let seg = format!("S{f}{k}");
            spec.segments.push(Segment { id: seg.clone() });
            spec.loads.push(Load {
                id: load_id(f, k),
                demand_kw: DEMANDS[f - 1][k - 1],
                segment: seg,
            });
        }
        spec.switches.push(switch(&format!("CB{f}"), SwitchKind::CB, &bus, &format!("S{f}1")));
        spec.switches.push(switch(&format!("ROS{f}1"), SwitchKind::ROS, &format!("S{f}1"), &format!("S{f}2")));
        spec.switches.push(switch(&format!("ROS{f}2"), SwitchKind::ROS, &format!("S{f}2"), &format!("S{f}3")));
    }
    spec.switches.push(switch("TIE121", SwitchKind::TIE, "S12", "S22"));
    spec.switches.push(switch("TIE132", SwitchKind::TIE, "S13", "S33"));

    let route = |source: &str, path: &[&str]| RestorationRoute {
        source: source.to_string(),
        path: path.iter().map(|s| s.to_string()).collect(),
    };
    let mut routes = BTreeMap::new();
    routes.insert("Load2".to_string(), vec![route("Zone2", &["TIE121", "ROS21", "CB2"])]);
    routes.insert("Load3".to_string(), vec![route("Zone3", &["TIE132", "ROS32", "ROS31", "CB3"])]);
    routes.insert("Load22".to_string(), vec![route("Zone1", &["TIE121", "ROS11", "CB1"])]);
    routes.insert("Load23".to_string(), vec![route("Zone1", &["ROS22", "TIE121", "ROS11", "CB1"])]);
    routes.insert("Load33".to_string(), vec![route("Zone1", &["TIE132", "ROS12", "ROS11", "CB1"])]);
    routes.insert(
        "Load32".to_string(),
        vec![route("Zone1", &["ROS32", "TIE132", "ROS12", "ROS11", "CB1"])],
    );
    spec.routes = routes;
    spec
}

fn switch(id: &str, kind: SwitchKind, a: &str, b: &str) -> SwitchingUnit {
    SwitchingUnit {
        id: id.to_string(),
        kind,
        normal: kind.normal_position(),
        ends: [a.to_string(), b.to_string()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Position, Topology};

    #[test]
    fn reference_utility_is_valid() {
        let t = Topology::new(three_zone()).unwrap();
        assert_eq!(t.sources().len(), 3);
        assert_eq!(t.switches().len(), 11);
        assert_eq!(t.loads().len(), 9);
        assert!(t.sources().iter().all(|s| s.capacity_kw == 1500));
        assert_eq!(
            t.switches().iter().filter(|s| s.normal == Position::Open).count(),
            2
        );
    }
}
