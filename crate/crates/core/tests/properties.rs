//! Property tests for the invariants of each module.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use flisr_core::bdi::{DataContext, GoalState, NodeKind, ProcessInstance, ProcessNode, TaskCtx, TaskStatus};
use flisr_core::config::Utility;
use flisr_core::flisr::{build_org, restoration_roles, LoadStatus, SpareSpec};
use flisr_core::grid::{apply_action, energization, Position, SwitchStates};
use flisr_core::ied::{ProtectionConfig, SwitchIed};
use flisr_core::sim::{run, EventKind, SimConfig};
use flisr_core::teams::Role;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---- bdi ----

#[derive(Debug, Clone)]
enum Shape {
    Leaf { extra: u32, ok: bool },
    Seq(Vec<Shape>),
    Par(Vec<Shape>),
    Choice(Vec<(Shape, bool)>),
}

fn shape() -> impl Strategy<Value = Shape> {
    let leaf = (0u32..3, prop::bool::weighted(0.6)).prop_map(|(extra, ok)| Shape::Leaf { extra, ok });
    leaf.prop_recursive(4, 32, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(Shape::Seq),
            prop::collection::vec(inner.clone(), 1..4).prop_map(Shape::Par),
            prop::collection::vec((inner, prop::bool::weighted(0.8)), 1..4).prop_map(Shape::Choice),
        ]
    })
}

type Node = ProcessNode<Vec<String>>;

fn build(s: &Shape, next: &mut usize) -> Node {
    *next += 1;
    let id = format!("n{next}");
    match s {
        Shape::Leaf { extra, ok } => {
            let (extra, ok, name) = (*extra, *ok, id.clone());
            ProcessNode::task(id, move |c: &mut TaskCtx<'_, Vec<String>>| {
                c.world.push(name.clone());
                let key = format!("steps.{name}");
                let n: u32 = c.context.read(&key).unwrap_or(0);
                if n < extra {
                    c.context.put(&key, &(n + 1));
                    return Ok(TaskStatus::Executing);
                }
                c.context.remove(&key);
                Ok(if ok { TaskStatus::Passed } else { TaskStatus::Failed })
            })
        }
        Shape::Seq(c) => ProcessNode::sequence(id, c.iter().map(|x| build(x, next)).collect()),
        Shape::Par(c) => ProcessNode::parallel(id, c.iter().map(|x| build(x, next)).collect()),
        Shape::Choice(c) => ProcessNode::choice(
            id,
            c.iter()
                .map(|(x, on)| if *on { build(x, next) } else { build(x, next).when(|_| false) })
                .collect(),
        ),
    }
}

fn parents(n: &Node, out: &mut Vec<(String, NodeKind, Vec<String>)>) {
    out.push((
        n.id().to_string(),
        n.kind(),
        n.children().iter().map(|c| c.id().to_string()).collect(),
    ));
    for c in n.children() {
        parents(c, out);
    }
}

fn has_choice(n: &Node) -> bool {
    n.kind() == NodeKind::Choice || n.children().iter().any(has_choice)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn executing_children_respect_their_parents(s in shape()) {
        let model = build(&s, &mut 0);
        let mut nodes = Vec::new();
        parents(&model, &mut nodes);
        let mut inst = ProcessInstance::new("p", &model, DataContext::new()).unwrap();
        let mut world = Vec::new();
        inst.start();
        loop {
            for (id, kind, children) in &nodes {
                let running: Vec<&String> = children
                    .iter()
                    .filter(|c| inst.status(c) == Some(GoalState::Executing))
                    .collect();
                if !running.is_empty() {
                    prop_assert_eq!(inst.status(id), Some(GoalState::Executing), "parent of {:?}", running);
                }
                if *kind == NodeKind::Sequence {
                    prop_assert!(running.len() <= 1, "{} runs {:?}", id, running);
                }
            }
            if inst.run_slice(&mut world) == 0 {
                break;
            }
        }
    }

    #[test]
    fn terminal_states_never_change_without_plan_retry(s in shape()) {
        let model = build(&s, &mut 0);
        prop_assume!(!has_choice(&model));
        let mut inst = ProcessInstance::new("p", &model, DataContext::new()).unwrap();
        inst.execute_node(model.id(), &mut Vec::new()).unwrap();
        let mut done: BTreeSet<&str> = BTreeSet::new();
        for t in inst.trace() {
            prop_assert!(!done.contains(t.node.as_str()), "{} changed after terminal", t.node);
            if t.state.is_terminal() {
                done.insert(&t.node);
            }
        }
    }

    #[test]
    fn equal_models_produce_equal_traces(s in shape()) {
        let model = build(&s, &mut 0);
        let mut a = ProcessInstance::new("p", &model, DataContext::new()).unwrap();
        let mut b = ProcessInstance::new("p", &model, DataContext::new()).unwrap();
        let (mut wa, mut wb) = (Vec::new(), Vec::new());
        a.execute_node(model.id(), &mut wa).unwrap();
        b.execute_node(model.id(), &mut wb).unwrap();
        prop_assert_eq!(a.trace(), b.trace());
        prop_assert_eq!(wa, wb);
    }

    #[test]
    fn choice_fails_only_after_every_applicable_plan(plans in prop::collection::vec((any::<bool>(), any::<bool>()), 1..6)) {
        let model: Node = ProcessNode::choice(
            "c",
            plans
                .iter()
                .enumerate()
                .map(|(i, (on, ok))| {
                    let ok = *ok;
                    let t = ProcessNode::task(format!("p{i}"), move |_: &mut TaskCtx<'_, Vec<String>>| {
                        Ok(if ok { TaskStatus::Passed } else { TaskStatus::Failed })
                    });
                    if *on { t } else { t.when(|_| false) }
                })
                .collect(),
        );
        let mut inst = ProcessInstance::new("p", &model, DataContext::new()).unwrap();
        let state = inst.execute_node("c", &mut Vec::new()).unwrap();
        let applicable: Vec<usize> = (0..plans.len()).filter(|&i| plans[i].0).collect();
        let tried: Vec<String> = inst.plan_attempts().iter().map(|a| a.plan.clone()).collect();
        match applicable.iter().position(|&i| plans[i].1) {
            Some(k) => {
                prop_assert_eq!(state, GoalState::Passed);
                prop_assert_eq!(tried, applicable[..=k].iter().map(|i| format!("p{i}")).collect::<Vec<_>>());
            }
            None => {
                prop_assert_eq!(state, GoalState::Failed);
                prop_assert_eq!(tried, applicable.iter().map(|i| format!("p{i}")).collect::<Vec<_>>());
            }
        }
    }
}

// ---- teams ----

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn reformation_keeps_bindings_sound_and_stable(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = Utility::reference();
        let switches: Vec<String> = base.topology.switches().iter().map(|s| s.id.clone()).collect();
        let spares = (0..rng.gen_range(0..4))
            .map(|i| {
                let device = switches[rng.gen_range(0..switches.len())].clone();
                SpareSpec { id: format!("spare{i}"), device, team: None }
            })
            .collect();
        let u = base.with_spares(spares);
        let mut utility = build_org(&u.topology, &u.org).unwrap();
        let roles: Vec<Role> = restoration_roles(&u.topology);
        let first = utility.org.form_task_team(&utility.root, &roles).unwrap();
        prop_assert_eq!(&first, &utility.org.form_task_team(&utility.root, &roles).unwrap());
        let mut tt = first;
        for _ in 0..rng.gen_range(1..6) {
            let bound: Vec<String> = tt.bindings.values().cloned().collect();
            if bound.is_empty() {
                break;
            }
            let failed = bound[rng.gen_range(0..bound.len())].clone();
            utility.org.mark_failed(&failed).unwrap();
            let (next, _) = utility.org.reform_task_team(&tt, &failed).unwrap();
            for (slot, p) in &tt.bindings {
                if p != &failed {
                    prop_assert_eq!(next.bindings.get(slot), Some(p), "{} moved", slot);
                }
            }
            for (slot, p) in &next.bindings {
                let role = next.roles.iter().find(|r| r.name == slot.role).unwrap();
                let caps = &utility.org.performer(p).unwrap().capabilities;
                prop_assert!(role.goals.is_subset(caps), "{} lacks {:?}", p, role.goals);
                prop_assert!(utility.org.is_alive(p));
            }
            let performers: Vec<&String> = next.bindings.values().collect();
            let unique: BTreeSet<&String> = performers.iter().copied().collect();
            prop_assert_eq!(unique.len(), performers.len());
            tt = next;
        }
    }
}

// ---- grid ----

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn opening_never_energizes_a_load(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_network(&mut rng);
        let u = common::utility(&g, &mut rng);
        let topo = &u.topology;
        let mut states = SwitchStates::normal(topo);
        for sw in topo.switches() {
            if rng.gen_bool(0.3) {
                let flip = if states.is_closed(&sw.id) { Position::Open } else { Position::Closed };
                states.set(&sw.id, flip).unwrap();
            }
        }
        let before = energization(topo, &states);
        for sw in topo.switches().iter().filter(|s| states.is_closed(&s.id)) {
            let (after_states, _) = apply_action(topo, &states, &sw.id, Position::Open).unwrap();
            let after = energization(topo, &after_states);
            for l in topo.loads() {
                if after.is_fed(&l.id) {
                    prop_assert!(before.is_fed(&l.id), "opening {} fed {}", sw.id, l.id);
                }
            }
        }
    }
}

// ---- ied ----

fn ln_rank(path: &str) -> usize {
    ["TCTR", "PIOC", "PTRC", "CSWI", "XCBR"]
        .iter()
        .position(|ln| path.split('.').nth(2).is_some_and(|p| p.starts_with(ln)))
        .expect("known logical node")
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn pipeline_updates_follow_ln_order(currents in prop::collection::vec(0.0f64..2000.0, 1..30), persistence in 1u32..4) {
        let cfg = ProtectionConfig { trip_persistence: persistence, ..ProtectionConfig::default() };
        let mut ied = SwitchIed::new("CB1", Position::Closed, cfg);
        for (t, a) in currents.iter().enumerate() {
            let out = ied.ln_pipeline_step(*a, t as u64 + 1);
            let ranks: Vec<usize> = out.updates.iter().map(|(p, _)| ln_rank(p)).collect();
            prop_assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "order {:?}", ranks);
        }
    }

    #[test]
    fn currents_at_or_below_threshold_never_trip(fractions in prop::collection::vec(0.0f64..=1.0, 1..40)) {
        let cfg = ProtectionConfig::default();
        let mut ied = SwitchIed::new("CB1", Position::Closed, cfg);
        for (t, f) in fractions.iter().enumerate() {
            let out = ied.ln_pipeline_step(f * cfg.threshold_a, t as u64 + 1);
            prop_assert!(!out.trip && !out.opened);
            prop_assert_eq!(ied.position(), Position::Closed);
            prop_assert!(!ied.detected());
        }
    }
}

// ---- sim and flisr ----

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn simulated_runs_keep_log_invariants(seed in any::<u64>(), latency in 1u64..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_network(&mut rng);
        let u = common::utility(&g, &mut rng);
        let s = common::random_scenario(&g, &mut rng, true);
        let cfg = SimConfig { latency, ..SimConfig::default() };
        let out = run(&u, &s, &cfg).unwrap();

        // total order and unique seq
        prop_assert!(out.events.windows(2).all(|w| (w[0].t, w[0].seq) < (w[1].t, w[1].seq)));

        // causality and per-channel FIFO
        let mut sends: BTreeMap<u64, (u64, String, String)> = BTreeMap::new();
        let mut channel_sends: BTreeMap<(String, String), Vec<u64>> = BTreeMap::new();
        let mut channel_delivers: BTreeMap<(String, String), Vec<u64>> = BTreeMap::new();
        for e in &out.events {
            match e.kind {
                EventKind::MessageSend => {
                    let id = e.detail["id"].as_u64().unwrap();
                    let dst = e.detail["dst"].as_str().unwrap().to_string();
                    prop_assert_eq!(e.detail["deliver"].as_u64().unwrap(), e.t + latency);
                    sends.insert(id, (e.t, e.actor.clone(), dst.clone()));
                    channel_sends.entry((e.actor.clone(), dst)).or_default().push(id);
                }
                EventKind::MessageDeliver => {
                    let id = e.detail["id"].as_u64().unwrap();
                    let (sent, src, dst) = sends.get(&id).cloned().expect("deliver without send");
                    prop_assert!(e.t > sent);
                    prop_assert_eq!(&dst, &e.actor);
                    channel_delivers.entry((src, dst)).or_default().push(id);
                }
                _ => {}
            }
        }
        for (ch, got) in &channel_delivers {
            let sent = &channel_sends[ch];
            prop_assert_eq!(got.as_slice(), &sent[..got.len()], "channel {:?}", ch);
        }

        // no isolation command before the trip
        let trip = out.events.iter().position(|e| e.kind == EventKind::Trip);
        let first_command = out.events.iter().position(|e| e.milestone() == Some("command"));
        if let Some(c) = first_command {
            prop_assert!(trip.is_some_and(|t| t < c));
        }

        // every timeline milestone is in the log
        let logged: Vec<(u64, String)> = out
            .milestones()
            .map(|e| (e.t, e.milestone().unwrap().to_string()))
            .collect();
        let timeline: Vec<(u64, String)> = out.report.timeline.iter().map(|m| (m.t, m.name.clone())).collect();
        prop_assert_eq!(logged, timeline);

        // detections reported by queried switches match the fault current path
        let fault = &s.faults[0].segment;
        let feeder = g.feeders.iter().find(|f| f.segments.contains(fault)).unwrap();
        let path: BTreeSet<String> = feeder.path_to(fault).into_iter().collect();
        for (sw, d) in &out.report.detection.0 {
            prop_assert_eq!(d.detected, path.contains(sw), "{} reported {}", sw, d.detected);
        }

        // an unserved load has tried every configured route
        for o in out.report.restoration.iter().filter(|o| o.status == LoadStatus::Unserved) {
            let routes = u.topology.restoration_routes(&o.load).map(<[_]>::len).unwrap_or(0);
            prop_assert_eq!(o.attempts.len(), routes, "{}", o.load);
        }
    }
}
