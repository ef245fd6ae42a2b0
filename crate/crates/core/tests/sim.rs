use flisr_core::config::Utility;
use flisr_core::flisr::{Outcome, SpareSpec};
use flisr_core::sim::{
    exit_code, run, AgentFailure, EventKind, FaultKind, FaultSpec, RunOutput, RunStatus, Scenario, SimConfig, SimError,
};

fn fault_at_s11() -> Scenario {
    Scenario {
        faults: vec![FaultSpec {
            tick: 5,
            segment: "S11".into(),
            kind: FaultKind::Permanent,
        }],
        agent_failures: Vec::new(),
        tick_budget: 200,
        seed: 7,
    }
}

fn milestone_names(out: &RunOutput) -> Vec<&str> {
    out.milestones().filter_map(|e| e.milestone()).collect()
}

#[test]
fn empty_scenario_only_samples_and_exits_cleanly() {
    let s = Scenario {
        faults: Vec::new(),
        agent_failures: Vec::new(),
        tick_budget: 20,
        seed: 3,
    };
    let out = run(&Utility::reference(), &s, &SimConfig::default()).unwrap();
    let kinds: std::collections::BTreeSet<EventKind> = out
        .events
        .iter()
        .filter(|e| e.milestone() != Some("team-formed"))
        .map(|e| e.kind)
        .collect();
    assert_eq!(kinds, [EventKind::Sample].into());
    assert_eq!(out.status, RunStatus::BudgetExhausted);
    assert_eq!(out.report.outcome, Outcome::NoFault);
    assert_eq!(exit_code(&out), 0);
}

#[test]
fn log_starts_with_a_header_carrying_the_seed() {
    let out = run(&Utility::reference(), &fault_at_s11(), &SimConfig::default()).unwrap();
    let first = out.jsonl().lines().next().unwrap().to_string();
    let header: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(header["header"]["seed"], 7);
    assert_eq!(header["header"]["latency"], 1);
    let cfg = SimConfig {
        seed: Some(99),
        ..SimConfig::default()
    };
    let out = run(&Utility::reference(), &fault_at_s11(), &cfg).unwrap();
    assert!(out.jsonl().starts_with(r#"{"header":{"seed":99"#));
}

#[test]
fn messages_arrive_after_the_configured_latency() {
    for latency in [1, 2, 4] {
        let cfg = SimConfig {
            latency,
            ..SimConfig::default()
        };
        let out = run(&Utility::reference(), &fault_at_s11(), &cfg).unwrap();
        assert_eq!(out.report.outcome, Outcome::Restored, "latency {latency}");
        let sends: std::collections::BTreeMap<u64, u64> = out
            .events
            .iter()
            .filter(|e| e.kind == EventKind::MessageSend)
            .map(|e| (e.detail["id"].as_u64().unwrap(), e.t))
            .collect();
        for e in out.events.iter().filter(|e| e.kind == EventKind::MessageDeliver) {
            assert_eq!(e.t, sends[&e.detail["id"].as_u64().unwrap()] + latency);
        }
    }
}

#[test]
fn zero_latency_and_zero_budget_are_rejected() {
    let u = Utility::reference();
    let cfg = SimConfig {
        latency: 0,
        ..SimConfig::default()
    };
    assert_eq!(run(&u, &fault_at_s11(), &cfg).unwrap_err(), SimError::ZeroLatency);
    let cfg = SimConfig {
        tick_budget: Some(0),
        ..SimConfig::default()
    };
    assert_eq!(run(&u, &fault_at_s11(), &cfg).unwrap_err(), SimError::ZeroBudget);
}

#[test]
fn unknown_references_are_rejected() {
    let u = Utility::reference();
    let mut s = fault_at_s11();
    s.faults[0].segment = "S99".into();
    assert_eq!(run(&u, &s, &SimConfig::default()).unwrap_err(), SimError::UnknownSegment("S99".into()));
    let mut s = fault_at_s11();
    s.agent_failures.push(AgentFailure {
        tick: 1,
        agent: "Nobody".into(),
    });
    assert_eq!(run(&u, &s, &SimConfig::default()).unwrap_err(), SimError::UnknownAgent("Nobody".into()));
}

fn query_tick(u: &Utility) -> u64 {
    let out = run(u, &fault_at_s11(), &SimConfig::default()).unwrap();
    let t = out.milestones().find(|e| e.milestone() == Some("query")).unwrap().t;
    t
}

fn fail_ros11_at(u: &Utility, tick: u64) -> RunOutput {
    let mut s = fault_at_s11();
    s.agent_failures.push(AgentFailure {
        tick,
        agent: "ROS11".into(),
    });
    run(u, &s, &SimConfig::default()).unwrap()
}

#[test]
fn messages_to_a_failed_agent_are_dropped() {
    let u = Utility::reference();
    let t = query_tick(&u);
    let out = fail_ros11_at(&u, t + 1);
    let dropped = out
        .events
        .iter()
        .find(|e| e.kind == EventKind::MessageDeliver && e.actor == "ROS11")
        .expect("query delivery logged");
    assert_eq!(dropped.detail["dropped"], true);
    assert!(out.events.iter().any(|e| e.kind == EventKind::AgentFailed && e.actor == "ROS11"));
}

#[test]
fn losing_a_feeder_switch_without_a_spare_isolates_at_the_breaker() {
    let u = Utility::reference();
    let out = fail_ros11_at(&u, query_tick(&u) + 1);
    let names = milestone_names(&out);
    assert!(names.contains(&"reformation"));
    let isolated = out.milestones().find(|e| e.milestone() == Some("isolated")).unwrap();
    assert_eq!(isolated.detail["at_breaker"], "CB1");
    assert_eq!(out.report.outcome, Outcome::Degraded);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn losing_a_feeder_switch_with_a_spare_requeries_through_it() {
    let u = Utility::reference().with_spares(vec![SpareSpec {
        id: "ROS11-spare".into(),
        device: "ROS11".into(),
        team: None,
    }]);
    let out = fail_ros11_at(&u, query_tick(&u) + 1);
    let reform = out
        .milestones()
        .find(|e| e.milestone() == Some("reformation") && e.detail["task_team"] == "isolation:Feeder1")
        .expect("isolation team reformed");
    assert_eq!(reform.detail["replacement"], "ROS11-spare");
    let requery = out
        .events
        .iter()
        .any(|e| e.kind == EventKind::MessageSend && e.detail["dst"] == "ROS11-spare" && e.detail["kind"] == "Query");
    assert!(requery);
    assert_eq!(out.report.outcome, Outcome::Restored);
    assert_eq!(out.report.energization["Load3"].as_deref(), Some("Zone3"));
    assert_eq!(exit_code(&out), 0);
}

#[test]
fn report_timeline_matches_logged_milestones() {
    let out = run(&Utility::reference(), &fault_at_s11(), &SimConfig::default()).unwrap();
    let logged: Vec<(u64, String)> = out.milestones().map(|e| (e.t, e.milestone().unwrap().into())).collect();
    let timeline: Vec<(u64, String)> = out.report.timeline.iter().map(|m| (m.t, m.name.clone())).collect();
    assert_eq!(logged, timeline);
    assert_eq!(milestone_names(&out).last(), Some(&"flisr-complete"));
}
