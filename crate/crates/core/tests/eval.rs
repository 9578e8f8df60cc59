use corridor_rl::config::Config;
use corridor_rl::eval::{
    evaluate, read_results, render_results, sweep, write_results, EvalConfig, ResultRow, SweepAxis,
};
use corridor_rl::mdp::{Action, N_ACTIONS};
use corridor_rl::policy::{ConstantPolicy, RandomPolicy, VerticalAvoidancePolicy};

fn base(episodes: usize, seed: u64) -> EvalConfig {
    let mut c = Config::desk().eval_config(seed);
    c.episodes = episodes;
    c
}

fn values(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn unequipped_fleet_matches_its_baseline_exactly() {
    let mut c = base(6, 3);
    c.scenario.p_equip = 0.0;
    let r = evaluate(&RandomPolicy, &c).unwrap();
    assert_eq!(r.logic.nmacs, r.baseline.nmacs);
    assert_eq!(r.logic.flights, r.baseline.flights);
    assert!(r.baseline.nmacs > 0);
    assert_eq!(r.risk_ratio, Some(1.0));
    assert_eq!(r.logic.agent_steps, 0);
}

#[test]
fn losing_communication_weakens_the_rule_policy() {
    let reports = sweep(
        &VerticalAvoidancePolicy::default(),
        SweepAxis::PComm,
        &values(&["1.0", "0.0"]),
        &base(20, 5),
    )
    .unwrap();
    let full = reports[0].1.risk_ratio.unwrap();
    let none = reports[1].1.risk_ratio.unwrap();
    assert!(full < 0.5, "rule policy with full comm: {full}");
    assert!(none > full, "p_comm 0 gave {none}, p_comm 1 gave {full}");
}

#[test]
fn random_policy_spreads_actions_evenly() {
    let mut c = base(4, 7);
    let mut counts = [0u64; N_ACTIONS];
    let mut seed = 7;
    while counts.iter().sum::<u64>() < 100_000 {
        c.seed = seed;
        let r = evaluate(&RandomPolicy, &c).unwrap();
        for (n, k) in counts.iter_mut().zip(r.logic.action_counts) {
            *n += k;
        }
        seed += 1;
    }
    let total = counts.iter().sum::<u64>() as f64;
    for n in counts {
        let p = n as f64 / total;
        assert!((p - 1.0 / 6.0).abs() < 0.01, "{counts:?}");
    }
}

#[test]
fn evaluation_is_deterministic() {
    let c = base(4, 11);
    let a = evaluate(&RandomPolicy, &c).unwrap();
    let b = evaluate(&RandomPolicy, &c).unwrap();
    assert_eq!(a.logic, b.logic);
    assert_eq!(a.baseline, b.baseline);
    let d = evaluate(&ConstantPolicy(Action::MaintainAltitude), &c).unwrap();
    assert_eq!(a.baseline, d.baseline);
}

#[test]
fn single_value_sweep_equals_evaluate() {
    let c = base(3, 13);
    let direct = evaluate(&RandomPolicy, &c).unwrap();
    let swept = sweep(
        &RandomPolicy,
        SweepAxis::FleetSize,
        &values(&[&c.scenario.fleet_size.to_string()]),
        &c,
    )
    .unwrap();
    assert_eq!(swept.len(), 1);
    assert_eq!(swept[0].1.logic, direct.logic);
    assert_eq!(swept[0].1.risk_ratio, direct.risk_ratio);
}

#[test]
fn bad_sweep_values_are_rejected() {
    let c = base(1, 0);
    assert!(SweepAxis::PComm.apply(&c, "1.5").is_err());
    assert!(SweepAxis::FleetSize.apply(&c, "many").is_err());
    assert!(SweepAxis::Surveillance.apply(&c, "radar").is_err());
    assert!(sweep(&RandomPolicy, SweepAxis::PComm, &[], &c).is_err());
}

#[test]
fn lone_aircraft_gives_no_ratio() {
    let mut c = base(2, 17);
    c.scenario.fleet_size = 1;
    let r = evaluate(&ConstantPolicy(Action::MaintainSpeed), &c).unwrap();
    assert_eq!(r.baseline.nmacs, 0);
    assert_eq!(r.risk_ratio, None);
}

#[test]
fn results_table_round_trips() {
    let c = base(2, 19);
    let reports = sweep(&RandomPolicy, SweepAxis::PEquip, &values(&["1.0", "0.5"]), &c).unwrap();
    let rows: Vec<ResultRow> = reports
        .iter()
        .flat_map(|(v, r)| ResultRow::pair("p_equip", v, r))
        .collect();
    assert_eq!(rows.len(), 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    write_results(&path, &rows).unwrap();
    let back = read_results(&path).unwrap();
    assert_eq!(back, rows);
    let text = render_results(&back);
    assert!(text.contains("p_equip"));
    assert_eq!(rows[1].arm, "baseline");
    assert_eq!(rows[1].risk_ratio, None);
}
