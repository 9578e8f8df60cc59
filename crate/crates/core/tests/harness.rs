use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::time::Duration;

use corridor_rl::config::Config;
use corridor_rl::harness::{
    actor_loop, derive_seed, learner_loop, restore_checkpoint, rollout_step, save_checkpoint, train, Control,
    HarnessState, LearnerSchedule, LockstepTrainer, ReplayBuffer, ScenarioSource, SnapshotCell, TrainConfig, TrainMode,
    STEPS_PER_ITERATION,
};
use corridor_rl::mdp::CorridorEnv;
use corridor_rl::sacd::{ActionMode, Observation, SacdAgent, Transition};
use corridor_rl::sim::{generate_network, AircraftType, FlightDemand, Scenario};
use corridor_rl::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tagged(id: u64) -> Transition {
    Transition {
        state: Observation::new(vec![id as f32], Vec::new()),
        action: 0,
        reward: 0.0,
        next_state: Observation::default(),
        done: false,
        worker: (id >> 32) as u32,
        seq: id,
    }
}

fn quick_config() -> TrainConfig {
    let mut t = Config::desk().train;
    t.agent.hidden = vec![16];
    t.batch_size = 32;
    t.warmup = 256;
    t.workers = 2;
    t.publish_every = 5;
    t
}

fn source(config: &TrainConfig) -> ScenarioSource {
    ScenarioSource {
        network: Arc::new(generate_network(&config.network, derive_seed(config.seed, &[u64::MAX - 3])).unwrap()),
        config: config.scenario.clone(),
        seed: config.seed,
    }
}

#[test]
fn sampling_is_uniform_over_contents() {
    let n = 1000u64;
    let buffer = ReplayBuffer::new(n as usize);
    buffer.push_many((0..n).map(tagged));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut counts = vec![0u64; n as usize];
    let draws = 100_000 / 512 + 1;
    for _ in 0..draws {
        for t in buffer.sample(512, &mut rng).unwrap().items {
            counts[t.seq as usize] += 1;
        }
    }
    let total = (draws * 512) as f64;
    let p = 1.0 / n as f64;
    let sigma = (total * p * (1.0 - p)).sqrt();
    let mean = total * p;
    let outside = counts
        .iter()
        .filter(|&&c| (c as f64 - mean).abs() > 3.0 * sigma)
        .count();
    // 3σ is exceeded by ~0.27% of ids under the binomial model
    assert!(outside <= 10, "{outside} ids outside 3 sigma");
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - mean).powi(2) / mean).sum();
    // chi-square with 999 dof: mean 999, sd ~44.7
    assert!(chi2 < 999.0 + 5.0 * 44.7, "chi2 {chi2}");
}

#[test]
fn concurrent_producers_lose_nothing() {
    let producers = 4u64;
    let per = 250_000u64;
    let buffer = ReplayBuffer::new((producers * per) as usize);
    std::thread::scope(|s| {
        for p in 0..producers {
            let buffer = &buffer;
            s.spawn(move || {
                for chunk in (0..per).collect::<Vec<_>>().chunks(100) {
                    buffer.push_many(chunk.iter().map(|&i| tagged((p << 32) | i)));
                }
            });
        }
    });
    assert_eq!(buffer.len() as u64, producers * per);
    assert_eq!(buffer.total_pushed(), producers * per);
    let mut seen: Vec<u64> = buffer.contents().iter().map(|t| t.seq).collect();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len() as u64, producers * per);
}

#[test]
fn concurrent_push_and_sample() {
    let buffer = ReplayBuffer::new(10_000);
    std::thread::scope(|s| {
        for p in 0..3u64 {
            let buffer = &buffer;
            s.spawn(move || {
                for i in 0..20_000u64 {
                    buffer.push(tagged((p << 32) | i));
                }
            });
        }
        let buffer = &buffer;
        s.spawn(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut sampled = 0;
            while sampled < 200 {
                if let Some(b) = buffer.sample(64, &mut rng) {
                    assert_eq!(b.len(), 64);
                    sampled += 1;
                }
            }
        });
    });
    assert_eq!(buffer.len(), 10_000);
    assert_eq!(buffer.total_pushed(), 60_000);
}

fn single_flight_scenario(config: &TrainConfig) -> Scenario {
    let network = generate_network(&config.network, 1).unwrap();
    Scenario {
        demands: vec![FlightDemand {
            id: 0,
            departure_s: 0.0,
            origin: 0,
            destination: 1,
            aircraft_type: AircraftType::Rotorcraft,
            comm: true,
            equipped: true,
            altitude_offset_ft: 0.0,
            lane: 1,
            cruise_kt: 40.0,
        }],
        network,
        seed: 0,
        fleet_size: 1,
        duration_s: 900.0,
        p_comm: 1.0,
        p_equip: 1.0,
    }
}

#[test]
fn one_aircraft_ten_steps_ten_transitions() {
    let config = quick_config();
    let scenario = single_flight_scenario(&config);
    let mut env = CorridorEnv::new(&scenario, config.env.clone(), 3).unwrap();
    let agent = SacdAgent::<f32>::new(config.agent.clone(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut seq = 0;
    // the first step releases the departure; no agent has acted yet
    let first = rollout_step(&mut env, &agent.actor, ActionMode::Sample, &mut rng, 0, &mut seq).unwrap();
    assert!(first.is_empty());
    assert_eq!(env.agents().len(), 1);
    let mut pushed = Vec::new();
    for _ in 0..10 {
        pushed.extend(rollout_step(&mut env, &agent.actor, ActionMode::Sample, &mut rng, 0, &mut seq).unwrap());
    }
    assert_eq!(pushed.len(), 10);
    assert_eq!(
        pushed.iter().map(|t| t.seq).collect::<Vec<_>>(),
        (0..10).collect::<Vec<_>>()
    );
}

#[test]
fn workers_push_every_transition_exactly_once() {
    let config = quick_config();
    let src = source(&config);
    let agent = SacdAgent::<f32>::new(config.agent.clone(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let snapshots = SnapshotCell::new(agent.actor.clone());
    let buffer = ReplayBuffer::new(1_000_000);
    let control = Control::new(4, Some(6_000), None, 0);
    let reports: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..4u32)
            .map(|w| {
                let (src, env, snapshots, buffer, control) = (&src, &config.env, &snapshots, &buffer, &control);
                s.spawn(move || actor_loop(w, src, env, snapshots, buffer, control, None))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let contents = buffer.contents();
    let mut per_worker: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for t in &contents {
        per_worker.entry(t.worker).or_default().push(t.seq);
    }
    assert!(per_worker.keys().all(|w| *w < 4));
    for r in &reports {
        let mut seqs = per_worker.get(&r.worker).cloned().unwrap_or_default();
        seqs.sort_unstable();
        assert_eq!(seqs, (0..r.transitions).collect::<Vec<_>>(), "worker {}", r.worker);
    }
    let total: u64 = reports.iter().map(|r| r.transitions).sum();
    assert_eq!(total, contents.len() as u64);
}

#[test]
fn workers_run_independent_episode_streams() {
    let config = quick_config();
    let src = source(&config);
    let a = src.episode(0, 0).unwrap().to_text();
    let b = src.episode(1, 0).unwrap().to_text();
    let again = src.episode(0, 0).unwrap().to_text();
    assert_ne!(a, b);
    assert_eq!(a, again);
    assert_ne!(src.env_seed(0, 0), src.env_seed(1, 0));
}

#[test]
fn lockstep_iterations_push_64_transitions_each() {
    let config = quick_config();
    let agent = SacdAgent::<f32>::new(config.agent.clone(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let mut t = LockstepTrainer::new(&config, agent, source(&config)).unwrap();
    for i in 1..=25u64 {
        t.collect_iteration().unwrap();
        assert_eq!(t.env_steps, i * STEPS_PER_ITERATION);
        assert_eq!(t.buffer.total_pushed(), i * STEPS_PER_ITERATION);
        assert_eq!(t.iterations(), i);
    }
}

#[test]
fn lockstep_training_counts_match_iterations() {
    let mut config = quick_config();
    config.mode = TrainMode::Lockstep;
    config.iterations = 12;
    config.learn_per_iteration = 2;
    config.warmup = 128;
    let (_, report) = train(&config, None).unwrap();
    assert_eq!(report.env_steps, 12 * STEPS_PER_ITERATION);
    assert_eq!(report.iterations(), 12);
    // learning starts once 128 transitions (2 iterations) are stored
    assert_eq!(report.learner_steps, 2 * 11);
}

#[test]
fn learner_keeps_stepping_with_every_actor_stalled() {
    let config = quick_config();
    let src = source(&config);
    let mut agent = SacdAgent::<f32>::new(config.agent.clone(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let snapshots = SnapshotCell::new(agent.actor.clone());
    let buffer = ReplayBuffer::new(100_000);
    let control = Control::new(2, None, None, config.warmup as u64);
    let schedule = LearnerSchedule {
        batch_size: 32,
        warmup: config.warmup,
        publish_every: 5,
        max_steps: None,
        metrics_every: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut versions = Vec::new();
    std::thread::scope(|s| {
        for w in 0..2u32 {
            let (src, env, snapshots, buffer, control) = (&src, &config.env, &snapshots, &buffer, &control);
            s.spawn(move || actor_loop(w, src, env, snapshots, buffer, control, None));
        }
        let learner = {
            let (buffer, snapshots, control, schedule, agent, rng) =
                (&buffer, &snapshots, &control, &schedule, &mut agent, &mut rng);
            s.spawn(move || learner_loop(agent, buffer, snapshots, control, schedule, rng, &mut |_| {}))
        };
        while buffer.len() < config.warmup {
            std::thread::sleep(Duration::from_millis(2));
        }
        control.set_stalled(0, true);
        control.set_stalled(1, true);
        std::thread::sleep(Duration::from_millis(50));
        let frozen = buffer.total_pushed();
        let before = control.learner_steps.load(std::sync::atomic::Ordering::SeqCst);
        for _ in 0..5 {
            std::thread::sleep(Duration::from_millis(100));
            versions.push(snapshots.version());
        }
        let after = control.learner_steps.load(std::sync::atomic::Ordering::SeqCst);
        assert_eq!(buffer.total_pushed(), frozen, "stalled actors push nothing");
        assert!(after > before + 5, "learner advanced {before} -> {after}");
        control.request_stop();
        learner.join().unwrap().unwrap();
    });
    assert!(versions.windows(2).all(|w| w[1] >= w[0]));
    assert!(versions.last() > versions.first());
}

#[test]
fn snapshot_versions_strictly_increase() {
    let agent = SacdAgent::<f32>::new(quick_config().agent, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let cell = SnapshotCell::new(agent.actor.clone());
    let mut last = cell.version();
    for _ in 0..10 {
        let v = cell.publish(agent.actor.clone());
        assert!(v > last);
        assert_eq!(cell.latest().version, v);
        last = v;
    }
}

#[test]
fn restored_checkpoint_continues_identically() {
    let config = quick_config();
    let agent = SacdAgent::<f32>::new(config.agent.clone(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let mut t = LockstepTrainer::new(&config, agent, source(&config)).unwrap();
    for _ in 0..6 {
        t.collect_iteration().unwrap();
    }
    t.learn(10, 32, 5).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let state = HarnessState {
        env_steps: t.env_steps,
        learner_steps: t.learner_steps,
        episodes: t.episodes,
        snapshot_version: t.snapshots.version(),
        buffer_len: t.buffer.len(),
        buffer_capacity: t.buffer.capacity(),
        buffer_pushed: t.buffer.total_pushed(),
        rng: t.rng.clone(),
    };
    save_checkpoint(dir.path(), &t.agent, &state).unwrap();
    let first: Vec<_> = t.learn(10, 32, 5).unwrap();

    let (agent, restored) = restore_checkpoint(dir.path()).unwrap();
    assert_eq!(restored, state);
    t.agent = agent;
    t.rng = restored.rng;
    let second: Vec<_> = t.learn(10, 32, 5).unwrap();
    assert_eq!(first.len(), 10);
    assert_eq!(first, second);
}

#[test]
fn restoring_a_missing_checkpoint_is_a_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = restore_checkpoint(&dir.path().join("nowhere")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err:?}");
}

#[test]
fn async_training_respects_the_transition_budget() {
    let mut config = quick_config();
    config.mode = TrainMode::Async;
    config.iterations = 30;
    let dir = tempfile::tempdir().unwrap();
    let (_, report) = train(&config, Some(dir.path())).unwrap();
    assert!(report.env_steps >= 30 * STEPS_PER_ITERATION);
    assert!(report.learner_steps > 0);
    assert!(dir.path().join("checkpoint").join("manifest.txt").exists());
    let metrics = std::fs::read_to_string(dir.path().join("metrics.jsonl")).unwrap();
    for line in metrics.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    let workers: HashSet<u32> = report.workers.iter().map(|w| w.worker).collect();
    assert_eq!(workers.len(), 2);
    assert_eq!(
        report.workers.iter().map(|w| w.transitions).sum::<u64>(),
        report.env_steps
    );
}
