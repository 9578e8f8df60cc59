use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::Sender;
use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::derive_seed;
use super::replay::ReplayBuffer;
use super::snapshot::{PolicySnapshot, SnapshotCell};
use crate::error::Result;
use crate::mdp::{CorridorEnv, EnvConfig};
use crate::policy::actor_actions;
use crate::sacd::{ActionMode, EncodedNet, Transition};
use crate::sim::{generate_scenario, CorridorNetwork, Scenario, ScenarioConfig};

/// Produces a fresh scenario for every (worker, episode) pair.
#[derive(Clone, Debug)]
pub struct ScenarioSource {
    pub network: Arc<CorridorNetwork>,
    pub config: ScenarioConfig,
    pub seed: u64,
}

impl ScenarioSource {
    pub fn scenario_seed(&self, worker: u32, episode: u64) -> u64 {
        derive_seed(self.seed, &[worker as u64, episode, 0])
    }

    pub fn env_seed(&self, worker: u32, episode: u64) -> u64 {
        derive_seed(self.seed, &[worker as u64, episode, 1])
    }

    pub fn episode(&self, worker: u32, episode: u64) -> Result<Scenario> {
        generate_scenario(&self.network, &self.config, self.scenario_seed(worker, episode))
    }

    pub fn env(&self, env_config: &EnvConfig, worker: u32, episode: u64) -> Result<CorridorEnv> {
        let scenario = self.episode(worker, episode)?;
        CorridorEnv::new(&scenario, env_config.clone(), self.env_seed(worker, episode))
    }
}

/// Shared counters and switches between the learner, the workers and the
/// driver.
pub struct Control {
    pub stop: AtomicBool,
    stalled: Vec<AtomicBool>,
    /// Agent transitions pushed to the replay buffer.
    pub env_steps: AtomicU64,
    pub decision_steps: AtomicU64,
    pub learner_steps: AtomicU64,
    pub episodes: AtomicU64,
    pub incidents: AtomicU64,
    /// Workers stop once this many transitions have been pushed.
    pub env_budget: Option<u64>,
    /// Optional bound on transitions pushed per learner step beyond warm-up.
    pub ratio_cap: Option<f64>,
    pub warmup: u64,
}

impl Control {
    pub fn new(workers: usize, env_budget: Option<u64>, ratio_cap: Option<f64>, warmup: u64) -> Self {
        Self {
            stop: AtomicBool::new(false),
            stalled: (0..workers).map(|_| AtomicBool::new(false)).collect(),
            env_steps: AtomicU64::new(0),
            decision_steps: AtomicU64::new(0),
            learner_steps: AtomicU64::new(0),
            episodes: AtomicU64::new(0),
            incidents: AtomicU64::new(0),
            env_budget,
            ratio_cap,
            warmup,
        }
    }

    pub fn request_stop(&self) {
        self.stop.store(true, Ordering::SeqCst);
    }

    pub fn stopped(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    /// Suspends (or resumes) one worker; used to inject actor stalls.
    pub fn set_stalled(&self, worker: usize, stalled: bool) {
        self.stalled[worker].store(stalled, Ordering::SeqCst);
    }

    pub fn is_stalled(&self, worker: usize) -> bool {
        self.stalled.get(worker).is_some_and(|s| s.load(Ordering::SeqCst))
    }

    pub fn budget_reached(&self) -> bool {
        self.env_budget
            .is_some_and(|b| self.env_steps.load(Ordering::SeqCst) >= b)
    }

    fn throttled(&self) -> bool {
        self.ratio_cap.is_some_and(|r| {
            let env = self.env_steps.load(Ordering::Relaxed) as f64;
            let learn = self.learner_steps.load(Ordering::Relaxed) as f64;
            env > self.warmup as f64 + r * learn
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub kind: &'static str,
    pub worker: u32,
    pub episode: u64,
    pub decision_steps: u64,
    pub agent_steps: u64,
    pub departures: u64,
    pub arrivals: u64,
    pub nmacs: u64,
    pub total_reward: f64,
    pub policy_version: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorkerReport {
    pub worker: u32,
    pub transitions: u64,
    pub episodes: u64,
    pub incidents: u64,
    pub max_policy_version: u64,
}

/// Runs one decision step of `env` with `actor`, returning replay records.
pub fn rollout_step(
    env: &mut CorridorEnv,
    actor: &EncodedNet<f32>,
    mode: ActionMode,
    rng: &mut ChaCha8Rng,
    worker: u32,
    seq: &mut u64,
) -> Result<Vec<Transition>> {
    let ids: Vec<u32> = env.agents().keys().copied().collect();
    let obs: Vec<_> = env.agents().values().collect();
    let actions = actor_actions(actor, &obs, mode, rng)?;
    let pairs: Vec<(u32, usize)> = ids.into_iter().zip(actions).collect();
    let out = env.step(&pairs)?;
    Ok(out
        .transitions
        .into_iter()
        .map(|t| {
            *seq += 1;
            Transition {
                state: t.state,
                action: t.action,
                reward: t.reward as f32,
                next_state: t.next_state,
                done: t.done,
                worker,
                seq: *seq - 1,
            }
        })
        .collect())
}

fn episode_record(worker: u32, episode: u64, env: &CorridorEnv, version: u64) -> EpisodeRecord {
    let s = env.stats();
    EpisodeRecord {
        kind: "episode",
        worker,
        episode,
        decision_steps: s.decision_steps,
        agent_steps: s.agent_steps,
        departures: s.departures,
        arrivals: s.arrivals,
        nmacs: s.nmacs,
        total_reward: s.total_reward,
        policy_version: version,
    }
}

/// Rollout worker: steps its own environments with the newest available
/// policy snapshot and pushes every agent transition to the buffer, until
/// stopped or the transition budget is spent.
pub fn actor_loop(
    worker: u32,
    source: &ScenarioSource,
    env_config: &EnvConfig,
    snapshots: &SnapshotCell,
    sink: &ReplayBuffer,
    control: &Control,
    episodes: Option<Sender<EpisodeRecord>>,
) -> WorkerReport {
    let mut report = WorkerReport {
        worker,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(source.seed, &[worker as u64, u64::MAX]));
    let mut snapshot: Arc<PolicySnapshot> = snapshots.latest();
    let mut episode = 0u64;
    let mut seq = 0u64;
    let mut env: Option<CorridorEnv> = None;

    while !control.stopped() && !control.budget_reached() {
        if control.is_stalled(worker as usize) || control.throttled() {
            std::thread::sleep(Duration::from_micros(500));
            continue;
        }
        if let Some(s) = snapshots.try_latest() {
            if s.version != snapshot.version {
                snapshot = s;
            }
        }
        report.max_policy_version = report.max_policy_version.max(snapshot.version);

        if env.as_ref().is_none_or(|e| e.is_done()) {
            if let Some(done) = env.take() {
                if let Some(tx) = &episodes {
                    let _ = tx.send(episode_record(worker, episode, &done, snapshot.version));
                }
                report.episodes += 1;
                control.episodes.fetch_add(1, Ordering::Relaxed);
                episode += 1;
            }
            match source.env(env_config, worker, episode) {
                Ok(e) => env = Some(e),
                Err(_) => {
                    report.incidents += 1;
                    control.incidents.fetch_add(1, Ordering::Relaxed);
                    episode += 1;
                    continue;
                }
            }
        }
        let e = env.as_mut().expect("environment present");
        match rollout_step(e, &snapshot.actor, ActionMode::Sample, &mut rng, worker, &mut seq) {
            Ok(batch) => {
                let n = batch.len() as u64;
                sink.push_many(batch);
                report.transitions += n;
                control.env_steps.fetch_add(n, Ordering::SeqCst);
                control.decision_steps.fetch_add(1, Ordering::Relaxed);
            }
            Err(_) => {
                report.incidents += 1;
                control.incidents.fetch_add(1, Ordering::Relaxed);
                env = None;
                episode += 1;
            }
        }
    }
    report
}
