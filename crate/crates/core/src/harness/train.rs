use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::atomic::Ordering;
use std::sync::{mpsc, Arc};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{save_checkpoint, HarnessState};
use super::learner::{learner_loop, learner_step, LearnRecord, LearnerSchedule};
use super::metrics::MetricsSink;
use super::replay::ReplayBuffer;
use super::snapshot::SnapshotCell;
use super::worker::{actor_loop, rollout_step, Control, ScenarioSource, WorkerReport};
use super::{derive_seed, STEPS_PER_ITERATION};
use crate::error::{Error, Result};
use crate::mdp::{CorridorEnv, EnvConfig};
use crate::sacd::{ActionMode, LearnStats, SacdAgent, SacdConfig, Transition};
use crate::sim::{generate_network, NetworkConfig, ScenarioConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainMode {
    /// Worker threads and the learner run concurrently.
    Async,
    /// Single thread, fixed number of learner steps per iteration;
    /// reproducible for a given seed.
    Lockstep,
}

impl TrainMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::Async => "async",
            TrainMode::Lockstep => "lockstep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "async" => Some(TrainMode::Async),
            "lockstep" | "sync" => Some(TrainMode::Lockstep),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub network: NetworkConfig,
    pub scenario: ScenarioConfig,
    pub env: EnvConfig,
    pub agent: SacdConfig,
    pub workers: usize,
    pub buffer_capacity: usize,
    pub warmup: usize,
    pub batch_size: usize,
    pub publish_every: u64,
    /// Training budget in iterations of 64 environment steps.
    pub iterations: u64,
    pub max_learner_steps: Option<u64>,
    pub mode: TrainMode,
    /// Learner steps per iteration in lockstep mode.
    pub learn_per_iteration: u64,
    /// Async mode: cap on transitions per learner step after warm-up.
    pub ratio_cap: Option<f64>,
    pub seed: u64,
    pub metrics_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            scenario: ScenarioConfig::default(),
            env: EnvConfig::default(),
            agent: SacdConfig::default(),
            workers: 4,
            buffer_capacity: 100_000,
            warmup: 5000,
            batch_size: 512,
            publish_every: 50,
            iterations: 2000,
            max_learner_steps: None,
            mode: TrainMode::Async,
            learn_per_iteration: 8,
            ratio_cap: None,
            seed: 0,
            metrics_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        self.scenario.validate()?;
        self.env.reward.validate()?;
        if self.workers == 0 {
            return Err(Error::Config("at least one worker is required".into()));
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return Err(Error::Config("buffer capacity must hold at least one batch".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> LearnerSchedule {
        LearnerSchedule {
            batch_size: self.batch_size,
            warmup: self.warmup,
            publish_every: self.publish_every,
            max_steps: self.max_learner_steps,
            metrics_every: self.metrics_every,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub env_steps: u64,
    pub learner_steps: u64,
    pub episodes: u64,
    pub incidents: u64,
    pub snapshot_version: u64,
    pub elapsed_s: f64,
    pub transitions_per_s: f64,
    pub last: Option<LearnStats>,
    pub workers: Vec<WorkerReport>,
    pub checkpoint: Option<PathBuf>,
}

impl TrainReport {
    pub fn iterations(&self) -> u64 {
        self.env_steps / STEPS_PER_ITERATION
    }
}

fn learner_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[u64::MAX - 1]))
}

/// Trains an agent from scratch. When `out` is given, metrics go to
/// `out/metrics.jsonl` and the final checkpoint to `out/checkpoint`.
pub fn train(config: &TrainConfig, out: Option<&Path>) -> Result<(SacdAgent<f32>, TrainReport)> {
    config.validate()?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[u64::MAX - 2]));
    let agent = SacdAgent::<f32>::new(config.agent.clone(), &mut init_rng)?;
    let network = generate_network(&config.network, derive_seed(config.seed, &[u64::MAX - 3]))?;
    let source = ScenarioSource {
        network: Arc::new(network),
        config: config.scenario.clone(),
        seed: config.seed,
    };
    let metrics = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            MetricsSink::create(&dir.join("metrics.jsonl"))?
        }
        None => MetricsSink::disabled(),
    };
    match config.mode {
        TrainMode::Async => train_async(config, agent, &source, metrics, out),
        TrainMode::Lockstep => train_lockstep(config, agent, &source, metrics, out),
    }
}

fn finish(
    agent: &SacdAgent<f32>,
    buffer: &ReplayBuffer,
    report: &mut TrainReport,
    rng: ChaCha8Rng,
    out: Option<&Path>,
    dir_name: &str,
) -> Result<()> {
    if let Some(dir) = out {
        let path = dir.join(dir_name);
        let state = HarnessState {
            env_steps: report.env_steps,
            learner_steps: report.learner_steps,
            episodes: report.episodes,
            snapshot_version: report.snapshot_version,
            buffer_len: buffer.len(),
            buffer_capacity: buffer.capacity(),
            buffer_pushed: buffer.total_pushed(),
            rng,
        };
        save_checkpoint(&path, agent, &state)?;
        report.checkpoint = Some(path);
    }
    Ok(())
}

fn train_async(
    config: &TrainConfig,
    mut agent: SacdAgent<f32>,
    source: &ScenarioSource,
    mut metrics: MetricsSink,
    out: Option<&Path>,
) -> Result<(SacdAgent<f32>, TrainReport)> {
    let buffer = ReplayBuffer::new(config.buffer_capacity);
    let snapshots = SnapshotCell::new(agent.actor.clone());
    let control = Control::new(
        config.workers,
        Some(config.iterations * STEPS_PER_ITERATION),
        config.ratio_cap,
        config.warmup as u64,
    );
    let mut rng = learner_rng(config.seed);
    let schedule = config.schedule();
    let start = Instant::now();
    let (tx, rx) = mpsc::channel();
    let mut write_error = None;

    let (learned, workers) = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.workers as u32)
            .map(|w| {
                let (source, env, snapshots, buffer, control) = (source, &config.env, &snapshots, &buffer, &control);
                let tx = tx.clone();
                scope.spawn(move || actor_loop(w, source, env, snapshots, buffer, control, Some(tx)))
            })
            .collect();
        drop(tx);
        let mut on_record = |r: &LearnRecord| {
            for e in rx.try_iter() {
                if let Err(err) = metrics.write(&e) {
                    write_error.get_or_insert(err);
                }
            }
            if let Err(err) = metrics.write(r) {
                write_error.get_or_insert(err);
            }
        };
        let learned = learner_loop(
            &mut agent,
            &buffer,
            &snapshots,
            &control,
            &schedule,
            &mut rng,
            &mut on_record,
        );
        control.request_stop();
        let workers: Vec<WorkerReport> = handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect();
        (learned, workers)
    });
    for e in rx.try_iter() {
        metrics.write(&e)?;
    }
    if let Some(err) = write_error {
        return Err(err);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let env_steps = control.env_steps.load(Ordering::SeqCst);
    let mut report = TrainReport {
        env_steps,
        learner_steps: control.learner_steps.load(Ordering::SeqCst),
        episodes: control.episodes.load(Ordering::SeqCst),
        incidents: control.incidents.load(Ordering::SeqCst),
        snapshot_version: snapshots.version(),
        elapsed_s: elapsed,
        transitions_per_s: env_steps as f64 / elapsed.max(1e-9),
        last: None,
        workers,
        checkpoint: None,
    };
    match learned {
        Ok(l) => report.last = l.last,
        Err(e) => {
            finish(&agent, &buffer, &mut report, rng, out, "diagnostic")?;
            return Err(e);
        }
    }
    metrics.flush()?;
    finish(&agent, &buffer, &mut report, rng, out, "checkpoint")?;
    Ok((agent, report))
}

/// Single-threaded driver: every iteration pushes exactly 64 transitions,
/// gathered round-robin from the worker environments, then performs
/// `learn_per_iteration` learner steps once warm-up is reached.
pub struct LockstepTrainer {
    pub agent: SacdAgent<f32>,
    pub buffer: ReplayBuffer,
    pub snapshots: SnapshotCell,
    pub rng: ChaCha8Rng,
    source: ScenarioSource,
    env_config: EnvConfig,
    envs: Vec<(CorridorEnv, u64, ChaCha8Rng, u64)>,
    pending: VecDeque<Transition>,
    pub env_steps: u64,
    pub learner_steps: u64,
    pub episodes: u64,
    next_worker: usize,
}

impl LockstepTrainer {
    pub fn new(config: &TrainConfig, agent: SacdAgent<f32>, source: ScenarioSource) -> Result<Self> {
        let envs = (0..config.workers as u32)
            .map(|w| {
                let env = source.env(&config.env, w, 0)?;
                let rng = ChaCha8Rng::seed_from_u64(derive_seed(source.seed, &[w as u64, u64::MAX]));
                Ok((env, 0u64, rng, 0u64))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            snapshots: SnapshotCell::new(agent.actor.clone()),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            rng: learner_rng(config.seed),
            agent,
            env_config: config.env.clone(),
            source,
            envs,
            pending: VecDeque::new(),
            env_steps: 0,
            learner_steps: 0,
            episodes: 0,
            next_worker: 0,
        })
    }

    /// Collects and pushes one iteration of transitions. Returns finished
    /// episodes' statistics.
    pub fn collect_iteration(&mut self) -> Result<Vec<crate::mdp::EpisodeStats>> {
        let mut finished = Vec::new();
        let snapshot = self.snapshots.latest();
        while (self.pending.len() as u64) < STEPS_PER_ITERATION {
            let w = self.next_worker;
            self.next_worker = (self.next_worker + 1) % self.envs.len();
            let (env, episode, rng, seq) = &mut self.envs[w];
            if env.is_done() {
                finished.push(env.stats().clone());
                *episode += 1;
                self.episodes += 1;
                *env = self.source.env(&self.env_config, w as u32, *episode)?;
            }
            let batch = rollout_step(env, &snapshot.actor, ActionMode::Sample, rng, w as u32, seq)?;
            self.pending.extend(batch);
        }
        let chunk: Vec<Transition> = self.pending.drain(..STEPS_PER_ITERATION as usize).collect();
        self.buffer.push_many(chunk);
        self.env_steps += STEPS_PER_ITERATION;
        Ok(finished)
    }

    pub fn learn(&mut self, steps: u64, batch_size: usize, publish_every: u64) -> Result<Vec<LearnStats>> {
        let mut out = Vec::new();
        for _ in 0..steps {
            if let Some(s) = learner_step(
                &mut self.agent,
                &self.buffer,
                &self.snapshots,
                batch_size,
                publish_every,
                &mut self.rng,
            )? {
                self.learner_steps += 1;
                out.push(s);
            }
        }
        Ok(out)
    }

    pub fn iterations(&self) -> u64 {
        self.env_steps / STEPS_PER_ITERATION
    }
}

fn train_lockstep(
    config: &TrainConfig,
    agent: SacdAgent<f32>,
    source: &ScenarioSource,
    mut metrics: MetricsSink,
    out: Option<&Path>,
) -> Result<(SacdAgent<f32>, TrainReport)> {
    let start = Instant::now();
    let mut t = LockstepTrainer::new(config, agent, source.clone())?;
    let mut last = None;
    let mut result = Ok(());
    for _ in 0..config.iterations {
        if config.max_learner_steps.is_some_and(|m| t.learner_steps >= m) {
            break;
        }
        for (i, s) in t.collect_iteration()?.into_iter().enumerate() {
            metrics.write(&serde_json::json!({
                "kind": "episode",
                "episode": t.episodes as usize - i,
                "decision_steps": s.decision_steps,
                "agent_steps": s.agent_steps,
                "departures": s.departures,
                "arrivals": s.arrivals,
                "nmacs": s.nmacs,
                "total_reward": s.total_reward,
            }))?;
        }
        if t.buffer.len() < config.warmup.max(config.batch_size) {
            continue;
        }
        match t.learn(config.learn_per_iteration, config.batch_size, config.publish_every) {
            Ok(stats) => {
                for s in stats {
                    let step = t.agent.updates();
                    if config.metrics_every > 0 && step % config.metrics_every == 0 {
                        let r = LearnRecord::new(
                            step,
                            &s,
                            t.buffer.len(),
                            t.env_steps,
                            start.elapsed().as_secs_f64(),
                            t.learner_steps,
                        );
                        metrics.write(&r)?;
                    }
                    last = Some(s);
                }
            }
            Err(e) => {
                result = Err(e);
                break;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mut report = TrainReport {
        env_steps: t.env_steps,
        learner_steps: t.learner_steps,
        episodes: t.episodes,
        incidents: 0,
        snapshot_version: t.snapshots.version(),
        elapsed_s: elapsed,
        transitions_per_s: t.env_steps as f64 / elapsed.max(1e-9),
        last,
        workers: Vec::new(),
        checkpoint: None,
    };
    metrics.flush()?;
    let rng = t.rng.clone();
    if let Err(e) = result {
        finish(&t.agent, &t.buffer, &mut report, rng, out, "diagnostic")?;
        return Err(e);
    }
    finish(&t.agent, &t.buffer, &mut report, rng, out, "checkpoint")?;
    Ok((t.agent, report))
}
