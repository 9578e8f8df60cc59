//! Instrumented runs of the asynchronous pipeline: actor throughput and
//! learner rate under an injected actor stall.

use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::derive_seed;
use super::learner::learner_loop;
use super::replay::ReplayBuffer;
use super::snapshot::SnapshotCell;
use super::train::TrainConfig;
use super::worker::{actor_loop, Control, ScenarioSource};
use crate::error::Result;
use crate::sacd::SacdAgent;
use crate::sim::generate_network;

fn setup(config: &TrainConfig) -> Result<(SacdAgent<f32>, ScenarioSource)> {
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[u64::MAX - 2]));
    let agent = SacdAgent::<f32>::new(config.agent.clone(), &mut init_rng)?;
    let network = generate_network(&config.network, derive_seed(config.seed, &[u64::MAX - 3]))?;
    let source = ScenarioSource {
        network: Arc::new(network),
        config: config.scenario.clone(),
        seed: config.seed,
    };
    Ok((agent, source))
}

/// Transitions per second produced by `workers` actor threads with a fixed
/// policy and no learner, measured over `window`.
pub fn actor_throughput(config: &TrainConfig, workers: usize, window: Duration) -> Result<f64> {
    let (agent, source) = setup(config)?;
    let buffer = ReplayBuffer::new(config.buffer_capacity);
    let snapshots = SnapshotCell::new(agent.actor.clone());
    let control = Control::new(workers, None, None, 0);
    let elapsed = std::thread::scope(|scope| {
        for w in 0..workers as u32 {
            let (source, env, snapshots, buffer, control) = (&source, &config.env, &snapshots, &buffer, &control);
            scope.spawn(move || actor_loop(w, source, env, snapshots, buffer, control, None));
        }
        let start = Instant::now();
        std::thread::sleep(window);
        control.request_stop();
        start.elapsed()
    });
    Ok(control.env_steps.load(Ordering::SeqCst) as f64 / elapsed.as_secs_f64())
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StallReport {
    /// Learner steps per second with every worker running.
    pub before: f64,
    /// Learner steps per second while one worker is stalled.
    pub during: f64,
    pub warmup_s: f64,
}

impl StallReport {
    /// Relative drop of the learner rate during the stall (negative when
    /// the learner sped up).
    pub fn degradation(&self) -> f64 {
        1.0 - self.during / self.before
    }
}

/// Runs the asynchronous pipeline; after warm-up, measures the learner rate
/// for `window`, then stalls worker `stalled` and measures again.
pub fn stall_probe(config: &TrainConfig, stalled: usize, window: Duration) -> Result<StallReport> {
    let (mut agent, source) = setup(config)?;
    let buffer = ReplayBuffer::new(config.buffer_capacity);
    let snapshots = SnapshotCell::new(agent.actor.clone());
    let control = Control::new(config.workers, None, None, config.warmup as u64);
    let mut schedule = config.schedule();
    schedule.max_steps = None;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[u64::MAX - 1]));

    std::thread::scope(|scope| {
        for w in 0..config.workers as u32 {
            let (source, env, snapshots, buffer, control) = (&source, &config.env, &snapshots, &buffer, &control);
            scope.spawn(move || actor_loop(w, source, env, snapshots, buffer, control, None));
        }
        let learner = {
            let (buffer, snapshots, control, schedule) = (&buffer, &snapshots, &control, &schedule);
            let (agent, rng) = (&mut agent, &mut rng);
            scope.spawn(move || learner_loop(agent, buffer, snapshots, control, schedule, rng, &mut |_| {}))
        };
        let start = Instant::now();
        while control.learner_steps.load(Ordering::SeqCst) == 0 && !learner.is_finished() {
            std::thread::sleep(Duration::from_millis(5));
        }
        let warmup_s = start.elapsed().as_secs_f64();
        let rate = |window: Duration| {
            let s0 = control.learner_steps.load(Ordering::SeqCst);
            let t0 = Instant::now();
            std::thread::sleep(window);
            (control.learner_steps.load(Ordering::SeqCst) - s0) as f64 / t0.elapsed().as_secs_f64()
        };
        let before = rate(window);
        control.set_stalled(stalled, true);
        let during = rate(window);
        control.set_stalled(stalled, false);
        control.request_stop();
        learner.join().expect("learner panicked")?;
        Ok(StallReport {
            before,
            during,
            warmup_s,
        })
    })
}
