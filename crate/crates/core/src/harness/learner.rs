use std::sync::atomic::Ordering;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::replay::ReplayBuffer;
use super::snapshot::SnapshotCell;
use super::worker::Control;
use crate::error::Result;
use crate::sacd::{LearnStats, SacdAgent};

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerSchedule {
    pub batch_size: usize,
    /// Transitions required in the buffer before learning starts.
    pub warmup: usize,
    /// Publish a policy snapshot every this many learner steps.
    pub publish_every: u64,
    pub max_steps: Option<u64>,
    /// Emit a metrics record every this many learner steps.
    pub metrics_every: u64,
}

impl Default for LearnerSchedule {
    fn default() -> Self {
        Self {
            batch_size: 512,
            warmup: 5000,
            publish_every: 50,
            max_steps: None,
            metrics_every: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LearnRecord {
    pub kind: &'static str,
    pub step: u64,
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
    pub target_entropy: f64,
    pub entropy: f64,
    pub buffer_size: usize,
    pub env_steps: u64,
    pub transitions_per_s: f64,
    pub learner_steps_per_s: f64,
}

impl LearnRecord {
    pub fn new(
        step: u64,
        s: &LearnStats,
        buffer_size: usize,
        env_steps: u64,
        elapsed_s: f64,
        learner_steps: u64,
    ) -> Self {
        let rate = |n: f64| if elapsed_s > 0.0 { n / elapsed_s } else { 0.0 };
        Self {
            kind: "learn",
            step,
            critic1_loss: s.critic1_loss,
            critic2_loss: s.critic2_loss,
            actor_loss: s.actor_loss,
            alpha_loss: s.alpha_loss,
            alpha: s.alpha,
            target_entropy: s.target_entropy,
            entropy: s.entropy,
            buffer_size,
            env_steps,
            transitions_per_s: rate(env_steps as f64),
            learner_steps_per_s: rate(learner_steps as f64),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LearnerReport {
    pub steps: u64,
    pub published: u64,
    pub last: Option<LearnStats>,
    /// Wall-clock seconds spent waiting for warm-up.
    pub warmup_s: f64,
}

/// One learner step followed by an optional snapshot publication.
pub fn learner_step(
    agent: &mut SacdAgent<f32>,
    buffer: &ReplayBuffer,
    snapshots: &SnapshotCell,
    batch_size: usize,
    publish_every: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<LearnStats>> {
    let Some(batch) = buffer.sample(batch_size, rng) else {
        return Ok(None);
    };
    let stats = agent.learn_step(&batch)?;
    if publish_every > 0 && agent.updates() % publish_every == 0 {
        snapshots.publish(agent.actor.clone());
    }
    Ok(Some(stats))
}

/// Trains continuously from the shared buffer until stopped, the step
/// budget is spent, or the workers' transition budget is exhausted. Waits
/// only during warm-up.
pub fn learner_loop(
    agent: &mut SacdAgent<f32>,
    buffer: &ReplayBuffer,
    snapshots: &SnapshotCell,
    control: &Control,
    schedule: &LearnerSchedule,
    rng: &mut ChaCha8Rng,
    on_record: &mut dyn FnMut(&LearnRecord),
) -> Result<LearnerReport> {
    let mut report = LearnerReport::default();
    let start = Instant::now();
    let ready = schedule.warmup.max(schedule.batch_size);
    while buffer.len() < ready {
        if control.stopped() || control.budget_reached() {
            return Ok(report);
        }
        std::thread::sleep(Duration::from_millis(1));
    }
    report.warmup_s = start.elapsed().as_secs_f64();
    loop {
        if control.stopped() || control.budget_reached() {
            break;
        }
        if schedule.max_steps.is_some_and(|m| report.steps >= m) {
            break;
        }
        let version_before = snapshots.version();
        let Some(stats) = learner_step(
            agent,
            buffer,
            snapshots,
            schedule.batch_size,
            schedule.publish_every,
            rng,
        )?
        else {
            continue;
        };
        if snapshots.version() != version_before {
            report.published += 1;
        }
        report.steps += 1;
        let total = control.learner_steps.fetch_add(1, Ordering::SeqCst) + 1;
        if schedule.metrics_every > 0 && report.steps % schedule.metrics_every == 0 {
            let record = LearnRecord::new(
                agent.updates(),
                &stats,
                buffer.len(),
                control.env_steps.load(Ordering::Relaxed),
                start.elapsed().as_secs_f64(),
                total,
            );
            on_record(&record);
        }
        report.last = Some(stats);
    }
    Ok(report)
}
