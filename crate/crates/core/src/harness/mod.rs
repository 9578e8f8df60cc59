//! Asynchronous actor/learner training: rollout workers on independent
//! simulators, a shared replay buffer, and a learner publishing policy
//! snapshots.

pub mod checkpoint;
pub mod learner;
pub mod metrics;
pub mod probe;
pub mod replay;
pub mod snapshot;
pub mod train;
pub mod worker;

pub use checkpoint::{restore_checkpoint, save_checkpoint, HarnessState};
pub use learner::{learner_loop, learner_step, LearnRecord, LearnerReport, LearnerSchedule};
pub use metrics::MetricsSink;
pub use probe::{actor_throughput, stall_probe, StallReport};
pub use replay::ReplayBuffer;
pub use snapshot::{PolicySnapshot, SnapshotCell};
pub use train::{train, LockstepTrainer, TrainConfig, TrainMode, TrainReport};
pub use worker::{actor_loop, rollout_step, Control, EpisodeRecord, ScenarioSource, WorkerReport};

/// Environment steps (agent transitions) per training iteration.
pub const STEPS_PER_ITERATION: u64 = 64;

/// Deterministic seed derivation (SplitMix64 over the base seed and tags).
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut z = base;
    for &t in tags {
        z = z
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(t.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
