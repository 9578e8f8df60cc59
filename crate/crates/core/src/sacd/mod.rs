//! Discrete soft actor-critic over attention-encoded observations.

mod agent;
mod annealer;
mod network;
mod transition;

pub use agent::{
    actor_loss, critic_loss, critic_loss_grad, entropy, sample_categorical, soft_q_target, soft_state_value,
    ActionMode, LearnStats, SacdAgent, SacdConfig,
};
pub use annealer::{AnnealerConfig, EntropyAnnealer};
pub use network::{EncodedCache, EncodedNet};
pub use transition::{Observation, Transition, TransitionBatch};
