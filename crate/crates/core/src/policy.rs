//! Action-selection policies used by rollout workers and evaluation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::mdp::{Action, N_ACTIONS};
use crate::nn::{argmax, softmax};
use crate::sacd::{sample_categorical, ActionMode, EncodedNet, Observation};

pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    /// One action index per observation.
    fn act_batch(&self, obs: &[&Observation], rng: &mut ChaCha8Rng) -> Result<Vec<usize>>;
}

/// Learned actor, either sampled or greedy.
pub struct ActorPolicy {
    pub actor: EncodedNet<f32>,
    pub mode: ActionMode,
}

impl ActorPolicy {
    pub fn new(actor: EncodedNet<f32>, mode: ActionMode) -> Self {
        Self { actor, mode }
    }
}

/// Selects actions for a batch with the given actor network.
pub fn actor_actions(
    actor: &EncodedNet<f32>,
    obs: &[&Observation],
    mode: ActionMode,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    if obs.is_empty() {
        return Ok(Vec::new());
    }
    let logits = actor.predict(obs)?;
    let n = actor.output_dim();
    Ok(logits
        .chunks_exact(n)
        .map(|row| match mode {
            ActionMode::Greedy => argmax(row),
            ActionMode::Sample => sample_categorical(&softmax(row), rng),
        })
        .collect())
}

impl Policy for ActorPolicy {
    fn name(&self) -> String {
        match self.mode {
            ActionMode::Greedy => "sacd-greedy".into(),
            ActionMode::Sample => "sacd-sample".into(),
        }
    }

    fn act_batch(&self, obs: &[&Observation], rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        actor_actions(&self.actor, obs, self.mode, rng)
    }
}

/// Always the same action.
pub struct ConstantPolicy(pub Action);

impl Policy for ConstantPolicy {
    fn name(&self) -> String {
        format!("constant-{}", self.0.index())
    }

    fn act_batch(&self, obs: &[&Observation], _rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        Ok(vec![self.0.index(); obs.len()])
    }
}

/// Uniformly random actions.
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn act_batch(&self, obs: &[&Observation], rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        Ok(obs.iter().map(|_| rng.random_range(0..N_ACTIONS)).collect())
    }
}

/// Hand-written vertical resolution: when the nearest visible intruder is
/// within `trigger_range` (normalized distance) and less than
/// `vertical_band` (normalized altitude) away, move away from it vertically.
/// Co-altitude ties are broken by ownship heading.
pub struct VerticalAvoidancePolicy {
    pub trigger_range: f32,
    pub vertical_band: f32,
}

impl Default for VerticalAvoidancePolicy {
    fn default() -> Self {
        Self {
            trigger_range: 0.8,
            vertical_band: 200.0 / 1600.0,
        }
    }
}

impl Policy for VerticalAvoidancePolicy {
    fn name(&self) -> String {
        "vertical-avoidance".into()
    }

    fn act_batch(&self, obs: &[&Observation], _rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        Ok(obs
            .iter()
            .map(|o| {
                let nearest = o
                    .intruders
                    .iter()
                    .filter(|h| h[9] < self.trigger_range && h[1].abs() < self.vertical_band)
                    .min_by(|a, b| a[9].total_cmp(&b[9]));
                let Some(h) = nearest else {
                    return Action::MaintainAltitude.index();
                };
                let up = if h[1] < -1e-4 {
                    true
                } else if h[1] > 1e-4 {
                    false
                } else {
                    o.ownship[0] >= 0.0
                };
                let z = o.ownship[1];
                let action = match (up, z) {
                    (true, z) if z >= 0.999 => Action::Descend,
                    (false, z) if z <= 0.251 => Action::Climb,
                    (true, _) => Action::Climb,
                    (false, _) => Action::Descend,
                };
                action.index()
            })
            .collect())
    }
}
