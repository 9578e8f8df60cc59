use std::sync::Arc;

/// Encoded MDP observation: the normalized ownship vector plus one vector per
/// visible intruder.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observation {
    pub ownship: Vec<f32>,
    pub intruders: Vec<Vec<f32>>,
}

impl Observation {
    pub fn new(ownship: Vec<f32>, intruders: Vec<Vec<f32>>) -> Self {
        Self { ownship, intruders }
    }
}

/// One agent-step of experience.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Observation,
    pub action: u8,
    pub reward: f32,
    pub next_state: Observation,
    pub done: bool,
    /// Producing worker, for auditing.
    pub worker: u32,
    /// Per-worker sequence number, for auditing.
    pub seq: u64,
}

/// Sampled minibatch; transitions are shared with the replay buffer.
#[derive(Clone, Debug, Default)]
pub struct TransitionBatch {
    pub items: Vec<Arc<Transition>>,
}

impl TransitionBatch {
    pub fn new(items: Vec<Arc<Transition>>) -> Self {
        Self { items }
    }

    pub fn from_transitions(items: impl IntoIterator<Item = Transition>) -> Self {
        Self {
            items: items.into_iter().map(Arc::new).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn states(&self) -> Vec<&Observation> {
        self.items.iter().map(|t| &t.state).collect()
    }

    pub fn next_states(&self) -> Vec<&Observation> {
        self.items.iter().map(|t| &t.next_state).collect()
    }
}
