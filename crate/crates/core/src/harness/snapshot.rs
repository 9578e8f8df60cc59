use std::sync::Arc;

use parking_lot::RwLock;

use crate::sacd::EncodedNet;

/// Immutable published copy of the actor.
#[derive(Debug)]
pub struct PolicySnapshot {
    pub version: u64,
    pub actor: EncodedNet<f32>,
}

/// Latest-snapshot slot: the learner publishes, workers read without
/// waiting on each other.
pub struct SnapshotCell {
    slot: RwLock<Arc<PolicySnapshot>>,
}

impl SnapshotCell {
    pub fn new(actor: EncodedNet<f32>) -> Self {
        Self {
            slot: RwLock::new(Arc::new(PolicySnapshot { version: 0, actor })),
        }
    }

    /// Publishes a new actor and returns its version.
    pub fn publish(&self, actor: EncodedNet<f32>) -> u64 {
        let mut slot = self.slot.write();
        let version = slot.version + 1;
        *slot = Arc::new(PolicySnapshot { version, actor });
        version
    }

    pub fn latest(&self) -> Arc<PolicySnapshot> {
        self.slot.read().clone()
    }

    /// Latest snapshot if the slot is not being written right now.
    pub fn try_latest(&self) -> Option<Arc<PolicySnapshot>> {
        self.slot.try_read().map(|s| s.clone())
    }

    pub fn version(&self) -> u64 {
        self.slot.read().version
    }
}
