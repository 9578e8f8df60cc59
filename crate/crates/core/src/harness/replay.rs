use std::sync::Arc;

use parking_lot::Mutex;
use rand::Rng;

use crate::sacd::{Transition, TransitionBatch};

struct Ring {
    items: Vec<Arc<Transition>>,
    cursor: usize,
    pushed: u64,
}

/// Fixed-capacity FIFO experience store shared by all workers and the
/// learner. Sampling is uniform with replacement over current contents.
pub struct ReplayBuffer {
    capacity: usize,
    ring: Mutex<Ring>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            ring: Mutex::new(Ring {
                items: Vec::with_capacity(capacity.min(1 << 20)),
                cursor: 0,
                pushed: 0,
            }),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.ring.lock().items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Transitions ever pushed, including evicted ones.
    pub fn total_pushed(&self) -> u64 {
        self.ring.lock().pushed
    }

    pub fn push(&self, t: Transition) {
        self.push_many(std::iter::once(t));
    }

    pub fn push_many(&self, items: impl IntoIterator<Item = Transition>) {
        let items: Vec<Arc<Transition>> = items.into_iter().map(Arc::new).collect();
        let mut ring = self.ring.lock();
        for t in items {
            if ring.items.len() < self.capacity {
                ring.items.push(t);
            } else {
                let c = ring.cursor;
                ring.items[c] = t;
            }
            ring.cursor = (ring.cursor + 1) % self.capacity;
            ring.pushed += 1;
        }
    }

    /// Uniform sample with replacement, or `None` while fewer than
    /// `batch_size` transitions are stored.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Option<TransitionBatch> {
        let ring = self.ring.lock();
        let n = ring.items.len();
        if n < batch_size || batch_size == 0 {
            return None;
        }
        let items = (0..batch_size)
            .map(|_| ring.items[rng.random_range(0..n)].clone())
            .collect();
        Some(TransitionBatch::new(items))
    }

    /// Current contents, oldest first.
    pub fn contents(&self) -> Vec<Arc<Transition>> {
        let ring = self.ring.lock();
        if ring.items.len() < self.capacity {
            ring.items.clone()
        } else {
            let (newer, older) = ring.items.split_at(ring.cursor);
            older.iter().chain(newer).cloned().collect()
        }
    }
}
