use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::seq::index;

use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transition {
    pub s: f64,
    pub a: f64,
    pub r: f64,
    pub s_next: f64,
    pub terminal: bool,
}

/// Fixed-capacity FIFO of transitions with uniform minibatch sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
    rng: StreamRng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, rng: StreamRng) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            rng,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends, evicting the oldest transition when full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// Indices of a minibatch, distinct within the batch. `None` when fewer than `batch` items.
    pub fn sample_indices(&mut self, batch: usize) -> Option<Vec<usize>> {
        if batch == 0 || self.items.len() < batch {
            return None;
        }
        Some(index::sample(&mut self.rng, self.items.len(), batch).into_vec())
    }

    pub fn sample(&mut self, batch: usize) -> Option<Vec<Transition>> {
        let idx = self.sample_indices(batch)?;
        Some(idx.into_iter().map(|i| self.items[i]).collect())
    }
}
