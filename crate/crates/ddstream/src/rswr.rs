//! Random sampling with replacement over a stream.
//!
//! Each node owns a fixed array of `q` slots. When an edge arrives for a
//! node whose in-degree counter (post-increment) is `d`, every slot is
//! independently overwritten with the new tail with probability `1/d`.
//! After any stream prefix this leaves each slot holding a uniform sample
//! of the tails seen so far, and the slots are mutually independent, which
//! is what the estimator's error analysis needs. Ordinary reservoir
//! sampling (without replacement) would not give independent slots.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stream::NodeId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("observe called with current_degree = 0; increment the degree counter first")]
    ZeroDegree,
}

/// Fixed-capacity array of sampled in-neighbor slots for one node.
///
/// Slots may hold duplicates (sampling is with replacement). All slots are
/// `None` until the first edge arrives; the first edge fills every slot
/// because the replacement probability is 1/1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotArray {
    slots: Vec<Option<NodeId>>,
}

impl SlotArray {
    pub fn new(q: usize) -> Self {
        SlotArray {
            slots: vec![None; q],
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Slot contents in slot order.
    pub fn slots(&self) -> &[Option<NodeId>] {
        &self.slots
    }

    /// Number of non-null slots, counting duplicates.
    pub fn filled_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub(crate) fn from_slots(slots: Vec<Option<NodeId>>) -> Self {
        SlotArray { slots }
    }

    /// Runs the q independent Bernoulli trials for one arriving edge.
    ///
    /// `current_degree` must be the owner's in-degree counter after
    /// incrementing for this edge, so the first edge sees degree 1 and a
    /// replacement probability of 1. Exactly `q` draws are consumed from
    /// `rng` regardless of outcomes.
    pub fn observe<R: Rng>(
        &mut self,
        tail: NodeId,
        current_degree: u64,
        rng: &mut R,
    ) -> Result<(), SampleError> {
        if current_degree == 0 {
            return Err(SampleError::ZeroDegree);
        }
        let p = 1.0 / current_degree as f64;
        for slot in &mut self.slots {
            // One uniform f64 per trial; gen::<f64>() < 1.0 always holds,
            // so the first edge fills every slot while still consuming a draw.
            if rng.gen::<f64>() < p {
                *slot = Some(tail);
            }
        }
        Ok(())
    }
}
