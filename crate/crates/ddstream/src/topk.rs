//! Online top-k tracking over the stream: a size-k min-heap of
//! `(estimate, node)` pairs fed by the sketch.
//!
//! On every edge the sketch is advanced first, then the head's fresh
//! estimate decides admission: a node already in the heap gets its stored
//! estimate replaced; otherwise the node is inserted while the heap has
//! room, or swapped for the minimum when its estimate strictly exceeds it.
//! Stored estimates of other members are never refreshed, so values go
//! stale by design and the final heap reflects each member's estimate at
//! its last update.

use std::collections::HashMap;

use crate::sketch::{AdjSketch, SketchError};
use crate::stream::{EdgeEvent, NodeId};

/// One heap member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeapEntry {
    pub estimate: f64,
    pub node: NodeId,
}

impl HeapEntry {
    /// Heap ordering: smaller estimates first; among equal estimates the
    /// higher node id sorts first so it is preferred for eviction.
    fn heap_le(&self, other: &HeapEntry) -> bool {
        match self.estimate.total_cmp(&other.estimate) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => self.node >= other.node,
        }
    }
}

/// Bounded min-heap with an auxiliary membership index.
///
/// The membership test is O(1) through the index by default; setting
/// `linear_membership` switches it to the O(k) scan of the heap array. Both
/// paths must produce identical states, which the tests check.
#[derive(Debug, Clone)]
pub struct TopKTracker {
    entries: Vec<HeapEntry>,
    positions: HashMap<NodeId, usize>,
    capacity: usize,
    linear_membership: bool,
}

impl TopKTracker {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "top-k capacity must be at least 1");
        TopKTracker {
            entries: Vec::with_capacity(k),
            positions: HashMap::new(),
            capacity: k,
            linear_membership: false,
        }
    }

    /// Fidelity mode: membership checked by scanning the heap array.
    pub fn with_linear_membership(k: usize) -> Self {
        let mut t = Self::new(k);
        t.linear_membership = true;
        t
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Current minimum entry, if any.
    pub fn peek_min(&self) -> Option<HeapEntry> {
        self.entries.first().copied()
    }

    /// Heap members in unspecified order.
    pub fn entries(&self) -> &[HeapEntry] {
        &self.entries
    }

    fn position_of(&self, node: NodeId) -> Option<usize> {
        if self.linear_membership {
            self.entries.iter().position(|e| e.node == node)
        } else {
            self.positions.get(&node).copied()
        }
    }

    /// Advances the sketch with `event` and applies the admission rule to
    /// the head's fresh estimate.
    pub fn next(&mut self, sketch: &mut AdjSketch, event: &EdgeEvent) -> Result<(), SketchError> {
        sketch.next(event)?;
        let estimate = sketch.query(event.head);
        self.offer(event.head, estimate);
        Ok(())
    }

    /// The admission rule alone, for callers that drive the sketch themselves.
    pub fn offer(&mut self, node: NodeId, estimate: f64) {
        if let Some(i) = self.position_of(node) {
            self.entries[i].estimate = estimate;
            let i = self.sift_up(i);
            self.sift_down(i);
        } else if self.entries.len() < self.capacity {
            self.push(HeapEntry { estimate, node });
        } else if estimate > self.entries[0].estimate {
            self.push(HeapEntry { estimate, node });
            self.pop_min();
        }
    }

    /// Non-destructive snapshot sorted by estimate descending, ties by
    /// ascending node id.
    pub fn query(&self) -> Vec<(NodeId, f64)> {
        let mut out: Vec<(NodeId, f64)> = self
            .entries
            .iter()
            .map(|e| (e.node, e.estimate))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    /// Member node ids in the order of [`TopKTracker::query`].
    pub fn seed_set(&self) -> Vec<NodeId> {
        self.query().into_iter().map(|(n, _)| n).collect()
    }

    fn push(&mut self, entry: HeapEntry) {
        self.entries.push(entry);
        self.positions.insert(entry.node, self.entries.len() - 1);
        self.sift_up(self.entries.len() - 1);
    }

    fn pop_min(&mut self) -> Option<HeapEntry> {
        if self.entries.is_empty() {
            return None;
        }
        let last = self.entries.len() - 1;
        self.entries.swap(0, last);
        self.positions.insert(self.entries[0].node, 0);
        let removed = self.entries.pop().unwrap();
        self.positions.remove(&removed.node);
        if !self.entries.is_empty() {
            self.sift_down(0);
        }
        Some(removed)
    }

    fn sift_up(&mut self, mut i: usize) -> usize {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.entries[i].heap_le(&self.entries[parent]) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
        i
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let left = 2 * i + 1;
            let right = 2 * i + 2;
            let mut smallest = i;
            if left < self.entries.len() && self.entries[left].heap_le(&self.entries[smallest]) {
                smallest = left;
            }
            if right < self.entries.len() && self.entries[right].heap_le(&self.entries[smallest]) {
                smallest = right;
            }
            if smallest == i {
                break;
            }
            self.swap(i, smallest);
            i = smallest;
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.entries.swap(a, b);
        self.positions.insert(self.entries[a].node, a);
        self.positions.insert(self.entries[b].node, b);
    }

    #[cfg(test)]
    fn check_invariants(&self) {
        assert!(self.entries.len() <= self.capacity);
        assert_eq!(self.positions.len(), self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            assert_eq!(self.positions[&e.node], i, "position index out of sync");
            if i > 0 {
                let parent = &self.entries[(i - 1) / 2];
                assert!(
                    parent.heap_le(e),
                    "heap order violated at {i}: parent {parent:?} child {e:?}"
                );
            }
        }
    }
}
