//! The diffusion-degree sketch: per-node in-degree counters plus up to `q`
//! sampled in-neighbor slots, answering point estimates at any time.
//!
//! For a stream edge `(v, u)` only the head `u`'s row changes: its counter
//! is incremented and `v` is offered to its slot array by random sampling
//! with replacement. A query for node `u` reads `u`'s degree `d`, the
//! degrees of the sampled neighbors, and returns
//! `lambda * ((d / nCount) * sum + d)` where `nCount` counts non-null slots
//! (duplicates included) and `sum` adds the sampled neighbors' degrees.
//! The expected value of the estimate equals the exact diffusion degree.
//!
//! Rows are created lazily on a node's first in-edge; nodes never seen as a
//! head occupy no space and query to 0. Total allocation stays within
//! `n * (q + 1)` cells for `n` rows.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rswr::SlotArray;
use crate::stream::{EdgeEvent, NodeId};

pub const SNAPSHOT_VERSION: u32 = 1;

/// Whether rows carry plain degree counters or accumulated edge weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchMode {
    /// Common diffusion probability `lambda` for every edge.
    Uniform,
    /// Per-edge propagation probabilities accumulated in `weight_sum`.
    Weighted,
}

#[derive(Debug, Error)]
pub enum SketchError {
    #[error("q must be at least 1, got {0}")]
    InvalidQ(usize),
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("weighted sketch requires a weight on every event (event seq {seq})")]
    MissingWeight { seq: u64 },
    #[error("weighted query on a uniform-mode sketch")]
    NotWeighted,
    #[error("snapshot version {0} not supported (expected {SNAPSHOT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("snapshot row for node {node} has {got} slots, expected q = {q}")]
    MalformedSnapshot { node: NodeId, got: usize, q: usize },
    #[error("snapshot i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot encoding error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One row of the sketch: the owner's in-degree counter and its slots.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchRow {
    degree: u64,
    /// Sum of edge weights into this node; `None` in uniform mode.
    weight_sum: Option<f64>,
    slots: SlotArray,
}

impl SketchRow {
    fn new(q: usize, mode: SketchMode) -> Self {
        SketchRow {
            degree: 0,
            weight_sum: match mode {
                SketchMode::Uniform => None,
                SketchMode::Weighted => Some(0.0),
            },
            slots: SlotArray::new(q),
        }
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn weight_sum(&self) -> Option<f64> {
        self.weight_sum
    }

    pub fn slots(&self) -> &SlotArray {
        &self.slots
    }
}

/// The full sketch over a stream.
#[derive(Debug, Clone)]
pub struct AdjSketch {
    rows: BTreeMap<NodeId, SketchRow>,
    q: usize,
    lambda: f64,
    seed: u64,
    mode: SketchMode,
    rng: ChaCha8Rng,
}

/// Versioned serializable dump of a sketch.
///
/// `rng_word_pos` records how far the generator has advanced so a loaded
/// sketch continues the stream exactly where the saved one stopped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SketchSnapshot {
    pub version: u32,
    pub q: usize,
    pub lambda: f64,
    pub seed: u64,
    pub mode: SketchMode,
    pub rng_word_pos: u128,
    pub rows: Vec<RowSnapshot>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowSnapshot {
    pub node: NodeId,
    pub degree: u64,
    pub weight_sum: Option<f64>,
    pub slots: Vec<Option<NodeId>>,
}

impl AdjSketch {
    /// Uniform-mode sketch with `q` slots per node and common probability `lambda`.
    pub fn new(q: usize, lambda: f64, seed: u64) -> Result<Self, SketchError> {
        Self::with_mode(q, lambda, seed, SketchMode::Uniform)
    }

    pub fn weighted(q: usize, lambda: f64, seed: u64) -> Result<Self, SketchError> {
        Self::with_mode(q, lambda, seed, SketchMode::Weighted)
    }

    pub fn with_mode(
        q: usize,
        lambda: f64,
        seed: u64,
        mode: SketchMode,
    ) -> Result<Self, SketchError> {
        if q == 0 {
            return Err(SketchError::InvalidQ(q));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(SketchError::InvalidLambda(lambda));
        }
        Ok(AdjSketch {
            rows: BTreeMap::new(),
            q,
            lambda,
            seed,
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> SketchMode {
        self.mode
    }

    /// Number of rows allocated so far (nodes seen as a head).
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, u: NodeId) -> Option<&SketchRow> {
        self.rows.get(&u)
    }

    /// Rows in ascending node-id order.
    pub fn rows(&self) -> impl Iterator<Item = (NodeId, &SketchRow)> {
        self.rows.iter().map(|(&u, row)| (u, row))
    }

    /// Total slot cells allocated across all rows; bounded by `row_count * q`.
    pub fn allocated_slot_cells(&self) -> usize {
        self.rows.values().map(|r| r.slots.capacity()).sum()
    }

    /// Processes one stream edge: increments the head's degree counter and
    /// offers the tail to the head's slots. No other row is touched.
    pub fn next(&mut self, event: &EdgeEvent) -> Result<(), SketchError> {
        if self.mode == SketchMode::Weighted && event.weight.is_none() {
            return Err(SketchError::MissingWeight { seq: event.seq });
        }
        let q = self.q;
        let mode = self.mode;
        let row = self
            .rows
            .entry(event.head)
            .or_insert_with(|| SketchRow::new(q, mode));
        row.degree += 1;
        if mode == SketchMode::Weighted {
            if let (Some(sum), Some(w)) = (row.weight_sum.as_mut(), event.weight) {
                *sum += w;
            }
        }
        row.slots
            .observe(event.tail, row.degree, &mut self.rng)
            .expect("degree is positive after increment");
        Ok(())
    }

    /// Point estimate of the diffusion degree of `u` at the sketch's lambda.
    pub fn query(&self, u: NodeId) -> f64 {
        self.query_at(u, self.lambda)
    }

    /// Same estimate rescaled to a different lambda; the stored state is
    /// lambda-free so this needs no rebuild.
    pub fn query_at(&self, u: NodeId, lambda: f64) -> f64 {
        let Some(row) = self.rows.get(&u) else {
            return 0.0;
        };
        let d = row.degree as f64;
        let mut n_count: u64 = 0;
        let mut sum: f64 = 0.0;
        for neighbor in row.slots.slots().iter().flatten() {
            n_count += 1;
            sum += self.rows.get(neighbor).map_or(0, |r| r.degree) as f64;
        }
        if n_count > 0 {
            lambda * ((d / n_count as f64) * sum + d)
        } else {
            0.0
        }
    }

    /// Estimate under per-edge propagation probabilities: the stored weight
    /// sums replace the degree counters and no common lambda is applied.
    pub fn query_weighted(&self, u: NodeId) -> Result<f64, SketchError> {
        if self.mode != SketchMode::Weighted {
            return Err(SketchError::NotWeighted);
        }
        let Some(row) = self.rows.get(&u) else {
            return Ok(0.0);
        };
        let w = row.weight_sum.unwrap_or(0.0);
        let mut n_count: u64 = 0;
        let mut sum: f64 = 0.0;
        for neighbor in row.slots.slots().iter().flatten() {
            n_count += 1;
            sum += self
                .rows
                .get(neighbor)
                .and_then(|r| r.weight_sum)
                .unwrap_or(0.0);
        }
        if n_count > 0 {
            Ok(w + (w / n_count as f64) * sum)
        } else {
            Ok(0.0)
        }
    }

    /// Number of data-structure cell accesses a query for `u` performs:
    /// one for the row's degree cell, one per slot cell, and one per
    /// non-null slot for the neighbor's degree cell. At most `2q + 1`.
    pub fn access_count_probe(&self, u: NodeId) -> usize {
        let mut accesses = 1; // the row / degree cell
        let Some(row) = self.rows.get(&u) else {
            return accesses;
        };
        for slot in row.slots.slots() {
            accesses += 1; // the slot cell
            if slot.is_some() {
                accesses += 1; // the neighbor's degree cell
            }
        }
        accesses
    }

    pub fn snapshot(&self) -> SketchSnapshot {
        SketchSnapshot {
            version: SNAPSHOT_VERSION,
            q: self.q,
            lambda: self.lambda,
            seed: self.seed,
            mode: self.mode,
            rng_word_pos: self.rng.get_word_pos(),
            rows: self
                .rows
                .iter()
                .map(|(&node, row)| RowSnapshot {
                    node,
                    degree: row.degree,
                    weight_sum: row.weight_sum,
                    slots: row.slots.slots().to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_snapshot(snapshot: SketchSnapshot) -> Result<Self, SketchError> {
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(SketchError::UnsupportedVersion(snapshot.version));
        }
        let mut sketch = Self::with_mode(snapshot.q, snapshot.lambda, snapshot.seed, snapshot.mode)?;
        for row in snapshot.rows {
            if row.slots.len() != snapshot.q {
                return Err(SketchError::MalformedSnapshot {
                    node: row.node,
                    got: row.slots.len(),
                    q: snapshot.q,
                });
            }
            sketch.rows.insert(
                row.node,
                SketchRow {
                    degree: row.degree,
                    weight_sum: row.weight_sum,
                    slots: SlotArray::from_slots(row.slots),
                },
            );
        }
        sketch.rng.set_word_pos(snapshot.rng_word_pos);
        Ok(sketch)
    }

    /// Writes the versioned JSON snapshot.
    pub fn save<W: Write>(&self, writer: W) -> Result<(), SketchError> {
        serde_json::to_writer(writer, &self.snapshot())?;
        Ok(())
    }

    /// Loads a snapshot written by [`AdjSketch::save`]; the restored sketch
    /// continues the stream exactly where the saved one stopped.
    pub fn load<R: Read>(reader: R) -> Result<Self, SketchError> {
        let snapshot: SketchSnapshot = serde_json::from_reader(reader)?;
        Self::from_snapshot(snapshot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(tail: NodeId, head: NodeId, seq: u64) -> EdgeEvent {
        EdgeEvent::new(tail, head, seq)
    }

    fn state_json(sketch: &AdjSketch) -> String {
        serde_json::to_string(&sketch.snapshot()).unwrap()
    }

    #[test]
    fn first_event_updates_only_the_head_row() {
        let mut sketch = AdjSketch::new(3, 0.1, 1).unwrap();
        sketch.next(&ev(0, 1, 0)).unwrap(); // (a, u) with a=0, u=1
        let row = sketch.row(1).unwrap();
        assert_eq!(row.degree(), 1);
        assert!(row.slots().slots().iter().all(|s| *s == Some(0)));
        assert!(sketch.row(0).is_none());
    }

    #[test]
    fn q1_slot_splits_evenly_between_two_tails() {
        let trials = 20_000;
        let mut first = 0u64;
        for seed in 0..trials {
            let mut sketch = AdjSketch::new(1, 0.1, seed).unwrap();
            sketch.next(&ev(0, 2, 0)).unwrap();
            sketch.next(&ev(1, 2, 1)).unwrap();
            let row = sketch.row(2).unwrap();
            assert_eq!(row.degree(), 2);
            match row.slots().slots()[0] {
                Some(0) => first += 1,
                Some(1) => {}
                other => panic!("unexpected slot {other:?}"),
            }
        }
        let freq = first as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.015, "slot frequency {freq}");
    }

    #[test]
    fn self_loop_applies_literally() {
        let mut sketch = AdjSketch::new(2, 0.1, 5).unwrap();
        sketch.next(&ev(7, 7, 0)).unwrap();
        let row = sketch.row(7).unwrap();
        assert_eq!(row.degree(), 1);
        assert!(row.slots().slots().iter().all(|s| *s == Some(7)));
    }

    #[test]
    fn query_trace_two_edge_chain() {
        // Stream (a,u), (c,a) with q=2, lambda=0.1. d_u = 1 forces both of
        // u's slots to a, so the estimate is deterministic:
        // 0.1 * ((1/2) * (d_a + d_a) + 1) = 0.1 * 2 = 0.2.
        for seed in [0, 1, 42, 1234] {
            let mut sketch = AdjSketch::new(2, 0.1, seed).unwrap();
            sketch.next(&ev(0, 1, 0)).unwrap(); // a=0, u=1
            sketch.next(&ev(2, 0, 1)).unwrap(); // c=2
            assert_eq!(sketch.query(1), 0.2);
        }
    }

    #[test]
    fn unknown_node_queries_to_zero() {
        let sketch = AdjSketch::new(2, 0.1, 0).unwrap();
        assert_eq!(sketch.query(99), 0.0);
        let mut sketch = AdjSketch::new(2, 0.1, 0).unwrap();
        sketch.next(&ev(3, 4, 0)).unwrap();
        // 3 was a tail but never a head: no row, estimate 0.
        assert_eq!(sketch.query(3), 0.0);
    }

    #[test]
    fn query_rescales_linearly_in_lambda() {
        let mut sketch = AdjSketch::new(2, 0.1, 9).unwrap();
        for (i, (t, h)) in [(0, 1), (2, 1), (1, 2), (0, 2)].iter().enumerate() {
            sketch.next(&ev(*t, *h, i as u64)).unwrap();
        }
        let base = sketch.query_at(1, 0.1);
        assert_eq!(sketch.query_at(1, 0.2), 2.0 * base);
        assert_eq!(sketch.query_at(1, 0.0), 0.0);
    }

    #[test]
    fn weighted_trace_matches_hand_evaluation() {
        // (a,u) weight 0.2 and (c,a) weight 0.4, q=2:
        // W_u = 0.2, slots of u = [a,a], sum = 0.4 + 0.4 = 0.8,
        // estimate = 0.2 + (0.2/2) * 0.8 = 0.28.
        let mut sketch = AdjSketch::weighted(2, 0.1, 3).unwrap();
        sketch.next(&EdgeEvent::weighted(0, 1, 0, 0.2)).unwrap();
        sketch.next(&EdgeEvent::weighted(2, 0, 1, 0.4)).unwrap();
        let got = sketch.query_weighted(1).unwrap();
        assert!((got - 0.28).abs() < 1e-15, "got {got}");
        assert_eq!(sketch.query_weighted(99).unwrap(), 0.0);
    }

    #[test]
    fn weighted_with_constant_weights_scales_the_neighbor_term() {
        // With every weight equal to lambda the accumulated sums are
        // lambda * degree, so the weighted estimate is
        // lambda*d + lambda^2*(d/nCount)*sum(d_j): the first-hop term agrees
        // with the uniform estimate and the neighbor term picks up one extra
        // lambda factor. On the chain (a,u),(c,a) with d_u = 1 the slots are
        // deterministic, giving w + w^2 exactly (dyadic w keeps this exact).
        let w = 0.5;
        let mut weighted = AdjSketch::weighted(2, w, 11).unwrap();
        weighted.next(&EdgeEvent::weighted(0, 1, 0, w)).unwrap();
        weighted.next(&EdgeEvent::weighted(2, 0, 1, w)).unwrap();
        assert_eq!(weighted.query_weighted(1).unwrap(), w + w * w);

        let mut uniform = AdjSketch::new(2, w, 11).unwrap();
        uniform.next(&ev(0, 1, 0)).unwrap();
        uniform.next(&ev(2, 0, 1)).unwrap();
        assert_eq!(uniform.query(1), 2.0 * w);
    }

    #[test]
    fn weighted_mode_requires_weights() {
        let mut sketch = AdjSketch::weighted(2, 0.1, 0).unwrap();
        assert!(matches!(
            sketch.next(&ev(0, 1, 7)),
            Err(SketchError::MissingWeight { seq: 7 })
        ));
    }

    #[test]
    fn weighted_query_rejected_on_uniform_sketch() {
        let sketch = AdjSketch::new(2, 0.1, 0).unwrap();
        assert!(matches!(
            sketch.query_weighted(0),
            Err(SketchError::NotWeighted)
        ));
    }

    #[test]
    fn access_counts_stay_within_budget() {
        let q = 4;
        let mut sketch = AdjSketch::new(q, 0.1, 2).unwrap();
        assert_eq!(sketch.access_count_probe(0), 1); // unseen: row lookup only
        sketch.next(&ev(1, 0, 0)).unwrap();
        assert_eq!(sketch.access_count_probe(0), 2 * q + 1); // 9 for q=4
        sketch.next(&ev(2, 0, 1)).unwrap();
        sketch.next(&ev(3, 0, 2)).unwrap();
        assert_eq!(sketch.access_count_probe(0), 2 * q + 1);
    }

    #[test]
    fn construction_validates_parameters() {
        assert!(matches!(
            AdjSketch::new(0, 0.1, 0),
            Err(SketchError::InvalidQ(0))
        ));
        assert!(matches!(
            AdjSketch::new(1, 1.5, 0),
            Err(SketchError::InvalidLambda(_))
        ));
        assert!(matches!(
            AdjSketch::new(1, -0.1, 0),
            Err(SketchError::InvalidLambda(_))
        ));
        // lambda = 0 is accepted so experiment sweeps can include the null case
        assert!(AdjSketch::new(1, 0.0, 0).is_ok());
    }

    #[test]
    fn identical_seed_and_events_give_identical_state() {
        let events: Vec<EdgeEvent> = (0..40)
            .map(|i| ev((i * 7 % 5) as NodeId, (i * 3 % 4) as NodeId, i as u64))
            .collect();
        let mut a = AdjSketch::new(3, 0.1, 77).unwrap();
        let mut b = AdjSketch::new(3, 0.1, 77).unwrap();
        for e in &events {
            a.next(e).unwrap();
            b.next(e).unwrap();
        }
        assert_eq!(state_json(&a), state_json(&b));
        for node in 0..5 {
            assert_eq!(a.query(node), b.query(node));
        }
    }

    #[test]
    fn queries_leave_state_untouched() {
        let mut sketch = AdjSketch::new(2, 0.1, 13).unwrap();
        for i in 0..20 {
            sketch.next(&ev((i % 4) as NodeId, ((i + 1) % 4) as NodeId, i)).unwrap();
        }
        let before = state_json(&sketch);
        for node in 0..10 {
            let _ = sketch.query(node);
            let _ = sketch.access_count_probe(node);
            let _ = sketch.query_at(node, 0.7);
        }
        assert_eq!(before, state_json(&sketch));
    }

    #[test]
    fn snapshot_round_trip_is_lossless_and_resumable() {
        let events: Vec<EdgeEvent> = (0..60)
            .map(|i| ev((i * 5 % 7) as NodeId, (i * 11 % 6) as NodeId, i as u64))
            .collect();

        let mut full = AdjSketch::new(3, 0.25, 2024).unwrap();
        for e in &events {
            full.next(e).unwrap();
        }

        let mut half = AdjSketch::new(3, 0.25, 2024).unwrap();
        for e in &events[..30] {
            half.next(e).unwrap();
        }
        let mut buf = Vec::new();
        half.save(&mut buf).unwrap();
        let mut resumed = AdjSketch::load(buf.as_slice()).unwrap();
        for e in &events[30..] {
            resumed.next(e).unwrap();
        }

        assert_eq!(state_json(&full), state_json(&resumed));
    }

    #[test]
    fn snapshot_version_checked() {
        let sketch = AdjSketch::new(2, 0.1, 0).unwrap();
        let mut snap = sketch.snapshot();
        snap.version = 999;
        assert!(matches!(
            AdjSketch::from_snapshot(snap),
            Err(SketchError::UnsupportedVersion(999))
        ));
    }

    #[test]
    fn allocation_stays_within_rows_times_q() {
        let q = 3;
        let mut sketch = AdjSketch::new(q, 0.1, 4).unwrap();
        for i in 0..100u64 {
            sketch.next(&ev((i % 10) as NodeId, (i % 7) as NodeId, i)).unwrap();
        }
        assert!(sketch.allocated_slot_cells() <= sketch.row_count() * q);
        assert_eq!(sketch.row_count(), 7);
    }
}
