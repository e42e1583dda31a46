//! Statistical validation and measurement: slot budget from an error
//! target, empirical checking of the estimator's error bound, mean-error
//! reports against the oracle, space accounting, and phase timing.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{OracleError, StaticGraph};
use crate::seeding::derive_seed;
use crate::sketch::AdjSketch;
use crate::stream::{EdgeEvent, NodeId};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("at least 1000 trials required for a rate estimate, got {0}")]
    TooFewTrials(u64),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sketch(#[from] crate::sketch::SketchError),
}

/// Smallest slot budget q with `2 * exp(-2 q epsilon^2) <= delta`,
/// i.e. `ceil(ln(2/delta) / (2 epsilon^2))`.
pub fn q_for(epsilon: f64, delta: f64) -> Result<usize, AnalysisError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(AnalysisError::InvalidEpsilon(epsilon));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AnalysisError::InvalidDelta(delta));
    }
    let satisfies = |q: f64| 2.0 * (-2.0 * q * epsilon * epsilon).exp() <= delta;
    let mut q = ((2.0 / delta).ln() / (2.0 * epsilon * epsilon)).ceil().max(1.0);
    // Guard the ceiling against float rounding at exact-integer boundaries.
    while q > 1.0 && satisfies(q - 1.0) {
        q -= 1.0;
    }
    while !satisfies(q) {
        q += 1.0;
    }
    Ok(q as usize)
}

/// Outcome of an empirical check of the estimator's error bound at one node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCheckResult {
    pub node: NodeId,
    pub q_used: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    /// Trials where |estimate - exact| exceeded the bound radius.
    pub violations: u64,
    pub empirical_rate: f64,
    /// Bound radius per checked node: epsilon * (b_u - a_u) * d_u * lambda.
    pub bound_per_node: BTreeMap<NodeId, f64>,
    /// Min and max in-degree among the node's in-neighbors.
    pub a_u: u64,
    pub b_u: u64,
    /// True when b_u == a_u: the bound radius collapses to zero, so the
    /// violation rate is reported but excluded from pass/fail judgments.
    pub degenerate: bool,
}

impl BoundCheckResult {
    /// Tolerated rate: delta plus three standard errors of a rate estimate.
    pub fn rate_threshold(&self) -> f64 {
        self.delta + 3.0 * (self.delta * (1.0 - self.delta) / self.trials as f64).sqrt()
    }

    /// Whether the empirical rate stays within the tolerated rate. Always
    /// true for degenerate nodes, which the caller should report separately.
    pub fn within_bound(&self) -> bool {
        self.degenerate || self.empirical_rate <= self.rate_threshold()
    }
}

/// Replay order used when rebuilding sketches from a retained graph: rows
/// in ascending node order, each row's in-edges in original arrival order.
/// A node's estimate distribution only depends on its own row's edge order
/// and on final degrees, so cross-row interleaving does not matter.
fn canonical_events(g: &StaticGraph) -> Vec<EdgeEvent> {
    let mut events = Vec::with_capacity(g.edge_count() as usize);
    for head in g.nodes() {
        for &tail in g.in_neighbors(head) {
            let seq = events.len() as u64;
            events.push(EdgeEvent::new(tail, head, seq));
        }
    }
    events
}

/// Empirically validates the error bound at node `u`: builds `trials`
/// independently seeded sketches with `q = q_for(epsilon, delta)` over the
/// full stream and counts how often the absolute estimation error exceeds
/// `epsilon * (b_u - a_u) * d_u * lambda`.
pub fn hoeffding_validate(
    g: &StaticGraph,
    u: NodeId,
    epsilon: f64,
    delta: f64,
    trials: u64,
    lambda: f64,
    base_seed: u64,
) -> Result<BoundCheckResult, AnalysisError> {
    let q = q_for(epsilon, delta)?;
    if trials < 1000 {
        return Err(AnalysisError::TooFewTrials(trials));
    }
    let (a_u, b_u) = g.neighbor_degree_bounds(u)?;
    let d_u = g.in_degree(u) as f64;
    let radius = epsilon * (b_u - a_u) as f64 * d_u * lambda;
    let exact = g.exact_dd(u, lambda);
    let events = canonical_events(g);

    let violations: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut sketch = AdjSketch::new(q, lambda, derive_seed(base_seed, trial))
                .expect("validated parameters");
            for e in &events {
                sketch.next(e).expect("uniform events");
            }
            u64::from((sketch.query(u) - exact).abs() > radius)
        })
        .sum();

    let mut bound_per_node = BTreeMap::new();
    bound_per_node.insert(u, radius);
    Ok(BoundCheckResult {
        node: u,
        q_used: q,
        epsilon,
        delta,
        trials,
        violations,
        empirical_rate: violations as f64 / trials as f64,
        bound_per_node,
        a_u,
        b_u,
        degenerate: a_u == b_u,
    })
}

/// Absolute estimation errors of one sketch against the oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    pub per_node_abs_error: BTreeMap<NodeId, f64>,
    /// Arithmetic mean over the designated nodes; `None` when the list is
    /// empty (the mean is undefined, not zero).
    pub mean_error: Option<f64>,
}

/// `|query(u) - exact_dd(u)|` per listed node, evaluated at `lambda`, and
/// the mean over the list. Pure in its inputs.
pub fn mean_error(
    g: &StaticGraph,
    sketch: &AdjSketch,
    nodes: &[NodeId],
    lambda: f64,
) -> ErrorReport {
    let mut per_node_abs_error = BTreeMap::new();
    let mut total = 0.0;
    for &u in nodes {
        let err = (sketch.query_at(u, lambda) - g.exact_dd(u, lambda)).abs();
        per_node_abs_error.insert(u, err);
        total += err;
    }
    let mean_error = if nodes.is_empty() {
        None
    } else {
        Some(total / nodes.len() as f64)
    };
    ErrorReport {
        per_node_abs_error,
        mean_error,
    }
}

/// Idealized and actual memory accounting of a sketch next to full storage.
///
/// Idealized counts use the claim's model: the sketch takes `n + n(q+1)`
/// cells, the full adjacency `n + m`; the advantage flag is then exactly
/// the predicate `q < d_in - 1` with `d_in = m/n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceReport {
    pub sketch_cells: u64,
    pub full_graph_cells: u64,
    pub advantage: bool,
    pub d_in: f64,
    pub q: usize,
    /// Rows actually allocated (nodes seen as a head).
    pub actual_rows: u64,
    /// Slot cells actually allocated; at most `actual_rows * q`.
    pub actual_slot_cells: u64,
}

pub fn space_report(sketch: &AdjSketch, g: &StaticGraph) -> SpaceReport {
    let n = g.node_count() as u64;
    let m = g.edge_count();
    let q = sketch.q() as u64;
    let sketch_cells = n + n * (q + 1);
    let full_graph_cells = n + m;
    SpaceReport {
        sketch_cells,
        full_graph_cells,
        advantage: sketch_cells < full_graph_cells,
        d_in: g.mean_in_degree(),
        q: sketch.q(),
        actual_rows: sketch.row_count() as u64,
        actual_slot_cells: sketch.allocated_slot_cells() as u64,
    }
}

/// Wall-clock durations of the pipeline phases, in seconds when serialized.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TimingReport {
    phases: Vec<(String, f64)>,
}

impl TimingReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Times `f`, recording the duration under `phase`.
    pub fn measure<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.record(phase, start.elapsed());
        out
    }

    pub fn record(&mut self, phase: &str, duration: Duration) {
        self.phases.push((phase.to_string(), duration.as_secs_f64()));
    }

    /// (phase, seconds) pairs in recording order.
    pub fn phases(&self) -> &[(String, f64)] {
        &self.phases
    }
}
