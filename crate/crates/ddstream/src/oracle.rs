//! Ground truth against which the sketch is validated: retains the full
//! multigraph, computes exact diffusion degrees, neighbor-degree extremes,
//! and the exact top-k ranking. Deliberately unbounded in memory.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::stream::{EdgeEvent, NodeId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("node {0} has no in-neighbors; degree bounds are undefined")]
    NoInNeighbors(NodeId),
}

/// Full adjacency retained from a stream. In-neighbor lists are multisets:
/// parallel edges contribute repeatedly, matching the sketch's counters.
#[derive(Debug, Clone, Default)]
pub struct StaticGraph {
    in_adj: HashMap<NodeId, Vec<NodeId>>,
    nodes: BTreeSet<NodeId>,
    edge_count: u64,
}

impl StaticGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Materializes a graph from a replayable event sequence.
    pub fn build<'a, I: IntoIterator<Item = &'a EdgeEvent>>(events: I) -> Self {
        let mut g = Self::new();
        for event in events {
            g.add_event(event);
        }
        g
    }

    pub fn add_event(&mut self, event: &EdgeEvent) {
        self.in_adj.entry(event.head).or_default().push(event.tail);
        self.nodes.insert(event.head);
        self.nodes.insert(event.tail);
        self.edge_count += 1;
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    pub fn contains_node(&self, u: NodeId) -> bool {
        self.nodes.contains(&u)
    }

    /// All node ids in ascending order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    /// In-neighbors of `u` in arrival order, duplicates kept.
    pub fn in_neighbors(&self, u: NodeId) -> &[NodeId] {
        self.in_adj.get(&u).map_or(&[], |v| v.as_slice())
    }

    pub fn in_degree(&self, u: NodeId) -> u64 {
        self.in_neighbors(u).len() as u64
    }

    /// Average in-degree m / n; 0 for the empty graph.
    pub fn mean_in_degree(&self) -> f64 {
        if self.nodes.is_empty() {
            0.0
        } else {
            self.edge_count as f64 / self.nodes.len() as f64
        }
    }

    /// Exact diffusion degree: `lambda * (d_u + sum of in-neighbor degrees)`,
    /// the in-neighbor multiset contributing once per parallel edge.
    pub fn exact_dd(&self, u: NodeId, lambda: f64) -> f64 {
        let d = self.in_degree(u);
        let neighbor_sum: u64 = self
            .in_neighbors(u)
            .iter()
            .map(|&v| self.in_degree(v))
            .sum();
        lambda * (d + neighbor_sum) as f64
    }

    /// `(a_u, b_u)`: minimum and maximum in-degree among `u`'s in-neighbors.
    pub fn neighbor_degree_bounds(&self, u: NodeId) -> Result<(u64, u64), OracleError> {
        let neighbors = self.in_neighbors(u);
        if neighbors.is_empty() {
            return Err(OracleError::NoInNeighbors(u));
        }
        let mut min = u64::MAX;
        let mut max = 0;
        for &v in neighbors {
            let d = self.in_degree(v);
            min = min.min(d);
            max = max.max(d);
        }
        Ok((min, max))
    }

    /// Nodes ranked by exact diffusion degree descending, ties broken by
    /// ascending node id, truncated to `k`.
    pub fn exact_topk(&self, k: usize, lambda: f64) -> Vec<(NodeId, f64)> {
        let mut ranked: Vec<(NodeId, f64)> = self
            .nodes
            .iter()
            .map(|&u| (u, self.exact_dd(u, lambda)))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(tail: NodeId, head: NodeId, seq: u64) -> EdgeEvent {
        EdgeEvent::new(tail, head, seq)
    }

    #[test]
    fn build_appends_in_order() {
        let g = StaticGraph::build(&[ev(0, 2, 0), ev(1, 2, 1)]);
        assert_eq!(g.in_neighbors(2), &[0, 1]);
        assert_eq!(g.in_degree(2), 2);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn duplicate_edges_kept() {
        let g = StaticGraph::build(&[ev(0, 1, 0), ev(0, 1, 1)]);
        assert_eq!(g.in_neighbors(1), &[0, 0]);
        assert_eq!(g.in_degree(1), 2);
    }

    #[test]
    fn empty_stream_is_empty_graph() {
        let g = StaticGraph::build(&[]);
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.exact_dd(0, 0.1), 0.0);
    }

    #[test]
    fn star_diffusion_degree() {
        // u = 3 with in-neighbors 0, 1, 2, each of in-degree 0.
        let g = StaticGraph::build(&[ev(0, 3, 0), ev(1, 3, 1), ev(2, 3, 2)]);
        assert!((g.exact_dd(3, 0.1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn three_cycle_diffusion_degree() {
        let g = StaticGraph::build(&[ev(0, 1, 0), ev(1, 2, 1), ev(2, 0, 2)]);
        for u in 0..3 {
            assert!((g.exact_dd(u, 0.1) - 0.2).abs() < 1e-15, "node {u}");
        }
    }

    #[test]
    fn isolated_node_scores_zero() {
        let g = StaticGraph::build(&[ev(0, 1, 0)]);
        // 0 is a tail only: degree 0, empty neighbor sum.
        assert_eq!(g.exact_dd(0, 0.1), 0.0);
        assert_eq!(g.exact_dd(42, 0.1), 0.0); // unknown node
    }

    #[test]
    fn dd_is_linear_in_lambda() {
        let g = StaticGraph::build(&[ev(0, 1, 0), ev(2, 1, 1), ev(1, 2, 2)]);
        for u in 0..3 {
            assert_eq!(g.exact_dd(u, 0.2), 2.0 * g.exact_dd(u, 0.1));
        }
    }

    #[test]
    fn degree_bounds_min_and_max() {
        // u=4 has in-neighbors 0 (degree 3) and 1 (degree 1).
        let g = StaticGraph::build(&[
            ev(0, 4, 0),
            ev(1, 4, 1),
            ev(2, 0, 2),
            ev(2, 0, 3),
            ev(3, 0, 4),
            ev(3, 1, 5),
        ]);
        assert_eq!(g.neighbor_degree_bounds(4), Ok((1, 3)));
    }

    #[test]
    fn degree_bounds_singleton_and_constant() {
        let g = StaticGraph::build(&[ev(0, 1, 0), ev(2, 0, 1), ev(3, 0, 2)]);
        assert_eq!(g.neighbor_degree_bounds(1), Ok((2, 2)));
        let g2 = StaticGraph::build(&[ev(0, 1, 0), ev(0, 2, 1), ev(3, 0, 2)]);
        assert_eq!(g2.neighbor_degree_bounds(1), Ok((1, 1)));
        assert_eq!(g2.neighbor_degree_bounds(2), Ok((1, 1)));
    }

    #[test]
    fn degree_bounds_undefined_without_in_neighbors() {
        let g = StaticGraph::build(&[ev(0, 1, 0)]);
        assert_eq!(
            g.neighbor_degree_bounds(0),
            Err(OracleError::NoInNeighbors(0))
        );
    }

    #[test]
    fn topk_orders_and_truncates() {
        let g = StaticGraph::build(&[ev(0, 3, 0), ev(1, 3, 1), ev(2, 3, 2)]);
        let top = g.exact_topk(1, 0.1);
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].0, 3);
        assert!((top[0].1 - 0.3).abs() < 1e-15);

        // k >= n returns everything.
        assert_eq!(g.exact_topk(100, 0.1).len(), 4);
    }

    #[test]
    fn topk_ties_break_by_ascending_id() {
        let g = StaticGraph::build(&[ev(0, 1, 0), ev(1, 2, 1), ev(2, 0, 2)]);
        let top = g.exact_topk(3, 0.1);
        let ids: Vec<NodeId> = top.iter().map(|&(u, _)| u).collect();
        assert_eq!(ids, vec![0, 1, 2]);
    }
}
