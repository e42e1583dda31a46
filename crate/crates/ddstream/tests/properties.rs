//! Property tests over random streams: counter fidelity, determinism,
//! access budgets, parser laws, and heap coherence.

use std::collections::HashMap;
use std::io::Cursor;

use proptest::prelude::*;

use ddstream::oracle::StaticGraph;
use ddstream::sketch::AdjSketch;
use ddstream::stream::{collect_events, EdgeStream, NodeId, StreamOptions};
use ddstream::topk::TopKTracker;
use ddstream::EdgeEvent;

fn arb_events(max_len: usize, node_span: u32) -> impl Strategy<Value = Vec<EdgeEvent>> {
    prop::collection::vec((0..node_span, 0..node_span), 0..=max_len).prop_map(|pairs| {
        pairs
            .into_iter()
            .enumerate()
            .map(|(i, (t, h))| EdgeEvent::new(t, h, i as u64))
            .collect()
    })
}

proptest! {
    #[test]
    fn degree_counters_match_head_counts_on_every_prefix(
        events in arb_events(80, 8),
        seed in any::<u64>(),
    ) {
        let mut sketch = AdjSketch::new(3, 0.1, seed).unwrap();
        let mut expected: HashMap<NodeId, u64> = HashMap::new();
        for e in &events {
            sketch.next(e).unwrap();
            *expected.entry(e.head).or_default() += 1;
            for node in 0..8u32 {
                let got = sketch.row(node).map_or(0, |r| r.degree());
                prop_assert_eq!(got, expected.get(&node).copied().unwrap_or(0));
            }
        }
    }

    #[test]
    fn sketch_state_is_a_function_of_seed_and_events(
        events in arb_events(60, 6),
        seed in any::<u64>(),
    ) {
        let mut a = AdjSketch::new(2, 0.1, seed).unwrap();
        let mut b = AdjSketch::new(2, 0.1, seed).unwrap();
        for e in &events {
            a.next(e).unwrap();
            b.next(e).unwrap();
        }
        let sa = serde_json::to_string(&a.snapshot()).unwrap();
        let sb = serde_json::to_string(&b.snapshot()).unwrap();
        prop_assert_eq!(sa, sb);
    }

    #[test]
    fn queries_never_mutate_and_stay_in_budget(
        events in arb_events(60, 6),
        seed in any::<u64>(),
    ) {
        let q = 3;
        let mut sketch = AdjSketch::new(q, 0.1, seed).unwrap();
        for e in &events {
            sketch.next(e).unwrap();
        }
        let before = serde_json::to_string(&sketch.snapshot()).unwrap();
        for node in 0..8u32 {
            let estimate = sketch.query(node);
            prop_assert!(estimate >= 0.0);
            prop_assert!(sketch.access_count_probe(node) <= 2 * q + 1);
        }
        let after = serde_json::to_string(&sketch.snapshot()).unwrap();
        prop_assert_eq!(before, after);
        prop_assert!(sketch.allocated_slot_cells() <= sketch.row_count() * q);
    }

    #[test]
    fn snapshot_round_trips_any_state(
        events in arb_events(50, 6),
        seed in any::<u64>(),
    ) {
        let mut sketch = AdjSketch::new(2, 0.3, seed).unwrap();
        for e in &events {
            sketch.next(e).unwrap();
        }
        let mut buf = Vec::new();
        sketch.save(&mut buf).unwrap();
        let loaded = AdjSketch::load(buf.as_slice()).unwrap();
        prop_assert_eq!(
            serde_json::to_string(&sketch.snapshot()).unwrap(),
            serde_json::to_string(&loaded.snapshot()).unwrap()
        );
    }

    #[test]
    fn parser_event_count_follows_direction_mode(
        lines in prop::collection::vec((0u32..50, 0u32..50), 0..40),
        directed in any::<bool>(),
    ) {
        let mut text = String::from("# generated\n");
        for (a, b) in &lines {
            text.push_str(&format!("{a} {b}\n"));
        }
        let options = StreamOptions { directed, ..StreamOptions::default() };
        let (events, _) = collect_events(EdgeStream::new(Cursor::new(text.clone()), options)).unwrap();
        let factor = if directed { 1 } else { 2 };
        prop_assert_eq!(events.len(), lines.len() * factor);
        // seq is strictly increasing and dense.
        for (i, e) in events.iter().enumerate() {
            prop_assert_eq!(e.seq, i as u64);
        }
        // Replay gives the identical sequence.
        let (replay, _) = collect_events(EdgeStream::new(Cursor::new(text), options)).unwrap();
        prop_assert_eq!(events, replay);
    }

    #[test]
    fn tracker_respects_capacity_and_min_property(
        events in arb_events(120, 10),
        seed in any::<u64>(),
        k in 1usize..6,
    ) {
        let mut sketch = AdjSketch::new(2, 0.1, seed).unwrap();
        let mut tracker = TopKTracker::new(k);
        for e in &events {
            tracker.next(&mut sketch, e).unwrap();
            prop_assert!(tracker.len() <= k);
            // Membership coherence: no node appears twice.
            let mut nodes: Vec<NodeId> = tracker.entries().iter().map(|e| e.node).collect();
            nodes.sort_unstable();
            nodes.dedup();
            prop_assert_eq!(nodes.len(), tracker.len());
            if let Some(min) = tracker.peek_min() {
                for entry in tracker.entries() {
                    prop_assert!(entry.estimate >= min.estimate);
                }
                // query() is sorted descending and ends at the minimum.
                let ranked = tracker.query();
                for w in ranked.windows(2) {
                    prop_assert!(w[0].1 >= w[1].1);
                }
                prop_assert_eq!(ranked.last().unwrap().1, min.estimate);
            }
        }
    }

    #[test]
    fn oracle_counts_match_sketch_counters(
        events in arb_events(80, 8),
        seed in any::<u64>(),
    ) {
        let g = StaticGraph::build(&events);
        let mut sketch = AdjSketch::new(2, 0.1, seed).unwrap();
        for e in &events {
            sketch.next(e).unwrap();
        }
        for node in 0..8u32 {
            prop_assert_eq!(
                g.in_degree(node),
                sketch.row(node).map_or(0, |r| r.degree())
            );
        }
        prop_assert_eq!(g.edge_count() as usize, events.len());
    }
}
