//! Bounded-memory estimation of diffusion-degree centrality over insert-only
//! edge streams, with online top-k influence tracking and a verification
//! harness (exact oracle, error-bound validator, Independent Cascade
//! simulator).
//!
//! The central structure is [`sketch::AdjSketch`]: one degree counter plus
//! up to `q` slots of in-neighbors sampled with replacement per node, in
//! `O(n * q)` cells total. Point queries return an unbiased estimate of the
//! exact diffusion degree `lambda * (d_u + sum of in-neighbor degrees)`
//! that [`oracle::StaticGraph`] computes from full adjacency. The slot
//! budget can be chosen from an error target via [`analysis::q_for`], and
//! [`topk::TopKTracker`] maintains the running top-k nodes by estimate for
//! influence maximization, evaluated by [`icm::simulate`].

pub mod analysis;
pub mod icm;
pub mod oracle;
pub mod rswr;
pub mod seeding;
pub mod sketch;
pub mod stream;
pub mod synth;
pub mod topk;

pub use oracle::StaticGraph;
pub use sketch::{AdjSketch, SketchMode};
pub use stream::{EdgeEvent, NodeId, NodeInterner};
pub use topk::TopKTracker;
