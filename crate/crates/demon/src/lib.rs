//! Overlapping community detection for dynamically growing graphs.
//!
//! The pipeline is local-first: every vertex's ego-minus-ego network is
//! partitioned by label propagation and the resulting local groups are
//! merged into a global pool of overlapping communities under an ε overlap
//! threshold. Next to the batch pipeline there is an incremental one that
//! processes edge-addition events by updating only the affected ego
//! networks, their labels and their pool contributions, which is what makes
//! replaying a growing graph cheap.
//!
//! Modules:
//! - [`graph`]: dynamic undirected simple graph, CSV ingestion.
//! - [`ego`]: ego-minus-ego extraction and the incrementally maintained cache.
//! - [`labelprop`]: per-subgraph label propagation, batch and incremental.
//! - [`merge`]: the community pool, mapping tables and snapshot format.
//! - [`engine`]: batch/incremental orchestration with contribution provenance.
//! - [`similarity`]: best-match F1 between community snapshots.
//! - [`synth`]: deterministic synthetic graph generators.
//! - [`runner`]: replay harness producing snapshots, steps.csv and summaries.

pub mod ego;
pub mod engine;
pub mod graph;
pub mod labelprop;
pub mod merge;
pub mod runner;
pub mod similarity;
pub mod synth;

pub use engine::{run_batch, AnalysisState, Config, StepReport};
pub use graph::{Graph, NodeIdx, VertexId};
pub use merge::CommunityPool;
