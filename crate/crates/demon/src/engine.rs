//! Batch and incremental community-detection pipelines over one shared
//! analysis state.
//!
//! Batch: for every vertex, extract the ego-minus-ego network, run label
//! propagation, re-add the ego to each of its local groups and submit them
//! to the merge pool.
//!
//! Incremental: one edge event updates the graph and the ego cache, local
//! label updates run on the changed egos only, and only egos whose local
//! groups actually changed resubmit. A provenance ledger records which ego
//! contributed which groups to which pool communities, so a changed ego's
//! stale contributions can be retired: the pool communities they fed are
//! dismantled and every still-valid contribution from other egos is
//! resubmitted alongside the ego's new groups.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ego::EgoCache;
use crate::graph::{Graph, GraphError, NodeIdx, VertexId};
use crate::labelprop::{
    ego_seed, incremental_label_update, labels_to_communities, propagate_labels_with,
    LabelState, TieBreak,
};
use crate::merge::{CandidateOrder, CommunityId, CommunityPool};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("analysis state incoherent: {0}")]
    Coherence(String),
}

/// Pipeline parameters shared by both modes.
#[derive(Debug, Clone)]
pub struct Config {
    pub epsilon: f64,
    pub max_iter: u32,
    pub seed: u64,
    pub tie_break: TieBreak,
    /// Local groups smaller than this (ego included) are not submitted.
    pub min_community_size: usize,
    pub merge_order: CandidateOrder,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            epsilon: 0.25,
            max_iter: 100,
            seed: 42,
            tie_break: TieBreak::Deterministic,
            min_community_size: 3,
            merge_order: CandidateOrder::Ascending,
        }
    }
}

/// Cumulative pipeline counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineCounters {
    pub groups_submitted: u64,
    pub merges: u64,
}

/// Outcome of one edge event.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub source: VertexId,
    pub target: VertexId,
    /// False when the edge already existed and the event was a no-op.
    pub applied: bool,
    pub egos_touched: usize,
    pub communities_resubmitted: usize,
    pub merges: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
struct Contribution {
    ego: NodeIdx,
    members: BTreeSet<NodeIdx>,
}

type ContribId = u64;

/// Mutable state shared by the batch and incremental pipelines.
#[derive(Debug)]
pub struct AnalysisState {
    pub graph: Graph,
    pub cache: EgoCache,
    pub label_states: BTreeMap<NodeIdx, LabelState>,
    pub pool: CommunityPool,
    pub config: Config,
    pub counters: EngineCounters,
    contribs: BTreeMap<ContribId, Contribution>,
    ego_contribs: BTreeMap<NodeIdx, Vec<ContribId>>,
    provenance: BTreeMap<CommunityId, BTreeSet<ContribId>>,
    next_contrib: ContribId,
}

fn canon(a: NodeIdx, b: NodeIdx) -> (NodeIdx, NodeIdx) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl AnalysisState {
    fn empty(graph: Graph, cache: EgoCache, config: Config) -> Self {
        Self {
            graph,
            cache,
            label_states: BTreeMap::new(),
            pool: CommunityPool::with_order(config.epsilon, config.merge_order),
            config,
            counters: EngineCounters::default(),
            contribs: BTreeMap::new(),
            ego_contribs: BTreeMap::new(),
            provenance: BTreeMap::new(),
            next_contrib: 0,
        }
    }

    /// Local groups an ego currently stands behind: its label groups with
    /// the ego re-added, minimum size applied, ordered by smallest member.
    /// The ego was removed from its own neighborhood only to keep label
    /// propagation unbiased; it belongs to every community found there.
    pub fn local_groups(&self, ego: NodeIdx) -> Vec<BTreeSet<NodeIdx>> {
        let Some(state) = self.label_states.get(&ego) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for mut group in labels_to_communities(state).groups {
            group.insert(ego);
            if group.len() >= self.config.min_community_size {
                out.push(group);
            }
        }
        out
    }

    fn submit(&mut self, cid: ContribId, members: BTreeSet<NodeIdx>) {
        let report = self
            .pool
            .merge_into_pool(members)
            .expect("submitted groups are nonempty");
        let mut prov: BTreeSet<ContribId> = [cid].into();
        for absorbed in &report.absorbed {
            if let Some(p) = self.provenance.remove(absorbed) {
                prov.extend(p);
            }
        }
        self.provenance.insert(report.resulting, prov);
        self.counters.groups_submitted += 1;
        self.counters.merges += report.absorbed.len() as u64;
    }

    fn submit_new_contrib(&mut self, ego: NodeIdx, members: BTreeSet<NodeIdx>) {
        let cid = self.next_contrib;
        self.next_contrib += 1;
        self.contribs.insert(
            cid,
            Contribution {
                ego,
                members: members.clone(),
            },
        );
        self.ego_contribs.entry(ego).or_default().push(cid);
        self.submit(cid, members);
    }

    /// Retires the ego's stale contributions when its local groups changed:
    /// every pool community fed by this ego is dismantled, contributions
    /// from other egos are resubmitted, then the ego's current groups go in.
    /// Returns the dismantled community ids; empty when nothing changed.
    pub fn provenance_retire(&mut self, ego: NodeIdx) -> Vec<CommunityId> {
        let new_groups = self.local_groups(ego);
        self.retire_and_resubmit(ego, new_groups)
    }

    fn retire_and_resubmit(
        &mut self,
        ego: NodeIdx,
        new_groups: Vec<BTreeSet<NodeIdx>>,
    ) -> Vec<CommunityId> {
        let old_cids: Vec<ContribId> = self.ego_contribs.get(&ego).cloned().unwrap_or_default();
        let mut old_sets: Vec<&BTreeSet<NodeIdx>> =
            old_cids.iter().map(|c| &self.contribs[c].members).collect();
        let mut new_sets: Vec<&BTreeSet<NodeIdx>> = new_groups.iter().collect();
        old_sets.sort();
        new_sets.sort();
        if old_sets == new_sets {
            return Vec::new();
        }

        let old_set: BTreeSet<ContribId> = old_cids.iter().copied().collect();
        let retired: Vec<CommunityId> = self
            .provenance
            .iter()
            .filter(|(_, prov)| !prov.is_disjoint(&old_set))
            .map(|(&id, _)| id)
            .collect();

        let mut survivors: Vec<ContribId> = Vec::new();
        for &id in &retired {
            self.pool.remove_community(id).expect("retired id is live");
            let prov = self.provenance.remove(&id).expect("provenance tracked");
            survivors.extend(prov.into_iter().filter(|c| !old_set.contains(c)));
        }
        for cid in &old_cids {
            self.contribs.remove(cid);
        }
        self.ego_contribs.remove(&ego);

        survivors.sort_unstable();
        for cid in survivors {
            let members = self.contribs[&cid].members.clone();
            self.submit(cid, members);
        }
        for group in new_groups {
            self.submit_new_contrib(ego, group);
        }
        retired
    }

    /// Applies one edge-addition event. Graph and ego cache update first;
    /// each changed ego refreshes its labels (incrementally when the prior
    /// state is usable, full propagation otherwise) and resubmits only if
    /// its local groups changed.
    pub fn apply_event(&mut self, src: VertexId, dst: VertexId) -> Result<StepReport, EngineError> {
        let start = Instant::now();
        let was_new = self.graph.add_edge(src, dst)?;
        if !was_new {
            return Ok(StepReport {
                source: src,
                target: dst,
                applied: false,
                egos_touched: 0,
                communities_resubmitted: 0,
                merges: 0,
                elapsed: start.elapsed(),
            });
        }
        let u = self.graph.resolve(src).expect("endpoint interned");
        let v = self.graph.resolve(dst).expect("endpoint interned");
        let changed = self.cache.apply_edge(&self.graph, u, v);

        for &ego in &changed {
            let sub = self.cache.entry(ego);
            let (added, changed_edges): (BTreeSet<NodeIdx>, BTreeSet<(NodeIdx, NodeIdx)>) =
                if ego == u {
                    let edges = changed
                        .iter()
                        .filter(|&&w| w != u && w != v)
                        .map(|&w| canon(v, w))
                        .collect();
                    ([v].into(), edges)
                } else if ego == v {
                    let edges = changed
                        .iter()
                        .filter(|&&w| w != u && w != v)
                        .map(|&w| canon(u, w))
                        .collect();
                    ([u].into(), edges)
                } else {
                    (BTreeSet::new(), [canon(u, v)].into())
                };

            let updated = match self.label_states.get(&ego) {
                Some(prev) => incremental_label_update(sub, prev, &added, &changed_edges).ok(),
                None => None,
            };
            // fallback: full propagation for egos the incremental path
            // cannot express (first edge, stale state)
            let state = updated.unwrap_or_else(|| {
                propagate_labels_with(
                    sub,
                    self.config.max_iter,
                    ego_seed(self.config.seed, self.graph.external_id(ego)),
                    self.config.tie_break,
                )
            });
            self.label_states.insert(ego, state);
        }

        let groups_before = self.counters.groups_submitted;
        let merges_before = self.counters.merges;
        for &ego in &changed {
            self.provenance_retire(ego);
        }

        Ok(StepReport {
            source: src,
            target: dst,
            applied: true,
            egos_touched: changed.len(),
            communities_resubmitted: (self.counters.groups_submitted - groups_before) as usize,
            merges: (self.counters.merges - merges_before) as usize,
            elapsed: start.elapsed(),
        })
    }

    /// Full coherence audit: ego cache vs from-scratch extraction, both pool
    /// tables vs rebuild, label coverage, and provenance bookkeeping.
    pub fn check_coherence(&self) -> Result<(), EngineError> {
        let n = self.graph.vertex_count();
        let fresh = EgoCache::build(&self.graph);
        if !self.cache.same_entries(&fresh, n) {
            return Err(EngineError::Coherence(
                "ego cache diverges from full rebuild".into(),
            ));
        }
        self.pool.verify_tables().map_err(EngineError::Coherence)?;

        for v in 0..n as NodeIdx {
            let entry = self.cache.entry(v);
            match self.label_states.get(&v) {
                Some(state) => {
                    let labeled: BTreeSet<NodeIdx> = state.labels.keys().copied().collect();
                    let expected: BTreeSet<NodeIdx> = entry.vertices.iter().copied().collect();
                    if labeled != expected {
                        return Err(EngineError::Coherence(format!(
                            "label state of ego {v} does not cover its subgraph"
                        )));
                    }
                }
                None => {
                    if !entry.is_empty() {
                        return Err(EngineError::Coherence(format!(
                            "ego {v} has a cache entry but no label state"
                        )));
                    }
                }
            }
        }

        let live: BTreeSet<CommunityId> = self.pool.communities().map(|c| c.id).collect();
        let tracked: BTreeSet<CommunityId> = self.provenance.keys().copied().collect();
        if live != tracked {
            return Err(EngineError::Coherence(
                "provenance keys diverge from live communities".into(),
            ));
        }
        let mut seen: BTreeSet<ContribId> = BTreeSet::new();
        for (&id, prov) in &self.provenance {
            let mut union: BTreeSet<NodeIdx> = BTreeSet::new();
            for cid in prov {
                if !seen.insert(*cid) {
                    return Err(EngineError::Coherence(format!(
                        "contribution {cid} appears in two communities"
                    )));
                }
                let contrib = self.contribs.get(cid).ok_or_else(|| {
                    EngineError::Coherence(format!("provenance references dead contribution {cid}"))
                })?;
                union.extend(contrib.members.iter().copied());
            }
            let members = &self.pool.get(id).expect("id is live").members;
            if &union != members {
                return Err(EngineError::Coherence(format!(
                    "community {id} is not the union of its contributions"
                )));
            }
        }
        if seen.len() != self.contribs.len() {
            return Err(EngineError::Coherence(
                "orphaned contribution records".into(),
            ));
        }
        for (&ego, cids) in &self.ego_contribs {
            for cid in cids {
                match self.contribs.get(cid) {
                    Some(c) if c.ego == ego => {}
                    _ => {
                        return Err(EngineError::Coherence(format!(
                            "contribution {cid} not owned by ego {ego}"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    /// Rebuilds a pool from every ego's current local groups, in ego order.
    /// This is the from-scratch oracle the provenance fuzz tests compare
    /// the incrementally maintained pool against.
    pub fn pool_from_current_groups(&self) -> CommunityPool {
        let mut pool = CommunityPool::with_order(self.config.epsilon, self.config.merge_order);
        for v in 0..self.graph.vertex_count() as NodeIdx {
            for group in self.local_groups(v) {
                pool.merge_into_pool(group).expect("groups are nonempty");
            }
        }
        pool
    }
}

/// Runs the batch pipeline over every vertex of the graph in ascending
/// internal order.
pub fn run_batch(graph: Graph, config: Config) -> AnalysisState {
    let cache = EgoCache::build(&graph);
    let mut state = AnalysisState::empty(graph, cache, config);
    for ego in 0..state.graph.vertex_count() as NodeIdx {
        if state.cache.entry(ego).is_empty() {
            continue;
        }
        let seed = ego_seed(state.config.seed, state.graph.external_id(ego));
        let ls = propagate_labels_with(
            state.cache.entry(ego),
            state.config.max_iter,
            seed,
            state.config.tie_break,
        );
        state.label_states.insert(ego, ls);
        for group in state.local_groups(ego) {
            state.submit_new_contrib(ego, group);
        }
    }
    state
}
