//! Label propagation over one ego-minus-ego subgraph.
//!
//! Batch propagation seeds every vertex with its own id and sweeps in
//! seeded-shuffled order until a sweep changes nothing or the iteration cap
//! is hit. Each vertex adopts the most frequent label among its neighbors;
//! its own current label is not part of the tally. Ties break to the
//! smallest label by default, with an opt-in seeded-random mode.
//!
//! The incremental path assigns labels to newly arrived vertices from their
//! neighbors and then re-propagates only on the frontier around the delta,
//! so label work stays proportional to the change, not the subgraph.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ego::EgoMinusEgo;
use crate::graph::NodeIdx;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("label state incoherent with subgraph: {0}")]
    Coherence(String),
}

/// Tie-breaking rule when several labels share the top frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Smallest label wins. Deterministic, the default.
    #[default]
    Deterministic,
    /// Seeded-uniform choice among the tied labels.
    Random,
}

/// Labels of one subgraph after propagation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelState {
    pub labels: BTreeMap<NodeIdx, NodeIdx>,
    /// Sweeps executed by the last (full or local) propagation.
    pub t: u32,
    pub max_iter: u32,
    pub seed: u64,
    pub tie_break: TieBreak,
    /// Incremental updates applied since the full propagation; salts the
    /// RNG stream of each local re-propagation.
    pub epoch: u64,
}

/// Disjoint label groups covering the subgraph, ordered by smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalCommunities {
    pub groups: Vec<BTreeSet<NodeIdx>>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a per-ego propagation seed so results do not depend on the order
/// egos are processed in.
pub fn ego_seed(global_seed: u64, ego_external: u64) -> u64 {
    splitmix64(global_seed ^ splitmix64(ego_external))
}

fn local_adjacency(sub: &EgoMinusEgo) -> BTreeMap<NodeIdx, Vec<NodeIdx>> {
    let mut adj: BTreeMap<NodeIdx, Vec<NodeIdx>> = BTreeMap::new();
    for &v in &sub.vertices {
        adj.insert(v, Vec::new());
    }
    for &(a, b) in &sub.edges {
        adj.get_mut(&a).expect("edge endpoint in vertices").push(b);
        adj.get_mut(&b).expect("edge endpoint in vertices").push(a);
    }
    for nbrs in adj.values_mut() {
        nbrs.sort_unstable();
    }
    adj
}

/// Most frequent label among `neighbor_labels`; `None` when empty.
fn majority_label(
    neighbor_labels: impl Iterator<Item = NodeIdx>,
    tie_break: TieBreak,
    rng: &mut ChaCha8Rng,
) -> Option<NodeIdx> {
    let mut counts: BTreeMap<NodeIdx, u32> = BTreeMap::new();
    for l in neighbor_labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let top = *counts.values().max()?;
    let mut winners = counts
        .into_iter()
        .filter_map(|(l, c)| (c == top).then_some(l));
    match tie_break {
        TieBreak::Deterministic => winners.next(),
        TieBreak::Random => {
            let ws: Vec<NodeIdx> = winners.collect();
            Some(ws[rng.random_range(0..ws.len())])
        }
    }
}

/// Runs sweeps over `order` (reshuffled each sweep), updating `labels` in
/// place. Returns the number of sweeps executed.
fn sweep_until_stable(
    adj: &BTreeMap<NodeIdx, Vec<NodeIdx>>,
    labels: &mut BTreeMap<NodeIdx, NodeIdx>,
    order: &mut [NodeIdx],
    max_iter: u32,
    tie_break: TieBreak,
    rng: &mut ChaCha8Rng,
) -> u32 {
    let mut sweeps = 0;
    while sweeps < max_iter {
        order.shuffle(rng);
        sweeps += 1;
        let mut changed = false;
        for &v in order.iter() {
            let Some(nbrs) = adj.get(&v) else { continue };
            let new = majority_label(nbrs.iter().map(|n| labels[n]), tie_break, rng);
            if let Some(new) = new {
                if labels[&v] != new {
                    labels.insert(v, new);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    sweeps
}

/// Full label propagation over a subgraph with the default deterministic
/// tie-break.
pub fn propagate_labels(sub: &EgoMinusEgo, max_iter: u32, seed: u64) -> LabelState {
    propagate_labels_with(sub, max_iter, seed, TieBreak::Deterministic)
}

pub fn propagate_labels_with(
    sub: &EgoMinusEgo,
    max_iter: u32,
    seed: u64,
    tie_break: TieBreak,
) -> LabelState {
    assert!(max_iter >= 1, "max_iter must be at least 1");
    let adj = local_adjacency(sub);
    let mut labels: BTreeMap<NodeIdx, NodeIdx> =
        sub.vertices.iter().map(|&v| (v, v)).collect();
    let mut order = sub.vertices.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = sweep_until_stable(&adj, &mut labels, &mut order, max_iter, tie_break, &mut rng);
    LabelState {
        labels,
        t,
        max_iter,
        seed,
        tie_break,
        epoch: 0,
    }
}

/// Groups vertices by final label. Output order is by smallest member id.
pub fn labels_to_communities(state: &LabelState) -> LocalCommunities {
    let mut by_label: BTreeMap<NodeIdx, BTreeSet<NodeIdx>> = BTreeMap::new();
    for (&v, &l) in &state.labels {
        by_label.entry(l).or_default().insert(v);
    }
    let mut groups: Vec<BTreeSet<NodeIdx>> = by_label.into_values().collect();
    groups.sort_by_key(|g| *g.first().expect("groups are nonempty"));
    LocalCommunities { groups }
}

/// Updates a converged label state after `added` vertices and
/// `changed_edges` joined the subgraph.
///
/// New vertices take the most frequent label among their already-labeled
/// neighbors (their own id when none). A bounded re-propagation then runs
/// restricted to the frontier — vertices within distance 1 of the delta —
/// until it stabilizes or `max_iter` local sweeps elapse. Labels outside the
/// frontier are never written.
pub fn incremental_label_update(
    sub: &EgoMinusEgo,
    state: &LabelState,
    added: &BTreeSet<NodeIdx>,
    changed_edges: &BTreeSet<(NodeIdx, NodeIdx)>,
) -> Result<LabelState, LabelError> {
    let sub_vertices: BTreeSet<NodeIdx> = sub.vertices.iter().copied().collect();
    for &v in added {
        if !sub_vertices.contains(&v) {
            return Err(LabelError::Coherence(format!(
                "added vertex {v} not in subgraph"
            )));
        }
        if state.labels.contains_key(&v) {
            return Err(LabelError::Coherence(format!(
                "added vertex {v} already labeled"
            )));
        }
    }
    let expected: BTreeSet<NodeIdx> = sub_vertices.difference(added).copied().collect();
    let labeled: BTreeSet<NodeIdx> = state.labels.keys().copied().collect();
    if expected != labeled {
        return Err(LabelError::Coherence(format!(
            "label state covers {} vertices, subgraph minus delta has {}",
            labeled.len(),
            expected.len()
        )));
    }
    for &(a, b) in changed_edges {
        if !sub_vertices.contains(&a) || !sub_vertices.contains(&b) {
            return Err(LabelError::Coherence(format!(
                "changed edge ({a},{b}) endpoint not in subgraph"
            )));
        }
    }

    let adj = local_adjacency(sub);
    let mut labels = state.labels.clone();
    let epoch = state.epoch + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(state.seed ^ splitmix64(epoch)));

    for &v in added {
        let nbr_labels = adj[&v].iter().filter_map(|n| labels.get(n).copied());
        let label =
            majority_label(nbr_labels, state.tie_break, &mut rng).unwrap_or(v);
        labels.insert(v, label);
    }

    // frontier: delta core plus its distance-1 neighborhood
    let mut frontier: BTreeSet<NodeIdx> = added.clone();
    for &(a, b) in changed_edges {
        frontier.insert(a);
        frontier.insert(b);
    }
    let core: Vec<NodeIdx> = frontier.iter().copied().collect();
    for v in core {
        frontier.extend(adj[&v].iter().copied());
    }

    let mut order: Vec<NodeIdx> = frontier.into_iter().collect();
    let t = sweep_until_stable(
        &adj,
        &mut labels,
        &mut order,
        state.max_iter,
        state.tie_break,
        &mut rng,
    );

    Ok(LabelState {
        labels,
        t,
        max_iter: state.max_iter,
        seed: state.seed,
        tie_break: state.tie_break,
        epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub_of(vertices: &[u32], edges: &[(u32, u32)]) -> EgoMinusEgo {
        let mut vs = vertices.to_vec();
        vs.sort_unstable();
        let mut es: Vec<(u32, u32)> = edges
            .iter()
            .map(|&(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        es.sort_unstable();
        EgoMinusEgo {
            ego: u32::MAX,
            vertices: vs,
            edges: es,
        }
    }

    fn groups_ext(state: &LabelState) -> Vec<Vec<u32>> {
        labels_to_communities(state)
            .groups
            .iter()
            .map(|g| g.iter().copied().collect())
            .collect()
    }

    #[test]
    fn edgeless_subgraph_keeps_own_labels() {
        let sub = sub_of(&[2, 3], &[]);
        let state = propagate_labels(&sub, 100, 7);
        assert_eq!(state.labels[&2], 2);
        assert_eq!(state.labels[&3], 3);
        assert_eq!(groups_ext(&state), vec![vec![2], vec![3]]);
    }

    #[test]
    fn triangle_converges_to_one_group() {
        let sub = sub_of(&[1, 2, 3], &[(1, 2), (2, 3), (1, 3)]);
        for seed in 0..20 {
            let state = propagate_labels(&sub, 100, seed);
            assert_eq!(groups_ext(&state).len(), 1, "seed {seed}");
            assert!(state.t < 100, "should converge before the cap");
        }
    }

    #[test]
    fn grouping_is_by_label_value() {
        let mk = |pairs: &[(u32, u32)]| LabelState {
            labels: pairs.iter().copied().collect(),
            t: 1,
            max_iter: 100,
            seed: 0,
            tie_break: TieBreak::Deterministic,
            epoch: 0,
        };
        assert_eq!(groups_ext(&mk(&[(2, 2), (3, 2)])), vec![vec![2, 3]]);
        assert_eq!(
            groups_ext(&mk(&[(1, 1), (2, 1), (3, 5), (4, 5)])),
            vec![vec![1, 2], vec![3, 4]]
        );
        assert_eq!(groups_ext(&mk(&[])), Vec::<Vec<u32>>::new());
    }

    #[test]
    fn determinism_same_seed_same_state() {
        let sub = sub_of(
            &[1, 2, 3, 4, 5, 6],
            &[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6), (3, 4)],
        );
        let a = propagate_labels(&sub, 100, 99);
        let b = propagate_labels(&sub, 100, 99);
        assert_eq!(a, b);
        let c = propagate_labels_with(&sub, 100, 1234, TieBreak::Random);
        let d = propagate_labels_with(&sub, 100, 1234, TieBreak::Random);
        assert_eq!(c, d);
    }

    #[test]
    fn iteration_cap_respected() {
        let sub = sub_of(&[1, 2, 3, 4], &[(1, 2), (2, 3), (3, 4), (4, 1)]);
        for seed in 0..10 {
            let state = propagate_labels(&sub, 1, seed);
            assert_eq!(state.t, 1);
        }
    }

    #[test]
    fn incremental_unanimous_neighbors() {
        // triangle {2,3,4} all labeled 2; vertex 5 joins with edges to 3 and 4
        let before = sub_of(&[2, 3, 4], &[(2, 3), (3, 4), (2, 4)]);
        let mut state = propagate_labels(&before, 100, 3);
        for l in state.labels.values_mut() {
            *l = 2;
        }
        let after = sub_of(&[2, 3, 4, 5], &[(2, 3), (3, 4), (2, 4), (3, 5), (4, 5)]);
        let added: BTreeSet<u32> = [5].into();
        let changed: BTreeSet<(u32, u32)> = [(3, 5), (4, 5)].into();
        let updated = incremental_label_update(&after, &state, &added, &changed).unwrap();
        assert_eq!(updated.labels[&5], 2);
    }

    #[test]
    fn incremental_tie_takes_smallest() {
        // new vertex 1 sees one neighbor labeled 7 and one labeled 9
        let before = sub_of(&[7, 9], &[]);
        let state = propagate_labels(&before, 100, 11);
        let after = sub_of(&[1, 7, 9], &[(1, 7), (1, 9)]);
        let added: BTreeSet<u32> = [1].into();
        let changed: BTreeSet<(u32, u32)> = [(1, 7), (1, 9)].into();
        let updated = incremental_label_update(&after, &state, &added, &changed).unwrap();
        assert_eq!(updated.labels[&1], 7);
        // cross-check against a full re-propagation: 1 bridges 7 and 9, and
        // the smallest-label rule pulls all three together
        let full = propagate_labels(&after, 100, 11);
        assert_eq!(groups_ext(&full).len(), 1);
        assert_eq!(groups_ext(&updated).len(), 1);
    }

    #[test]
    fn incremental_isolated_addition_keeps_own_id() {
        let before = sub_of(&[4, 5], &[(4, 5)]);
        let state = propagate_labels(&before, 100, 5);
        let after = sub_of(&[4, 5, 9], &[(4, 5)]);
        let added: BTreeSet<u32> = [9].into();
        let updated =
            incremental_label_update(&after, &state, &added, &BTreeSet::new()).unwrap();
        assert_eq!(updated.labels[&9], 9);
    }

    #[test]
    fn incremental_rejects_mismatched_state() {
        let sub = sub_of(&[1, 2, 3], &[(1, 2)]);
        let stale = propagate_labels(&sub_of(&[1, 9], &[]), 100, 0);
        let err = incremental_label_update(&sub, &stale, &BTreeSet::new(), &BTreeSet::new());
        assert!(matches!(err, Err(LabelError::Coherence(_))));
    }

    #[test]
    fn converged_state_is_fixed_point() {
        let sub = sub_of(
            &[1, 2, 3, 4, 5],
            &[(1, 2), (2, 3), (1, 3), (3, 4), (4, 5)],
        );
        for seed in 0..10 {
            let state = propagate_labels(&sub, 100, seed);
            assert!(state.t < 100);
            // one more deterministic sweep must change nothing
            let adj = local_adjacency(&sub);
            for (&v, &l) in &state.labels {
                let next = majority_label(
                    adj[&v].iter().map(|n| state.labels[n]),
                    TieBreak::Deterministic,
                    &mut ChaCha8Rng::seed_from_u64(0),
                )
                .unwrap_or(l);
                assert_eq!(next, l, "seed {seed}, vertex {v} not stable");
            }
        }
    }
}
