//! Global pool of overlapping communities with ε-threshold merging.
//!
//! Two communities merge when the overlap covers at least `1 − ε` of the
//! smaller one. The pool keeps a vertex→community mapping table so an
//! incoming community is only compared against communities it actually
//! shares a vertex with, plus a per-community stats table (size and
//! overlapping community ids) maintained incrementally on insert and retire.
//!
//! When a candidate merges, the union is re-submitted until nothing else
//! merges, so the pool is always pairwise settled among overlapping
//! communities. `naive_merge` is the all-pairs reference the equivalence
//! tests compare against.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::NodeIdx;

pub type CommunityId = u64;

#[derive(Debug, Error)]
pub enum MergeError {
    #[error("community must be nonempty")]
    EmptyCommunity,
    #[error("epsilon {0} outside [0,1]")]
    BadEpsilon(f64),
}

/// One identified community.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Community {
    pub id: CommunityId,
    pub members: BTreeSet<NodeIdx>,
}

/// Size and overlap bookkeeping for one live community.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommunityStats {
    pub size: usize,
    pub overlapping: BTreeSet<CommunityId>,
}

/// Result of submitting one community to the pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeReport {
    /// Pool communities consumed by the submission, in merge order.
    pub absorbed: Vec<CommunityId>,
    /// Id under which the (possibly merged) community now lives.
    pub resulting: CommunityId,
}

/// Candidate scan order inside `merge_into_pool`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateOrder {
    /// Ascending community id. Deterministic, the default.
    #[default]
    Ascending,
    /// Seeded shuffle per scan.
    Shuffled(u64),
}

/// Fraction of the smaller community covered by the overlap.
pub fn overlap_fraction(
    a: &BTreeSet<NodeIdx>,
    b: &BTreeSet<NodeIdx>,
) -> Result<f64, MergeError> {
    if a.is_empty() || b.is_empty() {
        return Err(MergeError::EmptyCommunity);
    }
    let inter = a.intersection(b).count();
    Ok(inter as f64 / a.len().min(b.len()) as f64)
}

/// Merge test: at most ε of the smaller community may lie outside the
/// bigger one, i.e. overlap/min ≥ 1 − ε. At ε=0 the smaller must be a
/// subset; at ε=1 any pair passes.
pub fn should_merge(
    a: &BTreeSet<NodeIdx>,
    b: &BTreeSet<NodeIdx>,
    epsilon: f64,
) -> Result<bool, MergeError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(MergeError::BadEpsilon(epsilon));
    }
    Ok(overlap_fraction(a, b)? >= 1.0 - epsilon)
}

/// Global community set plus mapping tables.
#[derive(Debug, Clone)]
pub struct CommunityPool {
    communities: BTreeMap<CommunityId, Community>,
    /// Table T: vertex → ids of live communities containing it.
    vertex_table: BTreeMap<NodeIdx, BTreeSet<CommunityId>>,
    stats_table: BTreeMap<CommunityId, CommunityStats>,
    pub epsilon: f64,
    next_id: CommunityId,
    order: CandidateOrder,
    rng: ChaCha8Rng,
}

impl CommunityPool {
    pub fn new(epsilon: f64) -> Self {
        Self::with_order(epsilon, CandidateOrder::Ascending)
    }

    pub fn with_order(epsilon: f64, order: CandidateOrder) -> Self {
        assert!((0.0..=1.0).contains(&epsilon), "epsilon outside [0,1]");
        let seed = match order {
            CandidateOrder::Ascending => 0,
            CandidateOrder::Shuffled(s) => s,
        };
        Self {
            communities: BTreeMap::new(),
            vertex_table: BTreeMap::new(),
            stats_table: BTreeMap::new(),
            epsilon,
            next_id: 0,
            order,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    pub fn communities(&self) -> impl Iterator<Item = &Community> {
        self.communities.values()
    }

    pub fn get(&self, id: CommunityId) -> Option<&Community> {
        self.communities.get(&id)
    }

    pub fn vertex_table(&self) -> &BTreeMap<NodeIdx, BTreeSet<CommunityId>> {
        &self.vertex_table
    }

    pub fn stats_table(&self) -> &BTreeMap<CommunityId, CommunityStats> {
        &self.stats_table
    }

    /// Live member sets in deterministic order, for comparisons.
    pub fn member_sets(&self) -> Vec<BTreeSet<NodeIdx>> {
        let mut sets: Vec<BTreeSet<NodeIdx>> =
            self.communities.values().map(|c| c.members.clone()).collect();
        sets.sort();
        sets
    }

    fn insert_community(&mut self, members: BTreeSet<NodeIdx>) -> CommunityId {
        debug_assert!(!members.is_empty());
        let id = self.next_id;
        self.next_id += 1;
        let mut overlapping = BTreeSet::new();
        for &v in &members {
            if let Some(ids) = self.vertex_table.get(&v) {
                overlapping.extend(ids.iter().copied());
            }
        }
        for &v in &members {
            self.vertex_table.entry(v).or_default().insert(id);
        }
        for &other in &overlapping {
            self.stats_table
                .get_mut(&other)
                .expect("overlapping id is live")
                .overlapping
                .insert(id);
        }
        self.stats_table.insert(
            id,
            CommunityStats {
                size: members.len(),
                overlapping,
            },
        );
        self.communities.insert(id, Community { id, members });
        id
    }

    /// Removes a live community, scrubbing it from both tables.
    pub fn remove_community(&mut self, id: CommunityId) -> Option<Community> {
        let c = self.communities.remove(&id)?;
        for v in &c.members {
            let ids = self.vertex_table.get_mut(v).expect("member indexed");
            ids.remove(&id);
            if ids.is_empty() {
                self.vertex_table.remove(v);
            }
        }
        let stats = self.stats_table.remove(&id).expect("stats present");
        for other in &stats.overlapping {
            if let Some(s) = self.stats_table.get_mut(other) {
                s.overlapping.remove(&id);
            }
        }
        Some(c)
    }

    /// Submits a community. Candidates are the live communities sharing at
    /// least one vertex (from table T); the first one passing the merge test
    /// is absorbed and the union re-submitted, cascading until no candidate
    /// merges, at which point the survivor is registered under a fresh id.
    pub fn merge_into_pool(
        &mut self,
        members: BTreeSet<NodeIdx>,
    ) -> Result<MergeReport, MergeError> {
        if members.is_empty() {
            return Err(MergeError::EmptyCommunity);
        }
        let mut current = members;
        let mut absorbed = Vec::new();
        'resubmit: loop {
            let mut cset: BTreeSet<CommunityId> = BTreeSet::new();
            for v in &current {
                if let Some(ids) = self.vertex_table.get(v) {
                    cset.extend(ids.iter().copied());
                }
            }
            let mut candidates: Vec<CommunityId> = cset.into_iter().collect();
            if let CandidateOrder::Shuffled(_) = self.order {
                candidates.shuffle(&mut self.rng);
            }
            for id in candidates {
                let other = &self.communities[&id];
                if should_merge(&other.members, &current, self.epsilon)? {
                    let removed = self.remove_community(id).expect("candidate is live");
                    current.extend(removed.members);
                    absorbed.push(id);
                    continue 'resubmit;
                }
            }
            let resulting = self.insert_community(current);
            return Ok(MergeReport {
                absorbed,
                resulting,
            });
        }
    }

    fn computed_tables(
        &self,
    ) -> (
        BTreeMap<NodeIdx, BTreeSet<CommunityId>>,
        BTreeMap<CommunityId, CommunityStats>,
    ) {
        let mut vt: BTreeMap<NodeIdx, BTreeSet<CommunityId>> = BTreeMap::new();
        for c in self.communities.values() {
            for &v in &c.members {
                vt.entry(v).or_default().insert(c.id);
            }
        }
        let mut st: BTreeMap<CommunityId, CommunityStats> = BTreeMap::new();
        for c in self.communities.values() {
            let mut overlapping = BTreeSet::new();
            for &v in &c.members {
                overlapping.extend(vt[&v].iter().copied().filter(|&o| o != c.id));
            }
            st.insert(
                c.id,
                CommunityStats {
                    size: c.members.len(),
                    overlapping,
                },
            );
        }
        (vt, st)
    }

    /// Recomputes both tables from the community map, repairing any drift.
    pub fn rebuild_tables(&mut self) {
        let (vt, st) = self.computed_tables();
        self.vertex_table = vt;
        self.stats_table = st;
    }

    /// Table-coherence check against a from-scratch rebuild.
    pub fn verify_tables(&self) -> Result<(), String> {
        let (vt, st) = self.computed_tables();
        if vt != self.vertex_table {
            return Err("vertex_table diverges from rebuild".into());
        }
        if st != self.stats_table {
            return Err("stats_table diverges from rebuild".into());
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn corrupt_vertex_table_for_test(&mut self) {
        self.vertex_table.insert(u32::MAX, [9999].into());
    }
}

/// All-pairs reference merge, run to fixed point. Scans id-ascending pairs,
/// replaces the first mergeable pair with their union under a fresh id, and
/// restarts. Disjoint pairs never pass the test for ε < 1, so for those ε
/// this is the oracle `merge_into_pool` is checked against.
pub fn naive_merge(
    input: &[BTreeSet<NodeIdx>],
    epsilon: f64,
) -> Result<Vec<BTreeSet<NodeIdx>>, MergeError> {
    let mut pool: BTreeMap<u64, BTreeSet<NodeIdx>> = input
        .iter()
        .enumerate()
        .map(|(i, s)| (i as u64, s.clone()))
        .collect();
    let mut next_id = input.len() as u64;
    'scan: loop {
        let ids: Vec<u64> = pool.keys().copied().collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                if should_merge(&pool[&a], &pool[&b], epsilon)? {
                    let sa = pool.remove(&a).unwrap();
                    let sb = pool.remove(&b).unwrap();
                    let union: BTreeSet<NodeIdx> = sa.union(&sb).copied().collect();
                    pool.insert(next_id, union);
                    next_id += 1;
                    continue 'scan;
                }
            }
        }
        let mut out: Vec<BTreeSet<NodeIdx>> = pool.into_values().collect();
        out.sort();
        return Ok(out);
    }
}

/// Serializes communities in the snapshot format: one line per community,
/// members as space-separated external ids sorted ascending, lines ordered
/// by (size desc, members asc). The format is bit-exact; the comparator and
/// the determinism tests parse it back.
pub fn write_snapshot(pool: &CommunityPool, external_id: impl Fn(NodeIdx) -> u64) -> String {
    let mut lines: Vec<Vec<u64>> = pool
        .communities()
        .map(|c| {
            let mut ms: Vec<u64> = c.members.iter().map(|&v| external_id(v)).collect();
            ms.sort_unstable();
            ms
        })
        .collect();
    lines.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut out = String::new();
    for members in lines {
        let mut first = true;
        for m in members {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{m}");
            first = false;
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("snapshot line {line}: {content:?} is not a space-separated id list")]
    Malformed { line: usize, content: String },
}

/// Parses a snapshot back into external-id member sets, file order kept.
pub fn parse_snapshot(text: &str) -> Result<Vec<BTreeSet<u64>>, SnapshotError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut set = BTreeSet::new();
        for field in line.split_whitespace() {
            let id: u64 = field.parse().map_err(|_| SnapshotError::Malformed {
                line: i + 1,
                content: line.to_string(),
            })?;
            set.insert(id);
        }
        out.push(set);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[u32]) -> BTreeSet<u32> {
        xs.iter().copied().collect()
    }

    #[test]
    fn overlap_fraction_fixture() {
        // 4-member and 6-member communities sharing 2 vertices: 50% of the
        // smaller one is covered
        let a = set(&[1, 2, 3, 4]);
        let b = set(&[3, 4, 5, 6, 7, 8]);
        assert_eq!(overlap_fraction(&a, &b).unwrap(), 0.5);
        assert_eq!(overlap_fraction(&a, &a).unwrap(), 1.0);
        assert_eq!(overlap_fraction(&a, &set(&[9, 10])).unwrap(), 0.0);
        assert!(matches!(
            overlap_fraction(&a, &BTreeSet::new()),
            Err(MergeError::EmptyCommunity)
        ));
    }

    #[test]
    fn should_merge_fixture() {
        let a = set(&[1, 2, 3, 4]);
        let b = set(&[3, 4, 5, 6, 7, 8]);
        assert!(should_merge(&a, &b, 0.6).unwrap());
        assert!(!should_merge(&a, &b, 0.3).unwrap());
        assert!(should_merge(&set(&[1, 2, 3]), &set(&[1, 2, 3, 4]), 0.0).unwrap());
        assert!(should_merge(&set(&[1]), &set(&[99]), 1.0).unwrap());
        assert!(matches!(
            should_merge(&a, &b, 1.5),
            Err(MergeError::BadEpsilon(_))
        ));
    }

    #[test]
    fn merge_pool_fixture_eight_members() {
        let mut pool = CommunityPool::new(0.6);
        pool.merge_into_pool(set(&[1, 2, 3, 4])).unwrap();
        let report = pool.merge_into_pool(set(&[3, 4, 5, 6, 7, 8])).unwrap();
        assert_eq!(report.absorbed.len(), 1);
        assert_eq!(pool.len(), 1);
        assert_eq!(pool.member_sets(), vec![set(&[1, 2, 3, 4, 5, 6, 7, 8])]);
        pool.verify_tables().unwrap();
    }

    #[test]
    fn merge_pool_disjoint_never_compared() {
        let mut pool = CommunityPool::new(0.9);
        pool.merge_into_pool(set(&[1, 2, 3])).unwrap();
        let report = pool.merge_into_pool(set(&[7, 8, 9])).unwrap();
        assert!(report.absorbed.is_empty());
        assert_eq!(pool.len(), 2);
        pool.verify_tables().unwrap();
    }

    #[test]
    fn merge_pool_cascades_at_epsilon_one() {
        // build { {1,2}, {2,3}, {9,10} } at ε=0, then submit {3,4} at ε=1:
        // the union cascades through the shared vertices while the fully
        // disjoint community survives untouched
        let mut pool = CommunityPool::new(0.0);
        pool.merge_into_pool(set(&[1, 2])).unwrap();
        pool.merge_into_pool(set(&[2, 3])).unwrap();
        pool.merge_into_pool(set(&[9, 10])).unwrap();
        assert_eq!(pool.len(), 3);
        pool.epsilon = 1.0;
        pool.merge_into_pool(set(&[3, 4])).unwrap();
        assert_eq!(pool.member_sets(), vec![set(&[1, 2, 3, 4]), set(&[9, 10])]);
        pool.verify_tables().unwrap();
    }

    #[test]
    fn merge_pool_rejects_empty() {
        let mut pool = CommunityPool::new(0.5);
        assert!(matches!(
            pool.merge_into_pool(BTreeSet::new()),
            Err(MergeError::EmptyCommunity)
        ));
    }

    #[test]
    fn naive_merge_fixtures() {
        let out = naive_merge(
            &[set(&[1, 2, 3, 4]), set(&[3, 4, 5, 6, 7, 8])],
            0.6,
        )
        .unwrap();
        assert_eq!(out, vec![set(&[1, 2, 3, 4, 5, 6, 7, 8])]);
        let unchanged = naive_merge(&[set(&[1, 2]), set(&[3, 4])], 0.5).unwrap();
        assert_eq!(unchanged.len(), 2);
    }

    #[test]
    fn rebuild_tables_fixed_point_and_repair() {
        let mut pool = CommunityPool::new(0.25);
        pool.merge_into_pool(set(&[1, 2, 3])).unwrap();
        pool.merge_into_pool(set(&[2, 3, 4])).unwrap();
        let vt = pool.vertex_table().clone();
        let st = pool.stats_table().clone();
        pool.rebuild_tables();
        assert_eq!(&vt, pool.vertex_table());
        assert_eq!(&st, pool.stats_table());

        pool.corrupt_vertex_table_for_test();
        assert!(pool.verify_tables().is_err());
        pool.rebuild_tables();
        pool.verify_tables().unwrap();
        assert_eq!(&vt, pool.vertex_table());
    }

    #[test]
    fn stats_table_tracks_overlaps() {
        let mut pool = CommunityPool::new(0.0);
        let a = pool.merge_into_pool(set(&[1, 2, 3])).unwrap().resulting;
        let b = pool.merge_into_pool(set(&[3, 4, 5])).unwrap().resulting;
        let c = pool.merge_into_pool(set(&[7, 8, 9])).unwrap().resulting;
        assert_eq!(pool.stats_table()[&a].overlapping, [b].into());
        assert_eq!(pool.stats_table()[&b].overlapping, [a].into());
        assert!(pool.stats_table()[&c].overlapping.is_empty());
        assert_eq!(pool.stats_table()[&a].size, 3);
        pool.remove_community(a).unwrap();
        assert!(pool.stats_table()[&b].overlapping.is_empty());
        pool.verify_tables().unwrap();
    }

    #[test]
    fn snapshot_round_trip_and_ordering() {
        let mut pool = CommunityPool::new(0.5);
        pool.merge_into_pool(set(&[5, 6])).unwrap();
        pool.merge_into_pool(set(&[10, 11, 12])).unwrap();
        pool.merge_into_pool(set(&[1, 2, 3])).unwrap();
        let text = write_snapshot(&pool, |v| v as u64);
        assert_eq!(text, "1 2 3\n10 11 12\n5 6\n");
        let parsed = parse_snapshot(&text).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed[0], [1u64, 2, 3].into());
    }

    #[test]
    fn snapshot_parse_error_carries_line() {
        let err = parse_snapshot("1 2 3\n4 x 6\n").unwrap_err();
        match err {
            SnapshotError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected: {other:?}"),
        }
    }
}
