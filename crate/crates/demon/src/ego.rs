//! Ego-minus-ego subgraphs and their incremental maintenance.
//!
//! For every vertex the cache holds the subgraph induced on its neighborhood
//! with the ego itself removed. Entries are stored as sorted index arrays
//! rather than hash sets; the whole cache dominates memory at scale, and
//! compact arrays also give deterministic iteration for free.

use std::fmt::Write as _;

use crate::graph::{Graph, NodeIdx};

/// Induced subgraph on `neighbors(ego)`, with the ego and its incident
/// edges removed. `vertices` is sorted; `edges` holds canonical
/// min-endpoint-first pairs, sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EgoMinusEgo {
    pub ego: NodeIdx,
    pub vertices: Vec<NodeIdx>,
    pub edges: Vec<(NodeIdx, NodeIdx)>,
}

impl EgoMinusEgo {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Sorted neighbors of `v` inside this subgraph.
    pub fn local_neighbors(&self, v: NodeIdx) -> Vec<NodeIdx> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            if a == v {
                out.push(b);
            } else if b == v {
                out.push(a);
            }
        }
        out.sort_unstable();
        out
    }
}

fn canon(a: NodeIdx, b: NodeIdx) -> (NodeIdx, NodeIdx) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn insert_sorted<T: Ord + Copy>(v: &mut Vec<T>, x: T) -> bool {
    match v.binary_search(&x) {
        Ok(_) => false,
        Err(pos) => {
            v.insert(pos, x);
            true
        }
    }
}

/// Extracts the ego-minus-ego subgraph for one vertex by scanning its
/// neighborhood. Unknown vertices yield an empty result.
pub fn extract_ego_minus_ego(g: &Graph, ego: NodeIdx) -> EgoMinusEgo {
    let vertices: Vec<NodeIdx> = g.neighbors(ego).to_vec();
    let mut edges = Vec::new();
    for &a in &vertices {
        // sorted-list intersection of neighbors(a) with the ego's neighborhood
        let mut i = 0;
        let mut j = 0;
        let na = g.neighbors(a);
        while i < na.len() && j < vertices.len() {
            match na[i].cmp(&vertices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if na[i] > a {
                        edges.push((a, na[i]));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    edges.sort_unstable();
    EgoMinusEgo {
        ego,
        vertices,
        edges,
    }
}

/// Per-vertex ego-minus-ego cache, indexed by internal vertex id.
#[derive(Debug, Default, Clone)]
pub struct EgoCache {
    entries: Vec<EgoMinusEgo>,
    /// Graph adjacency elements read by incremental updates; the cost-bound
    /// tests assert this stays proportional to the touched neighborhoods.
    pub adjacency_lookups: u64,
}

impl EgoCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the cache for every vertex of `g` from scratch.
    pub fn build(g: &Graph) -> Self {
        let mut entries = Vec::with_capacity(g.vertex_count());
        for v in 0..g.vertex_count() as NodeIdx {
            entries.push(extract_ego_minus_ego(g, v));
        }
        Self {
            entries,
            adjacency_lookups: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry for `v`; empty if the vertex has no incident edges yet.
    pub fn entry(&self, v: NodeIdx) -> &EgoMinusEgo {
        static EMPTY: EgoMinusEgo = EgoMinusEgo {
            ego: 0,
            vertices: Vec::new(),
            edges: Vec::new(),
        };
        self.entries.get(v as usize).unwrap_or(&EMPTY)
    }

    fn entry_mut(&mut self, v: NodeIdx) -> &mut EgoMinusEgo {
        if self.entries.len() <= v as usize {
            let start = self.entries.len() as NodeIdx;
            for ego in start..=v {
                self.entries.push(EgoMinusEgo {
                    ego,
                    ..Default::default()
                });
            }
        }
        &mut self.entries[v as usize]
    }

    /// Applies an already-inserted edge `u–v` to the cache. Returns the egos
    /// whose entries changed, sorted: `u` and `v` gain a neighborhood member,
    /// and every common neighbor gains the internal edge `(u,v)`. Nothing
    /// outside `affected_egos` is touched and no full-graph scan happens.
    pub fn apply_edge(&mut self, g: &Graph, u: NodeIdx, v: NodeIdx) -> Vec<NodeIdx> {
        debug_assert!(g.has_edge(u, v), "edge must be applied to graph first");
        let nu = g.neighbors(u);
        let nv = g.neighbors(v);
        self.adjacency_lookups += (nu.len() + nv.len()) as u64;

        // common neighbors via sorted intersection
        let mut common = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < nu.len() && j < nv.len() {
            match nu[i].cmp(&nv[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    common.push(nu[i]);
                    i += 1;
                    j += 1;
                }
            }
        }

        let eu = self.entry_mut(u);
        insert_sorted(&mut eu.vertices, v);
        for &w in &common {
            insert_sorted(&mut eu.edges, canon(v, w));
        }
        let ev = self.entry_mut(v);
        insert_sorted(&mut ev.vertices, u);
        for &w in &common {
            insert_sorted(&mut ev.edges, canon(u, w));
        }
        for &w in &common {
            insert_sorted(&mut self.entry_mut(w).edges, canon(u, v));
        }

        let mut changed = common;
        changed.push(u);
        changed.push(v);
        changed.sort_unstable();
        changed
    }

    /// Exact per-entry equality against another cache over `n` vertices.
    /// Missing entries compare as empty, so a lazily grown cache matches a
    /// full rebuild.
    pub fn same_entries(&self, other: &EgoCache, n: usize) -> bool {
        for v in 0..n as NodeIdx {
            let a = self.entry(v);
            let b = other.entry(v);
            if a.vertices != b.vertices || a.edges != b.edges {
                return false;
            }
        }
        true
    }

    /// Debug dump in external IDs, used by the oracle-equality tests.
    pub fn dump(&self, g: &Graph) -> String {
        let mut out = String::new();
        let mut order: Vec<NodeIdx> = (0..g.vertex_count() as NodeIdx).collect();
        order.sort_by_key(|&v| g.external_id(v));
        for v in order {
            let e = self.entry(v);
            let mut verts: Vec<u64> = e.vertices.iter().map(|&x| g.external_id(x)).collect();
            verts.sort_unstable();
            let mut edges: Vec<(u64, u64)> = e
                .edges
                .iter()
                .map(|&(a, b)| {
                    let (ae, be) = (g.external_id(a), g.external_id(b));
                    if ae < be {
                        (ae, be)
                    } else {
                        (be, ae)
                    }
                })
                .collect();
            edges.sort_unstable();
            let _ = writeln!(
                out,
                "ego {}: vertices={:?} edges={:?}",
                g.external_id(v),
                verts,
                edges
            );
        }
        out
    }
}

/// Vertices whose ego-minus-ego network can change when `u–v` is added:
/// both endpoints plus every neighbor of either. The set of entries that
/// actually differ is always a subset of this.
pub fn affected_egos(g: &Graph, u: NodeIdx, v: NodeIdx) -> Vec<NodeIdx> {
    let mut out: Vec<NodeIdx> = vec![u, v];
    out.extend_from_slice(g.neighbors(u));
    out.extend_from_slice(g.neighbors(v));
    out.sort_unstable();
    out.dedup();
    out
}
