//! Dynamic undirected simple-graph storage.
//!
//! Vertex IDs from input files are arbitrary non-negative integers; they are
//! remapped to dense internal indices (`NodeIdx`) in first-seen order so that
//! adjacency can live in flat vectors. The external mapping is kept for
//! output. Adjacency lists are sorted, which makes neighbor intersection and
//! canonical serialization cheap.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

/// Dense internal vertex index.
pub type NodeIdx = u32;

/// External vertex label as it appears in input files.
pub type VertexId = u64;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: malformed edge {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("self-loop edge on vertex {0}")]
    SelfLoop(VertexId),
}

/// Ingestion counters for one `load_edge_list` call.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct LoadReport {
    pub edges_added: u64,
    pub duplicates_skipped: u64,
    pub self_loops_skipped: u64,
    pub malformed_skipped: u64,
}

/// Undirected simple graph with dense internal indices.
#[derive(Debug, Default, Clone)]
pub struct Graph {
    adj: Vec<Vec<NodeIdx>>, // sorted neighbor lists
    ext_of: Vec<VertexId>,
    int_of: HashMap<VertexId, NodeIdx>,
    m: u64,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of vertices ever registered.
    pub fn vertex_count(&self) -> usize {
        self.ext_of.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> u64 {
        self.m
    }

    /// Registers an external ID, returning its dense index.
    pub fn intern(&mut self, ext: VertexId) -> NodeIdx {
        if let Some(&idx) = self.int_of.get(&ext) {
            return idx;
        }
        let idx = self.ext_of.len() as NodeIdx;
        self.ext_of.push(ext);
        self.adj.push(Vec::new());
        self.int_of.insert(ext, idx);
        idx
    }

    pub fn resolve(&self, ext: VertexId) -> Option<NodeIdx> {
        self.int_of.get(&ext).copied()
    }

    pub fn external_id(&self, v: NodeIdx) -> VertexId {
        self.ext_of[v as usize]
    }

    /// Adds an undirected edge between external IDs. Returns `true` if the
    /// edge was new. New endpoints are registered first, so a duplicate edge
    /// still leaves both vertices known.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<bool, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        let ui = self.intern(u);
        let vi = self.intern(v);
        Ok(self.add_edge_idx(ui, vi))
    }

    fn add_edge_idx(&mut self, u: NodeIdx, v: NodeIdx) -> bool {
        debug_assert_ne!(u, v);
        match self.adj[u as usize].binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.adj[u as usize].insert(pos, v);
                let pos = self.adj[v as usize]
                    .binary_search(&u)
                    .expect_err("adjacency symmetry");
                self.adj[v as usize].insert(pos, u);
                self.m += 1;
                true
            }
        }
    }

    /// Sorted neighbor list of an internal index.
    pub fn neighbors(&self, v: NodeIdx) -> &[NodeIdx] {
        self.adj
            .get(v as usize)
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    /// Neighbor set of an external ID; empty for unknown vertices.
    pub fn neighbors_ext(&self, ext: VertexId) -> Vec<VertexId> {
        match self.resolve(ext) {
            Some(v) => self
                .neighbors(v)
                .iter()
                .map(|&u| self.external_id(u))
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn degree(&self, v: NodeIdx) -> usize {
        self.neighbors(v).len()
    }

    pub fn degree_ext(&self, ext: VertexId) -> usize {
        self.resolve(ext).map_or(0, |v| self.degree(v))
    }

    pub fn has_edge(&self, u: NodeIdx, v: NodeIdx) -> bool {
        self.adj
            .get(u as usize)
            .is_some_and(|n| n.binary_search(&v).is_ok())
    }

    /// Average degree 2m/n; 0.0 for the empty graph.
    pub fn average_degree(&self) -> f64 {
        if self.ext_of.is_empty() {
            0.0
        } else {
            2.0 * self.m as f64 / self.ext_of.len() as f64
        }
    }

    /// Canonical edge dump: one `min,max` line per edge (external IDs),
    /// sorted by (min, max). Loading a file and dumping it again is a fixed
    /// point, which the replay-determinism tests rely on.
    pub fn canonical_edges(&self) -> String {
        let mut pairs: Vec<(VertexId, VertexId)> = Vec::with_capacity(self.m as usize);
        for (u, nbrs) in self.adj.iter().enumerate() {
            let ue = self.ext_of[u];
            for &v in nbrs {
                let ve = self.ext_of[v as usize];
                if ue < ve {
                    pairs.push((ue, ve));
                }
            }
        }
        pairs.sort_unstable();
        let mut out = String::new();
        for (a, b) in pairs {
            let _ = writeln!(out, "{a},{b}");
        }
        out
    }
}

/// Parses one CSV edge line. Whitespace around fields is tolerated; lines
/// starting with `#` and blank lines yield `None`.
pub fn parse_edge_line(line: &str) -> Result<Option<(VertexId, VertexId)>, ()> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let mut fields = line.split(',');
    let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(());
    };
    let a: VertexId = a.trim().parse().map_err(|_| ())?;
    let b: VertexId = b.trim().parse().map_err(|_| ())?;
    Ok(Some((a, b)))
}

/// Loads a CSV edge list (`src,dst` per line). Self-loop lines are skipped
/// and counted in either mode; duplicate and reversed-duplicate lines
/// collapse to one undirected edge. In strict mode (the default) a malformed
/// line aborts the load with its line number; with `lenient` it is skipped
/// and counted.
pub fn load_edge_list(path: &Path, lenient: bool) -> Result<(Graph, LoadReport), GraphError> {
    let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut g = Graph::new();
    let mut report = LoadReport::default();
    for (i, line) in text.lines().enumerate() {
        match parse_edge_line(line) {
            Ok(None) => {}
            Ok(Some((a, b))) if a == b => {
                // ego-minus-ego semantics are undefined for self-loops
                g.intern(a);
                report.self_loops_skipped += 1;
            }
            Ok(Some((a, b))) => {
                if g.add_edge(a, b).expect("a != b") {
                    report.edges_added += 1;
                } else {
                    report.duplicates_skipped += 1;
                }
            }
            Err(()) if lenient => report.malformed_skipped += 1,
            Err(()) => {
                return Err(GraphError::MalformedLine {
                    line: i + 1,
                    content: line.to_string(),
                })
            }
        }
    }
    Ok((g, report))
}

/// Reads a stream file with the same CSV rules as `load_edge_list`, keeping
/// events in file order. Self-loop lines are dropped (counted), duplicates
/// are kept: replaying a duplicate edge is a no-op event downstream.
pub fn load_event_list(
    path: &Path,
    lenient: bool,
) -> Result<(Vec<(VertexId, VertexId)>, LoadReport), GraphError> {
    let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut events = Vec::new();
    let mut report = LoadReport::default();
    for (i, line) in text.lines().enumerate() {
        match parse_edge_line(line) {
            Ok(None) => {}
            Ok(Some((a, b))) if a == b => report.self_loops_skipped += 1,
            Ok(Some((a, b))) => events.push((a, b)),
            Err(()) if lenient => report.malformed_skipped += 1,
            Err(()) => {
                return Err(GraphError::MalformedLine {
                    line: i + 1,
                    content: line.to_string(),
                })
            }
        }
    }
    Ok((events, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn graph_of(edges: &[(u64, u64)]) -> Graph {
        let mut g = Graph::new();
        for &(a, b) in edges {
            g.add_edge(a, b).unwrap();
        }
        g
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_two_lines() {
        let f = write_tmp("1,2\n2,3\n");
        let (g, rep) = load_edge_list(f.path(), false).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(rep.edges_added, 2);
    }

    #[test]
    fn load_dedup_and_self_loop() {
        let f = write_tmp("1,2\n2,1\n1,1\n");
        let (g, rep) = load_edge_list(f.path(), false).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(rep.self_loops_skipped, 1);
        assert_eq!(rep.duplicates_skipped, 1);
    }

    #[test]
    fn load_comments_and_whitespace() {
        let f = write_tmp("# header\n 1 , 2 \n\n3,4\n");
        let (g, _) = load_edge_list(f.path(), false).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.vertex_count(), 4);
    }

    #[test]
    fn strict_mode_aborts_with_line_number() {
        let f = write_tmp("1,2\nnot an edge\n");
        match load_edge_list(f.path(), false) {
            Err(GraphError::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed-line error, got {other:?}"),
        }
    }

    #[test]
    fn lenient_mode_skips_and_counts() {
        let f = write_tmp("1,2\nnot an edge\n3,4,5\n2,3\n");
        let (g, rep) = load_edge_list(f.path(), true).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(rep.malformed_skipped, 2);
    }

    #[test]
    fn add_edge_idempotent_and_undirected() {
        let mut g = Graph::new();
        assert!(g.add_edge(1, 2).unwrap());
        assert_eq!((g.vertex_count(), g.edge_count()), (2, 1));
        assert!(!g.add_edge(1, 2).unwrap());
        assert!(!g.add_edge(2, 1).unwrap());
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn self_loop_rejected() {
        let mut g = Graph::new();
        assert!(matches!(g.add_edge(7, 7), Err(GraphError::SelfLoop(7))));
    }

    #[test]
    fn neighbors_and_degree() {
        let g = graph_of(&[(1, 2), (2, 3), (1, 3)]);
        let mut n1 = g.neighbors_ext(1);
        n1.sort_unstable();
        assert_eq!(n1, vec![2, 3]);
        assert_eq!(g.degree_ext(1), 2);
        assert_eq!(g.neighbors_ext(9), Vec::<u64>::new());
        assert_eq!(g.degree_ext(9), 0);
    }

    #[test]
    fn star_neighbors() {
        let g = graph_of(&[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let mut n = g.neighbors_ext(0);
        n.sort_unstable();
        assert_eq!(n, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn symmetry_and_degree_sum() {
        let mut rng = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            rng
        };
        let mut g = Graph::new();
        for _ in 0..400 {
            let a = next() % 50;
            let b = next() % 50;
            if a != b {
                g.add_edge(a, b).unwrap();
            }
        }
        let mut degree_sum = 0u64;
        for v in 0..g.vertex_count() as NodeIdx {
            degree_sum += g.degree(v) as u64;
            for &u in g.neighbors(v) {
                assert!(g.neighbors(u).binary_search(&v).is_ok(), "asymmetric edge");
            }
        }
        assert_eq!(degree_sum, 2 * g.edge_count());
    }

    #[test]
    fn canonical_dump_is_fixed_point() {
        let f = write_tmp("5,1\n1,2\n2,5\n9,2\n");
        let (g, _) = load_edge_list(f.path(), false).unwrap();
        let dump1 = g.canonical_edges();
        let f2 = write_tmp(&dump1);
        let (g2, _) = load_edge_list(f2.path(), false).unwrap();
        assert_eq!(dump1, g2.canonical_edges());
        let pairs: Vec<(u64, u64)> = dump1
            .lines()
            .map(|l| parse_edge_line(l).unwrap().unwrap())
            .collect();
        assert!(pairs.windows(2).all(|w| w[0] < w[1]), "dump not sorted");
        assert!(pairs.iter().all(|&(a, b)| a < b), "min endpoint not first");
    }
}
