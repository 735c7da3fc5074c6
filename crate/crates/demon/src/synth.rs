//! Deterministic synthetic graph generators: desk-scale stand-ins for the
//! benchmark datasets, plus planted cliques with ground truth for quality
//! checks.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
}

/// Preferential-attachment graph: a seed clique followed by vertices that
/// attach to `m_per_vertex ≈ target_edges / n` degree-weighted endpoints.
/// Edge order is generation order, so the tail of the list makes a natural
/// event stream.
pub fn preferential_attachment(
    n: u64,
    target_edges: u64,
    seed: u64,
) -> Result<Vec<(u64, u64)>, SynthError> {
    if n < 2 {
        return Err(SynthError::Infeasible("need at least 2 vertices".into()));
    }
    let mut per_vertex = (target_edges as f64 / n as f64).round() as u64;
    per_vertex = per_vertex.clamp(1, n - 1);
    let core = per_vertex + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(u64, u64)> = Vec::new();
    // endpoint multiset: sampling uniformly from it is degree-proportional
    let mut endpoints: Vec<u64> = Vec::new();
    for i in 0..core {
        for j in i + 1..core {
            edges.push((i, j));
            endpoints.push(i);
            endpoints.push(j);
        }
    }
    for v in core..n {
        let mut chosen: BTreeSet<u64> = BTreeSet::new();
        while (chosen.len() as u64) < per_vertex {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            chosen.insert(t);
        }
        for t in chosen {
            edges.push((t, v));
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    Ok(edges)
}

/// Planted cliques: `cliques` equal blocks covering `n` vertices, all
/// intra-block edges, plus `inter_per_pair` random edges between each block
/// pair. Returns the edge list (seeded-shuffled order) and the planted
/// ground truth.
pub fn planted_cliques(
    n: u64,
    cliques: u64,
    inter_per_pair: u64,
    seed: u64,
) -> Result<(Vec<(u64, u64)>, Vec<Vec<u64>>), SynthError> {
    if cliques == 0 || n < 2 * cliques {
        return Err(SynthError::Infeasible(format!(
            "{cliques} cliques need at least {} vertices",
            2 * cliques
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = n / cliques;
    let extra = n % cliques;
    let mut blocks: Vec<Vec<u64>> = Vec::new();
    let mut next = 0u64;
    for k in 0..cliques {
        let size = base + u64::from(k < extra);
        blocks.push((next..next + size).collect());
        next += size;
    }
    let mut edges: Vec<(u64, u64)> = Vec::new();
    let mut seen: BTreeSet<(u64, u64)> = BTreeSet::new();
    for block in &blocks {
        for i in 0..block.len() {
            for j in i + 1..block.len() {
                edges.push((block[i], block[j]));
                seen.insert((block[i], block[j]));
            }
        }
    }
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            let mut placed = 0;
            let mut attempts = 0;
            while placed < inter_per_pair {
                attempts += 1;
                if attempts > 100 * inter_per_pair.max(1) {
                    return Err(SynthError::Infeasible(format!(
                        "cannot place {inter_per_pair} edges between blocks {i} and {j}"
                    )));
                }
                let a = blocks[i][rng.random_range(0..blocks[i].len())];
                let b = blocks[j][rng.random_range(0..blocks[j].len())];
                let key = (a.min(b), a.max(b));
                if seen.insert(key) {
                    edges.push(key);
                    placed += 1;
                }
            }
        }
    }
    edges.shuffle(&mut rng);
    Ok((edges, blocks))
}

/// Renders an edge list as the CSV format the loader reads.
pub fn edges_to_csv(edges: &[(u64, u64)]) -> String {
    let mut out = String::new();
    for &(a, b) in edges {
        let _ = writeln!(out, "{a},{b}");
    }
    out
}

/// Renders ground-truth communities, one space-separated line per block —
/// the same shape as a community snapshot.
pub fn truth_to_text(blocks: &[Vec<u64>]) -> String {
    let mut out = String::new();
    for block in blocks {
        let strs: Vec<String> = block.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "{}", strs.join(" "));
    }
    out
}
