//! Community-set similarity between two snapshots.
//!
//! Greedy best-match by F1: the side with more communities drives, iterating
//! in canonical (size desc, members asc) order; each community claims the
//! unclaimed community on the other side with the highest F1. Unmatched
//! communities score 0 and `best_match_f1` is the mean over the driving
//! side, so it quantifies how much of the richer result the other one
//! explains.

use std::collections::BTreeSet;
use std::fmt::Write as _;

/// F1 between two member sets: 2|A∩B| / (|A|+|B|).
pub fn community_f1(a: &BTreeSet<u64>, b: &BTreeSet<u64>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    2.0 * inter as f64 / (a.len() + b.len()) as f64
}

/// One matched pair: indices into the canonical ordering of each side.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchEntry {
    pub index_a: usize,
    pub index_b: usize,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub best_match_f1: f64,
    pub per_community_matches: Vec<MatchEntry>,
    pub unmatched_a: usize,
    pub unmatched_b: usize,
}

fn canonical_order(sets: &[BTreeSet<u64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sets.len()).collect();
    idx.sort_by(|&i, &j| {
        sets[j]
            .len()
            .cmp(&sets[i].len())
            .then_with(|| sets[i].cmp(&sets[j]))
    });
    idx
}

/// Compares two community lists (external-id member sets).
pub fn compare_communities(a: &[BTreeSet<u64>], b: &[BTreeSet<u64>]) -> SimilarityReport {
    if a.is_empty() && b.is_empty() {
        return SimilarityReport {
            best_match_f1: 1.0,
            per_community_matches: Vec::new(),
            unmatched_a: 0,
            unmatched_b: 0,
        };
    }

    let order_a = canonical_order(a);
    let order_b = canonical_order(b);
    // the larger side drives; ties go to side a
    let a_drives = a.len() >= b.len();
    let (driver_sets, other_sets) = if a_drives { (a, b) } else { (b, a) };
    let (driver_order, other_order) = if a_drives {
        (&order_a, &order_b)
    } else {
        (&order_b, &order_a)
    };

    let mut taken = vec![false; other_sets.len()];
    let mut matches = Vec::new();
    let mut matched_driver = 0usize;
    let mut f1_sum = 0.0;
    for &di in driver_order {
        // best unclaimed partner; F1 ties go to the earlier canonical slot
        let mut best: Option<(f64, usize)> = None;
        for &oi in other_order {
            if taken[oi] {
                continue;
            }
            let f1 = community_f1(&driver_sets[di], &other_sets[oi]);
            if f1 > 0.0 && best.is_none_or(|(bf, _)| f1 > bf) {
                best = Some((f1, oi));
            }
        }
        if let Some((f1, oi)) = best {
            taken[oi] = true;
            matched_driver += 1;
            f1_sum += f1;
            let (index_a, index_b) = if a_drives { (di, oi) } else { (oi, di) };
            matches.push(MatchEntry { index_a, index_b, f1 });
        }
    }

    let unmatched_driver = driver_sets.len() - matched_driver;
    let unmatched_other = other_sets.len() - matched_driver;
    let (unmatched_a, unmatched_b) = if a_drives {
        (unmatched_driver, unmatched_other)
    } else {
        (unmatched_other, unmatched_driver)
    };
    SimilarityReport {
        best_match_f1: f1_sum / driver_sets.len() as f64,
        per_community_matches: matches,
        unmatched_a,
        unmatched_b,
    }
}

impl SimilarityReport {
    /// Human-readable report.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "best_match_f1={:.6}", self.best_match_f1);
        let _ = writeln!(out, "matches={}", self.per_community_matches.len());
        let _ = writeln!(out, "unmatched_a={}", self.unmatched_a);
        let _ = writeln!(out, "unmatched_b={}", self.unmatched_b);
        for m in &self.per_community_matches {
            let _ = writeln!(out, "  a[{}] ~ b[{}] f1={:.6}", m.index_a, m.index_b, m.f1);
        }
        out
    }

    /// Machine-readable CSV (one row per match).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id_a,id_b,f1\n");
        for m in &self.per_community_matches {
            let _ = writeln!(out, "{},{},{:.6}", m.index_a, m.index_b, m.f1);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(groups: &[&[u64]]) -> Vec<BTreeSet<u64>> {
        groups.iter().map(|g| g.iter().copied().collect()).collect()
    }

    #[test]
    fn identical_sides_score_one() {
        let a = sets(&[&[1, 2, 3], &[4, 5], &[6, 7, 8, 9]]);
        let rep = compare_communities(&a, &a);
        assert_eq!(rep.best_match_f1, 1.0);
        assert_eq!(rep.unmatched_a, 0);
        assert_eq!(rep.unmatched_b, 0);
        assert_eq!(rep.per_community_matches.len(), 3);
    }

    #[test]
    fn single_pair_formula() {
        let a = sets(&[&[1, 2, 3]]);
        let b = sets(&[&[1, 2, 4]]);
        let rep = compare_communities(&a, &b);
        assert!((rep.best_match_f1 - 2.0 * 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_pair_scores_zero() {
        let a = sets(&[&[1, 2]]);
        let b = sets(&[&[8, 9]]);
        let rep = compare_communities(&a, &b);
        assert_eq!(rep.best_match_f1, 0.0);
        assert_eq!(rep.unmatched_a, 1);
        assert_eq!(rep.unmatched_b, 1);
    }

    #[test]
    fn larger_side_drives_the_mean() {
        // two fragments vs their union: each fragment matches partially,
        // mean over the 2-community side
        let a = sets(&[&[1, 2], &[3, 4]]);
        let b = sets(&[&[1, 2, 3, 4]]);
        let rep = compare_communities(&a, &b);
        let expected = (2.0 * 2.0 / 6.0) / 2.0;
        assert!((rep.best_match_f1 - expected).abs() < 1e-12);
        assert_eq!(rep.unmatched_a, 1);
        assert_eq!(rep.unmatched_b, 0);
        // swapping arguments keeps the driver, hence the score
        let swapped = compare_communities(&b, &a);
        assert!((swapped.best_match_f1 - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_vs_empty_is_identical() {
        let rep = compare_communities(&[], &[]);
        assert_eq!(rep.best_match_f1, 1.0);
    }
}
