//! Run harness: stream replay in batch or incremental mode, artifact
//! output, and the snapshot comparator.
//!
//! Batch-replay emulates the baseline: a full batch run on every stream
//! prefix, so its per-step cost is the full pipeline. Incremental mode runs
//! the batch pipeline once on the base graph and then applies stream events
//! one at a time. Both write the same artifacts — community snapshots, a
//! per-event `steps.csv` and a `summary.txt` — so their stream phases can be
//! compared directly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::engine::{run_batch, Config, EngineError};
use crate::graph::{load_edge_list, load_event_list, Graph, GraphError, VertexId};
use crate::labelprop::TieBreak;
use crate::merge::{parse_snapshot, write_snapshot, CandidateOrder, SnapshotError};
use crate::similarity::{compare_communities, SimilarityReport};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("coherence: {0}")]
    Coherence(String),
}

impl From<GraphError> for RunnerError {
    fn from(e: GraphError) -> Self {
        RunnerError::Data(e.to_string())
    }
}

impl From<SnapshotError> for RunnerError {
    fn from(e: SnapshotError) -> Self {
        RunnerError::Data(e.to_string())
    }
}

impl From<EngineError> for RunnerError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Graph(g) => RunnerError::Data(g.to_string()),
            EngineError::Coherence(msg) => RunnerError::Coherence(msg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    BatchReplay,
    Incremental,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::BatchReplay => "batch-replay",
            Mode::Incremental => "incremental",
        }
    }
}

/// One replay run, as configured from the command line.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub base_path: PathBuf,
    pub stream_path: Option<PathBuf>,
    pub mode: Mode,
    pub epsilon: f64,
    pub seed: u64,
    pub max_iter: u32,
    pub snapshot_every: u64,
    pub out_dir: PathBuf,
    pub tie_break: TieBreak,
    pub lenient: bool,
    pub min_community_size: usize,
    /// Out dir of a previous batch-replay run; enables a measured speedup
    /// in the summary of an incremental run.
    pub baseline_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(base: impl Into<PathBuf>, mode: Mode, out: impl Into<PathBuf>) -> Self {
        Self {
            base_path: base.into(),
            stream_path: None,
            mode,
            epsilon: 0.25,
            seed: 42,
            max_iter: 100,
            snapshot_every: 100,
            out_dir: out.into(),
            tie_break: TieBreak::Deterministic,
            lenient: false,
            min_community_size: 3,
            baseline_dir: None,
        }
    }

    fn engine_config(&self) -> Config {
        Config {
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            seed: self.seed,
            tie_break: self.tie_break,
            min_community_size: self.min_community_size,
            merge_order: CandidateOrder::Ascending,
        }
    }
}

/// Timing summary of one run, mirrored into `summary.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub first_step_s: f64,
    pub stream_total_s: f64,
    /// Baseline stream phase over own stream phase; `None` renders as N/A.
    pub speedup: Option<f64>,
    pub final_community_count: usize,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn write_file(path: &Path, content: &str) -> Result<(), RunnerError> {
    fs::write(path, content)
        .map_err(|e| RunnerError::Data(format!("cannot write {}: {e}", path.display())))
}

fn snapshot_path(dir: &Path, event_index: u64) -> PathBuf {
    dir.join(format!("snapshot_{event_index:06}.txt"))
}

struct StepsCsv {
    rows: String,
}

impl StepsCsv {
    fn new() -> Self {
        Self {
            rows: String::from(
                "event_index,src,dst,egos_touched,communities_resubmitted,merges,elapsed_ns\n",
            ),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        index: u64,
        src: VertexId,
        dst: VertexId,
        egos: usize,
        resubmitted: usize,
        merges: usize,
        elapsed: Duration,
    ) {
        let _ = writeln!(
            self.rows,
            "{index},{src},{dst},{egos},{resubmitted},{merges},{}",
            elapsed.as_nanos()
        );
    }
}

fn validate(cfg: &RunConfig) -> Result<(), RunnerError> {
    if !(0.0..=1.0).contains(&cfg.epsilon) {
        return Err(RunnerError::Usage(format!(
            "epsilon {} outside [0,1]",
            cfg.epsilon
        )));
    }
    if cfg.snapshot_every == 0 {
        return Err(RunnerError::Usage("snapshot-every must be >= 1".into()));
    }
    if cfg.max_iter == 0 {
        return Err(RunnerError::Usage("max-iter must be >= 1".into()));
    }
    if cfg.min_community_size == 0 {
        return Err(RunnerError::Usage("min-community-size must be >= 1".into()));
    }
    Ok(())
}

fn load_inputs(cfg: &RunConfig) -> Result<(Graph, Vec<(VertexId, VertexId)>), RunnerError> {
    let (graph, _) = load_edge_list(&cfg.base_path, cfg.lenient)?;
    let events = match &cfg.stream_path {
        Some(p) => load_event_list(p, cfg.lenient)?.0,
        None => Vec::new(),
    };
    Ok((graph, events))
}

/// Executes one run and writes snapshots, `steps.csv` and `summary.txt`
/// under `out_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunnerError> {
    validate(cfg)?;
    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| RunnerError::Data(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    let (base, events) = load_inputs(cfg)?;
    let engine_cfg = cfg.engine_config();

    let mut csv = StepsCsv::new();
    let mut stream_total = Duration::ZERO;
    let first_step: Duration;
    let final_count;

    match cfg.mode {
        Mode::Incremental => {
            let t0 = Instant::now();
            let mut state = run_batch(base, engine_cfg);
            first_step = t0.elapsed();
            write_file(
                &snapshot_path(&cfg.out_dir, 0),
                &write_snapshot(&state.pool, |v| state.graph.external_id(v)),
            )?;
            let mut last_snapshot = 0u64;
            for (i, &(src, dst)) in events.iter().enumerate() {
                let index = i as u64 + 1;
                let report = state.apply_event(src, dst)?;
                stream_total += report.elapsed;
                csv.push(
                    index,
                    src,
                    dst,
                    report.egos_touched,
                    report.communities_resubmitted,
                    report.merges,
                    report.elapsed,
                );
                if index % cfg.snapshot_every == 0 {
                    write_file(
                        &snapshot_path(&cfg.out_dir, index),
                        &write_snapshot(&state.pool, |v| state.graph.external_id(v)),
                    )?;
                    last_snapshot = index;
                }
            }
            let n = events.len() as u64;
            if n > 0 && last_snapshot != n {
                write_file(
                    &snapshot_path(&cfg.out_dir, n),
                    &write_snapshot(&state.pool, |v| state.graph.external_id(v)),
                )?;
            }
            final_count = state.pool.len();
        }
        Mode::BatchReplay => {
            let t0 = Instant::now();
            let state0 = run_batch(base.clone(), engine_cfg.clone());
            first_step = t0.elapsed();
            write_file(
                &snapshot_path(&cfg.out_dir, 0),
                &write_snapshot(&state0.pool, |v| state0.graph.external_id(v)),
            )?;
            let mut count = state0.pool.len();
            let mut current = base;
            let mut last_snapshot = 0u64;
            for (i, &(src, dst)) in events.iter().enumerate() {
                let index = i as u64 + 1;
                if src == dst {
                    return Err(RunnerError::Data(format!(
                        "stream event {index} is a self-loop"
                    )));
                }
                current.add_edge(src, dst)?;
                let t = Instant::now();
                let state = run_batch(current.clone(), engine_cfg.clone());
                let elapsed = t.elapsed();
                stream_total += elapsed;
                csv.push(
                    index,
                    src,
                    dst,
                    state.graph.vertex_count(),
                    state.counters.groups_submitted as usize,
                    state.counters.merges as usize,
                    elapsed,
                );
                if index % cfg.snapshot_every == 0 {
                    write_file(
                        &snapshot_path(&cfg.out_dir, index),
                        &write_snapshot(&state.pool, |v| state.graph.external_id(v)),
                    )?;
                    last_snapshot = index;
                }
                count = state.pool.len();
                if index == events.len() as u64 && last_snapshot != index {
                    write_file(
                        &snapshot_path(&cfg.out_dir, index),
                        &write_snapshot(&state.pool, |v| state.graph.external_id(v)),
                    )?;
                }
            }
            final_count = count;
        }
    }

    write_file(&cfg.out_dir.join("steps.csv"), &csv.rows)?;

    let speedup = match (&cfg.baseline_dir, events.len()) {
        (Some(dir), n) if n > 0 => {
            let baseline = read_summary(&dir.join("summary.txt"))?;
            let own = secs(stream_total);
            (own > 0.0 && baseline.stream_total_s > 0.0)
                .then(|| baseline.stream_total_s / own)
        }
        _ => None,
    };
    let summary = RunSummary {
        first_step_s: secs(first_step),
        stream_total_s: secs(stream_total),
        speedup,
        final_community_count: final_count,
    };
    write_file(&cfg.out_dir.join("summary.txt"), &render_summary(&summary))?;
    Ok(summary)
}

fn render_summary(s: &RunSummary) -> String {
    let speedup = match s.speedup {
        Some(x) => format!("{x:.3}"),
        None => "N/A".to_string(),
    };
    format!(
        "first_step_s={:.6}\nstream_total_s={:.6}\nspeedup={}\nfinal_community_count={}\n",
        s.first_step_s, s.stream_total_s, speedup, s.final_community_count
    )
}

/// Parses a `summary.txt` written by `run`.
pub fn read_summary(path: &Path) -> Result<RunSummary, RunnerError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunnerError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut first = None;
    let mut total = None;
    let mut speedup = None;
    let mut count = None;
    for line in text.lines() {
        let Some((k, v)) = line.split_once('=') else {
            continue;
        };
        match k {
            "first_step_s" => first = v.parse().ok(),
            "stream_total_s" => total = v.parse().ok(),
            "speedup" => speedup = v.parse().ok(),
            "final_community_count" => count = v.parse().ok(),
            _ => {}
        }
    }
    match (first, total, count) {
        (Some(first_step_s), Some(stream_total_s), Some(final_community_count)) => Ok(RunSummary {
            first_step_s,
            stream_total_s,
            speedup,
            final_community_count,
        }),
        _ => Err(RunnerError::Data(format!(
            "{} is not a run summary",
            path.display()
        ))),
    }
}

/// Compares two snapshot files. Callers render the report as text or CSV.
pub fn compare_snapshots(path_a: &Path, path_b: &Path) -> Result<SimilarityReport, RunnerError> {
    let read = |p: &Path| -> Result<String, RunnerError> {
        fs::read_to_string(p)
            .map_err(|e| RunnerError::Data(format!("cannot read {}: {e}", p.display())))
    };
    let a = parse_snapshot(&read(path_a)?)?;
    let b = parse_snapshot(&read(path_b)?)?;
    Ok(compare_communities(&a, &b))
}

/// Result of a paired benchmark: both modes on the same inputs.
#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub batch: RunSummary,
    pub incremental: RunSummary,
    /// Batch-replay stream phase over incremental stream phase.
    pub speedup: Option<f64>,
    pub final_similarity: SimilarityReport,
}

/// Runs batch-replay then incremental mode on the same inputs, computes the
/// stream-phase speedup and compares the final snapshots. Artifacts land in
/// `out/batch-replay` and `out/incremental`, plus a combined `summary.txt`.
pub fn bench(cfg: &RunConfig) -> Result<BenchOutcome, RunnerError> {
    let batch_dir = cfg.out_dir.join("batch-replay");
    let incr_dir = cfg.out_dir.join("incremental");
    let mut batch_cfg = cfg.clone();
    batch_cfg.mode = Mode::BatchReplay;
    batch_cfg.out_dir = batch_dir.clone();
    batch_cfg.baseline_dir = None;
    let batch = run(&batch_cfg)?;

    let mut incr_cfg = cfg.clone();
    incr_cfg.mode = Mode::Incremental;
    incr_cfg.out_dir = incr_dir.clone();
    incr_cfg.baseline_dir = Some(batch_dir.clone());
    let incremental = run(&incr_cfg)?;

    let events = match &cfg.stream_path {
        Some(p) => load_event_list(p, cfg.lenient)?.0.len() as u64,
        None => 0,
    };
    let final_similarity = compare_snapshots(
        &snapshot_path(&batch_dir, events),
        &snapshot_path(&incr_dir, events),
    )?;
    let speedup = incremental.speedup;

    let mut combined = String::new();
    let _ = writeln!(combined, "batch_first_step_s={:.6}", batch.first_step_s);
    let _ = writeln!(combined, "batch_stream_total_s={:.6}", batch.stream_total_s);
    let _ = writeln!(
        combined,
        "incremental_first_step_s={:.6}",
        incremental.first_step_s
    );
    let _ = writeln!(
        combined,
        "incremental_stream_total_s={:.6}",
        incremental.stream_total_s
    );
    let _ = writeln!(
        combined,
        "speedup={}",
        speedup.map_or("N/A".to_string(), |x| format!("{x:.3}"))
    );
    let _ = writeln!(
        combined,
        "final_community_count={}",
        incremental.final_community_count
    );
    let _ = writeln!(
        combined,
        "final_snapshot_f1={:.6}",
        final_similarity.best_match_f1
    );
    write_file(&cfg.out_dir.join("summary.txt"), &combined)?;

    Ok(BenchOutcome {
        batch,
        incremental,
        speedup,
        final_similarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_tmp(dir: &Path, name: &str, content: &str) -> PathBuf {
        let p = dir.join(name);
        let mut f = fs::File::create(&p).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        p
    }

    fn clique_csv() -> String {
        let mut s = String::new();
        for c in [[1u64, 2, 3, 4], [5, 6, 7, 8]] {
            for i in 0..4 {
                for j in i + 1..4 {
                    s.push_str(&format!("{},{}\n", c[i], c[j]));
                }
            }
        }
        s.push_str("4,5\n");
        s
    }

    #[test]
    fn empty_stream_reports_na_speedup() {
        let tmp = tempfile::tempdir().unwrap();
        let base = write_tmp(tmp.path(), "base.csv", &clique_csv());
        let mut cfg = RunConfig::new(&base, Mode::Incremental, tmp.path().join("out"));
        cfg.snapshot_every = 1;
        let summary = run(&cfg).unwrap();
        assert!(summary.speedup.is_none());
        assert_eq!(summary.stream_total_s, 0.0);
        assert_eq!(summary.final_community_count, 2);
        let steps = fs::read_to_string(tmp.path().join("out/steps.csv")).unwrap();
        assert_eq!(steps.lines().count(), 1, "header only for empty stream");
        assert!(tmp.path().join("out/snapshot_000000.txt").exists());
    }

    #[test]
    fn both_modes_write_matching_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let base = write_tmp(tmp.path(), "base.csv", &clique_csv());
        let stream = write_tmp(tmp.path(), "stream.csv", "3,6\n2,7\n");
        for mode in [Mode::BatchReplay, Mode::Incremental] {
            let mut cfg = RunConfig::new(&base, mode, tmp.path().join(mode.as_str()));
            cfg.stream_path = Some(stream.clone());
            cfg.snapshot_every = 1;
            let summary = run(&cfg).unwrap();
            assert!(summary.final_community_count >= 1);
            let steps =
                fs::read_to_string(tmp.path().join(mode.as_str()).join("steps.csv")).unwrap();
            assert_eq!(steps.lines().count(), 3, "header + one row per event");
            for i in 0..=2u64 {
                assert!(snapshot_path(&tmp.path().join(mode.as_str()), i).exists());
            }
        }
    }

    #[test]
    fn bench_computes_speedup_and_similarity() {
        let tmp = tempfile::tempdir().unwrap();
        let base = write_tmp(tmp.path(), "base.csv", &clique_csv());
        let stream = write_tmp(tmp.path(), "stream.csv", "3,6\n2,7\n10,1\n10,2\n");
        let mut cfg = RunConfig::new(&base, Mode::Incremental, tmp.path().join("bench"));
        cfg.stream_path = Some(stream);
        let outcome = bench(&cfg).unwrap();
        assert!(outcome.speedup.is_some());
        assert!(outcome.final_similarity.best_match_f1 > 0.0);
        assert!(tmp.path().join("bench/summary.txt").exists());
    }

    #[test]
    fn usage_errors_detected() {
        let tmp = tempfile::tempdir().unwrap();
        let base = write_tmp(tmp.path(), "base.csv", "1,2\n");
        let mut cfg = RunConfig::new(&base, Mode::Incremental, tmp.path().join("out"));
        cfg.epsilon = 1.5;
        assert!(matches!(run(&cfg), Err(RunnerError::Usage(_))));
        cfg.epsilon = 0.5;
        cfg.snapshot_every = 0;
        assert!(matches!(run(&cfg), Err(RunnerError::Usage(_))));
    }

    #[test]
    fn missing_file_is_data_error() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig::new(
            tmp.path().join("nope.csv"),
            Mode::Incremental,
            tmp.path().join("out"),
        );
        assert!(matches!(run(&cfg), Err(RunnerError::Data(_))));
    }

    #[test]
    fn summary_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let s = RunSummary {
            first_step_s: 1.25,
            stream_total_s: 0.5,
            speedup: Some(12.0),
            final_community_count: 7,
        };
        let p = tmp.path().join("summary.txt");
        fs::write(&p, render_summary(&s)).unwrap();
        let back = read_summary(&p).unwrap();
        assert_eq!(back.final_community_count, 7);
        assert_eq!(back.speedup, Some(12.0));
    }
}
