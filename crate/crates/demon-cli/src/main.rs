//! `demon` — replay a growing graph and watch its overlapping communities.
//!
//! Exit codes: 0 ok, 1 usage error, 2 data error, 3 internal coherence
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use demon::labelprop::TieBreak;
use demon::runner::{self, Mode, RunConfig, RunnerError};
use demon::synth;

#[derive(Parser)]
#[command(name = "demon", version, about = "Overlapping community detection on growing graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a stream over a base graph in one mode.
    Run(RunArgs),
    /// Run batch-replay then incremental on the same inputs and report the
    /// stream-phase speedup.
    Bench(RunArgs),
    /// Compare two community snapshot files by best-match F1.
    Compare(CompareArgs),
    /// Generate a synthetic base/stream pair.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "batch-replay")]
    BatchReplay,
    Incremental,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieBreakArg {
    Det,
    Random,
}

#[derive(Args)]
struct RunArgs {
    /// Base graph edge list (CSV, one "src,dst" per line).
    #[arg(long)]
    base: PathBuf,
    /// Edge stream to replay, same format; empty stream when omitted.
    #[arg(long)]
    stream: Option<PathBuf>,
    /// batch-replay: full recomputation per stream prefix; incremental:
    /// per-event updates. `bench` ignores this and runs both.
    #[arg(long, value_enum, default_value = "incremental")]
    mode: ModeArg,
    /// Merge threshold in [0,1].
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Label-propagation sweep cap.
    #[arg(long, default_value_t = 100)]
    max_iter: u32,
    /// Write a community snapshot after every N events.
    #[arg(long, default_value_t = 100)]
    snapshot_every: u64,
    #[arg(long)]
    out: PathBuf,
    /// Label tie-breaking: deterministic smallest-label or seeded-random.
    #[arg(long, value_enum, default_value = "det")]
    tie_break: TieBreakArg,
    /// Skip malformed CSV lines instead of aborting.
    #[arg(long)]
    lenient: bool,
    /// Local groups smaller than this never reach the merge pool.
    #[arg(long, default_value_t = 3)]
    min_community_size: usize,
    /// Out dir of a previous batch-replay run; lets an incremental run
    /// report a measured speedup.
    #[arg(long)]
    baseline: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    snapshot_a: PathBuf,
    snapshot_b: PathBuf,
    /// Where to write similarity.txt and similarity.csv (default: stdout only).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    #[value(name = "preferential-attachment")]
    PreferentialAttachment,
    #[value(name = "planted-cliques")]
    PlantedCliques,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    /// Vertex count.
    #[arg(long)]
    n: u64,
    /// Target edge count (preferential-attachment).
    #[arg(long, default_value_t = 0)]
    m: u64,
    /// Number of planted cliques.
    #[arg(long, default_value_t = 4)]
    cliques: u64,
    /// Inter-clique edges per clique pair.
    #[arg(long, default_value_t = 1)]
    inter_edges: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// The last N generated edges become the stream file.
    #[arg(long, default_value_t = 100)]
    stream_len: usize,
    #[arg(long)]
    out: PathBuf,
}

fn run_config(a: &RunArgs) -> RunConfig {
    RunConfig {
        base_path: a.base.clone(),
        stream_path: a.stream.clone(),
        mode: match a.mode {
            ModeArg::BatchReplay => Mode::BatchReplay,
            ModeArg::Incremental => Mode::Incremental,
        },
        epsilon: a.epsilon,
        seed: a.seed,
        max_iter: a.max_iter,
        snapshot_every: a.snapshot_every,
        out_dir: a.out.clone(),
        tie_break: match a.tie_break {
            TieBreakArg::Det => TieBreak::Deterministic,
            TieBreakArg::Random => TieBreak::Random,
        },
        lenient: a.lenient,
        min_community_size: a.min_community_size,
        baseline_dir: a.baseline.clone(),
    }
}

fn exec(command: Command) -> Result<(), RunnerError> {
    match command {
        Command::Run(args) => {
            let cfg = run_config(&args);
            let summary = runner::run(&cfg)?;
            println!("mode={}", cfg.mode.as_str());
            println!("first_step_s={:.6}", summary.first_step_s);
            println!("stream_total_s={:.6}", summary.stream_total_s);
            match summary.speedup {
                Some(x) => println!("speedup={x:.3}"),
                None => println!("speedup=N/A"),
            }
            println!("final_community_count={}", summary.final_community_count);
            Ok(())
        }
        Command::Bench(args) => {
            let cfg = run_config(&args);
            let outcome = runner::bench(&cfg)?;
            println!("batch_stream_total_s={:.6}", outcome.batch.stream_total_s);
            println!(
                "incremental_stream_total_s={:.6}",
                outcome.incremental.stream_total_s
            );
            match outcome.speedup {
                Some(x) => println!("speedup={x:.3}"),
                None => println!("speedup=N/A"),
            }
            println!(
                "final_snapshot_f1={:.6}",
                outcome.final_similarity.best_match_f1
            );
            Ok(())
        }
        Command::Compare(args) => {
            let report = runner::compare_snapshots(&args.snapshot_a, &args.snapshot_b)?;
            print!("{}", report.to_text());
            if let Some(dir) = args.out {
                std::fs::create_dir_all(&dir)
                    .map_err(|e| RunnerError::Data(format!("cannot create {}: {e}", dir.display())))?;
                let write = |name: &str, content: String| -> Result<(), RunnerError> {
                    std::fs::write(dir.join(name), content).map_err(|e| {
                        RunnerError::Data(format!("cannot write {}: {e}", dir.display()))
                    })
                };
                write("similarity.txt", report.to_text())?;
                write("similarity.csv", report.to_csv())?;
            }
            Ok(())
        }
        Command::Gen(args) => {
            std::fs::create_dir_all(&args.out)
                .map_err(|e| RunnerError::Data(format!("cannot create {}: {e}", args.out.display())))?;
            let (edges, truth) = match args.kind {
                GenKind::PreferentialAttachment => {
                    let m = if args.m == 0 { args.n * 5 } else { args.m };
                    let edges = synth::preferential_attachment(args.n, m, args.seed)
                        .map_err(|e| RunnerError::Usage(e.to_string()))?;
                    (edges, None)
                }
                GenKind::PlantedCliques => {
                    let (edges, truth) =
                        synth::planted_cliques(args.n, args.cliques, args.inter_edges, args.seed)
                            .map_err(|e| RunnerError::Usage(e.to_string()))?;
                    (edges, Some(truth))
                }
            };
            if args.stream_len >= edges.len() {
                return Err(RunnerError::Usage(format!(
                    "stream-len {} leaves no base edges (total {})",
                    args.stream_len,
                    edges.len()
                )));
            }
            let split = edges.len() - args.stream_len;
            let write = |name: &str, content: String| -> Result<(), RunnerError> {
                std::fs::write(args.out.join(name), content).map_err(|e| {
                    RunnerError::Data(format!("cannot write {}: {e}", args.out.display()))
                })
            };
            write("base.csv", synth::edges_to_csv(&edges[..split]))?;
            write("stream.csv", synth::edges_to_csv(&edges[split..]))?;
            if let Some(truth) = truth {
                write("truth.txt", synth::truth_to_text(&truth))?;
            }
            println!(
                "wrote {} base edges, {} stream edges to {}",
                split,
                args.stream_len,
                args.out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not usage errors
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match exec(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunnerError::Usage(_) => ExitCode::from(1),
                RunnerError::Data(_) => ExitCode::from(2),
                RunnerError::Coherence(_) => ExitCode::from(3),
            }
        }
    }
}
