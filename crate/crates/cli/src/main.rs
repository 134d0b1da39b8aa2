mod artifacts;
mod commands;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Caption evaluation: automatic metrics, direct-assessment HIT planning,
/// crowd quality control and system significance testing.
#[derive(Debug, Parser)]
#[command(name = "capeval", version, propagate_version = true)]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate captions and videos and write a corpus directory.
    Ingest(IngestArgs),
    /// Score description runs with BLEU, METEOR, CIDEr and lexical STS.
    ScoreMetrics(ScoreMetricsArgs),
    /// Mean inverted rank of ranking runs.
    Mir(MirArgs),
    /// Build degraded quality-control captions from a reference set.
    Degrade(DegradeArgs),
    /// Lay out system, quality-control and repeat items into HITs.
    BuildHits(BuildHitsArgs),
    /// Run the HTTP collection service.
    Serve(ServeArgs),
    /// Simulate a crowd rating a HIT plan.
    Simulate(SimulateArgs),
    /// Per-worker quality control.
    Qc(QcArgs),
    /// Standardized system scores from collected ratings.
    ScoreSystems(QcArgs),
    /// Pairwise rank-sum significance between systems.
    SigMatrix(SigMatrixArgs),
    /// Correlate metric scores with human scores and compare metrics.
    MetaEval(MetaEvalArgs),
    /// Correlate system scores from two independent collections.
    ReplicateReport(ReplicateArgs),
    /// Lexical similarity between reference sets, and optionally among runs.
    StsCross(StsCrossArgs),
}

#[derive(Debug, Args, Serialize)]
struct CorpusArg {
    /// Corpus directory holding captions.tsv and videos.tsv.
    #[arg(long, env = "CAPEVAL_CORPUS")]
    corpus: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    #[arg(long)]
    captions: PathBuf,
    #[arg(long)]
    videos: PathBuf,
    /// Description runs to validate against the corpus.
    #[arg(long = "run")]
    runs: Vec<PathBuf>,
    /// Output corpus directory.
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ScoreMetricsArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    /// Description run files; the run id is the file stem.
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    /// Also score a reference set as a system (against the other sets).
    #[arg(long = "include-reference")]
    include_reference: Vec<String>,
    /// Restrict references to these sets.
    #[arg(long = "refs", value_delimiter = ',')]
    refs: Vec<String>,
    /// Synonym groups for METEOR and STS, one comma-separated group per line.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct MirArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    /// `video_id<TAB>caption_id` of the correct caption per video.
    #[arg(long)]
    truth: PathBuf,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct DegradeArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    /// Reference set to degrade.
    #[arg(long, default_value = "A")]
    set: String,
    #[arg(long, env = "CAPEVAL_SEED", default_value_t = 42)]
    seed: u64,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BuildHitsArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    /// Evaluate a reference set as a hidden system.
    #[arg(long = "include-reference")]
    include_reference: Vec<String>,
    /// Output of `degrade`.
    #[arg(long)]
    degraded: PathBuf,
    /// Reference set the degraded captions were built from.
    #[arg(long, default_value = "A")]
    set: String,
    #[arg(long, env = "CAPEVAL_HIT_SIZE", default_value_t = 100)]
    hit_size: usize,
    #[arg(long, env = "CAPEVAL_PAIRS", default_value_t = 10)]
    pairs: usize,
    #[arg(long, env = "CAPEVAL_REPEATS", default_value_t = 10)]
    repeats: usize,
    /// Minimum distance between an item and its repeat.
    #[arg(long, default_value_t = 20)]
    min_gap: usize,
    #[arg(long, env = "CAPEVAL_SEED", default_value_t = 42)]
    seed: u64,
    /// Payment per HIT for the cost estimate.
    #[arg(long, default_value_t = 0.99)]
    rate: f64,
    /// Platform fee fraction for the cost estimate.
    #[arg(long, default_value_t = 0.2)]
    fee: f64,
    /// Also write an MTurk batch CSV.
    #[serde(skip)]
    #[arg(long)]
    mturk_csv: Option<PathBuf>,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ServeArgs {
    #[arg(long, env = "CAPEVAL_PLAN")]
    plan: PathBuf,
    #[arg(long, env = "CAPEVAL_STORE")]
    store: PathBuf,
    #[arg(long, env = "CAPEVAL_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Minutes of inactivity before a session is abandoned.
    #[arg(long, env = "CAPEVAL_SESSION_TIMEOUT", default_value_t = 60)]
    session_timeout: u64,
    #[arg(long, env = "CAPEVAL_REDUNDANCY", default_value_t = 1)]
    redundancy: usize,
    /// Serve static files (the rating UI, local clips) from this directory.
    #[arg(long, env = "CAPEVAL_STATIC_DIR")]
    static_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long, env = "CAPEVAL_PLAN")]
    plan: PathBuf,
    /// Crowd description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long, env = "CAPEVAL_SEED")]
    seed: Option<u64>,
    /// Overrides the redundancy in the config.
    #[arg(long, env = "CAPEVAL_REDUNDANCY")]
    redundancy: Option<usize>,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct QcArgs {
    #[arg(long, env = "CAPEVAL_PLAN")]
    plan: PathBuf,
    #[arg(long, env = "CAPEVAL_STORE")]
    store: PathBuf,
    /// Significance level of the quality-control test.
    #[arg(long, env = "CAPEVAL_ALPHA", default_value_t = 0.05)]
    alpha: f64,
    /// Fewer QC pairs than this leaves a worker unjudged.
    #[arg(long, default_value_t = 10)]
    min_pairs: usize,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SigMatrixArgs {
    #[command(flatten)]
    qc: QcArgs,
    /// Significance level for system comparisons.
    #[arg(long, default_value_t = 0.05)]
    sig_alpha: f64,
}

#[derive(Debug, Args, Serialize)]
struct MetaEvalArgs {
    /// Output of `score-metrics`.
    #[arg(long)]
    metrics: PathBuf,
    /// Output of `score-systems`.
    #[arg(long)]
    scores: PathBuf,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
    /// Per-system metric and human scores for plotting.
    #[serde(skip)]
    #[arg(long)]
    scatter: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ReplicateArgs {
    /// Two `score-systems` outputs.
    #[arg(long = "scores", num_args = 1..=2, required = true)]
    scores: Vec<PathBuf>,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct StsCrossArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long, default_value = "A")]
    set_a: String,
    #[arg(long, default_value = "B")]
    set_b: String,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
    /// Runs to compare with each other and with `--set-a`.
    #[arg(long = "run")]
    runs: Vec<PathBuf>,
    /// Inter-system similarity report; requires `--run`.
    #[serde(skip)]
    #[arg(long, requires = "runs")]
    systems_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::ScoreMetrics(a) => commands::score_metrics(&a),
        Command::Mir(a) => commands::mir(&a),
        Command::Degrade(a) => commands::degrade(&a),
        Command::BuildHits(a) => commands::build_hits(&a),
        Command::Serve(a) => commands::serve(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Qc(a) => commands::qc(&a),
        Command::ScoreSystems(a) => commands::score_systems(&a),
        Command::SigMatrix(a) => commands::sig_matrix(&a),
        Command::MetaEval(a) => commands::meta_eval(&a),
        Command::ReplicateReport(a) => commands::replicate(&a),
        Command::StsCross(a) => commands::sts_cross(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
