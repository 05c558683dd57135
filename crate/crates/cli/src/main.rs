//! `dialogwalk`: generate topic-shifting dialogues from a knowledge graph and
//! score segmentation / shift-detection predictions against them.
//!
//! Exit status: 0 success, 1 degraded run, 2 invalid input or configuration.

mod config;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dialogwalk::eval::{
    dataset_stats, detect_metrics_with, join_detection, join_segmentation, read_jsonl, seg_metrics_with, Averaging,
    DetectPrediction, SegPrediction,
};
use dialogwalk::postproc::{read_dialogues, Dialogue};
use dialogwalk::qgen::GeneratorKind;
use serde::Serialize;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "dialogwalk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate dialogues as JSONL.
    Generate(GenerateArgs),
    /// Score topic-segmentation predictions.
    EvalSeg(EvalArgs),
    /// Score topic-shift detection predictions.
    EvalDetect(EvalArgs),
    /// Summarize a dialogue JSONL file.
    Stats(StatsArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Knowledge-graph triplets (JSONL).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Local corpus: a directory of `<entity>.txt` files or a JSONL file.
    #[arg(long, conflicts_with = "remote_base_url")]
    corpus: Option<PathBuf>,
    /// Wiki-style API endpoint, e.g. https://en.wikipedia.org/w/api.php.
    #[arg(long)]
    remote_base_url: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of dialogues.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_topics: Option<usize>,
    /// `stub` or `llm`.
    #[arg(long, value_parser = config::parse_generator)]
    generator: Option<GeneratorKind>,
    /// Chat model name (llm generator).
    #[arg(long)]
    model: Option<String>,
    /// Chat-completion base URL; overrides MP2D_BASE_URL.
    #[arg(long)]
    chat_base_url: Option<String>,
    /// Dialogues generated in parallel.
    #[arg(long)]
    concurrency: Option<usize>,
    /// `key=value` file using the long flag names; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Gold dialogues (JSONL).
    #[arg(long)]
    gold: PathBuf,
    /// Predictions (JSONL keyed by dialogue id).
    #[arg(long)]
    pred: PathBuf,
    /// Average per dialogue instead of pooling counts.
    #[arg(long = "macro")]
    macro_avg: bool,
    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Dialogue JSONL file.
    dialogues: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error with the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Self {
            code: 2,
            error: e.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();

    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::EvalSeg(args) => eval_seg(args),
        Command::EvalDetect(args) => eval_detect(args),
        Command::Stats(args) => stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let file = match &args.config {
        Some(path) => config::load_file(path)?,
        None => Default::default(),
    };
    let overrides = config::Overrides {
        graph: args.graph,
        corpus: args.corpus,
        remote_base_url: args.remote_base_url,
        out: args.out,
        n: args.n,
        seed: args.seed,
        max_topics: args.max_topics,
        generator: args.generator,
        model: args.model,
        concurrency: args.concurrency,
        chat_base_url: args.chat_base_url,
    };
    let cfg = config::resolve(overrides, &file, |k| std::env::var(k).ok())?;
    let inputs = cfg.open()?;
    let stats = inputs.graph.load_stats();
    tracing::info!(
        triplets = inputs.graph.len(),
        duplicates = stats.duplicates,
        self_loops = stats.self_loops,
        n = cfg.n_dialogues,
        seed = cfg.seed,
        generator = %cfg.generator,
        "generating"
    );

    let pipeline = inputs.pipeline(cfg.max_topics);
    let summary = with_output(cfg.output_path.as_deref(), |out| {
        pipeline.run(cfg.n_dialogues, cfg.seed, cfg.concurrency, out)
    })?;
    tracing::info!(
        written = summary.written,
        failed = summary.failed,
        walks_sampled = summary.walks_sampled,
        walks_skipped = summary.walks_skipped,
        "done"
    );
    if summary.degraded() {
        return Err(Failure {
            code: 1,
            error: anyhow::anyhow!(
                "degraded run: wrote {}/{} dialogues; {} of {} sampled walks skipped",
                summary.written,
                summary.requested,
                summary.walks_skipped,
                summary.walks_sampled
            ),
        });
    }
    Ok(())
}

/// Runs `f` against the file at `path`, or stdout.
fn with_output<T>(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<T>) -> Result<T> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?);
            let value = f(&mut w).with_context(|| format!("writing {}", p.display()))?;
            w.flush()?;
            Ok(value)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            let value = f(&mut lock)?;
            lock.flush()?;
            Ok(value)
        }
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    with_output(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot read {}", path.display()))?))
}

fn load_dialogues(path: &Path) -> Result<Vec<Dialogue>> {
    read_dialogues(open(path)?).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn averaging(macro_avg: bool) -> Averaging {
    if macro_avg {
        Averaging::Macro
    } else {
        Averaging::Micro
    }
}

fn eval_seg(args: EvalArgs) -> Result<(), Failure> {
    let gold = load_dialogues(&args.gold)?;
    let preds: Vec<SegPrediction> = read_jsonl(open(&args.pred)?).with_context(|| args.pred.display().to_string())?;
    let instances = join_segmentation(&gold, &preds)?;
    let report = seg_metrics_with(&instances, averaging(args.macro_avg))?;
    emit_json(&report, args.out.as_deref())?;
    Ok(())
}

fn eval_detect(args: EvalArgs) -> Result<(), Failure> {
    let gold = load_dialogues(&args.gold)?;
    let preds: Vec<DetectPrediction> =
        read_jsonl(open(&args.pred)?).with_context(|| args.pred.display().to_string())?;
    let instances = join_detection(&gold, &preds)?;
    let report = detect_metrics_with(&instances, averaging(args.macro_avg))?;
    emit_json(&report, args.out.as_deref())?;
    Ok(())
}

fn stats(args: StatsArgs) -> Result<(), Failure> {
    let dialogues = load_dialogues(&args.dialogues)?;
    let stats = dataset_stats(&dialogues)
        .ok_or_else(|| anyhow::anyhow!("{}: no dialogues", args.dialogues.display()))?;
    emit_json(&stats, args.out.as_deref())?;
    Ok(())
}
