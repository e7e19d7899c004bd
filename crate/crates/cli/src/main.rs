//! Command-line front end for the clustering pipeline.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gamecluster_core::corpus::{
    compute_stats, frequency_filter, read_labels, read_sparse_corpus, read_text_dir,
    tokenize_corpus, write_labels, write_sparse_corpus, DocumentTermMatrix,
};
use gamecluster_core::harness::{
    config_hash, make_synthetic_corpus, run_knn_baseline, run_static, run_static_nok,
    run_streaming, ExperimentConfig, Mode, WeightingChoice,
};
use gamecluster_core::weighting::dump_features;
use gamecluster_core::{evaluation, Result};

#[derive(Parser)]
#[command(
    name = "gamecluster",
    version,
    about = "Document clustering through games on similarity graphs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ingest a corpus, compute document features, and dump a feature cache.
    Prep(PrepArgs),
    /// Cluster a corpus with a known class count or discover one.
    Cluster(ClusterArgs),
    /// Reveal a corpus in folds, clustering each new slice as it arrives.
    Stream(StreamArgs),
    /// Score a predicted labeling against a ground-truth labeling.
    Eval(EvalArgs),
    /// Generate a synthetic corpus of disjoint vocabulary blocks.
    Synth(SynthArgs),
}

#[derive(Args)]
struct CorpusInput {
    /// Sparse corpus file: "n_docs n_terms nnz" header, then 1-indexed
    /// "term count" pairs, one document per line.
    #[arg(long, conflicts_with = "text_dir")]
    corpus: Option<PathBuf>,
    /// Directory of plain-text files, one document each.
    #[arg(long)]
    text_dir: Option<PathBuf>,
    /// Drop terms whose summed count is at or below this value.
    #[arg(long)]
    min_total: Option<f64>,
}

impl CorpusInput {
    fn load(&self) -> Result<DocumentTermMatrix> {
        let m = match (&self.corpus, &self.text_dir) {
            (Some(path), None) => read_sparse_corpus(path)?,
            (None, Some(dir)) => {
                let (texts, _names) = read_text_dir(dir)?;
                tokenize_corpus(&texts)?
            }
            _ => {
                return Err(gamecluster_core::Error::BadConfig {
                    msg: "provide exactly one of --corpus or --text-dir".into(),
                })
            }
        };
        match self.min_total {
            Some(t) => Ok(frequency_filter(&m, t)?.0),
            None => Ok(m),
        }
    }
}

#[derive(Args)]
struct PipelineArgs {
    /// Project features to this many latent dimensions before graphing.
    #[arg(long)]
    lsa: Option<usize>,
    /// Gaussian kernel width for the main graphs.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Narrow kernel width for the over-segmentation pass.
    #[arg(long, default_value_t = 0.1)]
    nok_sigma: f64,
    /// Neighbors kept per node in the games graph (default scales with n).
    #[arg(long)]
    k_nn: Option<usize>,
    /// Keep only edges at or above this weight instead of k-NN.
    #[arg(long, conflicts_with = "k_nn")]
    epsilon: Option<f64>,
    /// Sparsify the degree-normalized matrix rather than the kernel.
    #[arg(long)]
    sparsify_laplacian: bool,
    /// Convergence threshold for the games.
    #[arg(long, default_value_t = 1e-6)]
    game_tol: f64,
    /// Iteration budget for the games.
    #[arg(long, default_value_t = 5000)]
    game_iters: usize,
}

impl PipelineArgs {
    fn config(&self, mode: Mode, repetitions: usize, n_folds: usize, seed: u64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            mode,
            weighting: match self.lsa {
                Some(rank) => WeightingChoice::TfIdfLsa { rank },
                None => WeightingChoice::TfIdf,
            },
            sigma: self.sigma,
            nok_sigma: self.nok_sigma,
            k_nn: self.k_nn,
            epsilon: self.epsilon,
            sparsify_laplacian: self.sparsify_laplacian,
            repetitions,
            n_folds,
            seed,
            ..ExperimentConfig::default()
        };
        cfg.game.tol = self.game_tol;
        cfg.game.max_iters = self.game_iters;
        cfg
    }
}

#[derive(Args)]
struct PrepArgs {
    #[command(flatten)]
    input: CorpusInput,
    /// Project to this many latent dimensions.
    #[arg(long)]
    lsa: Option<usize>,
    /// Feature cache destination.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: CorpusInput,
    /// Ground-truth labels, one name per line; also fixes K unless
    /// discovery is requested.
    #[arg(long)]
    labels: PathBuf,
    /// Discover the cluster count instead of taking it from the labels.
    #[arg(long)]
    discover_k: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StreamArgs {
    #[command(flatten)]
    input: CorpusInput,
    #[arg(long)]
    labels: PathBuf,
    /// Classify new folds by their nearest labeled document instead of the
    /// games.
    #[arg(long)]
    baseline: bool,
    #[arg(long, default_value_t = 12)]
    folds: usize,
    #[arg(long, default_value_t = 15)]
    reps: usize,
    /// Fold-split seed; streaming runs are sampled, so it must be explicit.
    #[arg(long, required = true)]
    seed: u64,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted labels, one name per line.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth labels, one name per line.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    docs_per_cluster: usize,
    #[arg(long)]
    vocab_per_cluster: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, required = true)]
    seed: u64,
    /// Corpus destination (sparse format).
    #[arg(long)]
    out: PathBuf,
    /// Labels destination.
    #[arg(long)]
    labels_out: PathBuf,
}

fn emit<T: serde::Serialize>(report: &T, out: Option<&PathBuf>) -> Result<()> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            writeln!(w, "{json}")?;
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Prep(args) => {
            let m = args.input.load()?;
            let feats = gamecluster_core::weighting::tfidf(&m)?;
            let feats = match args.lsa {
                Some(rank) => gamecluster_core::weighting::lsa_project(&feats, rank)?,
                None => feats,
            };
            let w = BufWriter::new(File::create(&args.out)?);
            dump_features(&feats, w)?;
            eprintln!(
                "wrote {} docs x {} dims to {}",
                feats.n_docs(),
                feats.n_dims(),
                args.out.display()
            );
            Ok(())
        }
        Cmd::Cluster(args) => {
            let m = args.input.load()?;
            let labels = read_labels(&args.labels)?;
            let stats = compute_stats(&m, &labels)?;
            eprintln!(
                "corpus: {} docs, {} terms, {} classes, balance {:.3}",
                stats.n_docs, stats.n_terms, stats.k, stats.balance
            );
            let mode = if args.discover_k { Mode::StaticNoK } else { Mode::StaticK };
            let cfg = args.pipeline.config(mode, args.reps, 12, args.seed);
            eprintln!("config {}", config_hash(&cfg));
            let report = if args.discover_k {
                run_static_nok(&cfg, &m, &labels)?
            } else {
                run_static(&cfg, &m, &labels)?
            };
            emit(&report, args.out.as_ref())
        }
        Cmd::Stream(args) => {
            let m = args.input.load()?;
            let labels = read_labels(&args.labels)?;
            let mode = if args.baseline { Mode::KnnStream } else { Mode::Streaming };
            let cfg = args.pipeline.config(mode, args.reps, args.folds, args.seed);
            eprintln!("config {}", config_hash(&cfg));
            let report = if args.baseline {
                run_knn_baseline(&cfg, &m, &labels)?
            } else {
                run_streaming(&cfg, &m, &labels)?
            };
            emit(&report, args.out.as_ref())
        }
        Cmd::Eval(args) => {
            let pred = read_labels(&args.pred)?;
            let truth = read_labels(&args.truth)?;
            let report = evaluation::evaluate(pred.labels(), truth.labels())?;
            emit(&report, args.out.as_ref())
        }
        Cmd::Synth(args) => {
            let (m, labels) = make_synthetic_corpus(
                args.k,
                args.docs_per_cluster,
                args.vocab_per_cluster,
                args.noise,
                args.seed,
            )?;
            let w = BufWriter::new(File::create(&args.out)?);
            write_sparse_corpus(&m, w)?;
            let w = BufWriter::new(File::create(&args.labels_out)?);
            write_labels(&labels, w)?;
            eprintln!(
                "wrote {} docs x {} terms to {} (labels: {})",
                m.n_docs(),
                m.n_terms(),
                args.out.display(),
                args.labels_out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let stage = err.stage();
            eprintln!("error[{}]: {err}", stage.name());
            ExitCode::from(u8::try_from(stage.exit_code()).unwrap_or(1))
        }
    }
}
