//! Argument parsing and subcommand dispatch.

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ohc_topics::annotation::{agreement_from_files, AnnotationStore, GoldSet, SystemClock};
use ohc_topics::corpus::{ingest_file, Corpus};
use ohc_topics::eval::format_kappa_table;
use ohc_topics::pipeline::{Analysis, Pipeline, PipelineConfig, StageOutput};
use ohc_topics::systems::SystemKind;

#[derive(Debug, Parser)]
#[command(
    name = "ohc-topics",
    version,
    about = "Topic classification and cohort analytics for health-forum posts"
)]
pub struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true, env = "OHC_TOPICS_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub paths: PathOverrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override the `paths` section of the configuration.
#[derive(Debug, Args, Default)]
pub struct PathOverrides {
    /// Raw posts, one JSON object per line.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Gold sentence labels, one JSON object per line.
    #[arg(long, global = true)]
    pub annotations: Option<PathBuf>,
    /// Directory for intermediate artifacts.
    #[arg(long, global = true)]
    pub work: Option<PathBuf>,
    /// Directory for trained models (default: <work>/models).
    #[arg(long, global = true)]
    pub models: Option<PathBuf>,
    /// Directory for report tables.
    #[arg(long, global = true)]
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read raw posts and segment them into sentences.
    Ingest,
    /// Tokenize, mask, stem and build the vocabulary.
    Preprocess,
    /// Train skip-gram word embeddings on the preprocessed corpus.
    Embed,
    /// Train one classifier on all annotated sentences.
    Train {
        /// llda, linear (bag of words), linear-emb or cnn.
        #[arg(long)]
        model: Option<SystemKind>,
    },
    /// Cross-validate classifiers and write a report table.
    Eval {
        /// Systems to evaluate; all five when omitted.
        #[arg(long, value_delimiter = ',')]
        model: Vec<SystemKind>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Report file stem inside the reports directory.
        #[arg(long)]
        name: Option<String>,
    },
    /// Label every corpus sentence and aggregate labels per post.
    Label {
        #[arg(long)]
        model: Option<SystemKind>,
    },
    /// Prevalence, stage or trajectory tables from the post labels.
    Analyze {
        /// prevalence, stage, post, day, week, or all.
        #[arg(long = "by", default_value = "all")]
        by: String,
    },
    /// Inter-coder kappa table.
    Agreement(AgreementArgs),
    /// Run the annotation HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// Annotation service event log; reports every coder pair.
    #[arg(long, conflicts_with = "pair", required_unless_present = "pair")]
    pub log: Option<PathBuf>,
    /// Two per-coder annotation record files.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub pair: Option<Vec<PathBuf>>,
    /// Corpus for the event log: a posts JSONL file or a corpus archive
    /// directory. Defaults to the pipeline's preprocessed corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Append-only event log.
    #[arg(long, default_value = "annotations.log")]
    pub log: PathBuf,
    /// Posts JSONL file or corpus archive directory. Defaults to the
    /// pipeline's preprocessed corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Gold training set for the coder gate (JSON lines).
    #[arg(long)]
    pub gold: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    let p = &cli.paths;
    if let Some(v) = &p.input {
        config.paths.input = Some(v.clone());
    }
    if let Some(v) = &p.annotations {
        config.paths.annotations = Some(v.clone());
    }
    if let Some(v) = &p.work {
        config.paths.work = v.clone();
    }
    if let Some(v) = &p.models {
        config.paths.models = Some(v.clone());
    }
    if let Some(v) = &p.reports {
        config.paths.reports = v.clone();
    }
    Ok(config)
}

fn report(stage: &str, out: &StageOutput) {
    for m in &out.messages {
        println!("{stage}: {m}");
    }
    for f in &out.files {
        println!("{stage}: wrote {}", f.display());
    }
}

fn load_corpus(path: Option<&Path>, pipeline: &Pipeline) -> Result<Corpus> {
    match path {
        Some(p) if p.is_dir() => Corpus::read_archive(p)
            .with_context(|| format!("reading corpus archive {}", p.display())),
        Some(p) => Ok(ingest_file(p)
            .with_context(|| format!("ingesting {}", p.display()))?
            .0),
        None => Ok(pipeline.read_corpus()?),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli)?;
    if let Command::Eval { folds, seed, .. } = &cli.command {
        if let Some(k) = folds {
            config.eval.folds = *k;
        }
        if let Some(s) = seed {
            config.eval.seed = *s;
        }
    }
    let pipeline = Pipeline::new(config).context("invalid configuration")?;
    match cli.command {
        Command::Ingest => {
            let (out, _) = pipeline.ingest().context("ingest")?;
            report("ingest", &out);
        }
        Command::Preprocess => report("preprocess", &pipeline.preprocess().context("preprocess")?),
        Command::Embed => report("embed", &pipeline.embed().context("embed")?),
        Command::Train { model } => {
            // the chosen system is recorded in the model file name, so it
            // does not alter the config hash
            let kind = model.unwrap_or(pipeline.config().classifier);
            if kind == SystemKind::Baseline {
                bail!("the baseline has no parameters to train");
            }
            report("train", &pipeline.train(kind).context("train")?);
        }
        Command::Eval { model, name, .. } => {
            let kinds = if model.is_empty() {
                SystemKind::ALL.to_vec()
            } else {
                model
            };
            let name = name.unwrap_or_else(|| match kinds.as_slice() {
                [one] => format!("eval_{}", one.name()),
                _ => "eval".into(),
            });
            let (out, _) = pipeline.evaluate(&kinds, &name).context("eval")?;
            report("eval", &out);
        }
        Command::Label { model } => {
            let kind = model.unwrap_or(pipeline.config().classifier);
            report("label", &pipeline.label(kind).context("label")?);
        }
        Command::Analyze { by } => {
            let analyses: Vec<Analysis> = if by == "all" {
                vec![
                    Analysis::Prevalence,
                    Analysis::Stage,
                    "post".parse()?,
                    "day".parse()?,
                    "week".parse()?,
                ]
            } else {
                vec![by
                    .parse()
                    .with_context(|| format!("unknown analysis {by:?}"))?]
            };
            for a in analyses {
                report("analyze", &pipeline.analyze(a).context("analyze")?);
            }
        }
        Command::Agreement(args) => {
            let columns = if let Some(pair) = &args.pair {
                let kappa = agreement_from_files(&pair[0], &pair[1])?;
                let name = format!(
                    "{} vs {}",
                    pair[0].file_stem().unwrap_or_default().to_string_lossy(),
                    pair[1].file_stem().unwrap_or_default().to_string_lossy()
                );
                vec![(name, kappa)]
            } else {
                let log = args.log.as_ref().expect("clap enforces --log or --pair");
                let corpus = load_corpus(args.corpus.as_deref(), &pipeline)?;
                let events = AnnotationStore::read_log(log)
                    .with_context(|| format!("reading {}", log.display()))?;
                let store = AnnotationStore::replay(Arc::new(corpus), None, &events);
                store.pairwise_agreement()?
            };
            if columns.is_empty() {
                bail!("no sentences coded by two coders");
            }
            print!("{}", format_kappa_table(&columns));
        }
        Command::Serve(args) => {
            let corpus = load_corpus(args.corpus.as_deref(), &pipeline)?;
            let gold = args
                .gold
                .as_deref()
                .map(GoldSet::from_jsonl)
                .transpose()
                .context("reading gold set")?;
            let store =
                AnnotationStore::open(Arc::new(corpus), gold, Arc::new(SystemClock), &args.log)
                    .with_context(|| format!("opening event log {}", args.log.display()))?;
            let addr = SocketAddr::new(args.host, args.port);
            tokio::runtime::Runtime::new()?.block_on(crate::server::serve(store, addr))?;
        }
    }
    Ok(())
}
