//! End-to-end orchestration: every stage reads the previous stage's
//! artifacts from the work directory and writes its own.
//!
//! Text artifacts start with a `# config: <hash>` line naming the
//! configuration that produced them; directories of JSON-lines artifacts
//! carry a `manifest.json` with the same hash. The hash covers every
//! setting except paths, so moving a run does not change it.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{self, PostLabels, TimeUnit};
use crate::annotation::GoldEntry;
use crate::cnn::CnnConfig;
use crate::corpus::{self, Corpus, IngestStats};
use crate::embed::{train_embeddings, EmbedConfig, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::{format_report_csv, format_report_table, run_cv, AnnotatedSentence, EvalReport};
use crate::linear::LinearConfig;
use crate::llda::LldaConfig;
use crate::schema::{LabelSet, N_TOPICS};
use crate::systems::{SystemContext, SystemKind, SystemsConfig, TrainedSystem};
use crate::textprep::{build_vocab, preprocess_sentence, Vocabulary, DEFAULT_MIN_COUNT};

const HASH_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Raw posts, one JSON object per line.
    pub input: Option<PathBuf>,
    /// Sentence gold labels, one JSON object per line.
    pub annotations: Option<PathBuf>,
    pub work: PathBuf,
    /// Defaults to `<work>/models`.
    pub models: Option<PathBuf>,
    pub reports: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            input: None,
            annotations: None,
            work: PathBuf::from("work"),
            models: None,
            reports: PathBuf::from("reports"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    pub folds: usize,
    pub seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings { folds: 5, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessSettings {
    pub min_count: usize,
}

impl Default for PreprocessSettings {
    fn default() -> Self {
        PreprocessSettings {
            min_count: DEFAULT_MIN_COUNT,
        }
    }
}

/// One JSON file with a section per module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    /// Classifier used by `train` and `label` when none is named.
    pub classifier: SystemKind,
    pub preprocess: PreprocessSettings,
    pub embed: EmbedConfig,
    pub llda: LldaConfig,
    pub linear: LinearConfig,
    pub cnn: CnnConfig,
    pub eval: EvalSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: Paths::default(),
            classifier: SystemKind::Cnn,
            preprocess: PreprocessSettings::default(),
            embed: EmbedConfig::default(),
            llda: LldaConfig::default(),
            linear: LinearConfig::default(),
            cnn: CnnConfig::default(),
            eval: EvalSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn models_dir(&self) -> PathBuf {
        self.paths
            .models
            .clone()
            .unwrap_or_else(|| self.paths.work.join("models"))
    }

    pub fn validate(&self) -> Result<()> {
        let dirs = [&self.paths.work, &self.models_dir(), &self.paths.reports];
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                if dirs[i] == dirs[j] {
                    return Err(Error::Config(format!(
                        "paths must be distinct: {} is used twice",
                        dirs[i].display()
                    )));
                }
            }
        }
        if self.preprocess.min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        if self.eval.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        self.embed.validate()?;
        self.llda.validate()?;
        self.cnn.validate()
    }

    /// SHA-256 of every setting except paths.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).unwrap_or_default();
        if let Some(map) = value.as_object_mut() {
            map.remove("paths");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn systems(&self) -> SystemsConfig {
        SystemsConfig {
            n_labels: N_TOPICS,
            llda: self.llda.clone(),
            linear: self.linear.clone(),
            cnn: CnnConfig {
                dim: self.embed.dim,
                ..self.cnn.clone()
            },
        }
    }
}

/// Strips the `# config:` header written by [`Pipeline::write_text`].
pub fn strip_header(text: &str) -> &str {
    match text.strip_prefix(HASH_PREFIX) {
        Some(rest) => rest.split_once('\n').map_or("", |(_, body)| body),
        None => text,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    config_hash: String,
    files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceLabels {
    pub sentence_id: String,
    pub labels: LabelSet,
}

/// What a stage wrote, for the caller to report.
#[derive(Debug, Clone, Default)]
pub struct StageOutput {
    pub files: Vec<PathBuf>,
    pub messages: Vec<String>,
}

impl StageOutput {
    fn file(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.messages.push(msg.into());
    }
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    hash: String,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let hash = config.hash();
        Ok(Pipeline { config, hash })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    fn work(&self, name: &str) -> PathBuf {
        self.config.paths.work.join(name)
    }

    pub fn model_path(&self, kind: SystemKind) -> PathBuf {
        self.config
            .models_dir()
            .join(format!("{}.model", kind.name()))
    }

    fn ensure_dir(dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
    }

    fn write_text(&self, path: &Path, body: &str) -> Result<()> {
        if let Some(parent) = path.parent() {
            Self::ensure_dir(parent)?;
        }
        let text = format!("{HASH_PREFIX}{}\n{body}", self.hash);
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    fn read_text(path: &Path, missing: &str) -> Result<String> {
        match fs::read_to_string(path) {
            Ok(t) => Ok(strip_header(&t).to_string()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(Error::Config(format!("{missing} ({})", path.display())))
            }
            Err(e) => Err(Error::io(path, e)),
        }
    }

    fn write_manifest(&self, dir: &Path, names: &[&str]) -> Result<()> {
        let mut files = BTreeMap::new();
        for name in names {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let digest = Sha256::digest(&bytes);
            files.insert(
                name.to_string(),
                digest.iter().map(|b| format!("{b:02x}")).collect(),
            );
        }
        let manifest = Manifest {
            config_hash: self.hash.clone(),
            files,
        };
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Reads raw posts into `<work>/ingested`.
    pub fn ingest(&self) -> Result<(StageOutput, IngestStats)> {
        let input = self
            .config
            .paths
            .input
            .as_ref()
            .ok_or_else(|| Error::Config("no input corpus configured".into()))?;
        let (corpus, stats) = corpus::ingest_file(input)?;
        let dir = self.work("ingested");
        corpus.write_archive(&dir)?;
        self.write_manifest(&dir, &["posts.jsonl", "sentences.jsonl", "authors.jsonl"])?;
        let mut out = StageOutput::default();
        out.file(dir);
        out.note(format!(
            "ingested {} posts, {} sentences, {} authors ({} malformed, {} duplicate records skipped)",
            stats.records,
            corpus.sentences().len(),
            corpus.authors().len(),
            stats.malformed,
            stats.duplicates
        ));
        Ok((out, stats))
    }

    fn read_ingested(&self) -> Result<Corpus> {
        let dir = self.work("ingested");
        if !dir.join("posts.jsonl").exists() {
            return Err(Error::Config(format!(
                "ingested corpus not found; run ingest first ({})",
                dir.display()
            )));
        }
        Corpus::read_archive(&dir)
    }

    /// Tokenizes every sentence into `<work>/corpus` and builds the
    /// vocabulary.
    pub fn preprocess(&self) -> Result<StageOutput> {
        let corpus = self.read_ingested()?;
        let tokens: Vec<Vec<String>> = corpus
            .sentences()
            .iter()
            .map(|s| preprocess_sentence(s).tokens)
            .collect();
        let vocab = build_vocab(
            tokens.iter().map(Vec::as_slice),
            self.config.preprocess.min_count,
        )?;
        let corpus = corpus.with_tokens(tokens)?;
        let dir = self.work("corpus");
        corpus.write_archive(&dir)?;
        self.write_manifest(&dir, &["posts.jsonl", "sentences.jsonl", "authors.jsonl"])?;
        let vocab_path = self.work("vocab.tsv");
        self.write_text(&vocab_path, &vocab.to_tsv())?;
        let mut out = StageOutput::default();
        out.file(dir);
        out.file(vocab_path);
        out.note(format!("vocabulary: {} types", vocab.len()));
        Ok(out)
    }

    pub fn read_corpus(&self) -> Result<Corpus> {
        let dir = self.work("corpus");
        if !dir.join("sentences.jsonl").exists() {
            return Err(Error::Config(format!(
                "preprocessed corpus not found; run preprocess first ({})",
                dir.display()
            )));
        }
        Corpus::read_archive(&dir)
    }

    pub fn read_vocab(&self) -> Result<Vocabulary> {
        let text = Self::read_text(
            &self.work("vocab.tsv"),
            "vocabulary not found; run preprocess first",
        )?;
        Vocabulary::from_tsv(&text)
    }

    fn sentence_tokens(corpus: &Corpus) -> Vec<Vec<String>> {
        corpus
            .sentences()
            .iter()
            .map(|s| s.tokens.clone().unwrap_or_default())
            .collect()
    }

    pub fn embed(&self) -> Result<StageOutput> {
        let corpus = self.read_corpus()?;
        let vocab = self.read_vocab()?;
        let table = train_embeddings(&Self::sentence_tokens(&corpus), &vocab, &self.config.embed)?;
        let path = self.work("embeddings.txt");
        self.write_text(&path, &table.to_text())?;
        let mut out = StageOutput::default();
        out.file(path);
        out.note(format!(
            "trained {} vectors of dimension {}",
            table.len(),
            table.dim()
        ));
        Ok(out)
    }

    pub fn read_embeddings(&self) -> Result<EmbeddingTable> {
        let text = Self::read_text(
            &self.work("embeddings.txt"),
            "embeddings not found; run embed first",
        )?;
        EmbeddingTable::from_text(&text)
    }

    fn context(&self, kind: Option<SystemKind>) -> Result<SystemContext> {
        let embeddings = match kind {
            Some(k) if !k.needs_embeddings() => None,
            _ => Some(self.read_embeddings()?),
        };
        Ok(SystemContext {
            vocab: self.read_vocab()?,
            embeddings,
        })
    }

    /// Gold sentences joined with their preprocessed tokens, in corpus
    /// order.
    pub fn annotated(&self, corpus: &Corpus) -> Result<Vec<AnnotatedSentence>> {
        let path = self
            .config
            .paths
            .annotations
            .as_ref()
            .ok_or_else(|| Error::Config("no annotations configured".into()))?;
        let gold: Vec<GoldEntry> = corpus::read_jsonl(path, "annotation")?;
        let labels: HashMap<&str, LabelSet> = gold
            .iter()
            .map(|g| (g.sentence_id.as_str(), g.labels))
            .collect();
        let data: Vec<AnnotatedSentence> = corpus
            .sentences()
            .iter()
            .filter_map(|s| {
                labels
                    .get(s.sentence_id.as_str())
                    .map(|l| AnnotatedSentence {
                        sentence_id: s.sentence_id.clone(),
                        post_id: s.post_id.clone(),
                        tokens: s.tokens.clone().unwrap_or_default(),
                        labels: *l,
                    })
            })
            .collect();
        if let Some(i) = data.iter().position(|s| s.labels.is_empty()) {
            return Err(Error::UnlabeledInstance(i));
        }
        if data.is_empty() {
            return Err(Error::InsufficientData(
                "no annotated sentence matches the corpus".into(),
            ));
        }
        Ok(data)
    }

    pub fn train(&self, kind: SystemKind) -> Result<StageOutput> {
        let corpus = self.read_corpus()?;
        let data = self.annotated(&corpus)?;
        let context = self.context(Some(kind))?;
        let refs: Vec<&AnnotatedSentence> = data.iter().collect();
        let system = TrainedSystem::train(kind, &self.config.systems(), &context, &refs)?;
        let path = self.model_path(kind);
        self.write_text(&path, &system.to_text())?;
        let mut out = StageOutput::default();
        out.file(path);
        out.note(format!("trained {kind} on {} sentences", data.len()));
        Ok(out)
    }

    pub fn load_model(&self, kind: SystemKind) -> Result<TrainedSystem> {
        let path = self.model_path(kind);
        if !path.exists() {
            return Err(Error::Config(format!(
                "model not found: {} (run train first)",
                path.display()
            )));
        }
        let text = Self::read_text(&path, "model not found")?;
        let context = self.context(Some(kind))?;
        TrainedSystem::from_text(&text, &self.config.systems(), &context)
    }

    /// Cross-validates each system and writes `<name>.txt` and
    /// `<name>.csv` reports.
    pub fn evaluate(
        &self,
        kinds: &[SystemKind],
        name: &str,
    ) -> Result<(StageOutput, Vec<EvalReport>)> {
        let corpus = self.read_corpus()?;
        let data = self.annotated(&corpus)?;
        let needs_embeddings = kinds.iter().any(|k| k.needs_embeddings());
        let context = self.context(if needs_embeddings {
            None
        } else {
            Some(SystemKind::Baseline)
        })?;
        let systems = self.config.systems();
        let mut reports = Vec::new();
        for &kind in kinds {
            let outcome = run_cv(
                kind,
                &systems,
                &context,
                &data,
                self.config.eval.folds,
                self.config.eval.seed,
            )?;
            reports.push(outcome.report);
        }
        let mut out = StageOutput::default();
        let txt = self.config.paths.reports.join(format!("{name}.txt"));
        let csv = self.config.paths.reports.join(format!("{name}.csv"));
        self.write_text(&txt, &format_report_table(&reports))?;
        self.write_text(&csv, &format_report_csv(&reports))?;
        out.file(txt);
        out.file(csv);
        for r in &reports {
            out.note(format!("{}: micro F {:.1}", r.system, r.micro.f1 * 100.0));
        }
        Ok((out, reports))
    }

    /// Labels every corpus sentence with a trained model and aggregates
    /// the labels per post.
    pub fn label(&self, kind: SystemKind) -> Result<StageOutput> {
        let system = self.load_model(kind)?;
        let corpus = self.read_corpus()?;
        let mut sentence_labels = Vec::with_capacity(corpus.sentences().len());
        for s in corpus.sentences() {
            let labels = system.predict(s.tokens.as_deref().unwrap_or_default())?;
            sentence_labels.push(SentenceLabels {
                sentence_id: s.sentence_id.clone(),
                labels,
            });
        }
        let map: HashMap<String, LabelSet> = sentence_labels
            .iter()
            .map(|s| (s.sentence_id.clone(), s.labels))
            .collect();
        let posts = analytics::aggregate_corpus(&corpus, &map)?;
        let dir = self.work("labels");
        Self::ensure_dir(&dir)?;
        corpus::write_jsonl(&dir.join("sentence_labels.jsonl"), &sentence_labels)?;
        corpus::write_jsonl(&dir.join("post_labels.jsonl"), &posts)?;
        self.write_manifest(&dir, &["sentence_labels.jsonl", "post_labels.jsonl"])?;
        let mut out = StageOutput::default();
        out.file(dir);
        out.note(format!(
            "labeled {} sentences and {} posts with {kind}",
            sentence_labels.len(),
            posts.len()
        ));
        Ok(out)
    }

    pub fn read_post_labels(&self) -> Result<Vec<PostLabels>> {
        let path = self.work("labels").join("post_labels.jsonl");
        if !path.exists() {
            return Err(Error::Config(format!(
                "post labels not found; run label first ({})",
                path.display()
            )));
        }
        corpus::read_jsonl(&path, "post labels")
    }

    pub fn analyze(&self, by: Analysis) -> Result<StageOutput> {
        let corpus = self.read_corpus()?;
        let posts = self.read_post_labels()?;
        let reports = &self.config.paths.reports;
        let mut out = StageOutput::default();
        match by {
            Analysis::Prevalence => {
                let p = analytics::prevalence(&posts);
                let csv = reports.join("prevalence.csv");
                let txt = reports.join("prevalence.txt");
                self.write_text(&csv, &p.to_csv())?;
                self.write_text(&txt, &p.to_table())?;
                out.file(csv);
                out.file(txt);
            }
            Analysis::Stage => {
                let table = analytics::stratify_by_stage(&corpus, &posts);
                let csv = reports.join("stage.csv");
                self.write_text(&csv, &table.to_csv())?;
                out.file(csv);
                out.messages
                    .extend(table.warnings.iter().map(|w| format!("warning: {w}")));
            }
            Analysis::Trajectory(unit) => {
                let series = analytics::trajectory(&corpus, &posts, unit);
                let long = reports.join(format!("trajectory_{}.csv", unit.name()));
                let wide = reports.join(format!("trajectory_{}_wide.csv", unit.name()));
                self.write_text(&long, &series.to_csv())?;
                self.write_text(&wide, &series.to_wide_csv())?;
                out.file(long);
                out.file(wide);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Prevalence,
    Stage,
    Trajectory(TimeUnit),
}

impl std::str::FromStr for Analysis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prevalence" => Ok(Analysis::Prevalence),
            "stage" => Ok(Analysis::Stage),
            other => other.parse().map(Analysis::Trajectory),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_paths_but_not_settings() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.paths.work = PathBuf::from("/elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.cnn.epochs += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn config_sections_are_optional() {
        let cfg =
            PipelineConfig::from_json(r#"{"cnn": {"epochs": 3}, "classifier": "linear-emb"}"#)
                .unwrap();
        assert_eq!(cfg.cnn.epochs, 3);
        assert_eq!(cfg.cnn.filters, 800);
        assert_eq!(cfg.classifier, SystemKind::LinearEmb);
        assert!(PipelineConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn distinct_paths_required() {
        let mut cfg = PipelineConfig::default();
        cfg.paths.reports = cfg.paths.work.clone();
        assert!(Pipeline::new(cfg).is_err());
    }

    #[test]
    fn header_round_trip() {
        assert_eq!(strip_header("# config: abc\nbody\n"), "body\n");
        assert_eq!(strip_header("body\n"), "body\n");
    }
}
