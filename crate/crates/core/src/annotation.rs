//! Double-annotation workflow: coders pass a training gate, receive
//! batches of posts, label every sentence, and an adjudicator resolves
//! the two coders' labels into gold.
//!
//! The store is event-sourced. Every mutation is an [`Event`] appended to a
//! JSON-lines log before it is applied, and a snapshot of the state is
//! written every few events so reopening does not replay everything.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::Error;
use crate::eval::{kappa_report, KappaReport};
use crate::schema::{LabelSet, N_TOPICS};

pub const BATCH_SIZE: usize = 50;
pub const GATE_KAPPA: f64 = 0.6;
const SNAPSHOT_EVERY: u64 = 100;

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        ManualClock(Mutex::new(start))
    }

    pub fn advance(&self, by: Duration) {
        let mut t = self.0.lock().unwrap_or_else(|e| e.into_inner());
        *t += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("coder {0} has not passed the training gate")]
    NotPassed(String),
    #[error("all posts have been assigned")]
    Exhausted,
    #[error("unknown post {0}")]
    UnknownPost(String),
    #[error("unknown sentence {0}")]
    UnknownSentence(String),
    #[error("unknown batch {0}")]
    UnknownBatch(usize),
    #[error("sentence {sentence} is not in a batch assigned to coder {coder}")]
    NotAssigned { coder: String, sentence: String },
    #[error("labels required")]
    LabelsRequired,
    #[error("label set contains labels outside the schema")]
    InvalidLabels,
    #[error("sentence {0} does not have records from both coders")]
    MissingCoderRecords(String),
    #[error("coder {coder} has annotated {done} of {total} training sentences")]
    IncompleteTraining {
        coder: String,
        done: usize,
        total: usize,
    },
    #[error(transparent)]
    Store(#[from] Error),
}

impl AnnotationError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            AnnotationError::NotPassed(_) => "gate_not_passed",
            AnnotationError::Exhausted => "exhausted",
            AnnotationError::UnknownPost(_)
            | AnnotationError::UnknownSentence(_)
            | AnnotationError::UnknownBatch(_) => "not_found",
            AnnotationError::NotAssigned { .. } => "not_assigned",
            AnnotationError::LabelsRequired => "labels_required",
            AnnotationError::InvalidLabels => "invalid_labels",
            AnnotationError::MissingCoderRecords(_) => "missing_coder_records",
            AnnotationError::IncompleteTraining { .. } => "incomplete_training",
            AnnotationError::Store(_) => "internal",
        }
    }
}

type AResult<T> = std::result::Result<T, AnnotationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchStatus {
    Open,
    Complete,
    Adjudicated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub batch_id: usize,
    pub post_ids: Vec<String>,
    /// In assignment order; at most two, always distinct.
    pub coders: Vec<String>,
    pub status: BatchStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub sentence_id: String,
    pub coder_id: String,
    pub labels: LabelSet,
    pub submitted_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjudication {
    pub sentence_id: String,
    pub labels: LabelSet,
    pub adjudicator_id: String,
    pub resolved_at: DateTime<Utc>,
}

/// Records that were replaced by a later submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Superseded {
    Annotation(AnnotationRecord),
    Training(AnnotationRecord),
    Adjudication(Adjudication),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    BatchCreated {
        batch_id: usize,
        post_ids: Vec<String>,
        at: DateTime<Utc>,
    },
    CoderAssigned {
        batch_id: usize,
        coder: String,
        at: DateTime<Utc>,
    },
    Annotated {
        coder: String,
        sentence: String,
        labels: LabelSet,
        at: DateTime<Utc>,
    },
    TrainingAnnotated {
        coder: String,
        sentence: String,
        labels: LabelSet,
        at: DateTime<Utc>,
    },
    GatePassed {
        coder: String,
        average_kappa: Option<f64>,
        at: DateTime<Utc>,
    },
    Adjudicated {
        sentence: String,
        labels: LabelSet,
        adjudicator: String,
        at: DateTime<Utc>,
    },
}

/// Everything the event log determines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreState {
    pub batches: Vec<Batch>,
    /// sentence -> coder -> live record
    pub records: BTreeMap<String, BTreeMap<String, AnnotationRecord>>,
    /// coder -> sentence -> live training record
    pub training: BTreeMap<String, BTreeMap<String, AnnotationRecord>>,
    pub adjudications: BTreeMap<String, Adjudication>,
    pub history: Vec<Superseded>,
    /// Coders who passed the gate, with the average kappa at that moment.
    pub passed: BTreeMap<String, Option<f64>>,
    pub events_applied: u64,
}

/// Gold labels for the coder training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldEntry {
    pub sentence_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub labels: LabelSet,
}

#[derive(Debug, Clone, Default)]
pub struct GoldSet {
    entries: Vec<GoldEntry>,
    index: HashMap<String, usize>,
}

impl GoldSet {
    pub fn new(entries: Vec<GoldEntry>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.sentence_id.clone(), i))
            .collect();
        GoldSet { entries, index }
    }

    pub fn from_jsonl(path: &Path) -> crate::Result<Self> {
        Ok(Self::new(crate::corpus::read_jsonl(path, "gold entry")?))
    }

    pub fn entries(&self) -> &[GoldEntry] {
        &self.entries
    }

    pub fn contains(&self, sentence_id: &str) -> bool {
        self.index.contains_key(sentence_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoderStatus {
    pub coder_id: String,
    pub passed: bool,
    pub training_kappa: Option<KappaReport>,
    pub training_done: usize,
    pub training_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub sentence_id: String,
    pub coder_id: String,
    pub replaced: bool,
    pub training: bool,
    pub batch_status: Option<BatchStatus>,
}

/// One sentence awaiting adjudication. Coders appear only as A and B, in
/// assignment order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueItem {
    pub sentence_id: String,
    pub post_id: String,
    pub batch_id: usize,
    pub text: String,
    pub coder_a: LabelSet,
    pub coder_b: LabelSet,
    pub disagreement: bool,
    /// Labels chosen by exactly one coder.
    pub delta: LabelSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchAgreement {
    pub batch_id: usize,
    pub status: BatchStatus,
    pub coders: Vec<String>,
    /// Sentences coded by both coders so far.
    pub n_sentences: usize,
    pub kappa: Option<KappaReport>,
}

struct EventLog {
    path: PathBuf,
    file: File,
}

fn snapshot_path(log: &Path) -> PathBuf {
    let mut name = log.as_os_str().to_owned();
    name.push(".snapshot");
    PathBuf::from(name)
}

pub struct AnnotationStore {
    corpus: Arc<Corpus>,
    gold: Option<GoldSet>,
    clock: Arc<dyn Clock>,
    log: Option<EventLog>,
    state: StoreState,
    post_batch: HashMap<String, usize>,
}

impl std::fmt::Debug for AnnotationStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnnotationStore")
            .field("batches", &self.state.batches.len())
            .field("events_applied", &self.state.events_applied)
            .finish_non_exhaustive()
    }
}

impl AnnotationStore {
    /// An in-memory store with no log.
    pub fn in_memory(corpus: Arc<Corpus>, gold: Option<GoldSet>, clock: Arc<dyn Clock>) -> Self {
        AnnotationStore {
            corpus,
            gold,
            clock,
            log: None,
            state: StoreState::default(),
            post_batch: HashMap::new(),
        }
    }

    /// Opens (or creates) the store logged at `log_path`, restoring state
    /// from the latest snapshot plus the events after it.
    pub fn open(
        corpus: Arc<Corpus>,
        gold: Option<GoldSet>,
        clock: Arc<dyn Clock>,
        log_path: &Path,
    ) -> crate::Result<Self> {
        let mut store = Self::in_memory(corpus, gold, clock);
        let snap = snapshot_path(log_path);
        if snap.exists() {
            let text = fs::read_to_string(&snap).map_err(|e| Error::io(&snap, e))?;
            store.state = serde_json::from_str(&text)?;
            store.reindex();
        }
        if log_path.exists() {
            let file = File::open(log_path).map_err(|e| Error::io(log_path, e))?;
            let mut seen = 0u64;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(log_path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                seen += 1;
                if seen <= store.state.events_applied {
                    continue;
                }
                let event: Event = serde_json::from_str(&line)
                    .map_err(|e| Error::format("event", i + 1, e.to_string()))?;
                store.apply(event);
            }
            if seen < store.state.events_applied {
                return Err(Error::format(
                    "event log",
                    0,
                    "snapshot is newer than the log",
                ));
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(log_path)
            .map_err(|e| Error::io(log_path, e))?;
        store.log = Some(EventLog {
            path: log_path.to_path_buf(),
            file,
        });
        Ok(store)
    }

    /// Rebuilds state by applying `events` from scratch.
    pub fn replay(corpus: Arc<Corpus>, gold: Option<GoldSet>, events: &[Event]) -> Self {
        let mut store = Self::in_memory(corpus, gold, Arc::new(SystemClock));
        for e in events {
            store.apply(e.clone());
        }
        store
    }

    /// Reads every event in a log file.
    pub fn read_log(path: &Path) -> crate::Result<Vec<Event>> {
        crate::corpus::read_jsonl(path, "event")
    }

    pub fn state(&self) -> &StoreState {
        &self.state
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn gold(&self) -> Option<&GoldSet> {
        self.gold.as_ref()
    }

    pub fn batch(&self, batch_id: usize) -> AResult<&Batch> {
        self.state
            .batches
            .get(batch_id)
            .ok_or(AnnotationError::UnknownBatch(batch_id))
    }

    /// Writes a snapshot now, regardless of the usual cadence.
    pub fn snapshot(&self) -> crate::Result<()> {
        let Some(log) = &self.log else { return Ok(()) };
        let path = snapshot_path(&log.path);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec(&self.state)?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    fn reindex(&mut self) {
        self.post_batch = self
            .state
            .batches
            .iter()
            .flat_map(|b| b.post_ids.iter().map(move |p| (p.clone(), b.batch_id)))
            .collect();
    }

    fn commit(&mut self, event: Event) -> crate::Result<()> {
        if let Some(log) = &mut self.log {
            serde_json::to_writer(&mut log.file, &event)?;
            log.file
                .write_all(b"\n")
                .map_err(|e| Error::io(&log.path, e))?;
            log.file.flush().map_err(|e| Error::io(&log.path, e))?;
        }
        self.apply(event);
        if self.state.events_applied.is_multiple_of(SNAPSHOT_EVERY) {
            self.snapshot()?;
        }
        Ok(())
    }

    fn apply(&mut self, event: Event) {
        self.state.events_applied += 1;
        match event {
            Event::BatchCreated {
                batch_id, post_ids, ..
            } => {
                for p in &post_ids {
                    self.post_batch.insert(p.clone(), batch_id);
                }
                self.state.batches.push(Batch {
                    batch_id,
                    post_ids,
                    coders: Vec::new(),
                    status: BatchStatus::Open,
                });
                self.refresh_status(batch_id);
            }
            Event::CoderAssigned {
                batch_id, coder, ..
            } => {
                self.state.batches[batch_id].coders.push(coder);
                self.refresh_status(batch_id);
            }
            Event::Annotated {
                coder,
                sentence,
                labels,
                at,
            } => {
                let record = AnnotationRecord {
                    sentence_id: sentence.clone(),
                    coder_id: coder.clone(),
                    labels,
                    submitted_at: at,
                };
                let old = self
                    .state
                    .records
                    .entry(sentence.clone())
                    .or_default()
                    .insert(coder, record);
                if let Some(old) = old {
                    self.state.history.push(Superseded::Annotation(old));
                }
                if let Some(b) = self.batch_of_sentence(&sentence) {
                    self.refresh_status(b);
                }
            }
            Event::TrainingAnnotated {
                coder,
                sentence,
                labels,
                at,
            } => {
                let record = AnnotationRecord {
                    sentence_id: sentence.clone(),
                    coder_id: coder.clone(),
                    labels,
                    submitted_at: at,
                };
                if let Some(old) = self
                    .state
                    .training
                    .entry(coder)
                    .or_default()
                    .insert(sentence, record)
                {
                    self.state.history.push(Superseded::Training(old));
                }
            }
            Event::GatePassed {
                coder,
                average_kappa,
                ..
            } => {
                self.state.passed.entry(coder).or_insert(average_kappa);
            }
            Event::Adjudicated {
                sentence,
                labels,
                adjudicator,
                at,
            } => {
                let adj = Adjudication {
                    sentence_id: sentence.clone(),
                    labels,
                    adjudicator_id: adjudicator,
                    resolved_at: at,
                };
                if let Some(old) = self.state.adjudications.insert(sentence.clone(), adj) {
                    self.state.history.push(Superseded::Adjudication(old));
                }
                if let Some(b) = self.batch_of_sentence(&sentence) {
                    self.refresh_status(b);
                }
            }
        }
    }

    fn batch_of_sentence(&self, sentence_id: &str) -> Option<usize> {
        let s = self.corpus.sentence(sentence_id)?;
        self.post_batch.get(&s.post_id).copied()
    }

    fn batch_sentences(
        &self,
        batch_id: usize,
    ) -> impl Iterator<Item = &crate::corpus::Sentence> + '_ {
        self.state.batches[batch_id]
            .post_ids
            .iter()
            .flat_map(|p| self.corpus.sentences_of(p))
    }

    fn refresh_status(&mut self, batch_id: usize) {
        let batch = &self.state.batches[batch_id];
        if batch.status == BatchStatus::Open && batch.coders.len() == 2 {
            let covered = self.batch_sentences(batch_id).all(|s| {
                self.state
                    .records
                    .get(&s.sentence_id)
                    .is_some_and(|r| batch.coders.iter().all(|c| r.contains_key(c)))
            });
            if covered {
                self.state.batches[batch_id].status = BatchStatus::Complete;
            }
        }
        if self.state.batches[batch_id].status == BatchStatus::Complete {
            let resolved = self
                .batch_sentences(batch_id)
                .all(|s| self.state.adjudications.contains_key(&s.sentence_id));
            if resolved {
                self.state.batches[batch_id].status = BatchStatus::Adjudicated;
            }
        }
    }

    fn is_passed(&self, coder: &str) -> bool {
        self.gold.is_none() || self.state.passed.contains_key(coder)
    }

    fn training_progress(&self, coder: &str) -> (usize, usize) {
        let Some(gold) = &self.gold else {
            return (0, 0);
        };
        let done = self.state.training.get(coder).map_or(0, |t| {
            gold.entries()
                .iter()
                .filter(|e| t.contains_key(&e.sentence_id))
                .count()
        });
        (done, gold.len())
    }

    /// Scores the coder's training annotations against gold. A coder
    /// passes once the average kappa reaches the gate and stays passed.
    /// Without a gold set the gate is open.
    pub fn training_gate(&mut self, coder: &str) -> AResult<CoderStatus> {
        let Some(gold) = &self.gold else {
            return Ok(CoderStatus {
                coder_id: coder.to_string(),
                passed: true,
                training_kappa: None,
                training_done: 0,
                training_total: 0,
            });
        };
        let (done, total) = self.training_progress(coder);
        if done < total || total == 0 {
            return Err(AnnotationError::IncompleteTraining {
                coder: coder.to_string(),
                done,
                total,
            });
        }
        let mine = &self.state.training[coder];
        let (a, b): (Vec<LabelSet>, Vec<LabelSet>) = gold
            .entries()
            .iter()
            .map(|e| (mine[&e.sentence_id].labels, e.labels))
            .unzip();
        let report = kappa_report(&a, &b)?;
        let already = self.state.passed.contains_key(coder);
        if !already && report.average >= GATE_KAPPA {
            let at = self.clock.now();
            self.commit(Event::GatePassed {
                coder: coder.to_string(),
                average_kappa: Some(report.average),
                at,
            })?;
        }
        Ok(CoderStatus {
            coder_id: coder.to_string(),
            passed: self.state.passed.contains_key(coder),
            training_kappa: Some(report),
            training_done: done,
            training_total: total,
        })
    }

    /// Status without failing on incomplete training.
    pub fn coder_status(&mut self, coder: &str) -> AResult<CoderStatus> {
        match self.training_gate(coder) {
            Err(AnnotationError::IncompleteTraining { done, total, .. }) => Ok(CoderStatus {
                coder_id: coder.to_string(),
                passed: self.is_passed(coder),
                training_kappa: None,
                training_done: done,
                training_total: total,
            }),
            other => other,
        }
    }

    /// The oldest batch that still needs a coder and does not already
    /// have this one; a fresh batch of the next unassigned posts otherwise.
    pub fn assign_batch(&mut self, coder: &str) -> AResult<Batch> {
        if !self.is_passed(coder) {
            let passed = self.training_gate(coder).map(|s| s.passed).unwrap_or(false);
            if !passed {
                return Err(AnnotationError::NotPassed(coder.to_string()));
            }
        }
        let existing = self
            .state
            .batches
            .iter()
            .find(|b| b.coders.len() < 2 && !b.coders.iter().any(|c| c == coder))
            .map(|b| b.batch_id);
        let batch_id = match existing {
            Some(id) => id,
            None => {
                let used: usize = self.state.batches.iter().map(|b| b.post_ids.len()).sum();
                let posts = self.corpus.posts();
                if used >= posts.len() {
                    return Err(AnnotationError::Exhausted);
                }
                let end = (used + BATCH_SIZE).min(posts.len());
                let batch_id = self.state.batches.len();
                let at = self.clock.now();
                self.commit(Event::BatchCreated {
                    batch_id,
                    post_ids: posts[used..end].iter().map(|p| p.post_id.clone()).collect(),
                    at,
                })?;
                batch_id
            }
        };
        let at = self.clock.now();
        self.commit(Event::CoderAssigned {
            batch_id,
            coder: coder.to_string(),
            at,
        })?;
        Ok(self.state.batches[batch_id].clone())
    }

    fn check_labels(labels: LabelSet) -> AResult<()> {
        if labels.is_empty() {
            return Err(AnnotationError::LabelsRequired);
        }
        if labels.iter().any(|k| k >= N_TOPICS) {
            return Err(AnnotationError::InvalidLabels);
        }
        Ok(())
    }

    /// Records (or replaces) a coder's labels for a sentence. Sentences of
    /// the gold training set count toward the coder's training.
    pub fn submit_annotation(
        &mut self,
        coder: &str,
        sentence: &str,
        labels: LabelSet,
    ) -> AResult<Ack> {
        Self::check_labels(labels)?;
        let at = self.clock.now();
        if self.gold.as_ref().is_some_and(|g| g.contains(sentence)) {
            let replaced = self
                .state
                .training
                .get(coder)
                .is_some_and(|t| t.contains_key(sentence));
            self.commit(Event::TrainingAnnotated {
                coder: coder.to_string(),
                sentence: sentence.to_string(),
                labels,
                at,
            })?;
            return Ok(Ack {
                sentence_id: sentence.to_string(),
                coder_id: coder.to_string(),
                replaced,
                training: true,
                batch_status: None,
            });
        }
        if self.corpus.sentence(sentence).is_none() {
            return Err(AnnotationError::UnknownSentence(sentence.to_string()));
        }
        let batch_id = self
            .batch_of_sentence(sentence)
            .filter(|&b| self.state.batches[b].coders.iter().any(|c| c == coder))
            .ok_or_else(|| AnnotationError::NotAssigned {
                coder: coder.to_string(),
                sentence: sentence.to_string(),
            })?;
        let replaced = self
            .state
            .records
            .get(sentence)
            .is_some_and(|r| r.contains_key(coder));
        self.commit(Event::Annotated {
            coder: coder.to_string(),
            sentence: sentence.to_string(),
            labels,
            at,
        })?;
        Ok(Ack {
            sentence_id: sentence.to_string(),
            coder_id: coder.to_string(),
            replaced,
            training: false,
            batch_status: Some(self.state.batches[batch_id].status),
        })
    }

    /// The two coders' live labels for a sentence, in assignment order.
    fn coder_pair(&self, sentence: &str) -> Option<(usize, LabelSet, LabelSet)> {
        let b = self.batch_of_sentence(sentence)?;
        let batch = &self.state.batches[b];
        if batch.coders.len() < 2 {
            return None;
        }
        let records = self.state.records.get(sentence)?;
        let a = records.get(&batch.coders[0])?.labels;
        let c = records.get(&batch.coders[1])?.labels;
        Some((b, a, c))
    }

    /// Unresolved sentences of completed batches, disagreements first.
    pub fn adjudication_queue(&self) -> Vec<QueueItem> {
        let mut items = Vec::new();
        for batch in self
            .state
            .batches
            .iter()
            .filter(|b| b.status == BatchStatus::Complete)
        {
            for s in self.batch_sentences(batch.batch_id) {
                if self.state.adjudications.contains_key(&s.sentence_id) {
                    continue;
                }
                if let Some((_, a, b)) = self.coder_pair(&s.sentence_id) {
                    let delta = a.difference(b).union(b.difference(a));
                    items.push(QueueItem {
                        sentence_id: s.sentence_id.clone(),
                        post_id: s.post_id.clone(),
                        batch_id: batch.batch_id,
                        text: s.text.clone(),
                        coder_a: a,
                        coder_b: b,
                        disagreement: a != b,
                        delta,
                    });
                }
            }
        }
        items.sort_by_key(|i| !i.disagreement);
        items
    }

    /// Records (or replaces) the final labels for a sentence.
    pub fn adjudicate(
        &mut self,
        sentence: &str,
        labels: LabelSet,
        adjudicator: &str,
    ) -> AResult<Adjudication> {
        Self::check_labels(labels)?;
        if self.corpus.sentence(sentence).is_none() {
            return Err(AnnotationError::UnknownSentence(sentence.to_string()));
        }
        if self.coder_pair(sentence).is_none() {
            return Err(AnnotationError::MissingCoderRecords(sentence.to_string()));
        }
        let at = self.clock.now();
        self.commit(Event::Adjudicated {
            sentence: sentence.to_string(),
            labels,
            adjudicator: adjudicator.to_string(),
            at,
        })?;
        Ok(self.state.adjudications[sentence].clone())
    }

    /// Live per-label kappa between a batch's two coders over the
    /// sentences both have coded.
    pub fn agreement(&self, batch_id: usize) -> AResult<BatchAgreement> {
        let batch = self.batch(batch_id)?;
        let (a, b): (Vec<LabelSet>, Vec<LabelSet>) = self
            .batch_sentences(batch_id)
            .filter_map(|s| self.coder_pair(&s.sentence_id).map(|(_, x, y)| (x, y)))
            .unzip();
        let kappa = if a.is_empty() {
            None
        } else {
            Some(kappa_report(&a, &b)?)
        };
        Ok(BatchAgreement {
            batch_id,
            status: batch.status,
            coders: batch.coders.clone(),
            n_sentences: a.len(),
            kappa,
        })
    }

    /// Kappa per coder pair, pooled over every batch the pair shares.
    pub fn pairwise_agreement(&self) -> AResult<Vec<(String, KappaReport)>> {
        let mut pairs: BTreeMap<(String, String), (Vec<LabelSet>, Vec<LabelSet>)> = BTreeMap::new();
        for batch in self.state.batches.iter().filter(|b| b.coders.len() == 2) {
            let (mut c0, mut c1) = (batch.coders[0].clone(), batch.coders[1].clone());
            let swap = c0 > c1;
            if swap {
                std::mem::swap(&mut c0, &mut c1);
            }
            let entry = pairs.entry((c0, c1)).or_default();
            for s in self.batch_sentences(batch.batch_id) {
                if let Some((_, x, y)) = self.coder_pair(&s.sentence_id) {
                    let (x, y) = if swap { (y, x) } else { (x, y) };
                    entry.0.push(x);
                    entry.1.push(y);
                }
            }
        }
        let mut out = Vec::new();
        for ((c0, c1), (a, b)) in pairs {
            if !a.is_empty() {
                out.push((format!("{c0} vs {c1}"), kappa_report(&a, &b)?));
            }
        }
        Ok(out)
    }
}

/// Reads two per-coder annotation files (JSON lines of
/// [`AnnotationRecord`]) and computes kappa over the sentences both cover.
pub fn agreement_from_files(a: &Path, b: &Path) -> crate::Result<KappaReport> {
    let ra: Vec<AnnotationRecord> = crate::corpus::read_jsonl(a, "annotation record")?;
    let rb: Vec<AnnotationRecord> = crate::corpus::read_jsonl(b, "annotation record")?;
    let map_b: HashMap<&str, LabelSet> = rb
        .iter()
        .map(|r| (r.sentence_id.as_str(), r.labels))
        .collect();
    let mut seen = std::collections::HashSet::new();
    let (xa, xb): (Vec<LabelSet>, Vec<LabelSet>) = ra
        .iter()
        .rev()
        .filter(|r| seen.insert(r.sentence_id.as_str()))
        .filter_map(|r| map_b.get(r.sentence_id.as_str()).map(|l| (r.labels, *l)))
        .unzip();
    kappa_report(&xa, &xb)
}
