//! Uniform train/predict interface over every classifier, used by
//! cross-validation and the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cnn::{predict_cnn, train_cnn, CnnConfig, CnnModel};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::AnnotatedSentence;
use crate::linear::{
    featurize_bow, featurize_emb, predict_linear, train_ovr, FeatureMode, LinearConfig, LinearModel,
};
use crate::llda::{LabeledDoc, LldaClassifier, LldaConfig};
use crate::schema::{LabelSet, N_TOPICS};
use crate::textprep::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Baseline,
    Llda,
    LinearBow,
    LinearEmb,
    Cnn,
}

impl SystemKind {
    pub const ALL: [SystemKind; 5] = [
        SystemKind::Baseline,
        SystemKind::Llda,
        SystemKind::LinearBow,
        SystemKind::LinearEmb,
        SystemKind::Cnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Baseline => "baseline",
            SystemKind::Llda => "llda",
            SystemKind::LinearBow => "linear-bow",
            SystemKind::LinearEmb => "linear-emb",
            SystemKind::Cnn => "cnn",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(self, SystemKind::LinearEmb | SystemKind::Cnn)
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(SystemKind::Baseline),
            "llda" | "l-lda" => Ok(SystemKind::Llda),
            "linear" | "linear-bow" => Ok(SystemKind::LinearBow),
            "linear-emb" => Ok(SystemKind::LinearEmb),
            "cnn" => Ok(SystemKind::Cnn),
            other => Err(Error::Config(format!("unknown classifier {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemsConfig {
    pub n_labels: usize,
    pub llda: LldaConfig,
    pub linear: LinearConfig,
    pub cnn: CnnConfig,
}

impl Default for SystemsConfig {
    fn default() -> Self {
        SystemsConfig {
            n_labels: N_TOPICS,
            llda: LldaConfig::default(),
            linear: LinearConfig::default(),
            cnn: CnnConfig::default(),
        }
    }
}

/// Resources shared by every fold: the vocabulary and, for the
/// embedding-based systems, the embedding table.
#[derive(Debug, Clone)]
pub struct SystemContext {
    pub vocab: Vocabulary,
    pub embeddings: Option<EmbeddingTable>,
}

impl SystemContext {
    fn embeddings(&self, kind: SystemKind) -> Result<&EmbeddingTable> {
        self.embeddings
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{kind} requires an embedding table")))
    }
}

#[derive(Debug, Clone)]
pub enum TrainedSystem {
    Baseline {
        n_labels: usize,
    },
    Llda {
        classifier: LldaClassifier,
        vocab: Vocabulary,
    },
    LinearBow {
        model: LinearModel,
        vocab: Vocabulary,
    },
    LinearEmb {
        model: LinearModel,
        embeddings: EmbeddingTable,
    },
    Cnn {
        model: CnnModel,
    },
}

impl TrainedSystem {
    pub fn train(
        kind: SystemKind,
        config: &SystemsConfig,
        context: &SystemContext,
        data: &[&AnnotatedSentence],
    ) -> Result<TrainedSystem> {
        if data.is_empty() {
            return Err(Error::InsufficientData("no training sentences".into()));
        }
        let n_labels = config.n_labels;
        Ok(match kind {
            SystemKind::Baseline => TrainedSystem::Baseline { n_labels },
            SystemKind::Llda => {
                let docs: Vec<LabeledDoc> = data
                    .iter()
                    .map(|s| LabeledDoc {
                        tokens: context.vocab.encode(&s.tokens),
                        labels: s.labels,
                    })
                    .collect();
                let cfg = LldaConfig {
                    n_topics: n_labels,
                    ..config.llda.clone()
                };
                TrainedSystem::Llda {
                    classifier: LldaClassifier::fit(&docs, context.vocab.len(), &cfg)?,
                    vocab: context.vocab.clone(),
                }
            }
            SystemKind::LinearBow => {
                let set: Vec<_> = data
                    .iter()
                    .map(|s| (featurize_bow(&s.tokens, &context.vocab), s.labels))
                    .collect();
                let (model, _) = train_ovr(&set, n_labels, FeatureMode::Bow, &config.linear)?;
                TrainedSystem::LinearBow {
                    model,
                    vocab: context.vocab.clone(),
                }
            }
            SystemKind::LinearEmb => {
                let table = context.embeddings(kind)?;
                let set: Vec<_> = data
                    .iter()
                    .map(|s| (featurize_emb(&s.tokens, table), s.labels))
                    .collect();
                let (model, _) = train_ovr(&set, n_labels, FeatureMode::Emb, &config.linear)?;
                TrainedSystem::LinearEmb {
                    model,
                    embeddings: table.clone(),
                }
            }
            SystemKind::Cnn => {
                let table = context.embeddings(kind)?;
                let set: Vec<(Vec<u32>, LabelSet)> = data
                    .iter()
                    .map(|s| (table.vocab().encode(&s.tokens), s.labels))
                    .collect();
                let cfg = CnnConfig {
                    n_labels,
                    dim: table.dim(),
                    ..config.cnn.clone()
                };
                let (model, _) = train_cnn(&set, table, &cfg)?;
                TrainedSystem::Cnn { model }
            }
        })
    }

    pub fn kind(&self) -> SystemKind {
        match self {
            TrainedSystem::Baseline { .. } => SystemKind::Baseline,
            TrainedSystem::Llda { .. } => SystemKind::Llda,
            TrainedSystem::LinearBow { .. } => SystemKind::LinearBow,
            TrainedSystem::LinearEmb { .. } => SystemKind::LinearEmb,
            TrainedSystem::Cnn { .. } => SystemKind::Cnn,
        }
    }

    /// Labels for one preprocessed sentence.
    pub fn predict(&self, tokens: &[String]) -> Result<LabelSet> {
        match self {
            TrainedSystem::Baseline { n_labels } => Ok(LabelSet::full(*n_labels)),
            TrainedSystem::Llda { classifier, vocab } => {
                Ok(classifier.predict(&vocab.encode(tokens)))
            }
            TrainedSystem::LinearBow { model, vocab } => {
                predict_linear(model, &featurize_bow(tokens, vocab))
            }
            TrainedSystem::LinearEmb { model, embeddings } => {
                predict_linear(model, &featurize_emb(tokens, embeddings))
            }
            TrainedSystem::Cnn { model } => Ok(predict_cnn(model, &model.encode(tokens))),
        }
    }

    /// Model text preceded by a `system <name>` line. The vocabulary and
    /// frozen embeddings are not included; [`TrainedSystem::from_text`]
    /// takes them from the context.
    pub fn to_text(&self) -> String {
        let body = match self {
            TrainedSystem::Baseline { n_labels } => format!("{n_labels}\n"),
            TrainedSystem::Llda { classifier, .. } => classifier.to_text(),
            TrainedSystem::LinearBow { model, .. } | TrainedSystem::LinearEmb { model, .. } => {
                model.to_text()
            }
            TrainedSystem::Cnn { model } => model.to_text(),
        };
        format!("system {}\n{body}", self.kind())
    }

    pub fn from_text(src: &str, config: &SystemsConfig, context: &SystemContext) -> Result<Self> {
        let (first, body) = src
            .split_once('\n')
            .ok_or_else(|| Error::format("model", 1, "missing system line"))?;
        let kind: SystemKind = first
            .strip_prefix("system ")
            .ok_or_else(|| Error::format("model", 1, "missing system line"))?
            .trim()
            .parse()?;
        Ok(match kind {
            SystemKind::Baseline => TrainedSystem::Baseline {
                n_labels: body
                    .trim()
                    .parse()
                    .map_err(|_| Error::format("model", 2, "bad label count"))?,
            },
            SystemKind::Llda => TrainedSystem::Llda {
                classifier: LldaClassifier::from_text(body, &config.llda)?,
                vocab: context.vocab.clone(),
            },
            SystemKind::LinearBow => TrainedSystem::LinearBow {
                model: LinearModel::from_text(body)?,
                vocab: context.vocab.clone(),
            },
            SystemKind::LinearEmb => TrainedSystem::LinearEmb {
                model: LinearModel::from_text(body)?,
                embeddings: context.embeddings(kind)?.clone(),
            },
            SystemKind::Cnn => TrainedSystem::Cnn {
                model: CnnModel::from_text(body, context.embeddings.as_ref())?,
            },
        })
    }
}
