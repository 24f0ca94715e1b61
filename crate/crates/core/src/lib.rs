//! Topic classification for online health community forums.
//!
//! Sentences from forum posts are labeled with any subset of eleven
//! discussion topics ([`schema::Topic`]). Three supervised classifiers are
//! provided, each built from scratch: a labeled-LDA Gibbs sampler
//! ([`llda`]), one-vs-rest linear max-margin models over bag-of-words or
//! averaged embeddings ([`linear`]), and a convolutional sentence model
//! over skip-gram embeddings ([`cnn`], [`embed`]). [`eval`] runs
//! post-level cross-validation with micro-averaged metrics and Cohen's
//! kappa; [`analytics`] turns sentence predictions into post labels,
//! prevalence tables, cancer-stage strata and participation trajectories.
//! [`annotation`] holds the double-annotation and adjudication workflow
//! used to produce gold labels.

pub mod analytics;
pub mod annotation;
pub mod cnn;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod linear;
pub mod llda;
pub mod numfmt;
pub mod pipeline;
pub mod resources;
pub mod schema;
pub mod synth;
pub mod systems;
pub mod textprep;

pub use error::{Error, Result};
pub use schema::{LabelSet, Topic, TopicSchema, N_TOPICS};

/// Guide chapters, compiled so their snippets stay correct.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/quickstart.md")]
    mod quickstart {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
    #[doc = include_str!("../../../book/src/schema.md")]
    mod schema {}
    #[doc = include_str!("../../../book/src/textprep.md")]
    mod textprep {}
    #[doc = include_str!("../../../book/src/classifiers.md")]
    mod classifiers {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/analytics.md")]
    mod analytics {}
    #[doc = include_str!("../../../book/src/annotation.md")]
    mod annotation {}
}
