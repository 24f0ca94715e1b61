//! Labeled LDA: one latent topic per label, with each training token's
//! topic restricted to its document's label set.
//!
//! Training is collapsed Gibbs sampling. The conditional for token `i` of
//! document `d` with word `w` is
//!
//! ```text
//! p(z_i = k | rest) ∝ (n_dk + α) · (n_kw + β) / (n_k + V·β),   k ∈ Λ_d
//! ```
//!
//! where the counts exclude token `i`. At test time the topic-word
//! distributions are held fixed and every topic is allowed.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::prf_from_counts;
use crate::numfmt::sci9;
use crate::schema::{LabelSet, N_TOPICS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LldaConfig {
    pub n_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub train_iterations: usize,
    pub infer_iterations: usize,
    /// Inference sweeps discarded before theta is averaged.
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for LldaConfig {
    fn default() -> Self {
        LldaConfig {
            n_topics: N_TOPICS,
            alpha: 0.1,
            beta: 0.5,
            train_iterations: 1000,
            infer_iterations: 200,
            burn_in: 100,
            seed: 1,
        }
    }
}

impl LldaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Config("alpha and beta must be positive".into()));
        }
        if self.n_topics == 0 || self.n_topics > LabelSet::MAX_LABELS {
            return Err(Error::Config(format!(
                "n_topics must be in 1..={}",
                LabelSet::MAX_LABELS
            )));
        }
        if self.burn_in >= self.infer_iterations {
            return Err(Error::Config(
                "burn_in must be smaller than infer_iterations".into(),
            ));
        }
        Ok(())
    }
}

/// A training document: vocabulary ids plus its gold labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDoc {
    pub tokens: Vec<u32>,
    pub labels: LabelSet,
}

/// Topic-word counts after the final training sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct LldaModel {
    n_topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    topic_word: Vec<u32>,
    topic_totals: Vec<u64>,
}

impl LldaModel {
    pub fn n_topics(&self) -> usize {
        self.n_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn count(&self, topic: usize, word: u32) -> u32 {
        self.topic_word[topic * self.vocab_size + word as usize]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    /// `(n_kw + β) / (n_k + V·β)`
    pub fn phi(&self, topic: usize, word: u32) -> f64 {
        (self.count(topic, word) as f64 + self.beta)
            / (self.topic_totals[topic] as f64 + self.vocab_size as f64 * self.beta)
    }

    pub fn phi_row(&self, topic: usize) -> Vec<f64> {
        (0..self.vocab_size as u32)
            .map(|w| self.phi(topic, w))
            .collect()
    }

    /// Header `llda N V alpha beta`, then one row of V counts per topic.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "llda {} {} {} {}\n",
            self.n_topics,
            self.vocab_size,
            sci9(self.alpha),
            sci9(self.beta)
        );
        for k in 0..self.n_topics {
            let row = &self.topic_word[k * self.vocab_size..(k + 1) * self.vocab_size];
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(src: &str) -> Result<Self> {
        let mut lines = src.lines();
        let header: Vec<&str> = lines
            .next()
            .unwrap_or_default()
            .split_whitespace()
            .collect();
        let bad = |line, msg: &str| Error::format("llda model", line, msg.to_string());
        if header.len() != 5 || header[0] != "llda" {
            return Err(bad(1, "header must be `llda N V alpha beta`"));
        }
        let n_topics: usize = header[1].parse().map_err(|_| bad(1, "bad N"))?;
        let vocab_size: usize = header[2].parse().map_err(|_| bad(1, "bad V"))?;
        let alpha: f64 = header[3].parse().map_err(|_| bad(1, "bad alpha"))?;
        let beta: f64 = header[4].parse().map_err(|_| bad(1, "bad beta"))?;
        let mut topic_word = Vec::with_capacity(n_topics * vocab_size);
        for k in 0..n_topics {
            let line = lines
                .next()
                .ok_or_else(|| bad(k + 2, "missing topic row"))?;
            let before = topic_word.len();
            for v in line.split_whitespace() {
                topic_word.push(v.parse::<u32>().map_err(|_| bad(k + 2, "bad count"))?);
            }
            if topic_word.len() - before != vocab_size {
                return Err(bad(k + 2, "row width differs from V"));
            }
        }
        let topic_totals = topic_word
            .chunks(vocab_size.max(1))
            .take(n_topics)
            .map(|r| r.iter().map(|&c| c as u64).sum())
            .collect();
        Ok(LldaModel {
            n_topics,
            vocab_size,
            alpha,
            beta,
            topic_word,
            topic_totals,
        })
    }
}

/// Collapsed Gibbs state over the training corpus.
struct Sampler<'a> {
    docs: &'a [LabeledDoc],
    n_topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    z: Vec<Vec<u8>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<u32>,
    topic_totals: Vec<u64>,
    allowed: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl<'a> Sampler<'a> {
    fn new(
        docs: &'a [LabeledDoc],
        vocab_size: usize,
        config: &LldaConfig,
        rng: &mut impl Rng,
    ) -> Self {
        let n = config.n_topics;
        let mut s = Sampler {
            docs,
            n_topics: n,
            vocab_size,
            alpha: config.alpha,
            beta: config.beta,
            z: Vec::with_capacity(docs.len()),
            doc_topic: vec![vec![0; n]; docs.len()],
            topic_word: vec![0; n * vocab_size],
            topic_totals: vec![0; n],
            allowed: docs.iter().map(|d| d.labels.iter().collect()).collect(),
            weights: Vec::with_capacity(n),
        };
        for (d, doc) in docs.iter().enumerate() {
            let allowed = &s.allowed[d];
            let zs: Vec<u8> = doc
                .tokens
                .iter()
                .map(|&w| {
                    let k = allowed[rng.random_range(0..allowed.len())];
                    s.doc_topic[d][k] += 1;
                    s.topic_word[k * vocab_size + w as usize] += 1;
                    s.topic_totals[k] += 1;
                    k as u8
                })
                .collect();
            s.z.push(zs);
        }
        s
    }

    /// Unnormalized conditional over the allowed topics for one token whose
    /// counts have already been removed.
    fn conditional(&mut self, d: usize, w: u32) {
        let vb = self.vocab_size as f64 * self.beta;
        self.weights.clear();
        for &k in &self.allowed[d] {
            let p = (self.doc_topic[d][k] as f64 + self.alpha)
                * (self.topic_word[k * self.vocab_size + w as usize] as f64 + self.beta)
                / (self.topic_totals[k] as f64 + vb);
            self.weights.push(p);
        }
    }

    fn sweep(&mut self, rng: &mut impl Rng) {
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].tokens.len() {
                let w = self.docs[d].tokens[i];
                let old = self.z[d][i] as usize;
                self.doc_topic[d][old] -= 1;
                self.topic_word[old * self.vocab_size + w as usize] -= 1;
                self.topic_totals[old] -= 1;

                self.conditional(d, w);
                let choice = sample_index(&self.weights, rng);
                let k = self.allowed[d][choice];

                self.z[d][i] = k as u8;
                self.doc_topic[d][k] += 1;
                self.topic_word[k * self.vocab_size + w as usize] += 1;
                self.topic_totals[k] += 1;
            }
        }
        debug_assert!(self.check_invariants().is_ok());
    }

    fn check_invariants(&self) -> std::result::Result<(), String> {
        let total_tokens: usize = self.docs.iter().map(|d| d.tokens.len()).sum();
        if self.topic_totals.iter().sum::<u64>() != total_tokens as u64 {
            return Err("topic totals do not sum to the token count".into());
        }
        for (d, zs) in self.z.iter().enumerate() {
            if zs
                .iter()
                .any(|&k| !self.docs[d].labels.contains(k as usize))
            {
                return Err(format!("document {d} has an assignment outside its labels"));
            }
            if self.doc_topic[d].iter().map(|&c| c as usize).sum::<usize>() != zs.len() {
                return Err(format!("document {d} topic counts do not match its length"));
            }
        }
        Ok(())
    }

    fn into_model(self) -> LldaModel {
        LldaModel {
            n_topics: self.n_topics,
            vocab_size: self.vocab_size,
            alpha: self.alpha,
            beta: self.beta,
            topic_word: self.topic_word,
            topic_totals: self.topic_totals,
        }
    }
}

fn sample_index(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        x -= w;
        if x < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Fits labeled LDA by collapsed Gibbs sampling and returns the counts
/// after the final sweep.
pub fn fit_llda(docs: &[LabeledDoc], vocab_size: usize, config: &LldaConfig) -> Result<LldaModel> {
    config.validate()?;
    if docs.is_empty() {
        return Err(Error::InsufficientData("no training documents".into()));
    }
    for (i, doc) in docs.iter().enumerate() {
        if doc.labels.is_empty() {
            return Err(Error::UnlabeledInstance(i));
        }
        if doc.labels.iter().any(|k| k >= config.n_topics) {
            return Err(Error::Config(format!(
                "document {i} has a label beyond n_topics"
            )));
        }
        if let Some(&w) = doc.tokens.iter().find(|&&w| w as usize >= vocab_size) {
            return Err(Error::DimensionMismatch {
                expected: vocab_size,
                actual: w as usize + 1,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sampler = Sampler::new(docs, vocab_size, config, &mut rng);
    for _ in 0..config.train_iterations {
        sampler.sweep(&mut rng);
    }
    Ok(sampler.into_model())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub probs: Vec<f64>,
    /// True when the document had no tokens and `probs` is uniform.
    pub empty: bool,
}

/// Estimates a document's topic proportions with the topic-word
/// distributions fixed, averaging `(n_dk + α) / (len + N·α)` over the
/// sweeps after burn-in.
pub fn infer_theta(model: &LldaModel, tokens: &[u32], config: &LldaConfig) -> Theta {
    let n = model.n_topics;
    if tokens.is_empty() {
        return Theta {
            probs: vec![1.0 / n as f64; n],
            empty: true,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let alpha = model.alpha;
    let words: Vec<u32> = tokens
        .iter()
        .map(|&w| {
            if (w as usize) < model.vocab_size {
                w
            } else {
                0
            }
        })
        .collect();
    let phi: Vec<Vec<f64>> = words
        .iter()
        .map(|&w| (0..n).map(|k| model.phi(k, w)).collect())
        .collect();
    let mut doc_topic = vec![0u32; n];
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let k = rng.random_range(0..n);
            doc_topic[k] += 1;
            k
        })
        .collect();
    let mut acc = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let denom = words.len() as f64 + n as f64 * alpha;
    let mut kept = 0usize;
    for sweep in 0..config.infer_iterations {
        for i in 0..words.len() {
            doc_topic[z[i]] -= 1;
            for k in 0..n {
                weights[k] = (doc_topic[k] as f64 + alpha) * phi[i][k];
            }
            let k = sample_index(&weights, &mut rng);
            z[i] = k;
            doc_topic[k] += 1;
        }
        if sweep >= config.burn_in {
            for k in 0..n {
                acc[k] += (doc_topic[k] as f64 + alpha) / denom;
            }
            kept += 1;
        }
    }
    let probs: Vec<f64> = acc.iter().map(|a| a / kept as f64).collect();
    Theta {
        probs,
        empty: false,
    }
}

/// Labels whose probability reaches their threshold; the argmax label when
/// none does.
pub fn decide_labels(theta: &[f64], thresholds: &[f64]) -> LabelSet {
    let mut set = LabelSet::empty();
    for (k, (&p, &t)) in theta.iter().zip(thresholds).enumerate() {
        if p >= t {
            set.insert(k);
        }
    }
    if set.is_empty() {
        if let Some(best) = argmax(theta) {
            set.insert(best);
        }
    }
    set
}

pub(crate) fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Candidate decision thresholds: 0.05, 0.10, ..., 0.50.
pub fn threshold_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.05).collect()
}

/// For each label, the grid threshold maximizing that label's F over the
/// given documents (smallest threshold on ties).
pub fn tune_thresholds(thetas: &[Vec<f64>], gold: &[LabelSet], n_topics: usize) -> Vec<f64> {
    let grid = threshold_grid();
    (0..n_topics)
        .map(|k| {
            let mut best = (f64::NEG_INFINITY, grid[0]);
            for &t in &grid {
                let (mut tp, mut fp, mut fn_) = (0, 0, 0);
                for (theta, g) in thetas.iter().zip(gold) {
                    match (theta[k] >= t, g.contains(k)) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, true) => fn_ += 1,
                        (false, false) => {}
                    }
                }
                let f = prf_from_counts(tp, fp, fn_).2;
                if f > best.0 {
                    best = (f, t);
                }
            }
            best.1
        })
        .collect()
}

/// A fitted model plus per-label decision thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct LldaClassifier {
    pub model: LldaModel,
    pub thresholds: Vec<f64>,
    pub config: LldaConfig,
}

impl LldaClassifier {
    /// Fits the model, then tunes thresholds on the training documents'
    /// inferred proportions.
    pub fn fit(docs: &[LabeledDoc], vocab_size: usize, config: &LldaConfig) -> Result<Self> {
        let model = fit_llda(docs, vocab_size, config)?;
        let thetas: Vec<Vec<f64>> = docs
            .iter()
            .map(|d| infer_theta(&model, &d.tokens, config).probs)
            .collect();
        let gold: Vec<LabelSet> = docs.iter().map(|d| d.labels).collect();
        let thresholds = tune_thresholds(&thetas, &gold, config.n_topics);
        Ok(LldaClassifier {
            model,
            thresholds,
            config: config.clone(),
        })
    }

    pub fn predict(&self, tokens: &[u32]) -> LabelSet {
        let theta = infer_theta(&self.model, tokens, &self.config);
        decide_labels(&theta.probs, &self.thresholds)
    }

    /// Model text followed by a `thresholds` line.
    pub fn to_text(&self) -> String {
        let mut out = self.model.to_text();
        out.push_str("thresholds");
        for t in &self.thresholds {
            let _ = write!(out, " {}", sci9(*t));
        }
        out.push('\n');
        out
    }

    pub fn from_text(src: &str, config: &LldaConfig) -> Result<Self> {
        let (body, last) = src
            .trim_end()
            .rsplit_once('\n')
            .ok_or_else(|| Error::format("llda classifier", 1, "missing thresholds line"))?;
        let thresholds = last
            .strip_prefix("thresholds")
            .ok_or_else(|| Error::format("llda classifier", 0, "missing thresholds line"))?
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::format("llda classifier", 0, "bad threshold"))?;
        let model = LldaModel::from_text(body)?;
        if thresholds.len() != model.n_topics {
            return Err(Error::format(
                "llda classifier",
                0,
                "threshold count differs from N",
            ));
        }
        let config = LldaConfig {
            n_topics: model.n_topics,
            alpha: model.alpha,
            beta: model.beta,
            ..config.clone()
        };
        Ok(LldaClassifier {
            model,
            thresholds,
            config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config(n_topics: usize) -> LldaConfig {
        LldaConfig {
            n_topics,
            train_iterations: 100,
            infer_iterations: 60,
            burn_in: 20,
            ..LldaConfig::default()
        }
    }

    /// Two topics over disjoint vocabularies `0..10` and `10..20`
    /// (id 0 doubles as UNK here, which is fine for the sampler).
    fn planted_two_topic(n_docs: usize, seed: u64) -> (Vec<LabeledDoc>, [Vec<f64>; 2]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = 20;
        let mut planted = [vec![0.0; v], vec![0.0; v]];
        for w in 0..10 {
            planted[0][w] = 0.1;
            planted[1][w + 10] = 0.1;
        }
        let docs = (0..n_docs)
            .map(|_| {
                let k = rng.random_range(0..2);
                let tokens = (0..12)
                    .map(|_| (k * 10 + rng.random_range(0..10)) as u32)
                    .collect();
                LabeledDoc {
                    tokens,
                    labels: LabelSet::from_indices([k]),
                }
            })
            .collect();
        (docs, planted)
    }

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    #[test]
    fn single_label_corpus_assigns_everything_to_that_label() {
        let trea = crate::Topic::Trea.index();
        let docs: Vec<LabeledDoc> = (0..20)
            .map(|i| LabeledDoc {
                tokens: vec![1 + (i % 3) as u32, 4],
                labels: LabelSet::from_indices([trea]),
            })
            .collect();
        let model = fit_llda(&docs, 5, &quick_config(N_TOPICS)).unwrap();
        assert_eq!(model.topic_totals()[trea], 40);
        assert_eq!(model.topic_totals().iter().sum::<u64>(), 40);
        // phi is the smoothed unigram distribution
        let mut unigram = [0u32; 5];
        for d in &docs {
            for &w in &d.tokens {
                unigram[w as usize] += 1;
            }
        }
        for w in 0..5u32 {
            let expected = (unigram[w as usize] as f64 + 0.5) / (40.0 + 5.0 * 0.5);
            assert!((model.phi(trea, w) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn planted_two_topics_recovered() {
        let (docs, planted) = planted_two_topic(500, 11);
        let model = fit_llda(&docs, 20, &quick_config(2)).unwrap();
        for (k, truth) in planted.iter().enumerate() {
            let d = tv(&model.phi_row(k), truth);
            assert!(d < 0.1, "topic {k}: tv {d}");
        }
        let theta = infer_theta(&model, &[1, 2, 3, 4], &quick_config(2));
        assert_eq!(argmax(&theta.probs), Some(0));
    }

    #[test]
    fn fit_is_deterministic() {
        let (docs, _) = planted_two_topic(50, 3);
        let a = fit_llda(&docs, 20, &quick_config(2)).unwrap();
        let b = fit_llda(&docs, 20, &quick_config(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweeps_conserve_counts_and_respect_labels() {
        let (mut docs, _) = planted_two_topic(60, 5);
        for d in docs.iter_mut().step_by(3) {
            d.labels = LabelSet::from_indices([0, 1]);
        }
        let cfg = quick_config(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sampler = Sampler::new(&docs, 20, &cfg, &mut rng);
        sampler.check_invariants().unwrap();
        for _ in 0..10 {
            sampler.sweep(&mut rng);
            sampler.check_invariants().unwrap();
        }
    }

    #[test]
    fn conditional_is_a_distribution_over_allowed_topics() {
        let (mut docs, _) = planted_two_topic(30, 8);
        docs[0].labels = LabelSet::from_indices([0, 1]);
        let cfg = quick_config(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut sampler = Sampler::new(&docs, 20, &cfg, &mut rng);
        sampler.conditional(0, docs[0].tokens[0]);
        assert_eq!(sampler.weights.len(), 2);
        assert!(sampler.weights.iter().all(|&w| w > 0.0 && w.is_finite()));
        sampler.conditional(1, docs[1].tokens[0]);
        assert_eq!(sampler.weights.len(), 1);
    }

    #[test]
    fn unlabeled_or_empty_training_rejected() {
        let docs = vec![LabeledDoc {
            tokens: vec![1],
            labels: LabelSet::empty(),
        }];
        assert!(matches!(
            fit_llda(&docs, 3, &quick_config(2)),
            Err(Error::UnlabeledInstance(0))
        ));
        assert!(matches!(
            fit_llda(&[], 3, &quick_config(2)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn empty_sentence_gives_uniform_theta() {
        let (docs, _) = planted_two_topic(20, 1);
        let model = fit_llda(&docs, 20, &quick_config(N_TOPICS)).unwrap();
        let theta = infer_theta(&model, &[], &quick_config(N_TOPICS));
        assert!(theta.empty);
        assert!(theta.probs.iter().all(|&p| (p - 1.0 / 11.0).abs() < 1e-15));
    }

    #[test]
    fn theta_sums_to_one() {
        let (docs, _) = planted_two_topic(40, 4);
        let cfg = quick_config(2);
        let model = fit_llda(&docs, 20, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let len = rng.random_range(1..15);
            let tokens: Vec<u32> = (0..len).map(|_| rng.random_range(0..25)).collect();
            let theta = infer_theta(&model, &tokens, &cfg);
            assert!((theta.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn decision_rule() {
        let diag = crate::Topic::Diag.index();
        let mut one_hot = vec![0.0; N_TOPICS];
        one_hot[diag] = 1.0;
        assert_eq!(
            decide_labels(&one_hot, &[0.9; N_TOPICS]),
            LabelSet::from_indices([diag])
        );

        let low = vec![0.01; N_TOPICS];
        let mut low = low;
        low[3] = 0.02;
        assert_eq!(
            decide_labels(&low, &[0.5; N_TOPICS]),
            LabelSet::from_indices([3])
        );

        let (trea, hsys) = (crate::Topic::Trea.index(), crate::Topic::Hsys.index());
        let mut theta = vec![0.4 / 9.0; N_TOPICS];
        theta[trea] = 0.3;
        theta[hsys] = 0.3;
        assert_eq!(
            decide_labels(&theta, &[0.25; N_TOPICS]),
            LabelSet::from_indices([trea, hsys])
        );
    }

    #[test]
    fn model_text_round_trips() {
        let (docs, _) = planted_two_topic(30, 9);
        let clf = LldaClassifier::fit(&docs, 20, &quick_config(2)).unwrap();
        let text = clf.to_text();
        let back = LldaClassifier::from_text(&text, &quick_config(2)).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.model, clf.model);
        assert!(LldaModel::from_text("llda 2 3 0.1 0.5\n1 2\n").is_err());
    }
}
