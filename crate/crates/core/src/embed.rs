//! Skip-gram word embeddings trained with negative sampling.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::sci9;
use crate::textprep::{Vocabulary, UNK};

pub const DEFAULT_DIM: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Starting learning rate, decayed linearly to near zero.
    pub initial_lr: f64,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub subsample_threshold: f64,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: DEFAULT_DIM,
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            subsample_threshold: 1e-3,
            seed: 1,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "dim, window, negatives and epochs must all be at least 1".into(),
            ));
        }
        if self.initial_lr.is_nan() || self.initial_lr <= 0.0 || self.subsample_threshold < 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// A `V x D` matrix of word vectors, one row per vocabulary id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: Vec<f64>,
    vocab: Vocabulary,
}

impl EmbeddingTable {
    pub fn from_rows(vocab: Vocabulary, dim: usize, vectors: Vec<f64>) -> Result<Self> {
        if dim == 0 || vectors.len() != vocab.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: vocab.len() * dim,
                actual: vectors.len(),
            });
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("embedding entries must be finite".into()));
        }
        Ok(EmbeddingTable {
            dim,
            vectors,
            vocab,
        })
    }

    /// Uniform random rows in `[-scale, scale]`; used for tests and as a
    /// stand-in when no pre-trained table is available.
    pub fn random(vocab: Vocabulary, dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors = (0..vocab.len() * dim)
            .map(|_| rng.random_range(-scale..=scale))
            .collect();
        EmbeddingTable {
            dim,
            vectors,
            vocab,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn row(&self, id: u32) -> &[f64] {
        let start = id as usize * self.dim;
        &self.vectors[start..start + self.dim]
    }

    pub fn row_mut(&mut self, id: u32) -> &mut [f64] {
        let start = id as usize * self.dim;
        &mut self.vectors[start..start + self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vectors
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.vectors
    }

    /// The row for `token`; out-of-vocabulary tokens share the UNK row.
    pub fn lookup(&self, token: &str) -> &[f64] {
        self.row(self.vocab.id(token))
    }

    /// First line `V D`, then `token v_1 ... v_D` per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vocab.len(), self.dim);
        for (id, tok) in self.vocab.tokens().iter().enumerate() {
            out.push_str(tok);
            for v in self.row(id as u32) {
                let _ = write!(out, " {}", sci9(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(src: &str) -> Result<Self> {
        let mut lines = src.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format("embeddings", 1, "missing header"))?;
        let mut header = header.split_whitespace().map(str::parse::<usize>);
        let (Some(Ok(v)), Some(Ok(dim)), None) = (header.next(), header.next(), header.next())
        else {
            return Err(Error::format("embeddings", 1, "header must be `V D`"));
        };
        let mut tokens = Vec::with_capacity(v);
        let mut vectors = Vec::with_capacity(v * dim);
        for (i, line) in lines {
            let mut parts = line.split(' ');
            let tok = parts.next().unwrap_or_default();
            let before = vectors.len();
            for p in parts {
                vectors.push(
                    p.parse::<f64>()
                        .map_err(|_| Error::format("embeddings", i + 1, "bad number"))?,
                );
            }
            if vectors.len() - before != dim {
                return Err(Error::format("embeddings", i + 1, "wrong row width"));
            }
            tokens.push(tok.to_string());
        }
        if tokens.len() != v || tokens.first().map(String::as_str) != Some(UNK) {
            return Err(Error::format(
                "embeddings",
                1,
                "row count mismatch or UNK not first",
            ));
        }
        let vocab = Vocabulary::from_list(tokens.into_iter().skip(1));
        if vocab.len() != v {
            return Err(Error::format("embeddings", 1, "duplicate tokens"));
        }
        Self::from_rows(vocab, dim, vectors)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot = dot(a, b);
    let na = dot_self(a).sqrt();
    let nb = dot_self(b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot_self(a: &[f64]) -> f64 {
    dot(a, a)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Negative-sampling loss for one (center, context) pair:
/// `-log σ(u·v_ctx) - Σ_n log σ(-u·v_n)`.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = -log_sigmoid(dot(center, context));
    for n in negatives {
        loss -= log_sigmoid(-dot(center, n));
    }
    loss
}

/// Gradients of [`sgns_loss`] with respect to the center vector, the
/// context vector and each negative vector.
pub fn sgns_gradients(
    center: &[f64],
    context: &[f64],
    negatives: &[&[f64]],
) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let mut g_center = vec![0.0; center.len()];
    // d/dx [-log σ(x)] = σ(x) - 1
    let coef = sigmoid(dot(center, context)) - 1.0;
    let g_context: Vec<f64> = center.iter().map(|u| coef * u).collect();
    for (g, c) in g_center.iter_mut().zip(context) {
        *g += coef * c;
    }
    let mut g_negs = Vec::with_capacity(negatives.len());
    for n in negatives {
        // d/dx [-log σ(-x)] = σ(x)
        let coef = sigmoid(dot(center, n));
        for (g, v) in g_center.iter_mut().zip(n.iter()) {
            *g += coef * v;
        }
        g_negs.push(center.iter().map(|u| coef * u).collect());
    }
    (g_center, g_context, g_negs)
}

struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    /// Unigram counts raised to the 3/4 power.
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> u32 {
        let total = *self.cumulative.last().unwrap();
        let x = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= x);
        idx.min(self.cumulative.len() - 1) as u32
    }
}

/// Trains skip-gram vectors over token sequences.
///
/// Out-of-vocabulary tokens are dropped before windowing. The UNK row is set
/// to the mean of all trained rows afterwards. Training is single-threaded
/// and reproducible for a fixed seed.
pub fn train_embeddings(
    sequences: &[Vec<String>],
    vocab: &Vocabulary,
    config: &EmbedConfig,
) -> Result<EmbeddingTable> {
    config.validate()?;
    let v = vocab.len();
    if v < 2 {
        return Err(Error::InsufficientData(
            "vocabulary has no words besides UNK".into(),
        ));
    }
    let dim = config.dim;
    let encoded: Vec<Vec<u32>> = sequences
        .iter()
        .map(|s| {
            s.iter()
                .filter_map(|t| vocab.get(t))
                .filter(|&id| id != 0)
                .collect()
        })
        .collect();
    let mut counts = vec![0u64; v];
    for s in &encoded {
        for &id in s {
            counts[id as usize] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientData(
            "no in-vocabulary tokens to train on".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input: Vec<f64> = (0..v * dim)
        .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut output = vec![0.0; v * dim];
    let sampler = NegativeSampler::new(&counts);

    let keep_prob: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if config.subsample_threshold <= 0.0 || c == 0 {
                return 1.0;
            }
            let f = c as f64 / total as f64;
            let t = config.subsample_threshold;
            ((f / t).sqrt() + 1.0) * t / f
        })
        .collect();

    let planned = (config.epochs as u64 * total) as f64;
    let mut processed = 0u64;
    let mut grad_center = vec![0.0; dim];
    let mut kept = Vec::new();
    for epoch in 0..config.epochs {
        for sentence in &encoded {
            kept.clear();
            kept.extend(
                sentence
                    .iter()
                    .copied()
                    .filter(|&id| rng.random::<f64>() < keep_prob[id as usize]),
            );
            processed += sentence.len() as u64;
            let lr = config.initial_lr * (1.0 - processed as f64 / (planned + 1.0)).max(1e-4);
            for (pos, &center) in kept.iter().enumerate() {
                let reach = rng.random_range(1..=config.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(kept.len() - 1);
                for (ctx_pos, &context) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    grad_center.iter_mut().for_each(|g| *g = 0.0);
                    let c_row = center as usize * dim;
                    for k in 0..=config.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let n = sampler.sample(&mut rng);
                            if n == context {
                                continue;
                            }
                            (n, 0.0)
                        };
                        let t_row = target as usize * dim;
                        let score = dot(&input[c_row..c_row + dim], &output[t_row..t_row + dim]);
                        // step along the negative gradient of the pair loss
                        let g = (label - sigmoid(score)) * lr;
                        for d in 0..dim {
                            grad_center[d] += g * output[t_row + d];
                            output[t_row + d] += g * input[c_row + d];
                        }
                    }
                    for d in 0..dim {
                        input[c_row + d] += grad_center[d];
                    }
                }
            }
        }
        if input.iter().chain(&output).any(|x| !x.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
    }

    // UNK row: mean of trained rows
    let mut mean = vec![0.0; dim];
    for id in 1..v {
        for d in 0..dim {
            mean[d] += input[id * dim + d];
        }
    }
    for d in 0..dim {
        input[d] = mean[d] / (v - 1) as f64;
    }
    EmbeddingTable::from_rows(vocab.clone(), dim, input)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab2() -> Vocabulary {
        Vocabulary::from_list(["x"])
    }

    #[test]
    fn tiny_vocab_shape() {
        let seqs = vec![vec!["x".to_string(), "x".to_string()]];
        let cfg = EmbedConfig {
            epochs: 1,
            ..EmbedConfig::default()
        };
        let table = train_embeddings(&seqs, &vocab2(), &cfg).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.as_slice().len(), 2 * 100);
        assert!(table.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn empty_corpus_is_insufficient() {
        let err = train_embeddings(&[], &vocab2(), &EmbedConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
        let only_unk = Vocabulary::from_list(Vec::<String>::new());
        assert!(train_embeddings(&[vec!["x".into()]], &only_unk, &EmbedConfig::default()).is_err());
    }

    #[test]
    fn lookup_falls_back_to_unk() {
        let table = EmbeddingTable::random(Vocabulary::from_list(["known"]), 4, 0.5, 3);
        assert_eq!(table.lookup("known"), table.row(1));
        assert_eq!(table.lookup("zzzqq"), table.row(0));
        assert_eq!(table.lookup("zzzqq"), table.lookup("other"));
    }

    #[test]
    fn text_format_round_trips() {
        let table = EmbeddingTable::random(Vocabulary::from_list(["a", "b"]), 3, 1.0, 9);
        let text = table.to_text();
        assert!(text.starts_with("3 3\nUNK "));
        let back = EmbeddingTable::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert!(EmbeddingTable::from_text("2 3\nUNK 1 2\n").is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = EmbedConfig {
            window: 0,
            ..EmbedConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
