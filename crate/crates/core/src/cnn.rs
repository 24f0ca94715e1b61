//! Convolutional sentence classifier: embedding lookup, one convolutional
//! layer with ReLU, max-over-positions pooling, and a fully connected
//! output layer trained with an asymmetric-cost logistic loss.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::numfmt::sci9;
use crate::schema::{LabelSet, N_TOPICS};

/// Token id that embeds to the zero vector. Never part of a vocabulary.
pub const PAD_ID: u32 = u32::MAX;

const INIT_SCALE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub dim: usize,
    pub filters: usize,
    pub filter_widths: Vec<usize>,
    pub alpha: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub fine_tune_embeddings: bool,
    pub n_labels: usize,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            dim: 100,
            filters: 800,
            filter_widths: vec![3, 4, 5],
            alpha: 0.25,
            learning_rate: 0.05,
            epochs: 25,
            batch_size: 32,
            seed: 1,
            fine_tune_embeddings: false,
            n_labels: N_TOPICS,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("cnn: {m}")));
        if self.dim == 0 {
            return fail("dim must be positive");
        }
        if self.filter_widths.is_empty() || self.filter_widths.contains(&0) {
            return fail("filter widths must be non-empty and positive");
        }
        if self.filters < self.filter_widths.len() {
            return fail("need at least one filter per width");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail("alpha must lie in (0, 1]");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.batch_size == 0 {
            return fail("learning rate and batch size must be positive");
        }
        if self.n_labels == 0 || self.n_labels > LabelSet::MAX_LABELS {
            return fail("unsupported number of labels");
        }
        Ok(())
    }

    /// Filters per width, spread as evenly as possible with the earlier
    /// widths taking the remainder (800 over three widths: 267/267/266).
    pub fn filter_counts(&self) -> Vec<usize> {
        let n = self.filter_widths.len();
        (0..n)
            .map(|i| self.filters / n + usize::from(i < self.filters % n))
            .collect()
    }
}

/// Filters sharing one width. Weights are row-major, one row of
/// `width * dim` values per filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub width: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl FilterBank {
    pub fn count(&self) -> usize {
        self.biases.len()
    }

    fn row(&self, h: usize, dim: usize) -> &[f64] {
        let n = self.width * dim;
        &self.weights[h * n..(h + 1) * n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub dim: usize,
    pub alpha: f64,
    pub banks: Vec<FilterBank>,
    /// `n_labels x H`, row-major.
    pub out_weights: Vec<f64>,
    pub out_biases: Vec<f64>,
    pub embeddings: EmbeddingTable,
    pub fine_tuned: bool,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Token ids after padding.
    pub ids: Vec<u32>,
    /// Embedded, padded sentence: `ids.len() x dim`, row-major.
    pub input: Vec<f64>,
    /// Per-filter ReLU activations at each valid position.
    pub scores: Vec<Vec<f64>>,
    pub argmax: Vec<usize>,
    pub pooled: Vec<f64>,
    pub logits: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in chunks_a.zip(chunks_b) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Asymmetric-cost loss: positives weigh 1, negatives `alpha`.
pub fn loss(logits: &[f64], gold: LabelSet, alpha: f64) -> f64 {
    logits
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            if gold.contains(k) {
                softplus(-z)
            } else {
                alpha * softplus(z)
            }
        })
        .sum()
}

/// Derivative of [`loss`] with respect to each logit.
pub fn loss_gradient(logits: &[f64], gold: LabelSet, alpha: f64) -> Vec<f64> {
    logits
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            if gold.contains(k) {
                -sigmoid(-z)
            } else {
                alpha * sigmoid(z)
            }
        })
        .collect()
}

/// Labels whose sigmoid reaches 0.5; the argmax alone if none does.
pub fn decide(logits: &[f64]) -> LabelSet {
    let mut set = LabelSet::empty();
    for (k, &z) in logits.iter().enumerate() {
        if sigmoid(z) >= 0.5 {
            set.insert(k);
        }
    }
    if set.is_empty() {
        if let Some(k) = crate::llda::argmax(logits) {
            set.insert(k);
        }
    }
    set
}

impl CnnModel {
    /// Filters uniform in ±0.05, every bias and output weight zero.
    pub fn init(embeddings: EmbeddingTable, config: &CnnConfig) -> Result<Self> {
        config.validate()?;
        if embeddings.dim() != config.dim {
            return Err(Error::DimensionMismatch {
                expected: config.dim,
                actual: embeddings.dim(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let banks = config
            .filter_widths
            .iter()
            .zip(config.filter_counts())
            .map(|(&width, count)| FilterBank {
                width,
                weights: (0..count * width * config.dim)
                    .map(|_| rng.random_range(-INIT_SCALE..=INIT_SCALE))
                    .collect(),
                biases: vec![0.0; count],
            })
            .collect();
        Ok(CnnModel {
            dim: config.dim,
            alpha: config.alpha,
            banks,
            out_weights: vec![0.0; config.n_labels * config.filters],
            out_biases: vec![0.0; config.n_labels],
            embeddings,
            fine_tuned: config.fine_tune_embeddings,
        })
    }

    pub fn n_filters(&self) -> usize {
        self.banks.iter().map(FilterBank::count).sum()
    }

    pub fn n_labels(&self) -> usize {
        self.out_biases.len()
    }

    pub fn max_width(&self) -> usize {
        self.banks.iter().map(|b| b.width).max().unwrap_or(1)
    }

    /// Trainable parameters, excluding embeddings.
    pub fn param_count(&self) -> usize {
        self.banks
            .iter()
            .map(|b| b.count() * (b.width * self.dim + 1))
            .sum::<usize>()
            + self.n_labels() * self.n_filters()
            + self.n_labels()
    }

    fn embed(&self, ids: &[u32]) -> (Vec<u32>, Vec<f64>) {
        let mut padded = ids.to_vec();
        padded.resize(ids.len().max(self.max_width()), PAD_ID);
        let mut input = vec![0.0; padded.len() * self.dim];
        for (row, &id) in input.chunks_exact_mut(self.dim).zip(&padded) {
            if id != PAD_ID {
                row.copy_from_slice(self.embeddings.row(id));
            }
        }
        (padded, input)
    }

    /// Full forward pass. Out-of-range ids are treated as UNK.
    pub fn forward(&self, ids: &[u32]) -> ForwardTrace {
        let ids: Vec<u32> = ids
            .iter()
            .map(|&id| {
                if id == PAD_ID || (id as usize) < self.embeddings.len() {
                    id
                } else {
                    0
                }
            })
            .collect();
        let (ids, input) = self.embed(&ids);
        let len = ids.len();
        let h_total = self.n_filters();
        let mut scores = Vec::with_capacity(h_total);
        let mut argmax = Vec::with_capacity(h_total);
        let mut pooled = Vec::with_capacity(h_total);
        for bank in &self.banks {
            let span = bank.width * self.dim;
            let positions = len + 1 - bank.width;
            for h in 0..bank.count() {
                let row = bank.row(h, self.dim);
                let b = bank.biases[h];
                let mut best = (0usize, f64::NEG_INFINITY);
                let mut seq = Vec::with_capacity(positions);
                for p in 0..positions {
                    let start = p * self.dim;
                    let a = (dot(row, &input[start..start + span]) + b).max(0.0);
                    if a > best.1 {
                        best = (p, a);
                    }
                    seq.push(a);
                }
                scores.push(seq);
                argmax.push(best.0);
                pooled.push(best.1);
            }
        }
        let logits = self
            .out_biases
            .iter()
            .enumerate()
            .map(|(k, &b)| dot(&self.out_weights[k * h_total..(k + 1) * h_total], &pooled) + b)
            .collect();
        ForwardTrace {
            ids,
            input,
            scores,
            argmax,
            pooled,
            logits,
        }
    }

    pub fn logits(&self, ids: &[u32]) -> Vec<f64> {
        self.forward(ids).logits
    }

    /// Encodes tokens against the model's vocabulary (OOV → UNK).
    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        self.embeddings.vocab().encode(tokens)
    }

    /// Flattened parameters: each filter's weights followed by its bias,
    /// bank by bank, then output weights, output biases, and the embedding
    /// table when fine-tuned.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for bank in &self.banks {
            for h in 0..bank.count() {
                out.extend_from_slice(bank.row(h, self.dim));
                out.push(bank.biases[h]);
            }
        }
        out.extend_from_slice(&self.out_weights);
        out.extend_from_slice(&self.out_biases);
        if self.fine_tuned {
            out.extend_from_slice(self.embeddings.as_slice());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.param_count()
            + if self.fine_tuned {
                self.embeddings.as_slice().len()
            } else {
                0
            };
        if flat.len() != expected {
            return Err(Error::LengthMismatch {
                left: expected,
                right: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        let dim = self.dim;
        for bank in &mut self.banks {
            let span = bank.width * dim;
            for h in 0..bank.count() {
                for w in &mut bank.weights[h * span..(h + 1) * span] {
                    *w = it.next().unwrap_or_default();
                }
                bank.biases[h] = it.next().unwrap_or_default();
            }
        }
        for w in self
            .out_weights
            .iter_mut()
            .chain(self.out_biases.iter_mut())
        {
            *w = it.next().unwrap_or_default();
        }
        if self.fine_tuned {
            for w in self.embeddings.as_mut_slice() {
                *w = it.next().unwrap_or_default();
            }
        }
        Ok(())
    }
}

/// Gradient of the mean batch loss, shaped like the model.
#[derive(Debug, Clone)]
pub struct CnnGradients {
    pub banks: Vec<FilterBank>,
    pub out_weights: Vec<f64>,
    pub out_biases: Vec<f64>,
    /// Rows touched in this batch, when embeddings are trained.
    pub embeddings: HashMap<u32, Vec<f64>>,
}

impl CnnGradients {
    fn zeros(model: &CnnModel) -> Self {
        CnnGradients {
            banks: model
                .banks
                .iter()
                .map(|b| FilterBank {
                    width: b.width,
                    weights: vec![0.0; b.weights.len()],
                    biases: vec![0.0; b.count()],
                })
                .collect(),
            out_weights: vec![0.0; model.out_weights.len()],
            out_biases: vec![0.0; model.out_biases.len()],
            embeddings: HashMap::new(),
        }
    }

    /// Same layout as [`CnnModel::flat_params`].
    pub fn flat(&self, model: &CnnModel) -> Vec<f64> {
        let mut out = Vec::new();
        for bank in &self.banks {
            for h in 0..bank.count() {
                out.extend_from_slice(bank.row(h, model.dim));
                out.push(bank.biases[h]);
            }
        }
        out.extend_from_slice(&self.out_weights);
        out.extend_from_slice(&self.out_biases);
        if model.fine_tuned {
            let mut emb = vec![0.0; model.embeddings.as_slice().len()];
            for (&id, g) in &self.embeddings {
                let start = id as usize * model.dim;
                emb[start..start + model.dim].copy_from_slice(g);
            }
            out.extend_from_slice(&emb);
        }
        out
    }

    fn scale(&mut self, s: f64) {
        for bank in &mut self.banks {
            bank.weights
                .iter_mut()
                .chain(bank.biases.iter_mut())
                .for_each(|w| *w *= s);
        }
        self.out_weights
            .iter_mut()
            .chain(self.out_biases.iter_mut())
            .for_each(|w| *w *= s);
        self.embeddings.values_mut().flatten().for_each(|w| *w *= s);
    }
}

/// Mean loss over `batch`.
pub fn batch_loss(model: &CnnModel, batch: &[(&[u32], LabelSet)]) -> f64 {
    batch
        .iter()
        .map(|(ids, gold)| loss(&model.logits(ids), *gold, model.alpha))
        .sum::<f64>()
        / batch.len() as f64
}

/// Exact gradient of the mean batch loss. Pooling sends each filter's
/// gradient to its argmax window only (lowest position on ties), and the
/// ReLU passes nothing when the pooled activation is zero.
pub fn gradient(model: &CnnModel, batch: &[(&[u32], LabelSet)]) -> Result<(f64, CnnGradients)> {
    if batch.is_empty() {
        return Err(Error::InsufficientData("empty batch".into()));
    }
    let mut grads = CnnGradients::zeros(model);
    let h_total = model.n_filters();
    let dim = model.dim;
    let mut total = 0.0;
    let mut d_pooled = vec![0.0; h_total];
    for (ids, gold) in batch {
        let trace = model.forward(ids);
        total += loss(&trace.logits, *gold, model.alpha);
        let d_logits = loss_gradient(&trace.logits, *gold, model.alpha);
        d_pooled.iter_mut().for_each(|d| *d = 0.0);
        for (k, &dz) in d_logits.iter().enumerate() {
            grads.out_biases[k] += dz;
            axpy(
                &mut grads.out_weights[k * h_total..(k + 1) * h_total],
                dz,
                &trace.pooled,
            );
            axpy(
                &mut d_pooled,
                dz,
                &model.out_weights[k * h_total..(k + 1) * h_total],
            );
        }
        let mut h = 0;
        for (bank, gbank) in model.banks.iter().zip(&mut grads.banks) {
            let span = bank.width * dim;
            for local in 0..bank.count() {
                let dp = d_pooled[h];
                if trace.pooled[h] > 0.0 && dp != 0.0 {
                    let start = trace.argmax[h] * dim;
                    let window = &trace.input[start..start + span];
                    axpy(
                        &mut gbank.weights[local * span..(local + 1) * span],
                        dp,
                        window,
                    );
                    gbank.biases[local] += dp;
                    if model.fine_tuned {
                        let row = bank.row(local, dim);
                        for j in 0..bank.width {
                            let id = trace.ids[trace.argmax[h] + j];
                            if id == PAD_ID {
                                continue;
                            }
                            let g = grads.embeddings.entry(id).or_insert_with(|| vec![0.0; dim]);
                            axpy(g, dp, &row[j * dim..(j + 1) * dim]);
                        }
                    }
                }
                h += 1;
            }
        }
    }
    let n = batch.len() as f64;
    grads.scale(1.0 / n);
    Ok((total / n, grads))
}

/// `model -= lr * grads`
pub fn apply_gradients(model: &mut CnnModel, grads: &CnnGradients, lr: f64) {
    for (bank, g) in model.banks.iter_mut().zip(&grads.banks) {
        axpy(&mut bank.weights, -lr, &g.weights);
        axpy(&mut bank.biases, -lr, &g.biases);
    }
    axpy(&mut model.out_weights, -lr, &grads.out_weights);
    axpy(&mut model.out_biases, -lr, &grads.out_biases);
    if model.fine_tuned {
        for (&id, g) in &grads.embeddings {
            axpy(model.embeddings.row_mut(id), -lr, g);
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CnnTrainLog {
    /// Mean training loss per epoch, accumulated over the epoch's batches.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch SGD over shuffled instances. Deterministic for a seed.
pub fn train_cnn(
    dataset: &[(Vec<u32>, LabelSet)],
    embeddings: &EmbeddingTable,
    config: &CnnConfig,
) -> Result<(CnnModel, CnnTrainLog)> {
    if dataset.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    let mut model = CnnModel::init(embeddings.clone(), config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut log = CnnTrainLog::default();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[u32], LabelSet)> = chunk
                .iter()
                .map(|&i| (dataset[i].0.as_slice(), dataset[i].1))
                .collect();
            let (l, grads) = gradient(&model, &batch)?;
            if !l.is_finite() {
                return Err(Error::Diverged { epoch: epoch + 1 });
            }
            epoch_loss += l * chunk.len() as f64;
            apply_gradients(&mut model, &grads, config.learning_rate);
        }
        let mean = epoch_loss / dataset.len() as f64;
        if !mean.is_finite() || model.out_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { epoch: epoch + 1 });
        }
        log.epoch_losses.push(mean);
    }
    Ok((model, log))
}

pub fn predict_cnn(model: &CnnModel, ids: &[u32]) -> LabelSet {
    decide(&model.logits(ids))
}

impl CnnModel {
    /// Header `cnn D H widths alpha labels fine_tuned`, then one line per
    /// filter (weights, bias), one per output row (weights, bias), and the
    /// embedding table if it was fine-tuned.
    pub fn to_text(&self) -> String {
        let widths: Vec<String> = self.banks.iter().map(|b| b.width.to_string()).collect();
        let counts: Vec<String> = self.banks.iter().map(|b| b.count().to_string()).collect();
        let mut out = format!(
            "cnn {} {} {} {} {} {} {}\n",
            self.dim,
            self.n_filters(),
            widths.join(","),
            counts.join(","),
            sci9(self.alpha),
            self.n_labels(),
            u8::from(self.fine_tuned)
        );
        let line = |out: &mut String, vals: &[f64], last: f64| {
            for v in vals {
                let _ = write!(out, "{} ", sci9(*v));
            }
            let _ = writeln!(out, "{}", sci9(last));
        };
        for bank in &self.banks {
            for h in 0..bank.count() {
                line(&mut out, bank.row(h, self.dim), bank.biases[h]);
            }
        }
        let h_total = self.n_filters();
        for (k, &b) in self.out_biases.iter().enumerate() {
            line(
                &mut out,
                &self.out_weights[k * h_total..(k + 1) * h_total],
                b,
            );
        }
        if self.fine_tuned {
            out.push_str("embeddings\n");
            out.push_str(&self.embeddings.to_text());
        }
        out
    }

    /// Parses [`CnnModel::to_text`]. `embeddings` supplies the table for
    /// models whose embeddings were frozen.
    pub fn from_text(src: &str, embeddings: Option<&EmbeddingTable>) -> Result<Self> {
        let bad = |line: usize, m: &str| Error::format("cnn model", line, m.to_string());
        let (params, table_src) = match src.split_once("\nembeddings\n") {
            Some((p, t)) => (p, Some(t)),
            None => (src, None),
        };
        let mut lines = params.lines();
        let header: Vec<&str> = lines
            .next()
            .unwrap_or_default()
            .split_whitespace()
            .collect();
        if header.len() != 8 || header[0] != "cnn" {
            return Err(bad(
                1,
                "expected `cnn D H widths counts alpha labels fine_tuned`",
            ));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad(1, "bad integer"));
        let list = |s: &str| s.split(',').map(num).collect::<Result<Vec<usize>>>();
        let dim = num(header[1])?;
        let h_total = num(header[2])?;
        let widths = list(header[3])?;
        let counts = list(header[4])?;
        let alpha: f64 = header[5].parse().map_err(|_| bad(1, "bad alpha"))?;
        let n_labels = num(header[6])?;
        let fine_tuned = header[7] == "1";
        if widths.len() != counts.len() || counts.iter().sum::<usize>() != h_total {
            return Err(bad(1, "filter counts disagree with H"));
        }
        let embeddings = match (fine_tuned, table_src, embeddings) {
            (true, Some(t), _) => EmbeddingTable::from_text(t)?,
            (false, _, Some(t)) => t.clone(),
            _ => return Err(bad(1, "embedding table unavailable")),
        };
        if embeddings.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: embeddings.dim(),
            });
        }
        let mut rows = lines.enumerate().map(|(i, l)| {
            l.split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| bad(i + 2, "bad number"))
                .map(|v| (i + 2, v))
        });
        let mut next_row = |len: usize| -> Result<(Vec<f64>, f64)> {
            let (line, mut v) = rows
                .next()
                .ok_or_else(|| bad(0, "truncated parameters"))??;
            if v.len() != len + 1 {
                return Err(bad(line, "wrong number of values"));
            }
            let last = v.pop().unwrap_or_default();
            Ok((v, last))
        };
        let mut banks = Vec::new();
        for (&width, &count) in widths.iter().zip(&counts) {
            let mut bank = FilterBank {
                width,
                weights: Vec::with_capacity(count * width * dim),
                biases: Vec::with_capacity(count),
            };
            for _ in 0..count {
                let (w, b) = next_row(width * dim)?;
                bank.weights.extend(w);
                bank.biases.push(b);
            }
            banks.push(bank);
        }
        let mut out_weights = Vec::with_capacity(n_labels * h_total);
        let mut out_biases = Vec::with_capacity(n_labels);
        for _ in 0..n_labels {
            let (w, b) = next_row(h_total)?;
            out_weights.extend(w);
            out_biases.push(b);
        }
        Ok(CnnModel {
            dim,
            alpha,
            banks,
            out_weights,
            out_biases,
            embeddings,
            fine_tuned,
        })
    }
}
