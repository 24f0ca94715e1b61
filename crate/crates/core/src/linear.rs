//! One-vs-rest linear max-margin classifiers over bag-of-words or
//! averaged-embedding features.
//!
//! Each label gets an independent binary model minimizing
//!
//! ```text
//! (1/m) Σ max(0, 1 − y·(w·x + b)) + (λ/2)‖w‖²,   λ = 1 / (C·m)
//! ```
//!
//! by epoch-shuffled stochastic subgradient descent with step `1/(λ·t)`.
//! The bias is an unregularized extra coordinate.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::label_name;
use crate::numfmt::sci9;
use crate::schema::{LabelSet, Topic};
use crate::textprep::Vocabulary;

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureVector {
    /// `(id, weight)` pairs sorted by id, over a space of `dim` ids.
    Sparse {
        entries: Vec<(u32, f64)>,
        dim: usize,
        norm: f64,
    },
    Dense {
        values: Vec<f64>,
        norm: f64,
    },
}

impl FeatureVector {
    pub fn sparse(mut entries: Vec<(u32, f64)>, dim: usize) -> Self {
        entries.sort_by_key(|e| e.0);
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        FeatureVector::Sparse { entries, dim, norm }
    }

    pub fn dense(values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        FeatureVector::Dense { values, norm }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureVector::Sparse { dim, .. } => *dim,
            FeatureVector::Dense { values, .. } => values.len(),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            FeatureVector::Sparse { norm, .. } | FeatureVector::Dense { norm, .. } => *norm,
        }
    }

    fn dot(&self, w: &[f64]) -> f64 {
        match self {
            FeatureVector::Sparse { entries, .. } => {
                entries.iter().map(|&(i, v)| w[i as usize] * v).sum()
            }
            FeatureVector::Dense { values, .. } => values.iter().zip(w).map(|(x, y)| x * y).sum(),
        }
    }

    /// `w += scale · x`
    fn add_to(&self, w: &mut [f64], scale: f64) {
        match self {
            FeatureVector::Sparse { entries, .. } => {
                for &(i, v) in entries {
                    w[i as usize] += scale * v;
                }
            }
            FeatureVector::Dense { values, .. } => {
                for (wi, v) in w.iter_mut().zip(values) {
                    *wi += scale * v;
                }
            }
        }
    }

    /// Dense copy of the values, mostly for inspection.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.add_to(&mut out, 1.0);
        out
    }
}

/// Raw token counts keyed by vocabulary id (OOV tokens count as UNK).
pub fn bow_counts(tokens: &[String], vocab: &Vocabulary) -> BTreeMap<u32, usize> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(vocab.id(t)).or_default() += 1;
    }
    counts
}

/// L2-normalized token counts.
pub fn featurize_bow(tokens: &[String], vocab: &Vocabulary) -> FeatureVector {
    let counts = bow_counts(tokens, vocab);
    let norm = counts.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    let entries = counts
        .into_iter()
        .map(|(id, c)| (id, c as f64 / norm))
        .collect();
    FeatureVector::sparse(entries, vocab.len())
}

/// Mean of the tokens' embedding rows; the zero vector for no tokens.
pub fn featurize_emb(tokens: &[String], table: &EmbeddingTable) -> FeatureVector {
    let mut mean = vec![0.0; table.dim()];
    if tokens.is_empty() {
        return FeatureVector::dense(mean);
    }
    for t in tokens {
        for (m, v) in mean.iter_mut().zip(table.lookup(t)) {
            *m += v;
        }
    }
    let n = tokens.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    FeatureVector::dense(mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Bow,
    Emb,
}

impl FeatureMode {
    pub fn name(self) -> &'static str {
        match self {
            FeatureMode::Bow => "bow",
            FeatureMode::Emb => "emb",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            c: 1.0,
            epochs: 30,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinaryModel {
    pub fn margin(&self, x: &FeatureVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    fn always_negative(dim: usize) -> Self {
        BinaryModel {
            weights: vec![0.0; dim],
            bias: -1.0,
        }
    }
}

/// Primal objective of one binary problem.
pub fn objective(model: &BinaryModel, xs: &[&FeatureVector], ys: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * model.margin(x)).max(0.0))
        .sum::<f64>()
        / xs.len() as f64;
    let sq: f64 = model.weights.iter().map(|w| w * w).sum();
    hinge + 0.5 * lambda * sq
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BinaryTrace {
    /// Objective at the end of each epoch.
    pub objectives: Vec<f64>,
}

/// Bias minimizing the mean hinge loss for fixed scores `s_i = w·x_i`.
///
/// The loss is piecewise linear in `b` with one breakpoint `y_i − s_i` per
/// instance, and its slope climbs by 1/m at each breakpoint starting from
/// −(#positives)/m. The minimum therefore lies between the P-th and
/// (P+1)-th smallest breakpoints; the midpoint is returned.
pub fn optimal_bias(scores: &[f64], ys: &[f64]) -> f64 {
    let mut breaks: Vec<f64> = scores.iter().zip(ys).map(|(s, y)| y - s).collect();
    breaks.sort_by(f64::total_cmp);
    let positives = ys.iter().filter(|&&y| y > 0.0).count();
    match positives {
        0 => breaks[0],
        p if p == breaks.len() => breaks[p - 1],
        p => 0.5 * (breaks[p - 1] + breaks[p]),
    }
}

/// Trains one binary problem; `ys` are ±1.
///
/// Weights follow stochastic subgradient steps of size 1/(λt). The bias is
/// unregularized, so it is not stepped: at the end of each epoch it is set
/// to the exact minimizer for the current weights. Stepping it with the
/// same schedule leaves the large early moves uncorrected for thousands of
/// epochs. The weight vector is kept as `scale · v` so the per-step shrink
/// costs O(1) instead of O(dim).
pub fn train_binary(
    xs: &[&FeatureVector],
    ys: &[f64],
    dim: usize,
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<(BinaryModel, BinaryTrace)> {
    if xs.is_empty() {
        return Err(Error::InsufficientData("no training instances".into()));
    }
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::Config("C must be positive".into()));
    }
    if epochs == 0 {
        return Err(Error::Config("epochs must be positive".into()));
    }
    if let Some(x) = xs.iter().find(|x| x.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.dim(),
        });
    }
    let m = xs.len();
    let lambda = 1.0 / (c * m as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m).collect();
    let mut v = vec![0.0; dim];
    let mut scale = 1.0;
    let mut bias = optimal_bias(&vec![0.0; m], ys);
    let mut t = 0u64;
    let mut trace = BinaryTrace::default();
    let mut scores = vec![0.0; m];
    let mut model = BinaryModel {
        weights: vec![0.0; dim],
        bias,
    };
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = ys[i] * (scale * xs[i].dot(&v) + bias);
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|x| *x = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                xs[i].add_to(&mut v, eta * ys[i] / scale);
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                scale = 1.0;
            }
        }
        model
            .weights
            .iter_mut()
            .zip(&v)
            .for_each(|(w, x)| *w = x * scale);
        for (s, x) in scores.iter_mut().zip(xs) {
            *s = x.dot(&model.weights);
        }
        bias = optimal_bias(&scores, ys);
        model.bias = bias;
        trace.objectives.push(objective(&model, xs, ys, lambda));
    }
    if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
        return Err(Error::Diverged { epoch: epochs });
    }
    Ok((model, trace))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub mode: FeatureMode,
    pub dim: usize,
    pub labels: Vec<BinaryModel>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub traces: Vec<BinaryTrace>,
    pub warnings: Vec<String>,
}

/// Seed for label `label`'s binary problem.
pub fn label_seed(seed: u64, label: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(label as u64 + 1)
}

/// Trains one binary classifier per label. A label with no positive
/// instance becomes an always-negative classifier and a warning.
pub fn train_ovr(
    dataset: &[(FeatureVector, LabelSet)],
    n_labels: usize,
    mode: FeatureMode,
    config: &LinearConfig,
) -> Result<(LinearModel, TrainReport)> {
    let Some(first) = dataset.first() else {
        return Err(Error::InsufficientData("empty training set".into()));
    };
    let dim = first.0.dim();
    let xs: Vec<&FeatureVector> = dataset.iter().map(|d| &d.0).collect();
    let mut report = TrainReport::default();
    let mut labels = Vec::with_capacity(n_labels);
    for k in 0..n_labels {
        let ys: Vec<f64> = dataset
            .iter()
            .map(|d| if d.1.contains(k) { 1.0 } else { -1.0 })
            .collect();
        if !ys.iter().any(|&y| y > 0.0) {
            report.warnings.push(format!(
                "label {} has no positive examples; always negative",
                label_name(k)
            ));
            labels.push(BinaryModel::always_negative(dim));
            report.traces.push(BinaryTrace::default());
            continue;
        }
        let (model, trace) = train_binary(
            &xs,
            &ys,
            dim,
            config.c,
            config.epochs,
            label_seed(config.seed, k),
        )?;
        labels.push(model);
        report.traces.push(trace);
    }
    Ok((LinearModel { mode, dim, labels }, report))
}

/// Labels with positive margin; may be empty.
pub fn predict_linear(model: &LinearModel, features: &FeatureVector) -> Result<LabelSet> {
    if features.dim() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            actual: features.dim(),
        });
    }
    let mut set = LabelSet::empty();
    for (k, m) in model.labels.iter().enumerate() {
        if m.margin(features) > 0.0 {
            set.insert(k);
        }
    }
    Ok(set)
}

impl LinearModel {
    /// Header `linear <mode> <dim>`, then per label: code, bias, and either
    /// sparse `id:weight` pairs (bow) or `dim` decimals (emb).
    pub fn to_text(&self) -> String {
        let mut out = format!("linear {} {}\n", self.mode.name(), self.dim);
        for (k, m) in self.labels.iter().enumerate() {
            let _ = write!(out, "{} {}", label_name(k), sci9(m.bias));
            match self.mode {
                FeatureMode::Bow => {
                    for (i, w) in m.weights.iter().enumerate() {
                        if *w != 0.0 {
                            let _ = write!(out, " {i}:{}", sci9(*w));
                        }
                    }
                }
                FeatureMode::Emb => {
                    for w in &m.weights {
                        let _ = write!(out, " {}", sci9(*w));
                    }
                }
            }
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
        let bad = |line: usize, msg: &str| Error::format("linear model", line, msg.to_string());
        if header.len() != 3 || header[0] != "linear" {
            return Err(bad(1, "header must be `linear <mode> <dim>`"));
        }
        let mode = match header[1] {
            "bow" => FeatureMode::Bow,
            "emb" => FeatureMode::Emb,
            _ => return Err(bad(1, "mode must be bow or emb")),
        };
        let dim: usize = header[2].parse().map_err(|_| bad(1, "bad dim"))?;
        let mut labels = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let mut parts = line.split_whitespace();
            let code = parts.next().ok_or_else(|| bad(line_no, "empty line"))?;
            if code != label_name(labels.len()) && code.parse::<Topic>().is_err() {
                return Err(bad(line_no, "unexpected label code"));
            }
            let bias: f64 = parts
                .next()
                .and_then(|b| b.parse().ok())
                .ok_or_else(|| bad(line_no, "bad bias"))?;
            let mut weights = vec![0.0; dim];
            match mode {
                FeatureMode::Bow => {
                    for p in parts {
                        let (id, w) = p
                            .split_once(':')
                            .ok_or_else(|| bad(line_no, "expected id:weight"))?;
                        let id: usize = id.parse().map_err(|_| bad(line_no, "bad id"))?;
                        if id >= dim {
                            return Err(bad(line_no, "id out of range"));
                        }
                        weights[id] = w.parse().map_err(|_| bad(line_no, "bad weight"))?;
                    }
                }
                FeatureMode::Emb => {
                    let values: Vec<f64> = parts
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(line_no, "bad weight"))?;
                    if values.len() != dim {
                        return Err(bad(line_no, "wrong number of weights"));
                    }
                    weights = values;
                }
            }
            labels.push(BinaryModel { weights, bias });
        }
        Ok(LinearModel { mode, dim, labels })
    }
}
