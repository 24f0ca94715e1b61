//! Multi-label metrics, the tag-all baseline, Cohen's kappa, post-level
//! k-fold splitting and the cross-validation harness.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::dec9;
use crate::schema::{LabelSet, Topic, N_TOPICS};
use crate::systems::{SystemContext, SystemKind, SystemsConfig, TrainedSystem};

/// Precision, recall and F1 from raw counts; every 0/0 is 0.
pub fn prf_from_counts(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn prf(self) -> (f64, f64, f64) {
        prf_from_counts(self.tp, self.fp, self.fn_)
    }

    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

fn check_lengths(gold: &[LabelSet], pred: &[LabelSet]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: pred.len(),
        });
    }
    Ok(())
}

/// Per-label decision counts for labels `0..n_labels`.
pub fn label_counts(gold: &[LabelSet], pred: &[LabelSet], n_labels: usize) -> Result<Vec<Counts>> {
    check_lengths(gold, pred)?;
    let mut counts = vec![Counts::default(); n_labels];
    for (g, p) in gold.iter().zip(pred) {
        for (k, c) in counts.iter_mut().enumerate() {
            match (g.contains(k), p.contains(k)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(counts)
}

/// Micro-averaged precision, recall and F over every label and instance.
pub fn micro_prf(gold: &[LabelSet], pred: &[LabelSet]) -> Result<(f64, f64, f64)> {
    check_lengths(gold, pred)?;
    let mut total = Counts::default();
    for (g, p) in gold.iter().zip(pred) {
        total.tp += g.intersection(*p).len();
        total.fp += p.difference(*g).len();
        total.fn_ += g.difference(*p).len();
    }
    Ok(total.prf())
}

pub fn per_label_prf(
    gold: &[LabelSet],
    pred: &[LabelSet],
    label: usize,
) -> Result<(f64, f64, f64)> {
    check_lengths(gold, pred)?;
    let mut c = Counts::default();
    for (g, p) in gold.iter().zip(pred) {
        match (g.contains(label), p.contains(label)) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(c.prf())
}

/// Tags every one of `n` instances with all `n_labels` labels.
pub fn baseline_all(n: usize, n_labels: usize) -> Vec<LabelSet> {
    vec![LabelSet::full(n_labels); n]
}

/// Cohen's kappa on presence/absence of one label between two annotators.
///
/// When chance agreement is 1 (both annotators constant and equal), kappa is
/// 1 if observed agreement is perfect and 0 otherwise.
pub fn cohen_kappa(a: &[LabelSet], b: &[LabelSet], label: usize) -> Result<f64> {
    check_lengths(a, b)?;
    if a.is_empty() {
        return Err(Error::TooFew { needed: 1, have: 0 });
    }
    let n = a.len();
    let mut agree = 0usize;
    let (mut na, mut nb) = (0usize, 0usize);
    for (x, y) in a.iter().zip(b) {
        let (px, py) = (x.contains(label), y.contains(label));
        agree += usize::from(px == py);
        na += usize::from(px);
        nb += usize::from(py);
    }
    let nf = n as f64;
    let p_o = agree as f64 / nf;
    let (pa, pb) = (na as f64 / nf, nb as f64 / nf);
    let p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    let degenerate = (na == n && nb == n) || (na == 0 && nb == 0);
    if degenerate {
        return Ok(if agree == n { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Per-label kappa over the schema plus their unweighted mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub per_label: Vec<f64>,
    pub average: f64,
    pub n: usize,
}

pub fn kappa_report(a: &[LabelSet], b: &[LabelSet]) -> Result<KappaReport> {
    let per_label = (0..N_TOPICS)
        .map(|k| cohen_kappa(a, b, k))
        .collect::<Result<Vec<_>>>()?;
    let average = per_label.iter().sum::<f64>() / N_TOPICS as f64;
    Ok(KappaReport {
        per_label,
        average,
        n: a.len(),
    })
}

/// Table of kappa columns laid out like an inter-rater agreement table:
/// an `Avg K` row then one row per label.
pub fn format_kappa_table(columns: &[(String, KappaReport)]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<8}", "Label");
    for (name, _) in columns {
        let _ = write!(out, " {name:>18}");
    }
    out.push('\n');
    let _ = write!(out, "{:<8}", "Avg K");
    for (_, r) in columns {
        let _ = write!(out, " {:>18.2}", r.average);
    }
    out.push('\n');
    for t in Topic::ALL {
        let _ = write!(out, "{:<8}", t.code());
        for (_, r) in columns {
            let _ = write!(out, " {:>18.2}", r.per_label[t.index()]);
        }
        out.push('\n');
    }
    out
}

/// Shuffles the posts with `seed` and deals them round-robin into `k`
/// folds whose sizes differ by at most one.
pub fn kfold_split(post_ids: &[String], k: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    if k == 0 || post_ids.len() < k {
        return Err(Error::TooFew {
            needed: k.max(1),
            have: post_ids.len(),
        });
    }
    let mut ids: Vec<String> = post_ids.to_vec();
    ids.sort();
    ids.dedup();
    if ids.len() < k {
        return Err(Error::TooFew {
            needed: k,
            have: ids.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, id) in ids.into_iter().enumerate() {
        folds[i % k].push(id);
    }
    Ok(folds)
}

/// A gold-labeled sentence ready for training.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub sentence_id: String,
    pub post_id: String,
    pub tokens: Vec<String>,
    pub labels: LabelSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub label: String,
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricRow {
    fn new(label: String, counts: Counts) -> Self {
        let (precision, recall, f1) = counts.prf();
        MetricRow {
            label,
            counts,
            precision,
            recall,
            f1,
        }
    }
}

/// Per-label and micro-averaged metrics for one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub per_label: Vec<MetricRow>,
    pub micro: MetricRow,
    pub folds: usize,
    pub seed: u64,
    pub instances: usize,
}

pub fn label_name(index: usize) -> String {
    Topic::from_index(index).map_or_else(|| format!("L{index}"), |t| t.code().to_string())
}

impl EvalReport {
    pub fn from_predictions(
        system: &str,
        gold: &[LabelSet],
        pred: &[LabelSet],
        n_labels: usize,
        folds: usize,
        seed: u64,
    ) -> Result<Self> {
        let counts = label_counts(gold, pred, n_labels)?;
        Ok(Self::from_counts(system, &counts, folds, seed, gold.len()))
    }

    fn from_counts(
        system: &str,
        counts: &[Counts],
        folds: usize,
        seed: u64,
        instances: usize,
    ) -> Self {
        let mut total = Counts::default();
        for c in counts {
            total.add(*c);
        }
        EvalReport {
            system: system.to_string(),
            per_label: counts
                .iter()
                .enumerate()
                .map(|(k, c)| MetricRow::new(label_name(k), *c))
                .collect(),
            micro: MetricRow::new("Micro".into(), total),
            folds,
            seed,
            instances,
        }
    }
}

/// F scores (percent, one decimal) with one column per system.
pub fn format_report_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<8}", "");
    for r in reports {
        let _ = write!(out, " {:>10}", r.system);
    }
    out.push('\n');
    let _ = write!(out, "{:<8}", "Micro");
    for r in reports {
        let _ = write!(out, " {:>10.1}", r.micro.f1 * 100.0);
    }
    out.push('\n');
    let n_rows = reports.iter().map(|r| r.per_label.len()).max().unwrap_or(0);
    for k in 0..n_rows {
        let _ = write!(out, "{:<8}", label_name(k));
        for r in reports {
            match r.per_label.get(k) {
                Some(row) => {
                    let _ = write!(out, " {:>10.1}", row.f1 * 100.0);
                }
                None => {
                    let _ = write!(out, " {:>10}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Rows `Micro` then labels; columns `<system>_P,<system>_R,<system>_F`.
pub fn format_report_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("label");
    for r in reports {
        let _ = write!(out, ",{0}_P,{0}_R,{0}_F", r.system);
    }
    out.push('\n');
    let n_rows = reports.iter().map(|r| r.per_label.len()).max().unwrap_or(0);
    let rows = std::iter::once(None).chain((0..n_rows).map(Some));
    for row in rows {
        out.push_str(&row.map_or_else(|| "Micro".to_string(), label_name));
        for r in reports {
            let m = match row {
                None => Some(&r.micro),
                Some(k) => r.per_label.get(k),
            };
            match m {
                Some(m) => {
                    let _ = write!(
                        out,
                        ",{},{},{}",
                        dec9(m.precision),
                        dec9(m.recall),
                        dec9(m.f1)
                    );
                }
                None => out.push_str(",NA,NA,NA"),
            }
        }
        out.push('\n');
    }
    out
}

/// Result of a cross-validation run: the report plus the held-out
/// prediction for every sentence, in input order.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: EvalReport,
    pub predictions: Vec<LabelSet>,
    pub fold_of: Vec<usize>,
}

/// k-fold cross-validation at post level: each fold's posts are held out,
/// the system is trained on the remaining sentences, and decision counts
/// are pooled over all folds.
pub fn run_cv(
    kind: SystemKind,
    config: &SystemsConfig,
    context: &SystemContext,
    data: &[AnnotatedSentence],
    k: usize,
    seed: u64,
) -> Result<CvOutcome> {
    let mut post_ids: Vec<String> = data.iter().map(|s| s.post_id.clone()).collect();
    post_ids.sort();
    post_ids.dedup();
    let folds = kfold_split(&post_ids, k, seed)?;
    let fold_by_post: HashMap<&str, usize> = folds
        .iter()
        .enumerate()
        .flat_map(|(f, ids)| ids.iter().map(move |id| (id.as_str(), f)))
        .collect();
    let fold_of: Vec<usize> = data
        .iter()
        .map(|s| fold_by_post[s.post_id.as_str()])
        .collect();

    let mut predictions = vec![LabelSet::empty(); data.len()];
    for f in 0..k {
        let train: Vec<&AnnotatedSentence> = data
            .iter()
            .zip(&fold_of)
            .filter(|(_, &fo)| fo != f)
            .map(|(s, _)| s)
            .collect();
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] == f).collect();
        debug_assert!({
            let train_posts: HashSet<&str> = train.iter().map(|s| s.post_id.as_str()).collect();
            test_idx
                .iter()
                .all(|&i| !train_posts.contains(data[i].post_id.as_str()))
        });
        let system = TrainedSystem::train(kind, config, context, &train)?;
        for i in test_idx {
            predictions[i] = system.predict(&data[i].tokens)?;
        }
    }
    let gold: Vec<LabelSet> = data.iter().map(|s| s.labels).collect();
    let report =
        EvalReport::from_predictions(kind.name(), &gold, &predictions, config.n_labels, k, seed)?;
    Ok(CvOutcome {
        report,
        predictions,
        fold_of,
    })
}
