//! Post-level label aggregation and the corpus-wide analyses built on it:
//! topic prevalence, cancer-stage stratification, and per-author topic
//! trajectories over time.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{CancerStage, Corpus};
use crate::error::{Error, Result};
use crate::numfmt::dec9;
use crate::schema::{LabelSet, Topic, N_TOPICS};

/// A post carries a topic when strictly more than this share of its
/// sentences carry it.
pub const POST_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostLabels {
    pub post_id: String,
    pub labels: LabelSet,
    pub sentence_count: usize,
    /// Sentences carrying each topic, indexed by topic.
    pub label_counts: Vec<usize>,
}

/// Aggregates sentence labels into post labels. MISC on a sentence does
/// not count toward the threshold; the post gets MISC only when no other
/// topic qualifies.
pub fn aggregate_post_labels(post_id: &str, sentences: &[LabelSet]) -> Result<PostLabels> {
    if sentences.is_empty() {
        return Err(Error::InsufficientData(format!(
            "post {post_id} has no sentences"
        )));
    }
    let mut label_counts = vec![0; N_TOPICS];
    for set in sentences {
        for k in set.iter().filter(|&k| k < N_TOPICS) {
            label_counts[k] += 1;
        }
    }
    let n = sentences.len();
    let misc = Topic::Misc.index();
    // c / n > 1/10 without floating point
    let mut labels =
        LabelSet::from_indices((0..N_TOPICS).filter(|&k| k != misc && label_counts[k] * 10 > n));
    if labels.is_empty() {
        labels.insert(misc);
    }
    Ok(PostLabels {
        post_id: post_id.to_string(),
        labels,
        sentence_count: n,
        label_counts,
    })
}

/// Aggregates every post given sentence predictions keyed by sentence id.
/// Posts without any predicted sentence are skipped.
pub fn aggregate_corpus(
    corpus: &Corpus,
    sentence_labels: &HashMap<String, LabelSet>,
) -> Result<Vec<PostLabels>> {
    let mut out = Vec::new();
    for post in corpus.posts() {
        let sets: Vec<LabelSet> = corpus
            .sentences_of(&post.post_id)
            .iter()
            .filter_map(|s| sentence_labels.get(&s.sentence_id).copied())
            .collect();
        if !sets.is_empty() {
            out.push(aggregate_post_labels(&post.post_id, &sets)?);
        }
    }
    Ok(out)
}

/// Percentage of posts carrying each topic.
#[derive(Debug, Clone, PartialEq)]
pub struct Prevalence {
    pub n_posts: usize,
    pub percent: [f64; N_TOPICS],
}

fn percentages<'a>(labels: impl Iterator<Item = &'a LabelSet>) -> Prevalence {
    let mut counts = [0usize; N_TOPICS];
    let mut n_posts = 0;
    for set in labels {
        n_posts += 1;
        for k in set.iter().filter(|&k| k < N_TOPICS) {
            counts[k] += 1;
        }
    }
    let mut percent = [0.0; N_TOPICS];
    if n_posts > 0 {
        for k in 0..N_TOPICS {
            percent[k] = 100.0 * counts[k] as f64 / n_posts as f64;
        }
    }
    Prevalence { n_posts, percent }
}

pub fn prevalence(posts: &[PostLabels]) -> Prevalence {
    percentages(posts.iter().map(|p| &p.labels))
}

impl Prevalence {
    /// `topic,percent`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("topic,percent\n");
        for t in Topic::ALL {
            let _ = writeln!(out, "{},{}", t.code(), dec9(self.percent[t.index()]));
        }
        out
    }

    /// Topics by descending percentage with one decimal, ties by code.
    pub fn to_table(&self) -> String {
        let mut order: Vec<Topic> = Topic::ALL.to_vec();
        order.sort_by(|a, b| {
            self.percent[b.index()]
                .total_cmp(&self.percent[a.index()])
                .then(a.cmp(b))
        });
        let mut out = String::new();
        for t in order {
            let _ = writeln!(out, "{:<6}{:>6.1}", t.code(), self.percent[t.index()]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRow {
    pub stage: CancerStage,
    pub prevalence: Prevalence,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageTable {
    /// Only stages with at least one post, in stage order.
    pub rows: Vec<StageRow>,
    pub warnings: Vec<String>,
}

/// Prevalence per cancer stage of the post's author. Posts by authors
/// whose stage is unknown are left out.
pub fn stratify_by_stage(corpus: &Corpus, posts: &[PostLabels]) -> StageTable {
    let mut by_stage: BTreeMap<CancerStage, Vec<&LabelSet>> = BTreeMap::new();
    for p in posts {
        let stage = corpus
            .post(&p.post_id)
            .and_then(|post| corpus.author(&post.author_id))
            .map_or(CancerStage::Unknown, |a| a.stage);
        if stage.is_known() {
            by_stage.entry(stage).or_default().push(&p.labels);
        }
    }
    let rows: Vec<StageRow> = by_stage
        .into_iter()
        .map(|(stage, sets)| StageRow {
            stage,
            prevalence: percentages(sets.into_iter()),
        })
        .collect();
    let mut warnings = Vec::new();
    if rows.is_empty() {
        warnings.push(
            "no post has an author with a known cancer stage; stage table is empty".to_string(),
        );
    }
    StageTable { rows, warnings }
}

impl StageTable {
    /// `stage,topic,percent,n_posts`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,topic,percent,n_posts\n");
        for row in &self.rows {
            for t in Topic::ALL {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    row.stage.label(),
                    t.code(),
                    dec9(row.prevalence.percent[t.index()]),
                    row.prevalence.n_posts
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Post,
    Day,
    Week,
}

impl TimeUnit {
    pub const ALL: [TimeUnit; 3] = [TimeUnit::Post, TimeUnit::Day, TimeUnit::Week];

    pub fn name(self) -> &'static str {
        match self {
            TimeUnit::Post => "post",
            TimeUnit::Day => "day",
            TimeUnit::Week => "week",
        }
    }
}

impl FromStr for TimeUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "post" => Ok(TimeUnit::Post),
            "day" => Ok(TimeUnit::Day),
            "week" => Ok(TimeUnit::Week),
            other => Err(Error::Config(format!("unknown time unit {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBin {
    pub bin: usize,
    pub n_posts: usize,
    /// Share of the bin's posts carrying each topic; `None` for empty bins.
    pub frequency: Option<[f64; N_TOPICS]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySeries {
    pub unit: TimeUnit,
    pub bins: Vec<TrajectoryBin>,
}

/// Bins each author's posts by ordinal, whole days, or whole weeks since
/// the author's first activity, then pools posts across authors. Bins run
/// densely from 0 to the last occupied one.
pub fn trajectory(corpus: &Corpus, posts: &[PostLabels], unit: TimeUnit) -> TrajectorySeries {
    let labels: HashMap<&str, LabelSet> = posts
        .iter()
        .map(|p| (p.post_id.as_str(), p.labels))
        .collect();
    let mut by_author: BTreeMap<&str, Vec<&crate::corpus::Post>> = BTreeMap::new();
    for post in corpus.posts() {
        if labels.contains_key(post.post_id.as_str()) {
            by_author
                .entry(post.author_id.as_str())
                .or_default()
                .push(post);
        }
    }
    let mut counts: BTreeMap<usize, (usize, [usize; N_TOPICS])> = BTreeMap::new();
    for (author, mut author_posts) in by_author {
        author_posts.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then_with(|| a.post_id.cmp(&b.post_id))
        });
        let first = corpus
            .author(author)
            .map_or(author_posts[0].created_at, |a| a.first_activity);
        for (ordinal, post) in author_posts.iter().enumerate() {
            let days = (post.created_at - first).num_seconds().max(0) as usize / 86_400;
            let bin = match unit {
                TimeUnit::Post => ordinal,
                TimeUnit::Day => days,
                TimeUnit::Week => days / 7,
            };
            let entry = counts.entry(bin).or_insert((0, [0; N_TOPICS]));
            entry.0 += 1;
            for k in labels[post.post_id.as_str()]
                .iter()
                .filter(|&k| k < N_TOPICS)
            {
                entry.1[k] += 1;
            }
        }
    }
    let last = counts.keys().next_back().map_or(0, |&b| b + 1);
    let bins = (0..last)
        .map(|bin| match counts.get(&bin) {
            Some(&(n, c)) => TrajectoryBin {
                bin,
                n_posts: n,
                frequency: Some(std::array::from_fn(|k| c[k] as f64 / n as f64)),
            },
            None => TrajectoryBin {
                bin,
                n_posts: 0,
                frequency: None,
            },
        })
        .collect();
    TrajectorySeries { unit, bins }
}

impl TrajectorySeries {
    /// Long format: `bin,topic,frequency,n_posts`, `NA` for empty bins.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,topic,frequency,n_posts\n");
        for b in &self.bins {
            for t in Topic::ALL {
                let f = b.frequency.map_or(f64::NAN, |f| f[t.index()]);
                let _ = writeln!(out, "{},{},{},{}", b.bin, t.code(), dec9(f), b.n_posts);
            }
        }
        out
    }

    /// One row per bin with a column per topic.
    pub fn to_wide_csv(&self) -> String {
        let mut out = String::from("bin,n_posts");
        for t in Topic::ALL {
            let _ = write!(out, ",{}", t.code());
        }
        out.push('\n');
        for b in &self.bins {
            let _ = write!(out, "{},{}", b.bin, b.n_posts);
            for t in Topic::ALL {
                let _ = write!(
                    out,
                    ",{}",
                    dec9(b.frequency.map_or(f64::NAN, |f| f[t.index()]))
                );
            }
            out.push('\n');
        }
        out
    }
}
